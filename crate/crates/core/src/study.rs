//! The resolution study: per-case reconstruction Dice for a set of spacing
//! strategies, summary statistics, pairwise paired t-tests and report output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metaimage::read_mask;
use crate::metrics::rdsc;
use crate::resample::{InterpMode, ResolutionStrategy};
use crate::stats::{self, paired_t_test, TTest};
use crate::volume::Mask3;
use crate::with_workers;

pub const CONVENTIONS: [&str; 5] = [
    "voxel centers: world = origin + index * spacing, identity orientation",
    "resampled grids keep the source origin; dims = ceil(extent / target spacing)",
    "trilinear sampling clamps up to one voxel beyond the grid, background beyond",
    "nearest neighbor ties resolve to the lower index; thresholds use >=",
    "quartiles interpolate linearly between order statistics at (n - 1) q",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub dataset_dir: PathBuf,
    pub strategies: Vec<ResolutionStrategy>,
    pub mask_mode: InterpMode,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            dataset_dir: PathBuf::new(),
            strategies: ResolutionStrategy::study_set(),
            mask_mode: InterpMode::default(),
            workers: None,
        }
    }
}

fn check_strategies(strategies: &[ResolutionStrategy]) -> Result<()> {
    if strategies.len() < 2 {
        return Err(Error::Config(format!(
            "pairwise testing needs at least 2 strategies, got {}",
            strategies.len()
        )));
    }
    let labels: Vec<String> = strategies.iter().map(|s| s.to_string()).collect();
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::Config(format!("strategy {l} listed twice")));
        }
    }
    Ok(())
}

/// Segmentation files of a dataset directory, sorted by name.
///
/// When any `*_segmentation.mhd` file exists only those are used, so image
/// volumes stored alongside their masks are skipped.
pub fn dataset_files(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_mhd = path
            .extension()
            .is_some_and(|x| x.eq_ignore_ascii_case("mhd"));
        if is_mhd && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    let stem = |p: &PathBuf| p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
    let segs: Vec<PathBuf> = files
        .iter()
        .filter(|p| stem(p).ends_with("_segmentation"))
        .cloned()
        .collect();
    let chosen = if segs.is_empty() { files } else { segs };
    Ok(chosen
        .into_iter()
        .map(|p| {
            let s = stem(&p);
            let id = s.strip_suffix("_segmentation").unwrap_or(&s).to_string();
            (id, p)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRow {
    pub id: String,
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub foreground: usize,
    /// One value per strategy, in report order.
    pub rdsc: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedCase {
    pub id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: String,
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub mask_mode: InterpMode,
    pub conventions: Vec<String>,
    pub tool_version: String,
    pub statistical_test: String,
    pub excluded: Vec<ExcludedCase>,
    /// Cases whose mask has no foreground; their rDSC is 1 by convention.
    pub empty_cases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub strategies: Vec<ResolutionStrategy>,
    pub cases: Vec<CaseRow>,
    pub summary: Vec<StrategySummary>,
    /// `pairwise[i][j]` tests strategy `i` minus strategy `j`.
    pub pairwise: Vec<Vec<TTest>>,
    pub provenance: Provenance,
}

impl StudyReport {
    pub fn labels(&self) -> Vec<String> {
        self.strategies.iter().map(|s| s.to_string()).collect()
    }

    pub fn column(&self, strategy: usize) -> Vec<f64> {
        self.cases.iter().map(|c| c.rdsc[strategy]).collect()
    }

    pub fn strategy_index(&self, s: ResolutionStrategy) -> Option<usize> {
        self.strategies.iter().position(|&x| x == s)
    }

    /// Pairwise p-values as an aligned text table.
    pub fn p_value_table(&self) -> String {
        let labels = self.labels();
        let w = labels.iter().map(|l| l.len()).max().unwrap_or(0).max(8);
        let mut out = format!("{:w$}", "p-value");
        for l in &labels {
            let _ = write!(out, "  {l:>w$}");
        }
        out.push('\n');
        for (i, l) in labels.iter().enumerate() {
            let _ = write!(out, "{l:w$}");
            for j in 0..labels.len() {
                if i == j {
                    let _ = write!(out, "  {:>w$}", "-");
                } else {
                    let _ = write!(out, "  {:>w$.3e}", self.pairwise[i][j].p);
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Runs the study over every segmentation in `cfg.dataset_dir`.
///
/// Unreadable cases are recorded in the provenance and skipped.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    check_strategies(&cfg.strategies)?;
    cfg.mask_mode.ensure_mask_mode()?;
    let files = dataset_files(&cfg.dataset_dir)?;
    with_workers(cfg.workers, || {
        let loaded: Vec<(String, Result<Mask3>)> = files
            .par_iter()
            .map(|(id, path)| (id.clone(), read_mask(path)))
            .collect();
        let mut cases = Vec::new();
        let mut excluded = Vec::new();
        for (id, r) in loaded {
            match r {
                Ok(m) => cases.push((id, m)),
                Err(e) => excluded.push(ExcludedCase {
                    id,
                    error: e.to_string(),
                }),
            }
        }
        study_cases(&cases, &cfg.strategies, cfg.mask_mode, excluded)
    })?
}

/// Runs the study on in-memory masks.
pub fn run_study_on_cases(
    cases: &[(String, Mask3)],
    strategies: &[ResolutionStrategy],
    mode: InterpMode,
    workers: Option<usize>,
) -> Result<StudyReport> {
    check_strategies(strategies)?;
    mode.ensure_mask_mode()?;
    with_workers(workers, || study_cases(cases, strategies, mode, Vec::new()))?
}

fn study_cases(
    cases: &[(String, Mask3)],
    strategies: &[ResolutionStrategy],
    mode: InterpMode,
    mut excluded: Vec<ExcludedCase>,
) -> Result<StudyReport> {
    let results: Vec<(String, Result<CaseRow>)> = cases
        .par_iter()
        .map(|(id, m)| {
            let row = strategies
                .iter()
                .map(|&s| rdsc(m, s, mode))
                .collect::<Result<Vec<f64>>>()
                .map(|rdsc| CaseRow {
                    id: id.clone(),
                    dims: m.dims(),
                    spacing: m.spacing().as_array(),
                    foreground: m.count(),
                    rdsc,
                });
            (id.clone(), row)
        })
        .collect();
    let mut rows = Vec::new();
    for (id, r) in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => excluded.push(ExcludedCase {
                id,
                error: e.to_string(),
            }),
        }
    }
    rows.sort_by(|a, b| a.id.cmp(&b.id));
    excluded.sort_by(|a, b| a.id.cmp(&b.id));
    if rows.len() < 2 {
        return Err(Error::SampleSize(format!(
            "the study needs at least 2 readable cases, got {} ({} excluded)",
            rows.len(),
            excluded.len()
        )));
    }

    let columns: Vec<Vec<f64>> = (0..strategies.len())
        .map(|s| rows.iter().map(|r| r.rdsc[s]).collect())
        .collect();
    let summary = strategies
        .iter()
        .zip(&columns)
        .map(|(s, col)| {
            let sorted = stats::sorted(col);
            StrategySummary {
                strategy: s.to_string(),
                mean: stats::mean(col),
                sd: stats::sample_sd(col),
                median: stats::quantile_sorted(&sorted, 0.5),
                q1: stats::quantile_sorted(&sorted, 0.25),
                q3: stats::quantile_sorted(&sorted, 0.75),
                min: sorted[0],
                max: sorted[sorted.len() - 1],
            }
        })
        .collect();

    let n = strategies.len();
    let mut pairwise = vec![vec![paired_t_test(&columns[0], &columns[0])?; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let r = paired_t_test(&columns[i], &columns[j])?;
            pairwise[i][j] = r;
            pairwise[j][i] = TTest { t: -r.t, ..r };
        }
    }

    let empty_cases = rows
        .iter()
        .filter(|r| r.foreground == 0)
        .map(|r| r.id.clone())
        .collect();
    Ok(StudyReport {
        strategies: strategies.to_vec(),
        cases: rows,
        summary,
        pairwise,
        provenance: Provenance {
            mask_mode: mode,
            conventions: CONVENTIONS.iter().map(|s| s.to_string()).collect(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            statistical_test: "two-sided paired Student t-test on per-case rDSC".into(),
            excluded,
            empty_cases,
        },
    })
}

/// One header row plus one row per case; values with 6 decimals.
pub fn report_csv(r: &StudyReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let ser = |e: csv::Error| Error::Serialize(e.to_string());
    let mut header = vec!["case".to_string()];
    header.extend(r.labels());
    w.write_record(&header).map_err(ser)?;
    for c in &r.cases {
        let mut rec = vec![c.id.clone()];
        rec.extend(c.rdsc.iter().map(|v| format!("{v:.6}")));
        w.write_record(&rec).map_err(ser)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))
}

pub fn report_json(r: &StudyReport) -> Result<String> {
    serde_json::to_string_pretty(r).map_err(|e| Error::Serialize(e.to_string()))
}

pub fn read_report_json(path: &Path) -> Result<StudyReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

pub fn emit_report(r: &StudyReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => report_csv(r)?,
        ReportFormat::Json => report_json(r)?,
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Tukey box: quartiles, whiskers at the most extreme values within
/// 1.5 IQR of the box, and the points beyond them.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: Vec<f64>,
}

pub fn box_stats(values: &[f64]) -> BoxStats {
    let s = stats::sorted(values);
    let q1 = stats::quantile_sorted(&s, 0.25);
    let q3 = stats::quantile_sorted(&s, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let inside = |x: &&f64| **x >= lo_fence && **x <= hi_fence;
    BoxStats {
        q1,
        median: stats::quantile_sorted(&s, 0.5),
        q3,
        whisker_lo: s.iter().find(inside).copied().unwrap_or(q1),
        whisker_hi: s.iter().rev().find(inside).copied().unwrap_or(q3),
        outliers: s.iter().filter(|x| !inside(x)).copied().collect(),
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Box plot of the rDSC distribution of every strategy on a fixed `[0, 1]` axis.
pub fn boxplot_svg(r: &StudyReport) -> Result<String> {
    if r.strategies.is_empty() {
        return Err(Error::Config("box plot needs at least one strategy".into()));
    }
    const LEFT: f64 = 70.0;
    const TOP: f64 = 30.0;
    const PLOT_H: f64 = 360.0;
    const SLOT: f64 = 120.0;
    let n = r.strategies.len();
    let width = LEFT + SLOT * n as f64 + 20.0;
    let height = TOP + PLOT_H + 60.0;
    let y = |v: f64| TOP + PLOT_H * (1.0 - v.clamp(0.0, 1.0));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<g class="axis">"#);
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/>"#,
        TOP + PLOT_H
    );
    for t in 0..=5 {
        let v = t as f64 / 5.0;
        let yy = y(v);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{yy}" x2="{LEFT}" y2="{yy}" stroke="black"/><text x="{}" y="{}" text-anchor="end">{v:.1}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            yy + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text transform="translate(18 {}) rotate(-90)" text-anchor="middle">rDSC</text>"#,
        TOP + PLOT_H / 2.0
    );
    let _ = writeln!(s, "</g>");

    for (i, label) in r.labels().iter().enumerate() {
        let b = box_stats(&r.column(i));
        let cx = LEFT + SLOT * (i as f64 + 0.5);
        let (x0, x1) = (cx - 30.0, cx + 30.0);
        let label = xml_escape(label);
        let _ = writeln!(
            s,
            r#"<g class="box" data-strategy="{label}" data-q1="{}" data-median="{}" data-q3="{}" data-whisker-lo="{}" data-whisker-hi="{}">"#,
            b.q1, b.median, b.q3, b.whisker_lo, b.whisker_hi
        );
        let _ = writeln!(
            s,
            r##"<line class="whisker" x1="{cx}" y1="{}" x2="{cx}" y2="{}" stroke="black"/><line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"##,
            y(b.whisker_lo),
            y(b.whisker_hi),
            cx - 15.0,
            y(b.whisker_lo),
            cx + 15.0,
            y(b.whisker_lo),
            cx - 15.0,
            y(b.whisker_hi),
            cx + 15.0,
            y(b.whisker_hi)
        );
        let _ = writeln!(
            s,
            r##"<rect class="iqr" x="{x0}" y="{}" width="{}" height="{}" fill="#9ecae1" stroke="black"/>"##,
            y(b.q3),
            x1 - x0,
            y(b.q1) - y(b.q3)
        );
        let _ = writeln!(
            s,
            r#"<line class="median" x1="{x0}" y1="{0}" x2="{x1}" y2="{0}" stroke="black" stroke-width="2"/>"#,
            y(b.median)
        );
        for o in &b.outliers {
            let _ = writeln!(
                s,
                r#"<circle class="outlier" cx="{cx}" cy="{}" r="3" fill="none" stroke="black"/>"#,
                y(*o)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{cx}" y="{}" text-anchor="middle">{label}</text>"#,
            TOP + PLOT_H + 20.0
        );
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_boxplot_svg(r: &StudyReport, path: &Path) -> Result<()> {
    let svg = boxplot_svg(r)?;
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}
