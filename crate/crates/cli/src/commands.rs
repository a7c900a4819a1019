use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rdsc_core::augment::{augment_sample, AugmentConfig, SeededRng};
use rdsc_core::clahe::{histogram_entropy, mclahe as run_mclahe};
use rdsc_core::metaimage::{read_mask, read_metaimage, read_metaimage_with_header, write_metaimage, ElementType};
use rdsc_core::metrics::{confusion, TverskyParams};
use rdsc_core::phantom::{phantom_image, study_dataset, DatasetSpec};
use rdsc_core::resample::{
    resample_to_spacing, strategy_target_spacing, InterpMode, ResolutionStrategy, PROPOSED_SPACING,
};
use rdsc_core::sliding::{predict_volume, window_offsets, PredictorSpec};
use rdsc_core::study::{emit_boxplot_svg, emit_report, run_study, ReportFormat, StudyConfig};
use rdsc_core::Error;
use serde_json::json;

use crate::{AugmentArgs, Context, MclaheArgs, MetricsArgs, PhantomArgs, PredictArgs, ResampleArgs, StudyArgs};

type Result<T> = std::result::Result<T, Error>;

fn required<T>(flag: Option<T>, config: Option<T>, name: &str) -> Result<T> {
    flag.or(config)
        .ok_or_else(|| Error::Config(format!("missing required {name} (flag or config entry)")))
}

fn parse_flag<T: FromStr<Err = Error>>(s: Option<&str>) -> Result<Option<T>> {
    s.map(str::parse).transpose()
}

fn triple<T: FromStr>(s: &str, name: &str) -> Result<[T; 3]> {
    let parts: Vec<T> = s
        .split([',', 'x'])
        .map(|p| p.trim().parse::<T>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Config(format!("--{name}: cannot parse `{s}`")))?;
    <[T; 3]>::try_from(parts).map_err(|_| Error::Config(format!("--{name}: expected 3 values, got `{s}`")))
}

fn triple_flag<T: FromStr>(s: Option<&str>, name: &str) -> Result<Option<[T; 3]>> {
    s.map(|s| triple(s, name)).transpose()
}

fn json_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn resample(ctx: &Context, a: &ResampleArgs) -> Result<()> {
    let c = &ctx.config.resample;
    let input = required(a.input.clone(), c.input.clone(), "--in")?;
    let output = required(a.output.clone(), c.output.clone(), "--out")?;
    let strategy = parse_flag::<ResolutionStrategy>(a.spacing.as_deref())?
        .or(c.spacing)
        .map_or_else(|| ResolutionStrategy::fixed(PROPOSED_SPACING), Ok)?;
    let mode = parse_flag::<InterpMode>(a.mode.as_deref())?
        .or(c.mode)
        .unwrap_or(InterpMode::Trilinear);

    let (v, header) = read_metaimage_with_header(&input)?;
    let target = strategy_target_spacing(strategy, v.spacing());
    let out = resample_to_spacing(&v, target, mode)?;
    let element_type = if mode == InterpMode::Trilinear
        && header.element_type.is_integer()
        && out.geometry() != v.geometry()
    {
        ElementType::Float
    } else {
        header.element_type
    };
    write_metaimage(&out, &output, element_type)?;
    let [x, y, z] = out.dims();
    println!("{x} {y} {z}");
    Ok(())
}

pub fn study(ctx: &Context, a: &StudyArgs) -> Result<()> {
    let c = &ctx.config.study;
    let data = required(a.data.clone(), c.data.clone(), "--data")?;
    let strategies = if a.strategies.is_empty() {
        c.strategies.clone().unwrap_or_else(ResolutionStrategy::study_set)
    } else {
        a.strategies.iter().map(|s| s.parse()).collect::<Result<_>>()?
    };
    let mode = parse_flag::<InterpMode>(a.mode.as_deref())?
        .or(c.mode)
        .unwrap_or_default();
    let json_out = a.json.clone().or(c.json.clone());
    let csv_out = a.csv.clone().or(c.csv.clone());
    let svg_out = a.svg.clone().or(c.svg.clone());

    let report = run_study(&StudyConfig {
        dataset_dir: data,
        strategies,
        mask_mode: mode,
        workers: None,
    })?;

    for ex in &report.provenance.excluded {
        eprintln!("excluded {}: {}", ex.id, ex.error);
    }
    println!("{} cases, mask mode {}", report.cases.len(), report.provenance.mask_mode);
    println!("{:<20} {:>9} {:>9} {:>9}", "strategy", "mean", "sd", "median");
    for s in &report.summary {
        println!("{:<20} {:>9.6} {:>9.6} {:>9.6}", s.strategy, s.mean, s.sd, s.median);
    }
    println!();
    print!("{}", report.p_value_table());

    if let Some(p) = json_out {
        emit_report(&report, ReportFormat::Json, &p)?;
    }
    if let Some(p) = csv_out {
        emit_report(&report, ReportFormat::Csv, &p)?;
    }
    if let Some(p) = svg_out {
        emit_boxplot_svg(&report, &p)?;
    }
    Ok(())
}

pub fn metrics(ctx: &Context, a: &MetricsArgs) -> Result<()> {
    let c = &ctx.config.metrics;
    let pa = required(a.a.clone(), c.a.clone(), "--a")?;
    let pb = required(a.b.clone(), c.b.clone(), "--b")?;
    let [alpha, beta] = match a.tversky.as_deref() {
        Some(s) => {
            let v: Vec<f64> = s
                .split(',')
                .map(|x| x.trim().parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Config(format!("--tversky: cannot parse `{s}`")))?;
            <[f64; 2]>::try_from(v).map_err(|_| Error::Config("--tversky expects alpha,beta".into()))?
        }
        None => c.tversky.unwrap_or([0.5, 0.5]),
    };
    let params = TverskyParams::new(alpha, beta)?;
    let ma = read_mask(&pa)?;
    let mb = read_mask(&pb)?;
    let counts = confusion(&ma, &mb)?;
    let out = json!({
        "dice": counts.dice(),
        "tversky": counts.tversky(params),
        "alpha": alpha,
        "beta": beta,
        "confusion": counts,
    });
    println!("{}", serde_json::to_string_pretty(&out).map_err(|e| Error::Serialize(e.to_string()))?);
    Ok(())
}

pub fn mclahe(ctx: &Context, a: &MclaheArgs) -> Result<()> {
    let c = &ctx.config.mclahe;
    let input = required(a.input.clone(), c.input.clone(), "--in")?;
    let output = required(a.output.clone(), c.output.clone(), "--out")?;
    let mut params = c.params.unwrap_or_default();
    if let Some(t) = triple_flag(a.tiles.as_deref(), "tiles")? {
        params.tiles = t;
    }
    if let Some(b) = a.bins {
        params.bins = b;
    }
    if let Some(clip) = a.clip {
        params.clip_limit = clip;
    }
    params.validate()?;

    let v = read_metaimage(&input)?;
    let out = run_mclahe(&v, &params)?;
    write_metaimage(&out, &output, ElementType::Float)?;

    // both entropies over one range spanning the input and [0, 1]
    let (lo, hi) = v.min_max();
    let range = (lo.min(0.0), hi.max(1.0));
    let before = histogram_entropy(&v, range, params.bins);
    let after = histogram_entropy(&out, range, params.bins);
    println!("entropy before {before:.6} bits");
    println!("entropy after  {after:.6} bits");
    Ok(())
}

fn augment_params(ctx: &Context, a: &AugmentArgs) -> Result<AugmentConfig> {
    let mut cfg: AugmentConfig = ctx.config.augment.params.clone().unwrap_or_default();
    if let Some(p) = triple_flag(a.patch.as_deref(), "patch")? {
        cfg.patch_dims = p;
    }
    if let Some(p) = a.probability {
        cfg.probability = p;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn augment(ctx: &Context, a: &AugmentArgs) -> Result<()> {
    let c = &ctx.config.augment;
    let image = required(a.image.clone(), c.image.clone(), "--image")?;
    let mask = required(a.mask.clone(), c.mask.clone(), "--mask")?;
    let out_dir = required(a.out_dir.clone(), c.out_dir.clone(), "--out-dir")?;
    let cfg = augment_params(ctx, a)?;
    let seed = ctx.seed();

    let v = read_metaimage(&image)?;
    let m = read_mask(&mask)?;
    let (pv, pm) = augment_sample(&v, &m, &cfg, &SeededRng::new(seed))?;
    create_dir(&out_dir)?;
    write_metaimage(&pv, out_dir.join("image_patch.mhd"), ElementType::Float)?;
    write_metaimage(&pm, out_dir.join("mask_patch.mhd"), ElementType::UChar)?;
    let [x, y, z] = pv.dims();
    println!("patch {x} {y} {z}, {} foreground voxels", pm.count());
    Ok(())
}

pub fn predict(ctx: &Context, a: &PredictArgs) -> Result<()> {
    let c = &ctx.config.predict;
    let input = required(a.input.clone(), c.input.clone(), "--in")?;
    let output = required(a.output.clone(), c.output.clone(), "--out")?;
    let predictor = parse_flag::<PredictorSpec>(a.predictor.as_deref())?
        .or(c.predictor)
        .unwrap_or(PredictorSpec::Echo);
    let mut spec = c.window.unwrap_or_default();
    if let Some(w) = triple_flag(a.window.as_deref(), "window")? {
        spec.window = w;
    }
    if let Some(s) = triple_flag(a.stride.as_deref(), "stride")? {
        spec.stride = s;
    }
    spec.validate()?;
    let binarize = a.binarize.or(c.binarize);
    if let Some(t) = binarize {
        if !t.is_finite() {
            return Err(Error::Config(format!("--binarize {t} must be finite")));
        }
    }

    let v = read_metaimage(&input)?;
    let pred = predictor.build(&v);
    let map = predict_volume(&v, pred.as_ref(), &spec)?;
    match binarize {
        Some(t) => write_metaimage(&map.binarize(t), &output, ElementType::UChar)?,
        None => write_metaimage(&map, &output, ElementType::Float)?,
    }
    let dims = v.dims();
    let padded: [usize; 3] = std::array::from_fn(|i| dims[i].max(spec.window[i]));
    let windows = window_offsets(padded, &spec)?.len();
    write_json(
        &json_path(&output),
        &json!({
            "input": input,
            "predictor": predictor.to_string(),
            "window": spec.window,
            "stride": spec.stride,
            "windows": windows,
            "aggregation": "mean",
            "binarize": binarize,
        }),
    )?;
    let [sx, sy, sz] = spec.stride;
    println!("stride {sx} {sy} {sz}, {windows} windows");
    Ok(())
}

pub fn phantom(ctx: &Context, a: &PhantomArgs) -> Result<()> {
    let c = &ctx.config.phantom;
    let out_dir = required(a.out_dir.clone(), c.out_dir.clone(), "--out-dir")?;
    let defaults = DatasetSpec::default();
    let spec = DatasetSpec {
        cases: a.cases.or(c.cases).unwrap_or(defaults.cases),
        dims: triple_flag(a.dims.as_deref(), "dims")?
            .or(c.dims)
            .unwrap_or(defaults.dims),
        uniform_spacing: a.uniform_spacing || c.uniform_spacing.unwrap_or(false),
        seed: ctx.seed(),
        ..defaults
    };
    if spec.cases == 0 || spec.dims.contains(&0) {
        return Err(Error::Config("cases and dims must be positive".into()));
    }
    let images = a.images || c.images.unwrap_or(false);
    create_dir(&out_dir)?;
    let root = SeededRng::new(spec.seed);
    for (i, case) in study_dataset(&spec).iter().enumerate() {
        write_metaimage(
            &case.mask,
            out_dir.join(format!("{}_segmentation.mhd", case.id)),
            ElementType::UChar,
        )?;
        if images {
            let img = phantom_image(&case.mask, root.split(i as u64).seed())?;
            write_metaimage(&img, out_dir.join(format!("{}.mhd", case.id)), ElementType::Float)?;
        }
    }
    println!("{} cases written to {}", spec.cases, out_dir.display());
    Ok(())
}
