//! Interpolation, spacing-targeted resampling and round-trip reconstruction.
//!
//! Conventions, which reconstruction scores depend on:
//!
//! * voxel centers sit at `origin + index * spacing`;
//! * resampling keeps the origin, so the first voxel center never moves;
//! * a point sample more than half a voxel outside the grid on any axis is
//!   background (0); inside that border coordinates are clamped to the edge;
//! * grid-to-grid resampling clamps up to one full voxel outside the grid, which
//!   covers the sub-voxel padding that `ceil` sizing adds at the far edge;
//! * nearest-neighbor ties at exactly half a voxel go to the lower index;
//! * the output grid has `ceil(n * s_in / s_out)` voxels per axis.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Geometry, Mask3, Spacing3, Volume3};

/// Median spacing of the reference training set.
pub const MEDIAN_SPACING: [f64; 3] = [0.625, 0.625, 3.6];
/// Spacing used by most published pipelines on the same data.
pub const COMMON_SPACING: [f64; 3] = [0.625, 0.625, 1.5];
/// Finer in-plane spacing that keeps through-plane resolution at 1.5 mm.
pub const PROPOSED_SPACING: [f64; 3] = [0.3125, 0.3125, 1.5];

/// Fractional coordinates this close to an integer are treated as that integer.
const SNAP_EPS: f64 = 1e-9;
/// Clamped border, in voxels, for point sampling.
const POINT_BORDER: f64 = 0.5;
/// Clamped border, in voxels, for grid-to-grid resampling.
const GRID_BORDER: f64 = 1.0;

/// How values are read between voxel centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InterpMode {
    NearestNeighbor,
    Trilinear,
    /// Trilinear interpolation followed by `value >= threshold`.
    TrilinearThenThreshold(f64),
}

impl InterpMode {
    pub const DEFAULT_THRESHOLD: f64 = 0.5;

    pub fn threshold() -> Self {
        InterpMode::TrilinearThenThreshold(Self::DEFAULT_THRESHOLD)
    }

    fn validate(self) -> Result<Self> {
        if let InterpMode::TrilinearThenThreshold(t) = self {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidMode(format!(
                    "threshold {t} must lie strictly between 0 and 1"
                )));
            }
        }
        Ok(self)
    }

    /// Modes that keep a mask binary.
    pub fn ensure_mask_mode(self) -> Result<Self> {
        match self.validate()? {
            InterpMode::Trilinear => Err(Error::InvalidMode(
                "plain trilinear interpolation does not keep masks binary; use `nearest` or `threshold`"
                    .into(),
            )),
            m => Ok(m),
        }
    }
}

impl Default for InterpMode {
    fn default() -> Self {
        InterpMode::threshold()
    }
}

impl fmt::Display for InterpMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterpMode::NearestNeighbor => f.write_str("nearest"),
            InterpMode::Trilinear => f.write_str("trilinear"),
            InterpMode::TrilinearThenThreshold(t) => write!(f, "threshold:{t}"),
        }
    }
}

impl FromStr for InterpMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let mode = match s.as_str() {
            "nearest" | "nearest-neighbor" | "nn" => InterpMode::NearestNeighbor,
            "trilinear" | "linear" => InterpMode::Trilinear,
            "threshold" => InterpMode::threshold(),
            other => match other.strip_prefix("threshold:") {
                Some(t) => InterpMode::TrilinearThenThreshold(
                    t.parse()
                        .map_err(|_| Error::InvalidMode(format!("bad threshold `{t}`")))?,
                ),
                None => {
                    return Err(Error::InvalidMode(format!(
                        "unknown interpolation mode `{other}` (expected nearest, trilinear or threshold[:t])"
                    )))
                }
            },
        };
        mode.validate()
    }
}

impl TryFrom<String> for InterpMode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<InterpMode> for String {
    fn from(m: InterpMode) -> Self {
        m.to_string()
    }
}

/// Rule that picks the target spacing for a case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ResolutionStrategy {
    /// Half the resolution, i.e. twice the spacing.
    HalfResolution,
    /// Twice the resolution, i.e. half the spacing.
    TwiceResolution,
    FixedSpacing(Spacing3),
}

impl ResolutionStrategy {
    /// The five strategies compared by the resolution study, in report order.
    pub fn study_set() -> Vec<ResolutionStrategy> {
        vec![
            ResolutionStrategy::HalfResolution,
            ResolutionStrategy::TwiceResolution,
            ResolutionStrategy::FixedSpacing(Spacing3::try_from(MEDIAN_SPACING).unwrap()),
            ResolutionStrategy::FixedSpacing(Spacing3::try_from(COMMON_SPACING).unwrap()),
            ResolutionStrategy::FixedSpacing(Spacing3::try_from(PROPOSED_SPACING).unwrap()),
        ]
    }

    pub fn fixed(s: [f64; 3]) -> Result<Self> {
        Ok(ResolutionStrategy::FixedSpacing(Spacing3::try_from(s)?))
    }
}

impl fmt::Display for ResolutionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResolutionStrategy::HalfResolution => f.write_str("half"),
            ResolutionStrategy::TwiceResolution => f.write_str("twice"),
            ResolutionStrategy::FixedSpacing(s) => write!(f, "{s}"),
        }
    }
}

impl FromStr for ResolutionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        match t.as_str() {
            "half" => Ok(ResolutionStrategy::HalfResolution),
            "twice" | "double" => Ok(ResolutionStrategy::TwiceResolution),
            "median" => ResolutionStrategy::fixed(MEDIAN_SPACING),
            "common" | "standard" => ResolutionStrategy::fixed(COMMON_SPACING),
            "proposed" => ResolutionStrategy::fixed(PROPOSED_SPACING),
            _ => {
                let parts: Vec<&str> = t.split(['x', ',']).map(str::trim).collect();
                let vals: Vec<f64> = parts
                    .iter()
                    .map(|p| p.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Config(format!("unknown resolution strategy `{s}`")))?;
                let arr = <[f64; 3]>::try_from(vals.as_slice()).map_err(|_| {
                    Error::Config(format!("fixed spacing `{s}` needs three components"))
                })?;
                ResolutionStrategy::fixed(arr)
            }
        }
    }
}

impl TryFrom<String> for ResolutionStrategy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ResolutionStrategy> for String {
    fn from(s: ResolutionStrategy) -> Self {
        s.to_string()
    }
}

pub fn strategy_target_spacing(strategy: ResolutionStrategy, case_spacing: Spacing3) -> Spacing3 {
    match strategy {
        ResolutionStrategy::HalfResolution => case_spacing.scaled(2.0),
        ResolutionStrategy::TwiceResolution => case_spacing.scaled(0.5),
        ResolutionStrategy::FixedSpacing(s) => s,
    }
}

/// Grid size after resampling: `ceil(n * s_in / s_out)` per axis, at least 1.
pub fn output_dims(in_dims: [usize; 3], in_spacing: Spacing3, out_spacing: Spacing3) -> [usize; 3] {
    let si = in_spacing.as_array();
    let so = out_spacing.as_array();
    std::array::from_fn(|a| {
        let extent = in_dims[a] as f64 * si[a] / so[a];
        let nearest = extent.round();
        // 32 * 3.6 / 1.8 must give 64, not 65, despite rounding noise.
        let n = if (extent - nearest).abs() <= 1e-9 * extent.max(1.0) {
            nearest
        } else {
            extent.ceil()
        };
        (n as usize).max(1)
    })
}

/// Where one output coordinate lands on one source axis.
#[derive(Debug, Clone, Copy)]
struct AxisHit {
    lo: usize,
    hi: usize,
    /// Weight of `hi`; `lo` gets `1 - w`.
    w: f64,
    nearest: usize,
}

#[inline]
fn axis_hit(f: f64, n: usize, border: f64) -> Option<AxisHit> {
    let last = (n - 1) as f64;
    if !(f >= -border && f <= last + border) {
        return None;
    }
    let snapped = f.round();
    let f = if (f - snapped).abs() < SNAP_EPS { snapped } else { f };
    let c = f.clamp(0.0, last);
    let lo = (c.floor() as usize).min(n.saturating_sub(2));
    let hi = (lo + 1).min(n - 1);
    let w = if hi == lo { 0.0 } else { c - lo as f64 };
    // ties round toward the lower index
    let nearest = ((f - 0.5).ceil().clamp(0.0, last)) as usize;
    Some(AxisHit { lo, hi, w, nearest })
}

#[inline]
fn interpolate<T: Copy + Into<f64>>(
    src: &[T],
    dims: [usize; 3],
    hx: &AxisHit,
    hy: &AxisHit,
    hz: &AxisHit,
    linear: bool,
) -> f64 {
    let nx = dims[0];
    let nxy = nx * dims[1];
    let at = |i: usize, j: usize, k: usize| -> f64 { src[i + nx * j + nxy * k].into() };
    if !linear {
        return at(hx.nearest, hy.nearest, hz.nearest);
    }
    let lerp = |a: f64, b: f64, w: f64| if w == 0.0 { a } else { a + (b - a) * w };
    let row = |j: usize, k: usize| lerp(at(hx.lo, j, k), at(hx.hi, j, k), hx.w);
    let plane = |k: usize| {
        if hy.w == 0.0 {
            row(hy.lo, k)
        } else {
            lerp(row(hy.lo, k), row(hy.hi, k), hy.w)
        }
    };
    if hz.w == 0.0 {
        plane(hz.lo)
    } else {
        lerp(plane(hz.lo), plane(hz.hi), hz.w)
    }
}

fn sample_raw<T: Copy + Into<f64>>(src: &[T], geom: &Geometry, point: [f64; 3], linear: bool) -> f64 {
    let f = geom.world_to_voxel(point);
    let hits = [
        axis_hit(f[0], geom.dims[0], POINT_BORDER),
        axis_hit(f[1], geom.dims[1], POINT_BORDER),
        axis_hit(f[2], geom.dims[2], POINT_BORDER),
    ];
    match hits {
        [Some(hx), Some(hy), Some(hz)] => interpolate(src, geom.dims, &hx, &hy, &hz, linear),
        _ => 0.0,
    }
}

fn apply_mode(value: f64, mode: InterpMode) -> f64 {
    match mode {
        InterpMode::TrilinearThenThreshold(t) => f64::from(u8::from(value >= t)),
        _ => value,
    }
}

/// Value of `v` at a world point.
pub fn sample(v: &Volume3, point: [f64; 3], mode: InterpMode) -> f64 {
    let linear = !matches!(mode, InterpMode::NearestNeighbor);
    apply_mode(sample_raw(v.voxels(), v.geometry(), point, linear), mode)
}

/// Value of a mask at a world point, as 0.0 / 1.0 (or a fraction for plain trilinear).
pub fn sample_mask(m: &Mask3, point: [f64; 3], mode: InterpMode) -> f64 {
    let linear = !matches!(mode, InterpMode::NearestNeighbor);
    apply_mode(sample_raw(m.voxels(), m.geometry(), point, linear), mode)
}

fn axis_table(src: &Geometry, dst: &Geometry, axis: usize) -> Vec<Option<AxisHit>> {
    let so = src.origin[axis];
    let ss = src.spacing.as_array()[axis];
    let dro = dst.origin[axis];
    let ds = dst.spacing.as_array()[axis];
    (0..dst.dims[axis])
        .map(|i| {
            // same arithmetic as Geometry::index_to_world followed by world_to_voxel
            let world = dro + i as f64 * ds;
            axis_hit((world - so) / ss, src.dims[axis], GRID_BORDER)
        })
        .collect()
}

/// Samples `src` at every voxel center of `dst`, mapping each value through `emit`.
fn resample_grid<T, O>(
    src: &[T],
    src_geom: &Geometry,
    dst: &Geometry,
    linear: bool,
    emit: impl Fn(f64) -> O + Sync,
) -> Vec<O>
where
    T: Copy + Into<f64> + Sync,
    O: Copy + Default + Send + Sync,
{
    let tx = axis_table(src_geom, dst, 0);
    let ty = axis_table(src_geom, dst, 1);
    let tz = axis_table(src_geom, dst, 2);
    let [nx, ny, _] = dst.dims;
    let mut out = vec![O::default(); dst.len()];
    let background = emit(0.0);
    out.par_chunks_mut(nx * ny)
        .zip(tz.par_iter())
        .for_each(|(slice, hz)| {
            let Some(hz) = hz else {
                slice.fill(background);
                return;
            };
            for (row, hy) in slice.chunks_mut(nx).zip(&ty) {
                let Some(hy) = hy else {
                    row.fill(background);
                    continue;
                };
                for (o, hx) in row.iter_mut().zip(&tx) {
                    *o = match hx {
                        Some(hx) => emit(interpolate(src, src_geom.dims, hx, hy, hz, linear)),
                        None => background,
                    };
                }
            }
        });
    out
}

/// Resamples `v` onto an arbitrary target grid.
pub fn resample_onto(v: &Volume3, target: &Geometry, mode: InterpMode) -> Result<Volume3> {
    let mode = mode.validate()?;
    if target == v.geometry() {
        return Ok(match mode {
            InterpMode::TrilinearThenThreshold(t) => v.binarize(t).to_volume(),
            _ => v.clone(),
        });
    }
    let linear = !matches!(mode, InterpMode::NearestNeighbor);
    let voxels = resample_grid(v.voxels(), v.geometry(), target, linear, |x| {
        apply_mode(x, mode) as f32
    });
    Volume3::new(*target, voxels)
}

/// Resamples `v` to `out_spacing`, keeping its origin.
pub fn resample_to_spacing(v: &Volume3, out_spacing: Spacing3, mode: InterpMode) -> Result<Volume3> {
    let g = v.geometry();
    let target = Geometry::new(output_dims(g.dims, g.spacing, out_spacing), out_spacing, g.origin)?;
    resample_onto(v, &target, mode)
}

/// Resamples a mask onto an arbitrary target grid, keeping it binary.
pub fn resample_mask_onto(m: &Mask3, target: &Geometry, mode: InterpMode) -> Result<Mask3> {
    let mode = mode.ensure_mask_mode()?;
    if target == m.geometry() {
        return Ok(m.clone());
    }
    let threshold = match mode {
        InterpMode::TrilinearThenThreshold(t) => t,
        _ => 0.5,
    };
    let linear = !matches!(mode, InterpMode::NearestNeighbor);
    let voxels = resample_grid(m.voxels(), m.geometry(), target, linear, |x| {
        u8::from(x >= threshold)
    });
    Mask3::new(*target, voxels)
}

pub fn resample_mask(m: &Mask3, out_spacing: Spacing3, mode: InterpMode) -> Result<Mask3> {
    let g = m.geometry();
    let target = Geometry::new(output_dims(g.dims, g.spacing, out_spacing), out_spacing, g.origin)?;
    resample_mask_onto(m, &target, mode)
}

/// Resamples `m` to `target_spacing` and back onto its own grid.
pub fn reconstruct(m: &Mask3, target_spacing: Spacing3, mode: InterpMode) -> Result<Mask3> {
    let there = resample_mask(m, target_spacing, mode)?;
    resample_mask_onto(&there, m.geometry(), mode)
}
