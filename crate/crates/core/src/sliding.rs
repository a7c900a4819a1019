//! Sliding-window prediction with mean aggregation of overlapping windows.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Geometry, Mask3, Volume3};

pub const DEFAULT_WINDOW: [usize; 3] = [192, 192, 32];
pub const DEFAULT_STRIDE: [usize; 3] = [48, 48, 8];
/// Windows predicted concurrently before their results are accumulated.
const BATCH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSpec {
    pub window: [usize; 3],
    pub stride: [usize; 3],
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            stride: DEFAULT_STRIDE,
        }
    }
}

impl WindowSpec {
    pub fn new(window: [usize; 3], stride: [usize; 3]) -> Result<Self> {
        let spec = Self { window, stride };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for a in 0..3 {
            if self.window[a] == 0 || self.stride[a] == 0 || self.stride[a] > self.window[a] {
                return Err(Error::Config(format!(
                    "stride {:?} must satisfy 1 <= stride <= window {:?}",
                    self.stride, self.window
                )));
            }
        }
        Ok(())
    }
}

fn axis_offsets(n: usize, w: usize, s: usize) -> Vec<usize> {
    let last = n - w;
    let mut out: Vec<usize> = (0..last).step_by(s).collect();
    out.push(last);
    out
}

/// Window corners covering `dims`, in lexicographic `(x, y, z)` order.
///
/// Per axis the offsets are `0, s, 2s, ...` with the final one clamped to
/// `dims - window`.
pub fn window_offsets(dims: [usize; 3], spec: &WindowSpec) -> Result<Vec<[usize; 3]>> {
    spec.validate()?;
    if (0..3).any(|a| spec.window[a] > dims[a]) {
        return Err(Error::Config(format!(
            "window {:?} does not fit in dims {dims:?}",
            spec.window
        )));
    }
    let [ox, oy, oz]: [Vec<usize>; 3] =
        std::array::from_fn(|a| axis_offsets(dims[a], spec.window[a], spec.stride[a]));
    let mut out = Vec::with_capacity(ox.len() * oy.len() * oz.len());
    for &x in &ox {
        for &y in &oy {
            for &z in &oz {
                out.push([x, y, z]);
            }
        }
    }
    Ok(out)
}

/// Maps an image patch to a foreground probability map of the same dims.
pub trait Predictor: Sync {
    fn predict(&self, patch: &Volume3) -> Volume3;
}

/// Returns the same probability everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstPredictor(pub f32);

impl Predictor for ConstPredictor {
    fn predict(&self, patch: &Volume3) -> Volume3 {
        Volume3::filled(*patch.geometry(), self.0)
    }
}

/// Returns the patch rescaled by a fixed intensity range and clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EchoPredictor {
    pub lo: f32,
    pub hi: f32,
}

impl EchoPredictor {
    /// Normalizes by the min-max range of `v`.
    pub fn for_volume(v: &Volume3) -> Self {
        let (lo, hi) = v.min_max();
        Self { lo, hi }
    }

    fn apply(&self, x: f32) -> f32 {
        if self.hi > self.lo {
            ((x - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

impl Predictor for EchoPredictor {
    fn predict(&self, patch: &Volume3) -> Volume3 {
        let voxels = patch.voxels().iter().map(|&x| self.apply(x)).collect();
        Volume3::new(*patch.geometry(), voxels).expect("finite by construction")
    }
}

/// Echo followed by a hard threshold (`>=`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPredictor {
    pub echo: EchoPredictor,
    pub threshold: f32,
}

impl Predictor for ThresholdPredictor {
    fn predict(&self, patch: &Volume3) -> Volume3 {
        let voxels = patch
            .voxels()
            .iter()
            .map(|&x| if self.echo.apply(x) >= self.threshold { 1.0 } else { 0.0 })
            .collect();
        Volume3::new(*patch.geometry(), voxels).expect("finite by construction")
    }
}

/// Min-max normalization of a whole volume, the reference output of [`EchoPredictor`].
pub fn normalize(v: &Volume3) -> Volume3 {
    let e = EchoPredictor::for_volume(v);
    let voxels = v.voxels().iter().map(|&x| e.apply(x)).collect();
    Volume3::new(*v.geometry(), voxels).expect("finite by construction")
}

/// Built-in predictors selectable by name: `const:<p>`, `echo`, `threshold:<t>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PredictorSpec {
    Const(f32),
    Echo,
    Threshold(f32),
}

impl PredictorSpec {
    /// Instantiates the predictor; echo-based ones normalize by `v`'s range.
    pub fn build(&self, v: &Volume3) -> Box<dyn Predictor> {
        match *self {
            PredictorSpec::Const(p) => Box::new(ConstPredictor(p)),
            PredictorSpec::Echo => Box::new(EchoPredictor::for_volume(v)),
            PredictorSpec::Threshold(t) => Box::new(ThresholdPredictor {
                echo: EchoPredictor::for_volume(v),
                threshold: t,
            }),
        }
    }
}

impl FromStr for PredictorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let unit = |v: &str| -> Result<f32> {
            let x: f32 = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidMode(format!("invalid predictor parameter in {s:?}")))?;
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::InvalidMode(format!("predictor parameter in {s:?} must be in [0, 1]")));
            }
            Ok(x)
        };
        match s.split_once(':') {
            None if s == "echo" => Ok(PredictorSpec::Echo),
            Some(("const", v)) => Ok(PredictorSpec::Const(unit(v)?)),
            Some(("threshold", v)) => Ok(PredictorSpec::Threshold(unit(v)?)),
            _ => Err(Error::InvalidMode(format!(
                "unknown predictor {s:?} (expected const:<p>, echo or threshold:<t>)"
            ))),
        }
    }
}

impl TryFrom<String> for PredictorSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PredictorSpec> for String {
    fn from(p: PredictorSpec) -> String {
        p.to_string()
    }
}

impl fmt::Display for PredictorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictorSpec::Const(p) => write!(f, "const:{p}"),
            PredictorSpec::Echo => f.write_str("echo"),
            PredictorSpec::Threshold(t) => write!(f, "threshold:{t}"),
        }
    }
}

/// Zero padding that brings every axis up to at least `min_dims`, split evenly.
fn padding(dims: [usize; 3], min_dims: [usize; 3]) -> ([usize; 3], [usize; 3]) {
    let lo = std::array::from_fn(|a| min_dims[a].saturating_sub(dims[a]) / 2);
    let padded = std::array::from_fn(|a| dims[a].max(min_dims[a]));
    (lo, padded)
}

fn pad(v: &Volume3, lo: [usize; 3], padded: [usize; 3]) -> Result<Volume3> {
    if padded == v.dims() {
        return Ok(v.clone());
    }
    let g = v.geometry();
    let s = g.spacing.as_array();
    let origin = std::array::from_fn(|a| g.origin[a] - lo[a] as f64 * s[a]);
    let pg = Geometry::new(padded, g.spacing, origin)?;
    let d = g.dims;
    Volume3::from_fn(pg, |[i, j, k]| {
        let (i, j, k) = (i.wrapping_sub(lo[0]), j.wrapping_sub(lo[1]), k.wrapping_sub(lo[2]));
        if i < d[0] && j < d[1] && k < d[2] {
            v.get(i, j, k)
        } else {
            0.0
        }
    })
}

fn crop(v: &Volume3, corner: [usize; 3], dims: [usize; 3]) -> Result<Volume3> {
    let g = v.geometry();
    let origin = g.index_to_world(corner.map(|c| c as f64));
    let pg = Geometry::new(dims, g.spacing, origin)?;
    let [nx, ny, _] = dims;
    let mut out = Vec::with_capacity(pg.len());
    for k in 0..dims[2] {
        for j in 0..ny {
            let row = g.linear_index(corner[0], corner[1] + j, corner[2] + k);
            out.extend_from_slice(&v.voxels()[row..row + nx]);
        }
    }
    Volume3::new(pg, out)
}

fn check_contract(patch: &Volume3, out: &Volume3, offset: [usize; 3]) -> Result<()> {
    if out.dims() != patch.dims() {
        return Err(Error::Contract {
            offset,
            reason: format!("output dims {:?} differ from patch dims {:?}", out.dims(), patch.dims()),
        });
    }
    if let Some(x) = out.voxels().iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Contract {
            offset,
            reason: format!("output value {x} outside [0, 1]"),
        });
    }
    Ok(())
}

/// Number of windows covering each voxel of a `dims` grid (x-fastest).
pub fn coverage_counts(dims: [usize; 3], spec: &WindowSpec) -> Result<Vec<u32>> {
    let (lo, padded) = padding(dims, spec.window);
    let offsets = window_offsets(padded, spec)?;
    let [px, py, _] = padded;
    let mut counts = vec![0u32; padded.iter().product()];
    for o in &offsets {
        for k in o[2]..o[2] + spec.window[2] {
            for j in o[1]..o[1] + spec.window[1] {
                let row = px * (j + py * k);
                for c in &mut counts[row + o[0]..row + o[0] + spec.window[0]] {
                    *c += 1;
                }
            }
        }
    }
    let mut out = Vec::with_capacity(dims.iter().product());
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            let row = lo[0] + px * ((j + lo[1]) + py * (k + lo[2]));
            out.extend_from_slice(&counts[row..row + dims[0]]);
        }
    }
    Ok(out)
}

/// Predicts every window and averages overlapping predictions per voxel.
///
/// Windows are predicted concurrently but accumulated in offset order, so the
/// result does not depend on the number of worker threads.
pub fn predict_volume(v: &Volume3, pred: &dyn Predictor, spec: &WindowSpec) -> Result<Volume3> {
    spec.validate()?;
    let (lo, padded_dims) = padding(v.dims(), spec.window);
    let padded = pad(v, lo, padded_dims)?;
    let offsets = window_offsets(padded_dims, spec)?;
    let [px, py, _] = padded_dims;
    let [wx, wy, wz] = spec.window;
    let mut sum = vec![0f64; padded.voxels().len()];
    let mut count = vec![0u32; sum.len()];
    for batch in offsets.chunks(BATCH) {
        let outputs: Vec<Volume3> = batch
            .par_iter()
            .map(|&o| {
                let patch = crop(&padded, o, spec.window)?;
                let out = pred.predict(&patch);
                check_contract(&patch, &out, o)?;
                Ok(out)
            })
            .collect::<Result<_>>()?;
        for (o, out) in batch.iter().zip(&outputs) {
            for k in 0..wz {
                for j in 0..wy {
                    let dst = o[0] + px * ((o[1] + j) + py * (o[2] + k));
                    let src = wx * (j + wy * k);
                    for i in 0..wx {
                        sum[dst + i] += out.voxels()[src + i] as f64;
                        count[dst + i] += 1;
                    }
                }
            }
        }
    }
    let mean: Vec<f32> = sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| (s / c as f64) as f32)
        .collect();
    let full = Volume3::new(*padded.geometry(), mean)?;
    if padded_dims == v.dims() {
        return Ok(full);
    }
    crop(&full, lo, v.dims())
}

/// [`predict_volume`] followed by `>= threshold` binarization.
pub fn predict_and_binarize(
    v: &Volume3,
    pred: &dyn Predictor,
    spec: &WindowSpec,
    threshold: f64,
) -> Result<Mask3> {
    Ok(predict_volume(v, pred, spec)?.binarize(threshold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Spacing3;

    fn vol(dims: [usize; 3]) -> Volume3 {
        let g = Geometry::new(dims, Spacing3::new(0.5, 0.5, 2.0).unwrap(), [3.0, -1.0, 0.5]).unwrap();
        Volume3::from_fn(g, |[i, j, k]| ((i * 31 + j * 17 + k * 7) % 23) as f32 + 10.0).unwrap()
    }

    #[test]
    fn offset_examples() {
        let spec = WindowSpec::default();
        assert_eq!(window_offsets([192, 192, 32], &spec).unwrap(), vec![[0, 0, 0]]);
        let o = window_offsets([240, 240, 40], &spec).unwrap();
        assert_eq!(o.len(), 8);
        assert!(o.contains(&[48, 48, 8]) && o.contains(&[0, 48, 0]));
        let o = window_offsets([200, 200, 36], &spec).unwrap();
        assert_eq!(o, vec![[0, 0, 0], [0, 0, 4], [0, 8, 0], [0, 8, 4], [8, 0, 0], [8, 0, 4], [8, 8, 0], [8, 8, 4]]);
        assert!(window_offsets([100, 200, 36], &spec).is_err());
    }

    #[test]
    fn spec_validation() {
        assert!(WindowSpec::new([192, 192, 32], [96, 96, 16]).is_ok());
        assert!(WindowSpec::new([192, 192, 32], [0, 48, 8]).is_err());
        assert!(WindowSpec::new([192, 192, 32], [48, 48, 33]).is_err());
    }

    #[test]
    fn constant_predictor_is_uniform() {
        let v = vol([30, 25, 9]);
        let spec = WindowSpec::new([16, 16, 4], [5, 7, 2]).unwrap();
        let out = predict_volume(&v, &ConstPredictor(0.7), &spec).unwrap();
        assert_eq!(out.geometry(), v.geometry());
        assert!(out.voxels().iter().all(|&x| x == 0.7));
        let m = predict_and_binarize(&v, &ConstPredictor(0.7), &spec, 0.5).unwrap();
        assert_eq!(m.count(), m.voxels().len());
        let m = predict_and_binarize(&v, &ConstPredictor(0.3), &spec, 0.5).unwrap();
        assert!(m.is_all_background());
    }

    #[test]
    fn echo_reproduces_normalized_input() {
        let v = vol([30, 25, 9]);
        let spec = WindowSpec::new([16, 16, 4], [5, 7, 2]).unwrap();
        let out = predict_volume(&v, &EchoPredictor::for_volume(&v), &spec).unwrap();
        let want = normalize(&v);
        for (a, b) in out.voxels().iter().zip(want.voxels()) {
            assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn small_volumes_are_padded_and_cropped_back() {
        let v = vol([10, 12, 3]);
        let spec = WindowSpec::new([16, 16, 4], [8, 8, 2]).unwrap();
        let e = EchoPredictor::for_volume(&v);
        let out = predict_volume(&v, &e, &spec).unwrap();
        assert_eq!(out.geometry(), v.geometry());
        for (a, b) in out.voxels().iter().zip(normalize(&v).voxels()) {
            assert!((a - b).abs() <= 1e-6);
        }
        assert!(coverage_counts([10, 12, 3], &spec).unwrap().iter().all(|&c| c == 1));
    }

    #[test]
    fn coverage_with_stride_equal_window() {
        let spec = WindowSpec::new([4, 4, 2], [4, 4, 2]).unwrap();
        let c = coverage_counts([8, 8, 4], &spec).unwrap();
        assert!(c.iter().all(|&n| n == 1));
        let c = coverage_counts([9, 8, 4], &spec).unwrap();
        assert!(c.iter().all(|&n| n >= 1));
        assert_eq!(c.iter().filter(|&&n| n == 2).count(), 3 * 8 * 4);
    }

    struct Broken;
    impl Predictor for Broken {
        fn predict(&self, patch: &Volume3) -> Volume3 {
            Volume3::filled(*patch.geometry(), 1.5)
        }
    }

    #[test]
    fn contract_violation_names_the_offset() {
        let v = vol([20, 20, 4]);
        let spec = WindowSpec::new([16, 16, 4], [8, 8, 2]).unwrap();
        match predict_volume(&v, &Broken, &spec) {
            Err(Error::Contract { offset, .. }) => assert_eq!(offset, [0, 0, 0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn predictor_names() {
        assert_eq!("const:0.7".parse::<PredictorSpec>().unwrap(), PredictorSpec::Const(0.7));
        assert_eq!("echo".parse::<PredictorSpec>().unwrap(), PredictorSpec::Echo);
        assert_eq!(
            "threshold:0.5".parse::<PredictorSpec>().unwrap(),
            PredictorSpec::Threshold(0.5)
        );
        assert!("const:1.2".parse::<PredictorSpec>().is_err());
        assert!("unet".parse::<PredictorSpec>().is_err());
        assert_eq!(PredictorSpec::Const(0.7).to_string(), "const:0.7");
    }
}
