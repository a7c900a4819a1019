//! Overlap scores, cross-entropy losses and reconstruction Dice.
//!
//! In every two-mask function `a` is the reference (ground truth) and `b` the
//! candidate (prediction or reconstruction). Two empty masks agree perfectly:
//! Dice and Tversky return 1.0 instead of 0/0.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resample::{reconstruct, strategy_target_spacing, InterpMode, ResolutionStrategy};
use crate::volume::{Mask3, Volume3};

/// Smoothing added to numerator and denominator of the soft overlap losses.
pub const SOFT_SMOOTH: f64 = 1e-6;

const SUM_CHUNK: usize = 1 << 14;

/// Sum of per-voxel terms, chunked so the result does not depend on thread count.
fn ordered_sum(n: usize, term: impl Fn(usize) -> f64 + Sync) -> f64 {
    let chunks: Vec<f64> = (0..n.div_ceil(SUM_CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * SUM_CHUNK;
            (start..(start + SUM_CHUNK).min(n)).map(&term).sum()
        })
        .collect();
    chunks.iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn dice(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            return 1.0;
        }
        (2 * self.tp) as f64 / denom as f64
    }

    pub fn tversky(&self, p: TverskyParams) -> f64 {
        let denom = self.tp as f64 + p.alpha * self.fn_ as f64 + p.beta * self.fp as f64;
        if self.tp == 0 && self.fp == 0 && self.fn_ == 0 {
            return 1.0;
        }
        if denom == 0.0 {
            // tp = 0 with zero-weighted errors; nothing agrees
            return 0.0;
        }
        self.tp as f64 / denom
    }
}

/// False-negative (`alpha`) and false-positive (`beta`) weights of the Tversky index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TverskyParams {
    pub alpha: f64,
    pub beta: f64,
}

impl TverskyParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha >= 0.0 && beta >= 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::Config(format!(
                "Tversky weights must be finite and >= 0, got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// alpha = beta = 0.5, which reduces the index to Dice.
    pub fn dice_equivalent() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.5,
        }
    }
}

/// Focal cross-entropy settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocalParams {
    /// Focusing exponent.
    pub gamma: f64,
    /// Weight of the foreground term; the background term gets `1 - alpha_balance`.
    pub alpha_balance: f64,
    /// Probabilities are clamped to `[epsilon, 1 - epsilon]`.
    pub epsilon: f64,
}

impl Default for FocalParams {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            alpha_balance: 0.25,
            epsilon: 1e-7,
        }
    }
}

impl FocalParams {
    pub fn new(gamma: f64, alpha_balance: f64, epsilon: f64) -> Result<Self> {
        let ok = gamma >= 0.0
            && gamma.is_finite()
            && alpha_balance > 0.0
            && alpha_balance <= 1.0
            && epsilon > 0.0
            && epsilon < 0.5;
        if !ok {
            return Err(Error::Config(format!(
                "invalid focal parameters gamma={gamma}, alpha_balance={alpha_balance}, epsilon={epsilon}"
            )));
        }
        Ok(Self {
            gamma,
            alpha_balance,
            epsilon,
        })
    }
}

/// The cost functions compared for training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LossKind {
    Dice,
    Bfce,
    Tversky(TverskyParams),
    DicePlusBfce,
    TverskyPlusBfce(TverskyParams),
}

pub fn confusion(a: &Mask3, b: &Mask3) -> Result<ConfusionCounts> {
    a.geometry().ensure_same_dims(b.geometry())?;
    let mut c = ConfusionCounts::default();
    for (&x, &y) in a.voxels().iter().zip(b.voxels()) {
        match (x, y) {
            (1, 1) => c.tp += 1,
            (1, _) => c.fn_ += 1,
            (_, 1) => c.fp += 1,
            _ => c.tn += 1,
        }
    }
    Ok(c)
}

pub fn dice(a: &Mask3, b: &Mask3) -> Result<f64> {
    Ok(confusion(a, b)?.dice())
}

pub fn tversky(a: &Mask3, b: &Mask3, p: TverskyParams) -> Result<f64> {
    Ok(confusion(a, b)?.tversky(p))
}

fn check_prob(prob: &Volume3, y: &Mask3) -> Result<()> {
    prob.geometry().ensure_same_dims(y.geometry())?;
    if let Some(pos) = prob
        .voxels()
        .iter()
        .position(|p| !(0.0..=1.0).contains(p))
    {
        return Err(Error::Domain(format!(
            "probability {} at voxel {:?} is outside [0, 1]",
            prob.voxels()[pos],
            prob.geometry().index_of(pos)
        )));
    }
    Ok(())
}

/// Mean binary cross-entropy with probabilities clamped to `[epsilon, 1 - epsilon]`.
pub fn bce(prob: &Volume3, y: &Mask3, epsilon: f64) -> Result<f64> {
    check_prob(prob, y)?;
    let p = prob.voxels();
    let t = y.voxels();
    let sum = ordered_sum(p.len(), |i| {
        let pi = f64::from(p[i]).clamp(epsilon, 1.0 - epsilon);
        if t[i] == 1 {
            -pi.ln()
        } else {
            -(1.0 - pi).ln()
        }
    });
    Ok(sum / p.len() as f64)
}

/// Mean focal binary cross-entropy.
pub fn focal_bce(prob: &Volume3, y: &Mask3, params: &FocalParams) -> Result<f64> {
    check_prob(prob, y)?;
    let FocalParams {
        gamma,
        alpha_balance,
        epsilon,
    } = *params;
    let p = prob.voxels();
    let t = y.voxels();
    let sum = ordered_sum(p.len(), |i| {
        let pi = f64::from(p[i]).clamp(epsilon, 1.0 - epsilon);
        if t[i] == 1 {
            -alpha_balance * (1.0 - pi).powf(gamma) * pi.ln()
        } else {
            -(1.0 - alpha_balance) * pi.powf(gamma) * (1.0 - pi).ln()
        }
    });
    Ok(sum / p.len() as f64)
}

/// Soft sums used by the differentiable overlap losses: (Σp·y, Σp·(1-y), Σ(1-p)·y).
fn soft_counts(prob: &Volume3, y: &Mask3) -> (f64, f64, f64) {
    let p = prob.voxels();
    let t = y.voxels();
    let tp = ordered_sum(p.len(), |i| f64::from(p[i]) * f64::from(t[i]));
    let fp = ordered_sum(p.len(), |i| f64::from(p[i]) * (1.0 - f64::from(t[i])));
    let fn_ = ordered_sum(p.len(), |i| (1.0 - f64::from(p[i])) * f64::from(t[i]));
    (tp, fp, fn_)
}

pub fn soft_dice(prob: &Volume3, y: &Mask3) -> Result<f64> {
    check_prob(prob, y)?;
    let (tp, fp, fn_) = soft_counts(prob, y);
    Ok((2.0 * tp + SOFT_SMOOTH) / (2.0 * tp + fp + fn_ + SOFT_SMOOTH))
}

pub fn soft_tversky(prob: &Volume3, y: &Mask3, p: TverskyParams) -> Result<f64> {
    check_prob(prob, y)?;
    let (tp, fp, fn_) = soft_counts(prob, y);
    Ok((tp + SOFT_SMOOTH) / (tp + p.alpha * fn_ + p.beta * fp + SOFT_SMOOTH))
}

/// Loss value with the default focal parameters.
pub fn loss(kind: LossKind, prob: &Volume3, y: &Mask3) -> Result<f64> {
    loss_with(kind, prob, y, &FocalParams::default())
}

/// Overlap terms enter as `1 - score`; combinations are unweighted sums.
pub fn loss_with(kind: LossKind, prob: &Volume3, y: &Mask3, focal: &FocalParams) -> Result<f64> {
    Ok(match kind {
        LossKind::Dice => 1.0 - soft_dice(prob, y)?,
        LossKind::Bfce => focal_bce(prob, y, focal)?,
        LossKind::Tversky(p) => 1.0 - soft_tversky(prob, y, p)?,
        LossKind::DicePlusBfce => 1.0 - soft_dice(prob, y)? + focal_bce(prob, y, focal)?,
        LossKind::TverskyPlusBfce(p) => {
            1.0 - soft_tversky(prob, y, p)? + focal_bce(prob, y, focal)?
        }
    })
}

/// Reconstruction Dice: overlap between `m` and its round trip through the
/// strategy's target spacing.
pub fn rdsc(m: &Mask3, strategy: ResolutionStrategy, mode: InterpMode) -> Result<f64> {
    let target = strategy_target_spacing(strategy, m.spacing());
    let back = reconstruct(m, target, mode)?;
    dice(m, &back)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{Geometry, Spacing3};

    fn g8() -> Geometry {
        Geometry::new([2, 2, 2], Spacing3::default(), [0.0; 3]).unwrap()
    }

    fn mask(bits: [u8; 8]) -> Mask3 {
        Mask3::new(g8(), bits.to_vec()).unwrap()
    }

    #[test]
    fn confusion_examples() {
        let a = mask([1, 1, 1, 1, 1, 0, 0, 0]);
        assert_eq!(
            confusion(&a, &a).unwrap(),
            ConfusionCounts { tp: 5, fp: 0, fn_: 0, tn: 3 }
        );
        let ones = mask([1; 8]);
        let zeros = mask([0; 8]);
        assert_eq!(
            confusion(&ones, &zeros).unwrap(),
            ConfusionCounts { tp: 0, fp: 0, fn_: 8, tn: 0 }
        );
        let a = mask([1, 1, 0, 0, 0, 0, 0, 0]);
        let b = mask([0, 1, 1, 0, 0, 0, 0, 0]);
        assert_eq!(
            confusion(&a, &b).unwrap(),
            ConfusionCounts { tp: 1, fp: 1, fn_: 1, tn: 5 }
        );
    }

    #[test]
    fn dims_mismatch_is_geometry_error() {
        let other = Mask3::empty(Geometry::new([2, 2, 3], Spacing3::default(), [0.0; 3]).unwrap());
        assert!(matches!(
            dice(&mask([0; 8]), &other),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn dice_examples() {
        let a = mask([1, 1, 1, 1, 0, 0, 0, 0]);
        let b = mask([0, 0, 0, 0, 1, 1, 1, 1]);
        let c = mask([0, 0, 1, 1, 1, 1, 0, 0]);
        assert_eq!(dice(&a, &a).unwrap(), 1.0);
        assert_eq!(dice(&a, &b).unwrap(), 0.0);
        assert_eq!(dice(&a, &c).unwrap(), 0.5);
        assert_eq!(dice(&mask([0; 8]), &mask([0; 8])).unwrap(), 1.0);
    }

    #[test]
    fn tversky_examples() {
        let c = ConfusionCounts { tp: 2, fp: 2, fn_: 2, tn: 0 };
        let p = TverskyParams::new(0.3, 0.7).unwrap();
        assert!((c.tversky(p) - 0.5).abs() < 1e-15);
        let a = mask([1, 1, 0, 0, 1, 0, 0, 0]);
        assert_eq!(tversky(&a, &a, TverskyParams::new(1.0, 1.0).unwrap()).unwrap(), 1.0);
        assert_eq!(
            tversky(&mask([0; 8]), &mask([0; 8]), TverskyParams::dice_equivalent()).unwrap(),
            1.0
        );
        assert!(TverskyParams::new(-0.1, 0.5).is_err());
    }

    fn prob(values: [f32; 8]) -> Volume3 {
        Volume3::new(g8(), values.to_vec()).unwrap()
    }

    #[test]
    fn bce_closed_forms() {
        let g = Geometry::new([1, 1, 1], Spacing3::default(), [0.0; 3]).unwrap();
        let p = Volume3::new(g, vec![0.5]).unwrap();
        let one = Mask3::new(g, vec![1]).unwrap();
        let zero = Mask3::new(g, vec![0]).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!((bce(&p, &one, 1e-7).unwrap() - ln2).abs() < 1e-12);
        assert!((bce(&p, &zero, 1e-7).unwrap() - ln2).abs() < 1e-12);

        let fp = FocalParams::new(2.0, 1.0, 1e-7).unwrap();
        assert!((focal_bce(&p, &one, &fp).unwrap() - 0.25 * ln2).abs() < 1e-12);
    }

    #[test]
    fn perfect_prediction_costs_almost_nothing() {
        let y = mask([1, 0, 1, 0, 0, 1, 1, 0]);
        let p = y.to_volume();
        let b = bce(&p, &y, 1e-7).unwrap();
        assert!(b <= -(1.0f64 - 1e-7).ln() + 1e-15);
        assert!(focal_bce(&p, &y, &FocalParams::default()).unwrap() < 1e-7);
        assert!(loss(LossKind::DicePlusBfce, &p, &y).unwrap().abs() < 1e-6);
    }

    #[test]
    fn probabilities_outside_unit_interval_are_rejected() {
        let y = mask([0; 8]);
        let p = prob([0.0, 0.0, 0.0, 1.5, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(bce(&p, &y, 1e-7), Err(Error::Domain(_))));
        assert!(loss(LossKind::Dice, &p, &y).is_err());
    }

    #[test]
    fn soft_dice_matches_hard_dice_on_binary_input() {
        let y = mask([1, 1, 0, 0, 1, 0, 1, 0]);
        let b = mask([1, 0, 0, 1, 1, 0, 0, 0]);
        let p = b.to_volume();
        let hard = dice(&b, &y).unwrap();
        let l = loss(LossKind::Dice, &p, &y).unwrap();
        assert!((l - (1.0 - hard)).abs() < 1e-6);
    }

    #[test]
    fn rdsc_identity_and_empty() {
        let g = Geometry::new([10, 10, 4], Spacing3::new(0.625, 0.625, 3.6).unwrap(), [0.0; 3])
            .unwrap();
        let m = Mask3::from_fn(g, |[i, j, k]| i > 2 && i < 8 && j > 1 && k > 0);
        let own = ResolutionStrategy::FixedSpacing(g.spacing);
        assert_eq!(rdsc(&m, own, InterpMode::threshold()).unwrap(), 1.0);
        let empty = Mask3::empty(g);
        for s in ResolutionStrategy::study_set() {
            assert_eq!(rdsc(&empty, s, InterpMode::NearestNeighbor).unwrap(), 1.0);
        }
    }
}
