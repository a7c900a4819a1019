//! Synthetic test objects: spheres, smooth prostate-like blobs, matching
//! intensity images and a heterogeneous-spacing study dataset.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::SeededRng;
use crate::error::Result;
use crate::resample::MEDIAN_SPACING;
use crate::volume::{Geometry, Mask3, Spacing3, Volume3};

/// Binary ball of `radius_mm` around a world point.
pub fn sphere_mask(geometry: Geometry, center: [f64; 3], radius_mm: f64) -> Mask3 {
    let r2 = radius_mm * radius_mm;
    Mask3::from_fn(geometry, |idx| {
        let p = geometry.index_to_world(idx.map(|i| i as f64));
        let d2: f64 = (0..3).map(|a| (p[a] - center[a]).powi(2)).sum();
        d2 <= r2
    })
}

/// Ellipsoid whose radius is modulated by a few low-order angular harmonics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub center: [f64; 3],
    pub semi_axes: [f64; 3],
    /// `(amplitude, azimuthal order, polar order, phase)`; amplitudes are
    /// relative to the ellipsoid radius.
    pub harmonics: Vec<(f64, u32, u32, f64)>,
}

impl Blob {
    pub fn ellipsoid(center: [f64; 3], semi_axes: [f64; 3]) -> Self {
        Self {
            center,
            semi_axes,
            harmonics: Vec::new(),
        }
    }

    /// Random smooth blob around `center` with semi-axes near `mean_axes`.
    pub fn random(rng: &mut impl Rng, center: [f64; 3], mean_axes: [f64; 3]) -> Self {
        let semi_axes = mean_axes.map(|a| a * rng.random_range(0.85..1.15));
        let harmonics = (0..4)
            .map(|_| {
                (
                    rng.random_range(0.02..0.07),
                    rng.random_range(1..=3),
                    rng.random_range(1..=2),
                    rng.random_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        Self {
            center,
            semi_axes,
            harmonics,
        }
    }

    /// Normalized radial coordinate; the surface is where this equals 1.
    pub fn level(&self, p: [f64; 3]) -> f64 {
        let q: [f64; 3] = std::array::from_fn(|a| (p[a] - self.center[a]) / self.semi_axes[a]);
        let r = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
        if r == 0.0 {
            return 0.0;
        }
        let azimuth = q[1].atan2(q[0]);
        let polar = (q[2] / r).clamp(-1.0, 1.0).acos();
        let bump: f64 = self
            .harmonics
            .iter()
            .map(|&(amp, m, l, phase)| {
                amp * (m as f64 * azimuth + phase).cos() * (l as f64 * polar).sin().abs()
            })
            .sum();
        r / (1.0 + bump)
    }

    pub fn rasterize(&self, geometry: Geometry) -> Mask3 {
        Mask3::from_fn(geometry, |idx| {
            self.level(geometry.index_to_world(idx.map(|i| i as f64))) <= 1.0
        })
    }
}

/// Low-contrast MR-like image of a mask: a dim background, slightly brighter
/// object, a smooth bias field and deterministic speckle.
pub fn phantom_image(mask: &Mask3, seed: u64) -> Result<Volume3> {
    let g = *mask.geometry();
    let mut rng = SeededRng::new(seed).stream(0);
    let noise: Vec<f32> = (0..g.len()).map(|_| rng.random_range(-4.0..4.0)).collect();
    let [nx, ny, nz] = g.dims.map(|n| n as f32);
    Volume3::from_fn(g, |[i, j, k]| {
        let bias = 20.0 * (i as f32 / nx) + 10.0 * (j as f32 / ny) + 5.0 * (k as f32 / nz.max(1.0));
        let tissue = if mask.get(i, j, k) == 1 { 40.0 } else { 0.0 };
        200.0 + bias + tissue + noise[g.linear_index(i, j, k)]
    })
}

/// One synthetic case of the resolution-study dataset.
#[derive(Debug, Clone)]
pub struct PhantomCase {
    pub id: String,
    pub mask: Mask3,
    pub blob: Blob,
}

// In-plane and through-plane spacings for a 20-case dataset; both lists have
// their dataset median at the reference median spacing (0.625, 3.6).
const IN_PLANE: [f64; 20] = [
    0.27, 0.3, 0.35, 0.4, 0.45, 0.5, 0.55, 0.58, 0.6, 0.6, 0.65, 0.65, 0.67, 0.7, 0.7, 0.72, 0.75,
    0.75, 0.8, 0.86,
];
const THROUGH_PLANE: [f64; 20] = [
    2.2, 2.5, 3.0, 3.0, 3.2, 3.3, 3.4, 3.5, 3.5, 3.5, 3.7, 3.7, 3.8, 3.8, 3.9, 4.0, 4.0, 4.0, 4.2,
    4.5,
];

/// Settings for [`study_dataset`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetSpec {
    pub cases: usize,
    pub dims: [usize; 3],
    /// Mean blob semi-axes in millimeters.
    pub semi_axes_mm: [f64; 3],
    /// Every case uses the median spacing instead of the heterogeneous table.
    pub uniform_spacing: bool,
    pub seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            cases: 20,
            dims: [256, 256, 24],
            semi_axes_mm: [22.0, 18.0, 17.0],
            uniform_spacing: false,
            seed: 2022,
        }
    }
}

/// Spacing of case `index` in a dataset of `cases`.
///
/// In-plane and through-plane values are drawn from fixed tables (repeated
/// when there are more than 20 cases) and paired by a seeded permutation.
pub fn case_spacing(spec: &DatasetSpec, index: usize) -> Spacing3 {
    if spec.uniform_spacing {
        return Spacing3::try_from(MEDIAN_SPACING).unwrap();
    }
    let mut rng = SeededRng::new(spec.seed).stream(u64::MAX);
    let mut perm: Vec<usize> = (0..THROUGH_PLANE.len()).collect();
    for i in (1..perm.len()).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let n = IN_PLANE.len();
    let xy = IN_PLANE[(index * 7) % n];
    let z = THROUGH_PLANE[perm[(index * 7) % n]];
    Spacing3::new(xy, xy, z).unwrap()
}

/// Generates the synthetic resolution-study dataset.
pub fn study_dataset(spec: &DatasetSpec) -> Vec<PhantomCase> {
    let root = SeededRng::new(spec.seed);
    (0..spec.cases)
        .into_par_iter()
        .map(|c| {
            let spacing = case_spacing(spec, c);
            let geometry = Geometry::new(spec.dims, spacing, [0.0; 3]).unwrap();
            let mut rng = root.stream(c as u64);
            let mid = geometry.center();
            // keep the blob off the voxel lattice
            let center = [
                mid[0] + rng.random_range(-3.0..3.0),
                mid[1] + rng.random_range(-3.0..3.0),
                mid[2] + rng.random_range(-2.0..2.0),
            ];
            let blob = Blob::random(&mut rng, center, spec.semi_axes_mm);
            PhantomCase {
                id: format!("Case{c:02}"),
                mask: blob.rasterize(geometry),
                blob,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_volume_is_close_to_analytic() {
        let g = Geometry::new([40, 40, 40], Spacing3::isotropic(1.0).unwrap(), [0.0; 3]).unwrap();
        let m = sphere_mask(g, [19.5, 19.5, 19.5], 12.0);
        let analytic = 4.0 / 3.0 * std::f64::consts::PI * 12f64.powi(3);
        let rel = (m.count() as f64 - analytic).abs() / analytic;
        assert!(rel < 0.02, "relative error {rel}");
    }

    #[test]
    fn dataset_spacing_median_is_reference() {
        let spec = DatasetSpec::default();
        let mut xy: Vec<f64> = (0..20).map(|c| case_spacing(&spec, c).x()).collect();
        let mut z: Vec<f64> = (0..20).map(|c| case_spacing(&spec, c).z()).collect();
        xy.sort_by(f64::total_cmp);
        z.sort_by(f64::total_cmp);
        assert!(((xy[9] + xy[10]) / 2.0 - 0.625).abs() < 1e-12);
        assert!(((z[9] + z[10]) / 2.0 - 3.6).abs() < 1e-12);
    }

    #[test]
    fn dataset_is_deterministic() {
        let spec = DatasetSpec {
            cases: 3,
            dims: [48, 48, 12],
            semi_axes_mm: [8.0, 7.0, 9.0],
            ..Default::default()
        };
        let a = study_dataset(&spec);
        let b = study_dataset(&spec);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mask, y.mask);
            assert!(x.mask.count() > 100);
        }
    }
}
