//! Joint image/mask spatial augmentation and random patch extraction.
//!
//! Every transform resamples onto the input grid: images trilinearly, masks by
//! nearest neighbor, with anything that maps from outside the source set to 0.
//! The pipeline order is fixed: flip, rotate, scale, B-spline, patch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resample::{sample, sample_mask, InterpMode};
use crate::volume::{Geometry, Mask3, Volume3};

/// Root of a family of independent deterministic random streams.
///
/// `stream(i)` is a ChaCha8 generator keyed by the seed with stream id `i`, so
/// samples processed in parallel can each take their own stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededRng {
    seed: u64,
}

impl SeededRng {
    pub const TRANSFORM_STREAM: u64 = 0;
    pub const PATCH_STREAM: u64 = 1;

    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(id);
        rng
    }

    /// Seed for the `index`-th sample of a batch.
    pub fn split(&self, index: u64) -> SeededRng {
        let mut rng = self.stream(index.wrapping_add(1 << 32));
        SeededRng::new(rng.random())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub flip_axes: [bool; 3],
    pub rot_z_deg: [f64; 2],
    pub scale_range: [f64; 2],
    pub bspline_grid: [usize; 3],
    pub bspline_max_disp_mm: f64,
    pub patch_dims: [usize; 3],
    /// Chance that each transform (each flip axis separately) is applied.
    pub probability: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            flip_axes: [true; 3],
            rot_z_deg: [-15.0, 15.0],
            scale_range: [0.75, 1.5],
            bspline_grid: [4, 4, 4],
            bspline_max_disp_mm: 4.0,
            patch_dims: [192, 192, 32],
            probability: 0.5,
        }
    }
}

pub const SCALE_GUARD: [f64; 2] = [0.5, 2.0];

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        let [r0, r1] = self.rot_z_deg;
        if !(r0 <= r1 && r0 >= -180.0 && r1 <= 180.0) {
            return Err(Error::Config(format!(
                "rotation range {:?} must be ordered and inside [-180, 180]",
                self.rot_z_deg
            )));
        }
        let [s0, s1] = self.scale_range;
        if !(s0 > 0.0 && s0 <= s1 && s0 >= SCALE_GUARD[0] && s1 <= SCALE_GUARD[1]) {
            return Err(Error::Config(format!(
                "scale range {:?} must be ordered and inside {SCALE_GUARD:?}",
                self.scale_range
            )));
        }
        if self.patch_dims.contains(&0) {
            return Err(Error::Config("patch dims must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.probability) {
            return Err(Error::Config(format!(
                "probability {} must be in [0, 1]",
                self.probability
            )));
        }
        if !(self.bspline_max_disp_mm >= 0.0 && self.bspline_max_disp_mm.is_finite()) {
            return Err(Error::Config("B-spline displacement must be >= 0".into()));
        }
        check_bspline_grid(self.bspline_grid)
    }
}

fn check_bspline_grid(grid: [usize; 3]) -> Result<()> {
    if grid.iter().any(|&g| g < 4) {
        return Err(Error::Config(format!(
            "B-spline control grid {grid:?} needs at least 4 points per axis"
        )));
    }
    Ok(())
}

fn check_pair(v: &Volume3, m: &Mask3) -> Result<()> {
    if v.geometry() != m.geometry() {
        return Err(Error::Geometry(
            "image and mask must share dims, spacing and origin".into(),
        ));
    }
    Ok(())
}

/// Reverses voxel order along the selected axes.
pub fn flip(v: &Volume3, m: &Mask3, axes: [bool; 3]) -> Result<(Volume3, Mask3)> {
    check_pair(v, m)?;
    if axes == [false; 3] {
        return Ok((v.clone(), m.clone()));
    }
    let g = *v.geometry();
    let [nx, ny, nz] = g.dims;
    let src = |[i, j, k]: [usize; 3]| {
        g.linear_index(
            if axes[0] { nx - 1 - i } else { i },
            if axes[1] { ny - 1 - j } else { j },
            if axes[2] { nz - 1 - k } else { k },
        )
    };
    let img = Volume3::from_fn(g, |idx| v.voxels()[src(idx)])?;
    let mask = Mask3::from_fn(g, |idx| m.voxels()[src(idx)] == 1);
    Ok((img, mask))
}

/// Backward warp: output voxel at world `p` reads the inputs at `source(p)`.
fn warp(
    v: &Volume3,
    m: &Mask3,
    source: impl Fn([usize; 3], [f64; 3]) -> [f64; 3] + Sync,
) -> Result<(Volume3, Mask3)> {
    let g = *v.geometry();
    let [nx, ny, _] = g.dims;
    let mut img = vec![0f32; g.len()];
    let mut mask = vec![0u8; g.len()];
    img.par_chunks_mut(nx * ny)
        .zip(mask.par_chunks_mut(nx * ny))
        .enumerate()
        .for_each(|(k, (islice, mslice))| {
            for j in 0..ny {
                for i in 0..nx {
                    let idx = [i, j, k];
                    let p = g.index_to_world(idx.map(|x| x as f64));
                    let s = source(idx, p);
                    islice[i + nx * j] = sample(v, s, InterpMode::Trilinear) as f32;
                    mslice[i + nx * j] = sample_mask(m, s, InterpMode::NearestNeighbor) as u8;
                }
            }
        });
    Ok((Volume3::new(g, img)?, Mask3::new(g, mask)?))
}

/// In-plane rotation by `degrees` about the volume's xy center.
pub fn rotate_z(v: &Volume3, m: &Mask3, degrees: f64) -> Result<(Volume3, Mask3)> {
    check_pair(v, m)?;
    if !(degrees.abs() <= 180.0) {
        return Err(Error::Config(format!("rotation {degrees} deg outside [-180, 180]")));
    }
    if degrees == 0.0 {
        return Ok((v.clone(), m.clone()));
    }
    let c = v.geometry().center();
    let (sin, cos) = degrees.to_radians().sin_cos();
    warp(v, m, |_, p| {
        let dx = p[0] - c[0];
        let dy = p[1] - c[1];
        // inverse rotation
        [c[0] + cos * dx + sin * dy, c[1] - sin * dx + cos * dy, p[2]]
    })
}

/// Zoom about the volume center; `factor > 1` magnifies.
pub fn scale(v: &Volume3, m: &Mask3, factor: f64) -> Result<(Volume3, Mask3)> {
    check_pair(v, m)?;
    if !(SCALE_GUARD[0]..=SCALE_GUARD[1]).contains(&factor) {
        return Err(Error::Config(format!(
            "scale factor {factor} outside {SCALE_GUARD:?}"
        )));
    }
    if factor == 1.0 {
        return Ok((v.clone(), m.clone()));
    }
    let c = v.geometry().center();
    warp(v, m, |_, p| std::array::from_fn(|a| c[a] + (p[a] - c[a]) / factor))
}

/// Cubic uniform B-spline basis at fractional offset `u` in [0, 1).
fn cubic_basis(u: f64) -> [f64; 4] {
    let u2 = u * u;
    let u3 = u2 * u;
    [
        (1.0 - u).powi(3) / 6.0,
        (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0,
        (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0,
        u3 / 6.0,
    ]
}

/// Random free-form deformation driven by a cubic B-spline control grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BSplineField {
    grid: [usize; 3],
    /// Control point spacing in voxels per axis.
    step: [f64; 3],
    spacing: [f64; 3],
    /// Displacements in mm, x-fastest over control points.
    coef: Vec<[f64; 3]>,
}

impl BSplineField {
    /// Control points span the volume's voxel-center extent evenly; each gets
    /// an independent uniform displacement in `[-max_disp_mm, max_disp_mm]` per axis.
    pub fn random(
        geometry: &Geometry,
        grid: [usize; 3],
        max_disp_mm: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        check_bspline_grid(grid)?;
        let n: usize = grid.iter().product();
        let coef = (0..n)
            .map(|_| std::array::from_fn(|_| rng.random_range(-max_disp_mm..=max_disp_mm)))
            .collect();
        let step = std::array::from_fn(|a| {
            let extent = (geometry.dims[a] as f64 - 1.0).max(1.0);
            extent / (grid[a] - 1) as f64
        });
        Ok(Self {
            grid,
            step,
            spacing: geometry.spacing.as_array(),
            coef,
        })
    }

    fn axis_weights(&self, axis: usize, n: usize) -> Vec<([usize; 4], [f64; 4])> {
        let g = self.grid[axis] as i64;
        (0..n)
            .map(|i| {
                let t = i as f64 / self.step[axis];
                let base = t.floor();
                let w = cubic_basis(t - base);
                let idx = std::array::from_fn(|c| (base as i64 - 1 + c as i64).clamp(0, g - 1) as usize);
                (idx, w)
            })
            .collect()
    }

    /// Displacement (mm) at every voxel of a grid with `dims`, x-fastest.
    pub fn dense(&self, dims: [usize; 3]) -> Vec<[f64; 3]> {
        let [gx, gy, _] = self.grid;
        let wx = self.axis_weights(0, dims[0]);
        let wy = self.axis_weights(1, dims[1]);
        let wz = self.axis_weights(2, dims[2]);
        let at = |a: usize, b: usize, c: usize| self.coef[a + gx * (b + gy * c)];
        let add = |acc: &mut [f64; 3], v: [f64; 3], w: f64| {
            for d in 0..3 {
                acc[d] += w * v[d];
            }
        };
        let slices: Vec<Vec<[f64; 3]>> = wz
            .par_iter()
            .map(|(iz, bz)| {
                // contract z, then y per row, then x per voxel
                let mut cz = vec![[0.0; 3]; gx * gy];
                for b in 0..gy {
                    for a in 0..gx {
                        let mut acc = [0.0; 3];
                        for c in 0..4 {
                            add(&mut acc, at(a, b, iz[c]), bz[c]);
                        }
                        cz[a + gx * b] = acc;
                    }
                }
                let mut out = Vec::with_capacity(dims[0] * dims[1]);
                for (iy, by) in &wy {
                    let mut cyz = vec![[0.0; 3]; gx];
                    for (a, slot) in cyz.iter_mut().enumerate() {
                        for c in 0..4 {
                            add(slot, cz[a + gx * iy[c]], by[c]);
                        }
                    }
                    for (ix, bx) in &wx {
                        let mut acc = [0.0; 3];
                        for c in 0..4 {
                            add(&mut acc, cyz[ix[c]], bx[c]);
                        }
                        out.push(acc);
                    }
                }
                out
            })
            .collect();
        slices.concat()
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }
}

/// Warps image and mask with a random B-spline displacement field.
pub fn bspline_deform(
    v: &Volume3,
    m: &Mask3,
    grid: [usize; 3],
    max_disp_mm: f64,
    rng: &mut impl Rng,
) -> Result<(Volume3, Mask3)> {
    check_pair(v, m)?;
    if !(max_disp_mm >= 0.0 && max_disp_mm.is_finite()) {
        return Err(Error::Config(format!("invalid B-spline displacement {max_disp_mm}")));
    }
    let field = BSplineField::random(v.geometry(), grid, max_disp_mm, rng)?;
    if max_disp_mm == 0.0 {
        return Ok((v.clone(), m.clone()));
    }
    let g = *v.geometry();
    let disp = field.dense(g.dims);
    warp(v, m, |[i, j, k], p| {
        let d = disp[g.linear_index(i, j, k)];
        [p[0] + d[0], p[1] + d[1], p[2] + d[2]]
    })
}

/// Uniformly random corner for a `patch` window inside `dims` (each `dims >= patch`).
pub fn patch_corner(dims: [usize; 3], patch: [usize; 3], rng: &mut impl Rng) -> [usize; 3] {
    std::array::from_fn(|a| rng.random_range(0..=dims[a] - patch[a]))
}

/// Zero-pads symmetrically up to `min_dims`, shifting the origin so world
/// positions of existing voxels do not move.
fn pad_to(v: &Volume3, m: &Mask3, min_dims: [usize; 3]) -> Result<(Volume3, Mask3)> {
    let g = *v.geometry();
    if (0..3).all(|a| g.dims[a] >= min_dims[a]) {
        return Ok((v.clone(), m.clone()));
    }
    let lo: [usize; 3] = std::array::from_fn(|a| min_dims[a].saturating_sub(g.dims[a]) / 2);
    let dims: [usize; 3] = std::array::from_fn(|a| g.dims[a].max(min_dims[a]));
    let s = g.spacing.as_array();
    let origin = std::array::from_fn(|a| g.origin[a] - lo[a] as f64 * s[a]);
    let pg = Geometry::new(dims, g.spacing, origin)?;
    let inside = |[i, j, k]: [usize; 3]| -> Option<usize> {
        let (i, j, k) = (i.checked_sub(lo[0])?, j.checked_sub(lo[1])?, k.checked_sub(lo[2])?);
        (i < g.dims[0] && j < g.dims[1] && k < g.dims[2]).then(|| g.linear_index(i, j, k))
    };
    let img = Volume3::from_fn(pg, |idx| inside(idx).map_or(0.0, |n| v.voxels()[n]))?;
    let mask = Mask3::from_fn(pg, |idx| inside(idx).is_some_and(|n| m.voxels()[n] == 1));
    Ok((img, mask))
}

fn crop(v: &Volume3, m: &Mask3, corner: [usize; 3], patch: [usize; 3]) -> Result<(Volume3, Mask3)> {
    let g = *v.geometry();
    let origin = g.index_to_world(corner.map(|c| c as f64));
    let pg = Geometry::new(patch, g.spacing, origin)?;
    let src = |[i, j, k]: [usize; 3]| g.linear_index(i + corner[0], j + corner[1], k + corner[2]);
    let img = Volume3::from_fn(pg, |idx| v.voxels()[src(idx)])?;
    let mask = Mask3::from_fn(pg, |idx| m.voxels()[src(idx)] == 1);
    Ok((img, mask))
}

/// Crops the same uniformly placed patch from image and mask.
pub fn random_patch(
    v: &Volume3,
    m: &Mask3,
    patch_dims: [usize; 3],
    rng: &mut impl Rng,
) -> Result<(Volume3, Mask3)> {
    check_pair(v, m)?;
    if patch_dims.contains(&0) {
        return Err(Error::Config("patch dims must be positive".into()));
    }
    let (pv, pm) = pad_to(v, m, patch_dims)?;
    let corner = patch_corner(pv.dims(), patch_dims, rng);
    crop(&pv, &pm, corner, patch_dims)
}

/// Full online augmentation of one training sample.
///
/// Transform parameters come from `rng.stream(TRANSFORM_STREAM)` and the patch
/// corner from `rng.stream(PATCH_STREAM)`, so disabling transforms does not
/// move the patch.
pub fn augment_sample(
    v: &Volume3,
    m: &Mask3,
    cfg: &AugmentConfig,
    rng: &SeededRng,
) -> Result<(Volume3, Mask3)> {
    cfg.validate()?;
    check_pair(v, m)?;
    let mut t = rng.stream(SeededRng::TRANSFORM_STREAM);
    let p = cfg.probability;

    let axes = cfg.flip_axes.map(|enabled| enabled && t.random_bool(p));
    let (mut img, mut mask) = flip(v, m, axes)?;

    if t.random_bool(p) {
        let deg = t.random_range(cfg.rot_z_deg[0]..=cfg.rot_z_deg[1]);
        (img, mask) = rotate_z(&img, &mask, deg)?;
    }
    if t.random_bool(p) {
        let f = t.random_range(cfg.scale_range[0]..=cfg.scale_range[1]);
        (img, mask) = scale(&img, &mask, f)?;
    }
    if t.random_bool(p) {
        (img, mask) = bspline_deform(&img, &mask, cfg.bspline_grid, cfg.bspline_max_disp_mm, &mut t)?;
    }
    random_patch(&img, &mask, cfg.patch_dims, &mut rng.stream(SeededRng::PATCH_STREAM))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::dice;
    use crate::phantom::{phantom_image, sphere_mask};
    use crate::volume::Spacing3;

    fn blob_pair(n: usize, radius_vox: f64) -> (Volume3, Mask3) {
        let g = Geometry::new([n, n, n / 2], Spacing3::new(1.0, 1.0, 2.0).unwrap(), [0.0; 3])
            .unwrap();
        let m = sphere_mask(g, g.center(), radius_vox);
        (phantom_image(&m, 1).unwrap(), m)
    }

    #[test]
    fn flip_examples() {
        let g = Geometry::new([4, 4, 4], Spacing3::default(), [0.0; 3]).unwrap();
        let m = Mask3::from_fn(g, |idx| idx == [0, 0, 0]);
        let v = m.to_volume();
        let (fv, fm) = flip(&v, &m, [true, false, false]).unwrap();
        assert_eq!(fm.get(3, 0, 0), 1);
        assert_eq!(fm.count(), 1);
        assert_eq!(fv.get(3, 0, 0), 1.0);
        let (v2, m2) = flip(&fv, &fm, [true, false, false]).unwrap();
        assert_eq!((v2, m2), (v.clone(), m.clone()));
        assert_eq!(flip(&v, &m, [false; 3]).unwrap(), (v, m));
    }

    #[test]
    fn mismatched_pair_is_rejected() {
        let g = Geometry::new([4, 4, 4], Spacing3::default(), [0.0; 3]).unwrap();
        let g2 = Geometry::new([4, 4, 5], Spacing3::default(), [0.0; 3]).unwrap();
        let v = Volume3::filled(g, 0.0);
        let m = Mask3::empty(g2);
        assert!(matches!(flip(&v, &m, [true; 3]), Err(Error::Geometry(_))));
        assert!(rotate_z(&v, &m, 10.0).is_err());
    }

    #[test]
    fn identity_parameters_pass_through() {
        let (v, m) = blob_pair(24, 7.0);
        assert_eq!(rotate_z(&v, &m, 0.0).unwrap(), (v.clone(), m.clone()));
        assert_eq!(scale(&v, &m, 1.0).unwrap(), (v.clone(), m.clone()));
        let mut rng = SeededRng::new(3).stream(0);
        assert_eq!(
            bspline_deform(&v, &m, [4, 4, 4], 0.0, &mut rng).unwrap(),
            (v.clone(), m.clone())
        );
    }

    #[test]
    fn rotation_round_trip_keeps_the_blob() {
        let (v, m) = blob_pair(48, 12.0);
        let (rv, rm) = rotate_z(&v, &m, 15.0).unwrap();
        let (_, back) = rotate_z(&rv, &rm, -15.0).unwrap();
        let d = dice(&m, &back).unwrap();
        assert!(d >= 0.95, "dice {d}");
        let change = (rm.count() as f64 - m.count() as f64).abs() / m.count() as f64;
        assert!(change < 0.10, "count change {change}");
    }

    #[test]
    fn scaling_changes_volume_cubically() {
        let (v, m) = blob_pair(64, 8.0);
        let (_, big) = scale(&v, &m, 2.0).unwrap();
        let ratio = big.count() as f64 / m.count() as f64;
        assert!((ratio - 8.0).abs() / 8.0 < 0.15, "ratio {ratio}");
        let (_, small) = scale(&v, &m, 0.75).unwrap();
        let expect = m.count() as f64 * 0.75f64.powi(3);
        assert!((small.count() as f64 - expect).abs() / expect < 0.15);
        assert!(scale(&v, &m, 2.5).is_err());
        assert!(scale(&v, &m, 0.4).is_err());
    }

    #[test]
    fn bspline_small_deformation() {
        let (v, m) = blob_pair(48, 12.0);
        let mut a = SeededRng::new(11).stream(0);
        let mut b = SeededRng::new(11).stream(0);
        let (v1, m1) = bspline_deform(&v, &m, [4, 4, 4], 2.0, &mut a).unwrap();
        let (v2, m2) = bspline_deform(&v, &m, [4, 4, 4], 2.0, &mut b).unwrap();
        assert_eq!((&v1, &m1), (&v2, &m2));
        assert_ne!(m1, m);
        let change = (m1.count() as f64 - m.count() as f64).abs() / m.count() as f64;
        assert!(change < 0.20, "count change {change}");
        assert!(bspline_deform(&v, &m, [3, 4, 4], 2.0, &mut a).is_err());
    }

    #[test]
    fn bspline_field_matches_direct_tensor_sum() {
        let g = Geometry::new([9, 7, 5], Spacing3::default(), [0.0; 3]).unwrap();
        let mut rng = SeededRng::new(5).stream(0);
        let f = BSplineField::random(&g, [4, 5, 4], 3.0, &mut rng).unwrap();
        let dense = f.dense(g.dims);
        // direct 64-term evaluation
        for (n, got) in dense.iter().enumerate() {
            let idx = g.index_of(n);
            let mut want = [0.0; 3];
            let per_axis: Vec<([usize; 4], [f64; 4])> = (0..3)
                .map(|a| {
                    let t = idx[a] as f64 / f.step[a];
                    let base = t.floor();
                    let u = t - base;
                    let w = [
                        (1.0 - u).powi(3) / 6.0,
                        (3.0 * u.powi(3) - 6.0 * u * u + 4.0) / 6.0,
                        (-3.0 * u.powi(3) + 3.0 * u * u + 3.0 * u + 1.0) / 6.0,
                        u.powi(3) / 6.0,
                    ];
                    let ids = std::array::from_fn(|c| {
                        (base as i64 - 1 + c as i64).clamp(0, f.grid[a] as i64 - 1) as usize
                    });
                    (ids, w)
                })
                .collect();
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        let w = per_axis[0].1[a] * per_axis[1].1[b] * per_axis[2].1[c];
                        let cp = f.coef[per_axis[0].0[a]
                            + f.grid[0] * (per_axis[1].0[b] + f.grid[1] * per_axis[2].0[c])];
                        for d in 0..3 {
                            want[d] += w * cp[d];
                        }
                    }
                }
            }
            for d in 0..3 {
                assert!((got[d] - want[d]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn patch_of_exact_size_is_whole_volume() {
        let (v, m) = blob_pair(16, 4.0);
        let dims = v.dims();
        let (pv, pm) = random_patch(&v, &m, dims, &mut SeededRng::new(1).stream(1)).unwrap();
        assert_eq!((pv, pm), (v, m));
    }

    #[test]
    fn small_volumes_are_padded() {
        let (v, m) = blob_pair(16, 4.0);
        let (pv, pm) =
            random_patch(&v, &m, [20, 16, 10], &mut SeededRng::new(1).stream(1)).unwrap();
        assert_eq!(pv.dims(), [20, 16, 10]);
        assert_eq!(pm.count(), m.count());
        // padding keeps world positions: first original voxel sits 2 voxels in
        assert_eq!(pv.origin()[0], -2.0);
    }

    #[test]
    fn patch_geometry_follows_corner() {
        let (v, m) = blob_pair(32, 6.0);
        let mut rng = SeededRng::new(9).stream(1);
        let corner = patch_corner(v.dims(), [8, 8, 4], &mut SeededRng::new(9).stream(1));
        let (pv, _) = random_patch(&v, &m, [8, 8, 4], &mut rng).unwrap();
        let expect = v.geometry().index_to_world(corner.map(|c| c as f64));
        assert_eq!(pv.origin(), expect);
        assert_eq!(pv.get(0, 0, 0), v.get(corner[0], corner[1], corner[2]));
    }

    #[test]
    fn config_validation() {
        assert!(AugmentConfig::default().validate().is_ok());
        let bad = AugmentConfig {
            rot_z_deg: [-200.0, 15.0],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = AugmentConfig {
            bspline_grid: [4, 3, 4],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = AugmentConfig {
            probability: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
