//! Contrast-limited adaptive histogram equalization in three dimensions.
//!
//! The volume is split into a grid of tiles. Each tile gets a histogram over
//! the global intensity range, clipped and turned into a lookup table. Output
//! voxels blend the lookup tables of the (up to) eight surrounding tile centers
//! trilinearly, clamping to the outermost tiles at the volume border.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::Volume3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClaheParams {
    pub tiles: [usize; 3],
    pub bins: usize,
    /// Multiple of the uniform bin height `tile voxels / bins`.
    pub clip_limit: f64,
}

impl Default for ClaheParams {
    fn default() -> Self {
        Self {
            tiles: [8, 8, 2],
            bins: 256,
            clip_limit: 4.0,
        }
    }
}

impl ClaheParams {
    pub fn validate(&self) -> Result<()> {
        if self.tiles.contains(&0) {
            return Err(Error::Config(format!("tile grid {:?} must be positive", self.tiles)));
        }
        if self.bins < 2 {
            return Err(Error::Config(format!("need at least 2 bins, got {}", self.bins)));
        }
        if !(self.clip_limit > 0.0 && self.clip_limit.is_finite()) {
            return Err(Error::Config(format!(
                "clip limit {} must be positive",
                self.clip_limit
            )));
        }
        Ok(())
    }
}

/// Caps every bin at `limit` and spreads the total excess evenly over all bins
/// in one pass.
pub fn clip_histogram(hist: &[f64], limit: f64) -> Vec<f64> {
    let excess: f64 = hist.iter().map(|&h| (h - limit).max(0.0)).sum();
    let share = excess / hist.len() as f64;
    hist.iter().map(|&h| h.min(limit) + share).collect()
}

/// Normalized cumulative histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct Mapping {
    pub lut: Vec<f64>,
    /// The histogram was empty; `lut` is the ramp `(i + 1) / bins`.
    pub degenerate: bool,
}

pub fn equalize_mapping(hist: &[f64]) -> Mapping {
    let total: f64 = hist.iter().sum();
    let n = hist.len();
    if !(total > 0.0) {
        return Mapping {
            lut: (0..n).map(|i| (i + 1) as f64 / n as f64).collect(),
            degenerate: true,
        };
    }
    let mut acc = 0.0;
    let mut lut: Vec<f64> = hist
        .iter()
        .map(|&h| {
            acc += h;
            (acc / total).min(1.0)
        })
        .collect();
    if let Some(last) = lut.last_mut() {
        *last = 1.0;
    }
    Mapping {
        lut,
        degenerate: false,
    }
}

/// Bin index of `x` over `[lo, hi]`; everything lands in bin 0 when the range is empty.
fn bin_of(x: f32, lo: f32, hi: f32, bins: usize) -> usize {
    if hi <= lo {
        return 0;
    }
    let t = ((x - lo) as f64 / (hi - lo) as f64 * bins as f64).floor();
    (t.max(0.0) as usize).min(bins - 1)
}

/// Tile boundaries along one axis: `n` voxels split into `t` near-equal runs.
fn tile_bounds(n: usize, t: usize) -> Vec<(usize, usize)> {
    (0..t).map(|i| (i * n / t, (i + 1) * n / t)).collect()
}

/// Per-axis tile index pair and blend weight for every voxel position.
fn blend_table(bounds: &[(usize, usize)], n: usize) -> Vec<(usize, usize, f64)> {
    let centers: Vec<f64> = bounds
        .iter()
        .map(|&(s, e)| (s + e - 1) as f64 / 2.0)
        .collect();
    let last = centers.len() - 1;
    (0..n)
        .map(|i| {
            let x = i as f64;
            if x <= centers[0] {
                return (0, 0, 0.0);
            }
            if x >= centers[last] {
                return (last, last, 0.0);
            }
            let t = centers.partition_point(|&c| c <= x) - 1;
            (t, t + 1, (x - centers[t]) / (centers[t + 1] - centers[t]))
        })
        .collect()
}

/// Lookup tables of every tile, x-fastest over the tile grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TileMappings {
    pub tiles: [usize; 3],
    pub bounds: [Vec<(usize, usize)>; 3],
    pub range: (f32, f32),
    pub mappings: Vec<Mapping>,
}

impl TileMappings {
    pub fn compute(v: &Volume3, p: &ClaheParams) -> Result<Self> {
        p.validate()?;
        let dims = v.dims();
        for a in 0..3 {
            if dims[a] / p.tiles[a] < 2 {
                return Err(Error::Config(format!(
                    "{} tiles along axis {a} leave fewer than 2 of {} voxels per tile",
                    p.tiles[a], dims[a]
                )));
            }
        }
        let bounds: [Vec<(usize, usize)>; 3] = std::array::from_fn(|a| tile_bounds(dims[a], p.tiles[a]));
        let (lo, hi) = v.min_max();
        let [tx, ty, tz] = p.tiles;
        let g = v.geometry();
        let mappings = (0..tx * ty * tz)
            .into_par_iter()
            .map(|t| {
                let (bx, by, bz) = (bounds[0][t % tx], bounds[1][(t / tx) % ty], bounds[2][t / (tx * ty)]);
                let mut hist = vec![0.0; p.bins];
                for k in bz.0..bz.1 {
                    for j in by.0..by.1 {
                        let row = g.linear_index(0, j, k);
                        for &x in &v.voxels()[row + bx.0..row + bx.1] {
                            hist[bin_of(x, lo, hi, p.bins)] += 1.0;
                        }
                    }
                }
                let count = ((bx.1 - bx.0) * (by.1 - by.0) * (bz.1 - bz.0)) as f64;
                let limit = p.clip_limit * count / p.bins as f64;
                equalize_mapping(&clip_histogram(&hist, limit))
            })
            .collect();
        Ok(Self {
            tiles: p.tiles,
            bounds,
            range: (lo, hi),
            mappings,
        })
    }

    pub fn mapping(&self, tx: usize, ty: usize, tz: usize) -> &Mapping {
        &self.mappings[tx + self.tiles[0] * (ty + self.tiles[1] * tz)]
    }
}

/// Applies MCLAHE; the result lies in `[0, 1]` on the input geometry.
pub fn mclahe(v: &Volume3, p: &ClaheParams) -> Result<Volume3> {
    let maps = TileMappings::compute(v, p)?;
    let dims = v.dims();
    let blend: [Vec<(usize, usize, f64)>; 3] = std::array::from_fn(|a| blend_table(&maps.bounds[a], dims[a]));
    let (lo, hi) = maps.range;
    let [nx, ny, _] = dims;
    let mut out = vec![0f32; v.voxels().len()];
    out.par_chunks_mut(nx * ny)
        .enumerate()
        .for_each(|(k, slice)| {
            let (z0, z1, wz) = blend[2][k];
            for j in 0..ny {
                let (y0, y1, wy) = blend[1][j];
                for i in 0..nx {
                    let (x0, x1, wx) = blend[0][i];
                    let b = bin_of(v.get(i, j, k), lo, hi, p.bins);
                    let at = |x, y, z| maps.mapping(x, y, z).lut[b];
                    let lerp = |a: f64, c: f64, w: f64| if w == 0.0 { a } else { a + (c - a) * w };
                    let c00 = lerp(at(x0, y0, z0), at(x1, y0, z0), wx);
                    let c10 = lerp(at(x0, y1, z0), at(x1, y1, z0), wx);
                    let c01 = lerp(at(x0, y0, z1), at(x1, y0, z1), wx);
                    let c11 = lerp(at(x0, y1, z1), at(x1, y1, z1), wx);
                    let val = lerp(lerp(c00, c10, wy), lerp(c01, c11, wy), wz);
                    slice[i + nx * j] = val.clamp(0.0, 1.0) as f32;
                }
            }
        });
    Volume3::new(*v.geometry(), out)
}

/// Shannon entropy in bits of the intensity histogram over a fixed range.
pub fn histogram_entropy(v: &Volume3, range: (f32, f32), bins: usize) -> f64 {
    let bins = bins.max(1);
    let mut hist = vec![0usize; bins];
    for &x in v.voxels() {
        hist[bin_of(x, range.0, range.1, bins)] += 1;
    }
    let n = v.voxels().len() as f64;
    hist.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let q = c as f64 / n;
            -q * q.log2()
        })
        .sum()
}
