//! Dense 3D containers with physical geometry.
//!
//! Voxels are stored x-fastest (index `i + nx * (j + ny * k)`), which is the
//! MetaImage raw layout. Voxel `(i, j, k)` has its center at
//! `origin + (i, j, k) * spacing`; there is no direction matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical voxel size in millimeters along x, y and z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct Spacing3([f64; 3]);

impl Spacing3 {
    pub fn new(sx: f64, sy: f64, sz: f64) -> Result<Self> {
        Self::try_from([sx, sy, sz])
    }

    pub fn isotropic(s: f64) -> Result<Self> {
        Self::new(s, s, s)
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.0
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn z(&self) -> f64 {
        self.0[2]
    }

    /// Componentwise product with a positive factor. Panics if the result
    /// would not be a valid spacing, which cannot happen for finite `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::try_from(self.0.map(|s| s * factor)).expect("scaled spacing must stay positive")
    }
}

impl Default for Spacing3 {
    fn default() -> Self {
        Spacing3([1.0; 3])
    }
}

impl TryFrom<[f64; 3]> for Spacing3 {
    type Error = Error;

    fn try_from(s: [f64; 3]) -> Result<Self> {
        if s.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(Spacing3(s))
        } else {
            Err(Error::InvalidSpacing(s))
        }
    }
}

impl From<Spacing3> for [f64; 3] {
    fn from(s: Spacing3) -> Self {
        s.0
    }
}

impl std::fmt::Display for Spacing3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.0[0], self.0[1], self.0[2])
    }
}

/// Grid shape plus physical placement, shared by images and masks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub dims: [usize; 3],
    pub spacing: Spacing3,
    pub origin: [f64; 3],
}

impl Geometry {
    pub fn new(dims: [usize; 3], spacing: Spacing3, origin: [f64; 3]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::Geometry(format!("dims {dims:?} must all be >= 1")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::Geometry(format!("origin {origin:?} is not finite")));
        }
        Ok(Self {
            dims,
            spacing,
            origin,
        })
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn linear_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    /// Inverse of [`Geometry::linear_index`].
    #[inline]
    pub fn index_of(&self, linear: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [linear % nx, (linear / nx) % ny, linear / (nx * ny)]
    }

    pub fn voxel_to_world(&self, index: [i64; 3]) -> Result<[f64; 3]> {
        let in_range = index
            .iter()
            .zip(self.dims)
            .all(|(&i, n)| i >= 0 && (i as u64) < n as u64);
        if !in_range {
            return Err(Error::OutOfBounds {
                i: index[0],
                j: index[1],
                k: index[2],
                dims: self.dims,
            });
        }
        Ok(self.index_to_world(index.map(|i| i as f64)))
    }

    /// Affine map without bounds checks; accepts fractional indices.
    #[inline]
    pub fn index_to_world(&self, index: [f64; 3]) -> [f64; 3] {
        let s = self.spacing.as_array();
        [
            self.origin[0] + index[0] * s[0],
            self.origin[1] + index[1] * s[1],
            self.origin[2] + index[2] * s[2],
        ]
    }

    /// Continuous voxel coordinates of a world point. Points outside the grid
    /// are allowed.
    #[inline]
    pub fn world_to_voxel(&self, point: [f64; 3]) -> [f64; 3] {
        let s = self.spacing.as_array();
        [
            (point[0] - self.origin[0]) / s[0],
            (point[1] - self.origin[1]) / s[1],
            (point[2] - self.origin[2]) / s[2],
        ]
    }

    /// Physical center of the grid (midpoint between the first and last voxel centers).
    pub fn center(&self) -> [f64; 3] {
        self.index_to_world(self.dims.map(|n| (n as f64 - 1.0) / 2.0))
    }

    pub(crate) fn ensure_same_dims(&self, other: &Geometry) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::Geometry(format!(
                "dims {:?} and {:?} differ",
                self.dims, other.dims
            )));
        }
        Ok(())
    }
}

/// Scalar image volume (for example an MRI acquisition or a probability map).
#[derive(Debug, Clone, PartialEq)]
pub struct Volume3 {
    geometry: Geometry,
    voxels: Vec<f32>,
}

impl Volume3 {
    pub fn new(geometry: Geometry, voxels: Vec<f32>) -> Result<Self> {
        if voxels.len() != geometry.len() {
            return Err(Error::Geometry(format!(
                "{} voxels supplied for dims {:?}",
                voxels.len(),
                geometry.dims
            )));
        }
        if let Some(pos) = voxels.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "voxel {:?} is not finite",
                geometry.index_of(pos)
            )));
        }
        Ok(Self { geometry, voxels })
    }

    pub fn filled(geometry: Geometry, value: f32) -> Self {
        Self {
            voxels: vec![value; geometry.len()],
            geometry,
        }
    }

    /// Builds a volume by evaluating `f` at every voxel index.
    pub fn from_fn(geometry: Geometry, mut f: impl FnMut([usize; 3]) -> f32) -> Result<Self> {
        let voxels = (0..geometry.len()).map(|n| f(geometry.index_of(n))).collect();
        Self::new(geometry, voxels)
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geometry.dims
    }

    pub fn spacing(&self) -> Spacing3 {
        self.geometry.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.geometry.origin
    }

    pub fn voxels(&self) -> &[f32] {
        &self.voxels
    }

    pub fn into_voxels(self) -> Vec<f32> {
        self.voxels
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f32 {
        self.voxels[self.geometry.linear_index(i, j, k)]
    }

    pub fn voxel_to_world(&self, index: [i64; 3]) -> Result<[f64; 3]> {
        self.geometry.voxel_to_world(index)
    }

    pub fn world_to_voxel(&self, point: [f64; 3]) -> [f64; 3] {
        self.geometry.world_to_voxel(point)
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.voxels
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Voxels `>= threshold` become foreground.
    pub fn binarize(&self, threshold: f64) -> Mask3 {
        Mask3 {
            geometry: self.geometry,
            voxels: self
                .voxels
                .iter()
                .map(|&v| u8::from(f64::from(v) >= threshold))
                .collect(),
        }
    }
}

/// Binary segmentation sharing the [`Volume3`] geometry model.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask3 {
    geometry: Geometry,
    voxels: Vec<u8>,
}

impl Mask3 {
    pub fn new(geometry: Geometry, voxels: Vec<u8>) -> Result<Self> {
        if voxels.len() != geometry.len() {
            return Err(Error::Geometry(format!(
                "{} voxels supplied for dims {:?}",
                voxels.len(),
                geometry.dims
            )));
        }
        if let Some(pos) = voxels.iter().position(|&v| v > 1) {
            return Err(Error::Domain(format!(
                "mask voxel {:?} has value {}, expected 0 or 1",
                geometry.index_of(pos),
                voxels[pos]
            )));
        }
        Ok(Self { geometry, voxels })
    }

    pub fn empty(geometry: Geometry) -> Self {
        Self {
            voxels: vec![0; geometry.len()],
            geometry,
        }
    }

    pub fn from_fn(geometry: Geometry, mut f: impl FnMut([usize; 3]) -> bool) -> Self {
        let voxels = (0..geometry.len())
            .map(|n| u8::from(f(geometry.index_of(n))))
            .collect();
        Self { geometry, voxels }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn dims(&self) -> [usize; 3] {
        self.geometry.dims
    }

    pub fn spacing(&self) -> Spacing3 {
        self.geometry.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.geometry.origin
    }

    pub fn voxels(&self) -> &[u8] {
        &self.voxels
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> u8 {
        self.voxels[self.geometry.linear_index(i, j, k)]
    }

    pub fn count(&self) -> usize {
        self.voxels.iter().map(|&v| v as usize).sum()
    }

    pub fn is_all_background(&self) -> bool {
        self.voxels.iter().all(|&v| v == 0)
    }

    pub fn voxel_to_world(&self, index: [i64; 3]) -> Result<[f64; 3]> {
        self.geometry.voxel_to_world(index)
    }

    pub fn world_to_voxel(&self, point: [f64; 3]) -> [f64; 3] {
        self.geometry.world_to_voxel(point)
    }

    /// Mask as a 0.0/1.0 image, e.g. for trilinear resampling.
    pub fn to_volume(&self) -> Volume3 {
        Volume3 {
            geometry: self.geometry,
            voxels: self.voxels.iter().map(|&v| f32::from(v)).collect(),
        }
    }
}

/// Read access to any voxel grid, used by writers that accept both images and masks.
pub trait VoxelGrid {
    fn geometry(&self) -> &Geometry;
    fn value(&self, linear: usize) -> f64;
}

impl VoxelGrid for Volume3 {
    fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    fn value(&self, linear: usize) -> f64 {
        f64::from(self.voxels[linear])
    }
}

impl VoxelGrid for Mask3 {
    fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    fn value(&self, linear: usize) -> f64 {
        f64::from(self.voxels[linear])
    }
}
