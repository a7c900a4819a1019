//! Volume resampling, reconstruction Dice and segmentation-evaluation toolkit.
//!
//! The crate is organised bottom-up:
//!
//! * [`volume`] and [`metaimage`]: geometric containers and `.mhd/.raw` I/O;
//! * [`resample`]: interpolation, spacing strategies and round-trip reconstruction;
//! * [`metrics`] and [`stats`]: overlap scores, losses, reconstruction Dice and the paired t-test;
//! * [`clahe`]: 3D contrast-limited adaptive histogram equalization;
//! * [`augment`]: joint image/mask spatial augmentation and patch sampling;
//! * [`sliding`]: sliding-window prediction through an abstract predictor;
//! * [`study`]: the resolution study, its reports and box plot;
//! * [`phantom`]: synthetic test objects and datasets.

pub mod augment;
pub mod clahe;
pub mod error;
pub mod metaimage;
pub mod metrics;
pub mod phantom;
pub mod resample;
pub mod sliding;
pub mod stats;
pub mod study;
pub mod volume;

pub use error::{Error, ErrorClass, Result};
pub use volume::{Geometry, Mask3, Spacing3, Volume3, VoxelGrid};

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool
/// when `None`. Results of this crate do not depend on the worker count.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(Error::Config("worker count must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
