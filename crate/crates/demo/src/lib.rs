//! Browser bindings for three interactive views: reconstruction Dice of a
//! synthetic blob, an MCLAHE slice preview and a sliding-window coverage map.

use rdsc_core::augment::SeededRng;
use rdsc_core::clahe::{mclahe, ClaheParams};
use rdsc_core::metrics::rdsc;
use rdsc_core::phantom::{phantom_image, Blob};
use rdsc_core::resample::{InterpMode, ResolutionStrategy};
use rdsc_core::sliding::{coverage_counts, WindowSpec};
use rdsc_core::{Geometry, Spacing3};
use wasm_bindgen::prelude::*;

fn js_err(e: rdsc_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Field of view of the explorer volume in millimeters.
const FOV_MM: [f64; 3] = [80.0, 80.0, 72.0];

fn explorer_geometry(spacing: [f64; 3]) -> Result<Geometry, rdsc_core::Error> {
    let s = Spacing3::try_from(spacing)?;
    let dims = std::array::from_fn(|a| ((FOV_MM[a] / spacing[a]).round() as usize).clamp(4, 256));
    Geometry::new(dims, s, [0.0; 3])
}

/// rDSC of a random blob with the given mean radius under every study
/// strategy, as JSON `[{"strategy": ..., "rdsc": ...}, ...]`.
#[wasm_bindgen]
pub fn rdsc_explorer(radius_mm: f64, sx: f64, sy: f64, sz: f64, seed: u64) -> Result<String, JsError> {
    let g = explorer_geometry([sx, sy, sz]).map_err(js_err)?;
    let mut rng = SeededRng::new(seed).stream(0);
    let mut center = g.center();
    center[2] += 0.37 * sz;
    let blob = Blob::random(&mut rng, center, [radius_mm, radius_mm * 0.85, radius_mm * 0.8]);
    let m = blob.rasterize(g);
    let rows = ResolutionStrategy::study_set()
        .into_iter()
        .map(|s| {
            rdsc(&m, s, InterpMode::threshold())
                .map(|v| format!("{{\"strategy\":\"{s}\",\"rdsc\":{v}}}"))
                .map_err(js_err)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(format!(
        "{{\"dims\":[{},{},{}],\"foreground\":{},\"rows\":[{}]}}",
        g.dims[0],
        g.dims[1],
        g.dims[2],
        m.count(),
        rows.join(",")
    ))
}

/// Middle axial slice of a low-contrast phantom before and after MCLAHE,
/// each rescaled to `[0, 1]`; the first `n * n` values are the input.
#[wasm_bindgen]
pub fn mclahe_preview(n: usize, tiles_xy: usize, clip_limit: f64, seed: u64) -> Result<Vec<f32>, JsError> {
    let depth = 8;
    let g = Geometry::new([n, n, depth], Spacing3::new(0.625, 0.625, 3.6).map_err(js_err)?, [0.0; 3])
        .map_err(js_err)?;
    let half = n as f64 * 0.625 / 2.0;
    let blob = Blob::random(&mut SeededRng::new(seed).stream(0), g.center(), [half * 0.5, half * 0.4, 9.0]);
    let img = phantom_image(&blob.rasterize(g), seed).map_err(js_err)?;
    let params = ClaheParams {
        tiles: [tiles_xy, tiles_xy, 2],
        clip_limit,
        ..ClaheParams::default()
    };
    let out = mclahe(&img, &params).map_err(js_err)?;
    let k = depth / 2;
    let slice = |v: &rdsc_core::Volume3| -> Vec<f32> {
        let s = &v.voxels()[k * n * n..(k + 1) * n * n];
        let (lo, hi) = s.iter().fold((f32::MAX, f32::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        s.iter().map(|&x| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 }).collect()
    };
    let mut both = slice(&img);
    both.extend(slice(&out));
    Ok(both)
}

/// Number of windows covering each voxel of an `nx * ny` plane, x fastest.
#[wasm_bindgen]
pub fn coverage_map(nx: usize, ny: usize, wx: usize, wy: usize, sx: usize, sy: usize) -> Result<Vec<u32>, JsError> {
    let spec = WindowSpec::new([wx, wy, 1], [sx, sy, 1]).map_err(js_err)?;
    coverage_counts([nx.max(wx), ny.max(wy), 1], &spec).map_err(js_err)
}
