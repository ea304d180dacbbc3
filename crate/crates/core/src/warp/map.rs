use crate::error::{invalid, Result};
use crate::geometry::{Camera, PixelCoord, Rig};

use super::{assumed_point, cosine_weight, DepthAssumption};

/// One source lookup for a virtual pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpEntry {
    pub camera: u16,
    pub coord: PixelCoord,
    pub weight: f64,
}

/// Precomputed virtual-pixel to source-pixel lookup table with blend weights.
///
/// Entries are stored contiguously in row-major pixel order; within a pixel
/// they are sorted by source camera index.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpMap {
    width: u32,
    height: u32,
    source_sizes: Vec<(u32, u32)>,
    offsets: Vec<usize>,
    entries: Vec<WarpEntry>,
    totals: Vec<f64>,
}

impl WarpMap {
    /// Assembles a map from per-pixel entry lists, validating every invariant.
    pub fn from_pixel_entries(
        width: u32,
        height: u32,
        source_sizes: Vec<(u32, u32)>,
        pixels: Vec<Vec<WarpEntry>>,
    ) -> Result<Self> {
        let n = width as usize * height as usize;
        if pixels.len() != n {
            return Err(invalid(format!("expected {n} pixel lists, got {}", pixels.len())));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut entries = Vec::new();
        let mut totals = Vec::with_capacity(n);
        offsets.push(0);
        for list in pixels {
            let mut total = 0.0;
            for e in &list {
                let Some(&(w, h)) = source_sizes.get(e.camera as usize) else {
                    return Err(invalid(format!("entry references unknown camera {}", e.camera)));
                };
                let inside = e.coord.u >= 0.0 && e.coord.u < w as f64 && e.coord.v >= 0.0 && e.coord.v < h as f64;
                if !inside {
                    return Err(invalid(format!("entry coordinate {:?} outside source image", e.coord)));
                }
                if !(e.weight > 0.0 && e.weight.is_finite()) {
                    return Err(invalid(format!("entry weight {} must be positive", e.weight)));
                }
                total += e.weight;
            }
            entries.extend(list);
            offsets.push(entries.len());
            totals.push(total);
        }
        Ok(Self { width, height, source_sizes, offsets, entries, totals })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn source_count(&self) -> usize {
        self.source_sizes.len()
    }

    pub fn source_sizes(&self) -> &[(u32, u32)] {
        &self.source_sizes
    }

    fn pixel_index(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub fn entries_at(&self, x: u32, y: u32) -> &[WarpEntry] {
        let i = self.pixel_index(x, y);
        &self.entries[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Sum of entry weights at a pixel.
    pub fn total_weight(&self, x: u32, y: u32) -> f64 {
        self.totals[self.pixel_index(x, y)]
    }

    pub fn entry_count(&self) -> usize {
        self.entries.len()
    }

    /// Fraction of virtual pixels with at least one source.
    pub fn coverage(&self) -> f64 {
        let covered = self.offsets.windows(2).filter(|w| w[1] > w[0]).count();
        covered as f64 / self.totals.len().max(1) as f64
    }
}

/// Source entries for one virtual pixel, in camera-index order.
pub(crate) fn pixel_entries(
    virtual_cam: &Camera,
    sources: &[Camera],
    pixel: PixelCoord,
    assumption: &DepthAssumption,
    weight_exponent: f64,
) -> Vec<WarpEntry> {
    let assumed = assumed_point(virtual_cam, pixel, assumption);
    let world = virtual_cam.to_world(&assumed.point);
    let ray = virtual_cam.unproject_ray(pixel).direction;
    let mut out = Vec::new();
    for (j, src) in sources.iter().enumerate() {
        let Some((coord, _)) = src.project(&world) else { continue };
        let weight = cosine_weight(ray.dot(&src.optical_axis()), weight_exponent);
        if weight > 0.0 {
            out.push(WarpEntry { camera: j as u16, coord, weight });
        }
    }
    out
}

/// Builds the lookup table for one virtual camera against a source rig.
pub fn build_warp_map(
    virtual_cam: &Camera,
    source_rig: &Rig,
    assumption: &DepthAssumption,
    weight_exponent: f64,
) -> Result<WarpMap> {
    if source_rig.len() > u16::MAX as usize {
        return Err(invalid("too many source cameras for a warp map"));
    }
    if !(weight_exponent.is_finite() && weight_exponent >= 0.0) {
        return Err(invalid(format!("weight exponent {weight_exponent} must be >= 0")));
    }
    let k = virtual_cam.intrinsics;
    let sources = source_rig.cameras();
    let row = |y: u32| -> Vec<Vec<WarpEntry>> {
        (0..k.width)
            .map(|x| pixel_entries(virtual_cam, sources, PixelCoord::center_of(x, y), assumption, weight_exponent))
            .collect()
    };

    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<Vec<WarpEntry>>> = {
        use rayon::prelude::*;
        (0..k.height).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<Vec<WarpEntry>>> = (0..k.height).map(row).collect();

    let sizes = sources.iter().map(|c| (c.intrinsics.width, c.intrinsics.height)).collect();
    WarpMap::from_pixel_entries(k.width, k.height, sizes, rows.into_iter().flatten().collect())
}
