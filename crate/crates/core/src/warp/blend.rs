use crate::error::{invalid, Result};
use crate::geometry::PixelCoord;
use crate::image::ImageBuffer;

use super::WarpMap;

/// Source sampling used when blending.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    #[default]
    Bilinear,
    Nearest,
}

impl std::str::FromStr for Sampling {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bilinear" => Ok(Self::Bilinear),
            "nearest" => Ok(Self::Nearest),
            other => Err(invalid(format!("unknown sampling {other:?}"))),
        }
    }
}

impl std::fmt::Display for Sampling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Bilinear => "bilinear",
            Self::Nearest => "nearest",
        })
    }
}

/// Bilinear sample at a continuous coordinate with edge clamping. Integer
/// pixel centers sit at `+0.5`, so sampling exactly there returns the stored
/// value unchanged.
pub fn bilinear_sample(img: &ImageBuffer, at: PixelCoord) -> [f64; 3] {
    let x = at.u - 0.5;
    let y = at.v - 0.5;
    let x0 = x.floor();
    let y0 = y.floor();
    let tx = x - x0;
    let ty = y - y0;
    let max_x = img.width() as i64 - 1;
    let max_y = img.height() as i64 - 1;
    let cx = |i: i64| i.clamp(0, max_x) as u32;
    let cy = |j: i64| j.clamp(0, max_y) as u32;
    let (xa, xb) = (cx(x0 as i64), cx(x0 as i64 + 1));
    let (ya, yb) = (cy(y0 as i64), cy(y0 as i64 + 1));
    let p00 = img.get(xa, ya);
    let p10 = img.get(xb, ya);
    let p01 = img.get(xa, yb);
    let p11 = img.get(xb, yb);
    let mut out = [0.0; 3];
    for c in 0..3 {
        let top = p00[c] as f64 * (1.0 - tx) + p10[c] as f64 * tx;
        let bottom = p01[c] as f64 * (1.0 - tx) + p11[c] as f64 * tx;
        out[c] = top * (1.0 - ty) + bottom * ty;
    }
    out
}

pub fn nearest_sample(img: &ImageBuffer, at: PixelCoord) -> [f64; 3] {
    let x = (at.u.floor() as i64).clamp(0, img.width() as i64 - 1) as u32;
    let y = (at.v.floor() as i64).clamp(0, img.height() as i64 - 1) as u32;
    img.get(x, y).map(f64::from)
}

/// Weighted blend of source images through a warp map. Pixels without any
/// source are black and masked invalid.
pub fn warp_and_blend(map: &WarpMap, sources: &[ImageBuffer], sampling: Sampling) -> Result<ImageBuffer> {
    if sources.len() != map.source_count() {
        return Err(invalid(format!("warp map expects {} source images, got {}", map.source_count(), sources.len())));
    }
    for (j, (img, &(w, h))) in sources.iter().zip(map.source_sizes()).enumerate() {
        if (img.width(), img.height()) != (w, h) {
            return Err(invalid(format!(
                "source image {j} is {}x{}, warp map expects {w}x{h}",
                img.width(),
                img.height()
            )));
        }
    }
    let sample = match sampling {
        Sampling::Bilinear => bilinear_sample,
        Sampling::Nearest => nearest_sample,
    };
    let mut out = ImageBuffer::new(map.width(), map.height());
    for y in 0..map.height() {
        for x in 0..map.width() {
            let total = map.total_weight(x, y);
            let entries = map.entries_at(x, y);
            if entries.is_empty() || !(total > 0.0) {
                out.set_valid(x, y, false);
                continue;
            }
            let mut acc = [0.0f64; 3];
            for e in entries {
                let s = sample(&sources[e.camera as usize], e.coord);
                for c in 0..3 {
                    acc[c] += e.weight * s[c];
                }
            }
            out.set(x, y, acc.map(|a| (a / total).round().clamp(0.0, 255.0) as u8));
        }
    }
    Ok(out)
}
