//! Little-endian binary warp map format.
//!
//! ```text
//! magic        4 bytes  "VWMP"
//! version      u32      1
//! width        u32      virtual image width
//! height       u32      virtual image height
//! cameras      u32      source camera count
//! sizes        cameras x (u32 width, u32 height)
//! pixels       width*height records, row-major:
//!   count      u16
//!   entries    count x (u16 camera, f32 u, f32 v, f32 weight)
//! ```

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::geometry::PixelCoord;

use super::{WarpEntry, WarpMap};

pub const WARP_MAP_MAGIC: [u8; 4] = *b"VWMP";
pub const WARP_MAP_VERSION: u32 = 1;

/// Narrows a coordinate to f32 while keeping it strictly below `limit`.
fn coord_f32(x: f64, limit: u32) -> f32 {
    let narrowed = x as f32;
    let limit = limit as f32;
    if narrowed >= limit {
        f32::from_bits(limit.to_bits() - 1)
    } else {
        narrowed
    }
}

pub fn write_warp_map<W: Write>(map: &WarpMap, mut out: W) -> Result<()> {
    out.write_all(&WARP_MAP_MAGIC)?;
    for v in [WARP_MAP_VERSION, map.width(), map.height(), map.source_count() as u32] {
        out.write_all(&v.to_le_bytes())?;
    }
    for &(w, h) in map.source_sizes() {
        out.write_all(&w.to_le_bytes())?;
        out.write_all(&h.to_le_bytes())?;
    }
    for y in 0..map.height() {
        for x in 0..map.width() {
            let entries = map.entries_at(x, y);
            let count = u16::try_from(entries.len())
                .map_err(|_| Error::InvalidArgument("too many entries for one pixel".into()))?;
            out.write_all(&count.to_le_bytes())?;
            for e in entries {
                let (w, h) = map.source_sizes()[e.camera as usize];
                out.write_all(&e.camera.to_le_bytes())?;
                out.write_all(&coord_f32(e.coord.u, w).to_le_bytes())?;
                out.write_all(&coord_f32(e.coord.v, h).to_le_bytes())?;
                let weight = (e.weight as f32).max(f32::MIN_POSITIVE);
                out.write_all(&weight.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u16::from_le_bytes(b))
}

fn read_f32<R: Read>(r: &mut R) -> Result<f32> {
    Ok(f32::from_bits(read_u32(r)?))
}

fn truncated(e: std::io::Error) -> Error {
    Error::Parse(format!("truncated warp map: {e}"))
}

pub fn read_warp_map<R: Read>(mut input: R) -> Result<WarpMap> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic).map_err(truncated)?;
    if magic != WARP_MAP_MAGIC {
        return Err(Error::Parse("not a warp map (bad magic)".into()));
    }
    let version = read_u32(&mut input)?;
    if version != WARP_MAP_VERSION {
        return Err(Error::Parse(format!("unsupported warp map version {version}")));
    }
    let width = read_u32(&mut input)?;
    let height = read_u32(&mut input)?;
    let cameras = read_u32(&mut input)?;
    let sizes = (0..cameras).map(|_| Ok((read_u32(&mut input)?, read_u32(&mut input)?))).collect::<Result<Vec<_>>>()?;
    let n = width as usize * height as usize;
    let mut pixels = Vec::with_capacity(n);
    for _ in 0..n {
        let count = read_u16(&mut input)?;
        let mut list = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let camera = read_u16(&mut input)?;
            let u = read_f32(&mut input)? as f64;
            let v = read_f32(&mut input)? as f64;
            let weight = read_f32(&mut input)? as f64;
            list.push(WarpEntry { camera, coord: PixelCoord::new(u, v), weight });
        }
        pixels.push(list);
    }
    WarpMap::from_pixel_entries(width, height, sizes, pixels).map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Camera, Intrinsics, Pose, Rig};
    use crate::warp::{build_warp_map, DepthAssumption};
    use nalgebra::Vector3;

    fn sample_map() -> WarpMap {
        let mk = |yaw: f64, x: f64| {
            Camera::new(
                Intrinsics::from_fov(80.0, 40, 24).unwrap(),
                Pose::from_mount(Vector3::new(x, 1.6, 0.0), yaw, 0.0, 0.0),
            )
        };
        let rig = Rig::from_cameras("r", vec![mk(0.4, 0.3), mk(-0.4, -0.3)]).unwrap();
        build_warp_map(&mk(0.0, 0.0), &rig, &DepthAssumption::new(1.6, 50.0).unwrap(), 4.0).unwrap()
    }

    #[test]
    fn header_layout() {
        let map = sample_map();
        let mut bytes = Vec::new();
        write_warp_map(&map, &mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"VWMP");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 40);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 24);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 2);
        let expected = 20 + 2 * 8 + 40 * 24 * 2 + map.entry_count() * 14;
        assert_eq!(bytes.len(), expected);
    }

    #[test]
    fn read_back_within_f32_precision() {
        let map = sample_map();
        let mut bytes = Vec::new();
        write_warp_map(&map, &mut bytes).unwrap();
        let back = read_warp_map(&bytes[..]).unwrap();
        assert_eq!(back.entry_count(), map.entry_count());
        for y in 0..map.height() {
            for x in 0..map.width() {
                for (a, b) in map.entries_at(x, y).iter().zip(back.entries_at(x, y)) {
                    assert_eq!(a.camera, b.camera);
                    assert!((a.coord.u - b.coord.u).abs() < 1e-4);
                    assert!((a.weight - b.weight).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(read_warp_map(&b"XXXX"[..]).is_err());
        let mut bytes = Vec::new();
        write_warp_map(&sample_map(), &mut bytes).unwrap();
        assert!(read_warp_map(&bytes[..bytes.len() - 3]).is_err());
        bytes[4] = 9;
        assert!(read_warp_map(&bytes[..]).is_err());
    }

    #[test]
    fn edge_coordinates_stay_inside() {
        assert!((coord_f32(1599.999999999, 1600) as f64) < 1600.0);
    }
}
