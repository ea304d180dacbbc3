//! The eight reference surround rigs.
//!
//! Cameras sit where their viewing direction leaves a 4.6 m x 1.9 m ego
//! footprint, 1.6 m above the ground, level. These placements are simple
//! symmetric approximations, not measured mounts.

use nalgebra::Vector3;

use crate::error::{invalid, Result};
use crate::geometry::{Camera, Intrinsics, Pose, Rig};

pub const PRESET_WIDTH: u32 = 1600;
pub const PRESET_HEIGHT: u32 = 900;
pub const PRESET_HEIGHT_M: f64 = 1.6;
pub const FOOTPRINT_LENGTH: f64 = 4.6;
pub const FOOTPRINT_WIDTH: f64 = 1.9;

pub const PRESET_NAMES: [&str; 8] = ["4x95", "5x75", "6x80a", "6x80b", "6x70", "6x60", "8x50", "5x70+110"];

/// `(fov_deg, yaw_deg)` per camera.
pub fn preset_layout(name: &str) -> Result<Vec<(f64, f64)>> {
    let even = |count: usize, fov: f64, offset: f64| -> Vec<(f64, f64)> {
        (0..count).map(|k| (fov, offset + 360.0 * k as f64 / count as f64)).collect()
    };
    Ok(match name {
        "4x95" => even(4, 95.0, 0.0),
        "5x75" => even(5, 75.0, 0.0),
        "6x80a" => even(6, 80.0, 0.0),
        "6x80b" => even(6, 80.0, 30.0),
        "6x70" => even(6, 70.0, 0.0),
        "6x60" => even(6, 60.0, 0.0),
        "8x50" => even(8, 50.0, 0.0),
        // front, front sides, rear sides at 70 deg; one wide rear camera
        "5x70+110" => vec![(70.0, 0.0), (70.0, 55.0), (70.0, -55.0), (70.0, 110.0), (70.0, -110.0), (110.0, 180.0)],
        other => return Err(invalid(format!("unknown preset {other:?}"))),
    })
}

/// Point where the horizontal direction `yaw` leaves the footprint.
pub fn footprint_mount(yaw: f64) -> Vector3<f64> {
    let (dx, dz) = (yaw.sin(), yaw.cos());
    let hx = FOOTPRINT_WIDTH / 2.0;
    let hz = FOOTPRINT_LENGTH / 2.0;
    let t = (if dx.abs() > 1e-12 { hx / dx.abs() } else { f64::INFINITY }).min(if dz.abs() > 1e-12 {
        hz / dz.abs()
    } else {
        f64::INFINITY
    });
    Vector3::new(t * dx, PRESET_HEIGHT_M, t * dz)
}

pub fn preset(name: &str) -> Result<Rig> {
    let cams = preset_layout(name)?
        .into_iter()
        .enumerate()
        .map(|(k, (fov, yaw_deg))| {
            let yaw = yaw_deg.to_radians();
            let k_mat = Intrinsics::from_fov(fov, PRESET_WIDTH, PRESET_HEIGHT)?;
            Ok((format!("cam{k}"), Camera::new(k_mat, Pose::from_mount(footprint_mount(yaw), yaw, 0.0, 0.0))))
        })
        .collect::<Result<Vec<_>>>()?;
    Rig::new(name, cams)
}

pub fn all_presets() -> Vec<Rig> {
    PRESET_NAMES.iter().map(|n| preset(n).expect("built-in preset")).collect()
}

/// The same cameras, all moved to the roof center above the footprint
/// origin at the rig's mean camera height.
pub fn roof_center_baseline(rig: &Rig) -> Rig {
    let height = rig.cameras().iter().map(|c| c.center().0.y).sum::<f64>() / rig.len() as f64;
    let cams = rig
        .iter()
        .map(|(name, cam)| {
            let pose = Pose::new(*cam.pose.rotation(), Vector3::new(0.0, height, 0.0)).expect("same rotation");
            (name.to_string(), Camera::new(cam.intrinsics, pose))
        })
        .collect();
    Rig::new(format!("{}-roof-center", rig.label), cams).expect("names unchanged")
}
