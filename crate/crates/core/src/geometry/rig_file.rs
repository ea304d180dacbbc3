//! TOML rig configuration.
//!
//! ```toml
//! label = "6x60"
//!
//! [[camera]]
//! name = "front"
//! fov_deg = 60.0      # horizontal field of view
//! width = 1600
//! height = 900
//! x = 0.0             # camera center, world frame, meters
//! y = 1.6             # height above ground
//! z = 2.3
//! yaw_deg = 0.0       # applied yaw -> pitch -> roll
//! pitch_deg = 0.0     # optional, default 0
//! roll_deg = 0.0      # optional, default 0
//! ```
//!
//! Unknown keys are rejected.

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{Camera, Intrinsics, Pose, Rig};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigFile {
    pub label: String,
    #[serde(rename = "camera")]
    pub cameras: Vec<CameraEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraEntry {
    pub name: String,
    pub fov_deg: f64,
    pub width: u32,
    pub height: u32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw_deg: f64,
    #[serde(default)]
    pub pitch_deg: f64,
    #[serde(default)]
    pub roll_deg: f64,
}

impl CameraEntry {
    pub fn to_camera(&self) -> Result<Camera> {
        let k = Intrinsics::from_fov(self.fov_deg, self.width, self.height)?;
        let pos = Vector3::new(self.x, self.y, self.z);
        if !pos.iter().all(|c| c.is_finite()) {
            return Err(invalid(format!("camera {:?} has a non-finite position", self.name)));
        }
        let pose =
            Pose::from_mount(pos, self.yaw_deg.to_radians(), self.pitch_deg.to_radians(), self.roll_deg.to_radians());
        Ok(Camera::new(k, pose))
    }

    pub fn from_camera(name: &str, cam: &Camera) -> Result<Self> {
        let k = &cam.intrinsics;
        let centered = k.cx == k.width as f64 / 2.0 && k.cy == k.height as f64 / 2.0;
        if k.fx != k.fy || !centered {
            return Err(invalid(format!("camera {name:?} has non-square pixels or an off-center principal point")));
        }
        let (yaw, pitch, roll) = cam.pose.mount_angles();
        let t = cam.pose.translation();
        Ok(Self {
            name: name.to_string(),
            fov_deg: tidy(k.fov_deg()),
            width: k.width,
            height: k.height,
            x: tidy(t.x),
            y: tidy(t.y),
            z: tidy(t.z),
            yaw_deg: tidy(yaw.to_degrees()),
            pitch_deg: tidy(pitch.to_degrees()),
            roll_deg: tidy(roll.to_degrees()),
        })
    }
}

/// Rounds to 1e-9 so files read `60.0` rather than `59.99999999999999`.
fn tidy(x: f64) -> f64 {
    let r = (x * 1e9).round() / 1e9;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

impl RigFile {
    pub fn to_rig(&self) -> Result<Rig> {
        let cams = self.cameras.iter().map(|c| Ok((c.name.clone(), c.to_camera()?))).collect::<Result<Vec<_>>>()?;
        Rig::new(self.label.clone(), cams)
    }

    pub fn from_rig(rig: &Rig) -> Result<Self> {
        let cameras = rig.iter().map(|(n, c)| CameraEntry::from_camera(n, c)).collect::<Result<Vec<_>>>()?;
        Ok(Self { label: rig.label.clone(), cameras })
    }
}

pub fn rig_from_toml(text: &str) -> Result<Rig> {
    let file: RigFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.to_rig()
}

pub fn rig_to_toml(rig: &Rig) -> Result<String> {
    toml::to_string(&RigFile::from_rig(rig)?).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_rig(path: impl AsRef<Path>) -> Result<Rig> {
    let text = std::fs::read_to_string(path.as_ref())?;
    rig_from_toml(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.as_ref().display())),
        other => other,
    })
}

pub fn write_rig(path: impl AsRef<Path>, rig: &Rig) -> Result<()> {
    std::fs::write(path, rig_to_toml(rig)?)?;
    Ok(())
}
