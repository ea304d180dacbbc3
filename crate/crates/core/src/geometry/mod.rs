//! Pinhole cameras, rigid poses and multi-camera rigs.
//!
//! Frames:
//! - world: right-handed, `y` up, the ground is the plane `y = 0`. The ego
//!   vehicle sits at the origin facing `+z`, so `+x` points to its left.
//! - camera: `x` right, `y` down, `z` forward (optical axis).
//!
//! Poses are stored camera-to-world. Continuous pixel coordinates place the
//! center of integer pixel `(i, j)` at `(i + 0.5, j + 0.5)`.

mod rig_file;

pub use rig_file::{read_rig, rig_from_toml, rig_to_toml, write_rig, CameraEntry, RigFile};

use nalgebra::{Matrix3, Matrix4, Vector3};

use crate::error::{invalid, Result};

/// Near-plane cutoff in meters: points with camera-frame depth at or below it
/// do not project.
pub const Z_MIN: f64 = 1e-3;

const ORTHONORMAL_TOL: f64 = 1e-9;

/// Rotation taking a level, forward-facing camera frame to the world frame
/// (camera `x` right = world `-x`, camera `y` down = world `-y`).
pub fn mount_base() -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0))
}

/// Rotation about the world vertical axis. Positive angles turn `+z` toward `+x`.
pub fn rot_y(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCoord {
    pub u: f64,
    pub v: f64,
}

impl PixelCoord {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    /// Continuous coordinate of the center of integer pixel `(col, row)`.
    pub fn center_of(col: u32, row: u32) -> Self {
        Self::new(col as f64 + 0.5, row as f64 + 0.5)
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

/// A point in the world frame, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldPoint(pub Vector3<f64>);

/// A point in some camera's frame, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPoint(pub Vector3<f64>);

impl WorldPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self(Vector3::new(x, y, z))
    }
}

impl CameraPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self(Vector3::new(x, y, z))
    }
}

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid(format!("image size {width}x{height} must be positive")));
        }
        if !(fx.is_finite() && fx > 0.0 && fy.is_finite() && fy > 0.0) {
            return Err(invalid(format!("focal lengths must be positive, got ({fx}, {fy})")));
        }
        if !(cx > 0.0 && cx < width as f64 && cy > 0.0 && cy < height as f64) {
            return Err(invalid(format!("principal point ({cx}, {cy}) outside image {width}x{height}")));
        }
        Ok(Self { fx, fy, cx, cy, width, height })
    }

    /// Square-pixel intrinsics with a centered principal point and the given
    /// horizontal field of view.
    pub fn from_fov(fov_deg: f64, width: u32, height: u32) -> Result<Self> {
        if !(fov_deg > 0.0 && fov_deg < 180.0) {
            return Err(invalid(format!("field of view {fov_deg} deg not in (0, 180)")));
        }
        let f = (width as f64 / 2.0) / (fov_deg.to_radians() / 2.0).tan();
        Self::new(f, f, width as f64 / 2.0, height as f64 / 2.0, width, height)
    }

    /// Horizontal field of view in degrees.
    pub fn fov_deg(&self) -> f64 {
        2.0 * (self.width as f64 / (2.0 * self.fx)).atan().to_degrees()
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    /// Half-open bounds check on `[0, width) x [0, height)`.
    pub fn contains(&self, p: PixelCoord) -> bool {
        p.u >= 0.0 && p.u < self.width as f64 && p.v >= 0.0 && p.v < self.height as f64
    }

    /// Camera-frame ray through `p` with unit depth.
    pub fn ray(&self, p: PixelCoord) -> Vector3<f64> {
        Vector3::new((p.u - self.cx) / self.fx, (p.v - self.cy) / self.fy, 1.0)
    }

    pub fn to_pixel(&self, p: &Vector3<f64>) -> PixelCoord {
        PixelCoord::new(self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }
}

/// Rigid transform, camera-to-world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !rotation.iter().chain(translation.iter()).all(|x| x.is_finite()) {
            return Err(invalid("pose contains non-finite values"));
        }
        let gram = rotation.transpose() * rotation;
        if (gram - Matrix3::identity()).amax() > ORTHONORMAL_TOL {
            return Err(invalid("rotation is not orthonormal"));
        }
        if (rotation.determinant() - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(invalid("rotation has determinant != 1"));
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        Self { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    /// Camera mounted at `position` with yaw, then pitch, then roll (radians,
    /// intrinsic). Yaw turns about the world vertical, pitch about the camera
    /// `x` axis (positive looks up), roll about the optical axis.
    pub fn from_mount(position: Vector3<f64>, yaw: f64, pitch: f64, roll: f64) -> Self {
        let rotation = rot_y(yaw) * mount_base() * rot_x(pitch) * rot_z(roll);
        Self { rotation, translation: position }
    }

    /// Inverse of [`Pose::from_mount`]. Degenerate for pitch of +-90 deg.
    pub fn mount_angles(&self) -> (f64, f64, f64) {
        let axis = self.optical_axis();
        let pitch = axis.y.clamp(-1.0, 1.0).asin();
        let yaw = axis.x.atan2(axis.z);
        let partial = rot_y(yaw) * mount_base() * rot_x(pitch);
        let roll_m = partial.transpose() * self.rotation;
        let roll = roll_m[(1, 0)].atan2(roll_m[(0, 0)]);
        (yaw, pitch, roll)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn optical_axis(&self) -> Vector3<f64> {
        self.rotation.column(2).into_owned()
    }

    /// True when the camera `y` axis points straight down (zero pitch and roll).
    pub fn is_level(&self) -> bool {
        (self.rotation.column(1) - Vector3::new(0.0, -1.0, 0.0)).amax() < 1e-12
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose { rotation: rt, translation: -(rt * self.translation) }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn transform(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Homogeneous 4x4 extrinsic matrix (camera-to-world).
    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }
}

/// A world-frame ray with unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: WorldPoint,
    pub direction: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub intrinsics: Intrinsics,
    pub pose: Pose,
}

impl Camera {
    pub fn new(intrinsics: Intrinsics, pose: Pose) -> Self {
        Self { intrinsics, pose }
    }

    pub fn center(&self) -> WorldPoint {
        WorldPoint(self.pose.translation)
    }

    pub fn optical_axis(&self) -> Vector3<f64> {
        self.pose.optical_axis()
    }

    pub fn to_camera(&self, p: &WorldPoint) -> CameraPoint {
        CameraPoint(self.pose.rotation.transpose() * (p.0 - self.pose.translation))
    }

    pub fn to_world(&self, p: &CameraPoint) -> WorldPoint {
        WorldPoint(self.pose.transform(&p.0))
    }

    /// Projects a camera-frame point without the image bounds check.
    pub fn project_camera_point(&self, p: &CameraPoint) -> Option<(PixelCoord, f64)> {
        let z = p.0.z;
        if !(z > Z_MIN) || !p.0.iter().all(|c| c.is_finite()) {
            return None;
        }
        Some((self.intrinsics.to_pixel(&p.0), z))
    }

    /// Pixel and depth of a world point, or `None` when it is behind the near
    /// plane or lands outside the image.
    pub fn project(&self, p: &WorldPoint) -> Option<(PixelCoord, f64)> {
        self.project_unbounded(p).filter(|(px, _)| self.intrinsics.contains(*px))
    }

    /// Like [`Camera::project`] but keeps pixels outside the image.
    pub fn project_unbounded(&self, p: &WorldPoint) -> Option<(PixelCoord, f64)> {
        self.project_camera_point(&self.to_camera(p))
    }

    /// World ray through a pixel.
    pub fn unproject_ray(&self, p: PixelCoord) -> Ray {
        let dir = self.pose.rotation * self.intrinsics.ray(p);
        Ray { origin: self.center(), direction: dir.normalize() }
    }
}

/// An ordered, non-empty set of named cameras.
#[derive(Debug, Clone, PartialEq)]
pub struct Rig {
    pub label: String,
    cameras: Vec<Camera>,
    names: Vec<String>,
}

impl Rig {
    pub fn new(label: impl Into<String>, cameras: Vec<(String, Camera)>) -> Result<Self> {
        if cameras.is_empty() {
            return Err(invalid("rig must contain at least one camera"));
        }
        let (names, cameras): (Vec<_>, Vec<_>) = cameras.into_iter().unzip();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(invalid(format!("duplicate camera name {n:?}")));
            }
        }
        Ok(Self { label: label.into(), cameras, names })
    }

    /// Rig with cameras named `cam0`, `cam1`, ...
    pub fn from_cameras(label: impl Into<String>, cameras: Vec<Camera>) -> Result<Self> {
        let named = cameras.into_iter().enumerate().map(|(i, c)| (format!("cam{i}"), c)).collect();
        Self::new(label, named)
    }

    pub fn cameras(&self) -> &[Camera] {
        &self.cameras
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Camera)> {
        self.names.iter().map(String::as_str).zip(self.cameras.iter())
    }
}
