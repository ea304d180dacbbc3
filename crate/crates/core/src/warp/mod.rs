//! Ground-aware virtual view synthesis.
//!
//! Every virtual pixel is given a 3D point: on the ground plane `h_c` below
//! the virtual camera when that intersection is closer than `D_0`, otherwise
//! on the sphere of radius `D_0` around the virtual optical center. The point
//! is then re-projected into each source camera, and the sampled views are
//! blended with per-source weights.

mod blend;
mod format;
mod map;

pub use blend::{bilinear_sample, nearest_sample, warp_and_blend, Sampling};
pub use format::{read_warp_map, write_warp_map, WARP_MAP_MAGIC, WARP_MAP_VERSION};
pub use map::{build_warp_map, WarpEntry, WarpMap};

use nalgebra::Vector3;

use crate::error::{invalid, Result};
use crate::geometry::{Camera, CameraPoint, PixelCoord};

/// Rays whose `v - cy` (level cameras) is at or below this many pixels never
/// reach the ground.
pub const EPS_HORIZON: f64 = 1e-6;

pub const DEFAULT_DISTANCE_THRESHOLD: f64 = 50.0;

pub const DEFAULT_WEIGHT_EXPONENT: f64 = 4.0;

/// Camera height and switch-over distance for one virtual camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthAssumption {
    camera_height: f64,
    distance_threshold: f64,
}

impl DepthAssumption {
    pub fn new(camera_height: f64, distance_threshold: f64) -> Result<Self> {
        if !(camera_height.is_finite() && camera_height > 0.0) {
            return Err(invalid(format!("camera height {camera_height} must be positive")));
        }
        if !(distance_threshold.is_finite() && distance_threshold > camera_height) {
            return Err(invalid(format!(
                "distance threshold {distance_threshold} must exceed camera height {camera_height}"
            )));
        }
        Ok(Self { camera_height, distance_threshold })
    }

    pub fn camera_height(&self) -> f64 {
        self.camera_height
    }

    pub fn distance_threshold(&self) -> f64 {
        self.distance_threshold
    }
}

/// Rig-level rule for deriving a [`DepthAssumption`] per virtual camera.
///
/// With `camera_height = None` each camera uses its own center height, which
/// places the assumed ground on the world ground plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionRule {
    pub camera_height: Option<f64>,
    pub distance_threshold: f64,
}

impl Default for AssumptionRule {
    fn default() -> Self {
        Self { camera_height: None, distance_threshold: DEFAULT_DISTANCE_THRESHOLD }
    }
}

impl AssumptionRule {
    pub fn fixed(assumption: DepthAssumption) -> Self {
        Self { camera_height: Some(assumption.camera_height), distance_threshold: assumption.distance_threshold }
    }

    pub fn resolve(&self, camera: &Camera) -> Result<DepthAssumption> {
        let h = self.camera_height.unwrap_or(camera.center().0.y);
        DepthAssumption::new(h, self.distance_threshold)
    }
}

/// Which surface produced an assumed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Ground,
    Sphere,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumedPoint {
    pub point: CameraPoint,
    pub branch: Branch,
}

/// Ground-plane point for a virtual pixel and its distance from the optical
/// center, or `None` when the ray does not descend below the horizon.
///
/// Level cameras use the closed form directly; tilted cameras intersect the
/// world-frame ray with the plane `h_c` below the camera center.
pub fn ground_point(cam: &Camera, pixel: PixelCoord, camera_height: f64) -> Option<(CameraPoint, f64)> {
    if !cam.pose.is_level() {
        return ground_point_by_intersection(cam, pixel, camera_height);
    }
    let k = &cam.intrinsics;
    let dv = pixel.v - k.cy;
    if !(dv > EPS_HORIZON) {
        return None;
    }
    let h = camera_height;
    let p = Vector3::new(k.fy * (pixel.u - k.cx) / (k.fx * dv) * h, h, k.fy / dv * h);
    Some((CameraPoint(p), p.norm()))
}

fn ground_point_by_intersection(cam: &Camera, pixel: PixelCoord, camera_height: f64) -> Option<(CameraPoint, f64)> {
    let k = &cam.intrinsics;
    let ray = k.ray(pixel);
    // descent per unit camera depth, expressed in pixels for the horizon guard
    let down = -(cam.pose.rotation() * ray).y;
    if !(down * k.fy > EPS_HORIZON) {
        return None;
    }
    let p = ray * (camera_height / down);
    Some((CameraPoint(p), p.norm()))
}

/// Point at distance `D_0` from the optical center along the pixel's ray.
pub fn sphere_point(cam: &Camera, pixel: PixelCoord, distance_threshold: f64) -> CameraPoint {
    let k = &cam.intrinsics;
    let du = pixel.u - k.cx;
    let dv = pixel.v - k.cy;
    let d = Vector3::new(du / k.fx, dv / k.fy, 1.0).norm();
    let d0 = distance_threshold;
    CameraPoint::new(du * d0 / (k.fx * d), dv * d0 / (k.fy * d), d0 / d)
}

pub fn assumed_point(cam: &Camera, pixel: PixelCoord, assumption: &DepthAssumption) -> AssumedPoint {
    match ground_point(cam, pixel, assumption.camera_height) {
        Some((point, dist)) if dist < assumption.distance_threshold => AssumedPoint { point, branch: Branch::Ground },
        _ => AssumedPoint { point: sphere_point(cam, pixel, assumption.distance_threshold), branch: Branch::Sphere },
    }
}

/// Source-image location that a virtual pixel samples, if the assumed point is
/// in front of the source camera and inside its image.
pub fn correspond(
    virtual_cam: &Camera,
    source_cam: &Camera,
    pixel: PixelCoord,
    assumption: &DepthAssumption,
) -> Option<PixelCoord> {
    let p = assumed_point(virtual_cam, pixel, assumption);
    let world = virtual_cam.to_world(&p.point);
    source_cam.project(&world).map(|(px, _)| px)
}

/// `max(0, cos a)^exponent` for the angle `a` between the virtual pixel's ray
/// and the source optical axis. Ignores coverage.
pub fn angular_weight(virtual_cam: &Camera, source_cam: &Camera, pixel: PixelCoord, exponent: f64) -> f64 {
    let ray = virtual_cam.unproject_ray(pixel).direction;
    cosine_weight(ray.dot(&source_cam.optical_axis()), exponent)
}

pub(crate) fn cosine_weight(cos: f64, exponent: f64) -> f64 {
    cos.max(0.0).powf(exponent)
}

/// Blend weight of a source for a virtual pixel; zero when the source does not
/// see the assumed point.
pub fn blend_weight(
    virtual_cam: &Camera,
    source_cam: &Camera,
    pixel: PixelCoord,
    assumption: &DepthAssumption,
    exponent: f64,
) -> f64 {
    match correspond(virtual_cam, source_cam, pixel, assumption) {
        Some(_) => angular_weight(virtual_cam, source_cam, pixel, exponent),
        None => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Intrinsics, Pose};
    use approx::assert_abs_diff_eq;
    use nalgebra::Matrix3;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    fn cam_1000(pose: Pose) -> Camera {
        Camera::new(Intrinsics::new(1000.0, 1000.0, 800.0, 450.0, 1600, 900).unwrap(), pose)
    }

    fn level(pos: Vector3<f64>, yaw: f64) -> Pose {
        Pose::from_mount(pos, yaw, 0.0, 0.0)
    }

    #[test]
    fn assumption_validation() {
        assert!(DepthAssumption::new(0.0, 50.0).is_err());
        assert!(DepthAssumption::new(1.6, 1.0).is_err());
        assert!(DepthAssumption::new(1.6, 50.0).is_ok());
        let cam = cam_1000(level(Vector3::new(0.0, 1.8, 0.0), 0.0));
        let a = AssumptionRule::default().resolve(&cam).unwrap();
        assert_eq!(a.camera_height(), 1.8);
        assert_eq!(a.distance_threshold(), 50.0);
    }

    #[test]
    fn ground_point_examples() {
        let cam = cam_1000(level(Vector3::new(0.0, 1.6, 0.0), 0.0));
        let (p, d) = ground_point(&cam, PixelCoord::new(800.0, 650.0), 1.6).unwrap();
        assert_abs_diff_eq!((p.0 - Vector3::new(0.0, 1.6, 8.0)).amax(), 0.0, epsilon = 1e-12);
        // sqrt(1.6^2 + 8^2)
        assert_abs_diff_eq!(d, 8.158431221748455, epsilon = 1e-12);

        assert!(ground_point(&cam, PixelCoord::new(800.0, 450.0), 1.6).is_none());
        assert!(ground_point(&cam, PixelCoord::new(800.0, 300.0), 1.6).is_none());

        let (p, _) = ground_point(&cam, PixelCoord::new(1000.0, 650.0), 1.6).unwrap();
        assert_abs_diff_eq!((p.0 - Vector3::new(1.6, 1.6, 8.0)).amax(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn ground_point_lands_on_world_ground() {
        let cam = cam_1000(level(Vector3::new(0.4, 1.6, -0.7), 0.9));
        let (p, _) = ground_point(&cam, PixelCoord::new(1200.0, 700.0), 1.6).unwrap();
        assert_abs_diff_eq!(cam.to_world(&p).0.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_matches_intersection_for_level_cameras() {
        let cam = cam_1000(level(Vector3::new(1.0, 1.6, 2.0), 0.7));
        for (u, v) in [(0.5, 451.0), (800.0, 650.0), (1599.5, 899.5), (13.0, 460.0)] {
            let px = PixelCoord::new(u, v);
            let (a, da) = ground_point(&cam, px, 1.6).unwrap();
            let (b, db) = ground_point_by_intersection(&cam, px, 1.6).unwrap();
            assert!((a.0 - b.0).amax() < 1e-9, "{u},{v}");
            assert!((da - db).abs() < 1e-9);
        }
    }

    #[test]
    fn tilted_camera_ground_point() {
        let cam = cam_1000(Pose::from_mount(Vector3::new(0.0, 2.0, 0.0), 0.0, -0.2, 0.0));
        // principal ray of a camera pitched down by 0.2 rad hits at 2 / tan(0.2)
        let (p, d) = ground_point(&cam, PixelCoord::new(800.0, 450.0), 2.0).unwrap();
        let w = cam.to_world(&p).0;
        assert_abs_diff_eq!(w.y, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.z, 2.0 / 0.2f64.tan(), epsilon = 1e-9);
        assert_abs_diff_eq!(d, 2.0 / 0.2f64.sin(), epsilon = 1e-9);
        // looking up: no ground
        let up = cam_1000(Pose::from_mount(Vector3::new(0.0, 2.0, 0.0), 0.0, 0.3, 0.0));
        assert!(ground_point(&up, PixelCoord::new(800.0, 600.0), 2.0).is_none());
    }

    #[test]
    fn sphere_point_examples() {
        let cam = cam_1000(Pose::identity());
        let p = sphere_point(&cam, PixelCoord::new(800.0, 450.0), 50.0);
        assert_eq!(p.0, Vector3::new(0.0, 0.0, 50.0));
        let p = sphere_point(&cam, PixelCoord::new(1800.0, 450.0), 50.0);
        let s = 25.0 * 2f64.sqrt();
        assert_abs_diff_eq!((p.0 - Vector3::new(s, 0.0, s)).amax(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn assumed_point_branches() {
        let cam = cam_1000(level(Vector3::new(0.0, 1.6, 0.0), 0.0));
        let a = DepthAssumption::new(1.6, 50.0).unwrap();
        let near = assumed_point(&cam, PixelCoord::new(800.0, 650.0), &a);
        assert_eq!(near.branch, Branch::Ground);
        assert_abs_diff_eq!(near.point.0.z, 8.0, epsilon = 1e-12);

        let horizon = assumed_point(&cam, PixelCoord::new(800.0, 450.0), &a);
        assert_eq!(horizon.branch, Branch::Sphere);

        // ground distance 200 m: z = fy h / dv = 200 -> dv = 8 px (approximately,
        // the slant adds h^2)
        let px = PixelCoord::new(800.0, 450.0 + 1000.0 * 1.6 / 200.0);
        let (_, d) = ground_point(&cam, px, 1.6).unwrap();
        assert!(d > 200.0);
        let far = assumed_point(&cam, px, &a);
        assert_eq!(far.branch, Branch::Sphere);
        assert_abs_diff_eq!(far.point.0.norm(), 50.0, epsilon = 1e-9);
    }

    #[test]
    fn identity_correspondence() {
        let cam = cam_1000(level(Vector3::new(0.2, 1.6, 1.0), 0.4));
        let a = DepthAssumption::new(1.6, 50.0).unwrap();
        for (u, v) in [(0.5, 0.5), (800.0, 450.0), (1599.5, 899.5), (100.5, 700.5), (1500.0, 455.0)] {
            let px = PixelCoord::new(u, v);
            let back = correspond(&cam, &cam, px, &a).unwrap();
            assert_abs_diff_eq!(back.u, u, epsilon = 1e-6);
            assert_abs_diff_eq!(back.v, v, epsilon = 1e-6);
        }
    }

    #[test]
    fn yaw_rotation_matches_homography() {
        let center = Vector3::new(0.0, 1.6, 0.0);
        let virt = cam_1000(level(center, 0.0));
        let src = Camera::new(Intrinsics::from_fov(100.0, 1280, 720).unwrap(), level(center, 0.5));
        let a = DepthAssumption::new(1.6, 50.0).unwrap();
        let rel: Matrix3<f64> = src.pose.rotation().transpose() * virt.pose.rotation();
        let h = src.intrinsics.matrix() * rel * virt.intrinsics.matrix().try_inverse().unwrap();
        let mut checked = 0;
        for v in (0..900).step_by(37) {
            for u in (0..1600).step_by(41) {
                let px = PixelCoord::center_of(u, v);
                let q = h * Vector3::new(px.u, px.v, 1.0);
                let Some(got) = correspond(&virt, &src, px, &a) else { continue };
                assert_abs_diff_eq!(got.u, q.x / q.z, epsilon = 1e-6);
                assert_abs_diff_eq!(got.v, q.y / q.z, epsilon = 1e-6);
                checked += 1;
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn opposite_camera_sees_nothing() {
        let virt = cam_1000(level(Vector3::new(0.0, 1.6, 0.0), 0.0));
        let back = cam_1000(level(Vector3::new(0.0, 1.6, 0.0), PI));
        let a = DepthAssumption::new(1.6, 50.0).unwrap();
        assert!(correspond(&virt, &back, PixelCoord::new(800.0, 450.0), &a).is_none());
        assert!(correspond(&virt, &back, PixelCoord::new(800.0, 800.0), &a).is_none());
        assert_eq!(blend_weight(&virt, &back, PixelCoord::new(800.0, 800.0), &a, 4.0), 0.0);
    }

    #[test]
    fn weight_examples() {
        let virt = cam_1000(level(Vector3::new(0.0, 1.6, 0.0), 0.0));
        let px = PixelCoord::new(800.0, 450.0);
        assert_abs_diff_eq!(angular_weight(&virt, &virt, px, 4.0), 1.0, epsilon = 1e-15);
        let side = cam_1000(level(Vector3::new(0.0, 1.6, 0.0), FRAC_PI_2));
        assert_abs_diff_eq!(angular_weight(&virt, &side, px, 4.0), 0.0, epsilon = 1e-15);
        let sixty = cam_1000(level(Vector3::new(0.0, 1.6, 0.0), FRAC_PI_3));
        assert_abs_diff_eq!(angular_weight(&virt, &sixty, px, 4.0), 0.0625, epsilon = 1e-12);
        // configurable exponent
        assert_abs_diff_eq!(angular_weight(&virt, &sixty, px, 1.0), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn sphere_branch_continuity_at_threshold() {
        let cam = cam_1000(level(Vector3::new(0.0, 1.6, 0.0), 0.0));
        let px = PixelCoord::new(950.0, 490.0);
        let (g, d) = ground_point(&cam, px, 1.6).unwrap();
        let s = sphere_point(&cam, px, d);
        assert!((g.0 - s.0).amax() < 1e-9);
        let w = cam.to_world(&g);
        assert_abs_diff_eq!(w.0.y, 0.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn sphere_points_have_radius_d0(u in 0.0f64..1600.0, v in 0.0f64..900.0, d0 in 2.0f64..500.0) {
            let cam = cam_1000(Pose::identity());
            let p = sphere_point(&cam, PixelCoord::new(u, v), d0);
            prop_assert!((p.0.norm() - d0).abs() < 1e-9);
        }

        #[test]
        fn assumed_points_reproject_to_their_pixel(
            u in 0.0f64..1600.0, v in 0.0f64..900.0, h in 0.5f64..3.0, d0 in 5.0f64..150.0,
        ) {
            let cam = cam_1000(level(Vector3::new(0.0, h, 0.0), 0.2));
            let a = DepthAssumption::new(h, d0).unwrap();
            let p = assumed_point(&cam, PixelCoord::new(u, v), &a);
            let (px, _) = cam.project_camera_point(&p.point).unwrap();
            prop_assert!((px.u - u).abs() < 1e-6 && (px.v - v).abs() < 1e-6);
        }
    }
}
