//! Angular reprojection error of a virtual rig over 3D box corners.
//!
//! For a corner seen by source camera `C` and evaluated in virtual camera `V`:
//! the corner's pixel in `C` is carried through the inverse of the warp (the
//! source ray intersected with `V`'s assumed surface) into `V`, and its pitch
//! and yaw there are compared with those of a direct projection into `V`.
//! The absolute differences are summed and weighted by the corner's distance
//! from `V`'s optical center.

mod scene;

pub use scene::{Box3, BoxClass, BoxSize, Scene};

use std::fmt::Write as _;

use crate::error::{invalid, Result};
use crate::geometry::{Camera, Intrinsics, PixelCoord, Rig, WorldPoint};
use crate::warp::{AssumptionRule, DepthAssumption};

/// Pitch and yaw of a virtual-image pixel relative to the optical axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleObservation {
    pub pitch: f64,
    pub yaw: f64,
}

impl AngleObservation {
    pub fn at_pixel(k: &Intrinsics, px: PixelCoord) -> Self {
        Self { pitch: ((px.v - k.cy) / k.fy).atan(), yaw: ((px.u - k.cx) / k.fx).atan() }
    }
}

/// Reference point for the distance weight of a corner error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceRef {
    /// Distance from the evaluating virtual camera's center.
    #[default]
    Virtual,
    /// Distance from the source camera's center.
    Source,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricOptions {
    pub rule: AssumptionRule,
    pub distance_ref: DistanceRef,
}

/// Intersects a world ray with the virtual camera's assumed surface: the
/// ground plane `h_c` below the virtual center when hit closer than `D_0`,
/// otherwise the sphere of radius `D_0` about the virtual center.
pub fn assumed_surface_hit(
    origin: &WorldPoint,
    direction: &nalgebra::Vector3<f64>,
    virtual_cam: &Camera,
    assumption: &DepthAssumption,
) -> Option<WorldPoint> {
    let vc = virtual_cam.center().0;
    let d0 = assumption.distance_threshold();
    let ground_y = vc.y - assumption.camera_height();
    if direction.y < 0.0 {
        let t = (ground_y - origin.0.y) / direction.y;
        if t > 0.0 {
            let hit = origin.0 + direction * t;
            if (hit - vc).norm() < d0 {
                return Some(WorldPoint(hit));
            }
        }
    }
    let oc = origin.0 - vc;
    let b = oc.dot(direction);
    let c = oc.norm_squared() - d0 * d0;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let t = -b + disc.sqrt();
    (t > 0.0).then(|| WorldPoint(origin.0 + direction * t))
}

/// Angles of a corner after passing through the source camera and the
/// inverse warp into the virtual camera.
pub fn warped_angles(
    corner: &WorldPoint,
    source_cam: &Camera,
    virtual_cam: &Camera,
    assumption: &DepthAssumption,
) -> Option<AngleObservation> {
    let (src_px, _) = source_cam.project(corner)?;
    let ray = source_cam.unproject_ray(src_px);
    let surface = assumed_surface_hit(&ray.origin, &ray.direction, virtual_cam, assumption)?;
    let (virt_px, _) = virtual_cam.project(&surface)?;
    Some(AngleObservation::at_pixel(&virtual_cam.intrinsics, virt_px))
}

/// Angles of a corner projected straight into the virtual camera. Only the
/// front-of-camera check applies.
pub fn direct_angles(corner: &WorldPoint, virtual_cam: &Camera) -> Option<AngleObservation> {
    let (px, _) = virtual_cam.project_unbounded(corner)?;
    Some(AngleObservation::at_pixel(&virtual_cam.intrinsics, px))
}

/// Distance-weighted angular error in radian-meters.
pub fn corner_error(
    corner: &WorldPoint,
    source_cam: &Camera,
    virtual_cam: &Camera,
    assumption: &DepthAssumption,
) -> Option<f64> {
    corner_error_with(corner, source_cam, virtual_cam, assumption, DistanceRef::Virtual)
}

pub fn corner_error_with(
    corner: &WorldPoint,
    source_cam: &Camera,
    virtual_cam: &Camera,
    assumption: &DepthAssumption,
    distance_ref: DistanceRef,
) -> Option<f64> {
    let warped = warped_angles(corner, source_cam, virtual_cam, assumption)?;
    let direct = direct_angles(corner, virtual_cam)?;
    let reference = match distance_ref {
        DistanceRef::Virtual => virtual_cam.center(),
        DistanceRef::Source => source_cam.center(),
    };
    let dist = (corner.0 - reference.0).norm();
    Some(dist * ((warped.pitch - direct.pitch).abs() + (warped.yaw - direct.yaw).abs()))
}

/// Error breakdown of one scene under one (virtual rig, source rig) pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErrorReport {
    /// Per box, per corner: sum over counted camera pairs.
    pub per_corner: Vec<[f64; 8]>,
    pub per_box: Vec<f64>,
    pub total: f64,
    /// Counted (corner, source camera, virtual camera) triples.
    pub counted: usize,
    /// Triples where either observation was missing.
    pub skipped: usize,
}

impl ErrorReport {
    /// Flat `key = value` table.
    pub fn to_kv_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "total = {}", self.total).unwrap();
        writeln!(s, "counted = {}", self.counted).unwrap();
        writeln!(s, "skipped = {}", self.skipped).unwrap();
        for (n, (b, corners)) in self.per_box.iter().zip(&self.per_corner).enumerate() {
            writeln!(s, "box.{n} = {b}").unwrap();
            for (m, c) in corners.iter().enumerate() {
                writeln!(s, "box.{n}.corner.{m} = {c}").unwrap();
            }
        }
        s
    }
}

/// Sums corner errors over every (box, corner, virtual camera, source camera)
/// combination, in that nesting order.
pub fn scene_error(virtual_rig: &Rig, source_rig: &Rig, scene: &Scene, options: &MetricOptions) -> Result<ErrorReport> {
    let assumptions = virtual_rig.cameras().iter().map(|v| options.rule.resolve(v)).collect::<Result<Vec<_>>>()?;
    let mut report = ErrorReport {
        per_corner: Vec::with_capacity(scene.boxes.len()),
        per_box: Vec::with_capacity(scene.boxes.len()),
        ..Default::default()
    };
    for b in &scene.boxes {
        let mut corners = [0.0; 8];
        for (m, corner) in b.corners().iter().enumerate() {
            for (vcam, assumption) in virtual_rig.cameras().iter().zip(&assumptions) {
                for scam in source_rig.cameras() {
                    match corner_error_with(corner, scam, vcam, assumption, options.distance_ref) {
                        Some(e) => {
                            corners[m] += e;
                            report.counted += 1;
                        }
                        None => report.skipped += 1,
                    }
                }
            }
        }
        let box_total: f64 = corners.iter().sum();
        report.per_corner.push(corners);
        report.per_box.push(box_total);
        report.total += box_total;
    }
    Ok(report)
}

/// The physical rigs that must share one virtual rig.
#[derive(Debug, Clone, PartialEq)]
pub struct RigFamily {
    rigs: Vec<Rig>,
}

impl RigFamily {
    pub fn new(rigs: Vec<Rig>) -> Result<Self> {
        if rigs.is_empty() {
            return Err(invalid("rig family must contain at least one rig"));
        }
        Ok(Self { rigs })
    }

    pub fn rigs(&self) -> &[Rig] {
        &self.rigs
    }
}

/// Per (rig, scene) totals in rig-major, scene-minor order.
pub fn error_breakdown(
    family: &RigFamily,
    scenes: &[Scene],
    virtual_rig: &Rig,
    options: &MetricOptions,
) -> Result<Vec<f64>> {
    let pairs: Vec<(&Rig, &Scene)> = family.rigs.iter().flat_map(|r| scenes.iter().map(move |s| (r, s))).collect();
    let eval = |(r, s): &(&Rig, &Scene)| scene_error(virtual_rig, r, s, options).map(|e| e.total);

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        pairs.par_iter().map(eval).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        pairs.iter().map(eval).collect()
    }
}

/// Total error of a virtual rig across a rig family and a set of scenes.
pub fn total_error(family: &RigFamily, scenes: &[Scene], virtual_rig: &Rig, options: &MetricOptions) -> Result<f64> {
    Ok(error_breakdown(family, scenes, virtual_rig, options)?.into_iter().sum())
}
