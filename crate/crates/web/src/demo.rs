//! Plain Rust side of the browser demo. Everything here runs natively too.

use serde::Serialize;
use unirig::geometry::{Camera, Intrinsics, Pose, Rig};
use unirig::metric::{total_error, MetricOptions, RigFamily, Scene};
use unirig::optimizer::{optimize, Layout, RigTemplate, SearchSpace};
use unirig::presets::{preset, roof_center_baseline};
use unirig::rng::substream_seed;
use unirig::scenegen::{generate_scene, render_test_pattern, SceneSpec};
use unirig::warp::{build_warp_map, warp_and_blend, AssumptionRule, Sampling};
use unirig::{Error, Result};

/// Target name that selects the roof-center version of the source rig.
pub const ROOF_CENTER: &str = "roof-center";

pub const MAX_WIDTH: u32 = 1600;

/// Same rig with every camera resized to `width` at 16:9, keeping its FOV.
pub fn scaled(rig: &Rig, width: u32) -> Result<Rig> {
    if !(16..=MAX_WIDTH).contains(&width) {
        return Err(Error::InvalidArgument(format!("width {width} outside 16..={MAX_WIDTH}")));
    }
    let height = (width * 9 + 8) / 16;
    let cameras = rig
        .iter()
        .map(|(name, cam)| {
            let k = Intrinsics::from_fov(cam.intrinsics.fov_deg(), width, height)?;
            Ok((name.to_string(), Camera::new(k, cam.pose)))
        })
        .collect::<Result<Vec<_>>>()?;
    Rig::new(rig.label.clone(), cameras)
}

pub fn demo_scene(seed: u64, boxes: usize) -> Result<Scene> {
    generate_scene(&SceneSpec::new(substream_seed(seed, "demo-scene"), boxes))
}

fn target_rig(source: &Rig, target: &str) -> Result<Rig> {
    if target == ROOF_CENTER {
        Ok(roof_center_baseline(source))
    } else {
        preset(target)
    }
}

fn options(d0: f64) -> MetricOptions {
    MetricOptions { rule: AssumptionRule { camera_height: None, distance_threshold: d0 }, ..Default::default() }
}

/// A virtual view synthesized from the source rig next to a direct render
/// of the same virtual camera.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewPair {
    pub width: u32,
    pub height: u32,
    pub warped: Vec<u8>,
    pub reference: Vec<u8>,
    /// Fraction of virtual pixels seen by at least one source camera.
    pub coverage: f64,
}

pub fn virtual_view(
    source: &str,
    target: &str,
    index: usize,
    seed: u64,
    boxes: usize,
    width: u32,
    d0: f64,
) -> Result<ViewPair> {
    let scene = demo_scene(seed, boxes)?;
    let src = scaled(&preset(source)?, width)?;
    let virt = scaled(&target_rig(&src, target)?, width)?;
    let cam = virt.cameras().get(index).ok_or_else(|| {
        Error::InvalidArgument(format!("virtual rig {} has {} cameras, no index {index}", virt.label, virt.len()))
    })?;
    let images: Vec<_> = src.cameras().iter().map(|c| render_test_pattern(c, &scene)).collect();
    let assumption = options(d0).rule.resolve(cam)?;
    let map = build_warp_map(cam, &src, &assumption, 4.0)?;
    let warped = warp_and_blend(&map, &images, Sampling::Bilinear)?;
    let reference = render_test_pattern(cam, &scene);
    Ok(ViewPair {
        width: warped.width(),
        height: warped.height(),
        warped: warped.to_rgba(),
        reference: reference.to_rgba(),
        coverage: map.coverage(),
    })
}

/// Error of the roof-center rig shifted sideways by `offset` metres, for
/// evenly spaced offsets in `[-max_offset, max_offset]`.
pub fn error_curve(
    source: &str,
    seed: u64,
    boxes: usize,
    max_offset: f64,
    steps: usize,
    d0: f64,
) -> Result<Vec<[f64; 2]>> {
    if steps < 2 || !(max_offset.is_finite() && max_offset >= 0.0) {
        return Err(Error::InvalidArgument("need at least 2 steps and a finite offset range".into()));
    }
    let src = preset(source)?;
    let family = RigFamily::new(vec![src.clone()])?;
    let scenes = [demo_scene(seed, boxes)?];
    let base = roof_center_baseline(&src);
    (0..steps)
        .map(|i| {
            let dx = -max_offset + 2.0 * max_offset * i as f64 / (steps - 1) as f64;
            let cameras = base
                .iter()
                .map(|(name, cam)| {
                    let mut t = *cam.pose.translation();
                    t.x += dx;
                    let pose = Pose::new(*cam.pose.rotation(), t)?;
                    Ok((name.to_string(), Camera::new(cam.intrinsics, pose)))
                })
                .collect::<Result<Vec<_>>>()?;
            let rig = Rig::new(base.label.clone(), cameras)?;
            Ok([dx, total_error(&family, &scenes, &rig, &options(d0))?])
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchReport {
    pub source: String,
    pub coordinates: Vec<String>,
    pub best_params: Vec<f64>,
    pub best_error: f64,
    pub baseline_error: f64,
    pub evaluations: usize,
    /// Best error after each iteration, starting with the initial rig.
    pub history: Vec<f64>,
}

/// Searches a shared-center virtual rig with as many cameras as the source.
pub fn search_rig(source: &str, seed: u64, boxes: usize, iterations: usize, d0: f64) -> Result<SearchReport> {
    let src = preset(source)?;
    let baseline = roof_center_baseline(&src);
    let family = RigFamily::new(vec![src.clone()])?;
    let scenes = [demo_scene(seed, boxes)?];
    let template = RigTemplate::new("searched", src.len(), Layout::Shared)?;
    let first = &src.cameras()[0];
    let (yaw, _, _) = first.pose.mount_angles();
    let initial = vec![0.0, baseline.cameras()[0].center().0.y, 0.0, yaw, first.intrinsics.fov_deg().to_radians()];
    let coordinates = template.coordinate_names();
    let space = SearchSpace::full(template, initial)?;
    let mut config = space.standard_config(0.3)?;
    config.max_iterations = iterations;
    config.seed = substream_seed(seed, "demo-optimizer");
    let metric = options(d0);
    let result = optimize(&family, &scenes, &space, &metric, &config)?;
    Ok(SearchReport {
        source: source.to_string(),
        coordinates,
        best_params: result.best_params,
        best_error: result.best_error,
        baseline_error: total_error(&family, &scenes, &baseline, &metric)?,
        evaluations: result.evaluations,
        history: result.history.iter().map(|h| h.best_error).collect(),
    })
}
