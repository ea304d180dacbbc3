//! Virtual-rig parameterization and the rig search driver.

use std::f64::consts::TAU;

use nalgebra::Vector3;

use crate::error::{invalid, Error, Result};
use crate::geometry::{Camera, Intrinsics, Pose, Rig};
use crate::metric::{total_error, MetricOptions, RigFamily, Scene};

use super::{minimize, HistoryRecord, OptConfig};

/// How a parameter vector maps onto virtual cameras.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Layout {
    /// `(x, y, z, base_yaw, fov)`: all cameras share one center and FOV,
    /// yaws are `base_yaw + 2 pi k / K`.
    #[default]
    Shared,
    /// `(x, y, z, yaw, fov)` for each camera.
    PerCamera,
}

/// Fixed properties of the virtual rig being searched. Pitch and roll are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RigTemplate {
    pub label: String,
    pub cameras: usize,
    pub width: u32,
    pub height: u32,
    pub layout: Layout,
}

impl RigTemplate {
    pub fn new(label: impl Into<String>, cameras: usize, layout: Layout) -> Result<Self> {
        if cameras == 0 {
            return Err(invalid("virtual rig needs at least one camera"));
        }
        Ok(Self { label: label.into(), cameras, width: 1600, height: 900, layout })
    }

    pub fn dim(&self) -> usize {
        match self.layout {
            Layout::Shared => 5,
            Layout::PerCamera => 5 * self.cameras,
        }
    }

    pub fn coordinate_names(&self) -> Vec<String> {
        const FIELDS: [&str; 5] = ["x", "y", "z", "yaw", "fov"];
        match self.layout {
            Layout::Shared => FIELDS.iter().map(|s| s.to_string()).collect(),
            Layout::PerCamera => {
                (0..self.cameras).flat_map(|k| FIELDS.iter().map(move |f| format!("v{k}.{f}"))).collect()
            }
        }
    }

    /// Builds the rig for a full parameter vector. Angles are radians.
    pub fn build(&self, params: &[f64]) -> Result<Rig> {
        if params.len() != self.dim() {
            return Err(invalid(format!("expected {} parameters, got {}", self.dim(), params.len())));
        }
        let mk = |p: &[f64], yaw: f64| -> Result<Camera> {
            let k = Intrinsics::from_fov(p[4].to_degrees(), self.width, self.height)?;
            Ok(Camera::new(k, Pose::from_mount(Vector3::new(p[0], p[1], p[2]), yaw, 0.0, 0.0)))
        };
        let cams = (0..self.cameras)
            .map(|k| {
                let cam = match self.layout {
                    Layout::Shared => mk(params, params[3] + TAU * k as f64 / self.cameras as f64)?,
                    Layout::PerCamera => {
                        let p = &params[5 * k..5 * k + 5];
                        mk(p, p[3])?
                    }
                };
                Ok((format!("virt{k}"), cam))
            })
            .collect::<Result<Vec<_>>>()?;
        Rig::new(self.label.clone(), cams)
    }

    /// Parameter vector of an existing level rig under the per-camera layout.
    pub fn encode_per_camera(rig: &Rig) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(5 * rig.len());
        for cam in rig.cameras() {
            if !cam.pose.is_level() {
                return Err(invalid("only level rigs can be encoded"));
            }
            let k = &cam.intrinsics;
            if (k.fx - k.fy).abs() > 1e-9 * k.fx {
                return Err(invalid("only square-pixel rigs can be encoded"));
            }
            let c = cam.center().0;
            let (yaw, _, _) = cam.pose.mount_angles();
            out.extend([c.x, c.y, c.z, yaw, k.fov_deg().to_radians()]);
        }
        Ok(out)
    }
}

/// Default bounds and grid for a template: positions within the ego
/// footprint neighbourhood, heights 0.5..3 m, any yaw, FOV 30..120 deg.
/// Grid: 0.1 m, 1 deg, 1 deg.
pub fn default_bounds(template: &RigTemplate) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let one = (
        [-2.0, 0.5, -3.0, -std::f64::consts::PI, 30f64.to_radians()],
        [2.0, 3.0, 3.0, std::f64::consts::PI, 120f64.to_radians()],
        [0.1, 0.1, 0.1, 1f64.to_radians(), 1f64.to_radians()],
    );
    let reps = template.dim() / 5;
    let tile = |a: [f64; 5]| a.iter().copied().cycle().take(5 * reps).collect::<Vec<_>>();
    (tile(one.0), tile(one.1), tile(one.2))
}

/// The searched coordinates: a subset of the template's parameters, the rest
/// held at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub template: RigTemplate,
    pub base: Vec<f64>,
    pub free: Vec<usize>,
}

impl SearchSpace {
    pub fn new(template: RigTemplate, base: Vec<f64>, free: Vec<usize>) -> Result<Self> {
        if base.len() != template.dim() {
            return Err(invalid(format!("base has {} parameters, expected {}", base.len(), template.dim())));
        }
        if free.is_empty() {
            return Err(invalid("search space has no free coordinates"));
        }
        let mut seen = vec![false; base.len()];
        for &i in &free {
            if i >= base.len() || std::mem::replace(&mut seen[i], true) {
                return Err(invalid(format!("bad free coordinate index {i}")));
            }
        }
        Ok(Self { template, base, free })
    }

    /// All coordinates free.
    pub fn full(template: RigTemplate, base: Vec<f64>) -> Result<Self> {
        let free = (0..template.dim()).collect();
        Self::new(template, base, free)
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    pub fn expand(&self, free_values: &[f64]) -> Vec<f64> {
        let mut p = self.base.clone();
        for (&i, &v) in self.free.iter().zip(free_values) {
            p[i] = v;
        }
        p
    }

    /// Picks the free coordinates out of a full vector.
    pub fn project(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    pub fn rig_for(&self, free_values: &[f64]) -> Result<Rig> {
        if free_values.len() != self.dim() {
            return Err(invalid(format!("expected {} free values, got {}", self.dim(), free_values.len())));
        }
        self.template.build(&self.expand(free_values))
    }

    /// An optimizer config with standard settings, the default bounds and
    /// grid restricted to the free coordinates, starting at `base`.
    pub fn standard_config(&self, initial_sigma: f64) -> Result<OptConfig> {
        let (lo, hi, grid) = default_bounds(&self.template);
        OptConfig::standard(
            self.project(&self.base),
            initial_sigma,
            self.project(&lo),
            self.project(&hi),
            self.project(&grid),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RigOptimization {
    /// Full parameter vector of the best rig.
    pub best_params: Vec<f64>,
    pub best_rig: Rig,
    pub best_error: f64,
    pub history: Vec<HistoryRecord>,
    pub evaluations: usize,
}

/// Searches the virtual rig minimizing the total error over `family` and
/// `scenes`. Candidates whose rig cannot be built score `+inf`.
pub fn optimize(
    family: &RigFamily,
    scenes: &[Scene],
    space: &SearchSpace,
    metric: &MetricOptions,
    config: &OptConfig,
) -> Result<RigOptimization> {
    if scenes.is_empty() {
        return Err(invalid("optimization needs at least one scene"));
    }
    if config.dim() != space.dim() {
        return Err(invalid(format!("config has {} coordinates, search space has {}", config.dim(), space.dim())));
    }
    // surface bad metric settings before the search swallows them as +inf
    let start = space.rig_for(&config.snap(&config.clamp(&config.initial_mean)))?;
    total_error(family, scenes, &start, metric)?;

    let objective =
        |x: &[f64]| space.rig_for(x).and_then(|rig| total_error(family, scenes, &rig, metric)).unwrap_or(f64::INFINITY);
    let out = minimize(objective, config)?;
    if !out.best_error.is_finite() {
        return Err(Error::Optimizer("no candidate produced a finite error".into()));
    }
    let best_params = space.expand(&out.best);
    let best_rig = space.template.build(&best_params)?;
    Ok(RigOptimization {
        best_params,
        best_rig,
        best_error: out.best_error,
        history: out.history,
        evaluations: out.evaluations,
    })
}
