//! Seeded synthetic scenes and test-pattern renders.
//!
//! Class sizes are synthetic defaults chosen to look plausible, not measured
//! statistics.

mod render;

pub use render::{class_color, render_test_pattern, SKY_COLOR};

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{invalid, Result};
use crate::geometry::WorldPoint;
use crate::metric::{Box3, BoxClass, BoxSize, Scene};
use crate::rng::substream;

/// Inclusive `(min, max)` per dimension, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SizeRange {
    pub length: (f64, f64),
    pub width: (f64, f64),
    pub height: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassSpec {
    pub class: BoxClass,
    pub probability: f64,
    pub size: SizeRange,
}

pub fn default_classes() -> Vec<ClassSpec> {
    let c = |class, probability, length, width, height| ClassSpec {
        class,
        probability,
        size: SizeRange { length, width, height },
    };
    vec![
        c(BoxClass::Car, 0.5, (4.0, 5.0), (1.7, 2.0), (1.4, 1.7)),
        c(BoxClass::Pedestrian, 0.15, (0.5, 0.7), (0.5, 0.7), (1.5, 1.9)),
        c(BoxClass::Truck, 0.1, (6.0, 9.0), (2.3, 2.6), (2.8, 3.6)),
        c(BoxClass::Bus, 0.05, (10.0, 12.0), (2.5, 2.6), (3.0, 3.5)),
        c(BoxClass::Motorcycle, 0.1, (1.8, 2.2), (0.7, 0.9), (1.2, 1.5)),
        c(BoxClass::Bicycle, 0.1, (1.6, 1.9), (0.5, 0.7), (1.0, 1.2)),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub seed: u64,
    pub n_boxes: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub classes: Vec<ClassSpec>,
    /// Minimum ground-plane distance between box centers.
    pub min_separation: Option<f64>,
    pub label: String,
}

impl SceneSpec {
    pub fn new(seed: u64, n_boxes: usize) -> Self {
        Self {
            seed,
            n_boxes,
            r_min: 4.0,
            r_max: 40.0,
            classes: default_classes(),
            min_separation: None,
            label: format!("synthetic-{seed}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_min < self.r_max && self.r_max.is_finite()) {
            return Err(invalid(format!("need 0 < r_min ({}) < r_max ({})", self.r_min, self.r_max)));
        }
        if self.classes.is_empty() {
            return Err(invalid("class mix is empty"));
        }
        let total: f64 = self.classes.iter().map(|c| c.probability).sum();
        if (total - 1.0).abs() > 1e-9 || self.classes.iter().any(|c| !(c.probability >= 0.0)) {
            return Err(invalid(format!("class probabilities sum to {total}, expected 1")));
        }
        for c in &self.classes {
            for (lo, hi) in [c.size.length, c.size.width, c.size.height] {
                if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                    return Err(invalid(format!("bad size range ({lo}, {hi}) for {}", c.class.name())));
                }
            }
        }
        if let Some(s) = self.min_separation {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(invalid("minimum separation must be non-negative"));
            }
        }
        Ok(())
    }
}

const PLACEMENT_ATTEMPTS: usize = 1000;

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Boxes placed area-uniformly in the annulus `r_min <= |(x, z)| <= r_max`,
/// resting on the ground with uniform yaw.
pub fn generate_scene(spec: &SceneSpec) -> Result<Scene> {
    spec.validate()?;
    let mut rng = substream(spec.seed, "scenegen");
    let mut boxes: Vec<Box3> = Vec::with_capacity(spec.n_boxes);
    let (a2, b2) = (spec.r_min * spec.r_min, spec.r_max * spec.r_max);
    for _ in 0..spec.n_boxes {
        let pick: f64 = rng.random();
        let mut acc = 0.0;
        let class = spec
            .classes
            .iter()
            .find(|c| {
                acc += c.probability;
                pick < acc
            })
            .unwrap_or_else(|| spec.classes.iter().rev().find(|c| c.probability > 0.0).unwrap());
        let size = BoxSize {
            length: uniform(&mut rng, class.size.length),
            width: uniform(&mut rng, class.size.width),
            height: uniform(&mut rng, class.size.height),
        };
        let yaw = rng.random_range(-PI..PI);
        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let r = rng.random_range(a2..=b2).sqrt().clamp(spec.r_min, spec.r_max);
            let theta = rng.random_range(-PI..PI);
            let (x, z) = (r * theta.sin(), r * theta.cos());
            let clear = spec.min_separation.is_none_or(|s| {
                boxes.iter().all(|b| {
                    let c = b.center().0;
                    (c.x - x).hypot(c.z - z) >= s
                })
            });
            if clear {
                placed = Some((x, z));
                break;
            }
        }
        let (x, z) = placed.ok_or_else(|| invalid("could not place box with the requested separation"))?;
        boxes.push(Box3::new(WorldPoint::new(x, size.height / 2.0, z), size, yaw, class.class)?);
    }
    Ok(Scene::new(spec.label.clone(), spec.seed, boxes))
}
