//! Oriented 3D boxes, scenes, and the line-oriented scene text format.
//!
//! ```text
//! scene v1
//! seed 42
//! label town-a
//! # class cx cy cz length width height yaw
//! Car 10.5 0.75 -3.25 4.4 1.8 1.5 0.3
//! ```

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::Vector3;

use crate::error::{invalid, Error, Result};
use crate::geometry::{rot_y, WorldPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoxClass {
    Car,
    Bus,
    Truck,
    Pedestrian,
    Motorcycle,
    Bicycle,
}

impl BoxClass {
    pub const ALL: [BoxClass; 6] =
        [BoxClass::Car, BoxClass::Bus, BoxClass::Truck, BoxClass::Pedestrian, BoxClass::Motorcycle, BoxClass::Bicycle];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Car => "Car",
            Self::Bus => "Bus",
            Self::Truck => "Truck",
            Self::Pedestrian => "Pedestrian",
            Self::Motorcycle => "Motorcycle",
            Self::Bicycle => "Bicycle",
        }
    }
}

impl FromStr for BoxClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| Error::Parse(format!("unknown box class {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxSize {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

/// Oriented box. Length runs along the box-local `x` axis, height along the
/// world vertical; `yaw` rotates about the vertical.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3 {
    center: WorldPoint,
    size: BoxSize,
    yaw: f64,
    class: BoxClass,
}

impl Box3 {
    pub fn new(center: WorldPoint, size: BoxSize, yaw: f64, class: BoxClass) -> Result<Self> {
        if !center.0.iter().all(|c| c.is_finite()) {
            return Err(invalid("box center must be finite"));
        }
        let dims = [size.length, size.width, size.height];
        if !dims.iter().all(|d| d.is_finite() && *d > 0.0) {
            return Err(invalid(format!("box size {dims:?} must be positive")));
        }
        if !(-std::f64::consts::PI..std::f64::consts::PI).contains(&yaw) {
            return Err(invalid(format!("box yaw {yaw} outside [-pi, pi)")));
        }
        Ok(Self { center, size, yaw, class })
    }

    pub fn center(&self) -> WorldPoint {
        self.center
    }

    pub fn size(&self) -> BoxSize {
        self.size
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn class(&self) -> BoxClass {
        self.class
    }

    /// The 8 corners. Bit 0 of the index selects the length sign, bit 1 the
    /// height sign and bit 2 the width sign (0 = negative half-extent), e.g.
    /// corner 0 is `(-l/2, -h/2, -w/2)` before rotation.
    pub fn corners(&self) -> [WorldPoint; 8] {
        let r = rot_y(self.yaw);
        let half = Vector3::new(self.size.length, self.size.height, self.size.width) / 2.0;
        std::array::from_fn(|m| {
            let sign = |bit: usize| if m >> bit & 1 == 1 { 1.0 } else { -1.0 };
            let local = Vector3::new(sign(0) * half.x, sign(1) * half.y, sign(2) * half.z);
            WorldPoint(self.center.0 + r * local)
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub boxes: Vec<Box3>,
    pub seed: u64,
    pub label: String,
}

impl Scene {
    pub fn new(label: impl Into<String>, seed: u64, boxes: Vec<Box3>) -> Self {
        Self { boxes, seed, label: label.into() }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "scene v1").unwrap();
        writeln!(s, "seed {}", self.seed).unwrap();
        writeln!(s, "label {}", self.label).unwrap();
        writeln!(s, "# class cx cy cz length width height yaw").unwrap();
        for b in &self.boxes {
            let c = b.center.0;
            let z = b.size;
            writeln!(s, "{} {} {} {} {} {} {} {}", b.class.name(), c.x, c.y, c.z, z.length, z.width, z.height, b.yaw)
                .unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let bad = |n: usize, msg: &str| Error::Parse(format!("scene line {n}: {msg}"));

        match lines.next() {
            Some((_, "scene v1")) => {}
            Some((n, _)) => return Err(bad(n, "expected header \"scene v1\"")),
            None => return Err(Error::Parse("empty scene file".into())),
        }
        let (n, seed_line) = lines.next().ok_or_else(|| Error::Parse("missing seed line".into()))?;
        let seed = seed_line
            .strip_prefix("seed ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| bad(n, "expected \"seed <u64>\""))?;
        let (n, label_line) = lines.next().ok_or_else(|| Error::Parse("missing label line".into()))?;
        let label = label_line
            .strip_prefix("label")
            .map(|s| s.trim().to_string())
            .ok_or_else(|| bad(n, "expected \"label <text>\""))?;

        let mut boxes = Vec::new();
        for (n, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 8 {
                return Err(bad(n, "expected 8 fields per box"));
            }
            let class: BoxClass = fields[0].parse().map_err(|e: Error| bad(n, &e.to_string()))?;
            let nums = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|_| bad(n, &format!("bad number {f:?}"))))
                .collect::<Result<Vec<_>>>()?;
            let b = Box3::new(
                WorldPoint::new(nums[0], nums[1], nums[2]),
                BoxSize { length: nums[3], width: nums[4], height: nums[5] },
                nums[6],
                class,
            )
            .map_err(|e| bad(n, &e.to_string()))?;
            boxes.push(b);
        }
        Ok(Self { boxes, seed, label })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}
