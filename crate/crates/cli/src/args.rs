//! Command-line arguments. Every args struct round-trips through the run
//! manifest, so all values are stored fully resolved.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "unirig", version, about = "Virtual camera rig warping, evaluation and search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Write the eight reference rig files.
    Presets(PresetsArgs),
    /// Generate synthetic box scenes.
    GenScene(GenSceneArgs),
    /// Render test-pattern images of a scene for every camera of a rig.
    Render(RenderArgs),
    /// Re-project a rig's images into a virtual rig.
    Warp(WarpArgs),
    /// Score a virtual rig against physical rigs and scenes.
    Eval(EvalArgs),
    /// Search the virtual rig minimizing the projection error.
    Optimize(OptimizeArgs),
    /// Re-run a command from its manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Presets(_) => "presets",
            Self::GenScene(_) => "gen-scene",
            Self::Render(_) => "render",
            Self::Warp(_) => "warp",
            Self::Eval(_) => "eval",
            Self::Optimize(_) => "optimize",
            Self::Replay(_) => "replay",
        }
    }
}

/// Ground height rule: `camera` uses each virtual camera's own height above
/// the ground, a number fixes it (meters).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum HeightArg {
    #[default]
    Camera,
    Fixed(f64),
}

impl FromStr for HeightArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "camera" {
            return Ok(Self::Camera);
        }
        let h: f64 = s.parse().map_err(|_| format!("expected \"camera\" or meters, got {s:?}"))?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(format!("camera height must be positive, got {h}"));
        }
        Ok(Self::Fixed(h))
    }
}

impl fmt::Display for HeightArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Camera => f.write_str("camera"),
            Self::Fixed(h) => write!(f, "{h}"),
        }
    }
}

impl TryFrom<String> for HeightArg {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<HeightArg> for String {
    fn from(h: HeightArg) -> Self {
        h.to_string()
    }
}

/// Grid spacing `pos,yaw,fov` in meters, degrees, degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GridArg {
    pub position: f64,
    pub yaw_deg: f64,
    pub fov_deg: f64,
}

impl Default for GridArg {
    fn default() -> Self {
        Self { position: 0.1, yaw_deg: 1.0, fov_deg: 1.0 }
    }
}

impl FromStr for GridArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| format!("bad grid value {p:?}")))
            .collect::<Result<_, _>>()?;
        let [position, yaw_deg, fov_deg] = parts[..] else {
            return Err(format!("expected pos,yaw,fov, got {s:?}"));
        };
        if !parts.iter().all(|&v| v > 0.0 && v.is_finite()) {
            return Err(format!("grid spacings must be positive, got {s:?}"));
        }
        Ok(Self { position, yaw_deg, fov_deg })
    }
}

impl fmt::Display for GridArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.position, self.yaw_deg, self.fov_deg)
    }
}

impl TryFrom<String> for GridArg {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<GridArg> for String {
    fn from(g: GridArg) -> Self {
        g.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingArg {
    Bilinear,
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceArg {
    Virtual,
    Source,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutArg {
    Shared,
    PerCamera,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AssumptionArgs {
    /// Ground/far-surface distance threshold, meters.
    #[arg(long, default_value_t = 50.0)]
    pub d0: f64,
    /// Camera height above the ground: "camera" or meters.
    #[arg(long, default_value_t = HeightArg::Camera)]
    pub hc: HeightArg,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PresetsArgs {
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenSceneArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scenes to generate.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Boxes per scene.
    #[arg(long, default_value_t = 30)]
    pub boxes: usize,
    #[arg(long, default_value_t = 4.0)]
    pub r_min: f64,
    #[arg(long, default_value_t = 40.0)]
    pub r_max: f64,
    /// Minimum ground distance between box centers, meters.
    #[arg(long)]
    pub min_sep: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RenderArgs {
    #[arg(long)]
    pub rig: PathBuf,
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct WarpArgs {
    /// Physical rig file.
    #[arg(long)]
    pub rig: PathBuf,
    /// Virtual rig file.
    #[arg(long = "virtual")]
    pub virtual_rig: PathBuf,
    /// Directory holding `<camera name>.ppm` for each physical camera.
    #[arg(long)]
    pub images: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub assumption: AssumptionArgs,
    #[arg(long, value_enum, default_value_t = SamplingArg::Bilinear)]
    pub sampling: SamplingArg,
    /// Exponent of the angular blend weight.
    #[arg(long, default_value_t = 4.0)]
    pub weight_exp: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    #[arg(long = "virtual")]
    pub virtual_rig: PathBuf,
    /// Physical rig files (repeatable).
    #[arg(long, required = true)]
    pub rig: Vec<PathBuf>,
    /// Scene files (repeatable).
    #[arg(long, required = true)]
    pub scene: Vec<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub assumption: AssumptionArgs,
    #[arg(long, value_enum, default_value_t = DistanceArg::Virtual)]
    pub distance_ref: DistanceArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OptimizeArgs {
    /// Physical rig files forming the family (repeatable).
    #[arg(long, required = true)]
    pub rig: Vec<PathBuf>,
    /// Scene files; when absent, scenes are generated from the seed.
    #[arg(long)]
    pub scene: Vec<PathBuf>,
    /// Generated scene count when no scene file is given.
    #[arg(long, default_value_t = 4)]
    pub scenes: usize,
    /// Boxes per generated scene.
    #[arg(long, default_value_t = 30)]
    pub boxes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    /// Population size; defaults to the standard size for the dimension.
    #[arg(long)]
    pub pop: Option<usize>,
    /// Elite count; defaults to half the population.
    #[arg(long)]
    pub elite: Option<usize>,
    #[arg(long, default_value_t = GridArg::default())]
    pub grid: GridArg,
    #[arg(long, value_enum, default_value_t = LayoutArg::Shared)]
    pub layout: LayoutArg,
    /// Virtual camera count; defaults to the first rig's count.
    #[arg(long)]
    pub cameras: Option<usize>,
    /// Initial virtual FOV in degrees; defaults to the first rig's first camera.
    #[arg(long)]
    pub fov: Option<f64>,
    /// Initial step size.
    #[arg(long, default_value_t = 0.3)]
    pub sigma: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub assumption: AssumptionArgs,
    #[arg(long, value_enum, default_value_t = DistanceArg::Virtual)]
    pub distance_ref: DistanceArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
