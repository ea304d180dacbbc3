use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use unirig::geometry::{read_rig, write_rig, Rig};
use unirig::image::ImageBuffer;
use unirig::metric::{error_breakdown, DistanceRef, MetricOptions, RigFamily, Scene};
use unirig::optimizer::{optimize as search, Layout, RigTemplate, SearchSpace};
use unirig::presets::{all_presets, roof_center_baseline};
use unirig::rng::substream_seed;
use unirig::scenegen::{generate_scene, render_test_pattern, SceneSpec};
use unirig::warp::{build_warp_map, warp_and_blend, write_warp_map, AssumptionRule, Sampling};

use crate::args::*;
use crate::error::{at, io_at, CliError, CliResult};
use crate::manifest::{RunManifest, MANIFEST_FILE};

pub const EVAL_TABLE: &str = "errors.txt";
pub const BEST_RIG: &str = "best_rig.toml";
pub const HISTORY: &str = "history.jsonl";
pub const SUMMARY: &str = "summary.txt";

/// Inputs read and files written by one command.
#[derive(Debug, Default)]
struct Record {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl Record {
    fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }

    fn output(&mut self, p: PathBuf) -> PathBuf {
        self.outputs.push(p.clone());
        p
    }
}

pub fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::Presets(a) => finish("presets", &a, None, &a.out, presets(&a)?),
        Command::GenScene(a) => finish("gen-scene", &a, Some(a.seed), &a.out, gen_scene(&a)?),
        Command::Render(a) => finish("render", &a, None, &a.out, render(&a)?),
        Command::Warp(a) => finish("warp", &a, None, &a.out, warp(&a)?),
        Command::Eval(a) => finish("eval", &a, None, &a.out, eval(&a)?),
        Command::Optimize(mut a) => {
            let record = optimize(&mut a)?;
            finish("optimize", &a, Some(a.seed), &a.out, record)
        }
        Command::Replay(a) => replay(&a),
    }
}

fn finish<A: serde::Serialize>(name: &str, args: &A, seed: Option<u64>, out: &Path, record: Record) -> CliResult<()> {
    let mut m = RunManifest::new(name, args, seed)?;
    m.inputs = record.inputs.iter().map(|p| p.display().to_string()).collect();
    m.outputs = record.outputs.iter().map(|p| p.display().to_string()).collect();
    m.save(&out.join(MANIFEST_FILE))
}

fn replay(a: &ReplayArgs) -> CliResult<()> {
    let m = RunManifest::load(&a.manifest)?;
    let mut command = match m.command.as_str() {
        "presets" => Command::Presets(m.args()?),
        "gen-scene" => Command::GenScene(m.args()?),
        "render" => Command::Render(m.args()?),
        "warp" => Command::Warp(m.args()?),
        "eval" => Command::Eval(m.args()?),
        "optimize" => Command::Optimize(m.args()?),
        other => return Err(CliError::Usage(format!("cannot replay command {other:?}"))),
    };
    if let Some(out) = &a.out {
        let slot = match &mut command {
            Command::Presets(c) => &mut c.out,
            Command::GenScene(c) => &mut c.out,
            Command::Render(c) => &mut c.out,
            Command::Warp(c) => &mut c.out,
            Command::Eval(c) => &mut c.out,
            Command::Optimize(c) => &mut c.out,
            Command::Replay(_) => unreachable!(),
        };
        *slot = out.clone();
    }
    execute(command)
}

fn make_dir(dir: &Path) -> CliResult<()> {
    io_at(dir, fs::create_dir_all(dir))
}

fn load_rig(path: &Path, record: &mut Record) -> CliResult<Rig> {
    record.input(path);
    at(path, read_rig(path))
}

fn load_scene(path: &Path, record: &mut Record) -> CliResult<Scene> {
    record.input(path);
    at(path, Scene::load(path))
}

fn rule(a: &AssumptionArgs) -> AssumptionRule {
    AssumptionRule {
        camera_height: match a.hc {
            HeightArg::Camera => None,
            HeightArg::Fixed(h) => Some(h),
        },
        distance_threshold: a.d0,
    }
}

fn metric_options(a: &AssumptionArgs, d: DistanceArg) -> MetricOptions {
    MetricOptions {
        rule: rule(a),
        distance_ref: match d {
            DistanceArg::Virtual => DistanceRef::Virtual,
            DistanceArg::Source => DistanceRef::Source,
        },
    }
}

fn write_text(path: PathBuf, text: &str, record: &mut Record) -> CliResult<()> {
    let path = record.output(path);
    io_at(&path, fs::write(&path, text))
}

fn presets(a: &PresetsArgs) -> CliResult<Record> {
    make_dir(&a.out)?;
    let mut record = Record::default();
    for rig in all_presets() {
        let path = record.output(a.out.join(format!("{}.toml", rig.label)));
        at(&path, write_rig(&path, &rig))?;
    }
    Ok(record)
}

fn gen_scene(a: &GenSceneArgs) -> CliResult<Record> {
    make_dir(&a.out)?;
    let mut record = Record::default();
    for i in 0..a.count {
        let spec = SceneSpec {
            r_min: a.r_min,
            r_max: a.r_max,
            min_separation: a.min_sep,
            ..SceneSpec::new(substream_seed(a.seed, &format!("scene{i}")), a.boxes)
        };
        let scene = generate_scene(&spec)?;
        write_text(a.out.join(format!("scene_{i:03}.txt")), &scene.to_text(), &mut record)?;
    }
    Ok(record)
}

fn render(a: &RenderArgs) -> CliResult<Record> {
    let mut record = Record::default();
    let rig = load_rig(&a.rig, &mut record)?;
    let scene = load_scene(&a.scene, &mut record)?;
    make_dir(&a.out)?;
    for (name, cam) in rig.iter() {
        let path = record.output(a.out.join(format!("{name}.ppm")));
        at(&path, render_test_pattern(cam, &scene).save_ppm(&path))?;
    }
    Ok(record)
}

fn warp(a: &WarpArgs) -> CliResult<Record> {
    let mut record = Record::default();
    let source = load_rig(&a.rig, &mut record)?;
    let virt = load_rig(&a.virtual_rig, &mut record)?;
    if !(a.weight_exp >= 0.0 && a.weight_exp.is_finite()) {
        return Err(CliError::Usage(format!("weight exponent must be non-negative, got {}", a.weight_exp)));
    }
    let images = source
        .names()
        .iter()
        .map(|name| {
            let path = a.images.join(format!("{name}.ppm"));
            record.input(&path);
            at(&path, ImageBuffer::load_ppm(&path))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let sampling = match a.sampling {
        SamplingArg::Bilinear => Sampling::Bilinear,
        SamplingArg::Nearest => Sampling::Nearest,
    };
    let rule = rule(&a.assumption);
    make_dir(&a.out)?;
    for (name, cam) in virt.iter() {
        let map = build_warp_map(cam, &source, &rule.resolve(cam)?, a.weight_exp)?;
        let out = warp_and_blend(&map, &images, sampling)?;

        let img_path = record.output(a.out.join(format!("{name}.ppm")));
        at(&img_path, out.save_ppm(&img_path))?;
        let mask_path = record.output(a.out.join(format!("{name}.mask.pgm")));
        let file = io_at(&mask_path, fs::File::create(&mask_path))?;
        at(&mask_path, out.write_mask_pgm(BufWriter::new(file)))?;
        let map_path = record.output(a.out.join(format!("{name}.vwmp")));
        let file = io_at(&map_path, fs::File::create(&map_path))?;
        at(&map_path, write_warp_map(&map, BufWriter::new(file)))?;
    }
    Ok(record)
}

/// Key/value table of per-(rig, scene), per-rig, per-scene and total errors.
pub fn error_table(rigs: &[Rig], scenes: &[Scene], breakdown: &[f64]) -> String {
    let mut s = String::new();
    let n = scenes.len();
    for (i, rig) in rigs.iter().enumerate() {
        writeln!(s, "rig.{i}.label = {}", rig.label).unwrap();
        for j in 0..n {
            writeln!(s, "rig.{i}.scene.{j} = {}", breakdown[i * n + j]).unwrap();
        }
        writeln!(s, "rig.{i} = {}", breakdown[i * n..(i + 1) * n].iter().sum::<f64>()).unwrap();
    }
    for (j, scene) in scenes.iter().enumerate() {
        writeln!(s, "scene.{j}.label = {}", scene.label).unwrap();
        let col: f64 = (0..rigs.len()).map(|i| breakdown[i * n + j]).sum();
        writeln!(s, "scene.{j} = {col}").unwrap();
    }
    writeln!(s, "total = {}", breakdown.iter().sum::<f64>()).unwrap();
    s
}

fn eval(a: &EvalArgs) -> CliResult<Record> {
    let mut record = Record::default();
    let virt = load_rig(&a.virtual_rig, &mut record)?;
    let rigs = a.rig.iter().map(|p| load_rig(p, &mut record)).collect::<CliResult<Vec<_>>>()?;
    let scenes = a.scene.iter().map(|p| load_scene(p, &mut record)).collect::<CliResult<Vec<_>>>()?;
    let family = RigFamily::new(rigs.clone())?;
    let breakdown = error_breakdown(&family, &scenes, &virt, &metric_options(&a.assumption, a.distance_ref))?;
    let table = error_table(&rigs, &scenes, &breakdown);
    print!("{table}");
    make_dir(&a.out)?;
    write_text(a.out.join(EVAL_TABLE), &table, &mut record)?;
    Ok(record)
}

/// Resolves defaults in `a` in place, so the manifest records them.
fn optimize(a: &mut OptimizeArgs) -> CliResult<Record> {
    let mut record = Record::default();
    let rigs = a.rig.iter().map(|p| load_rig(p, &mut record)).collect::<CliResult<Vec<_>>>()?;
    let scenes = if a.scene.is_empty() {
        (0..a.scenes)
            .map(|i| {
                let seed = substream_seed(a.seed, &format!("scene{i}"));
                generate_scene(&SceneSpec::new(seed, a.boxes)).map_err(CliError::from)
            })
            .collect::<CliResult<Vec<_>>>()?
    } else {
        a.scene.iter().map(|p| load_scene(p, &mut record)).collect::<CliResult<Vec<_>>>()?
    };
    if scenes.is_empty() {
        return Err(CliError::Usage("optimization needs at least one scene".into()));
    }
    let family = RigFamily::new(rigs)?;
    let first = &family.rigs()[0];
    let baseline = roof_center_baseline(first);
    let height = baseline.cameras()[0].center().0.y;

    let cameras = *a.cameras.get_or_insert(first.len());
    let first_fov = first.cameras()[0].intrinsics.fov_deg();
    let fov = *a.fov.get_or_insert(first_fov);
    let (template, initial) = match a.layout {
        LayoutArg::Shared => {
            let (yaw, _, _) = first.cameras()[0].pose.mount_angles();
            let t = RigTemplate::new("optimized", cameras, Layout::Shared)?;
            (t, vec![0.0, height, 0.0, yaw, fov.to_radians()])
        }
        LayoutArg::PerCamera => {
            if cameras != first.len() {
                return Err(CliError::Usage(format!(
                    "per-camera layout starts from the first rig and needs {} cameras, got {cameras}",
                    first.len()
                )));
            }
            let t = RigTemplate::new("optimized", cameras, Layout::PerCamera)?;
            (t, RigTemplate::encode_per_camera(&baseline)?)
        }
    };
    let space = SearchSpace::full(template, initial)?;
    let mut config = space.standard_config(a.sigma)?;
    let g = a.grid;
    config.grid = [g.position, g.position, g.position, g.yaw_deg.to_radians(), g.fov_deg.to_radians()]
        .iter()
        .copied()
        .cycle()
        .take(space.dim())
        .collect();
    let pop = *a.pop.get_or_insert(config.population);
    let elite = *a.elite.get_or_insert(pop / 2);
    config.set_population(pop, elite)?;
    config.max_iterations = a.iters;
    config.seed = substream_seed(a.seed, "optimizer");

    let metric = metric_options(&a.assumption, a.distance_ref);
    let result = search(&family, &scenes, &space, &metric, &config)?;
    let baseline_error = unirig::metric::total_error(&family, &scenes, &baseline, &metric)?;

    make_dir(&a.out)?;
    if a.scene.is_empty() {
        for (i, s) in scenes.iter().enumerate() {
            write_text(a.out.join(format!("scene_{i:03}.txt")), &s.to_text(), &mut record)?;
        }
    }
    let rig_path = record.output(a.out.join(BEST_RIG));
    at(&rig_path, write_rig(&rig_path, &result.best_rig))?;
    let mut history = String::new();
    for h in &result.history {
        history.push_str(&serde_json::to_string(h).expect("history records serialize"));
        history.push('\n');
    }
    write_text(a.out.join(HISTORY), &history, &mut record)?;
    let mut summary = String::new();
    writeln!(summary, "best_error = {}", result.best_error).unwrap();
    writeln!(summary, "baseline_error = {baseline_error}").unwrap();
    writeln!(summary, "evaluations = {}", result.evaluations).unwrap();
    writeln!(summary, "iterations = {}", a.iters).unwrap();
    for (name, v) in space.template.coordinate_names().iter().zip(&result.best_params) {
        writeln!(summary, "param.{name} = {v}").unwrap();
    }
    print!("{summary}");
    write_text(a.out.join(SUMMARY), &summary, &mut record)?;
    Ok(record)
}
