use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use planedet::fspf::{FspfParams, InlierBudget, InlierClaim};
use planedet::geom::{Point3, UnitVector3};
use planedet::io::labels::{format_sidecar, load_sidecar, save_labeled, ColorMode};
use planedet::io::run::{format_table, output_paths};
use planedet::io::{
    gen_synthetic, load_cloud, run_bench, run_detect, BenchConfig, ConfigError, Detector, ParseError, RunConfig,
    SceneSpec,
};
use planedet::ops::{GroupingStrategy, OpsParams};
use planedet::truth::{classification_accuracy, generate_ground_truth, segmentation_accuracy};
use planedet::Error;

#[derive(Parser)]
#[command(name = "planedet", version, about = "Plane detection in unorganized point clouds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect and merge planes, writing a colored PLY, label sidecar, and JSON report.
    Detect(DetectArgs),
    /// Generate region-growing ground truth labels for a cloud.
    Gt(GtArgs),
    /// Score predicted labels against ground truth labels.
    Eval(EvalArgs),
    /// Score one or more configs over a directory of clouds.
    Bench(BenchArgs),
    /// Write a synthetic scene and its exact truth labels.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DetectorKind {
    Ops,
    Fspf,
}

#[derive(Args)]
struct ParamArgs {
    /// TOML or JSON run configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    detector: Option<DetectorKind>,
    /// Random seed shared by all stages [default: 0, or the config's].
    #[arg(long)]
    seed: Option<u64>,
    /// Up axis as `x,y,z`.
    #[arg(long, value_parser = parse_vec3)]
    up: Option<Point3>,
    /// Orientation tolerance in degrees.
    #[arg(long)]
    orientation_tolerance: Option<f64>,
    /// Distance threshold in meters (both detectors).
    #[arg(long)]
    dist_threshold: Option<f64>,

    /// OPS: fraction of points that get normals.
    #[arg(long)]
    sampling_rate: Option<f64>,
    /// OPS: neighbors per normal.
    #[arg(long)]
    k: Option<usize>,
    /// OPS: RANSAC success probability.
    #[arg(long)]
    success_probability: Option<f64>,
    /// OPS: minimum sampled inliers per plane.
    #[arg(long)]
    min_inliers: Option<usize>,
    /// OPS: detect all planes first instead of grouping samples by orientation.
    #[arg(long)]
    detect_first: bool,

    /// FSPF: radius for the second and third hypothesis points.
    #[arg(long)]
    r1: Option<f64>,
    /// FSPF: radius for local verification draws.
    #[arg(long)]
    r2: Option<f64>,
    /// FSPF: local draws per hypothesis.
    #[arg(long)]
    local_samples: Option<usize>,
    /// FSPF: minimum inlier fraction to accept.
    #[arg(long)]
    min_inlier_fraction: Option<f64>,
    /// FSPF: iteration limit.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// FSPF: inlier budget as an absolute count.
    #[arg(long)]
    max_inlier_points: Option<usize>,
    /// FSPF: claim every point of the verification sphere.
    #[arg(long)]
    claim_sphere: bool,

    /// Merge angle threshold in degrees.
    #[arg(long)]
    merge_angle: Option<f64>,
    /// Merge offset threshold in meters.
    #[arg(long)]
    merge_offset: Option<f64>,
}

fn parse_vec3(s: &str) -> Result<Point3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [x, y, z] => Ok(Point3::new(*x, *y, *z)),
        _ => Err("expected three comma-separated numbers".into()),
    }
}

impl ParamArgs {
    /// Defaults, then the config file, then explicit flags.
    fn resolve(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        match self.detector {
            Some(DetectorKind::Ops) if !matches!(cfg.detector, Detector::Ops(_)) => {
                cfg.detector = Detector::Ops(OpsParams::default())
            }
            Some(DetectorKind::Fspf) if !matches!(cfg.detector, Detector::Fspf(_)) => {
                cfg.detector = Detector::Fspf(FspfParams::default())
            }
            _ => {}
        }
        set(&mut cfg.seed, self.seed);
        if let Some(up) = self.up {
            cfg.up = UnitVector3::new_normalize(up).ok_or_else(|| ConfigError::Invalid("up axis is zero".into()))?;
        }
        set(&mut cfg.orientation_tolerance, self.orientation_tolerance);
        set(&mut cfg.merge.angle_threshold, self.merge_angle);
        set(&mut cfg.merge.offset_threshold, self.merge_offset);
        match &mut cfg.detector {
            Detector::Ops(p) => {
                set(&mut p.dist_threshold, self.dist_threshold);
                set(&mut p.sampling_rate, self.sampling_rate);
                set(&mut p.k, self.k);
                set(&mut p.success_probability, self.success_probability);
                set(&mut p.min_inliers, self.min_inliers);
                if self.detect_first {
                    p.grouping = GroupingStrategy::DetectFirst;
                }
            }
            Detector::Fspf(p) => {
                set(&mut p.dist_threshold, self.dist_threshold);
                set(&mut p.r1, self.r1);
                set(&mut p.r2, self.r2);
                set(&mut p.local_samples, self.local_samples);
                set(&mut p.min_inlier_fraction, self.min_inlier_fraction);
                set(&mut p.max_iterations, self.max_iterations);
                set(&mut p.max_inlier_points, self.max_inlier_points.map(InlierBudget::Points));
                if self.claim_sphere {
                    p.claim = InlierClaim::Sphere;
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[derive(Args)]
struct DetectArgs {
    input: PathBuf,
    /// Output directory.
    #[arg(short, long, default_value = ".")]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = ColorMode::Orientation)]
    color: ColorMode,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct GtArgs {
    input: PathBuf,
    /// Label sidecar to write.
    #[arg(short, long)]
    output: PathBuf,
    /// Also write a segment-colored PLY here.
    #[arg(long)]
    ply: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    dist_threshold: Option<f64>,
    #[arg(long)]
    angle_threshold: Option<f64>,
    #[arg(long)]
    min_plane_size: Option<usize>,
    #[arg(long, value_parser = parse_vec3)]
    up: Option<Point3>,
}

#[derive(Args)]
struct EvalArgs {
    /// Predicted label sidecar.
    #[arg(long)]
    pred: PathBuf,
    /// Ground truth label sidecar.
    #[arg(long)]
    truth: PathBuf,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    dataset: PathBuf,
    /// Run configurations; defaults to the OPS and FSPF presets.
    #[arg(long = "config")]
    configs: Vec<PathBuf>,
    /// Directory of `<stem>.labels` ground truth; missing ones are generated.
    #[arg(long)]
    gt_dir: Option<PathBuf>,
    /// Write the JSON table here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Seed for every config [default: each config's own, 0 for presets].
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output PLY; truth labels go next to it with a `.labels` extension.
    #[arg(short, long)]
    output: PathBuf,
    /// Scene description (JSON); overrides the room options.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Box room size `x,y,z` in meters.
    #[arg(long, value_parser = parse_vec3, default_value = "5,5,3")]
    room: Point3,
    #[arg(long, default_value_t = 1000)]
    per_face: usize,
    #[arg(long, default_value_t = 600)]
    clutter: usize,
    /// Random scene with this many planes instead of a box room.
    #[arg(long)]
    random_planes: Option<usize>,
    /// Point density for random scenes, per square meter.
    #[arg(long, default_value_t = 400.0)]
    density: f64,
    #[arg(long, default_value_t = 0.005)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn detect(a: DetectArgs) -> Result<ExitCode, Error> {
    let cfg = a.params.resolve()?;
    let report = run_detect(&cfg, &a.input, &a.output, a.color)?;
    let (ply, labels, json) = output_paths(&a.output, &a.input);
    println!(
        "{} planes ({} before merging) from {} points in {:.1} ms",
        report.post_merge_count, report.pre_merge_count, report.input_points, report.timings.total
    );
    println!("wrote {}, {}, {}", ply.display(), labels.display(), json.display());
    Ok(if report.planes.is_empty() { ExitCode::from(3) } else { ExitCode::SUCCESS })
}

fn gt(a: GtArgs) -> Result<ExitCode, Error> {
    let mut params = match &a.config {
        Some(p) => RunConfig::load(p)?.resolved().gt,
        None => Default::default(),
    };
    set(&mut params.k, a.k);
    set(&mut params.dist_threshold, a.dist_threshold);
    set(&mut params.normal_angle_threshold, a.angle_threshold);
    set(&mut params.min_plane_size, a.min_plane_size);
    if let Some(up) = a.up {
        params.up = UnitVector3::new_normalize(up).ok_or_else(|| ConfigError::Invalid("up axis is zero".into()))?;
    }
    let loaded = load_cloud(&a.input)?;
    let labels = generate_ground_truth(&loaded.cloud, &params);
    std::fs::write(&a.output, format_sidecar(&labels))?;
    if let Some(ply) = &a.ply {
        save_labeled(&loaded.cloud, &labels, ply, ColorMode::Segment)?;
    }
    let segments = labels.segments().len();
    println!("{segments} segments over {} points", labels.len());
    Ok(if segments == 0 { ExitCode::from(3) } else { ExitCode::SUCCESS })
}

fn eval(a: EvalArgs) -> Result<ExitCode, Error> {
    let pred = load_sidecar(&a.pred)?;
    let truth = load_sidecar(&a.truth)?;
    let c = classification_accuracy(&pred, &truth)?;
    let s = segmentation_accuracy(&pred, &truth)?;
    if a.json {
        println!(
            "{}",
            serde_json::json!({ "points": truth.len(), "classificationAccuracy": c, "segmentationAccuracy": s })
        );
    } else {
        println!("points                   {}", truth.len());
        println!("classification accuracy  {:.4}", c);
        println!("segmentation accuracy    {:.4}", s);
    }
    Ok(ExitCode::SUCCESS)
}

fn bench(a: BenchArgs) -> Result<ExitCode, Error> {
    let mut configs = Vec::new();
    if a.configs.is_empty() {
        let mut ops = RunConfig::ops(OpsParams::default());
        ops.seed = a.seed.unwrap_or(0);
        let mut fspf = RunConfig::fspf(FspfParams::default());
        fspf.seed = a.seed.unwrap_or(0);
        configs.push(BenchConfig { name: "ops".into(), config: ops });
        configs.push(BenchConfig { name: "fspf".into(), config: fspf });
    }
    for p in &a.configs {
        let mut config = RunConfig::load(p)?;
        set(&mut config.seed, a.seed);
        let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
        configs.push(BenchConfig { name, config });
    }
    let result = run_bench(&a.dataset, &configs, a.gt_dir.as_deref())?;
    print!("{}", format_table(&result));
    if let Some(path) = &a.json {
        std::fs::write(path, serde_json::to_string_pretty(&result).expect("bench result serializes") + "\n")?;
    }
    Ok(ExitCode::SUCCESS)
}

fn synth(a: SynthArgs) -> Result<ExitCode, Error> {
    let spec = if let Some(path) = &a.scene {
        let text = std::fs::read_to_string(path).map_err(|source| ParseError::Io {
            path: path.clone(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| ParseError::Line {
            line: e.line(),
            message: e.to_string(),
        })?
    } else if let Some(n) = a.random_planes {
        SceneSpec::random(n, a.density, a.clutter, a.seed)
    } else {
        SceneSpec::box_room(a.room.to_array(), a.per_face, a.clutter)
    };
    let (cloud, truth) = gen_synthetic(&spec, a.noise, a.seed)?;
    if let Some(dir) = a.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    save_labeled(&cloud, &truth, &a.output, ColorMode::Segment)?;
    println!(
        "{} points, {} planes -> {}",
        cloud.len(),
        truth.segments().len(),
        a.output.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) => 2,
        Error::Config(ConfigError::Syntax { .. }) => 2,
        Error::Empty(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Detect(a) => detect(a),
        Command::Gt(a) => gt(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
