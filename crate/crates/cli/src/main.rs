mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{AngleWindow, ClassList, ConfigFile};
use groundfilt::eval::{self, Runnable};
use groundfilt::io::{read_cloud, write_cloud, CloudFileFormat, LabelMapping};
use groundfilt::normal_filter::{
    run_baseline, run_normal_pipeline, Baseline, KnnBackend, NeighborSpace, NormalFilterConfig,
};
use groundfilt::scene::{generate_scene, SceneSpec};
use groundfilt::voxel_filter::{run_voxel_pipeline, VoxelFilterConfig};
use groundfilt::{ClassificationResult, PointCloud};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Pipeline(#[from] groundfilt::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Pipeline(_) => 1,
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// Writes to stdout; a closed pipe (e.g. `| head`) ends output quietly.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("groundfilt: {e}");
        }
    }
}

#[derive(Parser)]
#[command(name = "groundfilt", version, about = "Ground filtering for terrestrial laser scans")]
struct Cli {
    /// Worker threads (0 = all cores). Falls back to GROUNDFILT_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// key=value file providing defaults for any flag.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normal-vector filter (K-NN, PCA, Bayes, plane).
    FilterNormal {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        normal: NormalArgs,
        /// Run a reference method instead: ls or pca.
        #[arg(long)]
        baseline: Option<Baseline>,
    },
    /// Voxel filter (flatness, segmentation, plane, neighbourhood vote).
    FilterVoxel {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        voxel: VoxelArgs,
    },
    /// Compare predicted labels with ground truth.
    Eval {
        predicted: PathBuf,
        truth: PathBuf,
        /// Class ids counted as ground in the truth file.
        #[arg(long)]
        ground_classes: Option<ClassList>,
        /// F-measure weight.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Time pipelines on one or more clouds.
    Bench {
        inputs: Vec<PathBuf>,
        /// Benchmark on a generated street scene with this many points.
        #[arg(long, value_name = "N")]
        street: Option<usize>,
        /// Comma-separated: voxel, kdtree, brute.
        #[arg(long, default_value = "voxel,kdtree,brute")]
        pipelines: String,
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        normal: NormalArgs,
        #[command(flatten)]
        voxel: VoxelArgs,
    },
    /// Generate a labelled synthetic scene.
    Synth {
        output: PathBuf,
        /// TOML scene description.
        #[arg(long, conflicts_with = "street")]
        spec: Option<PathBuf>,
        /// Street preset with this many points.
        #[arg(long, value_name = "N")]
        street: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the scene description used.
        #[arg(long, value_name = "FILE")]
        emit_spec: Option<PathBuf>,
        #[arg(long)]
        format: Option<CloudFileFormat>,
    },
}

#[derive(Args)]
struct IoArgs {
    input: PathBuf,
    output: PathBuf,
    /// xyz or ply; guessed from the extension otherwise.
    #[arg(long)]
    format: Option<CloudFileFormat>,
    /// Class ids of the input that count as ground (default 1).
    #[arg(long)]
    ground_classes: Option<ClassList>,
    /// Print per-stage timings.
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct CommonArgs {
    /// Max ground distance to the fitted plane, meters [default: 0.1].
    #[arg(long)]
    plane_threshold: Option<f64>,
    /// RANSAC iterations for the ground plane [default: 1000].
    #[arg(long)]
    ransac_iterations: Option<usize>,
    /// RANSAC seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct NormalArgs {
    /// brute or kdtree [default: kdtree].
    #[arg(long)]
    knn_backend: Option<KnnBackend>,
    /// Neighbours per point [default: 50].
    #[arg(long)]
    k: Option<usize>,
    /// Neighbours in the Bayes vote [default: K].
    #[arg(long)]
    bayes_k: Option<usize>,
    /// Degrees, `lo,hi` [default: 80,100].
    #[arg(long)]
    angle_window: Option<AngleWindow>,
    /// Grid cell size in meters [default: 0.1].
    #[arg(long)]
    cell: Option<f64>,
    /// Segment capacity in points [default: 65536].
    #[arg(long)]
    segment: Option<usize>,
    /// Logistic spread r of the standardization [default: 1].
    #[arg(long)]
    spread: Option<f64>,
    /// metric or standardized [default: metric].
    #[arg(long)]
    neighbor_space: Option<NeighborSpace>,
}

#[derive(Args)]
struct VoxelArgs {
    /// Voxel edge in meters [default: 0.1].
    #[arg(long)]
    voxel_size: Option<f64>,
    /// Max z-range of a flat voxel, meters [default: 0.04].
    #[arg(long)]
    flatness: Option<f64>,
    /// Height above the mean flat centroid that is cut, meters [default: 1].
    #[arg(long)]
    height_offset: Option<f64>,
    /// Min points for a ground voxel [default: 2].
    #[arg(long)]
    min_points: Option<usize>,
}

fn normal_config(
    cfg: &ConfigFile,
    common: &CommonArgs,
    a: &NormalArgs,
) -> CliResult<(NormalFilterConfig, KnnBackend)> {
    let d = NormalFilterConfig::default();
    let window = cfg.pick(
        a.angle_window,
        "angle-window",
        AngleWindow(d.angle_window.0, d.angle_window.1),
    )?;
    let k = cfg.pick(a.k, "k", d.k)?;
    let config = NormalFilterConfig {
        k,
        angle_window: (window.0, window.1),
        // Follows K unless set.
        bayes_k: cfg.pick(a.bayes_k, "bayes-k", k)?,
        plane_threshold: cfg.pick(common.plane_threshold, "plane-threshold", d.plane_threshold)?,
        ransac_iterations: cfg.pick(common.ransac_iterations, "ransac-iterations", d.ransac_iterations)?,
        seed: cfg.pick(common.seed, "seed", d.seed)?,
        spread: cfg.pick(a.spread, "spread", d.spread)?,
        cell_size: cfg.pick(a.cell, "cell", d.cell_size)?,
        segment_capacity: cfg.pick(a.segment, "segment", d.segment_capacity)?,
        neighbor_space: cfg.pick(a.neighbor_space, "neighbor-space", d.neighbor_space)?,
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let backend = cfg.pick(a.knn_backend, "knn-backend", KnnBackend::KdTree)?;
    Ok((config, backend))
}

fn voxel_config(cfg: &ConfigFile, common: &CommonArgs, a: &VoxelArgs) -> CliResult<VoxelFilterConfig> {
    let d = VoxelFilterConfig::default();
    let config = VoxelFilterConfig {
        voxel_size: cfg.pick(a.voxel_size, "voxel-size", d.voxel_size)?,
        flatness_threshold: cfg.pick(a.flatness, "flatness", d.flatness_threshold)?,
        height_offset: cfg.pick(a.height_offset, "height-offset", d.height_offset)?,
        plane_threshold: cfg.pick(common.plane_threshold, "plane-threshold", d.plane_threshold)?,
        min_points: cfg.pick(a.min_points, "min-points", d.min_points)?,
        ransac_iterations: cfg.pick(common.ransac_iterations, "ransac-iterations", d.ransac_iterations)?,
        seed: cfg.pick(common.seed, "seed", d.seed)?,
    };
    config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(config)
}

fn mapping(cfg: &ConfigFile, flag: &Option<ClassList>) -> CliResult<LabelMapping> {
    let classes = match flag {
        Some(c) => Some(c.clone()),
        None => cfg.get::<ClassList>("ground-classes")?,
    };
    Ok(classes.map_or_else(LabelMapping::default, |c| LabelMapping::ground_classes(&c.0)))
}

fn format_for(cfg: &ConfigFile, flag: Option<CloudFileFormat>, path: &Path) -> CliResult<CloudFileFormat> {
    Ok(match flag {
        Some(f) => f,
        None => cfg.get("format")?.unwrap_or_else(|| CloudFileFormat::from_path(path)),
    })
}

fn read_input(cfg: &ConfigFile, io: &IoArgs) -> CliResult<PointCloud> {
    let fmt = format_for(cfg, io.format, &io.input)?;
    let cloud = read_cloud(&io.input, fmt, Some(&mapping(cfg, &io.ground_classes)?))?;
    log::info!("read {} points from {}", cloud.len(), io.input.display());
    Ok(cloud)
}

fn write_output(cfg: &ConfigFile, io: &IoArgs, mut cloud: PointCloud, result: &ClassificationResult) -> CliResult {
    cloud.labels = Some(result.labels.clone());
    let fmt = format_for(cfg, io.format, &io.output)?;
    write_cloud(&cloud, &io.output, fmt)?;
    eprintln!(
        "{} of {} points classified as ground",
        result.ground_count(),
        result.labels.len()
    );
    if io.timings {
        let total: f64 = result.timings.iter().map(|(_, d)| d.as_secs_f64()).sum();
        for (stage, d) in &result.timings {
            eprintln!("  {stage:<12} {:>10.1} ms", d.as_secs_f64() * 1e3);
        }
        eprintln!("  {:<12} {:>10.1} ms", "total", total * 1e3);
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::FilterNormal { io, common, normal, baseline } => {
            let (config, backend) = normal_config(&cfg, &common, &normal)?;
            let cloud = read_input(&cfg, &io)?;
            let result = match baseline {
                Some(b) => run_baseline(&cloud, &config, b)?,
                None => run_normal_pipeline(&cloud, &config, backend)?,
            };
            write_output(&cfg, &io, cloud, &result)
        }
        Command::FilterVoxel { io, common, voxel } => {
            let config = voxel_config(&cfg, &common, &voxel)?;
            let cloud = read_input(&cfg, &io)?;
            let result = run_voxel_pipeline(&cloud, &config)?;
            write_output(&cfg, &io, cloud, &result)
        }
        Command::Eval { predicted, truth, ground_classes, epsilon, json } => {
            let epsilon = cfg.pick(epsilon, "epsilon", 1.0)?;
            let pred = read_cloud(&predicted, CloudFileFormat::from_path(&predicted), None)?;
            let truth_cloud = read_cloud(
                &truth,
                CloudFileFormat::from_path(&truth),
                Some(&mapping(&cfg, &ground_classes)?),
            )?;
            let (Some(p), Some(t)) = (&pred.labels, &truth_cloud.labels) else {
                return Err(groundfilt::Error::InvalidInput(
                    "both files need a label column".into(),
                )
                .into());
            };
            let cm = eval::confusion(p, t)?;
            let report = eval::metrics(&cm, epsilon)?;
            if json {
                let record = serde_json::json!({ "confusion": cm, "metrics": report });
                emit(&format!("{}\n", serde_json::to_string_pretty(&record).expect("serialisable")));
            } else {
                emit(&format!(
                    "{}\n{}",
                    eval::render_confusion(&cm),
                    eval::render_metrics_table(&[(&predicted.display().to_string(), report)])
                ));
            }
            Ok(())
        }
        Command::Bench { inputs, street, pipelines, repetitions, json, common, normal, voxel } => {
            let (ncfg, _) = normal_config(&cfg, &common, &normal)?;
            let vcfg = voxel_config(&cfg, &common, &voxel)?;
            let reps = cfg.pick(repetitions, "repetitions", 3)?;
            let mut sections: Vec<(String, PointCloud)> = Vec::new();
            for p in &inputs {
                let c = read_cloud(p, CloudFileFormat::from_path(p), None)?;
                sections.push((p.display().to_string(), c));
            }
            if let Some(n) = street {
                let seed = cfg.pick(common.seed, "seed", 0)?;
                sections.push((format!("street-{n}"), generate_scene(&SceneSpec::street(seed, n))?));
            }
            if sections.is_empty() {
                return Err(CliError::Usage("bench needs input files or --street N".into()));
            }
            let run_voxel = |c: &PointCloud| run_voxel_pipeline(c, &vcfg);
            let run_kd = |c: &PointCloud| run_normal_pipeline(c, &ncfg, KnnBackend::KdTree);
            let run_brute = |c: &PointCloud| run_normal_pipeline(c, &ncfg, KnnBackend::BruteForce);
            let mut chosen: Vec<(&str, Runnable<'_>)> = Vec::new();
            for name in pipelines.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                chosen.push(match name {
                    "voxel" => ("voxel", &run_voxel),
                    "kdtree" => ("normal-kdtree", &run_kd),
                    "brute" => ("normal-brute", &run_brute),
                    other => return Err(CliError::Usage(format!("unknown pipeline {other:?}"))),
                });
            }
            let refs: Vec<(&str, &PointCloud)> = sections.iter().map(|(n, c)| (n.as_str(), c)).collect();
            let report = eval::benchmark_sections(&refs, &chosen, reps)?;
            if json {
                emit(&format!("{}\n", serde_json::to_string_pretty(&report).expect("serialisable")));
            } else {
                emit(&format!("{}\n{}", report.render_table(), report.render_stages()));
            }
            Ok(())
        }
        Command::Synth { output, spec, street, seed, emit_spec, format } => {
            let spec = match (spec, street) {
                (Some(path), None) => {
                    let text = std::fs::read_to_string(&path).map_err(groundfilt::Error::from)?;
                    SceneSpec::from_toml(&text)?
                }
                (None, Some(n)) => SceneSpec::street(seed, n),
                _ => return Err(CliError::Usage("synth needs --spec FILE or --street N".into())),
            };
            let cloud = generate_scene(&spec)?;
            write_cloud(&cloud, &output, format_for(&cfg, format, &output)?)?;
            if let Some(p) = emit_spec {
                std::fs::write(&p, spec.to_toml()).map_err(groundfilt::Error::from)?;
            }
            eprintln!("wrote {} points to {}", cloud.len(), output.display());
            Ok(())
        }
    }
}

fn thread_count(cli: &Cli) -> CliResult<usize> {
    if let Some(n) = cli.threads {
        return Ok(n);
    }
    if let Ok(v) = std::env::var("GROUNDFILT_THREADS") {
        return v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("GROUNDFILT_THREADS={v:?} is not a count")));
    }
    match &cli.config {
        Some(p) => Ok(ConfigFile::load(p)?.get("threads")?.unwrap_or(0)),
        None => Ok(0),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let outcome = thread_count(&cli).and_then(|n| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        pool.install(|| run(cli))
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("groundfilt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
