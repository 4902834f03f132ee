//! Command-line front end: map tooling, parsing, belief fields, direction
//! model training, single trials, and benchmark suites.
//!
//! Exit codes: 0 success, 2 configuration error, 3 suite finished with
//! partial trial failures.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use citysearch_core::foref::{
    self, evaluate_crossval, load_model, render_context, save_model, synth_dataset,
    CrossvalConfig, ImageVariant, ModelKind, ModelSidecar, TrainConfig,
};
use citysearch_core::geometry::wrap_angle;
use citysearch_core::harness::{
    build_prior, generate_city, harness_vocabulary, run_suite, run_trial_logged, SuiteConfig,
};
use citysearch_core::langparse::extract_tuples;
use citysearch_core::mos::{PriorMode, TrialConfig};
use citysearch_core::planner::PlannerConfig;
use citysearch_core::seeding::{derive_seed, seeded_rng};
use citysearch_core::spatial::field_to_csv;
use citysearch_core::{GridMap, Vocabulary};

#[derive(Parser)]
#[command(name = "citysearch", version, about = "Spatial-language object search on city maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or validate city map files
    #[command(subcommand)]
    Map(MapCommand),
    /// Extract (figure, relation, ground) tuples from a sentence
    Parse(ParseArgs),
    /// Turn a description into a prior belief field over map cells
    Belief(BeliefArgs),
    /// Train, cross-validate, or query direction models
    #[command(subcommand)]
    Foref(ForefCommand),
    /// Run search trials
    #[command(subcommand)]
    Search(SearchCommand),
    /// Run a benchmark suite from a JSON config
    Bench(BenchArgs),
}

#[derive(Subcommand)]
enum MapCommand {
    /// Generate a synthetic city and write it as JSON
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 41)]
        width: u32,
        #[arg(long, default_value_t = 41)]
        height: u32,
        /// Output map path
        #[arg(long)]
        out: PathBuf,
    },
    /// Load a map file and report its contents
    Validate { path: PathBuf },
}

#[derive(Args)]
struct ParseArgs {
    /// Sentence to parse
    text: String,
    /// Map file providing the ground landmarks
    #[arg(long)]
    map: PathBuf,
    /// Target vocabulary JSON (defaults to the built-in target pool)
    #[arg(long)]
    vocab: Option<PathBuf>,
}

#[derive(Args)]
struct BeliefArgs {
    #[arg(long)]
    map: PathBuf,
    /// Description to ground
    #[arg(long)]
    language: String,
    /// Figure id whose field is written
    #[arg(long, default_value = "RedCar")]
    target: String,
    /// Prior construction: slu, keyword, or uniform
    #[arg(long, default_value = "slu")]
    prior: PriorMode,
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Output CSV path (x,y,probability rows)
    #[arg(long)]
    out: PathBuf,
    /// Optional heatmap SVG path
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ForefCommand {
    /// Train one direction model on synthetic cities
    Train(ForefTrainArgs),
    /// Five-city cross-validation of all image variants
    Eval(ForefEvalArgs),
    /// Predict a frame of reference with a trained model
    Predict {
        /// Weights file written by `foref train`
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        map: PathBuf,
        /// Ground landmark id
        #[arg(long)]
        ground: String,
    },
}

#[derive(Args)]
struct ForefTrainArgs {
    /// Which direction to learn
    #[arg(long)]
    kind: ModelKind,
    /// Image rendering fed to the network
    #[arg(long, default_value = "ego-ctx")]
    variant: ImageVariant,
    #[arg(long, default_value_t = 5)]
    cities: u32,
    /// Annotations per building per city
    #[arg(long, default_value_t = 6)]
    per_building: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 80)]
    epochs: usize,
    #[arg(long, default_value_t = 20)]
    patience: usize,
    /// Output weights path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ForefEvalArgs {
    #[arg(long, default_value_t = 5)]
    cities: u32,
    #[arg(long, default_value_t = 4)]
    per_building: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 60)]
    epochs: usize,
    #[arg(long, default_value_t = 20)]
    patience: usize,
}

#[derive(Subcommand)]
enum SearchCommand {
    /// Run one trial from a JSON config
    Run {
        trial: PathBuf,
        /// Map file override; otherwise the config's map field is
        /// treated as a path, then as a generated-city name
        #[arg(long)]
        map: Option<PathBuf>,
        /// Print one JSON line of planner state per step
        #[arg(long)]
        diagnostics: bool,
    },
}

#[derive(Args)]
struct BenchArgs {
    /// Suite config JSON
    suite: PathBuf,
    /// Output directory for results.csv, curves.svg, report.json
    #[arg(long, default_value = "bench-out")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Map(command) => run_map(command),
        Command::Parse(args) => run_parse(args),
        Command::Belief(args) => run_belief(args),
        Command::Foref(command) => run_foref(command),
        Command::Search(command) => run_search(command),
        Command::Bench(args) => run_bench(args),
    }
}

fn load_map(path: &Path) -> Result<GridMap> {
    GridMap::load(path).with_context(|| format!("loading map {}", path.display()))
}

fn load_vocab(path: Option<&Path>, extra_ids: Vec<String>) -> Result<Vocabulary> {
    match path {
        Some(p) => {
            Vocabulary::load(p).with_context(|| format!("loading vocabulary {}", p.display()))
        }
        None => Ok(harness_vocabulary(extra_ids)),
    }
}

fn run_map(command: MapCommand) -> Result<ExitCode> {
    match command {
        MapCommand::Generate { seed, width, height, out } => {
            let map = generate_city(seed, width, height)?;
            map.save(&out).with_context(|| format!("writing {}", out.display()))?;
            println!(
                "wrote {} ({}x{}, {} landmarks) to {}",
                map.name,
                map.width,
                map.height,
                map.landmark_count(),
                out.display()
            );
        }
        MapCommand::Validate { path } => {
            let map = load_map(&path)?;
            let buildings = map.buildings().count();
            println!(
                "{}: {}x{} cells, {} buildings, {} streets",
                map.name,
                map.width,
                map.height,
                buildings,
                map.landmark_count() - buildings
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_parse(args: ParseArgs) -> Result<ExitCode> {
    let map = load_map(&args.map)?;
    let vocab = load_vocab(args.vocab.as_deref(), Vec::new())?;
    let observation = extract_tuples(&args.text, &map, &vocab);
    println!("{}", serde_json::to_string_pretty(observation.tuples())?);
    Ok(ExitCode::SUCCESS)
}

fn run_belief(args: BeliefArgs) -> Result<ExitCode> {
    if args.prior == PriorMode::Informed {
        bail!("the informed prior needs ground truth; use slu, keyword, or uniform");
    }
    let map = load_map(&args.map)?;
    let vocab = load_vocab(args.vocab.as_deref(), vec![args.target.clone()])?;
    let observation = extract_tuples(&args.language, &map, &vocab);
    let config = TrialConfig {
        map: args.map.display().to_string(),
        targets: vec![citysearch_core::mos::TrialTarget { id: args.target.clone(), cell: (0, 0) }],
        robot: (0, 0, 0),
        sensor_depth: 3,
        epsilon: 0.0,
        prior: args.prior,
        language: args.language.clone(),
        seed: 0,
        max_steps: 1,
    };
    let belief = build_prior(&map, &config, observation.tuples())?;
    let field = belief
        .histogram(&args.target)
        .context("target missing from the belief")?
        .to_vec();
    std::fs::write(&args.out, field_to_csv(&field, &map))
        .with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote field for {} to {}", args.target, args.out.display());
    if let Some(svg_path) = args.svg {
        let svg = citysearch_core::plot::heatmap(&args.language, &field, map.width as usize);
        std::fs::write(&svg_path, svg)
            .with_context(|| format!("writing {}", svg_path.display()))?;
        println!("wrote heatmap to {}", svg_path.display());
    }
    Ok(ExitCode::SUCCESS)
}

/// Synthetic cities and their annotation datasets for training commands.
fn training_corpus(
    cities: u32,
    per_building: usize,
    kind: ModelKind,
    seed: u64,
) -> Result<(BTreeMap<String, GridMap>, BTreeMap<String, Vec<foref::DatasetLine>>)> {
    let mut maps = BTreeMap::new();
    let mut datasets = BTreeMap::new();
    for city in 0..cities {
        let tag = city.to_string();
        let map = generate_city(derive_seed(seed, &["city", &tag]), 41, 41)?;
        let mut rng = seeded_rng(derive_seed(seed, &["annotate", kind.name(), &tag]));
        let lines = synth_dataset(&map, kind, per_building, &mut rng)?;
        datasets.insert(map.name.clone(), lines);
        maps.insert(map.name.clone(), map);
    }
    Ok((maps, datasets))
}

fn run_foref(command: ForefCommand) -> Result<ExitCode> {
    match command {
        ForefCommand::Train(args) => {
            let (maps, datasets) =
                training_corpus(args.cities, args.per_building, args.kind, args.seed)?;
            let mut lines: Vec<foref::DatasetLine> =
                datasets.into_values().flatten().collect();
            let val_len = (lines.len() / 5).max(1);
            let val = lines.split_off(lines.len() - val_len);
            let config = TrainConfig {
                learning_rate: args.lr,
                max_epochs: args.epochs,
                patience: args.patience,
                seed: args.seed,
                ..TrainConfig::for_kind(args.kind)
            };
            let (model, history) =
                foref::train(&lines, &val, &maps, args.variant, args.kind, &config)?;
            let sidecar = ModelSidecar {
                variant: args.kind,
                epochs: history.epochs_run,
                val_loss: history.best_val_loss,
                seed: args.seed,
            };
            save_model(&model, &sidecar, &args.out)?;
            println!(
                "trained {} ({} epochs, best val loss {:.4}); wrote {}",
                args.kind.name(),
                history.epochs_run,
                history.best_val_loss,
                args.out.display()
            );
        }
        ForefCommand::Eval(args) => {
            let (maps, datasets) =
                training_corpus(args.cities, args.per_building, ModelKind::Front, args.seed)?;
            let config = CrossvalConfig {
                train: TrainConfig {
                    learning_rate: args.lr,
                    max_epochs: args.epochs,
                    patience: args.patience,
                    seed: args.seed,
                    ..TrainConfig::for_kind(ModelKind::Front)
                },
                seed: args.seed,
                ..CrossvalConfig::default()
            };
            let report = evaluate_crossval(&datasets, &maps, &config)?;
            print!("{}", report.table());
        }
        ForefCommand::Predict { model, map, ground } => {
            let (model, sidecar) = load_model(&model)?;
            let map = load_map(&map)?;
            let image = render_context(&map, &ground, ImageVariant::EgoCtx)?;
            let theta = wrap_angle(model.forward(&image.pixels));
            let origin = map.require_landmark(&ground)?.center_of_mass();
            println!(
                "{}",
                serde_json::json!({
                    "ground": ground,
                    "kind": sidecar.variant.name(),
                    "theta_radians": theta,
                    "origin": [origin.x, origin.y],
                })
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Resolves a trial's map reference: explicit override, existing file
/// path, or a generated-city name like "city-7".
fn resolve_map(reference: &str, override_path: Option<&Path>) -> Result<GridMap> {
    if let Some(path) = override_path {
        return load_map(path);
    }
    let as_path = Path::new(reference);
    if as_path.is_file() {
        return load_map(as_path);
    }
    if let Some(seed) = reference.strip_prefix("city-").and_then(|s| s.parse::<u64>().ok()) {
        return Ok(generate_city(seed, 41, 41)?);
    }
    bail!("map {reference:?} is neither a file nor a generated-city name (city-<seed>)");
}

fn run_search(command: SearchCommand) -> Result<ExitCode> {
    let SearchCommand::Run { trial, map, diagnostics } = command;
    let config = TrialConfig::load(&trial)
        .with_context(|| format!("loading trial {}", trial.display()))?;
    let map = resolve_map(&config.map, map.as_deref())?;
    let trial_id = trial
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "trial".to_string());
    let planner = PlannerConfig {
        seed: derive_seed(config.seed, &["planner"]),
        ..PlannerConfig::default()
    };
    let (result, log) = run_trial_logged(&trial_id, &map, &config, planner)?;
    if diagnostics {
        for step in &log.steps {
            println!("{}", step.diagnostic_json());
        }
    }
    println!(
        "{}",
        serde_json::json!({
            "trial_id": result.trial_id,
            "baseline": result.baseline.name(),
            "depth": result.depth,
            "steps": result.steps,
            "success": result.success,
            "discounted_reward": result.discounted_reward,
        })
    );
    Ok(ExitCode::SUCCESS)
}

fn run_bench(args: BenchArgs) -> Result<ExitCode> {
    let config = SuiteConfig::load(&args.suite)
        .with_context(|| format!("loading suite {}", args.suite.display()))?;
    let report = run_suite(&config, &args.out_dir)?;
    for condition in &report.conditions {
        println!(
            "{} depth {}: {}/{} succeeded, mean reward {:.2} +/- {:.2}",
            condition.baseline,
            condition.depth,
            condition.successes,
            condition.trials,
            condition.mean_reward,
            condition.ci_half_width
        );
    }
    print!("{}", report.preposition_table());
    println!(
        "wrote results.csv, curves.svg, report.json to {}",
        args.out_dir.display()
    );
    if report.failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for failure in &report.failures {
            eprintln!("trial {} failed: {}", failure.trial_id, failure.error);
        }
        Ok(ExitCode::from(3))
    }
}
