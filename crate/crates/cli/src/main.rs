//! `levelgen`: train, generate, compose, evaluate, export, and run the two
//! built-in experiments.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result, bail};
use clap::{Args, Parser, Subcommand, ValueEnum};
use levelgen_core::composer::{self, CompositionNode};
use levelgen_core::evolve::train;
use levelgen_core::fitness::{Component, Objective};
use levelgen_core::generator::GeneratorSpec;
use serde::Serialize;

use levelgen_cli::config::TrainDoc;
use levelgen_cli::experiments::{
    ComposeVsFlatConfig, WindowSizeConfig, metrics_csv, run_compose_vs_flat, run_window_size,
    window_means,
};
use levelgen_cli::{export, level_file, presets, tree_file};

#[derive(Parser)]
#[command(name = "levelgen", about = "Evolve and compose neural tilemap generators")]
struct Cli {
    /// Master seed; fixed seeds give byte-identical outputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker count; accepted for compatibility, results never depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a generator and write generator.json, metrics.csv, config.json.
    Train(TrainArgs),
    /// Generate a level with a trained generator.
    Generate(GenerateArgs),
    /// Compose a level from a generator tree.
    Compose(ComposeArgs),
    /// Score a level file against a fitness spec.
    Evaluate(EvaluateArgs),
    /// Export a level to an image or voxel listing.
    Export(ExportArgs),
    /// Run a built-in experiment.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Path to a training config JSON.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Name of a built-in preset.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    generator: PathBuf,
    /// Level size, e.g. 9x9 or 5x5x5.
    #[arg(long)]
    size: String,
    /// Output file; defaults to <out>/level.json.
    #[arg(long)]
    out_file: Option<PathBuf>,
}

#[derive(Args)]
struct ComposeArgs {
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    size: String,
    /// Disable rectangle coalescing at every node.
    #[arg(long)]
    no_coalesce: bool,
    #[arg(long)]
    out_file: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    level: PathBuf,
    /// JSON file with a {"fitness": [...]} array over the level's tileset.
    #[arg(long)]
    fitness: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Ppm,
    Voxel,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    level: PathBuf,
    #[arg(long, value_enum)]
    format: ExportFormat,
    #[arg(long)]
    out_file: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentKind {
    WindowSize,
    ComposeVsFlat,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: ExperimentKind,
    /// Restore the full-scale settings instead of the quick defaults.
    #[arg(long)]
    full_scale: bool,
    /// Comma-separated seed list, e.g. 1,2,3.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    population: Option<usize>,
    /// Window sizes for window-size, e.g. 1,2,5.
    #[arg(long)]
    ks: Option<String>,
    /// Layout count for compose-vs-flat.
    #[arg(long)]
    layouts: Option<usize>,
}

fn parse_size(text: &str) -> Result<Vec<usize>> {
    let parts: Vec<usize> = text
        .split(['x', 'X', ','])
        .map(|p| p.trim().parse().with_context(|| format!("bad size '{text}'")))
        .collect::<Result<_>>()?;
    if !(parts.len() == 2 || parts.len() == 3) || parts.iter().any(|&p| p == 0) {
        bail!("size must be 2 or 3 positive extents, got '{text}'");
    }
    Ok(parts)
}

fn parse_list<T: std::str::FromStr>(text: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|e| anyhow::anyhow!("bad list entry: {e}")))
        .collect()
}

fn load_generator(path: &Path) -> Result<GeneratorSpec> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn set_coalesce(node: &mut CompositionNode, value: bool) {
    node.coalesce = value;
    if let Some(mapping) = &mut node.mapping {
        for child in mapping.values_mut() {
            set_coalesce(child, value);
        }
    }
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    seed: u64,
    config: &'a TrainDoc,
}

fn cmd_train(cli: &Cli, args: &TrainArgs) -> Result<()> {
    let (text, base_dir) = match (&args.config, &args.preset) {
        (Some(path), None) => (
            std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?,
            path.parent().unwrap_or(Path::new(".")).to_path_buf(),
        ),
        (None, Some(name)) => {
            let text = presets::get(name).with_context(|| {
                format!("unknown preset '{name}'; available: {}", presets::names().join(", "))
            })?;
            (text.to_string(), PathBuf::from("."))
        }
        _ => bail!("pass exactly one of --config or --preset"),
    };
    let doc = TrainDoc::parse(&text)?;
    let config = doc.to_core(cli.seed, &base_dir)?;
    let result = train(&config).map_err(|e| anyhow::anyhow!("training: {e}"))?;

    std::fs::create_dir_all(&cli.out)?;
    std::fs::write(
        cli.out.join("generator.json"),
        serde_json::to_string_pretty(&result.best)?,
    )?;
    std::fs::write(cli.out.join("metrics.csv"), metrics_csv(&result.metrics))?;
    std::fs::write(
        cli.out.join("config.json"),
        serde_json::to_string_pretty(&ConfigEcho { seed: cli.seed, config: &doc })?,
    )?;
    println!(
        "trained {} generations, final max fitness {:.4}",
        result.metrics.len(),
        result.metrics.last().unwrap().max_fitness
    );
    Ok(())
}

fn cmd_generate(cli: &Cli, args: &GenerateArgs) -> Result<()> {
    let spec = load_generator(&args.generator)?;
    let size = parse_size(&args.size)?;
    let grid = spec
        .generate(&size, cli.seed)
        .map_err(|e| anyhow::anyhow!("generating: {e}"))?;
    let out = output_path(cli, args.out_file.as_deref(), "level.json")?;
    level_file::save(&out, &grid, &spec.tileset)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_compose(cli: &Cli, args: &ComposeArgs) -> Result<()> {
    let mut node = tree_file::load(&args.tree)?;
    if args.no_coalesce {
        set_coalesce(&mut node, false);
    }
    let size = parse_size(&args.size)?;
    let composed = composer::compose(&node, &size, cli.seed)
        .map_err(|e| anyhow::anyhow!("composing: {e}"))?;
    let out = output_path(cli, args.out_file.as_deref(), "level.json")?;
    level_file::save(&out, &composed.grid, &composed.tileset)?;
    println!("wrote {} ({} leaf placements)", out.display(), composed.placements.len());
    Ok(())
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalDoc {
    fitness: Vec<levelgen_cli::config::FitnessDoc>,
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let (grid, tileset) = level_file::load(&args.level)?;
    let text = std::fs::read_to_string(&args.fitness)
        .with_context(|| format!("reading {}", args.fitness.display()))?;
    let doc: EvalDoc = serde_json::from_str(&text).context("parsing fitness spec")?;
    let base_dir = args.fitness.parent().unwrap_or(Path::new("."));

    let mut total = 0.0;
    let mut weight_sum = 0.0;
    for f in &doc.fitness {
        let component = f.to_component(&tileset, base_dir)?;
        let value = match &component {
            Component::Objective(obj) => {
                if let Objective::Reachability { house, road, garden } = obj {
                    let b = levelgen_core::fitness::reachability_fitness(
                        &grid, *house, *road, *garden,
                    )
                    .map_err(|e| anyhow::anyhow!("{e}"))?;
                    println!(
                        "reachability breakdown: houses={} a={:.4} regions(road)={} \
                         regions(house+road)={} b={:.4}",
                        b.houses, b.a, b.c_road, b.c_house_road, b.b
                    );
                }
                obj.score(&grid).map_err(|e| anyhow::anyhow!("{e}"))?
            }
            // Population-level scores are undefined for a single level file.
            Component::Novelty | Component::IntraNovelty => {
                bail!("novelty components cannot be evaluated on a single level")
            }
        };
        println!("{}: {value:.6} (weight {})", kind_name(f), f.weight());
        total += f.weight() * value;
        weight_sum += f.weight();
    }
    println!("weighted total: {:.6}", total / weight_sum);
    Ok(())
}

fn kind_name(doc: &levelgen_cli::config::FitnessDoc) -> &'static str {
    use levelgen_cli::config::FitnessDoc::*;
    match doc {
        Probability { .. } => "probability",
        Reachability { .. } => "reachability",
        EqualDistribution { .. } => "equal_distribution",
        TargetOverlap { .. } => "target_overlap",
        House { .. } => "house",
        Garden { .. } => "garden",
        BoundaryLayout { .. } => "boundary_layout",
        Novelty { .. } => "novelty",
        IntraNovelty { .. } => "intra_novelty",
    }
}

fn cmd_export(cli: &Cli, args: &ExportArgs) -> Result<()> {
    let (grid, tileset) = level_file::load(&args.level)?;
    let (text, default_name) = match args.format {
        ExportFormat::Ppm => (export::to_ppm(&grid, &tileset)?, "level.ppm"),
        ExportFormat::Voxel => (export::to_voxels(&grid, &tileset)?, "level.voxels"),
    };
    let out = output_path(cli, args.out_file.as_deref(), default_name)?;
    std::fs::write(&out, text)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_experiment(cli: &Cli, args: &ExperimentArgs) -> Result<()> {
    std::fs::create_dir_all(&cli.out)?;
    match args.kind {
        ExperimentKind::WindowSize => {
            let mut cfg = if args.full_scale {
                WindowSizeConfig::full_scale()
            } else {
                WindowSizeConfig::default()
            };
            if let Some(s) = &args.seeds {
                cfg.seeds = parse_list(s)?;
            }
            if let Some(k) = &args.ks {
                cfg.ks = parse_list(k)?;
            }
            if let Some(g) = args.generations {
                cfg.generations = g;
            }
            if let Some(p) = args.population {
                cfg.population_size = p;
            }
            let cells = run_window_size(&cfg, Some(&cli.out))?;
            for (k, mean) in window_means(&cfg, &cells) {
                println!("k={k}: mean final max fitness {mean:.4}");
            }
        }
        ExperimentKind::ComposeVsFlat => {
            let mut cfg = if args.full_scale {
                ComposeVsFlatConfig::full_scale()
            } else {
                ComposeVsFlatConfig::default()
            };
            if let Some(s) = &args.seeds {
                cfg.seeds = parse_list(s)?;
            }
            if let Some(g) = args.generations {
                cfg.generations = g;
            }
            if let Some(p) = args.population {
                cfg.population_size = p;
            }
            if let Some(l) = args.layouts {
                cfg.layouts = l;
            }
            let summary = run_compose_vs_flat(&cfg, Some(&cli.out))?;
            println!(
                "composed mean final overlap: {:.4}\nflat mean final overlap: {:.4}",
                summary.composed_mean_final, summary.flat_mean_final
            );
        }
    }
    Ok(())
}

fn output_path(cli: &Cli, explicit: Option<&Path>, default_name: &str) -> Result<PathBuf> {
    match explicit {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            Ok(p.to_path_buf())
        }
        None => {
            std::fs::create_dir_all(&cli.out)?;
            Ok(cli.out.join(default_name))
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if cli.threads == 0 {
        bail!("--threads must be at least 1");
    }
    match &cli.command {
        Command::Train(args) => cmd_train(&cli, args),
        Command::Generate(args) => cmd_generate(&cli, args),
        Command::Compose(args) => cmd_compose(&cli, args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Export(args) => cmd_export(&cli, args),
        Command::Experiment(args) => cmd_experiment(&cli, args),
    }
}
