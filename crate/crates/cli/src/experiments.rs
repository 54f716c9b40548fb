//! The two experiment runners: the window-size study and the composed vs
//! flat comparison. Both are deterministic in their seed lists and emit one
//! metrics CSV per trained generator.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result, ensure};
use levelgen_core::composer::{self, CompositionNode, GeneratorKind};
use levelgen_core::evolve::{GenerationMetrics, TrainConfig, TrainResult, train};
use levelgen_core::fitness::{Component, NoveltyConfig, Objective, WeightedFitness};
use levelgen_core::generator::{GenParams, StartPolicy};
use levelgen_core::grid::{Grid, TileDistribution, Tileset};
use levelgen_core::neat::NeatParams;
use levelgen_core::rng;
use rand::Rng;

pub const CSV_HEADER: &str = "generation,max_fitness,mean_fitness";

pub fn metrics_csv(metrics: &[GenerationMetrics]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (g, m) in metrics.iter().enumerate() {
        writeln!(out, "{g},{},{}", m.max_fitness, m.mean_fitness).unwrap();
    }
    out
}

fn write_csv(dir: Option<&Path>, name: &str, metrics: &[GenerationMetrics]) -> Result<()> {
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(name);
        std::fs::write(&path, metrics_csv(metrics))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Window-size study
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct WindowSizeConfig {
    /// Window sizes; the level is `base * k` square and fitness is computed
    /// on the k-downsampled level.
    pub ks: Vec<usize>,
    pub seeds: Vec<u64>,
    pub generations: usize,
    pub population_size: usize,
    /// Abstract (downsampled) level side.
    pub base: usize,
    pub n_levels_per_eval: usize,
}

impl Default for WindowSizeConfig {
    fn default() -> Self {
        WindowSizeConfig {
            ks: vec![1, 2, 5],
            seeds: vec![1, 2, 3],
            generations: 30,
            population_size: 20,
            base: 6,
            n_levels_per_eval: 1,
        }
    }
}

impl WindowSizeConfig {
    pub fn full_scale() -> Self {
        WindowSizeConfig {
            ks: vec![1, 2, 3, 4, 5, 10],
            seeds: (1..=10).collect(),
            generations: 50,
            population_size: 50,
            base: 10,
            n_levels_per_eval: 5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WindowCell {
    pub k: usize,
    pub seed: u64,
    pub final_max: f64,
    pub metrics: Vec<GenerationMetrics>,
}

/// Training config for one window-size cell. Tiles: house, garden, road;
/// the level starts as all garden and fitness targets a 40/30/30 split plus
/// reachability, both measured on the k-downsampled level.
pub fn window_train_config(k: usize, base: usize, cfg: &WindowSizeConfig, seed: u64) -> TrainConfig {
    let tileset = Tileset::from_names(vec!["house", "garden", "road"]).unwrap();
    let (house, garden, road) = (0, 1, 2);
    let probability = Objective::Probability {
        target: TileDistribution::new(vec![0.4, 0.3, 0.3]).unwrap(),
    };
    let reachability = Objective::Reachability { house, road, garden };
    let down = |inner: Objective| {
        Component::Objective(Objective::Downsample {
            k,
            default: garden,
            inner: Box::new(inner),
        })
    };
    TrainConfig {
        level_size: vec![base * k, base * k],
        tileset,
        gen_params: GenParams {
            context_size: 1,
            one_hot: true,
            num_random_vars: 1,
            perturb_size: 0.0,
            iterations: 3,
            input_center_tile: true,
            start: StartPolicy::Default(garden),
        },
        neat_params: NeatParams { population_size: cfg.population_size, ..NeatParams::default() },
        generations: cfg.generations,
        n_levels_per_eval: cfg.n_levels_per_eval,
        fitness: WeightedFitness {
            components: vec![(down(probability), 1.0), (down(reachability), 1.0)],
        },
        novelty: NoveltyConfig::default(),
        master_seed: rng::mix(&[0x5E, k as u64, seed]),
    }
}

pub fn run_window_size(cfg: &WindowSizeConfig, out_dir: Option<&Path>) -> Result<Vec<WindowCell>> {
    let mut cells = Vec::new();
    for &k in &cfg.ks {
        for &seed in &cfg.seeds {
            let config = window_train_config(k, cfg.base, cfg, seed);
            let result = train(&config).map_err(|e| anyhow::anyhow!("training: {e}"))?;
            write_csv(out_dir, &format!("window_k{k}_seed{seed}.csv"), &result.metrics)?;
            cells.push(WindowCell {
                k,
                seed,
                final_max: result.metrics.last().unwrap().max_fitness,
                metrics: result.metrics,
            });
        }
    }
    Ok(cells)
}

/// Mean final max-fitness per window size, in the order of `ks`.
pub fn window_means(cfg: &WindowSizeConfig, cells: &[WindowCell]) -> Vec<(usize, f64)> {
    cfg.ks
        .iter()
        .map(|&k| {
            let scores: Vec<f64> =
                cells.iter().filter(|c| c.k == k).map(|c| c.final_max).collect();
            (k, scores.iter().sum::<f64>() / scores.len() as f64)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Composed vs flat
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ComposeVsFlatConfig {
    pub layouts: usize,
    pub seeds: Vec<u64>,
    pub generations: usize,
    pub population_size: usize,
    pub iterations: usize,
    pub n_levels_per_eval: usize,
    /// Seed for the fixed random town layouts; shared by both arms.
    pub layout_seed: u64,
}

impl Default for ComposeVsFlatConfig {
    fn default() -> Self {
        ComposeVsFlatConfig {
            layouts: 5,
            seeds: vec![1, 2, 3],
            generations: 40,
            population_size: 24,
            iterations: 3,
            n_levels_per_eval: 1,
            layout_seed: 7,
        }
    }
}

impl ComposeVsFlatConfig {
    pub fn full_scale() -> Self {
        ComposeVsFlatConfig {
            layouts: 20,
            seeds: (1..=10).collect(),
            generations: 150,
            population_size: 50,
            iterations: 5,
            n_levels_per_eval: 5,
            layout_seed: 7,
        }
    }
}

/// Abstract town tiles.
pub const TOWN_TILES: [&str; 3] = ["house", "road", "garden"];
/// Full-resolution tiles; also the union tileset of the composed tree.
pub const FLAT_TILES: [&str; 4] = ["wall", "empty", "road", "garden"];
const T_HOUSE: u16 = 0;
const T_ROAD: u16 = 1;
const T_GARDEN: u16 = 2;
const F_WALL: u16 = 0;
const F_EMPTY: u16 = 1;
const F_ROAD: u16 = 2;
const F_GARDEN: u16 = 3;

/// The ideal 5x5 house: walls surround empty space (16 wall, 9 empty).
pub fn house_template() -> Grid {
    let mut g = Grid::filled(&[5, 5], 1, 2).unwrap();
    for y in 0..5 {
        for x in 0..5 {
            if x == 0 || x == 4 || y == 0 || y == 4 {
                g.set(&[x, y], 0);
            }
        }
    }
    g
}

/// Fixed random 5x5 town layout: each cell uniform over house/road/garden.
pub fn random_layout(layout_seed: u64, index: usize) -> Grid {
    let mut stream = rng::stream(&[layout_seed, 0x1A, index as u64]);
    let data: Vec<u16> = (0..25).map(|_| stream.gen_range(0..3)).collect();
    Grid::from_data(&[5, 5], data, 3).unwrap()
}

/// Expand an abstract layout to the 25x25 desired level by stamping the house
/// template on house cells and uniform blocks on road/garden cells.
pub fn stamp_target(layout: &Grid) -> Grid {
    let template = house_template();
    let mut out = Grid::filled(&[25, 25], F_GARDEN, FLAT_TILES.len() as u16).unwrap();
    for cy in 0..5 {
        for cx in 0..5 {
            for dy in 0..5 {
                for dx in 0..5 {
                    let tile = match layout.get(&[cx, cy]) {
                        T_HOUSE => match template.get(&[dx, dy]) {
                            0 => F_WALL,
                            _ => F_EMPTY,
                        },
                        T_ROAD => F_ROAD,
                        _ => F_GARDEN,
                    };
                    out.set(&[cx * 5 + dx, cy * 5 + dy], tile);
                }
            }
        }
    }
    out
}

fn overlap_config(
    tileset: Vec<&str>,
    level_size: Vec<usize>,
    target: Grid,
    start: StartPolicy,
    cfg: &ComposeVsFlatConfig,
    master_seed: u64,
) -> TrainConfig {
    TrainConfig {
        level_size,
        tileset: Tileset::from_names(tileset).unwrap(),
        gen_params: GenParams {
            context_size: 1,
            one_hot: false,
            num_random_vars: 1,
            perturb_size: 0.0,
            iterations: cfg.iterations,
            input_center_tile: true,
            start,
        },
        neat_params: NeatParams { population_size: cfg.population_size, ..NeatParams::default() },
        generations: cfg.generations,
        n_levels_per_eval: cfg.n_levels_per_eval,
        fitness: WeightedFitness {
            components: vec![(
                Component::Objective(Objective::TargetOverlap { target }),
                1.0,
            )],
        },
        novelty: NoveltyConfig::default(),
        master_seed,
    }
}

/// Composition tree for one trained town + house generator pair. Coalescing
/// is off so placements align with the stamped 5x5 blocks of the target.
pub fn composed_tree(town: &TrainResult, house: &TrainResult) -> CompositionNode {
    let mut mapping = std::collections::BTreeMap::new();
    mapping.insert(T_HOUSE, CompositionNode::leaf(GeneratorKind::Network(house.best.clone())));
    mapping.insert(
        T_ROAD,
        CompositionNode::leaf(GeneratorKind::Uniform {
            tileset: Tileset::from_names(vec!["road"]).unwrap(),
            tile: 0,
        }),
    );
    mapping.insert(
        T_GARDEN,
        CompositionNode::leaf(GeneratorKind::Uniform {
            tileset: Tileset::from_names(vec!["garden"]).unwrap(),
            tile: 0,
        }),
    );
    CompositionNode {
        generator: GeneratorKind::Network(town.best.clone()),
        subtile_size: vec![5, 5],
        mapping: Some(mapping),
        child_height: None,
        coalesce: false,
    }
}

#[derive(Debug, Clone)]
pub struct ArmResult {
    /// Overlap with the 25x25 desired level, for the arm's final generator.
    pub final_score: f64,
    pub metrics: Vec<GenerationMetrics>,
}

#[derive(Debug, Clone)]
pub struct CvfCell {
    pub layout: usize,
    pub seed: u64,
    pub flat: ArmResult,
    pub composed: ArmResult,
}

#[derive(Debug, Clone)]
pub struct CvfSummary {
    pub cells: Vec<CvfCell>,
    pub flat_mean_final: f64,
    pub composed_mean_final: f64,
}

pub fn run_compose_vs_flat(
    cfg: &ComposeVsFlatConfig,
    out_dir: Option<&Path>,
) -> Result<CvfSummary> {
    let mut cells = Vec::new();

    // One house generator per seed, shared across layouts: the house target
    // does not depend on the layout.
    let mut house_results = Vec::new();
    for &seed in &cfg.seeds {
        let config = overlap_config(
            vec!["wall", "empty"],
            vec![5, 5],
            house_template(),
            StartPolicy::Default(1),
            cfg,
            rng::mix(&[seed, 0xC2]),
        );
        let result = train(&config).map_err(|e| anyhow::anyhow!("house training: {e}"))?;
        write_csv(out_dir, &format!("cvf_house_seed{seed}.csv"), &result.metrics)?;
        house_results.push(result);
    }

    for layout_idx in 0..cfg.layouts {
        let layout = random_layout(cfg.layout_seed, layout_idx);
        let target = stamp_target(&layout);
        for (seed_idx, &seed) in cfg.seeds.iter().enumerate() {
            // Flat arm: one generator for the whole 25x25 level.
            let flat_config = overlap_config(
                FLAT_TILES.to_vec(),
                vec![25, 25],
                target.clone(),
                StartPolicy::Default(F_ROAD),
                cfg,
                rng::mix(&[seed, 0xF1, layout_idx as u64]),
            );
            let flat_result =
                train(&flat_config).map_err(|e| anyhow::anyhow!("flat training: {e}"))?;
            write_csv(
                out_dir,
                &format!("cvf_flat_layout{layout_idx}_seed{seed}.csv"),
                &flat_result.metrics,
            )?;
            let flat_final = flat_result.metrics.last().unwrap().max_fitness;

            // Composed arm: abstract town generator + the shared house
            // generator, composed and scored against the same target.
            let town_config = overlap_config(
                TOWN_TILES.to_vec(),
                vec![5, 5],
                layout.clone(),
                StartPolicy::Default(T_ROAD),
                cfg,
                rng::mix(&[seed, 0xC1, layout_idx as u64]),
            );
            let town_result =
                train(&town_config).map_err(|e| anyhow::anyhow!("town training: {e}"))?;
            write_csv(
                out_dir,
                &format!("cvf_town_layout{layout_idx}_seed{seed}.csv"),
                &town_result.metrics,
            )?;

            let tree = composed_tree(&town_result, &house_results[seed_idx]);
            let composed = composer::compose(
                &tree,
                &[25, 25],
                rng::mix(&[seed, 0xC3, layout_idx as u64]),
            )
            .map_err(|e| anyhow::anyhow!("composing: {e}"))?;
            ensure!(
                composed.tileset.names() == FLAT_TILES,
                "union tileset diverged from the flat tileset"
            );
            let composed_score = composed
                .grid
                .overlap(&target)
                .map_err(|e| anyhow::anyhow!("scoring: {e}"))?;

            cells.push(CvfCell {
                layout: layout_idx,
                seed,
                flat: ArmResult { final_score: flat_final, metrics: flat_result.metrics },
                composed: ArmResult {
                    final_score: composed_score,
                    metrics: town_result.metrics,
                },
            });
        }
    }

    let mean = |f: &dyn Fn(&CvfCell) -> f64| {
        cells.iter().map(|c| f(c)).sum::<f64>() / cells.len() as f64
    };
    let summary = CvfSummary {
        flat_mean_final: mean(&|c| c.flat.final_score),
        composed_mean_final: mean(&|c| c.composed.final_score),
        cells,
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let text = format!(
            "arm,mean_final_overlap\ncomposed,{}\nflat,{}\n",
            summary.composed_mean_final, summary.flat_mean_final
        );
        std::fs::write(dir.join("cvf_summary.csv"), text)?;
    }
    Ok(summary)
}
