//! Training configuration document.
//!
//! The JSON keys mirror the hyperparameter names used throughout; unknown
//! keys are rejected so typos surface immediately.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result, bail};
use levelgen_core::evolve::TrainConfig;
use levelgen_core::fitness::{Component, NoveltyConfig, Objective, WeightedFitness};
use levelgen_core::generator::{GenParams, StartPolicy};
use levelgen_core::grid::{Tile, TileDistribution, Tileset};
use levelgen_core::neat::NeatParams;
use serde::{Deserialize, Serialize};

fn d_one() -> usize {
    1
}

fn d_levels() -> usize {
    5
}

fn d_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartDoc {
    Random,
    Default,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoveltyDoc {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "d_one")]
    pub archive_per_generation: usize,
}

fn default_k() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FitnessDoc {
    /// Match the level's tile distribution to `target` (name -> fraction).
    Probability {
        #[serde(default = "d_weight")]
        weight: f64,
        target: BTreeMap<String, f64>,
    },
    Reachability {
        #[serde(default = "d_weight")]
        weight: f64,
        house: String,
        road: String,
        garden: String,
    },
    EqualDistribution {
        #[serde(default = "d_weight")]
        weight: f64,
        classes: [String; 3],
    },
    /// Overlap with a level stored on disk (path relative to the config).
    TargetOverlap {
        #[serde(default = "d_weight")]
        weight: f64,
        target_path: String,
    },
    House {
        #[serde(default = "d_weight")]
        weight: f64,
        wall: String,
        air: String,
        roof: String,
    },
    Garden {
        #[serde(default = "d_weight")]
        weight: f64,
        tree: String,
        flower: String,
        water: String,
        grass: String,
    },
    BoundaryLayout {
        #[serde(default = "d_weight")]
        weight: f64,
        house: String,
        road: String,
        garden: String,
    },
    Novelty {
        #[serde(default = "d_weight")]
        weight: f64,
    },
    IntraNovelty {
        #[serde(default = "d_weight")]
        weight: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainDoc {
    pub tileset: Vec<String>,
    pub level_size: Vec<usize>,
    pub generations: usize,
    pub population_size: usize,
    #[serde(default)]
    pub one_hot: bool,
    #[serde(default = "d_one")]
    pub context_size: usize,
    #[serde(default = "d_one")]
    pub num_random_vars: usize,
    #[serde(default)]
    pub perturb_size: f64,
    #[serde(default = "d_one")]
    pub iterations: usize,
    #[serde(default)]
    pub input_center_tile: bool,
    pub start: StartDoc,
    /// Required when `start` is `default`.
    #[serde(default)]
    pub default_tile: Option<String>,
    #[serde(default = "d_levels")]
    pub n_levels_per_eval: usize,
    #[serde(default)]
    pub novelty: Option<NoveltyDoc>,
    pub fitness: Vec<FitnessDoc>,
}

fn resolve_tile(tileset: &Tileset, name: &str) -> Result<Tile> {
    tileset
        .index_of(name)
        .with_context(|| format!("tile '{name}' is not in the tileset"))
}

impl FitnessDoc {
    pub fn weight(&self) -> f64 {
        match self {
            FitnessDoc::Probability { weight, .. }
            | FitnessDoc::Reachability { weight, .. }
            | FitnessDoc::EqualDistribution { weight, .. }
            | FitnessDoc::TargetOverlap { weight, .. }
            | FitnessDoc::House { weight, .. }
            | FitnessDoc::Garden { weight, .. }
            | FitnessDoc::BoundaryLayout { weight, .. }
            | FitnessDoc::Novelty { weight }
            | FitnessDoc::IntraNovelty { weight } => *weight,
        }
    }

    pub fn to_component(&self, tileset: &Tileset, base_dir: &Path) -> Result<Component> {
        let component = match self {
            FitnessDoc::Probability { target, .. } => {
                let mut probs = vec![0.0; tileset.len()];
                for (name, frac) in target {
                    probs[resolve_tile(tileset, name)? as usize] = *frac;
                }
                let dist = TileDistribution::new(probs)
                    .map_err(|e| anyhow::anyhow!("bad target distribution: {e}"))?;
                Component::Objective(Objective::Probability { target: dist })
            }
            FitnessDoc::Reachability { house, road, garden, .. } => {
                Component::Objective(Objective::Reachability {
                    house: resolve_tile(tileset, house)?,
                    road: resolve_tile(tileset, road)?,
                    garden: resolve_tile(tileset, garden)?,
                })
            }
            FitnessDoc::EqualDistribution { classes, .. } => {
                Component::Objective(Objective::EqualDistribution {
                    classes: [
                        resolve_tile(tileset, &classes[0])?,
                        resolve_tile(tileset, &classes[1])?,
                        resolve_tile(tileset, &classes[2])?,
                    ],
                })
            }
            FitnessDoc::TargetOverlap { target_path, .. } => {
                let (grid, target_ts) = crate::level_file::load(&base_dir.join(target_path))?;
                if target_ts.names() != tileset.names() {
                    bail!("target level tileset does not match the training tileset");
                }
                Component::Objective(Objective::TargetOverlap { target: grid })
            }
            FitnessDoc::House { wall, air, roof, .. } => Component::Objective(Objective::House {
                wall: resolve_tile(tileset, wall)?,
                air: resolve_tile(tileset, air)?,
                roof: resolve_tile(tileset, roof)?,
            }),
            FitnessDoc::Garden { tree, flower, water, grass, .. } => {
                Component::Objective(Objective::Garden {
                    tree: resolve_tile(tileset, tree)?,
                    flower: resolve_tile(tileset, flower)?,
                    water: resolve_tile(tileset, water)?,
                    grass: resolve_tile(tileset, grass)?,
                })
            }
            FitnessDoc::BoundaryLayout { house, road, garden, .. } => {
                Component::Objective(Objective::BoundaryLayout {
                    house: resolve_tile(tileset, house)?,
                    road: resolve_tile(tileset, road)?,
                    garden: resolve_tile(tileset, garden)?,
                })
            }
            FitnessDoc::Novelty { .. } => Component::Novelty,
            FitnessDoc::IntraNovelty { .. } => Component::IntraNovelty,
        };
        Ok(component)
    }
}

impl TrainDoc {
    pub fn parse(text: &str) -> Result<TrainDoc> {
        serde_json::from_str(text).context("parsing training config")
    }

    /// Resolve names and paths into a core training config. Relative target
    /// paths are resolved against `base_dir`.
    pub fn to_core(&self, master_seed: u64, base_dir: &Path) -> Result<TrainConfig> {
        let tileset = Tileset::from_names(self.tileset.clone())
            .map_err(|e| anyhow::anyhow!("bad tileset: {e}"))?;
        let start = match self.start {
            StartDoc::Random => StartPolicy::Random,
            StartDoc::Default => {
                let name = self
                    .default_tile
                    .as_ref()
                    .context("start is 'default' but 'default_tile' is missing")?;
                StartPolicy::Default(resolve_tile(&tileset, name)?)
            }
        };
        let mut components = Vec::new();
        for doc in &self.fitness {
            components.push((doc.to_component(&tileset, base_dir)?, doc.weight()));
        }
        let fitness = WeightedFitness { components };
        fitness
            .validate()
            .map_err(|e| anyhow::anyhow!("bad fitness weights: {e}"))?;
        let novelty = match &self.novelty {
            Some(n) => NoveltyConfig { k: n.k, archive_adds_per_generation: n.archive_per_generation },
            None => NoveltyConfig::default(),
        };
        let config = TrainConfig {
            level_size: self.level_size.clone(),
            tileset,
            gen_params: GenParams {
                context_size: self.context_size,
                one_hot: self.one_hot,
                num_random_vars: self.num_random_vars,
                perturb_size: self.perturb_size,
                iterations: self.iterations,
                input_center_tile: self.input_center_tile,
                start,
            },
            neat_params: NeatParams {
                population_size: self.population_size,
                ..NeatParams::default()
            },
            generations: self.generations,
            n_levels_per_eval: self.n_levels_per_eval,
            fitness,
            novelty,
            master_seed,
        };
        config
            .validate()
            .map_err(|e| anyhow::anyhow!("invalid training config: {e}"))?;
        Ok(config)
    }
}
