//! Training driver: evaluate generators, run NEAT generations, track the
//! per-generation fitness curve, and return the best generator.

use alloc::vec::Vec;
use core::fmt;

use crate::fitness::{FitnessError, NoveltyConfig, WeightedFitness};
use crate::generator::{GenError, GenParams, GeneratorSpec, input_size};
use crate::grid::{Grid, Tileset};
use crate::neat::{Genome, InnovationRegistry, NeatError, NeatParams, evolve_step};
use crate::rng::{self, Stream};

const POP_TAG: u64 = 0x31;
const EVAL_TAG: u64 = 0x32;
const STEP_TAG: u64 = 0x33;

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    BadConfig(&'static str),
    Gen(GenError),
    Neat(NeatError),
    Fitness(FitnessError),
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::BadConfig(msg) => write!(f, "invalid training config: {msg}"),
            TrainError::Gen(e) => write!(f, "{e}"),
            TrainError::Neat(e) => write!(f, "{e}"),
            TrainError::Fitness(e) => write!(f, "{e}"),
        }
    }
}

impl From<GenError> for TrainError {
    fn from(e: GenError) -> Self {
        TrainError::Gen(e)
    }
}

impl From<NeatError> for TrainError {
    fn from(e: NeatError) -> Self {
        TrainError::Neat(e)
    }
}

impl From<FitnessError> for TrainError {
    fn from(e: FitnessError) -> Self {
        TrainError::Fitness(e)
    }
}

/// Everything one training run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub level_size: Vec<usize>,
    pub tileset: Tileset,
    pub gen_params: GenParams,
    pub neat_params: NeatParams,
    pub generations: usize,
    pub n_levels_per_eval: usize,
    pub fitness: WeightedFitness,
    pub novelty: NoveltyConfig,
    pub master_seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.generations < 1 {
            return Err(TrainError::BadConfig("generations must be >= 1"));
        }
        if self.n_levels_per_eval < 1 {
            return Err(TrainError::BadConfig("n_levels_per_eval must be >= 1"));
        }
        if !(self.level_size.len() == 2 || self.level_size.len() == 3)
            || self.level_size.iter().any(|&s| s == 0)
        {
            return Err(TrainError::BadConfig("level_size must be 2 or 3 positive extents"));
        }
        self.gen_params.validate()?;
        self.neat_params.validate()?;
        self.fitness.validate()?;
        Ok(())
    }

    /// Network arity implied by the config.
    pub fn arity(&self) -> (usize, usize) {
        (
            input_size(&self.gen_params, self.tileset.len(), self.level_size.len()),
            self.tileset.len(),
        )
    }

    fn spec_for(&self, genome: Genome) -> GeneratorSpec {
        GeneratorSpec { genome, params: self.gen_params.clone(), tileset: self.tileset.clone() }
    }
}

/// One row of the training curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationMetrics {
    pub max_fitness: f64,
    pub mean_fitness: f64,
}

/// Outcome of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub best: GeneratorSpec,
    pub best_fitness: f64,
    /// One entry per generation.
    pub metrics: Vec<GenerationMetrics>,
}

/// The RNG stream owned by one (generation, individual, level) cell. The
/// mapping depends only on the tuple, never on evaluation order, so results
/// are identical across worker counts.
pub fn seed_stream(master_seed: u64, generation: u64, individual: u64, level: u64) -> Stream {
    rng::stream(&[master_seed, EVAL_TAG, generation, individual, level])
}

/// Generate and score one genome's levels. The returned fitness excludes any
/// population-wide novelty term (it is combined with novelty weight applied
/// to 0); [`train`] recombines once novelty scores exist.
pub fn evaluate_genome(
    genome: &Genome,
    config: &TrainConfig,
    seed: u64,
) -> Result<(f64, Vec<Grid>), TrainError> {
    let spec = config.spec_for(genome.clone());
    let levels = spec.generate_batch(&config.level_size, config.n_levels_per_eval, seed)?;
    let fitness = config.fitness.combine(&levels, 0.0)?;
    Ok((fitness, levels))
}

/// Run the full evolutionary loop and return the best generator of the final
/// generation together with the fitness curve.
pub fn train(config: &TrainConfig) -> Result<TrainResult, TrainError> {
    config.validate()?;
    let (n_in, n_out) = config.arity();
    let mut registry = InnovationRegistry::new(n_in, n_out);
    let pop_size = config.neat_params.population_size;
    let mut population: Vec<Genome> = (0..pop_size)
        .map(|i| Genome::initial(n_in, n_out, &mut rng::stream(&[config.master_seed, POP_TAG, i as u64])))
        .collect::<Result<_, _>>()?;

    let use_novelty = config.fitness.uses_novelty();
    let mut archive: Vec<Vec<Grid>> = Vec::new();
    let mut metrics = Vec::with_capacity(config.generations);
    let mut final_fitnesses = Vec::new();

    for generation in 0..config.generations {
        let mut level_sets = Vec::with_capacity(pop_size);
        for (i, genome) in population.iter().enumerate() {
            let seed = rng::mix(&[config.master_seed, EVAL_TAG, generation as u64, i as u64]);
            let spec = config.spec_for(genome.clone());
            level_sets.push(spec.generate_batch(
                &config.level_size,
                config.n_levels_per_eval,
                seed,
            )?);
        }
        let novelty = if use_novelty {
            crate::fitness::novelty_scores(&level_sets, &config.novelty, &mut archive)?
        } else {
            alloc::vec![0.0; pop_size]
        };
        let mut fitnesses = Vec::with_capacity(pop_size);
        for (levels, &nov) in level_sets.iter().zip(&novelty) {
            fitnesses.push(config.fitness.combine(levels, nov)?);
        }

        let max = fitnesses.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = fitnesses.iter().sum::<f64>() / pop_size as f64;
        metrics.push(GenerationMetrics { max_fitness: max, mean_fitness: mean });

        if generation + 1 < config.generations {
            let mut step_rng =
                rng::stream(&[config.master_seed, STEP_TAG, generation as u64]);
            population = evolve_step(
                &population,
                &fitnesses,
                &config.neat_params,
                &mut registry,
                &mut step_rng,
            )?;
        } else {
            final_fitnesses = fitnesses;
        }
    }

    let best_idx = (0..pop_size)
        .max_by(|&a, &b| {
            final_fitnesses[a]
                .partial_cmp(&final_fitnesses[b])
                .unwrap()
                .then(b.cmp(&a))
        })
        .unwrap();
    Ok(TrainResult {
        best: config.spec_for(population[best_idx].clone()),
        best_fitness: final_fitnesses[best_idx],
        metrics,
    })
}
