//! Innovation bookkeeping, speciation and the generational step.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use rand::Rng;

use super::genome::{ConnGene, Genome, NeatError, NeatParams};

/// Outcome of splitting a connection: the shared hidden node id and the two
/// new connection innovations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitRecord {
    pub node: u32,
    pub innov_in: u32,
    pub innov_out: u32,
}

/// Global innovation registry for one evolutionary run. The same structural
/// mutation signature always yields the same innovation id, so genomes that
/// independently acquire the same connection stay alignable in crossover.
#[derive(Debug, Clone)]
pub struct InnovationRegistry {
    connections: BTreeMap<(u32, u32), u32>,
    splits: BTreeMap<u32, SplitRecord>,
    next_innovation: u32,
    next_node: u32,
}

impl InnovationRegistry {
    /// Registry primed for the dense initial topology produced by
    /// [`Genome::initial`] with the same arities.
    pub fn new(n_inputs: usize, n_outputs: usize) -> Self {
        let mut connections = BTreeMap::new();
        let mut innovation = 0;
        for from in 0..=n_inputs as u32 {
            for o in 0..n_outputs as u32 {
                connections.insert((from, n_inputs as u32 + 1 + o), innovation);
                innovation += 1;
            }
        }
        InnovationRegistry {
            connections,
            splits: BTreeMap::new(),
            next_innovation: innovation,
            next_node: (n_inputs + 1 + n_outputs) as u32,
        }
    }

    /// Innovation id for a (from, to) connection, allocating if unseen.
    pub fn connection(&mut self, from: u32, to: u32) -> u32 {
        if let Some(&id) = self.connections.get(&(from, to)) {
            return id;
        }
        let id = self.next_innovation;
        self.next_innovation += 1;
        self.connections.insert((from, to), id);
        id
    }

    /// Shared record for splitting the given connection gene.
    pub fn split(&mut self, conn: ConnGene) -> SplitRecord {
        if let Some(&r) = self.splits.get(&conn.innovation) {
            return r;
        }
        let node = self.next_node;
        self.next_node += 1;
        let innov_in = self.connection(conn.from, node);
        let innov_out = self.connection(node, conn.to);
        let record = SplitRecord { node, innov_in, innov_out };
        self.splits.insert(conn.innovation, record);
        record
    }
}

/// Group the population into species by compatibility threshold. The first
/// member of each species acts as its representative.
fn speciate(population: &[Genome], params: &NeatParams) -> Vec<Vec<usize>> {
    let mut species: Vec<Vec<usize>> = Vec::new();
    for (i, genome) in population.iter().enumerate() {
        let found = species.iter_mut().find(|members| {
            Genome::compatibility(genome, &population[members[0]], params)
                < params.compatibility_threshold
        });
        match found {
            Some(members) => members.push(i),
            None => species.push(alloc::vec![i]),
        }
    }
    species
}

/// Largest-remainder apportionment of `total` offspring over species scores.
fn apportion(scores: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = scores.iter().sum();
    if sum <= 0.0 || scores.is_empty() {
        return Vec::new();
    }
    let quotas: Vec<f64> = scores.iter().map(|s| s / sum * total as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|&q| libm::floor(q) as usize).collect();
    let mut assigned: usize = counts.iter().sum();
    // Distribute the remainder by descending fractional part, index as
    // tie-break for determinism.
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - libm::floor(quotas[a]);
        let fb = quotas[b] - libm::floor(quotas[b]);
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    let mut i = 0;
    while assigned < total {
        counts[order[i % order.len()]] += 1;
        assigned += 1;
        i += 1;
    }
    counts
}

/// One NEAT generation: speciate, share fitness, apportion offspring, copy
/// elites unchanged, and fill the remainder with crossover + mutation. The
/// output population has exactly `params.population_size` members.
pub fn evolve_step<R: Rng>(
    population: &[Genome],
    fitnesses: &[f64],
    params: &NeatParams,
    registry: &mut InnovationRegistry,
    rng: &mut R,
) -> Result<Vec<Genome>, NeatError> {
    params.validate()?;
    if population.is_empty() || population.len() != fitnesses.len() {
        return Err(NeatError::PopulationMismatch);
    }
    if fitnesses.iter().any(|f| !f.is_finite()) {
        return Err(NeatError::NonFiniteFitness);
    }

    let species = speciate(population, params);

    // Shift fitnesses to be non-negative so apportionment stays meaningful
    // for arbitrary fitness scales. The epsilon keeps flat-fitness
    // populations apportioned proportionally to species sizes.
    let min_f = fitnesses.iter().cloned().fold(f64::INFINITY, f64::min);
    let scores: Vec<f64> = species
        .iter()
        .map(|members| members.iter().map(|&i| fitnesses[i] - min_f + 1e-9).sum())
        .collect();

    let elitism = params.elitism.min(params.population_size);
    let mut by_fitness: Vec<usize> = (0..population.len()).collect();
    by_fitness.sort_by(|&a, &b| fitnesses[b].partial_cmp(&fitnesses[a]).unwrap().then(a.cmp(&b)));

    let mut next: Vec<Genome> = by_fitness
        .iter()
        .take(elitism)
        .map(|&i| population[i].clone())
        .collect();

    let counts = apportion(&scores, params.population_size - elitism);
    for (members, &count) in species.iter().zip(&counts) {
        let mut ranked = members.clone();
        ranked.sort_by(|&a, &b| {
            fitnesses[b].partial_cmp(&fitnesses[a]).unwrap().then(a.cmp(&b))
        });
        let n_parents =
            (libm::ceil(ranked.len() as f64 * params.survival_fraction) as usize).clamp(1, ranked.len());
        let parents = &ranked[..n_parents];
        for _ in 0..count {
            let child = if parents.len() >= 2 && rng.gen_bool(params.crossover_rate) {
                let a = parents[rng.gen_range(0..parents.len())];
                let b = parents[rng.gen_range(0..parents.len())];
                let (hi, lo) = if fitnesses[a] >= fitnesses[b] { (a, b) } else { (b, a) };
                Genome::crossover(&population[hi], &population[lo], rng)
            } else {
                population[parents[rng.gen_range(0..parents.len())]].clone()
            };
            next.push(child.mutate(params, registry, rng));
        }
    }

    debug_assert_eq!(next.len(), params.population_size);
    Ok(next)
}
