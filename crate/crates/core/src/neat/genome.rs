//! Genome representation, mutation operators, crossover and compatibility.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::population::InnovationRegistry;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NeatError {
    /// Zero inputs or outputs requested.
    SizeError,
    /// Input vector length does not match the genome's input arity.
    ArityMismatch { expected: usize, got: usize },
    /// A fitness value was NaN or infinite.
    NonFiniteFitness,
    /// Population and fitness lists differ in length, or population empty.
    PopulationMismatch,
    /// Parameters out of range.
    BadParams,
}

impl fmt::Display for NeatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NeatError::SizeError => write!(f, "inputs and outputs must be at least 1"),
            NeatError::ArityMismatch { expected, got } => {
                write!(f, "expected {expected} inputs, got {got}")
            }
            NeatError::NonFiniteFitness => write!(f, "fitness must be finite"),
            NeatError::PopulationMismatch => write!(f, "population/fitness length mismatch"),
            NeatError::BadParams => write!(f, "invalid NEAT parameters"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRole {
    Input,
    Output,
    Hidden,
    Bias,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeGene {
    pub id: u32,
    pub role: NodeRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnGene {
    #[serde(rename = "innov")]
    pub innovation: u32,
    pub from: u32,
    pub to: u32,
    pub weight: f64,
    pub enabled: bool,
}

/// NEAT hyperparameters. Defaults are the canonical values recorded in run
/// metadata by the training driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NeatParams {
    pub population_size: usize,
    pub weight_mutate_rate: f64,
    pub weight_sigma: f64,
    pub weight_reset_prob: f64,
    pub add_connection_rate: f64,
    pub add_node_rate: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub compatibility_threshold: f64,
    pub survival_fraction: f64,
    pub elitism: usize,
    pub crossover_rate: f64,
}

impl Default for NeatParams {
    fn default() -> Self {
        NeatParams {
            population_size: 50,
            weight_mutate_rate: 0.8,
            weight_sigma: 0.5,
            weight_reset_prob: 0.1,
            add_connection_rate: 0.1,
            add_node_rate: 0.05,
            c1: 1.0,
            c2: 1.0,
            c3: 0.4,
            compatibility_threshold: 3.0,
            survival_fraction: 0.2,
            elitism: 1,
            crossover_rate: 0.75,
        }
    }
}

impl NeatParams {
    pub fn validate(&self) -> Result<(), NeatError> {
        let rates = [
            self.weight_mutate_rate,
            self.weight_reset_prob,
            self.add_connection_rate,
            self.add_node_rate,
            self.survival_fraction,
            self.crossover_rate,
        ];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r))
            || self.population_size < 2
            || self.compatibility_threshold <= 0.0
            || self.weight_sigma < 0.0
        {
            return Err(NeatError::BadParams);
        }
        Ok(())
    }
}

/// Probability that an inherited matching gene is disabled in the child when
/// it is disabled in either parent.
pub(super) const DISABLE_INHERIT_PROB: f64 = 0.75;

/// A feed-forward NEAT genome. Node ids are unique, innovation ids are unique
/// within the genome, and the connection graph is acyclic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub nodes: Vec<NodeGene>,
    pub connections: Vec<ConnGene>,
}

fn gaussian<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    sigma * libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * PI * u2)
}

impl Genome {
    /// Fully connected input(+bias) to output genome with no hidden nodes and
    /// uniform random weights in [-1, 1]. Initial innovation ids are the
    /// deterministic dense numbering shared with [`InnovationRegistry::new`].
    pub fn initial<R: Rng>(
        n_inputs: usize,
        n_outputs: usize,
        rng: &mut R,
    ) -> Result<Genome, NeatError> {
        if n_inputs == 0 || n_outputs == 0 {
            return Err(NeatError::SizeError);
        }
        let mut nodes = Vec::with_capacity(n_inputs + 1 + n_outputs);
        for id in 0..n_inputs {
            nodes.push(NodeGene { id: id as u32, role: NodeRole::Input });
        }
        nodes.push(NodeGene { id: n_inputs as u32, role: NodeRole::Bias });
        for o in 0..n_outputs {
            nodes.push(NodeGene { id: (n_inputs + 1 + o) as u32, role: NodeRole::Output });
        }
        let mut connections = Vec::with_capacity((n_inputs + 1) * n_outputs);
        let mut innovation = 0;
        for from in 0..=n_inputs {
            for o in 0..n_outputs {
                connections.push(ConnGene {
                    innovation,
                    from: from as u32,
                    to: (n_inputs + 1 + o) as u32,
                    weight: rng.gen_range(-1.0..=1.0),
                    enabled: true,
                });
                innovation += 1;
            }
        }
        Ok(Genome { nodes, connections })
    }

    pub fn n_inputs(&self) -> usize {
        self.nodes.iter().filter(|n| n.role == NodeRole::Input).count()
    }

    pub fn n_outputs(&self) -> usize {
        self.nodes.iter().filter(|n| n.role == NodeRole::Output).count()
    }

    fn has_connection(&self, from: u32, to: u32) -> bool {
        self.connections.iter().any(|c| c.from == from && c.to == to)
    }

    fn has_node(&self, id: u32) -> bool {
        self.nodes.iter().any(|n| n.id == id)
    }

    /// True if `to` can reach `from` along the connection graph, i.e. adding
    /// a connection from -> to would create a cycle.
    fn creates_cycle(&self, from: u32, to: u32) -> bool {
        if from == to {
            return true;
        }
        let mut stack = alloc::vec![to];
        let mut visited = alloc::vec![to];
        while let Some(node) = stack.pop() {
            for c in self.connections.iter().filter(|c| c.from == node) {
                if c.to == from {
                    return true;
                }
                if !visited.contains(&c.to) {
                    visited.push(c.to);
                    stack.push(c.to);
                }
            }
        }
        false
    }

    /// Structural acyclicity check (used by tests and debug assertions).
    pub fn is_acyclic(&self) -> bool {
        // Kahn's algorithm over all connections.
        let mut indegree: Vec<(u32, usize)> =
            self.nodes.iter().map(|n| (n.id, 0)).collect();
        for c in &self.connections {
            if let Some(e) = indegree.iter_mut().find(|(id, _)| *id == c.to) {
                e.1 += 1;
            }
        }
        let mut ready: Vec<u32> = indegree.iter().filter(|(_, d)| *d == 0).map(|(id, _)| *id).collect();
        let mut removed = 0;
        while let Some(node) = ready.pop() {
            removed += 1;
            for c in self.connections.iter().filter(|c| c.from == node) {
                if let Some(e) = indegree.iter_mut().find(|(id, _)| *id == c.to) {
                    e.1 -= 1;
                    if e.1 == 0 {
                        ready.push(e.0);
                    }
                }
            }
        }
        removed == self.nodes.len()
    }

    /// Apply weight and structural mutations with the configured
    /// probabilities. Mutations that would create a cycle are skipped.
    pub fn mutate<R: Rng>(
        &self,
        params: &NeatParams,
        registry: &mut InnovationRegistry,
        rng: &mut R,
    ) -> Genome {
        let mut child = self.clone();
        // Weight mutation, per connection.
        for c in &mut child.connections {
            if rng.gen_bool(params.weight_mutate_rate) {
                if rng.gen_bool(params.weight_reset_prob) {
                    c.weight = rng.gen_range(-1.0..=1.0);
                } else {
                    c.weight += gaussian(rng, params.weight_sigma);
                }
            }
        }
        // Add connection.
        if params.add_connection_rate > 0.0 && rng.gen_bool(params.add_connection_rate) {
            let mut candidates = Vec::new();
            for a in &child.nodes {
                if a.role == NodeRole::Output {
                    continue;
                }
                for b in &child.nodes {
                    if matches!(b.role, NodeRole::Input | NodeRole::Bias) || a.id == b.id {
                        continue;
                    }
                    if !child.has_connection(a.id, b.id) && !child.creates_cycle(a.id, b.id) {
                        candidates.push((a.id, b.id));
                    }
                }
            }
            if !candidates.is_empty() {
                let (from, to) = candidates[rng.gen_range(0..candidates.len())];
                let innovation = registry.connection(from, to);
                child.connections.push(ConnGene {
                    innovation,
                    from,
                    to,
                    weight: rng.gen_range(-1.0..=1.0),
                    enabled: true,
                });
            }
        }
        // Add node: split an enabled connection.
        if params.add_node_rate > 0.0 && rng.gen_bool(params.add_node_rate) {
            let enabled: Vec<usize> = child
                .connections
                .iter()
                .enumerate()
                .filter(|(_, c)| c.enabled)
                .map(|(i, _)| i)
                .collect();
            if !enabled.is_empty() {
                let idx = enabled[rng.gen_range(0..enabled.len())];
                let split = registry.split(child.connections[idx]);
                if !child.has_node(split.node) {
                    let old = &mut child.connections[idx];
                    let (from, to, weight) = (old.from, old.to, old.weight);
                    old.enabled = false;
                    child.nodes.push(NodeGene { id: split.node, role: NodeRole::Hidden });
                    child.connections.push(ConnGene {
                        innovation: split.innov_in,
                        from,
                        to: split.node,
                        weight: 1.0,
                        enabled: true,
                    });
                    child.connections.push(ConnGene {
                        innovation: split.innov_out,
                        from: split.node,
                        to,
                        weight,
                        enabled: true,
                    });
                }
            }
        }
        child
    }

    /// Crossover. Matching innovations take their weight from a random
    /// parent; disjoint and excess genes come from the fitter parent. A
    /// matching gene disabled in either parent is disabled in the child with
    /// probability 0.75.
    pub fn crossover<R: Rng>(fitter: &Genome, other: &Genome, rng: &mut R) -> Genome {
        let mut connections = Vec::with_capacity(fitter.connections.len());
        for gene in &fitter.connections {
            let mut child_gene = *gene;
            if let Some(m) = other.connections.iter().find(|c| c.innovation == gene.innovation) {
                if rng.gen_bool(0.5) {
                    child_gene.weight = m.weight;
                }
                if !gene.enabled || !m.enabled {
                    child_gene.enabled = !rng.gen_bool(DISABLE_INHERIT_PROB);
                } else {
                    child_gene.enabled = true;
                }
            }
            connections.push(child_gene);
        }
        Genome { nodes: fitter.nodes.clone(), connections }
    }

    /// Compatibility distance c1*E/N + c2*D/N + c3*Wbar, where E/D are excess
    /// and disjoint gene counts, Wbar the mean weight difference of matching
    /// genes, and N the larger connection count.
    pub fn compatibility(a: &Genome, b: &Genome, params: &NeatParams) -> f64 {
        let max_a = a.connections.iter().map(|c| c.innovation).max();
        let max_b = b.connections.iter().map(|c| c.innovation).max();
        let cutoff = match (max_a, max_b) {
            (Some(x), Some(y)) => x.min(y),
            _ => 0,
        };
        let mut matching = 0usize;
        let mut weight_diff = 0.0;
        let mut disjoint = 0usize;
        let mut excess = 0usize;
        for c in &a.connections {
            match b.connections.iter().find(|o| o.innovation == c.innovation) {
                Some(o) => {
                    matching += 1;
                    weight_diff += (c.weight - o.weight).abs();
                }
                None if c.innovation <= cutoff => disjoint += 1,
                None => excess += 1,
            }
        }
        for o in &b.connections {
            if a.connections.iter().all(|c| c.innovation != o.innovation) {
                if o.innovation <= cutoff {
                    disjoint += 1;
                } else {
                    excess += 1;
                }
            }
        }
        let n = a.connections.len().max(b.connections.len()).max(1) as f64;
        let wbar = if matching > 0 { weight_diff / matching as f64 } else { 0.0 };
        params.c1 * excess as f64 / n + params.c2 * disjoint as f64 / n + params.c3 * wbar
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn registry(n_in: usize, n_out: usize) -> InnovationRegistry {
        InnovationRegistry::new(n_in, n_out)
    }

    #[test]
    fn initial_genome_counts() {
        let mut rng = stream(&[1]);
        let g = Genome::initial(1, 1, &mut rng).unwrap();
        assert_eq!(g.connections.len(), 2);
        let g = Genome::initial(9, 3, &mut rng).unwrap();
        assert_eq!(g.connections.len(), 30);
        assert!(g.is_acyclic());
        assert!(Genome::initial(0, 1, &mut rng).is_err());
    }

    #[test]
    fn initial_genome_deterministic() {
        let a = Genome::initial(4, 2, &mut stream(&[7])).unwrap();
        let b = Genome::initial(4, 2, &mut stream(&[7])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mutate_with_zero_rates_is_identity() {
        let g = Genome::initial(3, 2, &mut stream(&[2])).unwrap();
        let params = NeatParams {
            weight_mutate_rate: 0.0,
            add_connection_rate: 0.0,
            add_node_rate: 0.0,
            ..NeatParams::default()
        };
        let mut reg = registry(3, 2);
        let child = g.mutate(&params, &mut reg, &mut stream(&[3]));
        assert_eq!(child, g);
    }

    #[test]
    fn add_node_splits_connection() {
        let g = Genome::initial(1, 1, &mut stream(&[4])).unwrap();
        let params = NeatParams {
            weight_mutate_rate: 0.0,
            add_connection_rate: 0.0,
            add_node_rate: 1.0,
            ..NeatParams::default()
        };
        let mut reg = registry(1, 1);
        let child = g.mutate(&params, &mut reg, &mut stream(&[5]));
        assert_eq!(child.nodes.len(), g.nodes.len() + 1);
        assert_eq!(child.connections.iter().filter(|c| c.enabled).count(), 3);
        assert_eq!(child.connections.iter().filter(|c| !c.enabled).count(), 1);
        assert!(child.is_acyclic());
        // Split preserves function at the split point: in-edge weight 1,
        // out-edge weight equals the old weight.
        let disabled = child.connections.iter().find(|c| !c.enabled).unwrap();
        let new_node = child.nodes.iter().map(|n| n.id).max().unwrap();
        let in_edge = child
            .connections
            .iter()
            .find(|c| c.enabled && c.to == new_node && c.from == disabled.from)
            .unwrap();
        let out_edge = child
            .connections
            .iter()
            .find(|c| c.enabled && c.from == new_node && c.to == disabled.to)
            .unwrap();
        assert_eq!(in_edge.weight, 1.0);
        assert_eq!(out_edge.weight, disabled.weight);
    }

    #[test]
    fn add_connection_on_complete_graph_is_noop() {
        // 1 input, 1 output, no hidden: input->out and bias->out both exist,
        // so there is no legal site.
        let g = Genome::initial(1, 1, &mut stream(&[6])).unwrap();
        let params = NeatParams {
            weight_mutate_rate: 0.0,
            add_connection_rate: 1.0,
            add_node_rate: 0.0,
            ..NeatParams::default()
        };
        let mut reg = registry(1, 1);
        let child = g.mutate(&params, &mut reg, &mut stream(&[7]));
        assert_eq!(child, g);
    }

    #[test]
    fn self_crossover_is_identity_when_all_enabled() {
        let g = Genome::initial(3, 2, &mut stream(&[8])).unwrap();
        let child = Genome::crossover(&g, &g, &mut stream(&[9]));
        assert_eq!(child, g);
    }

    #[test]
    fn crossover_without_shared_innovations_copies_fitter() {
        let fitter = Genome::initial(2, 1, &mut stream(&[10])).unwrap();
        let mut other = Genome::initial(2, 1, &mut stream(&[11])).unwrap();
        for c in &mut other.connections {
            c.innovation += 100;
        }
        let child = Genome::crossover(&fitter, &other, &mut stream(&[12]));
        assert_eq!(child, fitter);
    }

    #[test]
    fn disabled_gene_reinherit_rate() {
        let mut a = Genome::initial(1, 1, &mut stream(&[13])).unwrap();
        a.connections[0].enabled = false;
        let b = a.clone();
        let mut rng = stream(&[14]);
        let trials = 20_000;
        let disabled = (0..trials)
            .filter(|_| !Genome::crossover(&a, &b, &mut rng).connections[0].enabled)
            .count();
        let rate = disabled as f64 / trials as f64;
        assert!((rate - 0.75).abs() < 0.02, "rate was {rate}");
    }

    #[test]
    fn compatibility_basics() {
        let params = NeatParams::default();
        let a = Genome::initial(2, 2, &mut stream(&[15])).unwrap();
        assert_eq!(Genome::compatibility(&a, &a, &params), 0.0);
        let mut b = a.clone();
        b.connections[0].weight += 0.8;
        let expected = params.c3 * 0.8 / a.connections.len() as f64;
        assert!((Genome::compatibility(&a, &b, &params) - expected).abs() < 1e-12);
        assert_eq!(
            Genome::compatibility(&a, &b, &params),
            Genome::compatibility(&b, &a, &params)
        );
    }

    #[test]
    fn mutations_preserve_acyclicity() {
        let params = NeatParams {
            add_connection_rate: 0.5,
            add_node_rate: 0.5,
            ..NeatParams::default()
        };
        let mut reg = registry(3, 2);
        let mut g = Genome::initial(3, 2, &mut stream(&[16])).unwrap();
        let mut rng = stream(&[17]);
        for _ in 0..200 {
            g = g.mutate(&params, &mut reg, &mut rng);
            assert!(g.is_acyclic());
        }
    }
}
