//! Compiled feed-forward phenotype.
//!
//! Compiling once per genome keeps the per-tile generation loop cheap: a
//! forward pass is a flat run over precomputed (source, weight) pairs.

use alloc::vec;
use alloc::vec::Vec;

use super::genome::{Genome, NeatError, NodeRole};

struct Step {
    target: usize,
    incoming: Vec<(usize, f64)>,
    activate: bool,
}

/// Evaluatable phenotype of a [`Genome`].
pub struct Network {
    input_slots: Vec<usize>,
    n_slots: usize,
    bias_slot: Option<usize>,
    output_slots: Vec<usize>,
    steps: Vec<Step>,
}

impl Network {
    pub fn compile(genome: &Genome) -> Network {
        let slot_of = |id: u32| genome.nodes.iter().position(|n| n.id == id).unwrap();
        let n_slots = genome.nodes.len();
        let input_slots: Vec<usize> = genome
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.role == NodeRole::Input)
            .map(|(i, _)| i)
            .collect();
        let bias_slot = genome
            .nodes
            .iter()
            .position(|n| n.role == NodeRole::Bias);
        let output_slots: Vec<usize> = genome
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.role == NodeRole::Output)
            .map(|(i, _)| i)
            .collect();

        // Topological order over all connections (the genome is acyclic).
        let mut indegree = vec![0usize; n_slots];
        for c in &genome.connections {
            indegree[slot_of(c.to)] += 1;
        }
        let mut ready: Vec<usize> =
            (0..n_slots).filter(|&s| indegree[s] == 0).collect();
        ready.reverse(); // pop() visits lowest slots first, deterministically
        let mut order = Vec::with_capacity(n_slots);
        while let Some(slot) = ready.pop() {
            order.push(slot);
            for c in &genome.connections {
                if slot_of(c.from) == slot {
                    let t = slot_of(c.to);
                    indegree[t] -= 1;
                    if indegree[t] == 0 {
                        ready.push(t);
                    }
                }
            }
        }
        debug_assert_eq!(order.len(), n_slots);

        let steps = order
            .into_iter()
            .filter(|&slot| {
                !matches!(genome.nodes[slot].role, NodeRole::Input | NodeRole::Bias)
            })
            .map(|slot| {
                let id = genome.nodes[slot].id;
                let incoming = genome
                    .connections
                    .iter()
                    .filter(|c| c.enabled && c.to == id)
                    .map(|c| (slot_of(c.from), c.weight))
                    .collect();
                Step { target: slot, incoming, activate: true }
            })
            .collect();

        Network { input_slots, n_slots, bias_slot, output_slots, steps }
    }

    pub fn n_inputs(&self) -> usize {
        self.input_slots.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.output_slots.len()
    }

    /// Evaluate the network. Inputs pass through unchanged, hidden and output
    /// nodes apply tanh, the bias node is fixed at 1.
    pub fn activate(&self, inputs: &[f64]) -> Result<Vec<f64>, NeatError> {
        if inputs.len() != self.input_slots.len() {
            return Err(NeatError::ArityMismatch {
                expected: self.input_slots.len(),
                got: inputs.len(),
            });
        }
        let mut values = vec![0.0; self.n_slots];
        for (&slot, &v) in self.input_slots.iter().zip(inputs) {
            values[slot] = v;
        }
        if let Some(b) = self.bias_slot {
            values[b] = 1.0;
        }
        for step in &self.steps {
            let sum: f64 = step.incoming.iter().map(|&(s, w)| values[s] * w).sum();
            values[step.target] = if step.activate { libm::tanh(sum) } else { sum };
        }
        Ok(self.output_slots.iter().map(|&s| values[s]).collect())
    }
}

/// Convenience single-shot evaluation.
pub fn forward(genome: &Genome, inputs: &[f64]) -> Result<Vec<f64>, NeatError> {
    Network::compile(genome).activate(inputs)
}
