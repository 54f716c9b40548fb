//! Minimal feed-forward NEAT: innovation-numbered genomes, structural and
//! weight mutation, crossover, speciation with fitness sharing, and compiled
//! network evaluation.

mod genome;
mod network;
mod population;

pub use genome::{ConnGene, Genome, NeatError, NeatParams, NodeGene, NodeRole};
pub use network::{forward, Network};
pub use population::{evolve_step, InnovationRegistry};
