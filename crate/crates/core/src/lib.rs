//! Core algorithms for evolving and composing neural tilemap generators.
//!
//! This crate is `no_std` (alloc required) and contains no IO. The companion
//! `levelgen-cli` crate carries file formats, the command-line interface and
//! the experiment runners.
//!
//! Module overview:
//! - `grid`:      dense 2D/3D tilemaps, region labeling, rectangle coalescing,
//!                Hamming distance, window downsampling.
//! - `neat`:      genomes with innovation numbers, mutation, crossover,
//!                speciation and feed-forward evaluation.
//! - `generator`: sequential per-tile level generation driven by a network.
//! - `fitness`:   feasibility fitness functions, novelty and weighting.
//! - `evolve`:    the training driver tying the above together.
//! - `composer`:  recursive composition of generators over a tree with tile
//!                mappings, subtile sizes and coalescing.
//! - `rng`:       counter-based stream derivation for reproducibility.
//!
//! All randomness flows through explicitly derived [`rng`] streams, so every
//! result is bit-reproducible given the same seed, regardless of evaluation
//! order or thread count.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod composer;
pub mod evolve;
pub mod fitness;
pub mod generator;
pub mod grid;
pub mod neat;
pub mod rng;
