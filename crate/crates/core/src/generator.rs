//! Turning a network into a level generator.
//!
//! Generation sweeps the grid sequentially, feeding each cell's surrounding
//! window (boundary padded with -1) into the network and writing the argmax
//! output tile in place, for a configurable number of iterations.

use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{Grid, GridError, RectIter, Tile, Tileset};
use crate::neat::{Genome, NeatError, Network};
use crate::rng;

/// Boundary padding fed to the network for out-of-bounds cells.
pub const PADDING_VALUE: f64 = -1.0;

const INIT_TAG: u64 = 0x11;
const ITER_TAG: u64 = 0x22;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GenError {
    /// Genome arity does not match the parameters and tileset.
    SpecMismatch { expected_inputs: usize, genome_inputs: usize, expected_outputs: usize, genome_outputs: usize },
    /// Requested size invalid.
    BadSize,
    /// Parameters out of range.
    BadParams,
    Grid(GridError),
    Neat(NeatError),
}

impl fmt::Display for GenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenError::SpecMismatch {
                expected_inputs,
                genome_inputs,
                expected_outputs,
                genome_outputs,
            } => write!(
                f,
                "generator arity mismatch: need {expected_inputs} in / {expected_outputs} out, \
                 genome has {genome_inputs} in / {genome_outputs} out"
            ),
            GenError::BadSize => write!(f, "level size must be positive in each dimension"),
            GenError::BadParams => write!(f, "invalid generation parameters"),
            GenError::Grid(e) => write!(f, "{e}"),
            GenError::Neat(e) => write!(f, "{e}"),
        }
    }
}

impl From<GridError> for GenError {
    fn from(e: GridError) -> Self {
        GenError::Grid(e)
    }
}

impl From<NeatError> for GenError {
    fn from(e: NeatError) -> Self {
        GenError::Neat(e)
    }
}

/// How the level is initialised before the first sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartPolicy {
    Random,
    Default(Tile),
}

/// Generation hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    /// Context half-width; the window is (2c+1) per axis.
    pub context_size: usize,
    pub one_hot: bool,
    pub num_random_vars: usize,
    pub perturb_size: f64,
    pub iterations: usize,
    pub input_center_tile: bool,
    pub start: StartPolicy,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            context_size: 1,
            one_hot: false,
            num_random_vars: 1,
            perturb_size: 0.0,
            iterations: 1,
            input_center_tile: false,
            start: StartPolicy::Random,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<(), GenError> {
        if self.context_size < 1 || self.iterations < 1 || self.perturb_size < 0.0 {
            return Err(GenError::BadParams);
        }
        Ok(())
    }
}

/// Network input arity implied by the parameters:
/// ((2c+1)^ndim - 1 + center) * (one_hot ? n_tiles : 1) + num_random_vars.
pub fn input_size(params: &GenParams, n_tiles: usize, ndim: usize) -> usize {
    let window = (2 * params.context_size + 1).pow(ndim as u32);
    let cells = window - 1 + usize::from(params.input_center_tile);
    cells * if params.one_hot { n_tiles } else { 1 } + params.num_random_vars
}

fn scalar_encoding(tile: Tile, n_tiles: usize) -> f64 {
    if n_tiles <= 1 {
        0.0
    } else {
        2.0 * tile as f64 / (n_tiles as f64 - 1.0) - 1.0
    }
}

/// Encode the context window around `pos` into `out`. Neighbor cells appear
/// in fixed scan order (x fastest); out-of-bounds cells encode as -1 (scalar)
/// or the all -1 vector (one-hot); the center tile is appended if enabled,
/// then `num_random_vars` Uniform[-1,1] draws. Finally every non-random
/// component receives additive Uniform[-p, p] noise.
pub fn encode_context<R: Rng>(
    grid: &Grid,
    pos: &[usize],
    params: &GenParams,
    rng: &mut R,
    out: &mut Vec<f64>,
) -> Result<(), GenError> {
    if !grid.in_bounds(pos) {
        return Err(GenError::Grid(GridError::OutOfBounds));
    }
    out.clear();
    let n_tiles = grid.n_tiles() as usize;
    let c = params.context_size as isize;
    let ndim = grid.ndim();
    let side = 2 * params.context_size + 1;
    let window = alloc::vec![side; ndim];

    let push_cell = |out: &mut Vec<f64>, cell: Option<Tile>| match (cell, params.one_hot) {
        (Some(t), false) => out.push(scalar_encoding(t, n_tiles)),
        (None, false) => out.push(PADDING_VALUE),
        (Some(t), true) => {
            for i in 0..n_tiles {
                out.push(if i == t as usize { 1.0 } else { 0.0 });
            }
        }
        (None, true) => out.extend(core::iter::repeat(PADDING_VALUE).take(n_tiles)),
    };

    for offset in RectIter::new(&window) {
        if offset.iter().all(|&o| o as isize == c) {
            continue; // center handled separately
        }
        let mut neighbor = Vec::with_capacity(ndim);
        let mut in_bounds = true;
        for axis in 0..ndim {
            let p = pos[axis] as isize + offset[axis] as isize - c;
            if p < 0 || p >= grid.dims()[axis] as isize {
                in_bounds = false;
                break;
            }
            neighbor.push(p as usize);
        }
        push_cell(out, if in_bounds { Some(grid.get(&neighbor)) } else { None });
    }
    if params.input_center_tile {
        push_cell(out, Some(grid.get(pos)));
    }
    let n_fixed = out.len();
    for _ in 0..params.num_random_vars {
        out.push(rng.gen_range(-1.0..=1.0));
    }
    if params.perturb_size > 0.0 {
        for v in out.iter_mut().take(n_fixed) {
            *v += rng.gen_range(-params.perturb_size..=params.perturb_size);
        }
    }
    Ok(())
}

/// A trained network plus everything needed to run it as a generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub genome: Genome,
    pub params: GenParams,
    pub tileset: Tileset,
}

fn argmax(values: &[f64]) -> Tile {
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best as Tile
}

impl GeneratorSpec {
    /// Check the genome arity against the parameters for `ndim` generation.
    pub fn validate(&self, ndim: usize) -> Result<(), GenError> {
        self.params.validate()?;
        let expected_inputs = input_size(&self.params, self.tileset.len(), ndim);
        let expected_outputs = self.tileset.len();
        let genome_inputs = self.genome.n_inputs();
        let genome_outputs = self.genome.n_outputs();
        if genome_inputs != expected_inputs || genome_outputs != expected_outputs {
            return Err(GenError::SpecMismatch {
                expected_inputs,
                genome_inputs,
                expected_outputs,
                genome_outputs,
            });
        }
        Ok(())
    }

    /// Initial grid per the start policy, using a substream of `seed`.
    pub fn start_grid(&self, size: &[usize], seed: u64) -> Result<Grid, GenError> {
        if size.iter().any(|&s| s == 0) || !(size.len() == 2 || size.len() == 3) {
            return Err(GenError::BadSize);
        }
        let n_tiles = self.tileset.len() as u16;
        match self.params.start {
            StartPolicy::Default(tile) => Ok(Grid::filled(size, tile, n_tiles)?),
            StartPolicy::Random => {
                let mut grid = Grid::filled(size, 0, n_tiles)?;
                let mut stream = rng::stream(&[seed, INIT_TAG]);
                for idx in 0..grid.len() {
                    let t = stream.gen_range(0..n_tiles);
                    let pos = grid.position(idx);
                    grid.set(&pos, t);
                }
                Ok(grid)
            }
        }
    }

    /// Run the sweeps for iteration indices in `range`, in place. Each
    /// iteration draws from its own substream of `seed`, so a multi-iteration
    /// run equals chaining single-iteration runs bit-exactly.
    pub fn run_iterations(
        &self,
        grid: &mut Grid,
        seed: u64,
        range: Range<usize>,
    ) -> Result<(), GenError> {
        self.validate(grid.ndim())?;
        let network = Network::compile(&self.genome);
        let mut inputs = Vec::with_capacity(network.n_inputs());
        for iteration in range {
            let mut stream = rng::stream(&[seed, ITER_TAG, iteration as u64]);
            for idx in 0..grid.len() {
                let pos = grid.position(idx);
                encode_context(grid, &pos, &self.params, &mut stream, &mut inputs)?;
                let outputs = network.activate(&inputs)?;
                grid.set(&pos, argmax(&outputs));
            }
        }
        Ok(())
    }

    /// Generate one level. Deterministic given (genome, params, size, seed).
    pub fn generate(&self, size: &[usize], seed: u64) -> Result<Grid, GenError> {
        self.validate(size.len())?;
        let mut grid = self.start_grid(size, seed)?;
        self.run_iterations(&mut grid, seed, 0..self.params.iterations)?;
        Ok(grid)
    }

    /// Generate `n` independent levels, one substream per level index.
    pub fn generate_batch(&self, size: &[usize], n: usize, seed: u64) -> Result<Vec<Grid>, GenError> {
        (0..n).map(|j| self.generate(size, rng::derive(seed, j as u64))).collect()
    }
}
