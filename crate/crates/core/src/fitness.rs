//! Feasibility fitness functions, novelty, and weighted combination.
//!
//! Every fitness here is scaled to [0, 1] with 1 optimal.

use alloc::vec::Vec;
use core::fmt;

use crate::grid::{Grid, GridError, Tile, TileDistribution};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FitnessError {
    /// Fewer than two levels where a pairwise measure is required.
    TooFewLevels,
    /// Tile indices must be distinct.
    TilesNotDistinct,
    /// Target size too small for the requested template.
    SizeError,
    /// No positive weight in a weighted combination.
    BadWeights,
    Grid(GridError),
}

impl fmt::Display for FitnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitnessError::TooFewLevels => write!(f, "need at least two levels"),
            FitnessError::TilesNotDistinct => write!(f, "tile indices must be distinct"),
            FitnessError::SizeError => write!(f, "target size too small"),
            FitnessError::BadWeights => write!(f, "need at least one positive weight"),
            FitnessError::Grid(e) => write!(f, "{e}"),
        }
    }
}

impl From<GridError> for FitnessError {
    fn from(e: GridError) -> Self {
        FitnessError::Grid(e)
    }
}

/// Base-2 Jensen-Shannon divergence between two distributions of equal
/// support size. Bounded by 1. Zero-probability terms contribute nothing.
pub fn jsd2(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let kl_to_mid = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| {
                if x <= 0.0 {
                    0.0
                } else {
                    let m = 0.5 * (x + y);
                    x * libm::log2(x / m)
                }
            })
            .sum()
    };
    0.5 * (kl_to_mid(p, q) + kl_to_mid(q, p))
}

/// Distribution-matching fitness: 1 - sqrt(JSD2) against the target, so a
/// perfect match scores 1 and disjoint support scores 0.
pub fn probability_fitness(grid: &Grid, target: &TileDistribution) -> Result<f64, FitnessError> {
    let dist = grid.tile_distribution()?;
    let d = jsd2(dist.probs(), target.probs());
    Ok((1.0 - libm::sqrt(d.clamp(0.0, 1.0))).clamp(0.0, 1.0))
}

/// Full working of the reachability score a*b.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachabilityBreakdown {
    /// Houses with between 1 and 3 (inclusive) axis-adjacent road tiles.
    pub houses: usize,
    pub a: f64,
    pub c_road: u32,
    pub c_house_road: u32,
    pub d_road: f64,
    pub d_house_road: f64,
    pub b: f64,
    pub fitness: f64,
}

fn region_penalty(c: u32) -> f64 {
    (1.0 - c as f64).abs().min(10.0)
}

/// Reachability fitness: a = min(H/20, 1) over qualifying houses,
/// b = 1 / ((d_house_road + 1)(d_road + 1)) with d_i = min(|1 - c_i|, 10)
/// over disconnected region counts. Any tile that is neither house nor road
/// acts as a separator.
pub fn reachability_fitness(
    grid: &Grid,
    house: Tile,
    road: Tile,
    garden: Tile,
) -> Result<ReachabilityBreakdown, FitnessError> {
    if house == road || house == garden || road == garden {
        return Err(FitnessError::TilesNotDistinct);
    }
    let mut houses = 0usize;
    for idx in 0..grid.len() {
        let pos = grid.position(idx);
        if grid.get(&pos) == house {
            let n = grid.count_axis_neighbors(&pos, &[road])?;
            if (1..=3).contains(&n) {
                houses += 1;
            }
        }
    }
    let a = (houses as f64 / 20.0).min(1.0);
    let (_, c_road) = grid.label_regions(&[road]);
    let (_, c_house_road) = grid.label_regions(&[house, road]);
    let d_road = region_penalty(c_road);
    let d_house_road = region_penalty(c_house_road);
    let b = 1.0 / ((d_house_road + 1.0) * (d_road + 1.0));
    Ok(ReachabilityBreakdown {
        houses,
        a,
        c_road,
        c_house_road,
        d_road,
        d_house_road,
        b,
        fitness: a * b,
    })
}

/// Equal-distribution fitness over three tile classes:
/// (1/3) * sum_i max(1 - 10 (n_i - 1/3)^2, 0).
pub fn equal_distribution_fitness(
    grid: &Grid,
    classes: [Tile; 3],
) -> Result<f64, FitnessError> {
    if classes[0] == classes[1] || classes[0] == classes[2] || classes[1] == classes[2] {
        return Err(FitnessError::TilesNotDistinct);
    }
    let dist = grid.tile_distribution()?;
    let score: f64 = classes
        .iter()
        .map(|&t| {
            let n = dist.probs().get(t as usize).copied().unwrap_or(0.0);
            (1.0 - 10.0 * (n - 1.0 / 3.0) * (n - 1.0 / 3.0)).max(0.0)
        })
        .sum();
    Ok(score / 3.0)
}

/// Overlap with a fixed desired level.
pub fn target_overlap_fitness(grid: &Grid, target: &Grid) -> Result<f64, FitnessError> {
    Ok(grid.overlap(target)?)
}

/// Ideal house: top layer roof, remaining boundary wall, interior air.
pub fn hollow_cube_target(
    size: &[usize],
    wall: Tile,
    air: Tile,
    roof: Tile,
    n_tiles: u16,
) -> Result<Grid, FitnessError> {
    if size.iter().any(|&s| s < 2) {
        return Err(FitnessError::SizeError);
    }
    let mut grid = Grid::filled(size, air, n_tiles)?;
    let top_axis = size.len() - 1;
    for idx in 0..grid.len() {
        let pos = grid.position(idx);
        let tile = if pos[top_axis] == size[top_axis] - 1 {
            roof
        } else if pos.iter().zip(size).any(|(&p, &s)| p == 0 || p == s - 1) {
            wall
        } else {
            air
        };
        grid.set(&pos, tile);
    }
    Ok(grid)
}

/// Garden fitness: mean of four binary subscores — at least one tree and one
/// flower; water fraction in (0, 0.05); grass fraction in [0.2, 0.7]; every
/// pair of trees at Chebyshev distance >= 2.
pub fn garden_fitness(
    grid: &Grid,
    tree: Tile,
    flower: Tile,
    water: Tile,
    grass: Tile,
) -> Result<f64, FitnessError> {
    let tiles = [tree, flower, water, grass];
    for (i, t) in tiles.iter().enumerate() {
        if tiles[..i].contains(t) {
            return Err(FitnessError::TilesNotDistinct);
        }
    }
    let dist = grid.tile_distribution()?;
    let frac = |t: Tile| dist.probs().get(t as usize).copied().unwrap_or(0.0);

    let trees: Vec<Vec<usize>> = (0..grid.len())
        .map(|i| grid.position(i))
        .filter(|p| grid.get(p) == tree)
        .collect();
    let has_flora = !trees.is_empty() && frac(flower) > 0.0;
    let water_ok = frac(water) > 0.0 && frac(water) < 0.05;
    let grass_ok = (0.2..=0.7).contains(&frac(grass));
    let spaced = trees.iter().enumerate().all(|(i, a)| {
        trees[..i].iter().all(|b| {
            a.iter().zip(b).map(|(&x, &y)| x.abs_diff(y)).max().unwrap_or(0) >= 2
        })
    });
    let score = [has_flora, water_ok, grass_ok, spaced]
        .iter()
        .filter(|&&ok| ok)
        .count() as f64;
    Ok(score / 4.0)
}

/// Ideal town boundary layout: outermost ring houses, second ring roads,
/// garden interior. 2D only, both extents at least 5.
pub fn boundary_layout_target(
    size: &[usize],
    house: Tile,
    road: Tile,
    garden: Tile,
    n_tiles: u16,
) -> Result<Grid, FitnessError> {
    if size.len() != 2 || size.iter().any(|&s| s < 5) {
        return Err(FitnessError::SizeError);
    }
    let mut grid = Grid::filled(size, garden, n_tiles)?;
    for idx in 0..grid.len() {
        let pos = grid.position(idx);
        let ring = pos
            .iter()
            .zip(size)
            .map(|(&p, &s)| p.min(s - 1 - p))
            .min()
            .unwrap();
        let tile = match ring {
            0 => house,
            1 => road,
            _ => garden,
        };
        grid.set(&pos, tile);
    }
    Ok(grid)
}

/// Mean pairwise Hamming distance among the levels one generator produced.
pub fn intra_novelty(levels: &[Grid]) -> Result<f64, FitnessError> {
    if levels.len() < 2 {
        return Err(FitnessError::TooFewLevels);
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (i, a) in levels.iter().enumerate() {
        for b in &levels[..i] {
            total += a.hamming(b)?;
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

/// Novelty search configuration; the archive itself is owned by the caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoveltyConfig {
    /// Nearest neighbors averaged into the score (clamped to availability).
    pub k: usize,
    /// Most-novel individuals archived per generation.
    pub archive_adds_per_generation: usize,
}

impl Default for NoveltyConfig {
    fn default() -> Self {
        NoveltyConfig { k: 10, archive_adds_per_generation: 1 }
    }
}

fn level_set_distance(a: &[Grid], b: &[Grid]) -> Result<f64, FitnessError> {
    let n = a.len().min(b.len());
    if n == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for j in 0..n {
        total += a[j].hamming(&b[j])?;
    }
    Ok(total / n as f64)
}

/// Population-wide novelty: each individual's score is the mean distance
/// (aligned-pair mean Hamming) to its k nearest neighbors among the rest of
/// the population and the archive. Afterwards the configured number of
/// most-novel individuals' level sets are appended to the archive.
pub fn novelty_scores(
    population_levels: &[Vec<Grid>],
    config: &NoveltyConfig,
    archive: &mut Vec<Vec<Grid>>,
) -> Result<Vec<f64>, FitnessError> {
    let mut scores = Vec::with_capacity(population_levels.len());
    for (i, mine) in population_levels.iter().enumerate() {
        let mut distances = Vec::new();
        for (j, other) in population_levels.iter().enumerate() {
            if i != j {
                distances.push(level_set_distance(mine, other)?);
            }
        }
        for other in archive.iter() {
            distances.push(level_set_distance(mine, other)?);
        }
        distances.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let k = config.k.max(1).min(distances.len());
        let score = if k == 0 {
            0.0
        } else {
            distances[..k].iter().sum::<f64>() / k as f64
        };
        scores.push(score);
    }
    // Archive the most novel individuals, highest score first, index as
    // tie-break for determinism.
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    for &i in order.iter().take(config.archive_adds_per_generation) {
        archive.push(population_levels[i].clone());
    }
    Ok(scores)
}

/// One objective (non-novelty) fitness component.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    Probability { target: TileDistribution },
    Reachability { house: Tile, road: Tile, garden: Tile },
    EqualDistribution { classes: [Tile; 3] },
    TargetOverlap { target: Grid },
    House { wall: Tile, air: Tile, roof: Tile },
    Garden { tree: Tile, flower: Tile, water: Tile, grass: Tile },
    BoundaryLayout { house: Tile, road: Tile, garden: Tile },
    /// Score the level after collapsing each k-window (mixed windows fall
    /// back to `default`).
    Downsample { k: usize, default: Tile, inner: alloc::boxed::Box<Objective> },
}

impl Objective {
    /// Score one level.
    pub fn score(&self, level: &Grid) -> Result<f64, FitnessError> {
        match self {
            Objective::Probability { target } => probability_fitness(level, target),
            Objective::Reachability { house, road, garden } => {
                Ok(reachability_fitness(level, *house, *road, *garden)?.fitness)
            }
            Objective::EqualDistribution { classes } => {
                equal_distribution_fitness(level, *classes)
            }
            Objective::TargetOverlap { target } => target_overlap_fitness(level, target),
            Objective::House { wall, air, roof } => {
                let target =
                    hollow_cube_target(level.dims(), *wall, *air, *roof, level.n_tiles())?;
                target_overlap_fitness(level, &target)
            }
            Objective::Garden { tree, flower, water, grass } => {
                garden_fitness(level, *tree, *flower, *water, *grass)
            }
            Objective::BoundaryLayout { house, road, garden } => {
                let target = boundary_layout_target(
                    level.dims(),
                    *house,
                    *road,
                    *garden,
                    level.n_tiles(),
                )?;
                target_overlap_fitness(level, &target)
            }
            Objective::Downsample { k, default, inner } => {
                inner.score(&level.downsample_windows(*k, *default)?)
            }
        }
    }

    /// Mean score over an individual's generated levels.
    pub fn score_levels(&self, levels: &[Grid]) -> Result<f64, FitnessError> {
        if levels.is_empty() {
            return Err(FitnessError::TooFewLevels);
        }
        let mut total = 0.0;
        for l in levels {
            total += self.score(l)?;
        }
        Ok(total / levels.len() as f64)
    }
}

/// A fitness component in a weighted combination.
#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    Objective(Objective),
    Novelty,
    IntraNovelty,
}

/// Weighted combination of fitness components.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedFitness {
    pub components: Vec<(Component, f64)>,
}

impl WeightedFitness {
    pub fn validate(&self) -> Result<(), FitnessError> {
        if self.components.iter().all(|(_, w)| *w <= 0.0)
            || self.components.iter().any(|(_, w)| *w < 0.0)
        {
            return Err(FitnessError::BadWeights);
        }
        Ok(())
    }

    pub fn uses_novelty(&self) -> bool {
        self.components
            .iter()
            .any(|(c, w)| matches!(c, Component::Novelty) && *w > 0.0)
    }

    /// Weighted mean of the components. Objective components average their
    /// per-level scores; the population-wide novelty score is supplied by the
    /// caller. Intra-generator novelty of a single level is taken as 0.
    pub fn combine(&self, levels: &[Grid], novelty: f64) -> Result<f64, FitnessError> {
        self.validate()?;
        let mut total = 0.0;
        let mut weight_sum = 0.0;
        for (component, weight) in &self.components {
            let value = match component {
                Component::Objective(o) => o.score_levels(levels)?,
                Component::Novelty => novelty,
                Component::IntraNovelty => {
                    if levels.len() < 2 {
                        0.0
                    } else {
                        intra_novelty(levels)?
                    }
                }
            };
            total += weight * value;
            weight_sum += weight;
        }
        Ok(total / weight_sum)
    }
}
