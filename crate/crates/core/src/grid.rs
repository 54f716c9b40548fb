//! Dense 2D/3D tilemaps and the morphology-style operations built on them.
//!
//! Grids store tile indices; names, colors and voxel identifiers live in the
//! [`Tileset`]. Row-major order throughout: x fastest, then y, then z.
//! Connectivity is strictly axis-aligned (4-neighborhood in 2D,
//! 6-neighborhood in 3D), never diagonal.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

/// Index into a [`Tileset`].
pub type Tile = u16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GridError {
    /// An extent was zero or the dimension count was not 2 or 3.
    BadDims,
    /// A tile index was outside the tileset.
    TileOutOfRange { tile: Tile, n_tiles: u16 },
    /// Operation requires a non-empty grid.
    Empty,
    /// Position outside the grid.
    OutOfBounds,
    /// The two grids have different dims or tile counts.
    ShapeMismatch,
    /// A dimension is not divisible by the window size.
    NotDivisible,
    /// Tileset construction was inconsistent.
    BadTileset,
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::BadDims => write!(f, "dims must be 2 or 3 positive extents"),
            GridError::TileOutOfRange { tile, n_tiles } => {
                write!(f, "tile {tile} out of range for tileset of size {n_tiles}")
            }
            GridError::Empty => write!(f, "grid is empty"),
            GridError::OutOfBounds => write!(f, "position out of bounds"),
            GridError::ShapeMismatch => write!(f, "grid shapes do not match"),
            GridError::NotDivisible => write!(f, "dims not divisible by window size"),
            GridError::BadTileset => write!(f, "inconsistent tileset definition"),
        }
    }
}

/// Ordered set of named tiles with render colors and voxel export names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tileset {
    names: Vec<String>,
    colors: Vec<[u8; 3]>,
    voxel_names: Vec<String>,
}

impl Tileset {
    pub fn new(
        names: Vec<String>,
        colors: Vec<[u8; 3]>,
        voxel_names: Vec<String>,
    ) -> Result<Self, GridError> {
        if names.is_empty() || names.len() != colors.len() || names.len() != voxel_names.len() {
            return Err(GridError::BadTileset);
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(GridError::BadTileset);
            }
        }
        Ok(Tileset { names, colors, voxel_names })
    }

    /// Build a tileset from names alone, assigning colors from a small fixed
    /// palette (hashed fallback for unknown names) and reusing the names as
    /// voxel identifiers.
    pub fn from_names<S: Into<String>>(names: Vec<S>) -> Result<Self, GridError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let colors = names.iter().map(|n| default_color(n)).collect();
        let voxel_names = names.clone();
        Tileset::new(names, colors, voxel_names)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn colors(&self) -> &[[u8; 3]] {
        &self.colors
    }

    pub fn voxel_names(&self) -> &[String] {
        &self.voxel_names
    }

    pub fn index_of(&self, name: &str) -> Option<Tile> {
        self.names.iter().position(|n| n == name).map(|i| i as Tile)
    }
}

fn default_color(name: &str) -> [u8; 3] {
    match name {
        "house" => [178, 34, 34],
        "road" => [105, 105, 105],
        "garden" | "grass" => [34, 139, 34],
        "wall" => [139, 115, 85],
        "air" | "empty" => [235, 235, 235],
        "roof" => [128, 0, 0],
        "tree" => [0, 100, 0],
        "flower" => [255, 105, 180],
        "water" => [30, 144, 255],
        "town" => [218, 165, 32],
        "park" => [60, 179, 113],
        "highway" => [47, 79, 79],
        _ => {
            let h = crate::rng::mix(&[name.len() as u64, name.bytes().map(u64::from).sum()]);
            [(h >> 16) as u8 | 0x40, (h >> 8) as u8 | 0x40, h as u8 | 0x40]
        }
    }
}

/// Per-tile fractions of a grid, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TileDistribution {
    probs: Vec<f64>,
}

impl TileDistribution {
    /// Build from explicit fractions. The fractions must be in [0,1] and sum
    /// to 1 within 1e-9.
    pub fn new(probs: Vec<f64>) -> Result<Self, GridError> {
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|&p| !(0.0..=1.0 + 1e-9).contains(&p)) || (sum - 1.0).abs() > 1e-9 {
            return Err(GridError::BadTileset);
        }
        Ok(TileDistribution { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Homogeneous axis-aligned block produced by [`Grid::coalesce`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoalescedRect {
    pub origin: Vec<usize>,
    pub extent: Vec<usize>,
    pub tile: Tile,
}

/// Dense 2D or 3D tilemap. Row-major: x fastest, then y, then z.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    dims: Vec<usize>,
    n_tiles: u16,
    data: Vec<Tile>,
}

impl Grid {
    /// Constant-filled grid.
    pub fn filled(dims: &[usize], fill: Tile, n_tiles: u16) -> Result<Self, GridError> {
        if !(dims.len() == 2 || dims.len() == 3) || dims.iter().any(|&d| d == 0) {
            return Err(GridError::BadDims);
        }
        if fill >= n_tiles {
            return Err(GridError::TileOutOfRange { tile: fill, n_tiles });
        }
        let len = dims.iter().product();
        Ok(Grid { dims: dims.to_vec(), n_tiles, data: vec![fill; len] })
    }

    /// Grid from raw row-major data.
    pub fn from_data(dims: &[usize], data: Vec<Tile>, n_tiles: u16) -> Result<Self, GridError> {
        if !(dims.len() == 2 || dims.len() == 3) || dims.iter().any(|&d| d == 0) {
            return Err(GridError::BadDims);
        }
        if data.len() != dims.iter().product::<usize>() {
            return Err(GridError::ShapeMismatch);
        }
        if let Some(&t) = data.iter().find(|&&t| t >= n_tiles) {
            return Err(GridError::TileOutOfRange { tile: t, n_tiles });
        }
        Ok(Grid { dims: dims.to_vec(), n_tiles, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn n_tiles(&self) -> u16 {
        self.n_tiles
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Tile] {
        &self.data
    }

    #[inline]
    pub fn index(&self, pos: &[usize]) -> usize {
        let mut idx = 0;
        for axis in (0..self.dims.len()).rev() {
            idx = idx * self.dims[axis] + pos[axis];
        }
        idx
    }

    /// Decode a flat index into coordinates (x fastest).
    pub fn position(&self, mut idx: usize) -> Vec<usize> {
        let mut pos = Vec::with_capacity(self.dims.len());
        for &d in &self.dims {
            pos.push(idx % d);
            idx /= d;
        }
        pos
    }

    pub fn in_bounds(&self, pos: &[usize]) -> bool {
        pos.len() == self.dims.len() && pos.iter().zip(&self.dims).all(|(&p, &d)| p < d)
    }

    #[inline]
    pub fn get(&self, pos: &[usize]) -> Tile {
        self.data[self.index(pos)]
    }

    #[inline]
    pub fn set(&mut self, pos: &[usize], tile: Tile) {
        let idx = self.index(pos);
        self.data[idx] = tile;
    }

    /// Fraction of each tile type in the grid.
    pub fn tile_distribution(&self) -> Result<TileDistribution, GridError> {
        if self.data.is_empty() {
            return Err(GridError::Empty);
        }
        let mut counts = vec![0usize; self.n_tiles as usize];
        for &t in &self.data {
            counts[t as usize] += 1;
        }
        let total = self.data.len() as f64;
        Ok(TileDistribution { probs: counts.into_iter().map(|c| c as f64 / total).collect() })
    }

    fn axis_neighbors_of(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let pos = self.position(idx);
        (0..self.dims.len()).flat_map(move |axis| {
            let mut out = Vec::with_capacity(2);
            if pos[axis] > 0 {
                let mut p = pos.clone();
                p[axis] -= 1;
                out.push(self.index(&p));
            }
            if pos[axis] + 1 < self.dims[axis] {
                let mut p = pos.clone();
                p[axis] += 1;
                out.push(self.index(&p));
            }
            out
        })
    }

    /// Connected-component labeling over the cells whose tile is in
    /// `tile_class`. Labels are 1-based; 0 means "not in class". Returns the
    /// labels (aligned with `data`) and the component count.
    pub fn label_regions(&self, tile_class: &[Tile]) -> (Vec<u32>, u32) {
        let in_class = |t: Tile| tile_class.contains(&t);
        let mut labels = vec![0u32; self.data.len()];
        let mut count = 0u32;
        let mut queue = VecDeque::new();
        for start in 0..self.data.len() {
            if labels[start] != 0 || !in_class(self.data[start]) {
                continue;
            }
            count += 1;
            labels[start] = count;
            queue.push_back(start);
            while let Some(idx) = queue.pop_front() {
                for n in self.axis_neighbors_of(idx) {
                    if labels[n] == 0 && in_class(self.data[n]) {
                        labels[n] = count;
                        queue.push_back(n);
                    }
                }
            }
        }
        (labels, count)
    }

    /// Number of in-bounds axis-adjacent cells whose tile is in `tile_class`.
    pub fn count_axis_neighbors(
        &self,
        pos: &[usize],
        tile_class: &[Tile],
    ) -> Result<usize, GridError> {
        if !self.in_bounds(pos) {
            return Err(GridError::OutOfBounds);
        }
        let idx = self.index(pos);
        Ok(self
            .axis_neighbors_of(idx)
            .filter(|&n| tile_class.contains(&self.data[n]))
            .count())
    }

    /// Greedy rectangle coalescing: visit cells in row-major order; for each
    /// unconsumed cell grow the extent along axis 0 while homogeneous and
    /// unconsumed, then axis 1, then axis 2. The returned rectangles are
    /// pairwise disjoint, homogeneous, and cover the grid exactly.
    pub fn coalesce(&self) -> Vec<CoalescedRect> {
        let ndim = self.dims.len();
        let mut consumed = vec![false; self.data.len()];
        let mut rects = Vec::new();
        for start in 0..self.data.len() {
            if consumed[start] {
                continue;
            }
            let tile = self.data[start];
            let origin = self.position(start);
            let mut extent = vec![1usize; ndim];
            for axis in 0..ndim {
                'grow: while origin[axis] + extent[axis] < self.dims[axis] {
                    // Check the candidate slab at origin[axis] + extent[axis].
                    let mut slab_extent = extent.clone();
                    slab_extent[axis] = 1;
                    let mut slab_origin = origin.clone();
                    slab_origin[axis] += extent[axis];
                    for offset in RectIter::new(&slab_extent) {
                        let pos: Vec<usize> =
                            slab_origin.iter().zip(&offset).map(|(o, d)| o + d).collect();
                        let idx = self.index(&pos);
                        if consumed[idx] || self.data[idx] != tile {
                            break 'grow;
                        }
                    }
                    extent[axis] += 1;
                }
            }
            for offset in RectIter::new(&extent) {
                let pos: Vec<usize> = origin.iter().zip(&offset).map(|(o, d)| o + d).collect();
                consumed[self.index(&pos)] = true;
            }
            rects.push(CoalescedRect { origin, extent, tile });
        }
        rects
    }

    /// Fraction of positions where the grids differ.
    pub fn hamming(&self, other: &Grid) -> Result<f64, GridError> {
        if self.dims != other.dims || self.n_tiles != other.n_tiles {
            return Err(GridError::ShapeMismatch);
        }
        let diff = self.data.iter().zip(&other.data).filter(|(a, b)| a != b).count();
        Ok(diff as f64 / self.data.len() as f64)
    }

    /// Fraction of positions where the grids agree: `1 - hamming`.
    pub fn overlap(&self, other: &Grid) -> Result<f64, GridError> {
        Ok(1.0 - self.hamming(other)?)
    }

    /// Collapse each non-overlapping k-window to a single tile: the common
    /// tile if the window is uniform, `default` otherwise.
    pub fn downsample_windows(&self, k: usize, default: Tile) -> Result<Grid, GridError> {
        if k == 0 {
            return Err(GridError::BadDims);
        }
        if self.dims.iter().any(|&d| d % k != 0) {
            return Err(GridError::NotDivisible);
        }
        if default >= self.n_tiles {
            return Err(GridError::TileOutOfRange { tile: default, n_tiles: self.n_tiles });
        }
        let out_dims: Vec<usize> = self.dims.iter().map(|&d| d / k).collect();
        let mut out = Grid::filled(&out_dims, default, self.n_tiles)?;
        let window = vec![k; self.dims.len()];
        for out_idx in 0..out.data.len() {
            let out_pos = out.position(out_idx);
            let base: Vec<usize> = out_pos.iter().map(|&p| p * k).collect();
            let mut common = None;
            let mut uniform = true;
            for offset in RectIter::new(&window) {
                let pos: Vec<usize> = base.iter().zip(&offset).map(|(b, d)| b + d).collect();
                let t = self.get(&pos);
                match common {
                    None => common = Some(t),
                    Some(c) if c != t => {
                        uniform = false;
                        break;
                    }
                    _ => {}
                }
            }
            if uniform {
                out.data[out_idx] = common.unwrap();
            }
        }
        Ok(out)
    }
}

/// Iterates all offsets within an extent box in row-major order (x fastest).
pub struct RectIter {
    extent: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl RectIter {
    pub fn new(extent: &[usize]) -> Self {
        let next = if extent.iter().any(|&e| e == 0) {
            None
        } else {
            Some(vec![0; extent.len()])
        };
        RectIter { extent: extent.to_vec(), next }
    }
}

impl Iterator for RectIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.clone()?;
        let mut n = current.clone();
        let mut axis = 0;
        loop {
            if axis == n.len() {
                self.next = None;
                break;
            }
            n[axis] += 1;
            if n[axis] < self.extent[axis] {
                self.next = Some(n);
                break;
            }
            n[axis] = 0;
            axis += 1;
        }
        Some(current)
    }
}
