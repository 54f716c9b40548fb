//! Level export: plain-text PPM images for 2D grids, voxel listings for 2D
//! and 3D grids.

use anyhow::{Result, bail};
use levelgen_core::grid::{Grid, Tileset};
use std::fmt::Write as _;

/// Render a 2D grid as a plain (P3) PPM, one pixel per tile.
pub fn to_ppm(grid: &Grid, tileset: &Tileset) -> Result<String> {
    if grid.ndim() != 2 {
        bail!("ppm export needs a 2D level");
    }
    if grid.n_tiles() as usize != tileset.len() {
        bail!("tileset size does not match the level");
    }
    let (w, h) = (grid.dims()[0], grid.dims()[1]);
    let mut out = format!("P3\n{w} {h}\n255\n");
    for y in 0..h {
        for x in 0..w {
            let [r, g, b] = tileset.colors()[grid.get(&[x, y]) as usize];
            let sep = if x + 1 == w { "\n" } else { " " };
            write!(out, "{r} {g} {b}{sep}").unwrap();
        }
    }
    Ok(out)
}

/// One `x y z voxel_name` line per cell, row-major (x fastest). 2D grids are
/// exported at z = 0.
pub fn to_voxels(grid: &Grid, tileset: &Tileset) -> Result<String> {
    if grid.n_tiles() as usize != tileset.len() {
        bail!("tileset size does not match the level");
    }
    let mut out = String::new();
    for idx in 0..grid.len() {
        let pos = grid.position(idx);
        let z = pos.get(2).copied().unwrap_or(0);
        let name = &tileset.voxel_names()[grid.get(&pos) as usize];
        writeln!(out, "{} {} {} {}", pos[0], pos[1], z, name).unwrap();
    }
    Ok(out)
}
