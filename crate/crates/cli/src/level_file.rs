//! On-disk level format: `{"dims": [...], "tileset": {...}, "tiles": [...]}`.

use std::path::Path;

use anyhow::{Context, Result, bail};
use levelgen_core::grid::{Grid, Tile, Tileset};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelFile {
    pub dims: Vec<usize>,
    pub tileset: Tileset,
    pub tiles: Vec<Tile>,
}

pub fn to_file(grid: &Grid, tileset: &Tileset) -> Result<LevelFile> {
    if grid.n_tiles() as usize != tileset.len() {
        bail!(
            "grid expects {} tile types but the tileset has {}",
            grid.n_tiles(),
            tileset.len()
        );
    }
    Ok(LevelFile {
        dims: grid.dims().to_vec(),
        tileset: tileset.clone(),
        tiles: grid.data().to_vec(),
    })
}

pub fn from_file(file: &LevelFile) -> Result<(Grid, Tileset)> {
    let grid = Grid::from_data(&file.dims, file.tiles.clone(), file.tileset.len() as u16)
        .map_err(|e| anyhow::anyhow!("invalid level data: {e}"))?;
    Ok((grid, file.tileset.clone()))
}

pub fn save(path: &Path, grid: &Grid, tileset: &Tileset) -> Result<()> {
    let file = to_file(grid, tileset)?;
    let json = serde_json::to_string_pretty(&file)?;
    std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(Grid, Tileset)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let file: LevelFile =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    from_file(&file)
}
