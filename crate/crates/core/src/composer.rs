//! Recursive composition of generators over a tree.
//!
//! A node generates an abstract map at `size / subtile_size`, coalesces
//! connected same-tile cells into rectangles, and recursively fills each
//! rectangle with the child generator the tile maps to. Leaves (no mapping)
//! generate directly at the requested size.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::generator::{GenError, GeneratorSpec};
use crate::grid::{CoalescedRect, Grid, GridError, Tile, Tileset};
use crate::rng;

const ABSTRACT_TAG: u64 = 0x41;
const PLACE_TAG: u64 = 0x42;

#[derive(Debug, Clone, PartialEq)]
pub enum ComposeError {
    /// Size not positive, wrong dimensionality, or not divisible by the
    /// subtile size.
    SizeError,
    /// The abstract map emitted a tile with no mapping entry.
    MappingError { tile: Tile },
    /// Operation needs a mapping node (or an unsupported tree shape).
    StructureError(&'static str),
    /// Children at one level scale differently.
    HeterogeneousChildren,
    Gen(GenError),
    Grid(GridError),
}

impl fmt::Display for ComposeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComposeError::SizeError => write!(f, "size not divisible by subtile size"),
            ComposeError::MappingError { tile } => {
                write!(f, "abstract tile {tile} has no mapping entry")
            }
            ComposeError::StructureError(msg) => write!(f, "unsupported tree structure: {msg}"),
            ComposeError::HeterogeneousChildren => {
                write!(f, "children of one node scale to different sizes")
            }
            ComposeError::Gen(e) => write!(f, "{e}"),
            ComposeError::Grid(e) => write!(f, "{e}"),
        }
    }
}

impl From<GenError> for ComposeError {
    fn from(e: GenError) -> Self {
        ComposeError::Gen(e)
    }
}

impl From<GridError> for ComposeError {
    fn from(e: GridError) -> Self {
        ComposeError::Grid(e)
    }
}

/// What produces a node's (possibly abstract) map.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorKind {
    /// A trained network generator.
    Network(GeneratorSpec),
    /// Constant fill; handy for stubs and experiment scaffolding.
    Uniform { tileset: Tileset, tile: Tile },
    /// A fixed map; the requested size must match its dims exactly.
    Fixed { tileset: Tileset, grid: Grid },
}

impl GeneratorKind {
    pub fn tileset(&self) -> &Tileset {
        match self {
            GeneratorKind::Network(spec) => &spec.tileset,
            GeneratorKind::Uniform { tileset, .. } => tileset,
            GeneratorKind::Fixed { tileset, .. } => tileset,
        }
    }

    fn generate(&self, size: &[usize], seed: u64) -> Result<Grid, ComposeError> {
        match self {
            GeneratorKind::Network(spec) => Ok(spec.generate(size, seed)?),
            GeneratorKind::Uniform { tileset, tile } => {
                Ok(Grid::filled(size, *tile, tileset.len() as u16)?)
            }
            GeneratorKind::Fixed { grid, .. } => {
                if grid.dims() != size {
                    return Err(ComposeError::SizeError);
                }
                Ok(grid.clone())
            }
        }
    }
}

/// One node of a composition tree.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositionNode {
    pub generator: GeneratorKind,
    /// Per-axis expansion factor of each abstract tile. Ignored on leaves.
    pub subtile_size: Vec<usize>,
    /// Tile index -> child node; absent marks a leaf.
    pub mapping: Option<BTreeMap<Tile, CompositionNode>>,
    /// When the abstract map is 2D but the children are 3D, every child is
    /// generated at this fixed height. Only honored at the tree root; the
    /// mapped children must be leaves.
    pub child_height: Option<usize>,
    /// Merge connected same-tile cells before recursing.
    pub coalesce: bool,
}

impl CompositionNode {
    pub fn leaf(generator: GeneratorKind) -> Self {
        CompositionNode {
            generator,
            subtile_size: Vec::new(),
            mapping: None,
            child_height: None,
            coalesce: true,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.mapping.is_none()
    }
}

/// A fully absolute leaf placement in the composed output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub origin: Vec<usize>,
    pub size: Vec<usize>,
}

/// Result of [`compose`]: the level, the union tileset its indices refer to,
/// and the leaf placements (which tile the grid exactly).
#[derive(Debug, Clone, PartialEq)]
pub struct Composed {
    pub grid: Grid,
    pub tileset: Tileset,
    pub placements: Vec<Placement>,
}

/// Union of all leaf tilesets, first-seen order, deduplicated by name.
fn union_tileset(node: &CompositionNode, into: &mut Vec<(String, [u8; 3], String)>) {
    match &node.mapping {
        None => {
            let ts = node.generator.tileset();
            for i in 0..ts.len() {
                let name = &ts.names()[i];
                if !into.iter().any(|(n, _, _)| n == name) {
                    into.push((name.clone(), ts.colors()[i], ts.voxel_names()[i].clone()));
                }
            }
        }
        Some(map) => {
            for child in map.values() {
                union_tileset(child, into);
            }
        }
    }
}

fn unit_rects(abstract_map: &Grid) -> Vec<CoalescedRect> {
    (0..abstract_map.len())
        .map(|idx| {
            let origin = abstract_map.position(idx);
            CoalescedRect {
                tile: abstract_map.get(&origin),
                extent: alloc::vec![1; origin.len()],
                origin,
            }
        })
        .collect()
}

fn compose_into(
    node: &CompositionNode,
    size: &[usize],
    seed: u64,
    union: &Tileset,
    offset: &[usize],
    allow_lift: bool,
    out: &mut Grid,
    placements: &mut Vec<Placement>,
) -> Result<(), ComposeError> {
    if size.iter().any(|&s| s == 0) {
        return Err(ComposeError::SizeError);
    }
    let Some(mapping) = &node.mapping else {
        // Leaf: generate directly and remap into the union tileset.
        let local = node.generator.generate(size, seed)?;
        let ts = node.generator.tileset();
        let remap: Vec<Tile> = ts
            .names()
            .iter()
            .map(|n| union.index_of(n).expect("union covers all leaf tiles"))
            .collect();
        for idx in 0..local.len() {
            let pos = local.position(idx);
            let abs: Vec<usize> = pos.iter().zip(offset).map(|(p, o)| p + o).collect();
            out.set(&abs, remap[local.get(&pos) as usize]);
        }
        placements.push(Placement { origin: offset.to_vec(), size: size.to_vec() });
        return Ok(());
    };

    let lift = node.child_height.filter(|_| allow_lift);
    if node.child_height.is_some() && !allow_lift {
        return Err(ComposeError::StructureError("child_height below the root"));
    }
    // With a height lift the abstract footprint is the output minus the
    // vertical axis.
    let footprint: &[usize] = if lift.is_some() { &size[..2] } else { size };
    let s = &node.subtile_size;
    if s.len() != footprint.len() || s.iter().any(|&x| x == 0) {
        return Err(ComposeError::SizeError);
    }
    if footprint.iter().zip(s).any(|(&f, &x)| f % x != 0) {
        return Err(ComposeError::SizeError);
    }
    let abstract_size: Vec<usize> = footprint.iter().zip(s).map(|(&f, &x)| f / x).collect();
    let abstract_map = node
        .generator
        .generate(&abstract_size, rng::mix(&[seed, ABSTRACT_TAG]))?;

    let rects = if node.coalesce { abstract_map.coalesce() } else { unit_rects(&abstract_map) };
    for (p, rect) in rects.iter().enumerate() {
        let child = mapping
            .get(&rect.tile)
            .ok_or(ComposeError::MappingError { tile: rect.tile })?;
        let mut child_size: Vec<usize> =
            rect.extent.iter().zip(s).map(|(&e, &x)| e * x).collect();
        let mut child_offset: Vec<usize> = rect
            .origin
            .iter()
            .zip(s)
            .map(|(&o, &x)| o * x)
            .zip(offset)
            .map(|(v, &o)| v + o)
            .collect();
        if let Some(h) = lift {
            if !child.is_leaf() {
                return Err(ComposeError::StructureError(
                    "child_height children must be leaves",
                ));
            }
            child_size.push(h);
            child_offset.push(0);
        }
        compose_into(
            child,
            &child_size,
            rng::mix(&[seed, PLACE_TAG, p as u64]),
            union,
            &child_offset,
            false,
            out,
            placements,
        )?;
    }
    Ok(())
}

/// Output dims for a request of `size`: identical, except a root with
/// `child_height` takes a 2D footprint and emits a 3D grid of that height.
pub fn output_dims(node: &CompositionNode, size: &[usize]) -> Result<Vec<usize>, ComposeError> {
    match node.child_height {
        Some(h) if !node.is_leaf() => {
            if size.len() != 2 || h == 0 {
                return Err(ComposeError::SizeError);
            }
            Ok(alloc::vec![size[0], size[1], h])
        }
        _ => Ok(size.to_vec()),
    }
}

/// Run the composition. Deterministic in (tree, size, seed).
pub fn compose(
    node: &CompositionNode,
    size: &[usize],
    seed: u64,
) -> Result<Composed, ComposeError> {
    let mut entries = Vec::new();
    union_tileset(node, &mut entries);
    let (names, rest): (Vec<String>, Vec<([u8; 3], String)>) =
        entries.into_iter().map(|(n, c, v)| (n, (c, v))).unzip();
    let (colors, voxel_names) = rest.into_iter().unzip();
    let union = Tileset::new(names, colors, voxel_names)?;

    let out_dims = output_dims(node, size)?;
    let mut grid = Grid::filled(&out_dims, 0, union.len() as u16)?;
    let mut placements = Vec::new();
    let offset = alloc::vec![0; out_dims.len()];
    compose_into(node, size, seed, &union, &offset, true, &mut grid, &mut placements)?;
    Ok(Composed { grid, tileset: union, placements })
}

/// Copy of `node` with `mapping(tile)` replaced by `child`.
pub fn rebind(
    node: &CompositionNode,
    tile: Tile,
    child: CompositionNode,
) -> Result<CompositionNode, ComposeError> {
    let mut out = node.clone();
    let Some(mapping) = &mut out.mapping else {
        return Err(ComposeError::StructureError("cannot rebind a leaf"));
    };
    if tile as usize >= node.generator.tileset().len() {
        return Err(ComposeError::MappingError { tile });
    }
    mapping.insert(tile, child);
    Ok(out)
}

/// Final size when the root's abstract map has `abstract_size`: the abstract
/// extents times the per-level subtile products down the (uniform) tree.
pub fn total_size(
    node: &CompositionNode,
    abstract_size: &[usize],
) -> Result<Vec<usize>, ComposeError> {
    let Some(mapping) = &node.mapping else {
        return Ok(abstract_size.to_vec());
    };
    if node.subtile_size.len() != abstract_size.len() {
        return Err(ComposeError::SizeError);
    }
    let scaled: Vec<usize> = abstract_size
        .iter()
        .zip(&node.subtile_size)
        .map(|(&a, &s)| a * s)
        .collect();
    if let Some(h) = node.child_height {
        if mapping.values().any(|c| !c.is_leaf()) {
            return Err(ComposeError::StructureError(
                "child_height children must be leaves",
            ));
        }
        return Ok(alloc::vec![scaled[0], scaled[1], h]);
    }
    let mut result: Option<Vec<usize>> = None;
    for child in mapping.values() {
        let sub = total_size(child, &scaled)?;
        match &result {
            None => result = Some(sub),
            Some(r) if *r != sub => return Err(ComposeError::HeterogeneousChildren),
            _ => {}
        }
    }
    result.ok_or(ComposeError::StructureError("mapping has no children"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ts(names: &[&str]) -> Tileset {
        Tileset::from_names(names.to_vec()).unwrap()
    }

    fn uniform_leaf(names: &[&str], tile: Tile) -> CompositionNode {
        CompositionNode::leaf(GeneratorKind::Uniform { tileset: ts(names), tile })
    }

    fn fixed_node(
        names: &[&str],
        grid: Grid,
        subtile: Vec<usize>,
        mapping: BTreeMap<Tile, CompositionNode>,
    ) -> CompositionNode {
        CompositionNode {
            generator: GeneratorKind::Fixed { tileset: ts(names), grid },
            subtile_size: subtile,
            mapping: Some(mapping),
            child_height: None,
            coalesce: true,
        }
    }

    /// Every cell covered by exactly one placement.
    fn assert_tiling(composed: &Composed) {
        let mut paint = alloc::vec![0u32; composed.grid.len()];
        for pl in &composed.placements {
            for offset in crate::grid::RectIter::new(&pl.size) {
                let pos: Vec<usize> =
                    pl.origin.iter().zip(&offset).map(|(o, d)| o + d).collect();
                paint[composed.grid.index(&pos)] += 1;
            }
        }
        assert!(paint.iter().all(|&c| c == 1));
    }

    #[test]
    fn leaf_composes_directly() {
        let node = uniform_leaf(&["a", "b"], 1);
        let out = compose(&node, &[7, 7], 3).unwrap();
        assert_eq!(out.grid.dims(), &[7, 7]);
        assert!(out.grid.data().iter().all(|&t| t == 1));
        assert_eq!(out.placements.len(), 1);
        assert_tiling(&out);
    }

    #[test]
    fn size_law_one_level() {
        // Abstract 10x10, subtiles 3x3 -> final 30x30.
        let mut mapping = BTreeMap::new();
        mapping.insert(0, uniform_leaf(&["x"], 0));
        let node = CompositionNode {
            generator: GeneratorKind::Uniform { tileset: ts(&["t"]), tile: 0 },
            subtile_size: alloc::vec![3, 3],
            mapping: Some(mapping),
            child_height: None,
            coalesce: true,
        };
        assert_eq!(total_size(&node, &[10, 10]).unwrap(), alloc::vec![30, 30]);
        let out = compose(&node, &[30, 30], 1).unwrap();
        assert_eq!(out.grid.dims(), &[30, 30]);
        assert_tiling(&out);
        assert_eq!(compose(&node, &[31, 30], 1), Err(ComposeError::SizeError));
    }

    #[test]
    fn coalescing_merges_adjacent_same_tiles() {
        // Abstract 2x1 of two house tiles, S = 5x5: one coalesced child of
        // size 10x5, not two 5x5 children.
        let abstract_map = Grid::from_data(&[2, 1], alloc::vec![0, 0], 2).unwrap();
        let mut mapping = BTreeMap::new();
        mapping.insert(0, uniform_leaf(&["h"], 0));
        mapping.insert(1, uniform_leaf(&["g"], 0));
        let node = fixed_node(
            &["house", "garden"],
            abstract_map,
            alloc::vec![5, 5],
            mapping,
        );
        let out = compose(&node, &[10, 5], 0).unwrap();
        assert_eq!(
            out.placements,
            alloc::vec![Placement { origin: alloc::vec![0, 0], size: alloc::vec![10, 5] }]
        );
        assert_tiling(&out);

        let mut no_coalesce = node.clone();
        no_coalesce.coalesce = false;
        let out = compose(&no_coalesce, &[10, 5], 0).unwrap();
        assert_eq!(out.placements.len(), 2);
        assert!(out.placements.iter().all(|p| p.size == alloc::vec![5, 5]));
        assert_tiling(&out);
    }

    #[test]
    fn missing_mapping_entry_errors() {
        let abstract_map = Grid::from_data(&[2, 1], alloc::vec![0, 1], 2).unwrap();
        let mut mapping = BTreeMap::new();
        mapping.insert(0, uniform_leaf(&["h"], 0));
        let node = fixed_node(&["a", "b"], abstract_map, alloc::vec![2, 2], mapping);
        assert_eq!(
            compose(&node, &[4, 2], 0),
            Err(ComposeError::MappingError { tile: 1 })
        );
    }

    #[test]
    fn union_tileset_remaps_leaf_tiles() {
        // Leaf A has tiles [a, b], leaf B has [b, c]; B's "c" must land on
        // union index 2.
        let abstract_map = Grid::from_data(&[2, 1], alloc::vec![0, 1], 2).unwrap();
        let mut mapping = BTreeMap::new();
        mapping.insert(0, uniform_leaf(&["a", "b"], 0));
        mapping.insert(1, uniform_leaf(&["b", "c"], 1));
        let node = fixed_node(&["l", "r"], abstract_map, alloc::vec![1, 1], mapping);
        let out = compose(&node, &[2, 1], 0).unwrap();
        assert_eq!(out.tileset.names(), &["a", "b", "c"]);
        assert_eq!(out.grid.data(), &[0, 2]);
    }

    #[test]
    fn rebind_replaces_child() {
        let abstract_map = Grid::from_data(&[2, 2], alloc::vec![0, 0, 0, 1], 2).unwrap();
        let mut mapping = BTreeMap::new();
        mapping.insert(0, uniform_leaf(&["h"], 0));
        mapping.insert(1, uniform_leaf(&["g"], 0));
        let town = fixed_node(&["house", "garden"], abstract_map, alloc::vec![2, 2], mapping);

        // Identity rebind leaves output bit-identical.
        let same = rebind(&town, 1, uniform_leaf(&["g"], 0)).unwrap();
        assert_eq!(compose(&town, &[4, 4], 5).unwrap(), compose(&same, &[4, 4], 5).unwrap());

        // Substitution shows up in the output.
        let swapped = rebind(&town, 1, uniform_leaf(&["w"], 0)).unwrap();
        let out = compose(&swapped, &[4, 4], 5).unwrap();
        assert!(out.tileset.names().contains(&alloc::string::String::from("w")));

        let leaf = uniform_leaf(&["x"], 0);
        assert!(matches!(
            rebind(&leaf, 0, uniform_leaf(&["y"], 0)),
            Err(ComposeError::StructureError(_))
        ));
        assert_eq!(
            rebind(&town, 9, uniform_leaf(&["y"], 0)),
            Err(ComposeError::MappingError { tile: 9 })
        );
    }

    #[test]
    fn rebind_to_depth_three_obeys_size_law() {
        // town: abstract tiles {house, garden}, S = 2x2.
        let abstract_map = Grid::from_data(&[2, 2], alloc::vec![0, 1, 1, 0], 2).unwrap();
        let mut mapping = BTreeMap::new();
        mapping.insert(0, uniform_leaf(&["h"], 0));
        mapping.insert(1, uniform_leaf(&["g"], 0));
        let town = fixed_node(
            &["house", "garden"],
            abstract_map.clone(),
            alloc::vec![2, 2],
            mapping,
        );
        // City: the house tile now expands into a whole town.
        let mut city = rebind(&town, 0, town.clone()).unwrap();
        // The inner town's Fixed abstract map is 2x2, so the city's subtiles
        // must be a full town: 2 * 2 = 4 per axis.
        city.subtile_size = alloc::vec![4, 4];
        city.generator = GeneratorKind::Fixed { tileset: ts(&["house", "garden"]), grid: abstract_map };
        // garden leaf under the city must also fill 4x4 blocks: fine, leaves
        // take any size.
        let expected = total_size(&city, &[2, 2]);
        // Heterogeneous: house child scales 2x2 -> 4x4 per cell while garden
        // is a leaf; total_size rejects mixing.
        assert_eq!(expected, Err(ComposeError::HeterogeneousChildren));
        let out = compose(&city, &[8, 8], 1).unwrap();
        assert_eq!(out.grid.dims(), &[8, 8]);
        assert_tiling(&out);
    }

    #[test]
    fn total_size_uniform_depth_three() {
        // Homogeneous depth-3 chain: every child of a node scales alike.
        let leaf = uniform_leaf(&["x"], 0);
        let mut inner_map = BTreeMap::new();
        inner_map.insert(0, leaf.clone());
        let inner = CompositionNode {
            generator: GeneratorKind::Uniform { tileset: ts(&["t"]), tile: 0 },
            subtile_size: alloc::vec![5, 5],
            mapping: Some(inner_map),
            child_height: None,
            coalesce: true,
        };
        let mut outer_map = BTreeMap::new();
        outer_map.insert(0, inner);
        let outer = CompositionNode {
            generator: GeneratorKind::Uniform { tileset: ts(&["t"]), tile: 0 },
            subtile_size: alloc::vec![5, 5],
            mapping: Some(outer_map),
            child_height: None,
            coalesce: true,
        };
        assert_eq!(total_size(&outer, &[5, 5]).unwrap(), alloc::vec![125, 125]);
        assert_eq!(total_size(&leaf, &[7, 3]).unwrap(), alloc::vec![7, 3]);
    }

    #[test]
    fn height_lift_produces_3d() {
        let mut mapping = BTreeMap::new();
        mapping.insert(0, uniform_leaf(&["air", "wall"], 1));
        let node = CompositionNode {
            generator: GeneratorKind::Uniform { tileset: ts(&["house"]), tile: 0 },
            subtile_size: alloc::vec![3, 3],
            mapping: Some(mapping),
            child_height: Some(4),
            coalesce: true,
        };
        assert_eq!(total_size(&node, &[2, 2]).unwrap(), alloc::vec![6, 6, 4]);
        let out = compose(&node, &[6, 6], 2).unwrap();
        assert_eq!(out.grid.dims(), &[6, 6, 4]);
        assert_tiling(&out);
    }

    #[test]
    fn compose_is_deterministic() {
        let mut mapping = BTreeMap::new();
        mapping.insert(0, uniform_leaf(&["a", "b"], 0));
        mapping.insert(1, uniform_leaf(&["a", "b"], 1));
        let abstract_map =
            Grid::from_data(&[3, 3], alloc::vec![0, 1, 0, 1, 0, 1, 0, 0, 1], 2).unwrap();
        let node = fixed_node(&["p", "q"], abstract_map, alloc::vec![2, 2], mapping);
        let a = compose(&node, &[6, 6], 11).unwrap();
        let b = compose(&node, &[6, 6], 11).unwrap();
        assert_eq!(a, b);
        assert_tiling(&a);
    }
}
