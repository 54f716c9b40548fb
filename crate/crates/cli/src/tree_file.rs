//! Composition tree document:
//! `{"root": name, "nodes": {name: {generator, subtile_size?, child_height?,
//! mapping?, coalesce?}}}`.
//!
//! `generator` is either a path to a trained generator JSON (relative to the
//! tree file) or an inline `{"uniform": {"tileset": [...], "tile": name}}`.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result, bail};
use levelgen_core::composer::{CompositionNode, GeneratorKind};
use levelgen_core::generator::GeneratorSpec;
use levelgen_core::grid::Tileset;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformDoc {
    pub tileset: Vec<String>,
    pub tile: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorRef {
    Path(String),
    Uniform { uniform: UniformDoc },
}

fn d_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub generator: GeneratorRef,
    #[serde(default)]
    pub subtile_size: Vec<usize>,
    #[serde(default)]
    pub child_height: Option<usize>,
    /// Tile name -> node name; absent for leaves.
    #[serde(default)]
    pub mapping: Option<BTreeMap<String, String>>,
    #[serde(default = "d_true")]
    pub coalesce: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDoc {
    pub root: String,
    pub nodes: BTreeMap<String, NodeDoc>,
}

impl TreeDoc {
    pub fn parse(text: &str) -> Result<TreeDoc> {
        serde_json::from_str(text).context("parsing composition tree")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Build the tree rooted at `root`, loading generator files relative to
    /// `base_dir`. Cycles and dangling references are errors.
    pub fn resolve(&self, base_dir: &Path) -> Result<CompositionNode> {
        let mut stack = Vec::new();
        self.resolve_node(&self.root, base_dir, &mut stack)
    }

    fn resolve_node(
        &self,
        name: &str,
        base_dir: &Path,
        stack: &mut Vec<String>,
    ) -> Result<CompositionNode> {
        if stack.iter().any(|n| n == name) {
            bail!("cyclic node reference: {} -> {name}", stack.join(" -> "));
        }
        let doc = self
            .nodes
            .get(name)
            .with_context(|| format!("tree references missing node '{name}'"))?;
        let generator = match &doc.generator {
            GeneratorRef::Path(p) => {
                let path = base_dir.join(p);
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading generator {}", path.display()))?;
                let spec: GeneratorSpec = serde_json::from_str(&text)
                    .with_context(|| format!("parsing generator {}", path.display()))?;
                GeneratorKind::Network(spec)
            }
            GeneratorRef::Uniform { uniform } => {
                let tileset = Tileset::from_names(uniform.tileset.clone())
                    .map_err(|e| anyhow::anyhow!("bad tileset in node '{name}': {e}"))?;
                let tile = tileset
                    .index_of(&uniform.tile)
                    .with_context(|| format!("node '{name}': unknown tile '{}'", uniform.tile))?;
                GeneratorKind::Uniform { tileset, tile }
            }
        };
        let mapping = match &doc.mapping {
            None => None,
            Some(map) => {
                stack.push(name.to_string());
                let ts = generator.tileset().clone();
                let mut out = BTreeMap::new();
                for (tile_name, child_name) in map {
                    let tile = ts.index_of(tile_name).with_context(|| {
                        format!("node '{name}': mapping key '{tile_name}' not in tileset")
                    })?;
                    out.insert(tile, self.resolve_node(child_name, base_dir, stack)?);
                }
                stack.pop();
                Some(out)
            }
        };
        Ok(CompositionNode {
            generator,
            subtile_size: doc.subtile_size.clone(),
            mapping,
            child_height: doc.child_height,
            coalesce: doc.coalesce,
        })
    }
}

pub fn load(path: &Path) -> Result<CompositionNode> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let doc = TreeDoc::parse(&text)?;
    doc.resolve(path.parent().unwrap_or(Path::new(".")))
}
