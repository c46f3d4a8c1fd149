//! On-disk JSON formats for graphs, hybrid models, and verification reports.
//! Field names are part of the CLI contract.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::graph::{DirectedGraph, EdgeCount};
use crate::model::{Block, BlockGraph, HybridModel, Wiring};
use crate::report::Report;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CountField {
    Finite(u32),
    Word(String),
}

impl CountField {
    fn to_count(&self) -> Result<EdgeCount> {
        match self {
            CountField::Finite(0) => input("edge count must be positive"),
            CountField::Finite(n) => Ok(EdgeCount::Finite(*n)),
            CountField::Word(w) if w == "inf" => Ok(EdgeCount::Infinite),
            CountField::Word(w) => input(format!("edge count must be a positive integer or \"inf\", got {w:?}")),
        }
    }

    fn of(count: EdgeCount) -> Self {
        match count {
            EdgeCount::Finite(n) => CountField::Finite(n),
            EdgeCount::Infinite => CountField::Word("inf".to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeFile {
    pub from: String,
    pub to: String,
    pub count: CountField,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub name: String,
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distinguished: Option<String>,
}

impl GraphFile {
    pub fn of(g: &DirectedGraph) -> Self {
        GraphFile {
            name: g.name.clone(),
            vertices: g.vertices.clone(),
            edges: g
                .bundles
                .iter()
                .map(|b| EdgeFile {
                    from: g.vertices[b.from].clone(),
                    to: g.vertices[b.to].clone(),
                    count: CountField::of(b.count),
                    label: Some(b.label.clone()),
                })
                .collect(),
            distinguished: g.distinguished.map(|d| g.vertices[d].clone()),
        }
    }

    pub fn build(&self) -> Result<DirectedGraph> {
        let bundles = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| {
                Ok((
                    e.label.clone().unwrap_or_else(|| format!("e{i}")),
                    e.from.clone(),
                    e.to.clone(),
                    e.count.to_count()?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        DirectedGraph::new(&self.name, self.vertices.clone(), bundles, self.distinguished.as_deref())
    }
}

/// A block coordinate: an inline graph, a file reference, or a citation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BlockGraphFile {
    FileRef { file: String, #[serde(default, skip_serializing_if = "Option::is_none")] distinguished: Option<String> },
    Cited { cited: String, provenance: String },
    Inline(GraphFile),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub rank: usize,
    pub blocks: Vec<Vec<BlockGraphFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain_wiring: Option<Wiring>,
}

impl ModelFile {
    pub fn of(m: &HybridModel) -> Self {
        ModelFile {
            rank: m.rank,
            blocks: m
                .blocks
                .iter()
                .map(|b| {
                    b.graphs
                        .iter()
                        .map(|g| match g {
                            BlockGraph::Concrete(g) => BlockGraphFile::Inline(GraphFile::of(g)),
                            BlockGraph::Cited { name, provenance } => BlockGraphFile::Cited {
                                cited: name.clone(),
                                provenance: provenance.clone(),
                            },
                        })
                        .collect()
                })
                .collect(),
            chain_wiring: Some(m.wiring),
        }
    }

    /// `base` resolves relative file references.
    pub fn build(&self, base: &Path) -> Result<HybridModel> {
        let mut blocks = Vec::new();
        for b in &self.blocks {
            let mut graphs = Vec::new();
            for bg in b {
                graphs.push(match bg {
                    BlockGraphFile::Inline(gf) => BlockGraph::Concrete(gf.build()?),
                    BlockGraphFile::Cited { cited, provenance } => BlockGraph::Cited {
                        name: cited.clone(),
                        provenance: provenance.clone(),
                    },
                    BlockGraphFile::FileRef { file, distinguished } => {
                        let mut g = read_graph(&base.join(file))?;
                        if let Some(d) = distinguished {
                            g.distinguished = Some(g.vertex_index(d)?);
                        }
                        BlockGraph::Concrete(g)
                    }
                });
            }
            blocks.push(Block { graphs });
        }
        HybridModel::chain(self.rank, blocks, self.chain_wiring.unwrap_or_default())
    }
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub title: String,
    pub passed: bool,
    pub lines: Vec<String>,
    pub failures: Vec<String>,
}

impl ReportFile {
    pub fn of(r: &Report) -> Self {
        ReportFile {
            schema_version: REPORT_SCHEMA_VERSION,
            title: r.title.clone(),
            passed: r.passed(),
            lines: r.lines.clone(),
            failures: r.failures.clone(),
        }
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

fn write_string(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content)
        .map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))
}

pub fn parse_graph(text: &str) -> Result<DirectedGraph> {
    let gf: GraphFile =
        serde_json::from_str(text).map_err(|e| Error::Input(format!("graph file: {e}")))?;
    gf.build()
}

pub fn read_graph(path: &Path) -> Result<DirectedGraph> {
    parse_graph(&read_to_string(path)?)
}

pub fn write_graph(path: &Path, g: &DirectedGraph) -> Result<()> {
    write_string(path, &to_json(&GraphFile::of(g))?)
}

pub fn parse_model(text: &str, base: &Path) -> Result<HybridModel> {
    let mf: ModelFile =
        serde_json::from_str(text).map_err(|e| Error::Input(format!("model file: {e}")))?;
    mf.build(base)
}

pub fn read_model(path: &Path) -> Result<HybridModel> {
    let base = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
    parse_model(&read_to_string(path)?, &base)
}

pub fn write_model(path: &Path, m: &HybridModel) -> Result<()> {
    write_string(path, &to_json(&ModelFile::of(m))?)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map_err(|e| Error::Internal(format!("serialization: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_round_trip() {
        let g = DirectedGraph::bouquet("L", EdgeCount::Infinite);
        let text = to_json(&GraphFile::of(&g)).unwrap();
        assert!(text.contains("\"inf\""));
        assert_eq!(parse_graph(&text).unwrap(), g);
    }

    #[test]
    fn zero_count_rejected() {
        let text = r#"{"name":"g","vertices":["v"],"edges":[{"from":"v","to":"v","count":0}]}"#;
        assert!(parse_graph(text).is_err());
    }

    #[test]
    fn model_round_trip() {
        let m = crate::model::examples::two_block_bouquet();
        let text = to_json(&ModelFile::of(&m)).unwrap();
        assert_eq!(parse_model(&text, Path::new(".")).unwrap(), m);
    }

    #[test]
    fn file_reference_block() {
        let dir = tempfile::tempdir().unwrap();
        let g = DirectedGraph::bouquet("L", EdgeCount::Infinite);
        write_graph(&dir.path().join("l.json"), &g).unwrap();
        let text = r#"{"rank":2,"blocks":[[{"file":"l.json"},{"file":"l.json"}]]}"#;
        let m = parse_model(text, dir.path()).unwrap();
        assert_eq!(m.blocks.len(), 1);
        assert!(m.is_fully_concrete());
    }
}
