//! Catalog of building-block graphs with known K-theory and the exact
//! bounded search assembling chain models with prescribed K-groups.

use crate::error::{input, Result};
use crate::graph::{DirectedGraph, EdgeCount};
use crate::ktheory::{graph_k, kunneth_fold, model_k, render_group, GradedK, KAnnotation};
use crate::model::{Block, BlockGraph, HybridModel, Wiring};
use crate::report::Report;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verification {
    EngineComputed,
    CitationAnnotated { provenance: String },
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub graph: BlockGraph,
    pub k: GradedK,
    pub verification: Verification,
    /// Whether the distinguished vertex emits infinitely many edges; only
    /// such graphs can serve as block coordinates of a model.
    pub infinite_emitter: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Catalog {
    pub entries: Vec<CatalogEntry>,
}

fn torsion_k(n: u64) -> GradedK {
    use crate::ktheory::FgAbelianGroup;
    GradedK {
        k0: if n == 1 { FgAbelianGroup::trivial() } else { FgAbelianGroup::cyclic(n) },
        k1: FgAbelianGroup::trivial(),
    }
}

impl Catalog {
    /// The shipped catalog: finite bouquets (no infinite emitter, usable only
    /// for the K-engine), the infinite bouquet, and citation-annotated
    /// infinite graphs covering pure torsion and the odd free group.
    pub fn standard() -> Self {
        let mut entries = Vec::new();
        for n in 1..=8u64 {
            let name = format!("C{}", n + 1);
            entries.push(CatalogEntry {
                name: name.clone(),
                graph: BlockGraph::Concrete(DirectedGraph::bouquet(
                    &name,
                    EdgeCount::Finite(n as u32 + 1),
                )),
                k: torsion_k(n),
                verification: Verification::EngineComputed,
                infinite_emitter: false,
            });
        }
        entries.push(CatalogEntry {
            name: "Linf".to_string(),
            graph: BlockGraph::Concrete(DirectedGraph::bouquet("Linf", EdgeCount::Infinite)),
            k: GradedK::unit(),
            verification: Verification::EngineComputed,
            infinite_emitter: true,
        });
        for n in 2..=8u64 {
            let name = format!("T{n}");
            entries.push(CatalogEntry {
                name: name.clone(),
                graph: BlockGraph::Cited {
                    name: name.clone(),
                    provenance: format!(
                        "transitive infinite graph with an infinite emitter and \
                         K0 = Z/{n}, K1 = 0 (Szymanski realization)"
                    ),
                },
                k: torsion_k(n),
                verification: Verification::CitationAnnotated {
                    provenance: "Szymanski realization".to_string(),
                },
                infinite_emitter: true,
            });
        }
        entries.push(CatalogEntry {
            name: "W".to_string(),
            graph: BlockGraph::Cited {
                name: "W".to_string(),
                provenance: "transitive infinite graph with an infinite emitter and \
                              K0 = 0, K1 = Z (Szymanski realization)"
                    .to_string(),
            },
            k: GradedK {
                k0: crate::ktheory::FgAbelianGroup::trivial(),
                k1: crate::ktheory::FgAbelianGroup::free(1),
            },
            verification: Verification::CitationAnnotated {
                provenance: "Szymanski realization".to_string(),
            },
            infinite_emitter: true,
        });
        Catalog { entries }
    }

    pub fn annotations(&self) -> Vec<KAnnotation> {
        self.entries
            .iter()
            .filter_map(|e| match &e.verification {
                Verification::CitationAnnotated { provenance } => Some(KAnnotation {
                    graph_name: e.name.clone(),
                    k: e.k.clone(),
                    provenance: provenance.clone(),
                }),
                Verification::EngineComputed => None,
            })
            .collect()
    }

    /// Recomputes every engine-computable entry and lists the annotated ones.
    pub fn verify(&self) -> Result<Report> {
        let mut report = Report::new("catalog integrity");
        for e in &self.entries {
            match (&e.verification, &e.graph) {
                (Verification::EngineComputed, BlockGraph::Concrete(g)) => {
                    let computed = graph_k(g)?;
                    report.check(
                        computed == e.k,
                        format!(
                            "{}: K0 = {}, K1 = {}",
                            e.name,
                            render_group(&e.k.k0),
                            render_group(&e.k.k1)
                        ),
                    );
                }
                (Verification::CitationAnnotated { provenance }, _) => {
                    report.note(format!(
                        "{}: K0 = {}, K1 = {} [{}]",
                        e.name,
                        render_group(&e.k.k0),
                        render_group(&e.k.k1),
                        provenance
                    ));
                }
                (Verification::EngineComputed, BlockGraph::Cited { .. }) => {
                    report.check(false, format!("{}: marked engine-computed but cited", e.name));
                }
            }
        }
        Ok(report)
    }
}

/// A realized design: the model, the annotations needed to evaluate its
/// K-theory, and the catalog factorization used per block.
#[derive(Debug, Clone)]
pub struct Designed {
    pub model: HybridModel,
    pub annotations: Vec<KAnnotation>,
    pub predicted: GradedK,
    pub factorization: Vec<Vec<String>>,
}

/// Exact bounded search: one catalog k-tuple per requested block summand.
/// Unsatisfiable requests fail with the offending block named; no partial
/// model is ever returned.
pub fn realize(catalog: &Catalog, requests: &[GradedK], rank: usize) -> Result<Designed> {
    if requests.is_empty() {
        return input("at least one block request required");
    }
    if rank == 0 {
        return input("rank must be at least 1");
    }
    let usable: Vec<&CatalogEntry> =
        catalog.entries.iter().filter(|e| e.infinite_emitter).collect();
    let mut blocks = Vec::new();
    let mut factorization = Vec::new();
    for (bi, want) in requests.iter().enumerate() {
        let found = tuples(&usable, rank).into_iter().find(|tuple| {
            let ks: Vec<GradedK> = tuple.iter().map(|e| e.k.clone()).collect();
            &kunneth_fold(&ks) == want
        });
        match found {
            Some(tuple) => {
                factorization.push(tuple.iter().map(|e| e.name.clone()).collect());
                blocks.push(Block { graphs: tuple.iter().map(|e| e.graph.clone()).collect() });
            }
            None => {
                return input(format!(
                    "block {bi} request K0 = {}, K1 = {} has no {rank}-fold catalog \
                     factorization; missing factor beyond entries {}",
                    render_group(&want.k0),
                    render_group(&want.k1),
                    usable.iter().map(|e| e.name.as_str()).collect::<Vec<_>>().join(", ")
                ));
            }
        }
    }
    let model = HybridModel::chain(rank, blocks, Wiring::default())?;
    let annotations = catalog.annotations();
    let predicted = requests.iter().fold(GradedK::trivial(), |a, r| a.direct_sum(r));
    let recomputed = model_k(&model, &annotations)?;
    if recomputed != predicted {
        return crate::error::internal("realized model disagrees with the requested K-theory");
    }
    Ok(Designed { model, annotations, predicted, factorization })
}

fn tuples<'e>(entries: &[&'e CatalogEntry], rank: usize) -> Vec<Vec<&'e CatalogEntry>> {
    let mut out: Vec<Vec<&CatalogEntry>> = vec![Vec::new()];
    for _ in 0..rank {
        let mut next = Vec::new();
        for t in &out {
            for e in entries {
                let mut t2 = t.clone();
                t2.push(*e);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ktheory::FgAbelianGroup;

    #[test]
    fn catalog_verifies() {
        let report = Catalog::standard().verify().unwrap();
        assert!(report.passed(), "{}", report.render());
    }

    #[test]
    fn free_request_uses_infinite_bouquets() {
        let cat = Catalog::standard();
        let d = realize(&cat, &[GradedK::unit()], 2).unwrap();
        assert_eq!(d.factorization, vec![vec!["Linf".to_string(), "Linf".to_string()]]);
        assert!(d.model.is_fully_concrete());
    }

    #[test]
    fn torsion_k1_request() {
        let cat = Catalog::standard();
        let want = GradedK {
            k0: FgAbelianGroup::trivial(),
            k1: FgAbelianGroup::cyclic(4),
        };
        let d = realize(&cat, &[want.clone()], 2).unwrap();
        assert_eq!(d.predicted, want);
        assert!(d.factorization[0].contains(&"W".to_string()));
    }

    #[test]
    fn unsatisfiable_request_names_the_block() {
        let cat = Catalog::standard();
        let want = GradedK {
            k0: FgAbelianGroup::cyclic(97),
            k1: FgAbelianGroup::trivial(),
        };
        let err = realize(&cat, &[want], 2).unwrap_err();
        assert!(format!("{err}").contains("block 0"));
    }

    #[test]
    fn two_block_mixed_request() {
        let cat = Catalog::standard();
        let a = GradedK { k0: FgAbelianGroup::cyclic(5), k1: FgAbelianGroup::trivial() };
        let b = GradedK::unit();
        let d = realize(&cat, &[a.clone(), b.clone()], 2).unwrap();
        assert_eq!(d.predicted, a.direct_sum(&b));
        assert_eq!(d.model.blocks.len(), 2);
    }
}
