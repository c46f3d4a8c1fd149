use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// Number of parallel edges in a bundle. `Infinite` bundles are materialized
/// lazily: an index is valid at any nonnegative value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeCount {
    Finite(u32),
    Infinite,
}

impl EdgeCount {
    pub fn admits(&self, index: u32) -> bool {
        match self {
            EdgeCount::Finite(n) => index < *n,
            EdgeCount::Infinite => true,
        }
    }
}

/// A bundle of parallel edges `from -> to`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeBundle {
    pub label: String,
    pub from: usize,
    pub to: usize,
    pub count: EdgeCount,
}

/// A single edge: bundle plus index within the bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeRef {
    pub bundle: u32,
    pub index: u32,
}

/// Directed multigraph with optionally infinite edge bundles and an optional
/// distinguished vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectedGraph {
    pub name: String,
    pub vertices: Vec<String>,
    pub bundles: Vec<EdgeBundle>,
    pub distinguished: Option<usize>,
}

impl DirectedGraph {
    pub fn new(
        name: impl Into<String>,
        vertices: Vec<String>,
        bundles: Vec<(String, String, String, EdgeCount)>,
        distinguished: Option<&str>,
    ) -> Result<Self> {
        let name = name.into();
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, v) in vertices.iter().enumerate() {
            if index.insert(v.as_str(), i).is_some() {
                return input(format!("graph {name}: duplicate vertex {v}"));
            }
        }
        let mut bs = Vec::new();
        for (label, from, to, count) in &bundles {
            let from = *index
                .get(from.as_str())
                .ok_or_else(|| Error::Input(format!("graph {name}: unknown vertex {from}")))?;
            let to = *index
                .get(to.as_str())
                .ok_or_else(|| Error::Input(format!("graph {name}: unknown vertex {to}")))?;
            bs.push(EdgeBundle { label: label.clone(), from, to, count: *count });
        }
        let distinguished = match distinguished {
            None => None,
            Some(d) => Some(*index.get(d).ok_or_else(|| {
                Error::Input(format!("graph {name}: unknown distinguished vertex {d}"))
            })?),
        };
        Ok(DirectedGraph { name, vertices, bundles: bs, distinguished })
    }

    /// Single-vertex graph with one loop bundle.
    pub fn bouquet(name: &str, count: EdgeCount) -> Self {
        DirectedGraph {
            name: name.to_string(),
            vertices: vec!["v".to_string()],
            bundles: vec![EdgeBundle { label: "e".to_string(), from: 0, to: 0, count }],
            distinguished: Some(0),
        }
    }

    pub fn vertex_index(&self, v: &str) -> Result<usize> {
        self.vertices
            .iter()
            .position(|x| x == v)
            .ok_or_else(|| Error::Input(format!("graph {}: unknown vertex {v}", self.name)))
    }

    pub fn out_bundles(&self, v: usize) -> impl Iterator<Item = (u32, &EdgeBundle)> {
        self.bundles
            .iter()
            .enumerate()
            .filter(move |(_, b)| b.from == v)
            .map(|(i, b)| (i as u32, b))
    }

    pub fn edge_from(&self, e: EdgeRef) -> usize {
        self.bundles[e.bundle as usize].from
    }

    pub fn edge_to(&self, e: EdgeRef) -> usize {
        self.bundles[e.bundle as usize].to
    }

    pub fn edge_label(&self, e: EdgeRef) -> String {
        let b = &self.bundles[e.bundle as usize];
        match b.count {
            EdgeCount::Finite(1) => b.label.clone(),
            _ => format!("{}{}", b.label, e.index),
        }
    }

    /// A vertex is an infinite emitter if some outgoing bundle is infinite.
    pub fn is_infinite_emitter(&self, v: usize) -> bool {
        self.out_bundles(v).any(|(_, b)| b.count == EdgeCount::Infinite)
    }

    /// Regular: emits at least one and at most finitely many edges.
    pub fn is_regular(&self, v: usize) -> bool {
        let mut total = 0u64;
        for (_, b) in self.out_bundles(v) {
            match b.count {
                EdgeCount::Infinite => return false,
                EdgeCount::Finite(n) => total += n as u64,
            }
        }
        total > 0
    }

    pub fn is_sink(&self, v: usize) -> bool {
        self.out_bundles(v).all(|(_, b)| b.count == EdgeCount::Finite(0))
    }

    /// Out-degree counting multiplicity; None when infinite.
    pub fn out_degree(&self, v: usize) -> Option<u64> {
        let mut total = 0u64;
        for (_, b) in self.out_bundles(v) {
            match b.count {
                EdgeCount::Infinite => return None,
                EdgeCount::Finite(n) => total += n as u64,
            }
        }
        Some(total)
    }

    /// Strong connectivity over all vertices, treating every nonempty bundle
    /// as an arc. Single-vertex graphs with no edges count as connected.
    pub fn strongly_connected(&self) -> bool {
        let n = self.vertices.len();
        if n <= 1 {
            return true;
        }
        let arcs: Vec<(usize, usize)> = self
            .bundles
            .iter()
            .filter(|b| b.count != EdgeCount::Finite(0))
            .map(|b| (b.from, b.to))
            .collect();
        let reach = |start: usize, forward: bool| -> Vec<bool> {
            let mut seen = vec![false; n];
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &(a, b) in &arcs {
                    let (from, to) = if forward { (a, b) } else { (b, a) };
                    if from == v && !seen[to] {
                        seen[to] = true;
                        stack.push(to);
                    }
                }
            }
            seen
        };
        reach(0, true).iter().all(|&x| x) && reach(0, false).iter().all(|&x| x)
    }

    /// Vertex adjacency matrix entry A[v][w] = number of edges v -> w.
    /// None when some relevant bundle is infinite.
    pub fn adjacency(&self) -> Vec<Vec<Option<u64>>> {
        let n = self.vertices.len();
        let mut a = vec![vec![Some(0u64); n]; n];
        for b in &self.bundles {
            let cell = &mut a[b.from][b.to];
            *cell = match (*cell, b.count) {
                (None, _) | (_, EdgeCount::Infinite) => None,
                (Some(x), EdgeCount::Finite(k)) => Some(x + k as u64),
            };
        }
        a
    }

    /// All paths of exactly `len` edges starting anywhere (or at `from`),
    /// honoring `caps` (per-bundle materialization caps).
    pub fn paths_of_length(
        &self,
        from: Option<usize>,
        len: usize,
        caps: &SubgraphLevel,
    ) -> Vec<GraphPath> {
        let starts: Vec<usize> = match from {
            Some(v) => vec![v],
            None => (0..self.vertices.len()).collect(),
        };
        let mut out = Vec::new();
        for s in starts {
            let mut stack = vec![GraphPath { origin: s as u32, edges: Vec::new() }];
            while let Some(p) = stack.pop() {
                if p.edges.len() == len {
                    out.push(p);
                    continue;
                }
                let at = p.terminus(self);
                for e in caps.edges_at(self, at) {
                    let mut q = p.clone();
                    q.edges.push(e);
                    stack.push(q);
                }
            }
        }
        out.sort();
        out
    }
}

/// A finite directed path inside one graph. Zero edges = the vertex itself.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GraphPath {
    pub origin: u32,
    pub edges: Vec<EdgeRef>,
}

impl GraphPath {
    pub fn vertex(v: usize) -> Self {
        GraphPath { origin: v as u32, edges: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn terminus(&self, g: &DirectedGraph) -> usize {
        match self.edges.last() {
            None => self.origin as usize,
            Some(e) => g.edge_to(*e),
        }
    }

    pub fn validate(&self, g: &DirectedGraph) -> Result<()> {
        let mut at = self.origin as usize;
        if at >= g.vertices.len() {
            return input(format!("path origin out of range in {}", g.name));
        }
        for e in &self.edges {
            if e.bundle as usize >= g.bundles.len() {
                return input(format!("edge bundle out of range in {}", g.name));
            }
            let b = &g.bundles[e.bundle as usize];
            if !b.count.admits(e.index) {
                return input(format!("edge index out of range in {}", g.name));
            }
            if b.from != at {
                return input(format!("path not composable in {}", g.name));
            }
            at = b.to;
        }
        Ok(())
    }

    pub fn is_prefix_of(&self, other: &GraphPath) -> bool {
        self.origin == other.origin
            && self.edges.len() <= other.edges.len()
            && self.edges[..] == other.edges[..self.edges.len()]
    }

    /// Remainder r with self . r == other; requires prefix.
    pub fn quotient(&self, other: &GraphPath, g: &DirectedGraph) -> GraphPath {
        debug_assert!(self.is_prefix_of(other));
        GraphPath {
            origin: self.terminus(g) as u32,
            edges: other.edges[self.edges.len()..].to_vec(),
        }
    }

    pub fn concat(&self, other: &GraphPath, g: &DirectedGraph) -> Result<GraphPath> {
        if self.terminus(g) != other.origin as usize {
            return input("graph paths not composable");
        }
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&other.edges);
        Ok(GraphPath { origin: self.origin, edges })
    }

    pub fn display(&self, g: &DirectedGraph) -> String {
        if self.edges.is_empty() {
            return g.vertices[self.origin as usize].clone();
        }
        self.edges.iter().map(|e| g.edge_label(*e)).collect::<Vec<_>>().join(".")
    }
}

/// One filtration level: per-bundle materialization caps. Bundle `b` admits
/// edge indices `< caps[b]` (clamped at the bundle count for finite bundles).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgraphLevel {
    pub caps: Vec<u32>,
}

impl SubgraphLevel {
    pub fn full_for(g: &DirectedGraph, default_cap: u32) -> Self {
        let caps = g
            .bundles
            .iter()
            .map(|b| match b.count {
                EdgeCount::Finite(n) => n,
                EdgeCount::Infinite => default_cap,
            })
            .collect();
        SubgraphLevel { caps }
    }

    pub fn admits(&self, g: &DirectedGraph, e: EdgeRef) -> bool {
        let b = &g.bundles[e.bundle as usize];
        b.count.admits(e.index) && e.index < self.caps[e.bundle as usize]
    }

    pub fn edges_at(&self, g: &DirectedGraph, v: usize) -> Vec<EdgeRef> {
        let mut out = Vec::new();
        for (bi, b) in g.out_bundles(v) {
            let cap = match b.count {
                EdgeCount::Finite(n) => n.min(self.caps[bi as usize]),
                EdgeCount::Infinite => self.caps[bi as usize],
            };
            for i in 0..cap {
                out.push(EdgeRef { bundle: bi, index: i });
            }
        }
        out
    }

    /// Vertices whose full out-edge set is already inside this level.
    /// Infinite emitters never qualify.
    pub fn saturated_vertices(&self, g: &DirectedGraph) -> Vec<usize> {
        (0..g.vertices.len())
            .filter(|&v| {
                !g.is_sink(v)
                    && g.out_bundles(v).all(|(bi, b)| match b.count {
                        EdgeCount::Infinite => false,
                        EdgeCount::Finite(n) => self.caps[bi as usize] >= n,
                    })
            })
            .collect()
    }

    /// Level validity: strongly connected on the materialized arcs and not a
    /// single circuit (total materialized out-degree must exceed 1 somewhere).
    pub fn validate(&self, g: &DirectedGraph) -> Result<()> {
        if self.caps.len() != g.bundles.len() {
            return input("filtration level has wrong bundle count");
        }
        let mut restricted = g.clone();
        for (bi, b) in restricted.bundles.iter_mut().enumerate() {
            let cap = self.caps[bi];
            b.count = match b.count {
                EdgeCount::Finite(n) => EdgeCount::Finite(n.min(cap)),
                EdgeCount::Infinite => EdgeCount::Finite(cap),
            };
        }
        if !restricted.strongly_connected() {
            return input(format!("filtration level of {} not strongly connected", g.name));
        }
        let total: u64 = (0..g.vertices.len())
            .map(|v| restricted.out_degree(v).unwrap_or(u64::MAX))
            .sum();
        if total <= g.vertices.len() as u64 {
            return input(format!("filtration level of {} is a single circuit", g.name));
        }
        Ok(())
    }
}

/// An increasing exhaustion of a graph by finite subgraphs.
#[derive(Debug, Clone)]
pub struct SubgraphFiltration {
    pub levels: Vec<SubgraphLevel>,
}

impl SubgraphFiltration {
    /// Default: level k materializes the first max(2, k) indices of each
    /// infinite bundle and every finite bundle in full.
    pub fn default_for(g: &DirectedGraph, max_level: usize) -> Result<Self> {
        let mut levels = Vec::new();
        for k in 1..=max_level {
            let level = SubgraphLevel::full_for(g, (k as u32).max(2));
            level.validate(g)?;
            levels.push(level);
        }
        Ok(SubgraphFiltration { levels })
    }

    pub fn level(&self, k: usize) -> Result<&SubgraphLevel> {
        if k == 0 || k > self.levels.len() {
            return input(format!("filtration level {k} out of range"));
        }
        Ok(&self.levels[k - 1])
    }

    pub fn validate(&self, g: &DirectedGraph) -> Result<()> {
        for level in &self.levels {
            level.validate(g)?;
        }
        for w in self.levels.windows(2) {
            if w[0].caps.iter().zip(&w[1].caps).any(|(a, b)| a > b) {
                return input("filtration levels not increasing");
            }
        }
        Ok(())
    }
}

/// Graph automorphism: a vertex permutation, a bundle permutation compatible
/// with it, and finite-support index permutations within bundles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphAut {
    pub vertex_map: Vec<usize>,
    pub bundle_map: Vec<usize>,
    /// Per-bundle finite-support index permutation (missing = identity).
    pub index_maps: BTreeMap<u32, BTreeMap<u32, u32>>,
}

impl GraphAut {
    pub fn identity(g: &DirectedGraph) -> Self {
        GraphAut {
            vertex_map: (0..g.vertices.len()).collect(),
            bundle_map: (0..g.bundles.len()).collect(),
            index_maps: BTreeMap::new(),
        }
    }

    /// Swap two indices within one bundle, fixing everything else.
    pub fn index_swap(g: &DirectedGraph, bundle: u32, i: u32, j: u32) -> Self {
        let mut aut = Self::identity(g);
        let mut m = BTreeMap::new();
        m.insert(i, j);
        m.insert(j, i);
        aut.index_maps.insert(bundle, m);
        aut
    }

    pub fn validate(&self, g: &DirectedGraph, fix: Option<usize>) -> Result<()> {
        let n = g.vertices.len();
        if self.vertex_map.len() != n || self.bundle_map.len() != g.bundles.len() {
            return input("automorphism size mismatch");
        }
        let mut seen = vec![false; n];
        for &v in &self.vertex_map {
            if v >= n || seen[v] {
                return input("vertex map not a permutation");
            }
            seen[v] = true;
        }
        let mut bseen = vec![false; g.bundles.len()];
        for (bi, &bj) in self.bundle_map.iter().enumerate() {
            if bj >= g.bundles.len() || bseen[bj] {
                return input("bundle map not a permutation");
            }
            bseen[bj] = true;
            let a = &g.bundles[bi];
            let b = &g.bundles[bj];
            if b.from != self.vertex_map[a.from] || b.to != self.vertex_map[a.to] || a.count != b.count
            {
                return input("bundle map breaks incidence or multiplicity");
            }
        }
        for (bi, m) in &self.index_maps {
            if *bi as usize >= g.bundles.len() {
                return input("index map on unknown bundle");
            }
            let count = g.bundles[*bi as usize].count;
            let mut vals: Vec<u32> = m.values().copied().collect();
            vals.sort_unstable();
            let mut keys: Vec<u32> = m.keys().copied().collect();
            keys.sort_unstable();
            if vals != keys {
                return input("index map not a finite-support permutation");
            }
            if keys.iter().any(|&i| !count.admits(i)) {
                return input("index map out of bundle range");
            }
        }
        if let Some(fx) = fix {
            if self.vertex_map[fx] != fx {
                return input("automorphism moves the distinguished vertex");
            }
        }
        Ok(())
    }

    pub fn apply_vertex(&self, v: usize) -> usize {
        self.vertex_map[v]
    }

    pub fn apply_edge(&self, e: EdgeRef) -> EdgeRef {
        let index = self
            .index_maps
            .get(&e.bundle)
            .and_then(|m| m.get(&e.index))
            .copied()
            .unwrap_or(e.index);
        EdgeRef { bundle: self.bundle_map[e.bundle as usize] as u32, index }
    }

    pub fn apply_path(&self, p: &GraphPath) -> GraphPath {
        GraphPath {
            origin: self.apply_vertex(p.origin as usize) as u32,
            edges: p.edges.iter().map(|e| self.apply_edge(*e)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle_plus_loop() -> DirectedGraph {
        // two vertices, v -> w (3 parallel), w -> v (1)
        DirectedGraph::new(
            "g",
            vec!["v".into(), "w".into()],
            vec![
                ("a".into(), "v".into(), "w".into(), EdgeCount::Finite(3)),
                ("b".into(), "w".into(), "v".into(), EdgeCount::Finite(1)),
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn regularity_and_emitters() {
        let g = DirectedGraph::bouquet("Linf", EdgeCount::Infinite);
        assert!(g.is_infinite_emitter(0));
        assert!(!g.is_regular(0));
        let c = DirectedGraph::bouquet("C3", EdgeCount::Finite(3));
        assert!(c.is_regular(0));
        assert!(!c.is_infinite_emitter(0));
    }

    #[test]
    fn path_enumeration_counts() {
        let g = cycle_plus_loop();
        let full = SubgraphLevel::full_for(&g, 0);
        // length 2 from v: 3 choices then 1 = 3 paths
        let v = g.vertex_index("v").unwrap();
        assert_eq!(g.paths_of_length(Some(v), 2, &full).len(), 3);
        let w = g.vertex_index("w").unwrap();
        assert_eq!(g.paths_of_length(Some(w), 2, &full).len(), 3);
    }

    #[test]
    fn prefix_and_quotient() {
        let g = cycle_plus_loop();
        let p = GraphPath { origin: 0, edges: vec![EdgeRef { bundle: 0, index: 1 }] };
        let q = GraphPath {
            origin: 0,
            edges: vec![EdgeRef { bundle: 0, index: 1 }, EdgeRef { bundle: 1, index: 0 }],
        };
        p.validate(&g).unwrap();
        q.validate(&g).unwrap();
        assert!(p.is_prefix_of(&q));
        let r = p.quotient(&q, &g);
        assert_eq!(r.origin, 1);
        assert_eq!(r.edges.len(), 1);
        assert_eq!(p.concat(&r, &g).unwrap(), q);
    }

    #[test]
    fn filtration_default_two_loops() {
        let g = DirectedGraph::bouquet("Linf", EdgeCount::Infinite);
        let f = SubgraphFiltration::default_for(&g, 3).unwrap();
        assert_eq!(f.level(1).unwrap().caps, vec![2]);
        assert_eq!(f.level(2).unwrap().caps, vec![2]);
        assert_eq!(f.level(3).unwrap().caps, vec![3]);
        f.validate(&g).unwrap();
    }

    #[test]
    fn single_loop_level_rejected() {
        let g = DirectedGraph::bouquet("Linf", EdgeCount::Infinite);
        let lvl = SubgraphLevel { caps: vec![1] };
        assert!(lvl.validate(&g).is_err());
    }

    #[test]
    fn saturation() {
        let g = cycle_plus_loop();
        let lvl = SubgraphLevel { caps: vec![2, 1] };
        // v emits 3 in g, caps at 2: not saturated; w emits 1, cap 1: saturated.
        assert_eq!(lvl.saturated_vertices(&g), vec![1]);
    }

    #[test]
    fn automorphism_swap() {
        let g = DirectedGraph::bouquet("Linf", EdgeCount::Infinite);
        let aut = GraphAut::index_swap(&g, 0, 0, 1);
        aut.validate(&g, Some(0)).unwrap();
        let e = EdgeRef { bundle: 0, index: 0 };
        assert_eq!(aut.apply_edge(e).index, 1);
        assert_eq!(aut.apply_edge(aut.apply_edge(e)), e);
        let far = EdgeRef { bundle: 0, index: 7 };
        assert_eq!(aut.apply_edge(far), far);
    }
}
