use serde::{Deserialize, Serialize};

use crate::error::{input, internal, Error, Result};
use crate::graph::{DirectedGraph, EdgeRef, GraphPath, SubgraphLevel};

/// Where a connecting-graph edge lands, relative to its origin side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DTarget {
    OwnU,
    OtherU,
    OwnA,
    OtherA,
}

/// Wiring of one connecting-graph copy. Origins are fixed: alpha and epsilon
/// leave u-vertices, beta/gamma/delta leave a-vertices, beta and gamma are
/// loops. Targets are configurable for experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Wiring {
    pub alpha: DTarget,
    pub epsilon: DTarget,
    pub delta: DTarget,
}

impl Default for Wiring {
    fn default() -> Self {
        Wiring { alpha: DTarget::OtherU, epsilon: DTarget::OwnA, delta: DTarget::OwnU }
    }
}

impl Wiring {
    pub fn validate(&self) -> Result<()> {
        use DTarget::*;
        if !matches!(self.alpha, OtherU | OwnA) || !matches!(self.epsilon, OtherU | OwnA) {
            return input("alpha and epsilon must target the other u-vertex or the own a-vertex");
        }
        if self.alpha == self.epsilon {
            return input("alpha and epsilon must have distinct targets");
        }
        if !matches!(self.delta, OwnU | OtherU) {
            return input("delta must target a u-vertex");
        }
        Ok(())
    }
}

/// What each end of a connecting-graph copy is glued to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum USlot {
    Block(u32),
    Free,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connector {
    pub slots: [USlot; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DKind {
    Alpha,
    Epsilon,
    Beta,
    Gamma,
    Delta,
}

/// A single edge of a connecting-graph copy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DEdge {
    pub connector: u32,
    pub kind: DKind,
    pub side: u8,
}

/// A vertex of the glued model. The distinguished coordinate tuple of block i
/// is the canonical representation of the u-vertex identified with it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Vertex {
    Block { block: u32, coords: Vec<u32> },
    A { connector: u32, side: u8 },
    FreeU { connector: u32, side: u8 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockGraph {
    Concrete(DirectedGraph),
    /// A graph referenced by name only, with its invariants asserted
    /// elsewhere; carries no combinatorial structure.
    Cited { name: String, provenance: String },
}

impl BlockGraph {
    pub fn name(&self) -> &str {
        match self {
            BlockGraph::Concrete(g) => &g.name,
            BlockGraph::Cited { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub graphs: Vec<BlockGraph>,
}

/// Product blocks glued along a chain of connecting-graph copies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridModel {
    pub rank: usize,
    pub blocks: Vec<Block>,
    pub connectors: Vec<Connector>,
    pub wiring: Wiring,
}

/// One edge worth of movement: either a connecting-graph edge or a single
/// coordinate step inside a block.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Step {
    D(DEdge),
    Block { block: u32, coord: u32, edge: EdgeRef },
}

/// A path element: a nonempty connecting-graph path, or a coordinate tuple of
/// block paths, not all empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PathElement {
    D(Vec<DEdge>),
    Block { block: u32, coords: Vec<GraphPath> },
}

/// A finite path: alternating string of path elements.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FinitePath {
    pub origin: Vertex,
    pub elems: Vec<PathElement>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TruncKind {
    /// The shown path is itself a boundary point.
    Stopped,
    /// Completions append at least one further element; shown elements exact.
    Open,
}

/// A truncation of an infinite path.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TruncatedInfinitePath {
    pub path: FinitePath,
    pub kind: TruncKind,
}

impl HybridModel {
    /// Chain of blocks joined at consecutive distinguished u-vertices.
    /// One block gets a single connector with a free right end.
    pub fn chain(rank: usize, blocks: Vec<Block>, wiring: Wiring) -> Result<Self> {
        if rank == 0 {
            return input("rank must be at least 1");
        }
        if blocks.is_empty() {
            return input("a model needs at least one block");
        }
        wiring.validate()?;
        let connectors = if blocks.len() == 1 {
            vec![Connector { slots: [USlot::Block(0), USlot::Free] }]
        } else {
            (0..blocks.len() - 1)
                .map(|i| Connector { slots: [USlot::Block(i as u32), USlot::Block(i as u32 + 1)] })
                .collect()
        };
        let m = HybridModel { rank, blocks, connectors, wiring };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        for (bi, b) in self.blocks.iter().enumerate() {
            if b.graphs.len() != self.rank {
                return input(format!("block {bi} has {} graphs, rank is {}", b.graphs.len(), self.rank));
            }
            for g in &b.graphs {
                if let BlockGraph::Concrete(g) = g {
                    if !g.strongly_connected() {
                        return input(format!("block graph {} not strongly connected", g.name));
                    }
                    let d = g.distinguished.ok_or_else(|| {
                        Error::Input(format!("block graph {} has no distinguished vertex", g.name))
                    })?;
                    if !g.is_infinite_emitter(d) {
                        return input(format!(
                            "distinguished vertex of {} is not an infinite emitter",
                            g.name
                        ));
                    }
                }
            }
        }
        for c in &self.connectors {
            for s in c.slots {
                if let USlot::Block(b) = s {
                    if b as usize >= self.blocks.len() {
                        return input("connector references unknown block");
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_fully_concrete(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| b.graphs.iter().all(|g| matches!(g, BlockGraph::Concrete(_))))
    }

    pub fn block_graph(&self, block: u32, coord: u32) -> Result<&DirectedGraph> {
        match self
            .blocks
            .get(block as usize)
            .and_then(|b| b.graphs.get(coord as usize))
        {
            Some(BlockGraph::Concrete(g)) => Ok(g),
            Some(BlockGraph::Cited { name, .. }) => {
                input(format!("graph {name} is cited, not concrete"))
            }
            None => input("block or coordinate out of range"),
        }
    }

    pub fn require_rank2(&self) -> Result<()> {
        if self.rank != 2 {
            return input("path operations are implemented for rank 2");
        }
        Ok(())
    }

    /// The distinguished coordinate tuple of a block (its u-vertex).
    pub fn u_of_block(&self, block: u32) -> Result<Vertex> {
        let b = &self.blocks[block as usize];
        let mut coords = Vec::new();
        for g in &b.graphs {
            match g {
                BlockGraph::Concrete(g) => coords.push(g.distinguished.unwrap() as u32),
                BlockGraph::Cited { name, .. } => {
                    return input(format!("graph {name} is cited, not concrete"))
                }
            }
        }
        Ok(Vertex::Block { block, coords })
    }

    pub fn u_vertex(&self, connector: u32, side: u8) -> Result<Vertex> {
        match self.connectors[connector as usize].slots[side as usize] {
            USlot::Block(b) => self.u_of_block(b),
            USlot::Free => Ok(Vertex::FreeU { connector, side }),
        }
    }

    /// Connector ends glued to this vertex.
    pub fn u_attachments(&self, v: &Vertex) -> Vec<(u32, u8)> {
        let mut out = Vec::new();
        for (ci, _) in self.connectors.iter().enumerate() {
            for side in 0..2u8 {
                if let Ok(u) = self.u_vertex(ci as u32, side) {
                    if &u == v {
                        out.push((ci as u32, side));
                    }
                }
            }
        }
        out
    }

    pub fn is_u_vertex(&self, v: &Vertex) -> bool {
        !self.u_attachments(v).is_empty()
    }

    pub fn d_origin(&self, e: DEdge) -> Result<Vertex> {
        match e.kind {
            DKind::Alpha | DKind::Epsilon => self.u_vertex(e.connector, e.side),
            DKind::Beta | DKind::Gamma | DKind::Delta => {
                Ok(Vertex::A { connector: e.connector, side: e.side })
            }
        }
    }

    pub fn d_target(&self, e: DEdge) -> Result<Vertex> {
        let resolve = |t: DTarget, side: u8| -> Result<Vertex> {
            match t {
                DTarget::OwnU => self.u_vertex(e.connector, side),
                DTarget::OtherU => self.u_vertex(e.connector, 1 - side),
                DTarget::OwnA => Ok(Vertex::A { connector: e.connector, side }),
                DTarget::OtherA => Ok(Vertex::A { connector: e.connector, side: 1 - side }),
            }
        };
        match e.kind {
            DKind::Alpha => resolve(self.wiring.alpha, e.side),
            DKind::Epsilon => resolve(self.wiring.epsilon, e.side),
            DKind::Beta | DKind::Gamma => Ok(Vertex::A { connector: e.connector, side: e.side }),
            DKind::Delta => resolve(self.wiring.delta, e.side),
        }
    }

    /// Connecting-graph edges leaving a vertex.
    pub fn d_steps_at(&self, v: &Vertex) -> Result<Vec<DEdge>> {
        let mut out = Vec::new();
        match v {
            Vertex::A { connector, side } => {
                for kind in [DKind::Beta, DKind::Gamma, DKind::Delta] {
                    out.push(DEdge { connector: *connector, kind, side: *side });
                }
            }
            _ => {
                for (c, side) in self.u_attachments(v) {
                    out.push(DEdge { connector: c, kind: DKind::Alpha, side });
                    out.push(DEdge { connector: c, kind: DKind::Epsilon, side });
                }
            }
        }
        Ok(out)
    }

    /// Block coordinate steps leaving a vertex, materialized under `levels`
    /// (one level per coordinate of each block).
    pub fn block_steps_at(
        &self,
        v: &Vertex,
        levels: &dyn Fn(u32, u32) -> SubgraphLevel,
    ) -> Result<Vec<Step>> {
        let mut out = Vec::new();
        if let Vertex::Block { block, coords } = v {
            for coord in 0..self.rank as u32 {
                let g = self.block_graph(*block, coord)?;
                let lvl = levels(*block, coord);
                for e in lvl.edges_at(g, coords[coord as usize] as usize) {
                    out.push(Step::Block { block: *block, coord, edge: e });
                }
            }
        }
        Ok(out)
    }

    pub fn step_origin(&self, s: &Step) -> Result<Vertex> {
        match s {
            Step::D(e) => self.d_origin(*e),
            Step::Block { block, coord, edge } => {
                // origin tuple is underdetermined by a single coordinate edge;
                // callers attach steps at a concrete vertex instead.
                let g = self.block_graph(*block, *coord)?;
                let _ = g.edge_from(*edge);
                internal("step_origin needs a base vertex")
            }
        }
    }

    pub fn step_target_from(&self, v: &Vertex, s: &Step) -> Result<Vertex> {
        match s {
            Step::D(e) => {
                if &self.d_origin(*e)? != v {
                    return input("step not composable at vertex");
                }
                self.d_target(*e)
            }
            Step::Block { block, coord, edge } => match v {
                Vertex::Block { block: vb, coords } if vb == block => {
                    let g = self.block_graph(*block, *coord)?;
                    if g.edge_from(*edge) != coords[*coord as usize] as usize {
                        return input("block step not composable at vertex");
                    }
                    let mut c = coords.clone();
                    c[*coord as usize] = g.edge_to(*edge) as u32;
                    Ok(Vertex::Block { block: *block, coords: c })
                }
                _ => input("block step at a non-block vertex"),
            },
        }
    }

    pub fn elem_origin(&self, e: &PathElement) -> Result<Vertex> {
        match e {
            PathElement::D(edges) => self.d_origin(edges[0]),
            PathElement::Block { block, coords } => Ok(Vertex::Block {
                block: *block,
                coords: coords.iter().map(|p| p.origin).collect(),
            }),
        }
    }

    pub fn elem_terminus(&self, e: &PathElement) -> Result<Vertex> {
        match e {
            PathElement::D(edges) => self.d_target(*edges.last().unwrap()),
            PathElement::Block { block, coords } => {
                let mut t = Vec::new();
                for (ci, p) in coords.iter().enumerate() {
                    let g = self.block_graph(*block, ci as u32)?;
                    t.push(p.terminus(g) as u32);
                }
                Ok(Vertex::Block { block: *block, coords: t })
            }
        }
    }

    pub fn elem_length(&self, e: &PathElement) -> Vec<u64> {
        match e {
            PathElement::D(edges) => vec![edges.len() as u64; self.rank],
            PathElement::Block { coords, .. } => {
                coords.iter().map(|p| p.len() as u64).collect()
            }
        }
    }

    fn elem_is_degenerate(&self, e: &PathElement) -> bool {
        match e {
            PathElement::D(edges) => edges.is_empty(),
            PathElement::Block { coords, .. } => coords.iter().all(|p| p.is_empty()),
        }
    }

    fn validate_elem(&self, e: &PathElement) -> Result<()> {
        match e {
            PathElement::D(edges) => {
                if edges.is_empty() {
                    return input("empty connecting-graph element");
                }
                for w in edges.windows(2) {
                    if self.d_target(w[0])? != self.d_origin(w[1])? {
                        return input("connecting-graph element not composable");
                    }
                }
                Ok(())
            }
            PathElement::Block { block, coords } => {
                if coords.len() != self.rank {
                    return input("block element has wrong rank");
                }
                if coords.iter().all(|p| p.is_empty()) {
                    return input("degenerate block element");
                }
                for (ci, p) in coords.iter().enumerate() {
                    p.validate(self.block_graph(*block, ci as u32)?)?;
                }
                Ok(())
            }
        }
    }

    /// Builds a normalized path: drops degenerate elements, merges adjacent
    /// same-type elements, validates composability and alternation.
    pub fn path(&self, origin: Vertex, elems: Vec<PathElement>) -> Result<FinitePath> {
        self.require_rank2()?;
        let mut out: Vec<PathElement> = Vec::new();
        for e in elems {
            if self.elem_is_degenerate(&e) {
                continue;
            }
            self.validate_elem(&e)?;
            match (out.last_mut(), e) {
                (Some(PathElement::D(prev)), PathElement::D(next)) => {
                    if self.d_target(*prev.last().unwrap())? != self.d_origin(next[0])? {
                        return input("path elements not composable");
                    }
                    prev.extend(next);
                }
                (
                    Some(PathElement::Block { block: b1, coords: c1 }),
                    PathElement::Block { block: b2, coords: c2 },
                ) if *b1 == b2 => {
                    let mut merged = Vec::new();
                    for (ci, (p, q)) in c1.iter().zip(&c2).enumerate() {
                        merged.push(p.concat(q, self.block_graph(b2, ci as u32)?)?);
                    }
                    *c1 = merged;
                }
                (_, e) => out.push(e),
            }
        }
        let p = FinitePath { origin, elems: out };
        // composability across elements and at the origin
        let mut at = p.origin.clone();
        for e in &p.elems {
            if self.elem_origin(e)? != at {
                return input("path not composable");
            }
            at = self.elem_terminus(e)?;
        }
        Ok(p)
    }

    pub fn vertex_path(&self, v: Vertex) -> FinitePath {
        FinitePath { origin: v, elems: Vec::new() }
    }

    pub fn terminus(&self, p: &FinitePath) -> Result<Vertex> {
        match p.elems.last() {
            None => Ok(p.origin.clone()),
            Some(e) => self.elem_terminus(e),
        }
    }

    pub fn length(&self, p: &FinitePath) -> Vec<u64> {
        let mut acc = vec![0u64; self.rank];
        for e in &p.elems {
            for (a, b) in acc.iter_mut().zip(self.elem_length(e)) {
                *a += b;
            }
        }
        acc
    }

    pub fn total_steps(&self, p: &FinitePath) -> u64 {
        self.length(p).iter().sum()
    }

    pub fn concat(&self, a: &FinitePath, b: &FinitePath) -> Result<FinitePath> {
        if self.terminus(a)? != b.origin {
            return input("paths not composable");
        }
        let mut elems = a.elems.clone();
        elems.extend(b.elems.iter().cloned());
        self.path(a.origin.clone(), elems)
    }

    /// Element-level extension order: same type and the first extends to the
    /// second (coordinatewise for block elements).
    pub fn elem_prefix(&self, a: &PathElement, b: &PathElement) -> bool {
        match (a, b) {
            (PathElement::D(p), PathElement::D(q)) => {
                p.len() <= q.len() && p[..] == q[..p.len()]
            }
            (
                PathElement::Block { block: b1, coords: c1 },
                PathElement::Block { block: b2, coords: c2 },
            ) => b1 == b2 && c1.iter().zip(c2).all(|(p, q)| p.is_prefix_of(q)),
            _ => false,
        }
    }

    /// Path extension order: all elements equal except possibly the last of
    /// `a`, which must extend inside the corresponding element of `b`.
    pub fn is_prefix(&self, a: &FinitePath, b: &FinitePath) -> bool {
        if a.origin != b.origin || a.elems.len() > b.elems.len() {
            return false;
        }
        let n = a.elems.len();
        if n == 0 {
            return true;
        }
        a.elems[..n - 1] == b.elems[..n - 1] && self.elem_prefix(&a.elems[n - 1], &b.elems[n - 1])
    }

    /// Remainder r with a.r == b; requires is_prefix(a, b).
    pub fn quotient(&self, a: &FinitePath, b: &FinitePath) -> Result<FinitePath> {
        if !self.is_prefix(a, b) {
            return internal("quotient without prefix");
        }
        let n = a.elems.len();
        let origin = self.terminus(a)?;
        if n == 0 {
            return self.path(origin, b.elems.clone());
        }
        let mut elems = Vec::new();
        match (&a.elems[n - 1], &b.elems[n - 1]) {
            (PathElement::D(p), PathElement::D(q)) => {
                if p.len() < q.len() {
                    elems.push(PathElement::D(q[p.len()..].to_vec()));
                }
            }
            (
                PathElement::Block { block, coords: c1 },
                PathElement::Block { coords: c2, .. },
            ) => {
                let mut rem = Vec::new();
                for (ci, (p, q)) in c1.iter().zip(c2).enumerate() {
                    rem.push(p.quotient(q, self.block_graph(*block, ci as u32)?));
                }
                elems.push(PathElement::Block { block: *block, coords: rem });
            }
            _ => return internal("prefix with mismatched element types"),
        }
        elems.extend(b.elems[n..].iter().cloned());
        self.path(origin, elems)
    }

    /// Least common extension, when one exists. Beyond the prefix order this
    /// only happens when both paths end in coordinatewise-compatible block
    /// elements at the same position.
    pub fn join(&self, a: &FinitePath, b: &FinitePath) -> Result<Option<FinitePath>> {
        if self.is_prefix(a, b) {
            return Ok(Some(b.clone()));
        }
        if self.is_prefix(b, a) {
            return Ok(Some(a.clone()));
        }
        if a.origin != b.origin || a.elems.is_empty() || b.elems.is_empty() {
            return Ok(None);
        }
        if a.elems.len() != b.elems.len() {
            return Ok(None);
        }
        let n = a.elems.len();
        if a.elems[..n - 1] != b.elems[..n - 1] {
            return Ok(None);
        }
        match (&a.elems[n - 1], &b.elems[n - 1]) {
            (
                PathElement::Block { block: b1, coords: c1 },
                PathElement::Block { block: b2, coords: c2 },
            ) if b1 == b2 => {
                let mut joined = Vec::new();
                for (p, q) in c1.iter().zip(c2) {
                    if p.is_prefix_of(q) {
                        joined.push(q.clone());
                    } else if q.is_prefix_of(p) {
                        joined.push(p.clone());
                    } else {
                        return Ok(None);
                    }
                }
                let mut elems = a.elems[..n - 1].to_vec();
                elems.push(PathElement::Block { block: *b1, coords: joined });
                Ok(Some(self.path(a.origin.clone(), elems)?))
            }
            _ => Ok(None),
        }
    }

    pub fn compatible(&self, a: &FinitePath, b: &FinitePath) -> Result<bool> {
        Ok(self.join(a, b)?.is_some())
    }

    /// Appends one step, extending the final element when types allow.
    pub fn append_step(&self, p: &FinitePath, s: &Step) -> Result<FinitePath> {
        let t = self.terminus(p)?;
        self.step_target_from(&t, s)?; // composability check
        let elem = match s {
            Step::D(e) => PathElement::D(vec![*e]),
            Step::Block { block, coord, edge } => {
                let mut coords = Vec::new();
                if let Vertex::Block { coords: at, .. } = &t {
                    for c in 0..self.rank as u32 {
                        if c == *coord {
                            coords.push(GraphPath {
                                origin: at[c as usize],
                                edges: vec![*edge],
                            });
                        } else {
                            coords.push(GraphPath::vertex(at[c as usize] as usize));
                        }
                    }
                } else {
                    return input("block step at non-block vertex");
                }
                PathElement::Block { block: *block, coords }
            }
        };
        let mut elems = p.elems.clone();
        elems.push(elem);
        self.path(p.origin.clone(), elems)
    }

    /// The single step extending `a` toward `b`; requires a proper prefix.
    pub fn first_step_toward(&self, a: &FinitePath, b: &FinitePath) -> Result<Step> {
        if !self.is_prefix(a, b) || a == b {
            return internal("first_step_toward without proper prefix");
        }
        let n = a.elems.len();
        let within = n > 0 && a.elems[n - 1] != b.elems[n - 1];
        let (be, ae) = if within {
            (&b.elems[n - 1], Some(&a.elems[n - 1]))
        } else {
            (&b.elems[n], None)
        };
        match be {
            PathElement::D(q) => {
                let done = match ae {
                    Some(PathElement::D(p)) => p.len(),
                    _ => 0,
                };
                Ok(Step::D(q[done]))
            }
            PathElement::Block { block, coords: c2 } => {
                for (ci, q) in c2.iter().enumerate() {
                    let done = match ae {
                        Some(PathElement::Block { coords: c1, .. }) => c1[ci].len(),
                        _ => 0,
                    };
                    if q.len() > done {
                        return Ok(Step::Block {
                            block: *block,
                            coord: ci as u32,
                            edge: q.edges[done],
                        });
                    }
                }
                internal("no extending coordinate found")
            }
        }
    }

    /// Whether a finite path is itself a boundary point: its growth is
    /// permitted to stop here.
    pub fn is_x_point(&self, p: &FinitePath) -> Result<bool> {
        match p.elems.last() {
            None => match &p.origin {
                Vertex::Block { block, coords } => {
                    for (ci, &v) in coords.iter().enumerate() {
                        let g = self.block_graph(*block, ci as u32)?;
                        if !g.is_infinite_emitter(v as usize) {
                            return Ok(false);
                        }
                    }
                    Ok(true)
                }
                _ => Ok(false),
            },
            Some(PathElement::D(_)) => {
                let t = self.terminus(p)?;
                Ok(!matches!(t, Vertex::A { .. }))
            }
            Some(PathElement::Block { block, coords }) => {
                for (ci, q) in coords.iter().enumerate() {
                    let g = self.block_graph(*block, ci as u32)?;
                    if !g.is_infinite_emitter(q.terminus(g)) {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// Prefix of `w` with the exact coordinate length `target`, when the
    /// element structure allows the cut.
    pub fn prefix_of_length(&self, w: &FinitePath, target: &[u64]) -> Result<FinitePath> {
        let mut acc = vec![0u64; self.rank];
        let mut elems: Vec<PathElement> = Vec::new();
        for e in &w.elems {
            if acc == target {
                break;
            }
            let rem: Vec<u64> = target.iter().zip(&acc).map(|(t, a)| t.saturating_sub(*a)).collect();
            if target.iter().zip(&acc).any(|(t, a)| a > t) {
                return input("length vector not realizable");
            }
            match e {
                PathElement::D(edges) => {
                    let n = edges.len() as u64;
                    let take = rem.iter().copied().min().unwrap().min(n);
                    if take > 0 {
                        elems.push(PathElement::D(edges[..take as usize].to_vec()));
                    }
                    for a in acc.iter_mut() {
                        *a += take;
                    }
                    if take < n && acc != target {
                        return input("length vector cuts a connecting-graph element unevenly");
                    }
                }
                PathElement::Block { block, coords } => {
                    let mut cut = Vec::new();
                    let mut partial = false;
                    for (ci, p) in coords.iter().enumerate() {
                        let take = (rem[ci]).min(p.len() as u64) as usize;
                        if take < p.len() {
                            partial = true;
                        }
                        cut.push(GraphPath { origin: p.origin, edges: p.edges[..take].to_vec() });
                        acc[ci] += take as u64;
                    }
                    if cut.iter().any(|p| !p.is_empty()) {
                        elems.push(PathElement::Block { block: *block, coords: cut });
                    }
                    if partial && acc != target {
                        return input("length vector not realizable inside block element");
                    }
                }
            }
        }
        if acc != target {
            return input("path too short for requested length");
        }
        self.path(w.origin.clone(), elems)
    }

    /// Refactors mu.x as nu.y where nu has the coordinatewise maximum of the
    /// two stem lengths. Errors when mu2 is not a co-prefix or the truncation
    /// is too shallow to decide.
    pub fn factorize(
        &self,
        mu: &FinitePath,
        x: &TruncatedInfinitePath,
        mu2: &FinitePath,
    ) -> Result<(FinitePath, TruncatedInfinitePath)> {
        let w = self.concat(mu, &x.path)?;
        if !self.is_prefix(mu2, &w) {
            return input("second stem does not refactor the given path");
        }
        let la = self.length(mu);
        let lb = self.length(mu2);
        let m: Vec<u64> = la.iter().zip(&lb).map(|(a, b)| *a.max(b)).collect();
        let nu = self.prefix_of_length(&w, &m)?;
        let y = TruncatedInfinitePath { path: self.quotient(&nu, &w)?, kind: x.kind };
        Ok((nu, y))
    }

    /// All coordinate tuples of one block.
    pub fn block_vertices(&self, block: u32) -> Result<Vec<Vertex>> {
        let mut tuples: Vec<Vec<u32>> = vec![Vec::new()];
        for c in 0..self.rank as u32 {
            let g = self.block_graph(block, c)?;
            let mut next = Vec::new();
            for t in &tuples {
                for v in 0..g.vertices.len() as u32 {
                    let mut t2 = t.clone();
                    t2.push(v);
                    next.push(t2);
                }
            }
            tuples = next;
        }
        Ok(tuples.into_iter().map(|coords| Vertex::Block { block, coords }).collect())
    }

    /// Every vertex of the glued model.
    pub fn vertices(&self) -> Result<Vec<Vertex>> {
        let mut out = Vec::new();
        for b in 0..self.blocks.len() as u32 {
            out.extend(self.block_vertices(b)?);
        }
        for (ci, c) in self.connectors.iter().enumerate() {
            for side in 0..2u8 {
                out.push(Vertex::A { connector: ci as u32, side });
                if c.slots[side as usize] == USlot::Free {
                    out.push(Vertex::FreeU { connector: ci as u32, side });
                }
            }
        }
        Ok(out)
    }

    pub fn display_vertex(&self, v: &Vertex) -> String {
        match v {
            Vertex::Block { block, coords } => {
                let names: Vec<String> = coords
                    .iter()
                    .enumerate()
                    .map(|(ci, &x)| match self.block_graph(*block, ci as u32) {
                        Ok(g) => g.vertices[x as usize].clone(),
                        Err(_) => format!("?{x}"),
                    })
                    .collect();
                if self.is_u_vertex(v) {
                    format!("u[b{block}]")
                } else {
                    format!("(b{block}:{})", names.join(","))
                }
            }
            Vertex::A { connector, side } => format!("a{side}[c{connector}]"),
            Vertex::FreeU { connector, side } => format!("u{side}[c{connector}]"),
        }
    }

    pub fn display_d_edge(&self, e: &DEdge) -> String {
        let k = match e.kind {
            DKind::Alpha => "al",
            DKind::Epsilon => "ep",
            DKind::Beta => "be",
            DKind::Gamma => "ga",
            DKind::Delta => "de",
        };
        if self.connectors.len() > 1 {
            format!("{k}{}[c{}]", e.side, e.connector)
        } else {
            format!("{k}{}", e.side)
        }
    }

    pub fn display_path(&self, p: &FinitePath) -> String {
        if p.elems.is_empty() {
            return self.display_vertex(&p.origin);
        }
        let parts: Vec<String> = p
            .elems
            .iter()
            .map(|e| match e {
                PathElement::D(edges) => edges
                    .iter()
                    .map(|d| self.display_d_edge(d))
                    .collect::<Vec<_>>()
                    .join("."),
                PathElement::Block { block, coords } => {
                    let cs: Vec<String> = coords
                        .iter()
                        .enumerate()
                        .map(|(ci, q)| match self.block_graph(*block, ci as u32) {
                            Ok(g) => {
                                if q.is_empty() {
                                    g.vertices[q.origin as usize].clone()
                                } else {
                                    q.display(g)
                                }
                            }
                            Err(_) => "?".to_string(),
                        })
                        .collect();
                    format!("({})", cs.join(";"))
                }
            })
            .collect();
        parts.join("*")
    }
}

impl TruncatedInfinitePath {
    pub fn validate(&self, m: &HybridModel) -> Result<()> {
        if self.kind == TruncKind::Stopped && !m.is_x_point(&self.path)? {
            return input("stopped truncation is not a boundary point");
        }
        Ok(())
    }
}

/// Ready-made models used by the verification suites.
pub mod examples {
    use super::*;
    use crate::graph::EdgeCount;

    /// Two blocks, each the square of the infinite bouquet, joined by one
    /// connecting-graph copy.
    pub fn two_block_bouquet() -> HybridModel {
        let mk = |name: &str| BlockGraph::Concrete(DirectedGraph::bouquet(name, EdgeCount::Infinite));
        HybridModel::chain(
            2,
            vec![
                Block { graphs: vec![mk("E0"), mk("F0")] },
                Block { graphs: vec![mk("E1"), mk("F1")] },
            ],
            Wiring::default(),
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::examples::two_block_bouquet;
    use super::*;
    use crate::graph::EdgeCount;

    fn u0(m: &HybridModel) -> Vertex {
        m.u_of_block(0).unwrap()
    }

    fn bouquet_step(m: &HybridModel, block: u32, coord: u32, index: u32) -> Step {
        let _ = m;
        Step::Block { block, coord, edge: EdgeRef { bundle: 0, index } }
    }

    #[test]
    fn chain_shapes() {
        let m = two_block_bouquet();
        assert_eq!(m.connectors.len(), 1);
        let mk = |name: &str| {
            BlockGraph::Concrete(DirectedGraph::bouquet(name, EdgeCount::Infinite))
        };
        let single = HybridModel::chain(
            2,
            vec![Block { graphs: vec![mk("E"), mk("F")] }],
            Wiring::default(),
        )
        .unwrap();
        assert_eq!(single.connectors.len(), 1);
        assert_eq!(single.connectors[0].slots[1], USlot::Free);
        assert!(single.vertices().unwrap().iter().any(|v| matches!(v, Vertex::FreeU { .. })));
    }

    #[test]
    fn rank1_constructs_but_no_paths() {
        let mk = |name: &str| {
            BlockGraph::Concrete(DirectedGraph::bouquet(name, EdgeCount::Infinite))
        };
        let m = HybridModel::chain(1, vec![Block { graphs: vec![mk("E")] }], Wiring::default())
            .unwrap();
        assert_eq!(m.vertices().unwrap().len(), 1 + 2 + 1); // tuple, two a's, free u
        let v = m.u_of_block(0).unwrap();
        assert!(m.path(v, vec![]).is_err());
    }

    #[test]
    fn d_wiring_default() {
        let m = two_block_bouquet();
        let al0 = DEdge { connector: 0, kind: DKind::Alpha, side: 0 };
        let ep0 = DEdge { connector: 0, kind: DKind::Epsilon, side: 0 };
        let de1 = DEdge { connector: 0, kind: DKind::Delta, side: 1 };
        assert_eq!(m.d_origin(al0).unwrap(), u0(&m));
        assert_eq!(m.d_target(al0).unwrap(), m.u_of_block(1).unwrap());
        assert_eq!(m.d_target(ep0).unwrap(), Vertex::A { connector: 0, side: 0 });
        assert_eq!(m.d_target(de1).unwrap(), m.u_of_block(1).unwrap());
        let be = DEdge { connector: 0, kind: DKind::Beta, side: 0 };
        assert_eq!(m.d_origin(be).unwrap(), m.d_target(be).unwrap());
    }

    #[test]
    fn single_d_edge_length_is_diagonal() {
        let m = two_block_bouquet();
        let p = m
            .path(
                u0(&m),
                vec![PathElement::D(vec![DEdge { connector: 0, kind: DKind::Alpha, side: 0 }])],
            )
            .unwrap();
        assert_eq!(m.length(&p), vec![1, 1]);
        assert_eq!(p.elems.len(), 1);
    }

    #[test]
    fn block_merge_and_length() {
        let m = two_block_bouquet();
        let p0 = m.vertex_path(u0(&m));
        let p1 = m.append_step(&p0, &bouquet_step(&m, 0, 0, 0)).unwrap();
        let p2 = m.append_step(&p1, &bouquet_step(&m, 0, 1, 1)).unwrap();
        // two coordinate steps merge into one block element of length (1,1)
        assert_eq!(p2.elems.len(), 1);
        assert_eq!(m.length(&p2), vec![1, 1]);
        // order of coordinate steps does not matter: canonical tuple form
        let q1 = m.append_step(&p0, &bouquet_step(&m, 0, 1, 1)).unwrap();
        let q2 = m.append_step(&q1, &bouquet_step(&m, 0, 0, 0)).unwrap();
        assert_eq!(p2, q2);
    }

    #[test]
    fn alternation_of_elements() {
        let m = two_block_bouquet();
        let p0 = m.vertex_path(u0(&m));
        let p1 = m.append_step(&p0, &bouquet_step(&m, 0, 0, 0)).unwrap();
        let p2 = m
            .append_step(&p1, &Step::D(DEdge { connector: 0, kind: DKind::Epsilon, side: 0 }))
            .unwrap();
        let p3 = m
            .append_step(&p2, &Step::D(DEdge { connector: 0, kind: DKind::Beta, side: 0 }))
            .unwrap();
        assert_eq!(p3.elems.len(), 2); // block element then a merged D element
        assert_eq!(m.length(&p3), vec![3, 2]);
    }

    #[test]
    fn prefix_quotient_roundtrip() {
        let m = two_block_bouquet();
        let p0 = m.vertex_path(u0(&m));
        let a = m.append_step(&p0, &bouquet_step(&m, 0, 0, 0)).unwrap();
        let mut b = a.clone();
        for s in [
            bouquet_step(&m, 0, 1, 0),
            Step::D(DEdge { connector: 0, kind: DKind::Alpha, side: 0 }),
            bouquet_step(&m, 1, 0, 1),
        ] {
            b = m.append_step(&b, &s).unwrap();
        }
        assert!(m.is_prefix(&a, &b));
        assert!(!m.is_prefix(&b, &a));
        let r = m.quotient(&a, &b).unwrap();
        assert_eq!(m.concat(&a, &r).unwrap(), b);
    }

    #[test]
    fn coordinatewise_prefix_inside_block_element() {
        let m = two_block_bouquet();
        let p0 = m.vertex_path(u0(&m));
        // (e0, w) is a prefix of (e0, f1) inside one element
        let a = m.append_step(&p0, &bouquet_step(&m, 0, 0, 0)).unwrap();
        let b = m.append_step(&a, &bouquet_step(&m, 0, 1, 1)).unwrap();
        assert!(m.is_prefix(&a, &b));
        let r = m.quotient(&a, &b).unwrap();
        assert_eq!(m.length(&r), vec![0, 1]);
    }

    #[test]
    fn join_of_divergent_coordinates() {
        let m = two_block_bouquet();
        let p0 = m.vertex_path(u0(&m));
        let a = m.append_step(&p0, &bouquet_step(&m, 0, 0, 0)).unwrap();
        let b = m.append_step(&p0, &bouquet_step(&m, 0, 1, 1)).unwrap();
        let j = m.join(&a, &b).unwrap().unwrap();
        assert_eq!(m.length(&j), vec![1, 1]);
        // incompatible: same coordinate, different edges
        let c = m.append_step(&p0, &bouquet_step(&m, 0, 0, 1)).unwrap();
        assert!(m.join(&a, &c).unwrap().is_none());
        // divergence at a D edge is incompatible
        let d1 = m
            .append_step(&p0, &Step::D(DEdge { connector: 0, kind: DKind::Alpha, side: 0 }))
            .unwrap();
        let d2 = m
            .append_step(&p0, &Step::D(DEdge { connector: 0, kind: DKind::Epsilon, side: 0 }))
            .unwrap();
        assert!(m.join(&d1, &d2).unwrap().is_none());
        assert!(m.join(&a, &d1).unwrap().is_none());
    }

    #[test]
    fn x_points() {
        let m = two_block_bouquet();
        let p0 = m.vertex_path(u0(&m));
        assert!(m.is_x_point(&p0).unwrap()); // bare u-vertex, both coordinates emit infinitely
        let a = m.append_step(&p0, &bouquet_step(&m, 0, 0, 0)).unwrap();
        assert!(m.is_x_point(&a).unwrap()); // bouquet termini always infinite emitters
        let d = m
            .append_step(&p0, &Step::D(DEdge { connector: 0, kind: DKind::Epsilon, side: 0 }))
            .unwrap();
        assert!(!m.is_x_point(&d).unwrap()); // ends at an a-vertex
        let d2 = m
            .append_step(&p0, &Step::D(DEdge { connector: 0, kind: DKind::Alpha, side: 0 }))
            .unwrap();
        assert!(m.is_x_point(&d2).unwrap()); // D element ending at a u-vertex
    }

    #[test]
    fn factorization_through_the_join() {
        let m = two_block_bouquet();
        let p0 = m.vertex_path(u0(&m));
        // mu = (e0, w), mu2 = (v, f1); common continuation x = (v, f1) then stop
        let mu = m.append_step(&p0, &bouquet_step(&m, 0, 0, 0)).unwrap();
        let mu2 = m.append_step(&p0, &bouquet_step(&m, 0, 1, 1)).unwrap();
        let tail = m.quotient(&mu, &m.join(&mu, &mu2).unwrap().unwrap()).unwrap();
        let x = TruncatedInfinitePath { path: tail, kind: TruncKind::Stopped };
        let (nu, y) = m.factorize(&mu, &x, &mu2).unwrap();
        assert_eq!(m.length(&nu), vec![1, 1]);
        assert_eq!(m.length(&y.path), vec![0, 0]);
        assert_eq!(m.concat(&nu, &y.path).unwrap(), m.concat(&mu, &x.path).unwrap());
    }

    #[test]
    fn factorize_rejects_non_coprefix() {
        let m = two_block_bouquet();
        let p0 = m.vertex_path(u0(&m));
        let mu = m.append_step(&p0, &bouquet_step(&m, 0, 0, 0)).unwrap();
        let other = m.append_step(&p0, &bouquet_step(&m, 0, 0, 1)).unwrap();
        let x = TruncatedInfinitePath {
            path: m.vertex_path(m.terminus(&mu).unwrap()),
            kind: TruncKind::Stopped,
        };
        assert!(m.factorize(&mu, &x, &other).is_err());
    }
}
