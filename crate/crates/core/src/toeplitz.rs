//! Finite-level core of the Toeplitz algebra of an ordinary finite graph,
//! relative to a saturation set S of vertices where the full Cuntz-Krieger
//! relation is imposed.
//!
//! Elements are integer combinations of S_p S_q* with |p| = |q| and
//! t(p) = t(q). The canonical basis at level k consists of the dressed units
//! S_p xi_{t(p)} S_q* for |p| < k, t(p) not in S, together with the plain
//! units S_p S_q* for |p| = k, where xi_y = P_y - sum_e S_e S_e*.

use std::collections::BTreeMap;

use crate::error::{input, internal, Result};
use crate::graph::{DirectedGraph, EdgeCount, GraphPath, SubgraphLevel};

/// Dressing of a canonical unit. `Xi` units carry the defect projection of
/// their terminus; `Plain` units sit at the top length k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Dress {
    Xi,
    Plain,
}

pub type UnitKey = (GraphPath, GraphPath, Dress);

/// Element in canonical coordinates at the core's level.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoreElement {
    pub coeffs: BTreeMap<UnitKey, i64>,
}

impl CoreElement {
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn add(&mut self, key: UnitKey, c: i64) {
        use std::collections::btree_map::Entry;
        match self.coeffs.entry(key) {
            Entry::Vacant(e) => {
                if c != 0 {
                    e.insert(c);
                }
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == 0 {
                    e.remove();
                }
            }
        }
    }

    /// Some integer c with self == c * other, if one exists.
    pub fn multiple_of(&self, other: &CoreElement) -> Option<i64> {
        if self.is_zero() {
            return Some(0);
        }
        if other.is_zero() || self.coeffs.len() != other.coeffs.len() {
            return None;
        }
        let mut ratio = None;
        for ((ka, a), (kb, b)) in self.coeffs.iter().zip(other.coeffs.iter()) {
            if ka != kb || a % b != 0 {
                return None;
            }
            let r = a / b;
            if *ratio.get_or_insert(r) != r {
                return None;
            }
        }
        ratio
    }
}

/// Raw element: integer combination of undressed S_p S_q* of equal lengths.
#[derive(Debug, Clone, Default)]
pub struct RawElement {
    pub coeffs: BTreeMap<(GraphPath, GraphPath), i64>,
}

impl RawElement {
    pub fn term(p: GraphPath, q: GraphPath) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert((p, q), 1);
        RawElement { coeffs }
    }

    fn add(&mut self, key: (GraphPath, GraphPath), c: i64) {
        use std::collections::btree_map::Entry;
        match self.coeffs.entry(key) {
            Entry::Vacant(e) => {
                if c != 0 {
                    e.insert(c);
                }
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if *e.get() == 0 {
                    e.remove();
                }
            }
        }
    }

    pub fn adjoint(&self) -> RawElement {
        let mut out = RawElement::default();
        for ((p, q), c) in &self.coeffs {
            out.add((q.clone(), p.clone()), *c);
        }
        out
    }
}

/// Class label of a canonical diagonal unit: (depth j, terminus y). Lemma-level
/// equivalence is exactly equality of labels.
pub type CoreClass = (usize, usize);

#[derive(Debug, Clone)]
pub struct DiagonalUnit {
    pub path: GraphPath,
    pub dress: Dress,
    pub class: CoreClass,
}

/// Level-k core of the Toeplitz algebra of a finite graph, with full CK
/// relations at the vertices of `saturated`.
#[derive(Debug, Clone)]
pub struct ToeplitzCore {
    pub graph: DirectedGraph,
    pub saturated: Vec<bool>,
    pub level: usize,
    caps: SubgraphLevel,
}

impl ToeplitzCore {
    pub fn new(graph: DirectedGraph, s: &[usize], level: usize) -> Result<Self> {
        if level == 0 {
            return input("toeplitz core level must be positive");
        }
        for b in &graph.bundles {
            if b.count == EdgeCount::Infinite {
                return input(format!("graph {} has an infinite bundle", graph.name));
            }
        }
        let mut saturated = vec![false; graph.vertices.len()];
        for &v in s {
            if v >= graph.vertices.len() {
                return input("saturation vertex out of range");
            }
            if graph.is_sink(v) {
                return input(format!(
                    "saturation set contains the sink {}",
                    graph.vertices[v]
                ));
            }
            saturated[v] = true;
        }
        let caps = SubgraphLevel::full_for(&graph, 0);
        Ok(ToeplitzCore { graph, saturated, level, caps })
    }

    fn edges_at(&self, v: usize) -> Vec<crate::graph::EdgeRef> {
        self.caps.edges_at(&self.graph, v)
    }

    /// All paths of exactly `len` edges.
    pub fn paths(&self, len: usize) -> Vec<GraphPath> {
        self.graph.paths_of_length(None, len, &self.caps)
    }

    /// The diagonal family N^(k): xi-dressed units below the top length at
    /// unsaturated termini, plain units at the top.
    pub fn diagonal_units(&self) -> Vec<DiagonalUnit> {
        let mut out = Vec::new();
        for j in 0..self.level {
            for p in self.paths(j) {
                let y = p.terminus(&self.graph);
                if !self.saturated[y] {
                    out.push(DiagonalUnit { path: p, dress: Dress::Xi, class: (j, y) });
                }
            }
        }
        for p in self.paths(self.level) {
            let y = p.terminus(&self.graph);
            out.push(DiagonalUnit { path: p, dress: Dress::Plain, class: (self.level, y) });
        }
        out
    }

    pub fn unit_element(&self, u: &DiagonalUnit) -> CoreElement {
        let mut out = CoreElement::default();
        out.add((u.path.clone(), u.path.clone(), u.dress), 1);
        out
    }

    /// Expand a raw S_p S_q* into canonical coordinates by telescoping
    /// P_y = xi_y + sum_e S_e S_e* (xi_y = 0 at saturated y) down to level k.
    pub fn canonicalize(&self, raw: &RawElement) -> Result<CoreElement> {
        let mut out = CoreElement::default();
        for ((p, q), c) in &raw.coeffs {
            if p.len() != q.len() {
                return internal("raw toeplitz term with unequal lengths");
            }
            if p.len() > self.level {
                return internal("raw toeplitz term beyond the core level");
            }
            let mut stack = vec![(p.clone(), q.clone())];
            while let Some((p, q)) = stack.pop() {
                if p.len() == self.level {
                    out.add((p, q, Dress::Plain), *c);
                    continue;
                }
                let y = p.terminus(&self.graph);
                if !self.saturated[y] {
                    out.add((p.clone(), q.clone(), Dress::Xi), *c);
                }
                for e in self.edges_at(y) {
                    let mut pe = p.clone();
                    pe.edges.push(e);
                    let mut qe = q.clone();
                    qe.edges.push(e);
                    stack.push((pe, qe));
                }
            }
        }
        Ok(out)
    }

    /// Raw product, using only path comparability: S_q* S_r collapses to the
    /// remainder when one path extends the other and vanishes otherwise.
    pub fn multiply_raw(&self, a: &RawElement, b: &RawElement) -> RawElement {
        let mut out = RawElement::default();
        for ((p, q), c) in &a.coeffs {
            for ((r, s), d) in &b.coeffs {
                if q.is_prefix_of(r) {
                    let tail = q.quotient(r, &self.graph);
                    let mut pe = p.clone();
                    pe.edges.extend_from_slice(&tail.edges);
                    out.add((pe, s.clone()), c * d);
                } else if r.is_prefix_of(q) {
                    let tail = r.quotient(q, &self.graph);
                    let mut se = s.clone();
                    se.edges.extend_from_slice(&tail.edges);
                    out.add((p.clone(), se), c * d);
                }
            }
        }
        out
    }

    fn unit_raw(&self, u: &DiagonalUnit) -> RawElement {
        let mut out = RawElement::term(u.path.clone(), u.path.clone());
        if u.dress == Dress::Xi {
            for e in self.edges_at(u.path.terminus(&self.graph)) {
                let mut pe = u.path.clone();
                pe.edges.push(e);
                out.add((pe.clone(), pe), -1);
            }
        }
        out
    }

    /// Pairwise products of distinct diagonal units all vanish.
    pub fn check_orthogonality(&self) -> Result<()> {
        let units = self.diagonal_units();
        let raws: Vec<RawElement> = units.iter().map(|u| self.unit_raw(u)).collect();
        for (i, a) in raws.iter().enumerate() {
            for (j, b) in raws.iter().enumerate().skip(i + 1) {
                let prod = self.canonicalize(&self.multiply_raw(a, b))?;
                if !prod.is_zero() {
                    return internal(format!(
                        "diagonal units {} and {} not orthogonal",
                        units[i].path.display(&self.graph),
                        units[j].path.display(&self.graph)
                    ));
                }
            }
        }
        Ok(())
    }

    /// Each diagonal unit u is idempotent and compresses every spanning term
    /// S_r S_s* to an integer multiple of u.
    pub fn check_minimality(
        &self,
        sample: Option<&mut dyn FnMut(usize) -> usize>,
    ) -> Result<()> {
        let units = self.diagonal_units();
        let mut spanning: Vec<(GraphPath, GraphPath)> = Vec::new();
        for j in 0..=self.level {
            let paths = self.paths(j);
            for r in &paths {
                for s in &paths {
                    if r.terminus(&self.graph) == s.terminus(&self.graph) {
                        spanning.push((r.clone(), s.clone()));
                    }
                }
            }
        }
        let picks: Vec<usize> = match sample {
            None => (0..spanning.len()).collect(),
            Some(f) => (0..200.min(spanning.len())).map(|_| f(spanning.len())).collect(),
        };
        for u in &units {
            let raw = self.unit_raw(u);
            let canon = self.canonicalize(&raw)?;
            let square = self.canonicalize(&self.multiply_raw(&raw, &raw))?;
            if square != canon {
                return internal("diagonal unit is not idempotent");
            }
            for &i in &picks {
                let (r, s) = &spanning[i];
                let mid = RawElement::term(r.clone(), s.clone());
                let compressed = self.multiply_raw(&self.multiply_raw(&raw, &mid), &raw);
                let compressed = self.canonicalize(&compressed)?;
                match compressed.multiple_of(&canon) {
                    Some(0) | Some(1) => {}
                    _ => {
                        return internal(format!(
                            "compression of {}|{} by {} is not 0 or the unit itself",
                            r.display(&self.graph),
                            s.display(&self.graph),
                            u.path.display(&self.graph)
                        ))
                    }
                }
            }
        }
        Ok(())
    }

    /// The diagonal family sums to sum_y P_y.
    pub fn check_sum(&self) -> Result<()> {
        let mut total = CoreElement::default();
        for u in self.diagonal_units() {
            let c = self.canonicalize(&self.unit_raw(&u))?;
            for (k, v) in c.coeffs {
                total.add(k, v);
            }
        }
        let mut identity = RawElement::default();
        for y in 0..self.graph.vertices.len() {
            identity.add((GraphPath::vertex(y), GraphPath::vertex(y)), 1);
        }
        let identity = self.canonicalize(&identity)?;
        if total != identity {
            return internal("diagonal family does not sum to the identity");
        }
        Ok(())
    }

    /// |N^(k)| = sum_{j<k} #{p in E^j : t(p) not in S} + #E^k.
    pub fn check_count(&self) -> Result<()> {
        let mut expected = 0usize;
        for j in 0..self.level {
            expected += self
                .paths(j)
                .iter()
                .filter(|p| !self.saturated[p.terminus(&self.graph)])
                .count();
        }
        expected += self.paths(self.level).len();
        let got = self.diagonal_units().len();
        if got != expected {
            return internal(format!("basis count {got}, formula gives {expected}"));
        }
        Ok(())
    }

    /// Same-class units are equivalent: for p, q of depth j with a common
    /// unsaturated terminus, u = S_p (xi) S_q* satisfies u*u, uu* = the units.
    pub fn check_equivalences(&self) -> Result<()> {
        let units = self.diagonal_units();
        let mut by_class: BTreeMap<CoreClass, Vec<&DiagonalUnit>> = BTreeMap::new();
        for u in &units {
            by_class.entry(u.class).or_default().push(u);
        }
        for group in by_class.values() {
            let first = group[0];
            for other in group.iter().skip(1) {
                let mut link = RawElement::term(first.path.clone(), other.path.clone());
                if first.dress == Dress::Xi {
                    for e in self.edges_at(first.path.terminus(&self.graph)) {
                        let mut pe = first.path.clone();
                        pe.edges.push(e);
                        let mut qe = other.path.clone();
                        qe.edges.push(e);
                        link.add((pe, qe), -1);
                    }
                }
                let uu = self.canonicalize(&self.multiply_raw(&link, &link.adjoint()))?;
                let vv = self.canonicalize(&self.multiply_raw(&link.adjoint(), &link))?;
                if uu != self.canonicalize(&self.unit_raw(first))?
                    || vv != self.canonicalize(&self.unit_raw(other))?
                {
                    return internal("same-class units not linked by a partial isometry");
                }
            }
        }
        Ok(())
    }

    /// xi_y S_e = 0 for every edge e leaving y: the annihilation fact behind
    /// orthogonality.
    pub fn check_annihilation(&self) -> Result<()> {
        for y in 0..self.graph.vertices.len() {
            if self.saturated[y] || self.level < 1 {
                continue;
            }
            let unit = DiagonalUnit { path: GraphPath::vertex(y), dress: Dress::Xi, class: (0, y) };
            let xi = self.unit_raw(&unit);
            for e in self.edges_at(y) {
                let edge = RawElement::term(
                    GraphPath { origin: y as u32, edges: vec![e] },
                    GraphPath { origin: y as u32, edges: vec![e] },
                );
                let prod = self.canonicalize(&self.multiply_raw(&xi, &edge))?;
                if !prod.is_zero() {
                    return internal("xi does not annihilate its own edges");
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::EdgeCount;

    fn loops(name: &str, n: u32) -> DirectedGraph {
        DirectedGraph::bouquet(name, EdgeCount::Finite(n))
    }

    #[test]
    fn two_loop_level_one_basis() {
        // One vertex, two loops, S empty, k = 1: xi_v plus the two S_e S_e*.
        let core = ToeplitzCore::new(loops("C2", 2), &[], 1).unwrap();
        let units = core.diagonal_units();
        assert_eq!(units.len(), 3);
        core.check_orthogonality().unwrap();
        core.check_minimality(None).unwrap();
        core.check_sum().unwrap();
        core.check_count().unwrap();
        core.check_equivalences().unwrap();
        core.check_annihilation().unwrap();
    }

    #[test]
    fn saturated_everywhere_leaves_top_level_only() {
        let core = ToeplitzCore::new(loops("C2", 2), &[0], 2).unwrap();
        let units = core.diagonal_units();
        assert!(units.iter().all(|u| u.dress == Dress::Plain));
        assert_eq!(units.len(), 4);
        core.check_sum().unwrap();
        core.check_count().unwrap();
    }

    #[test]
    fn sink_in_saturation_rejected() {
        let g = DirectedGraph::new(
            "sink",
            vec!["v".into(), "w".into()],
            vec![("e".into(), "v".into(), "w".into(), EdgeCount::Finite(1))],
            None,
        )
        .unwrap();
        assert!(ToeplitzCore::new(g, &[1], 1).is_err());
    }

    #[test]
    fn two_vertex_mixed_saturation() {
        let g = DirectedGraph::new(
            "m",
            vec!["v".into(), "w".into()],
            vec![
                ("e".into(), "v".into(), "w".into(), EdgeCount::Finite(2)),
                ("f".into(), "w".into(), "v".into(), EdgeCount::Finite(1)),
                ("g".into(), "v".into(), "v".into(), EdgeCount::Finite(1)),
            ],
            None,
        )
        .unwrap();
        for k in 1..=3 {
            for s in [vec![], vec![0], vec![1], vec![0, 1]] {
                let core = ToeplitzCore::new(g.clone(), &s, k).unwrap();
                core.check_orthogonality().unwrap();
                core.check_minimality(None).unwrap();
                core.check_sum().unwrap();
                core.check_count().unwrap();
                core.check_equivalences().unwrap();
                core.check_annihilation().unwrap();
            }
        }
    }
}
