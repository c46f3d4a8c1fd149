//! Finite-dimensional approximants of the model algebra: defect projections,
//! theta projections, the partition of unity with its equivalence classes,
//! Bratteli data between consecutive levels, the triangular inclusion of the
//! block-only subalgebra, and the 2-to-1 class identity at the connector
//! loops.
//!
//! The level-k approximant is spanned by degree-zero words S_mu S_nu* over
//! stems mu, nu of coordinate length at most (k,k) inside the level-k
//! subgraph filtration. Every such word rewrites into an integer combination
//! of canonical matrix units (kind, mu, nu) where the diagonal units are the
//! theta projections of the partition; rewriting only uses Cuntz-Krieger
//! expansion at regular vertices and the defining decompositions of the
//! defect projections, so equal canonical forms mean equal elements.

use std::cell::RefCell;
use std::collections::BTreeMap;

use rand::RngCore;

use crate::algebra::{AlgebraElement, SpanningTerm};
use crate::error::{input, internal, Result};
use crate::graph::{SubgraphFiltration, SubgraphLevel};
use crate::model::{DEdge, DKind, FinitePath, HybridModel, PathElement, Step, Vertex};
use crate::report::Report;

/// Equivalence-class label of a theta projection: (kind, coordinate length
/// of the stem, terminus of the stem).
pub type Label = (u8, Vec<u64>, Vertex);

/// A theta projection before realization: kind 1 is a plain range
/// projection of a maximal stem, kinds 2 and 3 carry the one-sided defects,
/// kind 4 the two-sided defect. `reduced` marks the kind-4 variant at a
/// u-vertex with the connector ranges split off.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ThetaSpec {
    pub kind: u8,
    pub stem: FinitePath,
    pub reduced: bool,
}

#[derive(Debug, Clone)]
pub struct ThetaProjection {
    pub spec: ThetaSpec,
    pub level: usize,
    pub element: AlgebraElement,
}

/// Canonical coordinates of an element of the level-k approximant.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CanonicalForm {
    pub coeffs: BTreeMap<(u8, FinitePath, FinitePath), i64>,
}

impl CanonicalForm {
    fn add(&mut self, key: (u8, FinitePath, FinitePath), c: i64) {
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

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Marker {
    Plain,
    LeftDefect,
    RightDefect,
}

type SuffixKey = (Vertex, [u64; 2], bool);

/// Level-k truncation: one finite subgraph level per block coordinate.
pub struct Truncation<'a> {
    pub model: &'a HybridModel,
    pub level: usize,
    pub levels: Vec<Vec<SubgraphLevel>>,
    saturated: Vec<Vec<Vec<bool>>>,
    suffix_cache: RefCell<BTreeMap<SuffixKey, Vec<(u8, FinitePath)>>>,
}

impl<'a> Truncation<'a> {
    /// Default filtration: level k materializes max(2, k) edges per infinite
    /// bundle.
    pub fn new(model: &'a HybridModel, level: usize) -> Result<Self> {
        let mut levels = Vec::new();
        for b in 0..model.blocks.len() as u32 {
            let mut per = Vec::new();
            for c in 0..model.rank as u32 {
                let g = model.block_graph(b, c)?;
                let filt = SubgraphFiltration::default_for(g, level)?;
                per.push(filt.level(level)?.clone());
            }
            levels.push(per);
        }
        Self::with_levels(model, level, levels)
    }

    pub fn with_levels(
        model: &'a HybridModel,
        level: usize,
        levels: Vec<Vec<SubgraphLevel>>,
    ) -> Result<Self> {
        model.require_rank2()?;
        if level == 0 {
            return input("truncation level must be positive");
        }
        if levels.len() != model.blocks.len() {
            return input("one level set per block required");
        }
        let mut saturated = Vec::new();
        for (b, per) in levels.iter().enumerate() {
            if per.len() != model.rank {
                return input("one subgraph level per coordinate required");
            }
            let mut sat_b = Vec::new();
            for (c, lvl) in per.iter().enumerate() {
                let g = model.block_graph(b as u32, c as u32)?;
                lvl.validate(g)?;
                let mut flags = vec![false; g.vertices.len()];
                for v in lvl.saturated_vertices(g) {
                    flags[v] = true;
                }
                sat_b.push(flags);
            }
            saturated.push(sat_b);
        }
        Ok(Truncation {
            model,
            level,
            levels,
            saturated,
            suffix_cache: RefCell::new(BTreeMap::new()),
        })
    }

    fn level_of(&self, block: u32, coord: u32) -> SubgraphLevel {
        self.levels[block as usize][coord as usize].clone()
    }

    /// Whether the given coordinate of a block vertex is saturated: every
    /// edge of the full graph at that coordinate is already materialized.
    pub fn coord_saturated(&self, v: &Vertex, coord: usize) -> bool {
        match v {
            Vertex::Block { block, coords } => {
                self.saturated[*block as usize][coord][coords[coord] as usize]
            }
            _ => false,
        }
    }

    fn lambda_nonzero(&self, v: &Vertex) -> bool {
        !self.coord_saturated(v, 0)
    }

    fn rho_nonzero(&self, v: &Vertex) -> bool {
        !self.coord_saturated(v, 1)
    }

    fn omega_nonzero(&self, v: &Vertex) -> bool {
        self.lambda_nonzero(v) && self.rho_nonzero(v)
    }

    fn coord_steps(&self, v: &Vertex, coord: u32) -> Result<Vec<Step>> {
        let steps = self.model.block_steps_at(v, &|b, c| self.level_of(b, c))?;
        Ok(steps
            .into_iter()
            .filter(|s| matches!(s, Step::Block { coord: c, .. } if *c == coord))
            .collect())
    }

    fn d_steps(&self, v: &Vertex) -> Result<Vec<Step>> {
        Ok(self.model.d_steps_at(v)?.into_iter().map(Step::D).collect())
    }

    fn budgets(&self, used: &[u64]) -> Result<[u64; 2]> {
        let k = self.level as u64;
        if used[0] > k || used[1] > k {
            return internal("stem length exceeds the truncation level");
        }
        Ok([k - used[0], k - used[1]])
    }

    /// All admissible single steps at the end of a stem, within the level
    /// and the remaining coordinate budgets.
    pub fn steps_within(&self, mu: &FinitePath, block_only: bool) -> Result<Vec<Step>> {
        let t = self.model.terminus(mu)?;
        let b = self.budgets(&self.model.length(mu))?;
        let mut out = Vec::new();
        if b[0] > 0 {
            out.extend(self.coord_steps(&t, 0)?);
        }
        if b[1] > 0 {
            out.extend(self.coord_steps(&t, 1)?);
        }
        if !block_only && b[0] > 0 && b[1] > 0 {
            out.extend(self.d_steps(&t)?);
        }
        Ok(out)
    }

    /// Maximality: no admissible extension inside the truncation.
    pub fn is_maximal(&self, mu: &FinitePath) -> Result<bool> {
        Ok(self.steps_within(mu, false)?.is_empty())
    }

    /// Whether a path stays inside the level-k filtration with length at
    /// most (k,k).
    pub fn contains(&self, p: &FinitePath) -> Result<bool> {
        let l = self.model.length(p);
        let k = self.level as u64;
        if l.iter().any(|&x| x > k) {
            return Ok(false);
        }
        for e in &p.elems {
            if let PathElement::Block { block, coords } = e {
                for (c, gp) in coords.iter().enumerate() {
                    let g = self.model.block_graph(*block, c as u32)?;
                    for edge in &gp.edges {
                        if !self.levels[*block as usize][c].admits(g, *edge) {
                            return Ok(false);
                        }
                    }
                }
            }
        }
        Ok(true)
    }

    /// All stems of the truncation, from every vertex.
    pub fn stems(&self) -> Result<Vec<FinitePath>> {
        let mut out = Vec::new();
        for v in self.model.vertices()? {
            let mut stack = vec![self.model.vertex_path(v)];
            while let Some(p) = stack.pop() {
                for s in self.steps_within(&p, false)? {
                    stack.push(self.model.append_step(&p, &s)?);
                }
                out.push(p);
            }
        }
        Ok(out)
    }

    /// The defect projections at a vertex: complements of the materialized
    /// edge ranges in the first coordinate, the second, both, and both with
    /// the connector ranges also removed (u-vertices only).
    pub fn defect_projections(
        &self,
        x: &Vertex,
    ) -> Result<(AlgebraElement, AlgebraElement, AlgebraElement, AlgebraElement)> {
        if matches!(x, Vertex::A { .. }) {
            return input("defect projections live at block and u-vertices");
        }
        let p = AlgebraElement::term(SpanningTerm::projection(self.model, x.clone()));
        let sum_of = |steps: Vec<Step>| -> Result<AlgebraElement> {
            let mut out = AlgebraElement::zero();
            for s in steps {
                let path = self.model.append_step(&self.model.vertex_path(x.clone()), &s)?;
                out.add_term(SpanningTerm::new(self.model, path.clone(), path)?, 1);
            }
            Ok(out)
        };
        let lambda = p.sub(&sum_of(self.coord_steps(x, 0)?)?);
        let rho = p.sub(&sum_of(self.coord_steps(x, 1)?)?);
        let omega = lambda.multiply(self.model, &rho)?;
        let omega0 = if self.model.is_u_vertex(x) {
            omega.sub(&sum_of(self.d_steps(x)?)?)
        } else {
            omega.clone()
        };
        Ok((lambda, rho, omega, omega0))
    }

    fn defect_for(&self, spec: &ThetaSpec) -> Result<AlgebraElement> {
        let t = self.model.terminus(&spec.stem)?;
        let (lambda, rho, omega, omega0) = self.defect_projections(&t)?;
        Ok(match spec.kind {
            2 => lambda,
            3 => rho,
            4 => {
                if spec.reduced {
                    omega0
                } else {
                    omega
                }
            }
            _ => return internal("defect requested for a plain projection"),
        })
    }

    fn conjugate_pair(
        &self,
        mu: &FinitePath,
        nu: &FinitePath,
        middle: &AlgebraElement,
    ) -> Result<AlgebraElement> {
        let mut out = AlgebraElement::zero();
        for (t, c) in &middle.terms {
            let a = self.model.concat(mu, &t.mu)?;
            let b = self.model.concat(nu, &t.nu)?;
            out.add_term(SpanningTerm::new(self.model, a, b)?, *c);
        }
        Ok(out)
    }

    /// Realizes a theta spec as an element.
    pub fn realize(&self, spec: &ThetaSpec) -> Result<AlgebraElement> {
        if spec.kind == 1 {
            return Ok(AlgebraElement::term(SpanningTerm::new(
                self.model,
                spec.stem.clone(),
                spec.stem.clone(),
            )?));
        }
        let middle = self.defect_for(spec)?;
        self.conjugate_pair(&spec.stem, &spec.stem, &middle)
    }

    /// The canonical matrix unit (kind, mu, nu) as an element.
    pub fn unit_element(&self, kind: u8, mu: &FinitePath, nu: &FinitePath) -> Result<AlgebraElement> {
        if kind == 1 {
            return Ok(AlgebraElement::term(SpanningTerm::new(
                self.model,
                mu.clone(),
                nu.clone(),
            )?));
        }
        let t = self.model.terminus(mu)?;
        let spec = ThetaSpec {
            kind,
            reduced: kind == 4 && self.model.is_u_vertex(&t),
            stem: self.model.vertex_path(t),
        };
        let middle = self.defect_for(&spec)?;
        self.conjugate_pair(mu, nu, &middle)
    }

    /// Validity-checked construction of a theta projection. The kind-4
    /// two-sided defect at a u-vertex is the unreduced one here; the
    /// partition family internally uses the reduced variant there, splitting
    /// the connector ranges into their own stems.
    pub fn theta(&self, kind: u8, mu: FinitePath) -> Result<ThetaProjection> {
        let k = self.level as u64;
        if !self.contains(&mu)? {
            return input("stem lies outside the truncation");
        }
        let l = self.model.length(&mu);
        let t = self.model.terminus(&mu)?;
        match kind {
            1 => {
                if !self.is_maximal(&mu)? {
                    return input("kind-1 stem must be maximal");
                }
            }
            2 => {
                if l[1] != k || l[0] >= k {
                    return input("kind-2 stem needs length (j,k) with j < k");
                }
                if matches!(t, Vertex::A { .. }) || !self.lambda_nonzero(&t) {
                    return input("kind-2 terminus has no first-coordinate defect");
                }
            }
            3 => {
                if l[0] != k || l[1] >= k {
                    return input("kind-3 stem needs length (k,j) with j < k");
                }
                if matches!(t, Vertex::A { .. }) || !self.rho_nonzero(&t) {
                    return input("kind-3 terminus has no second-coordinate defect");
                }
            }
            4 => {
                if l[0] >= k || l[1] >= k {
                    return input("kind-4 stem needs length at most (k-1,k-1)");
                }
                if matches!(t, Vertex::A { .. }) || !self.omega_nonzero(&t) {
                    return input("kind-4 terminus is not doubly defective");
                }
            }
            _ => return input("theta kind must be 1..4"),
        }
        let spec = ThetaSpec { kind, stem: mu, reduced: false };
        let element = self.realize(&spec)?;
        Ok(ThetaProjection { spec, level: self.level, element })
    }

    /// Expands the identity below a base vertex into theta suffixes: the
    /// emitted (kind, suffix) pairs satisfy
    /// P = sum over suffixes of S_suffix (defect) S_suffix*,
    /// where `used` is the coordinate length already consumed by a stem
    /// ending at `base`. With `block_only` the connector edges are never
    /// entered and the kind-4 defect stays unreduced.
    fn expand_suffixes(
        &self,
        base: &Vertex,
        used: [u64; 2],
        block_only: bool,
    ) -> Result<Vec<(u8, FinitePath)>> {
        let key = (base.clone(), used, block_only);
        if let Some(hit) = self.suffix_cache.borrow().get(&key) {
            return Ok(hit.clone());
        }
        let mut out = Vec::new();
        let mut work = vec![(self.model.vertex_path(base.clone()), Marker::Plain)];
        while let Some((mu, marker)) = work.pop() {
            let t = self.model.terminus(&mu)?;
            let l = self.model.length(&mu);
            let b = self.budgets(&[used[0] + l[0], used[1] + l[1]])?;
            let is_u = !block_only && self.model.is_u_vertex(&t);
            match marker {
                Marker::Plain => {
                    let steps = {
                        let mut s = Vec::new();
                        if b[0] > 0 {
                            s.extend(self.coord_steps(&t, 0)?);
                        }
                        if b[1] > 0 {
                            s.extend(self.coord_steps(&t, 1)?);
                        }
                        if !block_only && b[0] > 0 && b[1] > 0 {
                            s.extend(self.d_steps(&t)?);
                        }
                        s
                    };
                    if steps.is_empty() {
                        out.push((1, mu));
                        continue;
                    }
                    if matches!(t, Vertex::A { .. }) {
                        // full Cuntz-Krieger expansion at a regular vertex
                        for s in steps {
                            work.push((self.model.append_step(&mu, &s)?, Marker::Plain));
                        }
                    } else if b[0] > 0 && b[1] > 0 {
                        if self.omega_nonzero(&t) {
                            out.push((4, mu.clone()));
                        }
                        for s in self.coord_steps(&t, 1)? {
                            work.push((self.model.append_step(&mu, &s)?, Marker::LeftDefect));
                        }
                        for s in self.coord_steps(&t, 0)? {
                            work.push((self.model.append_step(&mu, &s)?, Marker::RightDefect));
                        }
                        for e in self.coord_steps(&t, 0)? {
                            let ext = self.model.append_step(&mu, &e)?;
                            for f in self.coord_steps(&self.model.terminus(&ext)?, 1)? {
                                work.push((self.model.append_step(&ext, &f)?, Marker::Plain));
                            }
                        }
                        if is_u {
                            for d in self.d_steps(&t)? {
                                work.push((self.model.append_step(&mu, &d)?, Marker::Plain));
                            }
                        }
                    } else if b[1] == 0 {
                        if self.lambda_nonzero(&t) {
                            out.push((2, mu.clone()));
                        }
                        for s in self.coord_steps(&t, 0)? {
                            work.push((self.model.append_step(&mu, &s)?, Marker::Plain));
                        }
                    } else {
                        if self.rho_nonzero(&t) {
                            out.push((3, mu.clone()));
                        }
                        for s in self.coord_steps(&t, 1)? {
                            work.push((self.model.append_step(&mu, &s)?, Marker::Plain));
                        }
                    }
                }
                Marker::LeftDefect => {
                    // the stem arrived carrying the first-coordinate defect
                    if !self.lambda_nonzero(&t) {
                        continue;
                    }
                    if b[1] == 0 {
                        out.push((2, mu));
                        continue;
                    }
                    if self.omega_nonzero(&t) {
                        out.push((4, mu.clone()));
                    }
                    for s in self.coord_steps(&t, 1)? {
                        work.push((self.model.append_step(&mu, &s)?, Marker::LeftDefect));
                    }
                    if is_u && b[0] > 0 {
                        for d in self.d_steps(&t)? {
                            work.push((self.model.append_step(&mu, &d)?, Marker::Plain));
                        }
                    }
                }
                Marker::RightDefect => {
                    if !self.rho_nonzero(&t) {
                        continue;
                    }
                    if b[0] == 0 {
                        out.push((3, mu));
                        continue;
                    }
                    if self.omega_nonzero(&t) {
                        out.push((4, mu.clone()));
                    }
                    for s in self.coord_steps(&t, 0)? {
                        work.push((self.model.append_step(&mu, &s)?, Marker::RightDefect));
                    }
                    if is_u && b[1] > 0 {
                        for d in self.d_steps(&t)? {
                            work.push((self.model.append_step(&mu, &d)?, Marker::Plain));
                        }
                    }
                }
            }
        }
        out.sort();
        self.suffix_cache.borrow_mut().insert(key, out.clone());
        Ok(out)
    }

    /// The partition family below one vertex.
    pub fn partition_family(&self, x: &Vertex, block_only: bool) -> Result<Vec<ThetaSpec>> {
        let mut out = Vec::new();
        for (kind, stem) in self.expand_suffixes(x, [0, 0], block_only)? {
            let t = self.model.terminus(&stem)?;
            let reduced = kind == 4 && !block_only && self.model.is_u_vertex(&t);
            out.push(ThetaSpec { kind, stem, reduced });
        }
        Ok(out)
    }

    pub fn label_of(&self, spec: &ThetaSpec) -> Result<Label> {
        Ok((spec.kind, self.model.length(&spec.stem), self.model.terminus(&spec.stem)?))
    }

    /// Rewrites an element into canonical matrix-unit coordinates.
    pub fn canonicalize(&self, e: &AlgebraElement) -> Result<CanonicalForm> {
        let mut out = CanonicalForm::default();
        for (term, c) in &e.terms {
            let lm = self.model.length(&term.mu);
            let ln = self.model.length(&term.nu);
            if lm != ln {
                return input("nonzero-degree term in the truncation");
            }
            if !self.contains(&term.mu)? || !self.contains(&term.nu)? {
                return input("term lies outside the truncation");
            }
            let t = self.model.terminus(&term.mu)?;
            for (kind, suffix) in self.expand_suffixes(&t, [lm[0], lm[1]], false)? {
                let a = self.model.concat(&term.mu, &suffix)?;
                let b = self.model.concat(&term.nu, &suffix)?;
                out.add((kind, a, b), *c);
            }
        }
        Ok(out)
    }

    fn singleton(&self, spec: &ThetaSpec) -> CanonicalForm {
        let mut out = CanonicalForm::default();
        out.add((spec.kind, spec.stem.clone(), spec.stem.clone()), 1);
        out
    }

    /// Verifies the partition of unity, orthogonality, minimality, and the
    /// class structure of the theta family.
    pub fn partition_check(&self, rng: &mut dyn RngCore, samples: usize) -> Result<Report> {
        let mut report = Report::new(format!("partition at level {}", self.level));
        let m = self.model;
        let mut family: Vec<(Vertex, ThetaSpec)> = Vec::new();
        for x in m.vertices()? {
            for spec in self.partition_family(&x, false)? {
                family.push((x.clone(), spec));
            }
        }
        report.note(format!("theta family size {}", family.len()));

        // each theta canonicalizes to its own singleton
        let mut self_consistent = true;
        for (_, spec) in &family {
            let canon = self.canonicalize(&self.realize(spec)?)?;
            if canon != self.singleton(spec) {
                self_consistent = false;
            }
        }
        report.check(self_consistent, "each theta is its own canonical unit");

        // partition of unity, vertex by vertex
        let mut partition_ok = true;
        for x in m.vertices()? {
            let p = AlgebraElement::term(SpanningTerm::projection(m, x.clone()));
            let mut expected = CanonicalForm::default();
            for spec in self.partition_family(&x, false)? {
                expected.add((spec.kind, spec.stem.clone(), spec.stem), 1);
            }
            if self.canonicalize(&p)? != expected {
                partition_ok = false;
            }
        }
        report.check(partition_ok, "sum of thetas equals the sum of vertex projections");

        // idempotence and pairwise orthogonality
        let realized: Vec<AlgebraElement> =
            family.iter().map(|(_, s)| self.realize(s)).collect::<Result<_>>()?;
        let mut idem_ok = true;
        for ((_, spec), el) in family.iter().zip(&realized) {
            let sq = self.canonicalize(&el.multiply(m, el)?)?;
            if sq != self.singleton(spec) {
                idem_ok = false;
            }
        }
        report.check(idem_ok, "each theta is idempotent");
        let mut orth_ok = true;
        for i in 0..realized.len() {
            for j in (i + 1)..realized.len() {
                if family[i].0 != family[j].0 {
                    // distinct base vertices: every cross term already
                    // reduces to zero, no need to expand
                    continue;
                }
                let prod = realized[i].multiply(m, &realized[j])?;
                if !self.canonicalize(&prod)?.is_zero() {
                    orth_ok = false;
                }
            }
        }
        report.check(orth_ok, "same-vertex thetas are pairwise orthogonal");

        // minimality against sampled spanning terms
        let stems = self.stems()?;
        let mut by_shape: BTreeMap<(Vec<u64>, Vertex), Vec<&FinitePath>> = BTreeMap::new();
        for s in &stems {
            by_shape.entry((m.length(s), m.terminus(s)?)).or_default().push(s);
        }
        let shapes: Vec<&Vec<&FinitePath>> = by_shape.values().collect();
        let mut minimal_ok = true;
        for _ in 0..samples {
            let group = shapes[(rng.next_u64() % shapes.len() as u64) as usize];
            let a = group[(rng.next_u64() % group.len() as u64) as usize];
            let b = group[(rng.next_u64() % group.len() as u64) as usize];
            let span = AlgebraElement::term(SpanningTerm::new(m, a.clone(), b.clone())?);
            let (_, spec) = &family[(rng.next_u64() % family.len() as u64) as usize];
            let th = self.realize(spec)?;
            let compressed = th.multiply(m, &span)?.multiply(m, &th)?;
            let canon = self.canonicalize(&compressed)?;
            if !canon.is_zero() && canon != self.singleton(spec) {
                minimal_ok = false;
            }
        }
        report.check(minimal_ok, format!("theta compressions of {samples} sampled terms are 0 or the theta"));

        // same-label projections are linked by partial isometries
        let mut classes: BTreeMap<Label, Vec<&ThetaSpec>> = BTreeMap::new();
        for (_, spec) in &family {
            classes.entry(self.label_of(spec)?).or_default().push(spec);
        }
        let mut classes_ok = true;
        for group in classes.values() {
            let rep = group[0];
            for other in group.iter().skip(1) {
                let link = self.unit_element(rep.kind, &rep.stem, &other.stem)?;
                let left = self.canonicalize(&link.multiply(m, &link.adjoint())?)?;
                let right = self.canonicalize(&link.adjoint().multiply(m, &link)?)?;
                if left != self.singleton(rep) || right != self.singleton(other) {
                    classes_ok = false;
                }
            }
        }
        report.check(classes_ok, "same-label thetas are equivalent via explicit links");
        report.note(format!("{} equivalence classes, labels (kind, length, terminus)", classes.len()));

        // sampled matrix-unit law on canonical units: links between
        // different labels would need a unit of mixed kind or length, which
        // cannot exist in the degree-zero span
        let class_list: Vec<(&Label, &Vec<&ThetaSpec>)> = classes.iter().collect();
        let mut units_ok = true;
        for _ in 0..samples {
            let (_, g1) = class_list[(rng.next_u64() % class_list.len() as u64) as usize];
            let (_, g2) = class_list[(rng.next_u64() % class_list.len() as u64) as usize];
            let a = g1[(rng.next_u64() % g1.len() as u64) as usize];
            let b = g1[(rng.next_u64() % g1.len() as u64) as usize];
            let c = g2[(rng.next_u64() % g2.len() as u64) as usize];
            let d = g2[(rng.next_u64() % g2.len() as u64) as usize];
            let u1 = self.unit_element(a.kind, &a.stem, &b.stem)?;
            let u2 = self.unit_element(c.kind, &c.stem, &d.stem)?;
            let prod = self.canonicalize(&u1.multiply(m, &u2)?)?;
            let expected = if a.kind == c.kind && b.stem == c.stem {
                let mut e = CanonicalForm::default();
                e.add((a.kind, a.stem.clone(), d.stem.clone()), 1);
                e
            } else {
                CanonicalForm::default()
            };
            if prod != expected {
                units_ok = false;
            }
        }
        report.check(units_ok, format!("{samples} sampled canonical-unit products follow the matrix-unit law"));
        Ok(report)
    }

    /// Class sizes and inclusion multiplicities into the next level.
    pub fn bratteli(&self, next: &Truncation) -> Result<(BratteliLevel, Report)> {
        let mut report = Report::new(format!(
            "bratteli level {} -> {}",
            self.level, next.level
        ));
        if next.level != self.level + 1 {
            return input("bratteli needs consecutive levels");
        }
        let collect = |t: &Truncation| -> Result<BTreeMap<Label, Vec<ThetaSpec>>> {
            let mut out: BTreeMap<Label, Vec<ThetaSpec>> = BTreeMap::new();
            for x in t.model.vertices()? {
                for spec in t.partition_family(&x, false)? {
                    out.entry(t.label_of(&spec)?).or_default().push(spec);
                }
            }
            Ok(out)
        };
        let here = collect(self)?;
        let there = collect(next)?;
        let next_index: BTreeMap<&Label, usize> =
            there.keys().enumerate().map(|(i, l)| (l, i)).collect();
        let mut edges = Vec::new();
        let mut consistent = true;
        for group in here.values() {
            let mut row: Option<Vec<u64>> = None;
            for spec in group {
                let canon = next.canonicalize(&self.realize(spec)?)?;
                let mut counts = vec![0u64; there.len()];
                for ((kind, a, b), c) in &canon.coeffs {
                    if a != b || *c != 1 {
                        return internal("level theta does not decompose into next-level units");
                    }
                    let t = next.model.terminus(a)?;
                    let reduced = *kind == 4 && next.model.is_u_vertex(&t);
                    let spec2 = ThetaSpec { kind: *kind, stem: a.clone(), reduced };
                    let label = next.label_of(&spec2)?;
                    let idx = next_index
                        .get(&label)
                        .ok_or_else(|| crate::error::Error::Internal("unknown next-level class".into()))?;
                    counts[*idx] += 1;
                }
                match &row {
                    None => row = Some(counts),
                    Some(r) => {
                        if r != &counts {
                            consistent = false;
                        }
                    }
                }
            }
            edges.push(row.unwrap_or_default());
        }
        report.check(consistent, "inclusion multiplicities agree within each class");
        // conservation: every next-level unit is hit exactly once
        let mut conserved = true;
        for (j, label) in there.keys().enumerate() {
            let total: u64 = here
                .values()
                .enumerate()
                .map(|(i, g)| g.len() as u64 * edges[i][j])
                .sum();
            if total != there[label].len() as u64 {
                conserved = false;
            }
        }
        report.check(conserved, "class sizes are conserved through the inclusion");
        let level = BratteliLevel {
            classes: here.iter().map(|(l, g)| (l.clone(), g.len())).collect(),
            next_classes: there.iter().map(|(l, g)| (l.clone(), g.len())).collect(),
            edges,
        };
        Ok((level, report))
    }

    /// Inclusion of the block-only subalgebra: in bases ordered by stem
    /// length the matrix is lower triangular with unit diagonal.
    pub fn inclusion_triangularity(&self) -> Result<Report> {
        let mut report = Report::new(format!("block-only inclusion at level {}", self.level));
        let m = self.model;
        let mut block_classes: BTreeMap<Label, Vec<ThetaSpec>> = BTreeMap::new();
        for b in 0..m.blocks.len() as u32 {
            for x in m.block_vertices(b)? {
                for spec in self.partition_family(&x, true)? {
                    block_classes.entry(self.label_of(&spec)?).or_default().push(spec);
                }
            }
        }
        let mut full_classes: BTreeMap<Label, usize> = BTreeMap::new();
        for x in m.vertices()? {
            for spec in self.partition_family(&x, false)? {
                *full_classes.entry(self.label_of(&spec)?).or_default() += 1;
            }
        }
        // order both sides by stem length first: any linear extension of the
        // componentwise order keeps longer-stem contributions strictly below
        // the diagonal
        let sort_key = |l: &Label| (l.1.clone(), l.0, format!("{:?}", l.2));
        let mut rows: Vec<Label> = block_classes.keys().cloned().collect();
        rows.sort_by_key(&sort_key);
        let mut cols: Vec<Label> = full_classes.keys().cloned().collect();
        cols.sort_by_key(&sort_key);
        let col_index: BTreeMap<&Label, usize> = cols.iter().enumerate().map(|(i, l)| (l, i)).collect();
        report.note(format!(
            "{} block-only classes, {} full classes",
            rows.len(),
            cols.len()
        ));

        let mut matrix = vec![vec![0i64; cols.len()]; rows.len()];
        let mut consistent = true;
        for (ri, label) in rows.iter().enumerate() {
            let mut row: Option<Vec<i64>> = None;
            for spec in &block_classes[label] {
                let canon = self.canonicalize(&self.realize(spec)?)?;
                let mut counts = vec![0i64; cols.len()];
                for ((kind, a, b), c) in &canon.coeffs {
                    if a != b || *c != 1 {
                        return internal("block theta does not decompose into full units");
                    }
                    let t = m.terminus(a)?;
                    let reduced = *kind == 4 && m.is_u_vertex(&t);
                    let spec2 = ThetaSpec { kind: *kind, stem: a.clone(), reduced };
                    let lab = self.label_of(&spec2)?;
                    counts[col_index[&lab]] += 1;
                }
                match &row {
                    None => row = Some(counts),
                    Some(r) => {
                        if r != &counts {
                            consistent = false;
                        }
                    }
                }
            }
            matrix[ri] = row.unwrap_or_default();
        }
        report.check(consistent, "decompositions agree within each block-only class");

        let mut diagonal_ok = true;
        let mut triangular_ok = true;
        for (ri, label) in rows.iter().enumerate() {
            for (ci, col) in cols.iter().enumerate() {
                let v = matrix[ri][ci];
                if v == 0 {
                    continue;
                }
                if col == label {
                    if v != 1 {
                        diagonal_ok = false;
                    }
                } else {
                    // off the diagonal only strictly longer stems may appear
                    let longer = col.1.iter().zip(&label.1).all(|(a, b)| a >= b)
                        && col.1 != label.1;
                    if !longer {
                        triangular_ok = false;
                    }
                }
            }
        }
        report.check(diagonal_ok, "unit entries on the diagonal");
        report.check(triangular_ok, "off-diagonal entries only at strictly longer stems");

        // determinant of the square submatrix on the block-only labels
        let square: Vec<Vec<i64>> = rows
            .iter()
            .enumerate()
            .map(|(ri, _)| {
                rows.iter()
                    .map(|l| matrix[ri][*col_index.get(l).expect("block label in full basis")])
                    .collect()
            })
            .collect();
        let mut det_ok = triangular_ok && diagonal_ok;
        let mut det = 1i64;
        for (i, row) in square.iter().enumerate() {
            det *= row[i];
            for (j, &v) in row.iter().enumerate() {
                // triangular in the length order: with both bases ascending,
                // everything on the short side of the diagonal vanishes
                if j < i && v != 0 {
                    det_ok = false;
                }
            }
        }
        report.check(det_ok && det == 1, format!("determinant {det} of the square inclusion matrix"));
        Ok(report)
    }

    /// The 2-to-1 identity at the connector loops: expanding the range
    /// projection of beta^m by one Cuntz-Krieger step at the loop vertex
    /// gives three stems of which two share a class.
    pub fn o2_identity(&self, m_loops: usize) -> Result<Report> {
        let mut report = Report::new(format!("loop identity at m = {m_loops}"));
        let model = self.model;
        if self.level < m_loops + 1 {
            return input("truncation level too small for the loop identity");
        }
        let beta = DEdge { connector: 0, kind: DKind::Beta, side: 0 };
        let gamma = DEdge { connector: 0, kind: DKind::Gamma, side: 0 };
        let delta = DEdge { connector: 0, kind: DKind::Delta, side: 0 };
        let a = model.d_origin(beta)?;
        if model.d_target(beta)? != a || model.d_target(gamma)? != a {
            return input("wiring without loops at the middle vertex");
        }
        let stem = |edges: Vec<DEdge>| -> Result<FinitePath> {
            if edges.is_empty() {
                return Ok(model.vertex_path(a.clone()));
            }
            model.path(a.clone(), vec![PathElement::D(edges)])
        };
        let base = stem(vec![beta; m_loops])?;
        let exts: Vec<FinitePath> = [beta, gamma, delta]
            .iter()
            .map(|d| {
                let mut edges = vec![beta; m_loops];
                edges.push(*d);
                stem(edges)
            })
            .collect::<Result<_>>()?;
        let lhs = AlgebraElement::term(SpanningTerm::new(model, base.clone(), base.clone())?);
        let mut rhs = AlgebraElement::zero();
        for e in &exts {
            rhs.add_term(SpanningTerm::new(model, e.clone(), e.clone())?, 1);
        }
        let equal = self.canonicalize(&lhs)? == self.canonicalize(&rhs)?;
        report.check(equal, "one-step expansion of the loop projection");

        let label = |p: &FinitePath| -> Result<crate::ktheory::ClassLabel> {
            Ok(crate::ktheory::ClassLabel {
                kind: 1,
                ell: model.length(p),
                origin: a.clone(),
                terminus: model.terminus(p)?,
            })
        };
        let lb = label(&exts[0])?;
        let lg = label(&exts[1])?;
        let ld = label(&exts[2])?;
        report.check(lb == lg, "loop extensions share one class");
        report.check(ld != lb, "exit extension lands in a different class");
        report.note(format!(
            "class identity: [{}] = 2 [{}] + [{}]",
            model.display_path(&base),
            model.display_path(&exts[0]),
            model.display_path(&exts[2])
        ));
        Ok(report)
    }
}

/// One level of Bratteli data: classes at the level, classes above, and the
/// inclusion multiplicities.
#[derive(Debug, Clone)]
pub struct BratteliLevel {
    pub classes: Vec<(Label, usize)>,
    pub next_classes: Vec<(Label, usize)>,
    pub edges: Vec<Vec<u64>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::examples::two_block_bouquet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn defects_are_idempotent() {
        let m = two_block_bouquet();
        let t = Truncation::new(&m, 1).unwrap();
        let u0 = m.u_of_block(0).unwrap();
        let (l, r, o, o0) = t.defect_projections(&u0).unwrap();
        for d in [l.clone(), r.clone(), o.clone(), o0.clone()] {
            assert_eq!(d.multiply(&m, &d).unwrap(), d);
        }
        // the two-sided defect swallows both one-sided ones
        assert_eq!(l.multiply(&m, &r).unwrap(), o);
        assert!(matches!(
            t.defect_projections(&Vertex::A { connector: 0, side: 0 }),
            Err(_)
        ));
    }

    #[test]
    fn partition_level_one() {
        let m = two_block_bouquet();
        let t = Truncation::new(&m, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let report = t.partition_check(&mut rng, 100).unwrap();
        assert!(report.passed(), "{}", report.render());
    }

    #[test]
    fn partition_level_two() {
        let m = two_block_bouquet();
        let t = Truncation::new(&m, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let report = t.partition_check(&mut rng, 60).unwrap();
        assert!(report.passed(), "{}", report.render());
    }

    #[test]
    fn theta_validity() {
        let m = two_block_bouquet();
        let t = Truncation::new(&m, 1).unwrap();
        let u0 = m.u_of_block(0).unwrap();
        // the bare u-vertex is not maximal at level 1
        assert!(t.theta(1, m.vertex_path(u0.clone())).is_err());
        assert!(t.theta(4, m.vertex_path(u0)).is_ok());
    }

    #[test]
    fn bratteli_one_to_two() {
        let m = two_block_bouquet();
        let t1 = Truncation::new(&m, 1).unwrap();
        let t2 = Truncation::new(&m, 2).unwrap();
        let (level, report) = t1.bratteli(&t2).unwrap();
        assert!(report.passed(), "{}", report.render());
        assert!(!level.classes.is_empty());
    }

    #[test]
    fn triangular_inclusion() {
        let m = two_block_bouquet();
        for k in [1, 2] {
            let t = Truncation::new(&m, k).unwrap();
            let report = t.inclusion_triangularity().unwrap();
            assert!(report.passed(), "{}", report.render());
        }
    }

    #[test]
    fn loop_identity() {
        let m = two_block_bouquet();
        for mm in 0..2 {
            let t = Truncation::new(&m, mm + 1).unwrap();
            let report = t.o2_identity(mm).unwrap();
            assert!(report.passed(), "{}", report.render());
        }
    }
}
