//! Gaifman normal form for the first-order fragment with finite-carrier summation
//! equations.
//!
//! The construction is by induction on the formula. Atoms are 0-local (distance atoms are
//! local up to their bound). For `∃y ψ` and `s = Σ w(ȳ).ψ`, the normal form of `ψ` is
//! first split on the truth values of its sentence leaves (Shannon expansion), leaving a
//! Boolean combination `λ` of local formulas with some radius `r`. Then:
//!
//! * **`∃y λ`** with no other free variable is a basic-local sentence with one witness.
//!   Otherwise, with `ρ = 2r+1`, split into a near part `∃y(dist(x̄,y) ≤ ρ ∧ λ)` (local)
//!   and a far part. In the far part `λ ⟺ ⋁ α_i(x̄) ∧ β_i(y)` (local decomposition), and
//!   `∃y(β(y) ∧ dist(x̄,y) > ρ)` is equivalent to
//!   `NearFar ∨ ⋁_{p=0..k} (LocScat_p ∧ ¬LocScat_{p+1} ∧ scat_{p+1})`, where `scat_m`
//!   asserts `m` witnesses of `β` pairwise more than `2ρ` apart, `LocScat_p(x̄)` asserts
//!   `p` such witnesses within distance `ρ` of `x̄`, and `NearFar(x̄)` asserts a witness
//!   at distance in `(ρ, 3ρ]`. (Among witnesses within `ρ` of `x̄` at most `k = |x̄|` can be
//!   pairwise far apart; if no witness lies in the annulus, a witness beyond `3ρ` exists
//!   iff the maximal local scattered set can be extended by one.)
//! * **`s = Σ w(ȳ).λ`** with no other free variable is a local aggregation sentence.
//!   Otherwise, with `ρ' = 2r+2`, nonzero-weight tuples lie entirely near or entirely far
//!   (components of a tuple with nonzero weight are pairwise adjacent). The near sum is a
//!   local term; on far tuples the local decomposition of `λ` applies, its `α`s partitioning
//!   the structure, and for each cell the far sum equals the total `Σ w(ȳ).β` (a local
//!   aggregation sentence) minus the near sum of `β`.

use std::collections::HashMap;

use crate::algebra::{add_assign, CarrierValue};
use crate::error::{Error, Result};
use crate::logic::{analyze, evaluate_term, rename_apart, Expression, Formula, Fragment, Fresh, Term, Var, WeightApp};
use crate::structure::{Signature, StructureBuilder};

use super::fv::{and_pairs, not_pairs, or_pairs, refine_left, Decomposer, Pair};
use super::{dist_tuple_le, localize, quantifier_free_radius, Caps};

/// Leaf of a Gaifman normal form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GnfLeaf {
    /// A formula that is `radius`-local around its free variables.
    Local { formula: Formula, radius: usize },
    /// `∃v1…∃vℓ (⋀_{i<j} dist(vi,vj) > 2·radius ∧ ⋀_i body(vi))`, `body` being
    /// `radius`-local around `var`.
    BasicLocal { count: usize, radius: usize, var: Var, body: Formula },
    /// `value = Σ weight(ȳ). body(ȳ)` with `body` `radius`-local around `ȳ`.
    LocalAgg { value: CarrierValue, weight: WeightApp, body: Formula, radius: usize },
}

/// Boolean combination of leaves.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GnfNode {
    Const(bool),
    Leaf(GnfLeaf),
    Not(Box<GnfNode>),
    And(Vec<GnfNode>),
    Or(Vec<GnfNode>),
}

/// A formula in Gaifman normal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaifmanNF {
    pub root: GnfNode,
    pub free_vars: Vec<Var>,
}

impl GnfLeaf {
    /// The leaf as a formula.
    pub fn to_formula(&self) -> Formula {
        match self {
            GnfLeaf::Local { formula, .. } => formula.clone(),
            GnfLeaf::BasicLocal { count, radius, var, body } => {
                let mut fresh = Fresh::for_formula(body);
                fresh.reserve(var);
                let vs: Vec<Var> = (0..*count).map(|_| fresh.var()).collect();
                let mut parts = Vec::new();
                for i in 0..vs.len() {
                    for j in i + 1..vs.len() {
                        parts.push(Formula::not(Formula::dist_le(&vs[i], &vs[j], 2 * radius)));
                    }
                }
                for v in &vs {
                    parts.push(body.rename_free(&HashMap::from([(var.clone(), v.clone())])));
                }
                let mut f = Formula::and(parts);
                for v in vs.iter().rev() {
                    f = Formula::Exists(v.clone(), Box::new(f));
                }
                f
            }
            GnfLeaf::LocalAgg { value, weight, body, .. } => Formula::SumEq(value.clone(), weight.clone(), Box::new(body.clone())),
        }
    }

    /// The locality radius of the leaf.
    pub fn radius(&self) -> usize {
        match self {
            GnfLeaf::Local { radius, .. } | GnfLeaf::BasicLocal { radius, .. } | GnfLeaf::LocalAgg { radius, .. } => *radius,
        }
    }

    /// `true` for basic-local and local aggregation sentences.
    pub fn is_sentence(&self) -> bool {
        !matches!(self, GnfLeaf::Local { .. })
    }

    /// Short tag naming the leaf kind.
    pub fn kind(&self) -> &'static str {
        match self {
            GnfLeaf::Local { .. } => "local",
            GnfLeaf::BasicLocal { .. } => "basic-local",
            GnfLeaf::LocalAgg { .. } => "local-aggregation",
        }
    }
}

impl GnfNode {
    fn not(n: GnfNode) -> GnfNode {
        match n {
            GnfNode::Const(b) => GnfNode::Const(!b),
            GnfNode::Not(inner) => *inner,
            other => GnfNode::Not(Box::new(other)),
        }
    }

    fn and(items: Vec<GnfNode>) -> GnfNode {
        let mut out = Vec::new();
        for n in items {
            match n {
                GnfNode::Const(false) => return GnfNode::Const(false),
                GnfNode::Const(true) => {}
                GnfNode::And(inner) => out.extend(inner),
                other => {
                    if !out.contains(&other) {
                        out.push(other)
                    }
                }
            }
        }
        match out.len() {
            0 => GnfNode::Const(true),
            1 => out.pop().expect("one item"),
            _ => GnfNode::And(out),
        }
    }

    fn or(items: Vec<GnfNode>) -> GnfNode {
        let mut out = Vec::new();
        for n in items {
            match n {
                GnfNode::Const(true) => return GnfNode::Const(true),
                GnfNode::Const(false) => {}
                GnfNode::Or(inner) => out.extend(inner),
                other => {
                    if !out.contains(&other) {
                        out.push(other)
                    }
                }
            }
        }
        match out.len() {
            0 => GnfNode::Const(false),
            1 => out.pop().expect("one item"),
            _ => GnfNode::Or(out),
        }
    }

    fn local(formula: Formula, radius: usize) -> GnfNode {
        match formula {
            Formula::Bool(b) => GnfNode::Const(b),
            formula => GnfNode::Leaf(GnfLeaf::Local { formula, radius }),
        }
    }

    /// The node as a formula.
    pub fn to_formula(&self) -> Formula {
        match self {
            GnfNode::Const(b) => Formula::Bool(*b),
            GnfNode::Leaf(l) => l.to_formula(),
            GnfNode::Not(n) => Formula::not(n.to_formula()),
            GnfNode::And(ns) => Formula::and(ns.iter().map(GnfNode::to_formula).collect()),
            GnfNode::Or(ns) => Formula::or(ns.iter().map(GnfNode::to_formula).collect()),
        }
    }

    /// All leaves, left to right.
    pub fn leaves(&self) -> Vec<&GnfLeaf> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a GnfLeaf>) {
        match self {
            GnfNode::Const(_) => {}
            GnfNode::Leaf(l) => out.push(l),
            GnfNode::Not(n) => n.collect_leaves(out),
            GnfNode::And(ns) | GnfNode::Or(ns) => ns.iter().for_each(|n| n.collect_leaves(out)),
        }
    }

    fn sentence_leaves(&self) -> Vec<GnfLeaf> {
        let mut out: Vec<GnfLeaf> = Vec::new();
        for l in self.leaves() {
            if l.is_sentence() && !out.contains(l) {
                out.push(l.clone());
            }
        }
        out
    }

    fn substitute(&self, leaf: &GnfLeaf, value: bool) -> GnfNode {
        match self {
            GnfNode::Leaf(l) if l == leaf => GnfNode::Const(value),
            GnfNode::Const(_) | GnfNode::Leaf(_) => self.clone(),
            GnfNode::Not(n) => GnfNode::not(n.substitute(leaf, value)),
            GnfNode::And(ns) => GnfNode::and(ns.iter().map(|n| n.substitute(leaf, value)).collect()),
            GnfNode::Or(ns) => GnfNode::or(ns.iter().map(|n| n.substitute(leaf, value)).collect()),
        }
    }

    /// Largest leaf radius (0 without leaves).
    pub fn radius(&self) -> usize {
        self.leaves().iter().map(|l| l.radius()).max().unwrap_or(0)
    }
}

impl GaifmanNF {
    /// The normal form as a formula.
    pub fn to_formula(&self) -> Formula {
        self.root.to_formula()
    }

    /// Checks the syntactic shape of every leaf: local leaves use only the free variables
    /// (and occur only when there are some), basic-local bodies use only their designated
    /// variable, local aggregation bodies only the summation variables.
    pub fn validate_shape(&self) -> Result<()> {
        for leaf in self.root.leaves() {
            match leaf {
                GnfLeaf::Local { formula, .. } => {
                    if self.free_vars.is_empty() {
                        return Err(Error::TypeError(format!("local leaf in a sentence: {formula}")));
                    }
                    if let Some(v) = formula.free_vars().into_iter().find(|v| !self.free_vars.contains(v)) {
                        return Err(Error::TypeError(format!("local leaf mentions {v}")));
                    }
                }
                GnfLeaf::BasicLocal { count, var, body, .. } => {
                    if *count == 0 || body.free_vars().iter().any(|v| v != var) {
                        return Err(Error::TypeError(format!("malformed basic-local sentence over {body}")));
                    }
                }
                GnfLeaf::LocalAgg { weight, body, .. } => {
                    if body.free_vars().iter().any(|v| !weight.vars.contains(v)) {
                        return Err(Error::TypeError(format!("malformed local aggregation sentence over {body}")));
                    }
                }
            }
        }
        Ok(())
    }
}

struct Builder<'c> {
    caps: &'c Caps,
    fresh: Fresh,
}

/// Value of a variable-free term (only constants and arithmetic).
fn ground_value(t: &Term) -> Result<CarrierValue> {
    let empty = StructureBuilder::new(Signature::new(), 1).build_unchecked();
    evaluate_term(&empty, t, &[])
}

impl<'c> Builder<'c> {
    fn gnf(&mut self, f: &Formula) -> Result<GnfNode> {
        match f {
            Formula::Bool(b) => Ok(GnfNode::Const(*b)),
            Formula::Rel(_, vs) if vs.is_empty() => {
                let v = self.fresh.var();
                Ok(GnfNode::Leaf(GnfLeaf::BasicLocal { count: 1, radius: 0, var: v, body: f.clone() }))
            }
            Formula::Pred(p, ts) if f.free_vars().is_empty() => {
                let vals: Vec<CarrierValue> = ts.iter().map(ground_value).collect::<Result<_>>()?;
                Ok(GnfNode::Const(crate::algebra::eval_predicate(p, &vals)?))
            }
            Formula::Eq(..) | Formula::Rel(..) | Formula::WeightEq(..) | Formula::Pred(..) | Formula::Dist { .. } => {
                let r = quantifier_free_radius(f).ok_or_else(|| Error::NotInFragment(format!("{f}")))?;
                Ok(GnfNode::local(f.clone(), r))
            }
            Formula::Not(g) => Ok(GnfNode::not(self.gnf(g)?)),
            Formula::And(gs) => Ok(GnfNode::and(gs.iter().map(|g| self.gnf(g)).collect::<Result<_>>()?)),
            Formula::Or(gs) => Ok(GnfNode::or(gs.iter().map(|g| self.gnf(g)).collect::<Result<_>>()?)),
            Formula::Exists(y, g) => {
                let body = self.gnf(g)?;
                self.shannon(&body, 0, &mut |b, node| b.exists_local(y, node))
            }
            Formula::SumEq(s, w, g) => {
                if !w.carrier.is_finite() {
                    return Err(Error::NotInFragment(format!("summation equation over {}", w.carrier)));
                }
                let body = self.gnf(g)?;
                self.shannon(&body, 0, &mut |b, node| b.sum_local(s, w, node))
            }
        }
    }

    /// Splits `body` on its sentence leaves and applies `k` to each sentence-free residue.
    fn shannon(
        &mut self,
        body: &GnfNode,
        depth: usize,
        k: &mut dyn FnMut(&mut Self, &GnfNode) -> Result<GnfNode>,
    ) -> Result<GnfNode> {
        let sentences = body.sentence_leaves();
        let Some(chi) = sentences.first() else {
            return k(self, body);
        };
        if depth >= 63 || (1usize << (depth + 1)) > self.caps.max_pairs {
            return Err(Error::BlowupExceeded { what: "sentence splits".into(), needed: 1 << (depth + 1).min(63), cap: self.caps.max_pairs });
        }
        let pos = self.shannon(&body.substitute(chi, true), depth + 1, k)?;
        let neg = self.shannon(&body.substitute(chi, false), depth + 1, k)?;
        let leaf = GnfNode::Leaf(chi.clone());
        Ok(GnfNode::or(vec![GnfNode::and(vec![leaf.clone(), pos]), GnfNode::and(vec![GnfNode::not(leaf), neg])]))
    }

    /// Decomposes a sentence-free combination of local leaves with respect to `(xs; ys)`:
    /// whenever `dist(x̄, ȳ) > 2r+1` for the node's radius `r`, the node holds iff some
    /// pair `(α(x̄), β(ȳ))` holds, and each component is local around its tuple.
    fn local_pairs(&mut self, node: &GnfNode, xs: &[Var], ys: &[Var]) -> Result<Vec<Pair>> {
        match node {
            GnfNode::Const(true) => Ok(vec![(Formula::top(), Formula::top())]),
            GnfNode::Const(false) => Ok(Vec::new()),
            GnfNode::Not(n) => {
                let inner = self.local_pairs(n, xs, ys)?;
                not_pairs(inner, self.caps)
            }
            GnfNode::And(ns) => {
                let mut acc = vec![(Formula::top(), Formula::top())];
                for n in ns {
                    let p = self.local_pairs(n, xs, ys)?;
                    acc = and_pairs(&acc, &p, self.caps)?;
                }
                Ok(acc)
            }
            GnfNode::Or(ns) => {
                let mut acc = Vec::new();
                for n in ns {
                    let p = self.local_pairs(n, xs, ys)?;
                    acc = or_pairs(acc, p, self.caps)?;
                }
                Ok(acc)
            }
            GnfNode::Leaf(GnfLeaf::Local { formula, radius }) => {
                let fv = formula.free_vars();
                if fv.iter().all(|v| xs.contains(v)) {
                    return Ok(vec![(formula.clone(), Formula::top())]);
                }
                if fv.iter().all(|v| ys.contains(v)) {
                    return Ok(vec![(Formula::top(), formula.clone())]);
                }
                let left: Vec<Var> = fv.iter().filter(|v| xs.contains(v)).cloned().collect();
                let right: Vec<Var> = fv.iter().filter(|v| ys.contains(v)).cloned().collect();
                let mut fresh = Fresh::for_formula(formula);
                let g = rename_apart(formula, &mut fresh);
                let pairs = Decomposer { caps: self.caps }.decompose(&g, &left, &right)?;
                pairs
                    .into_iter()
                    .map(|(a, b)| Ok((localize(&a, *radius, xs)?, localize(&b, *radius, ys)?)))
                    .collect()
            }
            GnfNode::Leaf(other) => Err(Error::NotLocal(other.radius())),
        }
    }

    fn rename(&self, f: &Formula, from: &str, to: &str) -> Formula {
        f.rename_free(&HashMap::from([(from.to_string(), to.to_string())]))
    }

    /// Normal form of `∃y λ` for a sentence-free combination `λ` of local leaves.
    fn exists_local(&mut self, y: &Var, node: &GnfNode) -> Result<GnfNode> {
        let lambda = node.to_formula();
        if let Formula::Bool(b) = lambda {
            return Ok(GnfNode::Const(b));
        }
        let r = node.radius();
        let fv = lambda.free_vars();
        if !fv.contains(y) {
            return Ok(node.clone());
        }
        let xs: Vec<Var> = fv.into_iter().filter(|v| v != y).collect();
        if xs.is_empty() {
            return Ok(GnfNode::Leaf(GnfLeaf::BasicLocal { count: 1, radius: r, var: y.clone(), body: lambda }));
        }
        let rho = 2 * r + 1;
        let near = Formula::exists(y, Formula::and(vec![dist_tuple_le(&xs, y, rho), lambda.clone()]));
        let mut alternatives = vec![GnfNode::local(near, rho + r + 1)];
        let pairs = self.local_pairs(node, &xs, std::slice::from_ref(y))?;
        for (alpha, beta) in pairs {
            let far = self.far_witness(&xs, y, &beta, r)?;
            alternatives.push(GnfNode::and(vec![GnfNode::local(alpha, r), far]));
        }
        Ok(GnfNode::or(alternatives))
    }

    /// Normal form of `∃y (β(y) ∧ dist(x̄, y) > 2r+1)` for `β` r-local around `y`.
    fn far_witness(&mut self, xs: &[Var], y: &Var, beta: &Formula, r: usize) -> Result<GnfNode> {
        let rho = 2 * r + 1;
        let k = xs.len();
        let nearfar = Formula::exists(
            y,
            Formula::and(vec![Formula::not(dist_tuple_le(xs, y, rho)), dist_tuple_le(xs, y, 3 * rho), beta.clone()]),
        );
        let mut alternatives = vec![GnfNode::local(nearfar, 3 * rho + r + 1)];
        let loc_scat = |b: &mut Self, p: usize| -> GnfNode {
            if p == 0 {
                return GnfNode::Const(true);
            }
            if p > k {
                return GnfNode::Const(false);
            }
            let zs: Vec<Var> = (0..p).map(|_| b.fresh.var()).collect();
            let mut parts = Vec::new();
            for (i, z) in zs.iter().enumerate() {
                parts.push(dist_tuple_le(xs, z, rho));
                for z2 in &zs[i + 1..] {
                    parts.push(Formula::not(Formula::dist_le(z, z2, 2 * rho)));
                }
                parts.push(b.rename(beta, y, z));
            }
            let mut f = Formula::and(parts);
            for z in zs.iter().rev() {
                f = Formula::exists(z, f);
            }
            GnfNode::local(f, 2 * rho + 1)
        };
        for p in 0..=k {
            let here = loc_scat(self, p);
            let next = loc_scat(self, p + 1);
            let v = self.fresh.var();
            let body = self.rename(beta, y, &v);
            let scat = match body {
                Formula::Bool(false) => GnfNode::Const(false),
                body => GnfNode::Leaf(GnfLeaf::BasicLocal { count: p + 1, radius: rho, var: v, body }),
            };
            alternatives.push(GnfNode::and(vec![here, GnfNode::not(next), scat]));
        }
        Ok(GnfNode::or(alternatives))
    }

    /// Normal form of `s = Σ w(ȳ).λ` for a sentence-free combination `λ` of local leaves.
    fn sum_local(&mut self, s: &CarrierValue, w: &WeightApp, node: &GnfNode) -> Result<GnfNode> {
        let lambda = node.to_formula();
        let r = node.radius();
        let xs: Vec<Var> = lambda.free_vars().into_iter().filter(|v| !w.vars.contains(v)).collect();
        if xs.is_empty() {
            if lambda == Formula::bottom() {
                return Ok(GnfNode::Const(s.is_zero()));
            }
            return Ok(GnfNode::Leaf(GnfLeaf::LocalAgg { value: s.clone(), weight: w.clone(), body: lambda, radius: r }));
        }
        let elements = w.carrier.elements().ok_or_else(|| Error::NotInFragment(format!("summation over {}", w.carrier)))?;
        let rho = 2 * r + 2;
        let near_radius = rho + r + 2;
        let z1 = &w.vars[0];
        let near_sum = |i: &CarrierValue, body: &Formula| -> GnfNode {
            let guarded = Formula::and(vec![dist_tuple_le(&xs, z1, rho), body.clone()]);
            if guarded == Formula::bottom() {
                return GnfNode::Const(i.is_zero());
            }
            GnfNode::local(Formula::SumEq(i.clone(), w.clone(), Box::new(guarded)), near_radius)
        };
        let cells = refine_left(self.local_pairs(node, &xs, &w.vars)?, self.caps)?;
        let mut alternatives = Vec::new();
        for i1 in &elements {
            let mut i2 = s.clone();
            add_assign(&mut i2, &i1.neg())?;
            let near = near_sum(i1, &lambda);
            if near == GnfNode::Const(false) {
                continue;
            }
            let mut far_cells = Vec::new();
            for (alpha, beta) in &cells {
                let mut options = Vec::new();
                for j2 in &elements {
                    let mut j1 = i2.clone();
                    add_assign(&mut j1, j2)?;
                    let total = if *beta == Formula::bottom() {
                        GnfNode::Const(j1.is_zero())
                    } else {
                        GnfNode::Leaf(GnfLeaf::LocalAgg { value: j1, weight: w.clone(), body: beta.clone(), radius: r })
                    };
                    options.push(GnfNode::and(vec![total, near_sum(j2, beta)]));
                }
                far_cells.push(GnfNode::and(vec![GnfNode::local(alpha.clone(), r), GnfNode::or(options)]));
            }
            alternatives.push(GnfNode::and(vec![near, GnfNode::or(far_cells)]));
        }
        Ok(GnfNode::or(alternatives))
    }
}

/// Gaifman normal form of a formula of the first-order fragment with finite-carrier
/// summation equations; free variables are preserved.
pub fn gaifman_nf(f: &Formula, caps: &Caps) -> Result<GaifmanNF> {
    let info = analyze(&Expression::Formula(f.clone()));
    if info.fragment > Fragment::FOW1 {
        return Err(Error::NotInFragment(format!("formula is in {:?}, not FOW1", info.fragment)));
    }
    let mut fresh = Fresh::for_formula(f);
    let g = rename_apart(f, &mut fresh);
    let mut b = Builder { caps, fresh };
    let root = b.gnf(&g)?;
    Ok(GaifmanNF { root, free_vars: f.free_vars() })
}
