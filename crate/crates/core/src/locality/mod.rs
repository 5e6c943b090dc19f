//! Locality transformations: distance formulas, r-localisation, Feferman–Vaught
//! decompositions and Gaifman normal form.

pub mod fv;
pub mod gaifman;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::logic::{Expression, Formula, Fresh, Scope, Term, Var};
use crate::structure::Signature;

pub use fv::{fv_decompose, fv_decompose_local, FvDecomposition};
pub use gaifman::{gaifman_nf, GaifmanNF, GnfLeaf, GnfNode};

/// Default cap on the number of pairs/cells held by intermediate decompositions.
pub const DEFAULT_MAX_PAIRS: usize = 4096;
/// Default cap on the width `k` of aggregation tuples in the cl-term construction.
pub const DEFAULT_MAX_WIDTH: usize = 4;

/// Resource caps and validation switch shared by the transformations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Caps {
    /// Maximum number of pairs in any intermediate decomposition.
    pub max_pairs: usize,
    /// Maximum aggregation width handled by the cl-term construction.
    pub max_width: usize,
    /// Run seeded semantic spot checks after transformations.
    pub validate: bool,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { max_pairs: DEFAULT_MAX_PAIRS, max_width: DEFAULT_MAX_WIDTH, validate: cfg!(debug_assertions) }
    }
}

impl Caps {
    /// Caps without spot-check validation.
    pub fn unchecked() -> Self {
        Caps { validate: false, ..Caps::default() }
    }

    pub(crate) fn check_pairs(&self, what: &str, needed: usize) -> Result<()> {
        if needed > self.max_pairs {
            return Err(Error::BlowupExceeded { what: what.to_string(), needed, cap: self.max_pairs });
        }
        Ok(())
    }
}

/// Comparison mode of a distance formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistMode {
    /// `dist ≤ r`.
    AtMost,
    /// `dist > r`.
    Greater,
}

/// Pure first-order formula over `sig` expressing `dist(x, y) ≤ r` (or its negation).
pub fn dist_formula(sig: &Signature, x: &str, y: &str, r: usize, mode: DistMode) -> Formula {
    let mut fresh = Fresh::default();
    fresh.reserve(x);
    fresh.reserve(y);
    let f = expand_dist_atom(sig, x, y, r, &[], &mut fresh);
    match mode {
        DistMode::AtMost => f,
        DistMode::Greater => Formula::not(f),
    }
}

/// `dist(x̄, y) ≤ r`, i.e. `⋁_i dist(x_i, y) ≤ r`, as distance atoms.
pub fn dist_tuple_le(xs: &[Var], y: &str, r: usize) -> Formula {
    Formula::or(xs.iter().map(|x| Formula::dist_le(x, y, r)).collect())
}

/// `dist(x̄, ȳ) > r`, i.e. `⋀_{i,j} dist(x_i, y_j) > r`, as distance atoms.
pub fn dist_tuples_gt(xs: &[Var], ys: &[Var], r: usize) -> Formula {
    let mut parts = Vec::new();
    for x in xs {
        for y in ys {
            parts.push(Formula::not(Formula::dist_le(x, y, r)));
        }
    }
    Formula::and(parts)
}

/// `ψ` relativised to the variable `z`: `∃z (member(z) ∧ body)`.
fn relativised_exists(z: &str, member: &Option<Box<dyn Fn(&str, &mut Fresh) -> Formula + '_>>, body: Formula, fresh: &mut Fresh) -> Formula {
    let guard = match member {
        None => Formula::top(),
        Some(m) => m(z, fresh),
    };
    Formula::exists(z, Formula::and(vec![guard, body]))
}

/// Adjacency `x ~ y` in the Gaifman graph: some tuple contains both, every other component
/// being `x`, `y` or an existentially quantified (relativised) element.
fn adjacency(
    sig: &Signature,
    x: &str,
    y: &str,
    member: &Option<Box<dyn Fn(&str, &mut Fresh) -> Formula + '_>>,
    fresh: &mut Fresh,
) -> Formula {
    let mut alts = Vec::new();
    for (name, arity) in sig.relations() {
        let arity = *arity;
        if arity < 2 {
            continue;
        }
        // Each position is 0 = x, 1 = y, 2 = quantified.
        let total = 3usize.pow(arity as u32);
        for code in 0..total {
            let mut pattern = Vec::with_capacity(arity);
            let mut c = code;
            for _ in 0..arity {
                pattern.push(c % 3);
                c /= 3;
            }
            if !pattern.contains(&0) || !pattern.contains(&1) {
                continue;
            }
            let mut vars = Vec::new();
            let mut bound = Vec::new();
            for &p in &pattern {
                match p {
                    0 => vars.push(x.to_string()),
                    1 => vars.push(y.to_string()),
                    _ => {
                        let z = fresh.var();
                        bound.push(z.clone());
                        vars.push(z);
                    }
                }
            }
            let mut f = Formula::Rel(name.clone(), vars);
            for z in bound.iter().rev() {
                f = relativised_exists(z, member, f, fresh);
            }
            alts.push(f);
        }
    }
    Formula::or(alts)
}

fn expand_dist_atom(sig: &Signature, a: &str, b: &str, bound: usize, scopes: &[Scope], fresh: &mut Fresh) -> Formula {
    if a == b {
        return Formula::top();
    }
    let member: Option<Box<dyn Fn(&str, &mut Fresh) -> Formula + '_>> = if scopes.is_empty() {
        None
    } else {
        Some(Box::new(move |z: &str, fresh: &mut Fresh| {
            let mut parts = Vec::new();
            for (i, scope) in scopes.iter().enumerate() {
                let alts: Vec<Formula> =
                    scope.anchors.iter().map(|anc| expand_dist_atom(sig, anc, z, scope.radius, &scopes[i + 1..], fresh)).collect();
                parts.push(Formula::or(alts));
            }
            Formula::and(parts)
        }))
    };
    dist_chain(sig, a, b, bound, &member, fresh)
}

fn dist_chain(
    sig: &Signature,
    a: &str,
    b: &str,
    bound: usize,
    member: &Option<Box<dyn Fn(&str, &mut Fresh) -> Formula + '_>>,
    fresh: &mut Fresh,
) -> Formula {
    let eq = Formula::eq(a, b);
    if bound == 0 {
        return eq;
    }
    let adj = adjacency(sig, a, b, member, fresh);
    if bound == 1 {
        return Formula::or(vec![eq, adj]);
    }
    let z = fresh.var();
    let first = adjacency(sig, a, &z, member, fresh);
    let rest = dist_chain(sig, &z, b, bound - 1, member, fresh);
    let step = relativised_exists(&z, member, Formula::and(vec![first, rest]), fresh);
    Formula::or(vec![eq, adj, step])
}

/// Replaces every distance atom by its first-order definition over `sig` (relativised as
/// recorded by its scopes).
pub fn expand_distance_atoms(f: &Formula, sig: &Signature) -> Formula {
    let mut fresh = Fresh::for_formula(f);
    expand_rec(f, sig, &mut fresh)
}

fn expand_rec(f: &Formula, sig: &Signature, fresh: &mut Fresh) -> Formula {
    match f {
        Formula::Dist { a, b, bound, scopes } => expand_dist_atom(sig, a, b, *bound, scopes, fresh),
        other => other.map_children(&mut |g| Ok(expand_rec(g, sig, fresh))).expect("expansion is infallible"),
    }
}

/// The r-localisation of `f` around `anchors`: every `∃y ψ` becomes
/// `∃y (dist(x̄,y) ≤ r ∧ ψ)`, every summation equation and aggregation term guards each of
/// its summation variables likewise, and existing distance atoms record the new scope.
///
/// The result is r-local around `anchors`: its value at `ā` is determined by `N_r(ā)`.
pub fn localize(f: &Formula, r: usize, anchors: &[Var]) -> Result<Formula> {
    if anchors.is_empty() {
        return Err(Error::NoAnchors);
    }
    let mut fresh = Fresh::for_formula(f);
    for a in anchors {
        fresh.reserve(a);
    }
    Ok(loc_formula(f, r, anchors, &mut fresh))
}

/// [`localize`] on expressions.
pub fn localize_expression(e: &Expression, r: usize, anchors: &[Var]) -> Result<Expression> {
    match e {
        Expression::Formula(f) => localize(f, r, anchors).map(Expression::Formula),
        Expression::Term(t) => {
            if anchors.is_empty() {
                return Err(Error::NoAnchors);
            }
            let mut fresh = Fresh::default();
            for a in anchors {
                fresh.reserve(a);
            }
            Ok(Expression::Term(loc_term(t, r, anchors, &mut fresh)))
        }
    }
}

fn guard(anchors: &[Var], y: &str, r: usize) -> Formula {
    dist_tuple_le(anchors, y, r)
}

/// Renames binders that clash with an anchor so the guards refer to the anchors.
fn unclash(vars: &[Var], anchors: &[Var], fresh: &mut Fresh) -> HashMap<Var, Var> {
    vars.iter().filter(|v| anchors.contains(v)).map(|v| (v.clone(), fresh.var())).collect()
}

fn loc_formula(f: &Formula, r: usize, anchors: &[Var], fresh: &mut Fresh) -> Formula {
    match f {
        Formula::Exists(y, g) => {
            let map = unclash(std::slice::from_ref(y), anchors, fresh);
            let (y, g) = match map.get(y) {
                Some(z) => (z.clone(), g.rename_free(&map)),
                None => (y.clone(), (**g).clone()),
            };
            let body = loc_formula(&g, r, anchors, fresh);
            Formula::Exists(y.clone(), Box::new(Formula::and(vec![guard(anchors, &y, r), body])))
        }
        Formula::SumEq(s, w, g) => {
            let map = unclash(&w.vars, anchors, fresh);
            let w2 = crate::logic::WeightApp { name: w.name.clone(), carrier: w.carrier.clone(), vars: w.vars.iter().map(|v| map.get(v).cloned().unwrap_or_else(|| v.clone())).collect() };
            let g = g.rename_free(&map);
            let mut parts: Vec<Formula> = w2.vars.iter().map(|y| guard(anchors, y, r)).collect();
            parts.push(loc_formula(&g, r, anchors, fresh));
            Formula::SumEq(s.clone(), w2, Box::new(Formula::and(parts)))
        }
        Formula::Dist { a, b, bound, scopes } => {
            let mut scopes = scopes.clone();
            scopes.push(Scope { anchors: anchors.to_vec(), radius: r });
            Formula::Dist { a: a.clone(), b: b.clone(), bound: *bound, scopes }
        }
        Formula::Pred(p, ts) => Formula::Pred(p.clone(), ts.iter().map(|t| loc_term(t, r, anchors, fresh)).collect()),
        other => other.map_children(&mut |g| Ok(loc_formula(g, r, anchors, fresh))).expect("localisation is infallible"),
    }
}

fn loc_term(t: &Term, r: usize, anchors: &[Var], fresh: &mut Fresh) -> Term {
    match t {
        Term::Agg(p, g) => {
            let pv = p.vars();
            let map = unclash(&pv, anchors, fresh);
            let (p, g) = if map.is_empty() {
                (p.clone(), (**g).clone())
            } else {
                let factors = p
                    .factors
                    .iter()
                    .map(|f| match f {
                        crate::logic::Factor::Weight(w) => crate::logic::Factor::Weight(crate::logic::WeightApp {
                            name: w.name.clone(),
                            carrier: w.carrier.clone(),
                            vars: w.vars.iter().map(|v| map.get(v).cloned().unwrap_or_else(|| v.clone())).collect(),
                        }),
                        c => c.clone(),
                    })
                    .collect();
                (crate::logic::WProduct { carrier: p.carrier.clone(), factors }, g.rename_free(&map))
            };
            // Guard the summation variables and the body's free variables.
            let mut guarded: Vec<Var> = p.vars();
            for v in g.free_vars() {
                if !guarded.contains(&v) {
                    guarded.push(v);
                }
            }
            let mut parts: Vec<Formula> = guarded.iter().map(|y| guard(anchors, y, r)).collect();
            parts.push(loc_formula(&g, r, anchors, fresh));
            Term::Agg(p, Box::new(Formula::and(parts)))
        }
        Term::Arith(op, a, b) => {
            Term::Arith(*op, Box::new(loc_term(a, r, anchors, fresh)), Box::new(loc_term(b, r, anchors, fresh)))
        }
        Term::Scale(a, b) => Term::Scale(Box::new(loc_term(a, r, anchors, fresh)), Box::new(loc_term(b, r, anchors, fresh))),
        Term::Const(_) | Term::Weight(_) => t.clone(),
    }
}

/// Radius up to which a formula built only from atoms, Boolean connectives and distance
/// atoms is local around its free variables; `None` if it contains quantifiers or
/// aggregation.
pub fn quantifier_free_radius(f: &Formula) -> Option<usize> {
    match f {
        Formula::Bool(_) | Formula::Eq(..) | Formula::Rel(..) | Formula::WeightEq(..) => Some(0),
        Formula::Dist { bound, scopes, .. } => Some(scopes.iter().map(|s| s.radius).fold(*bound, usize::max)),
        Formula::Not(g) => quantifier_free_radius(g),
        Formula::Or(gs) | Formula::And(gs) => gs.iter().map(quantifier_free_radius).try_fold(0, |acc, r| r.map(|r| acc.max(r))),
        Formula::Pred(_, ts) => {
            if ts.iter().all(|t| !term_has_agg(t)) {
                Some(0)
            } else {
                None
            }
        }
        Formula::Exists(..) | Formula::SumEq(..) => None,
    }
}

fn term_has_agg(t: &Term) -> bool {
    match t {
        Term::Agg(..) => true,
        Term::Arith(_, l, r) | Term::Scale(l, r) => term_has_agg(l) || term_has_agg(r),
        _ => false,
    }
}
