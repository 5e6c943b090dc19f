//! Feferman–Vaught decompositions for the first-order fragment with finite-carrier
//! summation equations.
//!
//! A decomposition of `φ(x̄, ȳ)` is a finite set of pairs `(α(x̄), β(ȳ))` such that the
//! disjoint sum `𝔄 ⊕ 𝔅` satisfies `φ[ā, b̄]` exactly when some pair has `𝔄 ⊨ α[ā]` and
//! `𝔅 ⊨ β[b̄]`. Pair lists are combined as follows:
//!
//! * disjunction and `∃` are unions of pair lists;
//! * conjunction is the pairwise product;
//! * negation first refines the list into a *partition* (the `α`s, or the `β`s, mutually
//!   exclusive and exhaustive) and then negates the other component;
//! * a summation equation splits the sum into the parts over `𝔄` and over `𝔅` (mixed
//!   tuples carry weight zero) and enumerates all `(i₁, i₂)` with `i₁ + i₂ = s`.

use std::collections::HashMap;

use crate::algebra::{add_assign, CarrierValue};
use crate::error::{Error, Result};
use crate::logic::{analyze, rename_apart, Expression, Formula, Fragment, Fresh, Scope, Term, Var, WeightApp};
use crate::structure::{LEFT_PART, RIGHT_PART};

use super::{localize, Caps};

/// A pair `(α, β)`.
pub type Pair = (Formula, Formula);

/// Result of [`fv_decompose`] / [`fv_decompose_local`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FvDecomposition {
    pub pairs: Vec<Pair>,
    pub left_vars: Vec<Var>,
    pub right_vars: Vec<Var>,
    /// `true` iff the `α`-components are pairwise exclusive and jointly exhaustive.
    pub mutually_exclusive: bool,
}

impl FvDecomposition {
    /// Refines the pairs so that the `α`-components partition every structure.
    pub fn into_exclusive(self, caps: &Caps) -> Result<FvDecomposition> {
        if self.mutually_exclusive {
            return Ok(self);
        }
        let pairs = refine_left(self.pairs, caps)?;
        Ok(FvDecomposition { pairs, mutually_exclusive: true, ..self })
    }

    /// `⋁ (α ∧ β)`: the single-structure reading of the pairs.
    pub fn to_formula(&self) -> Formula {
        Formula::or(self.pairs.iter().map(|(a, b)| Formula::and(vec![a.clone(), b.clone()])).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

fn dedup(pairs: Vec<Pair>) -> Vec<Pair> {
    let mut out: Vec<Pair> = Vec::with_capacity(pairs.len());
    for (a, b) in pairs {
        if a == Formula::bottom() || b == Formula::bottom() {
            continue;
        }
        if !out.iter().any(|(x, y)| *x == a && *y == b) {
            out.push((a, b));
        }
    }
    out
}

/// Union (disjunction) of pair lists.
pub(crate) fn or_pairs(mut a: Vec<Pair>, b: Vec<Pair>, caps: &Caps) -> Result<Vec<Pair>> {
    a.extend(b);
    let out = dedup(a);
    caps.check_pairs("decomposition pairs", out.len())?;
    Ok(out)
}

/// Product (conjunction) of pair lists.
pub(crate) fn and_pairs(a: &[Pair], b: &[Pair], caps: &Caps) -> Result<Vec<Pair>> {
    caps.check_pairs("decomposition pairs", a.len() * b.len())?;
    let mut out = Vec::with_capacity(a.len() * b.len());
    for (a1, b1) in a {
        for (a2, b2) in b {
            out.push((Formula::and(vec![a1.clone(), a2.clone()]), Formula::and(vec![b1.clone(), b2.clone()])));
        }
    }
    Ok(dedup(out))
}

fn group_by<F: Fn(&Pair) -> (Formula, Formula)>(pairs: &[Pair], key: F, join: fn(Vec<Formula>) -> Formula) -> Vec<(Formula, Formula)> {
    // Groups by the first component of `key`, joining the second components with `join`.
    let mut order: Vec<Formula> = Vec::new();
    let mut groups: HashMap<Formula, Vec<Formula>> = HashMap::new();
    for p in pairs {
        let (k, v) = key(p);
        if !groups.contains_key(&k) {
            order.push(k.clone());
        }
        groups.entry(k).or_default().push(v);
    }
    order.into_iter().map(|k| {
        let vs = groups.remove(&k).expect("grouped key");
        (k, join(vs))
    }).collect()
}

/// Merges cells with identical `β` (their `α`s are disjoined); partitions stay partitions.
fn merge_by_beta(cells: Vec<Pair>) -> Vec<Pair> {
    group_by(&cells, |(a, b)| (b.clone(), a.clone()), Formula::or).into_iter().map(|(b, a)| (a, b)).collect()
}

/// Refines an arbitrary pair list into an equivalent one whose `α`s form a partition.
pub(crate) fn refine_left(pairs: Vec<Pair>, caps: &Caps) -> Result<Vec<Pair>> {
    let pairs = dedup(pairs);
    // Two equivalent groupings; refine over whichever has fewer distinct splitters.
    let by_alpha: Vec<Pair> = group_by(&pairs, |(a, b)| (a.clone(), b.clone()), Formula::or);
    let by_beta: Vec<Pair> =
        group_by(&pairs, |(a, b)| (b.clone(), a.clone()), Formula::or).into_iter().map(|(b, a)| (a, b)).collect();
    let groups = if by_beta.len() < by_alpha.len() { by_beta } else { by_alpha };
    let mut cells: Vec<Pair> = vec![(Formula::top(), Formula::bottom())];
    for (a, b) in groups {
        let mut next = Vec::with_capacity(cells.len() * 2);
        for (c, d) in cells {
            let yes = Formula::and(vec![c.clone(), a.clone()]);
            if yes != Formula::bottom() {
                next.push((yes, Formula::or(vec![d.clone(), b.clone()])));
            }
            let no = Formula::and(vec![c, Formula::not(a.clone())]);
            if no != Formula::bottom() {
                next.push((no, d));
            }
        }
        cells = merge_by_beta(next);
        caps.check_pairs("partition cells", cells.len())?;
    }
    Ok(cells)
}

fn swap(pairs: Vec<Pair>) -> Vec<Pair> {
    pairs.into_iter().map(|(a, b)| (b, a)).collect()
}

/// Refines into an equivalent list whose `β`s form a partition.
pub(crate) fn refine_right(pairs: Vec<Pair>, caps: &Caps) -> Result<Vec<Pair>> {
    Ok(swap(refine_left(swap(pairs), caps)?))
}

/// Negation of a pair list.
pub(crate) fn not_pairs(pairs: Vec<Pair>, caps: &Caps) -> Result<Vec<Pair>> {
    let distinct_alpha = group_by(&pairs, |(a, b)| (a.clone(), b.clone()), Formula::or).len();
    let distinct_beta = group_by(&pairs, |(a, b)| (b.clone(), a.clone()), Formula::or).len();
    if distinct_beta < distinct_alpha {
        // Partition on the right: ¬φ ⟺ ⋁ (¬α_j ∧ β_j).
        let cells = refine_right(pairs, caps)?;
        let out = cells.into_iter().map(|(a, b)| (Formula::not(a), b)).collect();
        return Ok(swap(merge_by_beta(swap(dedup(out)))));
    }
    let cells = refine_left(pairs, caps)?;
    let out = cells.into_iter().map(|(a, b)| (a, Formula::not(b))).collect();
    Ok(merge_by_beta(dedup(out)))
}

/// `s = Σ w(z̄).body` with constant folding of an unsatisfiable body.
fn sum_eq(s: &CarrierValue, w: &WeightApp, body: Formula) -> Formula {
    if body == Formula::bottom() {
        return Formula::Bool(s.is_zero());
    }
    Formula::SumEq(s.clone(), w.clone(), Box::new(body))
}

/// Recursive decomposer over a variable-side assignment.
pub(crate) struct Decomposer<'c> {
    pub(crate) caps: &'c Caps,
}

impl<'c> Decomposer<'c> {
    fn side(sides: &[(Var, Side)], v: &str) -> Result<Side> {
        sides
            .iter()
            .rev()
            .find(|(n, _)| n == v)
            .map(|(_, s)| *s)
            .ok_or_else(|| Error::UnboundVariable(v.to_string()))
    }

    fn common_side(sides: &[(Var, Side)], vars: &[Var]) -> Result<Option<Side>> {
        let mut found: Option<Side> = None;
        for v in vars {
            let s = Self::side(sides, v)?;
            match found {
                None => found = Some(s),
                Some(f) if f != s => return Ok(None),
                _ => {}
            }
        }
        Ok(Some(found.unwrap_or(Side::Left)))
    }

    fn place(f: Formula, side: Option<Side>) -> Vec<Pair> {
        match side {
            Some(Side::Left) => dedup(vec![(f, Formula::top())]),
            Some(Side::Right) => dedup(vec![(Formula::top(), f)]),
            None => Vec::new(),
        }
    }

    fn dec(&self, f: &Formula, sides: &mut Vec<(Var, Side)>) -> Result<Vec<Pair>> {
        if matches!(f, Formula::Not(_) | Formula::And(_) | Formula::Or(_)) && plain(f) {
            let vars: Vec<Var> = f.free_vars().into_iter().collect();
            if let Some(side) = Self::common_side(sides, &vars)? {
                return Ok(Self::place(f.clone(), Some(side)));
            }
        }
        match f {
            Formula::Bool(true) => Ok(vec![(Formula::top(), Formula::top())]),
            Formula::Bool(false) => Ok(Vec::new()),
            Formula::Eq(a, b) => Ok(Self::place(f.clone(), Self::common_side(sides, &[a.clone(), b.clone()])?)),
            Formula::Rel(r, vs) if vs.len() == 1 && (r == LEFT_PART || r == RIGHT_PART) => {
                let s = Self::side(sides, &vs[0])?;
                let holds = (r == LEFT_PART) == (s == Side::Left);
                Ok(if holds { vec![(Formula::top(), Formula::top())] } else { Vec::new() })
            }
            Formula::Rel(_, vs) if vs.is_empty() => {
                Ok(dedup(vec![(f.clone(), Formula::top()), (Formula::top(), f.clone())]))
            }
            Formula::Rel(_, vs) => Ok(Self::place(f.clone(), Self::common_side(sides, vs)?)),
            Formula::WeightEq(s, w) => match Self::common_side(sides, &w.vars)? {
                Some(side) => Ok(Self::place(f.clone(), Some(side))),
                None => Ok(if s.is_zero() { vec![(Formula::top(), Formula::top())] } else { Vec::new() }),
            },
            Formula::Pred(_, ts) => {
                let mut vars = Vec::new();
                for t in ts {
                    if term_has_agg(t) {
                        return Err(Error::NotInFragment("aggregation term inside a decomposed formula".into()));
                    }
                    for v in t.free_vars() {
                        if !vars.contains(&v) {
                            vars.push(v);
                        }
                    }
                }
                if vars.len() > 1 {
                    return Err(Error::NotInFragment("predicate application with several free variables".into()));
                }
                Ok(Self::place(f.clone(), Self::common_side(sides, &vars)?))
            }
            Formula::Dist { a, b, bound, scopes } => match Self::common_side(sides, &[a.clone(), b.clone()])? {
                None => Ok(Vec::new()),
                Some(side) => {
                    let mut projected = Vec::with_capacity(scopes.len());
                    for sc in scopes {
                        let mut anchors = Vec::new();
                        for v in &sc.anchors {
                            if Self::side(sides, v)? == side {
                                anchors.push(v.clone());
                            }
                        }
                        projected.push(Scope { anchors, radius: sc.radius });
                    }
                    let atom = Formula::Dist { a: a.clone(), b: b.clone(), bound: *bound, scopes: projected };
                    Ok(Self::place(atom, Some(side)))
                }
            },
            Formula::Not(g) => {
                let inner = self.dec(g, sides)?;
                not_pairs(inner, self.caps)
            }
            Formula::Or(gs) => {
                let mut acc = Vec::new();
                for g in gs {
                    let p = self.dec(g, sides)?;
                    acc = or_pairs(acc, p, self.caps)?;
                }
                Ok(acc)
            }
            Formula::And(gs) => {
                let mut acc = vec![(Formula::top(), Formula::top())];
                for g in gs {
                    let p = self.dec(g, sides)?;
                    acc = and_pairs(&acc, &p, self.caps)?;
                    if acc.is_empty() {
                        break;
                    }
                }
                Ok(acc)
            }
            Formula::Exists(z, g) => {
                sides.push((z.clone(), Side::Left));
                let left = self.dec(g, sides);
                sides.pop();
                sides.push((z.clone(), Side::Right));
                let right = self.dec(g, sides);
                sides.pop();
                let left: Vec<Pair> = left?.into_iter().map(|(a, b)| (Formula::exists(z, a), b)).collect();
                let right: Vec<Pair> = right?.into_iter().map(|(a, b)| (a, Formula::exists(z, b))).collect();
                or_pairs(left, right, self.caps)
            }
            Formula::SumEq(s, w, g) => {
                let elements = w
                    .carrier
                    .elements()
                    .ok_or_else(|| Error::NotInFragment(format!("summation equation over the infinite carrier {}", w.carrier)))?;
                let n = sides.len();
                sides.extend(w.vars.iter().map(|v| (v.clone(), Side::Left)));
                let on_left = self.dec(g, sides);
                sides.truncate(n);
                sides.extend(w.vars.iter().map(|v| (v.clone(), Side::Right)));
                let on_right = self.dec(g, sides);
                sides.truncate(n);
                // Sum over the left part: β-partition, then Σ over each α.
                let left_cells = refine_right(on_left?, self.caps)?;
                let right_cells = refine_left(on_right?, self.caps)?;
                let mut out = Vec::new();
                for i1 in &elements {
                    let mut i2 = s.clone();
                    add_assign(&mut i2, &i1.neg())?;
                    let part_a: Vec<Pair> =
                        dedup(left_cells.iter().map(|(a, b)| (sum_eq(i1, w, a.clone()), b.clone())).collect());
                    let part_b: Vec<Pair> =
                        dedup(right_cells.iter().map(|(a, b)| (a.clone(), sum_eq(&i2, w, b.clone()))).collect());
                    out = or_pairs(out, and_pairs(&part_a, &part_b, self.caps)?, self.caps)?;
                }
                Ok(out)
            }
        }
    }

    /// Decomposes `f` with the given variables on the left and right.
    pub(crate) fn decompose(&self, f: &Formula, left: &[Var], right: &[Var]) -> Result<Vec<Pair>> {
        let mut sides: Vec<(Var, Side)> = left.iter().map(|v| (v.clone(), Side::Left)).collect();
        sides.extend(right.iter().map(|v| (v.clone(), Side::Right)));
        self.dec(f, &mut sides)
    }
}

fn term_has_agg(t: &Term) -> bool {
    match t {
        Term::Agg(..) => true,
        Term::Arith(_, l, r) | Term::Scale(l, r) => term_has_agg(l) || term_has_agg(r),
        _ => false,
    }
}

fn check_inputs(f: &Formula, xs: &[Var], ys: &[Var]) -> Result<()> {
    if let Some(v) = xs.iter().find(|v| ys.contains(v)) {
        return Err(Error::TypeError(format!("variable {v} is on both sides")));
    }
    if let Some(v) = f.free_vars().into_iter().find(|v| !xs.contains(v) && !ys.contains(v)) {
        return Err(Error::UnboundVariable(v));
    }
    let info = analyze(&Expression::Formula(f.clone()));
    if info.fragment > Fragment::FOW1 {
        return Err(Error::NotInFragment(format!("formula is in {:?}, not FOW1", info.fragment)));
    }
    Ok(())
}

fn finish(pairs: Vec<Pair>, xs: &[Var], ys: &[Var], exclusive: bool) -> FvDecomposition {
    let pairs = if pairs.is_empty() { vec![(Formula::bottom(), Formula::bottom())] } else { pairs };
    FvDecomposition { pairs, left_vars: xs.to_vec(), right_vars: ys.to_vec(), mutually_exclusive: exclusive }
}

/// Feferman–Vaught decomposition of `f(x̄, ȳ)` over `σ ∪ {X, Y}` with respect to the
/// disjoint sum: `X`/`Y` mark the left/right part.
pub fn fv_decompose(f: &Formula, xs: &[Var], ys: &[Var], caps: &Caps) -> Result<FvDecomposition> {
    check_inputs(f, xs, ys)?;
    let mut fresh = Fresh::for_formula(f);
    let g = rename_apart(f, &mut fresh);
    let pairs = Decomposer { caps }.decompose(&g, xs, ys)?;
    Ok(finish(pairs, xs, ys, false))
}

/// Decomposition of an r-local `f(x̄, ȳ)` inside one structure: whenever
/// `dist(x̄, ȳ) > 2r+1`, `f` holds iff `α^{(r)}(x̄) ∧ β^{(r)}(ȳ)` holds for some pair.
pub fn fv_decompose_local(f: &Formula, r: usize, xs: &[Var], ys: &[Var], caps: &Caps) -> Result<FvDecomposition> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::NoAnchors);
    }
    if caps.validate {
        let mut anchors = xs.to_vec();
        anchors.extend(ys.iter().cloned());
        crate::gen::spot_check_local(f, r, &anchors, 0)?;
    }
    let d = fv_decompose(f, xs, ys, caps)?;
    let pairs = d
        .pairs
        .into_iter()
        .map(|(a, b)| Ok((localize(&a, r, xs)?, localize(&b, r, ys)?)))
        .collect::<Result<Vec<Pair>>>()?;
    Ok(finish(dedup(pairs), xs, ys, false))
}

/// Quantifier-free Boolean combinations of atoms that only mention their own free
/// variables; such a formula on one side can be placed there as a whole.
fn plain(f: &Formula) -> bool {
    match f {
        Formula::Bool(_) | Formula::Eq(..) | Formula::WeightEq(..) => true,
        Formula::Rel(r, vs) => !vs.is_empty() && r != LEFT_PART && r != RIGHT_PART,
        Formula::Not(g) => plain(g),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().all(plain),
        _ => false,
    }
}
