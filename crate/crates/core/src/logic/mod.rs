//! Formulas and terms of first-order logic with weight aggregation.
//!
//! The abstract syntax follows the ten construction rules: equality and relation
//! atoms, weight equations `s = w(x̄)`, negation, disjunction, existential
//! quantification, summation equations `s = Σ w(ȳ).φ`, predicate applications,
//! constants, weight terms, arithmetic terms and aggregation terms `Σ p.φ`.
//!
//! Four derived nodes keep transformed formulas readable and cheap to evaluate;
//! each has a documented expansion into the core rules:
//!
//! * [`Formula::Bool`] — `⊤`/`⊥`, i.e. `¬∃z ¬z=z` and `∃z ¬z=z` (structures are nonempty);
//! * [`Formula::And`] — `¬(¬φ ∨ ¬ψ)`;
//! * [`Formula::Dist`] — the first-order distance formula `dist(x,y) ≤ m`, evaluated by
//!   breadth-first search (see [`Scope`] for how relativisation is tracked);
//! * [`Term::Scale`] — the `Z`-module action `n · t` (`n`-fold sum), used for products of
//!   counts with group-valued sums.

pub mod analyze;
pub mod eval;
pub mod parse;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::algebra::{ArithOp, Carrier, CarrierValue, PredicateDef};
use crate::error::{Error, Result};

pub use analyze::{analyze, ExprInfo, Fragment};
pub use eval::{evaluate, evaluate_all, evaluate_formula, evaluate_term, Assignment, Evaluator, Value};
pub use parse::{parse_expression, parse_formula, parse_term};

/// A variable, identified by name.
pub type Var = String;

/// Application `w(x1, …, xk)` of a weight symbol to pairwise distinct variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeightApp {
    pub name: String,
    pub carrier: Carrier,
    pub vars: Vec<Var>,
}

impl WeightApp {
    /// Builds a weight application, checking that the variables are pairwise distinct.
    pub fn new(name: &str, carrier: Carrier, vars: Vec<Var>) -> Result<WeightApp> {
        let set: BTreeSet<&Var> = vars.iter().collect();
        if set.len() != vars.len() || vars.is_empty() {
            return Err(Error::DistinctnessError(format!("{name}({})", vars.join(","))));
        }
        Ok(WeightApp { name: name.to_string(), carrier, vars })
    }
}

/// A factor of a W-product: a constant or a weight application.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Factor {
    Const(CarrierValue),
    Weight(WeightApp),
}

/// A W-product `p1 · … · pl` of type `S`; group carriers admit exactly one factor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WProduct {
    pub carrier: Carrier,
    pub factors: Vec<Factor>,
}

impl WProduct {
    /// Builds a product, checking carriers and the single-factor rule for groups.
    pub fn new(carrier: Carrier, factors: Vec<Factor>) -> Result<WProduct> {
        if factors.is_empty() {
            return Err(Error::TypeError("empty W-product".into()));
        }
        if !carrier.is_ring() && factors.len() != 1 {
            return Err(Error::MulOnGroup(carrier.to_string()));
        }
        for f in &factors {
            let c = match f {
                Factor::Const(v) => v.carrier(),
                Factor::Weight(w) => w.carrier.clone(),
            };
            if c != carrier {
                return Err(Error::CarrierMismatch(format!("factor of type {c} in product of type {carrier}")));
            }
        }
        Ok(WProduct { carrier, factors })
    }

    /// Product of the weight applications `one(y)` over the given variables (a tuple counter).
    pub fn counting(vars: &[Var]) -> WProduct {
        WProduct {
            carrier: Carrier::IntegerRing,
            factors: vars
                .iter()
                .map(|v| Factor::Weight(WeightApp { name: "one".into(), carrier: Carrier::IntegerRing, vars: vec![v.clone()] }))
                .collect(),
        }
    }

    /// `vars(p)`: the variables of the weight factors in first-occurrence order.
    pub fn vars(&self) -> Vec<Var> {
        let mut out: Vec<Var> = Vec::new();
        for f in &self.factors {
            if let Factor::Weight(w) = f {
                for v in &w.vars {
                    if !out.contains(v) {
                        out.push(v.clone());
                    }
                }
            }
        }
        out
    }
}

/// Relativisation record of a [`Formula::Dist`] node: the node's implicit quantifiers
/// range over the `radius`-ball around `anchors` (computed inside the enclosing scopes).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Scope {
    pub anchors: Vec<Var>,
    pub radius: usize,
}

/// Formulas.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    /// `⊤` (true) or `⊥` (false).
    Bool(bool),
    /// `x1 = x2`.
    Eq(Var, Var),
    /// `R(x1, …, xk)` (also 0-ary).
    Rel(String, Vec<Var>),
    /// `s = w(x1, …, xk)`.
    WeightEq(CarrierValue, WeightApp),
    /// `¬φ`.
    Not(Box<Formula>),
    /// `φ1 ∨ … ∨ φn` (empty disjunction is false).
    Or(Vec<Formula>),
    /// `φ1 ∧ … ∧ φn` (empty conjunction is true).
    And(Vec<Formula>),
    /// `∃y φ`.
    Exists(Var, Box<Formula>),
    /// `s = Σ w(ȳ).φ`; the summation variables are the weight application's variables.
    SumEq(CarrierValue, WeightApp, Box<Formula>),
    /// `P(t1, …, tm)`.
    Pred(PredicateDef, Vec<Term>),
    /// `dist(a, b) ≤ bound`, with relativisation scopes innermost first.
    Dist { a: Var, b: Var, bound: usize, scopes: Vec<Scope> },
}

/// Terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// A constant `s`.
    Const(CarrierValue),
    /// `w(x1, …, xk)`.
    Weight(WeightApp),
    /// `(t1 ∗ t2)` for `∗ ∈ {+, −, ·}`.
    Arith(ArithOp, Box<Term>, Box<Term>),
    /// `n · t` with `n` a term of type `Z`.
    Scale(Box<Term>, Box<Term>),
    /// `Σ p.φ`.
    Agg(WProduct, Box<Formula>),
}

/// Either a formula or a term.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expression {
    Formula(Formula),
    Term(Term),
}

impl Term {
    /// The carrier of the term's value.
    pub fn carrier(&self) -> Carrier {
        match self {
            Term::Const(v) => v.carrier(),
            Term::Weight(w) => w.carrier.clone(),
            Term::Arith(_, l, _) => l.carrier(),
            Term::Scale(_, t) => t.carrier(),
            Term::Agg(p, _) => p.carrier.clone(),
        }
    }

    /// Checked arithmetic constructor.
    pub fn arith(op: ArithOp, l: Term, r: Term) -> Result<Term> {
        let (cl, cr) = (l.carrier(), r.carrier());
        if cl != cr {
            return Err(Error::CarrierMismatch(format!("{cl} {} {cr}", op.symbol())));
        }
        if op == ArithOp::Mul && !cl.is_ring() {
            return Err(Error::MulOnGroup(cl.to_string()));
        }
        Ok(Term::Arith(op, Box::new(l), Box::new(r)))
    }

    /// Checked `Z`-scaling constructor.
    pub fn scale(n: Term, t: Term) -> Result<Term> {
        if n.carrier() != Carrier::IntegerRing {
            return Err(Error::TypeError("scale factor must have type Z".into()));
        }
        Ok(Term::Scale(Box::new(n), Box::new(t)))
    }

    /// Free variables in first-occurrence order.
    pub fn free_vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        collect_free_term(self, &mut Vec::new(), &mut out);
        out
    }
}

/// Checked predicate application: resolves the library predicate against the term types.
pub fn pred(name: &str, terms: Vec<Term>) -> Result<Formula> {
    let types: Vec<Carrier> = terms.iter().map(Term::carrier).collect();
    let p = PredicateDef::resolve(name, &types)?;
    Ok(Formula::Pred(p, terms))
}

impl Formula {
    /// `⊤`.
    pub fn top() -> Formula {
        Formula::Bool(true)
    }
    /// `⊥`.
    pub fn bottom() -> Formula {
        Formula::Bool(false)
    }

    /// Negation with constant folding and double-negation removal.
    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::Bool(b) => Formula::Bool(!b),
            Formula::Not(inner) => *inner,
            other => Formula::Not(Box::new(other)),
        }
    }

    /// Disjunction with constant folding and flattening.
    pub fn or(items: Vec<Formula>) -> Formula {
        let mut out: Vec<Formula> = Vec::new();
        for f in items {
            match f {
                Formula::Bool(true) => return Formula::top(),
                Formula::Bool(false) => {}
                Formula::Or(inner) => {
                    for g in inner {
                        if !out.contains(&g) {
                            out.push(g);
                        }
                    }
                }
                other => {
                    if !out.contains(&other) {
                        out.push(other);
                    }
                }
            }
        }
        if has_complementary(&out) {
            return Formula::top();
        }
        match out.len() {
            0 => Formula::bottom(),
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    /// Conjunction with constant folding and flattening.
    pub fn and(items: Vec<Formula>) -> Formula {
        let mut out: Vec<Formula> = Vec::new();
        for f in items {
            match f {
                Formula::Bool(false) => return Formula::bottom(),
                Formula::Bool(true) => {}
                Formula::And(inner) => {
                    for g in inner {
                        if !out.contains(&g) {
                            out.push(g);
                        }
                    }
                }
                other => {
                    if !out.contains(&other) {
                        out.push(other);
                    }
                }
            }
        }
        if has_complementary(&out) {
            return Formula::bottom();
        }
        match out.len() {
            0 => Formula::top(),
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    /// `∃y φ` (constant bodies fold, since universes are nonempty).
    pub fn exists(y: &str, body: Formula) -> Formula {
        match body {
            Formula::Bool(b) => Formula::Bool(b),
            other => Formula::Exists(y.to_string(), Box::new(other)),
        }
    }

    /// `∀y φ := ¬∃y ¬φ`.
    pub fn forall(y: &str, body: Formula) -> Formula {
        Formula::not(Formula::exists(y, Formula::not(body)))
    }

    /// `R(vars)`.
    pub fn rel(name: &str, vars: &[&str]) -> Formula {
        Formula::Rel(name.to_string(), vars.iter().map(|v| v.to_string()).collect())
    }

    /// `x = y`.
    pub fn eq(x: &str, y: &str) -> Formula {
        Formula::Eq(x.to_string(), y.to_string())
    }

    /// Unscoped `dist(a, b) ≤ bound` (`a = b` when the bound is 0).
    pub fn dist_le(a: &str, b: &str, bound: usize) -> Formula {
        if a == b {
            return Formula::top();
        }
        Formula::Dist { a: a.to_string(), b: b.to_string(), bound, scopes: Vec::new() }
    }

    /// Checked summation-equation constructor.
    pub fn sum_eq(value: CarrierValue, weight: WeightApp, body: Formula) -> Result<Formula> {
        if value.carrier() != weight.carrier {
            return Err(Error::CarrierMismatch(format!("{} = Σ over {}", value.carrier(), weight.carrier)));
        }
        Ok(Formula::SumEq(value, weight, Box::new(body)))
    }

    /// Free variables in first-occurrence order.
    pub fn free_vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        collect_free(self, &mut Vec::new(), &mut out);
        out
    }

    /// `true` iff the formula has no free variables.
    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Applies `f` to every immediate subformula (terms' aggregation bodies included).
    pub fn map_children(&self, f: &mut dyn FnMut(&Formula) -> Result<Formula>) -> Result<Formula> {
        Ok(match self {
            Formula::Not(g) => Formula::Not(Box::new(f(g)?)),
            Formula::Or(gs) => Formula::Or(gs.iter().map(|g| f(g)).collect::<Result<_>>()?),
            Formula::And(gs) => Formula::And(gs.iter().map(|g| f(g)).collect::<Result<_>>()?),
            Formula::Exists(y, g) => Formula::Exists(y.clone(), Box::new(f(g)?)),
            Formula::SumEq(s, w, g) => Formula::SumEq(s.clone(), w.clone(), Box::new(f(g)?)),
            Formula::Pred(p, ts) => Formula::Pred(p.clone(), ts.iter().map(|t| map_term_bodies(t, f)).collect::<Result<_>>()?),
            other => other.clone(),
        })
    }

    /// Rename free occurrences of variables according to `map` (capture is avoided by the
    /// callers' fresh-name discipline: substituted names must not be bound inside `self`).
    pub fn rename_free(&self, map: &HashMap<Var, Var>) -> Formula {
        rename_formula(self, map)
    }

    /// Number of nodes (formula and term nodes), a size measure for caps and tests.
    pub fn size(&self) -> usize {
        match self {
            Formula::Not(g) | Formula::Exists(_, g) | Formula::SumEq(_, _, g) => 1 + g.size(),
            Formula::Or(gs) | Formula::And(gs) => 1 + gs.iter().map(Formula::size).sum::<usize>(),
            Formula::Pred(_, ts) => 1 + ts.iter().map(term_size).sum::<usize>(),
            _ => 1,
        }
    }
}

/// `true` iff some item is the negation of another item.
fn has_complementary(items: &[Formula]) -> bool {
    items.iter().any(|f| match f {
        Formula::Not(inner) => items.contains(inner),
        _ => false,
    })
}

fn term_size(t: &Term) -> usize {
    match t {
        Term::Arith(_, l, r) | Term::Scale(l, r) => 1 + term_size(l) + term_size(r),
        Term::Agg(_, f) => 1 + f.size(),
        _ => 1,
    }
}

/// Applies `f` to the aggregation bodies directly inside `t`.
pub fn map_term_bodies(t: &Term, f: &mut dyn FnMut(&Formula) -> Result<Formula>) -> Result<Term> {
    Ok(match t {
        Term::Arith(op, l, r) => Term::Arith(*op, Box::new(map_term_bodies(l, f)?), Box::new(map_term_bodies(r, f)?)),
        Term::Scale(l, r) => Term::Scale(Box::new(map_term_bodies(l, f)?), Box::new(map_term_bodies(r, f)?)),
        Term::Agg(p, body) => Term::Agg(p.clone(), Box::new(f(body)?)),
        other => other.clone(),
    })
}

fn push_free(v: &Var, bound: &[Var], out: &mut Vec<Var>) {
    if !bound.contains(v) && !out.contains(v) {
        out.push(v.clone());
    }
}

fn collect_free(f: &Formula, bound: &mut Vec<Var>, out: &mut Vec<Var>) {
    match f {
        Formula::Bool(_) => {}
        Formula::Eq(a, b) => {
            push_free(a, bound, out);
            push_free(b, bound, out);
        }
        Formula::Rel(_, vs) => vs.iter().for_each(|v| push_free(v, bound, out)),
        Formula::WeightEq(_, w) => w.vars.iter().for_each(|v| push_free(v, bound, out)),
        Formula::Not(g) => collect_free(g, bound, out),
        Formula::Or(gs) | Formula::And(gs) => gs.iter().for_each(|g| collect_free(g, bound, out)),
        Formula::Exists(y, g) => {
            bound.push(y.clone());
            collect_free(g, bound, out);
            bound.pop();
        }
        Formula::SumEq(_, w, g) => {
            let n = bound.len();
            bound.extend(w.vars.iter().cloned());
            collect_free(g, bound, out);
            bound.truncate(n);
        }
        Formula::Pred(_, ts) => ts.iter().for_each(|t| collect_free_term(t, bound, out)),
        Formula::Dist { a, b, scopes, .. } => {
            push_free(a, bound, out);
            push_free(b, bound, out);
            for s in scopes {
                s.anchors.iter().for_each(|v| push_free(v, bound, out));
            }
        }
    }
}

fn collect_free_term(t: &Term, bound: &mut Vec<Var>, out: &mut Vec<Var>) {
    match t {
        Term::Const(_) => {}
        Term::Weight(w) => w.vars.iter().for_each(|v| push_free(v, bound, out)),
        Term::Arith(_, l, r) | Term::Scale(l, r) => {
            collect_free_term(l, bound, out);
            collect_free_term(r, bound, out);
        }
        Term::Agg(p, g) => {
            let n = bound.len();
            bound.extend(p.vars());
            collect_free(g, bound, out);
            bound.truncate(n);
        }
    }
}

fn rn(v: &Var, map: &HashMap<Var, Var>) -> Var {
    map.get(v).cloned().unwrap_or_else(|| v.clone())
}

fn without(map: &HashMap<Var, Var>, bound: &[Var]) -> HashMap<Var, Var> {
    map.iter().filter(|(k, _)| !bound.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect()
}

fn rename_app(w: &WeightApp, map: &HashMap<Var, Var>) -> WeightApp {
    WeightApp { name: w.name.clone(), carrier: w.carrier.clone(), vars: w.vars.iter().map(|v| rn(v, map)).collect() }
}

fn rename_formula(f: &Formula, map: &HashMap<Var, Var>) -> Formula {
    if map.is_empty() {
        return f.clone();
    }
    match f {
        Formula::Bool(b) => Formula::Bool(*b),
        Formula::Eq(a, b) => Formula::Eq(rn(a, map), rn(b, map)),
        Formula::Rel(r, vs) => Formula::Rel(r.clone(), vs.iter().map(|v| rn(v, map)).collect()),
        Formula::WeightEq(s, w) => Formula::WeightEq(s.clone(), rename_app(w, map)),
        Formula::Not(g) => Formula::Not(Box::new(rename_formula(g, map))),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| rename_formula(g, map)).collect()),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| rename_formula(g, map)).collect()),
        Formula::Exists(y, g) => Formula::Exists(y.clone(), Box::new(rename_formula(g, &without(map, std::slice::from_ref(y))))),
        Formula::SumEq(s, w, g) => Formula::SumEq(s.clone(), w.clone(), Box::new(rename_formula(g, &without(map, &w.vars)))),
        Formula::Pred(p, ts) => Formula::Pred(p.clone(), ts.iter().map(|t| rename_term(t, map)).collect()),
        Formula::Dist { a, b, bound, scopes } => Formula::Dist {
            a: rn(a, map),
            b: rn(b, map),
            bound: *bound,
            scopes: scopes
                .iter()
                .map(|s| Scope { anchors: s.anchors.iter().map(|v| rn(v, map)).collect(), radius: s.radius })
                .collect(),
        },
    }
}

/// Renames free variables of a term.
pub fn rename_term(t: &Term, map: &HashMap<Var, Var>) -> Term {
    match t {
        Term::Const(c) => Term::Const(c.clone()),
        Term::Weight(w) => Term::Weight(rename_app(w, map)),
        Term::Arith(op, l, r) => Term::Arith(*op, Box::new(rename_term(l, map)), Box::new(rename_term(r, map))),
        Term::Scale(l, r) => Term::Scale(Box::new(rename_term(l, map)), Box::new(rename_term(r, map))),
        Term::Agg(p, g) => Term::Agg(p.clone(), Box::new(rename_formula(g, &without(map, &p.vars())))),
    }
}

/// Generator of fresh variable names `_t<k>` from a reserved namespace.
///
/// Names are produced from a per-transformation counter that starts above every `_t<k>`
/// already present, so runs are deterministic and capture-free.
#[derive(Clone, Debug, Default)]
pub struct Fresh {
    next: usize,
}

impl Fresh {
    /// Counter starting above all reserved names occurring in `f`.
    pub fn for_formula(f: &Formula) -> Fresh {
        let mut fresh = Fresh::default();
        fresh.reserve_formula(f);
        fresh
    }

    /// Ensures future names do not clash with reserved names occurring in `f`.
    pub fn reserve_formula(&mut self, f: &Formula) {
        let mut names = BTreeSet::new();
        all_vars(f, &mut names);
        for n in names {
            self.reserve(&n);
        }
    }

    /// Ensures future names do not clash with `name`.
    pub fn reserve(&mut self, name: &str) {
        if let Some(k) = name.strip_prefix("_t").and_then(|k| k.parse::<usize>().ok()) {
            self.next = self.next.max(k + 1);
        }
    }

    /// A new variable name.
    pub fn var(&mut self) -> Var {
        let v = format!("_t{}", self.next);
        self.next += 1;
        v
    }
}

/// Every variable name occurring in `f`, bound or free.
pub fn all_vars(f: &Formula, out: &mut BTreeSet<Var>) {
    match f {
        Formula::Bool(_) => {}
        Formula::Eq(a, b) => {
            out.insert(a.clone());
            out.insert(b.clone());
        }
        Formula::Rel(_, vs) => out.extend(vs.iter().cloned()),
        Formula::WeightEq(_, w) => out.extend(w.vars.iter().cloned()),
        Formula::Not(g) => all_vars(g, out),
        Formula::Or(gs) | Formula::And(gs) => gs.iter().for_each(|g| all_vars(g, out)),
        Formula::Exists(y, g) => {
            out.insert(y.clone());
            all_vars(g, out);
        }
        Formula::SumEq(_, w, g) => {
            out.extend(w.vars.iter().cloned());
            all_vars(g, out);
        }
        Formula::Pred(_, ts) => ts.iter().for_each(|t| all_vars_term(t, out)),
        Formula::Dist { a, b, scopes, .. } => {
            out.insert(a.clone());
            out.insert(b.clone());
            for s in scopes {
                out.extend(s.anchors.iter().cloned());
            }
        }
    }
}

fn all_vars_term(t: &Term, out: &mut BTreeSet<Var>) {
    match t {
        Term::Const(_) => {}
        Term::Weight(w) => out.extend(w.vars.iter().cloned()),
        Term::Arith(_, l, r) | Term::Scale(l, r) => {
            all_vars_term(l, out);
            all_vars_term(r, out);
        }
        Term::Agg(p, g) => {
            out.extend(p.vars());
            all_vars(g, out);
        }
    }
}

/// Renames every bound variable of `f` to a fresh name, so that binders are pairwise
/// distinct and distinct from all free variables.
pub fn rename_apart(f: &Formula, fresh: &mut Fresh) -> Formula {
    match f {
        Formula::Exists(y, g) => {
            let z = fresh.var();
            let body = rename_apart(g, fresh).rename_free(&HashMap::from([(y.clone(), z.clone())]));
            Formula::Exists(z, Box::new(body))
        }
        Formula::SumEq(s, w, g) => {
            let map: HashMap<Var, Var> = w.vars.iter().map(|v| (v.clone(), fresh.var())).collect();
            let body = rename_apart(g, fresh).rename_free(&map);
            let w2 = WeightApp { name: w.name.clone(), carrier: w.carrier.clone(), vars: w.vars.iter().map(|v| map[v].clone()).collect() };
            Formula::SumEq(s.clone(), w2, Box::new(body))
        }
        Formula::Not(g) => Formula::Not(Box::new(rename_apart(g, fresh))),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| rename_apart(g, fresh)).collect()),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| rename_apart(g, fresh)).collect()),
        Formula::Pred(p, ts) => Formula::Pred(p.clone(), ts.iter().map(|t| rename_apart_term(t, fresh)).collect()),
        other => other.clone(),
    }
}

fn rename_apart_term(t: &Term, fresh: &mut Fresh) -> Term {
    match t {
        Term::Agg(p, g) => {
            let map: HashMap<Var, Var> = p.vars().into_iter().map(|v| (v, fresh.var())).collect();
            let body = rename_apart(g, fresh).rename_free(&map);
            let factors = p
                .factors
                .iter()
                .map(|f| match f {
                    Factor::Weight(w) => Factor::Weight(rename_app(w, &map)),
                    c => c.clone(),
                })
                .collect();
            Term::Agg(WProduct { carrier: p.carrier.clone(), factors }, Box::new(body))
        }
        Term::Arith(op, l, r) => Term::Arith(*op, Box::new(rename_apart_term(l, fresh)), Box::new(rename_apart_term(r, fresh))),
        Term::Scale(l, r) => Term::Scale(Box::new(rename_apart_term(l, fresh)), Box::new(rename_apart_term(r, fresh))),
        other => other.clone(),
    }
}

/// Expands the derived nodes `Bool` and `And` into the core rules (`⊥ := ∃z ¬z=z`,
/// `⊤ := ¬⊥`, `φ∧ψ := ¬(¬φ∨¬ψ)`). Distance atoms and scaling terms are left intact.
pub fn desugar(f: &Formula, fresh: &mut Fresh) -> Formula {
    match f {
        Formula::Bool(b) => {
            let z = fresh.var();
            let bot = Formula::Exists(z.clone(), Box::new(Formula::Not(Box::new(Formula::Eq(z.clone(), z)))));
            if *b {
                Formula::Not(Box::new(bot))
            } else {
                bot
            }
        }
        Formula::And(gs) => {
            if gs.is_empty() {
                return desugar(&Formula::Bool(true), fresh);
            }
            let negs: Vec<Formula> = gs.iter().map(|g| Formula::Not(Box::new(desugar(g, fresh)))).collect();
            Formula::Not(Box::new(if negs.len() == 1 { negs.into_iter().next().unwrap() } else { Formula::Or(negs) }))
        }
        Formula::Or(gs) if gs.is_empty() => desugar(&Formula::Bool(false), fresh),
        other => other
            .map_children(&mut |g| Ok(desugar(g, fresh)))
            .expect("desugaring is infallible"),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&parse::print_formula(self))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&parse::print_term(self))
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expression::Formula(g) => g.fmt(f),
            Expression::Term(t) => t.fmt(f),
        }
    }
}
