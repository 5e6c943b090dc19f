//! Seeded generators for test fixtures: signatures inferred from formulas, random
//! bounded-degree structures, random formulas with fragment/rank controls, and the
//! semantic locality spot check used to validate transformations.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{ArithOp, Carrier, CarrierValue, PredicateDef};
use crate::error::{Error, Result};
use crate::logic::analyze::Fragment;
use crate::logic::{Evaluator, Factor, Formula, Term, Var, WProduct, WeightApp};
use crate::structure::{builtin_one, generate, GenParams, GenWeight, Signature, WeightedStructure};

/// Collects the relation and weight symbols used by `f` (built-in `one` weights excluded).
pub fn infer_signature(f: &Formula) -> Result<Signature> {
    let mut rels: BTreeMap<String, usize> = BTreeMap::new();
    let mut weights: BTreeMap<String, (usize, Carrier)> = BTreeMap::new();
    collect_formula(f, &mut rels, &mut weights)?;
    let mut sig = Signature::new();
    for (name, arity) in rels {
        sig.add_relation(&name, arity)?;
    }
    for (name, (arity, carrier)) in weights {
        sig.add_weight(&name, arity, carrier)?;
    }
    Ok(sig)
}

type Rels = BTreeMap<String, usize>;
type Weights = BTreeMap<String, (usize, Carrier)>;

fn note_weight(w: &WeightApp, weights: &mut Weights) -> Result<()> {
    if builtin_one(&w.name).is_some() {
        return Ok(());
    }
    let entry = (w.vars.len(), w.carrier.clone());
    match weights.get(&w.name) {
        Some(prev) if prev != &entry => Err(Error::SignatureMismatch(format!("weight {} used inconsistently", w.name))),
        _ => {
            weights.insert(w.name.clone(), entry);
            Ok(())
        }
    }
}

fn collect_formula(f: &Formula, rels: &mut Rels, weights: &mut Weights) -> Result<()> {
    match f {
        Formula::Bool(_) | Formula::Eq(..) | Formula::Dist { .. } => Ok(()),
        Formula::Rel(name, vars) => match rels.get(name) {
            Some(&a) if a != vars.len() => Err(Error::SignatureMismatch(format!("relation {name} used with two arities"))),
            _ => {
                rels.insert(name.clone(), vars.len());
                Ok(())
            }
        },
        Formula::WeightEq(_, w) => note_weight(w, weights),
        Formula::Not(g) | Formula::Exists(_, g) => collect_formula(g, rels, weights),
        Formula::Or(gs) | Formula::And(gs) => gs.iter().try_for_each(|g| collect_formula(g, rels, weights)),
        Formula::SumEq(_, w, g) => {
            note_weight(w, weights)?;
            collect_formula(g, rels, weights)
        }
        Formula::Pred(_, ts) => ts.iter().try_for_each(|t| collect_term(t, rels, weights)),
    }
}

fn collect_term(t: &Term, rels: &mut Rels, weights: &mut Weights) -> Result<()> {
    match t {
        Term::Const(_) => Ok(()),
        Term::Weight(w) => note_weight(w, weights),
        Term::Arith(_, a, b) | Term::Scale(a, b) => {
            collect_term(a, rels, weights)?;
            collect_term(b, rels, weights)
        }
        Term::Agg(p, body) => {
            for factor in &p.factors {
                if let Factor::Weight(w) = factor {
                    note_weight(w, weights)?;
                }
            }
            collect_formula(body, rels, weights)
        }
    }
}

/// Small value pool used for random weights of the given carrier (zero included).
pub fn value_pool(carrier: &Carrier) -> Vec<CarrierValue> {
    match carrier {
        Carrier::IntegerRing => [-1, 0, 1, 1, 2, 3].iter().map(|&v| CarrierValue::int(v)).collect(),
        Carrier::RationalField => {
            [(1, 2), (-1, 1), (0, 1), (2, 1), (3, 4), (1, 1)].iter().map(|&(n, d)| CarrierValue::rat(n, d)).collect()
        }
        Carrier::ResidueGroup(_) => carrier.elements().unwrap_or_default(),
        Carrier::RationalVectorGroup(k) => {
            let mk = |f: &dyn Fn(usize) -> (i64, i64)| {
                Carrier::RationalVectorGroup(*k)
                    .parse_value(&format!(
                        "({})",
                        (0..*k).map(|i| {
                            let (n, d) = f(i);
                            format!("{n}/{d}")
                        })
                        .collect::<Vec<_>>()
                        .join(", ")
                    ))
                    .expect("well-formed vector literal")
            };
            vec![mk(&|_| (0, 1)), mk(&|i| (i as i64 + 1, 2)), mk(&|i| (1 - i as i64, 1))]
        }
    }
}

/// Default relation probability by arity: a nullary relation holds with probability 1/2,
/// unary tuples 0.4, binary candidate draws 0.25, higher arities 0.05.
pub fn default_probability(arity: usize) -> f64 {
    match arity {
        0 => 0.5,
        1 => 0.4,
        2 => 0.25,
        _ => 0.05,
    }
}

/// Generator parameters for a random structure over `sig` with default probabilities.
pub fn params_for(sig: &Signature, size: usize, degree_bound: usize, seed: u64) -> GenParams {
    GenParams {
        size,
        degree_bound,
        relations: sig.relations().iter().map(|(n, a)| (n.clone(), *a, default_probability(*a))).collect(),
        weights: sig
            .weights()
            .iter()
            .map(|(n, a, c)| GenWeight { name: n.clone(), arity: *a, carrier: c.clone(), pool: value_pool(c), density: 0.6 })
            .collect(),
        seed,
    }
}

/// A seeded random structure over `sig` with Gaifman degree at most `degree_bound`.
pub fn random_structure(sig: &Signature, size: usize, degree_bound: usize, seed: u64) -> Result<WeightedStructure> {
    generate(&params_for(sig, size, degree_bound, seed))
}

/// A pool of `count` seeded structures with sizes cycling through `1..=max_size`.
pub fn structure_pool(sig: &Signature, count: usize, max_size: usize, degree_bound: usize, seed: u64) -> Result<Vec<WeightedStructure>> {
    (0..count)
        .map(|i| random_structure(sig, 1 + i % max_size.max(1), degree_bound, seed.wrapping_mul(0x9E37_79B9).wrapping_add(i as u64)))
        .collect()
}

/// The signature used by the randomised test suites: `E/2`, `T/3`, `R/1`, `B/1`, `C/0` and
/// weights `w/2: Q`, `q/1: Q`, `c/1: Z`, `m/1: Z/3`, `p/2: Z/2`.
pub fn standard_signature() -> Signature {
    Signature::new()
        .with_relation("E", 2)
        .and_then(|s| s.with_relation("T", 3))
        .and_then(|s| s.with_relation("R", 1))
        .and_then(|s| s.with_relation("B", 1))
        .and_then(|s| s.with_relation("C", 0))
        .and_then(|s| s.with_weight("w", 2, Carrier::RationalField))
        .and_then(|s| s.with_weight("q", 1, Carrier::RationalField))
        .and_then(|s| s.with_weight("c", 1, Carrier::IntegerRing))
        .and_then(|s| s.with_weight("m", 1, Carrier::ResidueGroup(3)))
        .and_then(|s| s.with_weight("p", 2, Carrier::ResidueGroup(2)))
        .expect("standard signature is well-formed")
}

/// Checks `r`-locality of `f` around `anchors` on seeded random structures: for every
/// assignment of the anchors, evaluation in the structure and in `N_r(anchors)` must agree.
///
/// Returns [`Error::NotLocal`] on the first disagreement.
pub fn spot_check_local(f: &Formula, r: usize, anchors: &[Var], seed: u64) -> Result<()> {
    let free = f.free_vars();
    if let Some(v) = free.iter().find(|v| !anchors.contains(v)) {
        return Err(Error::UnboundVariable(v.clone()));
    }
    let mut sig = infer_signature(f)?;
    if !sig.relations().iter().any(|(_, a)| *a >= 2) {
        // Distance atoms need edges to be exercised.
        sig.add_relation("__edge", 2)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5107_C4EC);
    for round in 0..12 {
        let n = 1 + round % 7;
        let s = random_structure(&sig, n, 3, rng.gen())?;
        let eval = Evaluator::new(&s);
        for _ in 0..6 {
            let tuple: Vec<usize> = anchors.iter().map(|_| rng.gen_range(0..n)).collect();
            let mut asg: Vec<(Var, usize)> = anchors.iter().cloned().zip(tuple.iter().copied()).collect();
            let global = eval.formula(f, &mut asg)?;
            let (sub, ids) = s.induced_neighborhood(&tuple, r)?;
            let mut local_asg: Vec<(Var, usize)> = anchors
                .iter()
                .cloned()
                .zip(tuple.iter().map(|a| ids.binary_search(a).expect("anchor lies in its ball")))
                .collect();
            let local = Evaluator::new(&sub).formula(f, &mut local_asg)?;
            if global != local {
                return Err(Error::NotLocal(r));
            }
        }
    }
    Ok(())
}

/// Knobs for [`FormulaGen`].
#[derive(Clone, Debug)]
pub struct FormulaGenConfig {
    /// Largest fragment the output may belong to.
    pub fragment: Fragment,
    /// Quantifier-rank budget (∃ and summation equations).
    pub max_qr: usize,
    /// Aggregation-depth budget (only used for `WA1` and `WA`).
    pub max_agg_depth: usize,
    /// Nesting budget for Boolean connectives.
    pub max_depth: usize,
    /// Whether distance atoms may be generated.
    pub allow_dist: bool,
}

impl Default for FormulaGenConfig {
    fn default() -> Self {
        FormulaGenConfig { fragment: Fragment::FOW1, max_qr: 2, max_agg_depth: 0, max_depth: 3, allow_dist: true }
    }
}

/// Seeded random formula generator over [`standard_signature`]-shaped signatures.
///
/// The generator only uses symbols present in its signature; built-in `one` weights are
/// always available.
pub struct FormulaGen {
    sig: Signature,
    cfg: FormulaGenConfig,
    rng: ChaCha8Rng,
    counter: usize,
}

impl FormulaGen {
    pub fn new(sig: Signature, cfg: FormulaGenConfig, seed: u64) -> Self {
        FormulaGen { sig, cfg, rng: ChaCha8Rng::seed_from_u64(seed), counter: 0 }
    }

    /// A formula whose free variables are among `free`.
    pub fn formula(&mut self, free: &[&str]) -> Formula {
        let scope: Vec<Var> = free.iter().map(|s| s.to_string()).collect();
        let (qr, agg, depth) = (self.cfg.max_qr, self.cfg.max_agg_depth, self.cfg.max_depth);
        self.gen_formula(&scope, qr, agg, depth)
    }

    /// A formula using every variable of `free` (retrying a bounded number of times).
    pub fn formula_using(&mut self, free: &[&str]) -> Formula {
        let mut last = self.formula(free);
        for _ in 0..20 {
            if last.free_vars().len() == free.len() {
                break;
            }
            last = self.formula(free);
        }
        last
    }

    /// An aggregation term of the given carrier with free variables among `free`.
    pub fn agg_term(&mut self, carrier: &Carrier, free: &[&str]) -> Term {
        let scope: Vec<Var> = free.iter().map(|s| s.to_string()).collect();
        let (qr, agg, depth) = (self.cfg.max_qr, self.cfg.max_agg_depth.max(1), self.cfg.max_depth);
        self.gen_agg(carrier, &scope, qr, agg, depth)
    }

    fn fresh(&mut self) -> Var {
        self.counter += 1;
        format!("v{}", self.counter)
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.rng.gen_range(0..items.len())]
    }

    fn weighted_fragment(&self) -> bool {
        self.cfg.fragment >= Fragment::FOW1
    }

    fn gen_formula(&mut self, scope: &[Var], qr: usize, agg: usize, depth: usize) -> Formula {
        let leaf_p = if depth == 0 { 1.0 } else { 0.3 };
        if self.chance(leaf_p) {
            return self.gen_atom(scope, agg, depth);
        }
        let mut options = vec![0u8, 1, 2];
        if qr > 0 {
            options.extend([3, 3]);
            if self.weighted_fragment() {
                options.push(4);
            }
        }
        match *self.pick(&options) {
            0 => Formula::Not(Box::new(self.gen_formula(scope, qr, agg, depth - 1))),
            1 => {
                let a = self.gen_formula(scope, qr, agg, depth - 1);
                let b = self.gen_formula(scope, qr, agg, depth - 1);
                Formula::Or(vec![a, b])
            }
            2 => {
                let a = self.gen_formula(scope, qr, agg, depth - 1);
                let b = self.gen_formula(scope, qr, agg, depth - 1);
                Formula::And(vec![a, b])
            }
            3 => {
                let y = self.fresh();
                let mut inner = scope.to_vec();
                inner.push(y.clone());
                let body = self.gen_formula_mentioning(&inner, &y, qr - 1, agg, depth - 1);
                Formula::Exists(y, Box::new(body))
            }
            _ => self.gen_sum_eq(scope, qr, agg, depth),
        }
    }

    /// Like `gen_formula`, but biased towards formulas in which `v` occurs free.
    fn gen_formula_mentioning(&mut self, scope: &[Var], v: &Var, qr: usize, agg: usize, depth: usize) -> Formula {
        for _ in 0..4 {
            let f = self.gen_formula(scope, qr, agg, depth);
            if f.free_vars().contains(v) {
                return f;
            }
        }
        self.gen_formula(scope, qr, agg, depth)
    }

    fn sum_weights(&self) -> Vec<(String, usize, Carrier)> {
        let finite_only = self.cfg.fragment <= Fragment::WA1;
        let mut out: Vec<(String, usize, Carrier)> = vec![
            ("one2".into(), 1, Carrier::ResidueGroup(2)),
            ("one3".into(), 1, Carrier::ResidueGroup(3)),
        ];
        if !finite_only {
            out.push(("one".into(), 1, Carrier::IntegerRing));
        }
        for (n, a, c) in self.sig.weights() {
            if !finite_only || c.is_finite() {
                out.push((n.clone(), *a, c.clone()));
            }
        }
        out
    }

    fn gen_sum_eq(&mut self, scope: &[Var], qr: usize, agg: usize, depth: usize) -> Formula {
        let candidates = self.sum_weights();
        let (name, arity, carrier) = self.pick(&candidates).clone();
        let ys: Vec<Var> = (0..arity).map(|_| self.fresh()).collect();
        let mut inner = scope.to_vec();
        inner.extend(ys.iter().cloned());
        let body = self.gen_formula_mentioning(&inner, &ys[0], qr - 1, agg, depth.saturating_sub(1));
        let value = self.gen_value(&carrier);
        let w = WeightApp::new(&name, carrier, ys).expect("fresh variables are distinct");
        Formula::SumEq(value, w, Box::new(body))
    }

    fn gen_value(&mut self, carrier: &Carrier) -> CarrierValue {
        let pool = value_pool(carrier);
        self.pick(&pool).clone()
    }

    fn gen_atom(&mut self, scope: &[Var], agg: usize, depth: usize) -> Formula {
        if scope.is_empty() {
            let nullary: Vec<String> = self.sig.relations().iter().filter(|(_, a)| *a == 0).map(|(n, _)| n.clone()).collect();
            if !nullary.is_empty() && self.chance(0.7) {
                return Formula::Rel(self.pick(&nullary).clone(), vec![]);
            }
            let b = self.chance(0.5);
            return Formula::Bool(b);
        }
        let mut options = vec![0u8, 1, 1, 1];
        if self.cfg.allow_dist && scope.len() >= 2 {
            options.push(2);
        }
        if self.weighted_fragment() {
            options.extend([3, 4]);
        }
        match *self.pick(&options) {
            0 => {
                let a = self.pick(scope).clone();
                let b = self.pick(scope).clone();
                Formula::Eq(a, b)
            }
            1 => {
                let rels: Vec<(String, usize)> = self.sig.relations().to_vec();
                if rels.is_empty() {
                    return Formula::Bool(true);
                }
                let (name, arity) = self.pick(&rels).clone();
                let vars = (0..arity).map(|_| self.pick(scope).clone()).collect();
                Formula::Rel(name, vars)
            }
            2 => {
                let mut vs = scope.to_vec();
                vs.shuffle(&mut self.rng);
                let bound = self.rng.gen_range(1..=3);
                Formula::Dist { a: vs[0].clone(), b: vs[1].clone(), bound, scopes: vec![] }
            }
            3 => {
                let weights: Vec<(String, usize, Carrier)> =
                    self.sig.weights().iter().filter(|(_, a, _)| *a <= scope.len()).cloned().collect();
                if weights.is_empty() {
                    return Formula::Eq(scope[0].clone(), scope[0].clone());
                }
                let (name, arity, carrier) = self.pick(&weights).clone();
                let mut vs = scope.to_vec();
                vs.shuffle(&mut self.rng);
                vs.truncate(arity);
                let value = self.gen_value(&carrier);
                Formula::WeightEq(value, WeightApp::new(&name, carrier, vs).expect("distinct variables"))
            }
            _ => self.gen_pred(scope, agg, depth),
        }
    }

    fn pred_carriers(&self) -> Vec<Carrier> {
        vec![Carrier::IntegerRing, Carrier::RationalField, Carrier::ResidueGroup(3), Carrier::ResidueGroup(2)]
    }

    fn gen_pred(&mut self, scope: &[Var], agg: usize, depth: usize) -> Formula {
        // Restricted fragments: at most one free variable across all terms.
        let term_scope: Vec<Var> = if self.cfg.fragment == Fragment::WA {
            scope.to_vec()
        } else if self.chance(0.8) {
            vec![self.pick(scope).clone()]
        } else {
            vec![]
        };
        let carriers = self.pred_carriers();
        let carrier = self.pick(&carriers).clone();
        let use_agg = agg > 0 && self.cfg.fragment >= Fragment::WA1;
        let t1 = self.gen_term(&carrier, &term_scope, use_agg, agg, depth);
        if carrier == Carrier::IntegerRing && self.chance(0.3) {
            let p = PredicateDef::at_least_one();
            return Formula::Pred(p, vec![t1]);
        }
        let second_agg = use_agg && self.chance(0.4);
        let t2 = self.gen_term(&carrier, &term_scope, second_agg, agg, depth);
        let names: &[&str] = if carrier.is_ordered() { &["eq", "ne", "ge", "gt", "le", "lt"] } else { &["eq", "ne"] };
        let name = *self.pick(names);
        let p = PredicateDef::resolve(name, &[carrier.clone(), carrier]).expect("library predicate");
        Formula::Pred(p, vec![t1, t2])
    }

    fn gen_term(&mut self, carrier: &Carrier, scope: &[Var], use_agg: bool, agg: usize, depth: usize) -> Term {
        if use_agg {
            let qr = self.cfg.max_qr.min(1);
            let t = self.gen_agg(carrier, scope, qr, agg, depth.saturating_sub(1));
            if carrier.is_ring() && self.chance(0.25) {
                let c = Term::Const(self.gen_value(carrier));
                return Term::Arith(ArithOp::Mul, Box::new(t), Box::new(c));
            }
            if self.chance(0.2) {
                let c = self.gen_simple_term(carrier, scope);
                return Term::Arith(ArithOp::Add, Box::new(t), Box::new(c));
            }
            return t;
        }
        let t = self.gen_simple_term(carrier, scope);
        if self.chance(0.25) {
            let op = if carrier.is_ring() { *self.pick(&[ArithOp::Add, ArithOp::Sub, ArithOp::Mul]) } else { ArithOp::Sub };
            let u = self.gen_simple_term(carrier, scope);
            return Term::Arith(op, Box::new(t), Box::new(u));
        }
        t
    }

    /// A constant or a weight application over `scope` of the given carrier.
    fn gen_simple_term(&mut self, carrier: &Carrier, scope: &[Var]) -> Term {
        let mut apps: Vec<(String, usize)> = self
            .sig
            .weights()
            .iter()
            .filter(|(_, a, c)| c == carrier && *a <= scope.len())
            .map(|(n, a, _)| (n.clone(), *a))
            .collect();
        if !scope.is_empty() {
            match carrier {
                Carrier::IntegerRing => apps.push(("one".into(), 1)),
                Carrier::ResidueGroup(m) => apps.push((format!("one{m}"), 1)),
                _ => {}
            }
        }
        if apps.is_empty() || self.chance(0.3) {
            return Term::Const(self.gen_value(carrier));
        }
        let (name, arity) = self.pick(&apps).clone();
        let mut vs = scope.to_vec();
        vs.shuffle(&mut self.rng);
        vs.truncate(arity);
        Term::Weight(WeightApp::new(&name, carrier.clone(), vs).expect("distinct variables"))
    }

    /// Weight symbols (name, arity) of `carrier` usable as product factors, built-ins included.
    fn factor_symbols(&self, carrier: &Carrier) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> =
            self.sig.weights().iter().filter(|(_, _, c)| c == carrier).map(|(n, a, _)| (n.clone(), *a)).collect();
        match carrier {
            Carrier::IntegerRing => out.push(("one".into(), 1)),
            Carrier::ResidueGroup(m) => out.push((format!("one{m}"), 1)),
            _ => {}
        }
        out
    }

    fn gen_agg(&mut self, carrier: &Carrier, scope: &[Var], qr: usize, agg: usize, depth: usize) -> Term {
        let symbols = self.factor_symbols(carrier);
        let mut factors: Vec<Factor> = Vec::new();
        let mut bound: Vec<Var> = Vec::new();
        if symbols.is_empty() {
            // Fall back to counting when no weight of this carrier exists.
            let z = self.fresh();
            let count = WProduct::counting(std::slice::from_ref(&z));
            let body = self.gen_formula_mentioning(&[scope, std::slice::from_ref(&z)].concat(), &z, qr, agg - 1, depth);
            let t = Term::Agg(count, Box::new(body));
            let c = Term::Const(self.gen_value(carrier));
            return Term::Scale(Box::new(t), Box::new(c));
        }
        let n_factors = if carrier.is_ring() { self.rng.gen_range(1..=2) } else { 1 };
        for _ in 0..n_factors {
            let (name, arity) = self.pick(&symbols).clone();
            let vs: Vec<Var> = (0..arity)
                .map(|i| if i < bound.len() && self.chance(0.5) { bound[i].clone() } else { self.fresh() })
                .collect();
            let mut distinct = vs.clone();
            distinct.sort();
            distinct.dedup();
            let vs = if distinct.len() == vs.len() { vs } else { (0..arity).map(|_| self.fresh()).collect() };
            for v in &vs {
                if !bound.contains(v) {
                    bound.push(v.clone());
                }
            }
            factors.push(Factor::Weight(WeightApp::new(&name, carrier.clone(), vs).expect("distinct variables")));
        }
        if carrier.is_ring() && self.chance(0.2) {
            factors.push(Factor::Const(self.gen_value(carrier)));
        }
        let product = WProduct::new(carrier.clone(), factors).expect("well-typed product");
        let mut inner = scope.to_vec();
        inner.extend(bound.iter().cloned());
        let first = bound[0].clone();
        let mut body = self.gen_formula_mentioning(&inner, &first, qr, agg - 1, depth);
        if !scope.is_empty() && self.chance(0.6) {
            // Tie the sum to the outer variable so the term is not constant.
            let outer = self.pick(scope).clone();
            let rels: Vec<(String, usize)> = self.sig.relations().iter().filter(|(_, a)| *a == 2).cloned().collect();
            if let Some((name, _)) = rels.first() {
                body = Formula::And(vec![Formula::Rel(name.clone(), vec![outer, first]), body]);
            }
        }
        Term::Agg(product, Box::new(body))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::analyze::{analyze, quantifier_rank};
    use crate::logic::Expression;

    #[test]
    fn generated_formulas_respect_budgets() {
        for fragment in [Fragment::FO, Fragment::FOW1, Fragment::WA1, Fragment::WA] {
            let cfg = FormulaGenConfig { fragment, max_qr: 2, max_agg_depth: 2, max_depth: 3, allow_dist: true };
            let mut g = FormulaGen::new(standard_signature(), cfg, 7);
            for _ in 0..200 {
                let f = g.formula(&["x", "y"]);
                let info = analyze(&Expression::Formula(f.clone()));
                assert!(info.fragment <= fragment, "{f} is {:?}", info.fragment);
                assert!(quantifier_rank(&f) <= 2 + 2, "{f}");
                assert!(info.free_vars.iter().all(|v| v == "x" || v == "y"), "{f}");
            }
        }
    }

    #[test]
    fn random_structures_fit_the_degree_bound() {
        let sig = standard_signature();
        for seed in 0..20 {
            let s = random_structure(&sig, 8, 3, seed).unwrap();
            assert!(s.degree() <= 3);
        }
    }

    #[test]
    fn signature_inference_collects_symbols() {
        let f = crate::logic::parse_formula("(and (rel E x y) (exists z (weq 1/2:Q w x z)))", &standard_signature()).unwrap();
        let sig = infer_signature(&f).unwrap();
        assert_eq!(sig.relations(), &[("E".to_string(), 2)]);
        assert_eq!(sig.weights().len(), 1);
    }

    #[test]
    fn spot_check_rejects_global_formula() {
        let f = crate::logic::parse_formula("(exists y (rel R y))", &standard_signature()).unwrap();
        assert!(matches!(spot_check_local(&f, 1, &["x".into()], 0), Err(Error::NotLocal(1))));
        let g = crate::logic::parse_formula("(exists y (and (rel E x y) (rel R y)))", &standard_signature()).unwrap();
        spot_check_local(&g, 1, &["x".into()], 0).unwrap();
    }
}
