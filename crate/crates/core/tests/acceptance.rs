//! Acceptance suite: ten end-to-end criteria, each checked exactly against brute force.
//!
//! Run with `cargo test -p wagg-core --test acceptance`. Every criterion prints one
//! `PASS`/`FAIL` line with a short measurement; the process exits nonzero if any fails.

use std::collections::{BTreeSet, VecDeque};
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wagg_core::algebra::{combine, eval_predicate, Carrier, CarrierValue};
use wagg_core::clkernel::{clterms_from_aggregation, evaluate_all_cl, expand_structure};
use wagg_core::gen::{random_structure, standard_signature, structure_pool, FormulaGen, FormulaGenConfig};
use wagg_core::learning::{
    exact_learn, pac_learn, run_generalization_experiment, sample_size, ExampleDistribution, ExperimentConfig,
    HypothesisClass, Rate, TrainingSequence,
};
use wagg_core::locality::{fv_decompose, gaifman_nf, localize, Caps};
use wagg_core::logic::{evaluate_formula, evaluate_term, Factor, Scope, WProduct, WeightApp};
use wagg_core::structure::all_tuples;
use wagg_core::{
    analyze, evaluate, parse_formula, Expression, Formula, Fragment, LocalAccessOracle, Signature, Term, Value, Var,
    WeightedStructure,
};

// ---------------------------------------------------------------------------------------
// Independent exhaustive evaluator
// ---------------------------------------------------------------------------------------

/// A deliberately naive evaluator: every quantifier and every sum enumerates the whole
/// universe, and distances are recomputed by breadth-first search over an adjacency built
/// here from the relation tuples. It shares only carrier arithmetic and the predicate
/// library with the crate.
struct Naive<'s> {
    s: &'s WeightedStructure,
    adj: Vec<BTreeSet<usize>>,
}

type Asg = Vec<(Var, usize)>;

impl<'s> Naive<'s> {
    fn new(s: &'s WeightedStructure) -> Self {
        let mut adj = vec![BTreeSet::new(); s.size()];
        for (name, _) in s.signature().relations() {
            for t in s.relation(name).unwrap().tuples() {
                for &a in t {
                    for &b in t {
                        if a != b {
                            adj[a].insert(b);
                        }
                    }
                }
            }
        }
        Naive { s, adj }
    }

    fn get(asg: &Asg, v: &str) -> usize {
        asg.iter().rev().find(|(n, _)| n == v).unwrap_or_else(|| panic!("unbound {v}")).1
    }

    /// Elements reachable from `a` in at most `r` steps through vertices of `dom`.
    fn reach(&self, a: usize, r: usize, dom: Option<&BTreeSet<usize>>) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([a]);
        let mut queue = VecDeque::from([(a, 0)]);
        while let Some((u, d)) = queue.pop_front() {
            if d == r {
                continue;
            }
            for &v in &self.adj[u] {
                if dom.is_some_and(|dom| !dom.contains(&v)) || !seen.insert(v) {
                    continue;
                }
                queue.push_back((v, d + 1));
            }
        }
        seen
    }

    fn dist(&self, a: &str, b: &str, bound: usize, scopes: &[Scope], asg: &Asg) -> bool {
        let (x, y) = (Self::get(asg, a), Self::get(asg, b));
        let mut dom: Option<BTreeSet<usize>> = None;
        for sc in scopes.iter().rev() {
            let mut next = BTreeSet::new();
            for v in &sc.anchors {
                let ball = self.reach(Self::get(asg, v), sc.radius, dom.as_ref());
                next.extend(ball.into_iter().filter(|e| dom.as_ref().is_none_or(|d| d.contains(e))));
            }
            dom = Some(next);
        }
        x == y || self.reach(x, bound, dom.as_ref()).contains(&y)
    }

    fn weight(&self, w: &WeightApp, asg: &Asg) -> CarrierValue {
        let t: Vec<usize> = w.vars.iter().map(|v| Self::get(asg, v)).collect();
        self.s.weight(&w.name, &t).unwrap()
    }

    fn tuples(&self, k: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..k {
            out = out.into_iter().flat_map(|t| (0..self.s.size()).map(move |a| [t.clone(), vec![a]].concat())).collect();
        }
        out
    }

    fn with<T>(&self, asg: &mut Asg, vars: &[Var], vals: &[usize], f: impl FnOnce(&mut Asg) -> T) -> T {
        let n = asg.len();
        asg.extend(vars.iter().cloned().zip(vals.iter().copied()));
        let r = f(asg);
        asg.truncate(n);
        r
    }

    fn formula(&self, f: &Formula, asg: &mut Asg) -> bool {
        match f {
            Formula::Bool(b) => *b,
            Formula::Eq(a, b) => Self::get(asg, a) == Self::get(asg, b),
            Formula::Rel(r, vs) => {
                let t: Vec<usize> = vs.iter().map(|v| Self::get(asg, v)).collect();
                self.s.relation(r).unwrap().contains(&t)
            }
            Formula::WeightEq(c, w) => &self.weight(w, asg) == c,
            Formula::Not(g) => !self.formula(g, asg),
            Formula::Or(gs) => gs.iter().any(|g| self.formula(g, asg)),
            Formula::And(gs) => gs.iter().all(|g| self.formula(g, asg)),
            Formula::Exists(y, g) => (0..self.s.size()).any(|a| self.with(asg, std::slice::from_ref(y), &[a], |asg| self.formula(g, asg))),
            Formula::SumEq(c, w, g) => {
                let mut acc = w.carrier.zero();
                for t in self.tuples(w.vars.len()) {
                    // Zero summands cannot change the sum, so their body is not evaluated.
                    let (hit, v) = self.with(asg, &w.vars, &t, |asg| {
                        let v = self.weight(w, asg);
                        (!v.is_zero() && self.formula(g, asg), v)
                    });
                    if hit {
                        acc = combine(&acc, &v, wagg_core::ArithOp::Add).unwrap();
                    }
                }
                &acc == c
            }
            Formula::Pred(p, ts) => {
                let args: Vec<CarrierValue> = ts.iter().map(|t| self.term(t, asg)).collect();
                eval_predicate(p, &args).unwrap()
            }
            Formula::Dist { a, b, bound, scopes } => self.dist(a, b, *bound, scopes, asg),
        }
    }

    fn product(&self, p: &WProduct, asg: &Asg) -> CarrierValue {
        let values = p.factors.iter().map(|f| match f {
            Factor::Const(c) => c.clone(),
            Factor::Weight(w) => self.weight(w, asg),
        });
        values.reduce(|a, b| combine(&a, &b, wagg_core::ArithOp::Mul).unwrap()).unwrap()
    }

    fn term(&self, t: &Term, asg: &mut Asg) -> CarrierValue {
        match t {
            Term::Const(c) => c.clone(),
            Term::Weight(w) => self.weight(w, asg),
            Term::Arith(op, l, r) => combine(&self.term(l, asg), &self.term(r, asg), *op).unwrap(),
            Term::Scale(n, r) => {
                let n = self.term(n, asg);
                self.term(r, asg).scale(n.as_int().unwrap())
            }
            Term::Agg(p, g) => {
                let vars = p.vars();
                let mut acc = p.carrier.zero();
                for t in self.tuples(vars.len()) {
                    let (hit, v) = self.with(asg, &vars, &t, |asg| {
                        let v = self.product(p, asg);
                        (!v.is_zero() && self.formula(g, asg), v)
                    });
                    if hit {
                        acc = combine(&acc, &v, wagg_core::ArithOp::Add).unwrap();
                    }
                }
                acc
            }
        }
    }

    fn expression(&self, e: &Expression, asg: &Asg) -> Value {
        let mut asg = asg.clone();
        match e {
            Expression::Formula(f) => Value::Bool(self.formula(f, &mut asg)),
            Expression::Term(t) => Value::Elem(self.term(t, &mut asg)),
        }
    }
}

// ---------------------------------------------------------------------------------------
// Shared helpers
// ---------------------------------------------------------------------------------------

fn vars(names: &[&str]) -> Vec<Var> {
    names.iter().map(|s| s.to_string()).collect()
}

fn bind(vs: &[Var], vals: &[usize]) -> Asg {
    vs.iter().cloned().zip(vals.iter().copied()).collect()
}

fn universe(s: &WeightedStructure) -> Vec<usize> {
    (0..s.size()).collect()
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    ensure(elapsed < limit, || format!("{what} took {:.1}s, limit {}s", elapsed.as_secs_f64(), limit.as_secs()))
}

// ---------------------------------------------------------------------------------------
// 1. Semantics
// ---------------------------------------------------------------------------------------

fn semantics() -> Check {
    let start = Instant::now();
    let sig = standard_signature();
    let cfg = FormulaGenConfig { fragment: Fragment::WA, max_qr: 2, max_agg_depth: 2, max_depth: 3, allow_dist: true };
    let mut g = FormulaGen::new(sig.clone(), cfg, 2024);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let carriers = [Carrier::IntegerRing, Carrier::RationalField, Carrier::ResidueGroup(3), Carrier::ResidueGroup(2)];
    let (mut terms, mut aggregating) = (0, 0);
    for i in 0..1000u64 {
        let e = match i % 4 {
            0 => Expression::Formula(g.formula(&["x"])),
            1 => Expression::Formula(g.formula(&["x", "y"])),
            2 => Expression::Formula(g.formula(&[])),
            _ => Expression::Term(g.agg_term(&carriers[(i / 4) as usize % carriers.len()], &["x"])),
        };
        let info = analyze(&e);
        ensure(info.quantifier_rank <= 2 && info.agg_depth <= 2, || format!("generator exceeded its budget: {e}"))?;
        terms += usize::from(matches!(e, Expression::Term(_)));
        aggregating += usize::from(info.agg_depth > 0);
        let s = random_structure(&sig, 1 + (i as usize % 8), 3, i).unwrap();
        let t: Vec<usize> = info.free_vars.iter().map(|_| rng.gen_range(0..s.size())).collect();
        let asg = bind(&info.free_vars, &t);
        let got = evaluate(&s, &e, &asg).map_err(|err| format!("{err}: {e}"))?;
        let want = Naive::new(&s).expression(&e, &asg);
        ensure(got == want, || format!("{e} at {t:?}: evaluate {got}, exhaustive {want}\n{}", s.to_text()))?;
    }
    within(start.elapsed(), Duration::from_secs(60), "1000 triples")?;
    Ok(format!("1000 triples agree ({terms} terms, {aggregating} with aggregation)"))
}

// ---------------------------------------------------------------------------------------
// 2. Feferman–Vaught contract
// ---------------------------------------------------------------------------------------

fn fv_contract() -> Check {
    let start = Instant::now();
    let sig = standard_signature().with_relation("X", 1).and_then(|s| s.with_relation("Y", 1)).unwrap();
    let pool = structure_pool(&standard_signature(), 6, 5, 3, 41).unwrap();
    let cfg = FormulaGenConfig { fragment: Fragment::FOW1, max_qr: 2, max_agg_depth: 0, max_depth: 3, allow_dist: true };
    let mut g = FormulaGen::new(sig, cfg, 17);
    let shapes: [(&[&str], &[&str]); 4] = [(&["x"], &["y"]), (&["x"], &[]), (&[], &["y"]), (&["x1", "x2"], &["y"])];
    let mut checks = 0usize;
    for i in 0..100 {
        let (xs, ys) = shapes[i % shapes.len()];
        let free: Vec<&str> = xs.iter().chain(ys).copied().collect();
        let f = g.formula(&free);
        let (xs, ys) = (vars(xs), vars(ys));
        let d = fv_decompose(&f, &xs, &ys, &Caps::unchecked()).map_err(|e| format!("{e}: {f}"))?;
        for a in &pool {
            let alphas: Vec<Vec<bool>> = all_tuples(&universe(a), xs.len())
                .iter()
                .map(|at| d.pairs.iter().map(|(al, _)| evaluate_formula(a, al, &bind(&xs, at)).unwrap()).collect())
                .collect();
            for b in &pool {
                let sum = a.disjoint_sum(b).unwrap();
                let betas: Vec<Vec<bool>> = all_tuples(&universe(b), ys.len())
                    .iter()
                    .map(|bt| d.pairs.iter().map(|(_, be)| evaluate_formula(b, be, &bind(&ys, bt)).unwrap()).collect())
                    .collect();
                for (ai, at) in all_tuples(&universe(a), xs.len()).iter().enumerate() {
                    for (bi, bt) in all_tuples(&universe(b), ys.len()).iter().enumerate() {
                        let shifted: Vec<usize> = bt.iter().map(|v| v + a.size()).collect();
                        let mut asg = bind(&xs, at);
                        asg.extend(bind(&ys, &shifted));
                        let lhs = evaluate_formula(&sum, &f, &asg).unwrap();
                        let rhs = (0..d.pairs.len()).any(|p| alphas[ai][p] && betas[bi][p]);
                        ensure(lhs == rhs, || format!("{f} at {at:?}/{bt:?}"))?;
                        checks += 1;
                    }
                }
            }
        }
    }
    within(start.elapsed(), Duration::from_secs(300), "the sweep")?;
    Ok(format!("100 formulas, {} structure pairs, {checks} biconditionals", pool.len() * pool.len()))
}

// ---------------------------------------------------------------------------------------
// 3. Gaifman normal form
// ---------------------------------------------------------------------------------------

fn gaifman() -> Check {
    let sig = standard_signature();
    let cfg = FormulaGenConfig { fragment: Fragment::FOW1, max_qr: 2, max_agg_depth: 0, max_depth: 3, allow_dist: true };
    let mut g = FormulaGen::new(sig.clone(), cfg, 31);
    let frees: [&[&str]; 3] = [&["x"], &[], &["x", "y"]];
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let count = 30;
    for i in 0..count {
        let f = g.formula(frees[i % 3]);
        let nf = gaifman_nf(&f, &Caps::unchecked()).map_err(|e| format!("{e}: {f}"))?;
        nf.validate_shape().map_err(|e| format!("{e}: {f}"))?;
        let h = nf.to_formula();
        let free = f.free_vars();
        for j in 0..500u64 {
            let s = random_structure(&sig, 1 + (j as usize % 6), 3, 1000 * i as u64 + j).unwrap();
            let t: Vec<usize> = free.iter().map(|_| rng.gen_range(0..s.size())).collect();
            let asg = bind(&free, &t);
            ensure(evaluate_formula(&s, &f, &asg).unwrap() == evaluate_formula(&s, &h, &asg).unwrap(), || {
                format!("{f}\n=> {h}\nat {t:?} on\n{}", s.to_text())
            })?;
        }
    }
    Ok(format!("{count} formulas well-shaped, 500 interpretations each agree"))
}

// ---------------------------------------------------------------------------------------
// 4. cl-term equivalence and 5. table evaluation
// ---------------------------------------------------------------------------------------

fn weight_factor(name: &str, carrier: Carrier, vs: &[&str]) -> Factor {
    Factor::Weight(WeightApp::new(name, carrier, vars(vs)).unwrap())
}

/// Aggregation terms `Σ p.ψ` with r-local bodies over up to three variables (one possibly
/// free), cycling through counting, rational, integer and `Z/3` products.
fn generated_terms(count: usize, seed: u64) -> Vec<(Term, usize)> {
    let cfg = FormulaGenConfig { fragment: Fragment::FOW1, max_qr: 1, max_agg_depth: 0, max_depth: 3, allow_dist: true };
    let mut g = FormulaGen::new(standard_signature(), cfg, seed);
    let shapes: [(&[&str], usize); 5] =
        [(&["y1"], 0), (&["x", "y1"], 1), (&["y1", "y2"], 0), (&["x", "y1", "y2"], 1), (&["y1", "y2", "y3"], 1)];
    (0..count)
        .map(|i| {
            let (scope, r) = shapes[i % shapes.len()];
            let r = (r + i / shapes.len()) % 3;
            let bound: Vec<&str> = scope.iter().copied().filter(|v| v.starts_with('y')).collect();
            let body = localize(&g.formula(scope), r, &vars(scope)).unwrap();
            let (q, z, m) = (Carrier::RationalField, Carrier::IntegerRing, Carrier::ResidueGroup(3));
            let product = match (i / 2) % 4 {
                0 => WProduct::counting(&vars(&bound)),
                1 if bound.len() >= 2 => WProduct::new(q.clone(), vec![weight_factor("w", q, &bound[..2])]).unwrap(),
                1 => WProduct::new(q.clone(), vec![weight_factor("q", q, &bound[..1])]).unwrap(),
                2 => WProduct::new(
                    z.clone(),
                    bound.iter().map(|v| weight_factor("c", z.clone(), &[v])).chain([Factor::Const(CarrierValue::int(2))]).collect(),
                )
                .unwrap(),
                _ => WProduct::new(m.clone(), vec![weight_factor("m", m, &bound[bound.len() - 1..])]).unwrap(),
            };
            (Term::Agg(product, Box::new(body)), r)
        })
        .collect()
}

fn cl_terms() -> Check {
    let sig = standard_signature();
    let terms = generated_terms(15, 7);
    let mut basics = 0;
    for (i, (u, r)) in terms.iter().enumerate() {
        let cl = clterms_from_aggregation(u, *r, &Caps::default()).map_err(|e| format!("{e}: {u}"))?;
        ensure(cl.radius() <= *r && cl.basics().iter().all(|b| b.graph.is_connected()), || format!("shape of {cl}"))?;
        basics += cl.basics().len();
        let hat = cl.to_term();
        let free = u.free_vars();
        let (mut pairs, mut seed) = (0, 0u64);
        while pairs < 300 {
            let s = random_structure(&sig, 1 + (seed as usize % 8), 3, seed * 101 + i as u64).unwrap();
            seed += 1;
            for t in all_tuples(&universe(&s), free.len()).into_iter().take(10) {
                let asg = bind(&free, &t);
                let (want, got) = (evaluate_term(&s, u, &asg).unwrap(), evaluate_term(&s, &hat, &asg).unwrap());
                ensure(want == got, || format!("{u} at {t:?}: {want} vs {got}"))?;
                pairs += 1;
            }
        }
    }
    Ok(format!("{} terms x 300 pairs agree ({basics} basic cl-terms)", terms.len()))
}

fn cl_evaluator() -> Check {
    let mut checked = 0;
    let mut skipped = 0;
    let mut lookups = 0;
    for (i, (u, r)) in generated_terms(10, 19).into_iter().enumerate() {
        let cl = match clterms_from_aggregation(&u, r, &Caps::unchecked()) {
            Ok(cl) => cl,
            Err(wagg_core::Error::BlowupExceeded { .. }) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(format!("{e}: {u}")),
        };
        checked += 1;
        let hat = cl.to_term();
        let free = cl.free_vars();
        for (j, n) in [8usize, 20, 30].into_iter().enumerate() {
            let s = random_structure(&standard_signature(), n, 2, j as u64 * 13 + i as u64).unwrap();
            let (values, _) = evaluate_all_cl(&s, &cl).unwrap();
            for (t, v) in values {
                let naive = evaluate_term(&s, &hat, &bind(&free, &t)).unwrap();
                ensure(v == naive, || format!("{cl} at {t:?}: table {v}, naive {naive}"))?;
                lookups += 1;
            }
        }
    }
    let u = wagg_core::parse_term("(agg (* (q y1) (q y2)) (and (rel E x y1) (rel E y1 y2) (rel R y2)))", &standard_signature()).unwrap();
    let cl = clterms_from_aggregation(&u, 1, &Caps::unchecked()).unwrap();
    let q = |n: usize| {
        let s = random_structure(&standard_signature(), n, 2, 5).unwrap();
        evaluate_all_cl(&s, &cl).unwrap().1.total()
    };
    let (q200, q400) = (q(200), q(400));
    let ratio = q400 as f64 / q200 as f64;
    ensure((1.8..=2.2).contains(&ratio), || format!("q(400)/q(200) = {q400}/{q200} = {ratio:.3}"))?;
    Ok(format!("{checked} terms exhaustive ({lookups} lookups, {skipped} over the basic-term cap); q(400)/q(200) = {ratio:.3}"))
}

// ---------------------------------------------------------------------------------------
// 6. Expansion
// ---------------------------------------------------------------------------------------

fn expansion() -> Check {
    let sig = standard_signature();
    let cfg = FormulaGenConfig { fragment: Fragment::WA1, max_qr: 1, max_agg_depth: 2, max_depth: 3, allow_dist: false };
    let mut g = FormulaGen::new(sig.clone(), cfg, 303);
    // Ten formulas each of aggregation depth 0, 1 and 2.
    let mut quota = [10usize; 3];
    let mut formulas = Vec::new();
    for i in 0..10_000u64 {
        if formulas.len() == 30 {
            break;
        }
        let phi = g.formula(if i % 2 == 0 { &["x"] } else { &[] });
        let info = analyze(&Expression::Formula(phi.clone()));
        ensure(info.fragment <= Fragment::WA1 && info.agg_depth <= 2, || format!("generator left its budget: {phi}"))?;
        if quota[info.agg_depth] > 0 {
            quota[info.agg_depth] -= 1;
            formulas.push(phi);
        }
    }
    ensure(formulas.len() == 30, || format!("generator filled only {} formulas", formulas.len()))?;
    let mut symbols = 0;
    for (i, phi) in formulas.iter().enumerate() {
        let i = i as u64;
        for (j, n) in [4usize, 8, 12].into_iter().enumerate() {
            let s = random_structure(&sig, n, 2, 10 * i + j as u64).unwrap();
            let e = expand_structure(&s, phi, &Caps::unchecked()).map_err(|err| format!("{err}: {phi}"))?;
            symbols += e.decomposition.symbols().count();
            let free = phi.free_vars();
            for t in all_tuples(&universe(&s), free.len()) {
                let asg = bind(&free, &t);
                let (want, got) = (evaluate_formula(&s, phi, &asg).unwrap(), evaluate_formula(&e.structure, e.formula(), &asg).unwrap());
                ensure(want == got, || format!("{phi} at {t:?} (φ′ = {})", e.formula()))?;
            }
        }
    }
    Ok(format!("30 formulas (10 each of aggregation depth 0, 1, 2) x 3 fixtures exhaustive; {symbols} symbols introduced"))
}

// ---------------------------------------------------------------------------------------
// 7.–10. Learning
// ---------------------------------------------------------------------------------------

/// All Boolean combinations of an edge to the parameter, a blue parameter, and a red
/// neighbour of the instance.
fn standard_class() -> HypothesisClass {
    let sig = standard_signature();
    let atoms: Vec<Formula> = ["(rel E x y)", "(rel B y)", "(exists z (and (rel E x z) (rel R z)))"]
        .iter()
        .map(|t| parse_formula(t, &sig).unwrap())
        .collect();
    HypothesisClass::boolean_closure(&atoms, 1, vars(&["x"]), vars(&["y"])).unwrap()
}

fn errors_on_full(s: &WeightedStructure, class: &HypothesisClass, t: &TrainingSequence, v: &[usize], fi: usize) -> usize {
    t.examples()
        .iter()
        .filter(|(a, label)| {
            let mut asg = bind(class.instance_vars(), a);
            asg.extend(bind(class.parameter_vars(), v));
            evaluate_formula(s, &class.formulas()[fi], &asg).unwrap() != *label
        })
        .count()
}

/// A random structure with a training sequence labelled by a random hypothesis (even
/// seeds) or by coin flips (odd seeds).
fn instance(class: &HypothesisClass, seed: u64) -> (WeightedStructure, TrainingSequence) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(4..=12);
    let s = random_structure(&standard_signature(), n, 2, seed).unwrap();
    let t = rng.gen_range(1..=8);
    let instances: Vec<usize> = (0..t).map(|_| rng.gen_range(0..n)).collect();
    let examples = if seed.is_multiple_of(2) {
        let f = &class.formulas()[rng.gen_range(0..class.formulas().len())];
        let v = rng.gen_range(0..n);
        instances.into_iter().map(|a| (vec![a], evaluate_formula(&s, f, &[("x".into(), a), ("y".into(), v)]).unwrap())).collect()
    } else {
        instances.into_iter().map(|a| (vec![a], rng.gen_bool(0.5))).collect()
    };
    (s, TrainingSequence::new(examples))
}

fn exact_learner() -> Check {
    let class = standard_class();
    let (mut accepted, mut rejected) = (0, 0);
    for seed in 0..100 {
        let (s, t) = instance(&class, seed);
        let oracle = LocalAccessOracle::new(&s);
        let learned = exact_learn(&t, &oracle, &class).unwrap();
        let exists = all_tuples(&universe(&s), class.ell())
            .iter()
            .any(|v| (0..class.formulas().len()).any(|fi| errors_on_full(&s, &class, &t, v, fi) == 0));
        match learned {
            Some(h) => {
                ensure(exists, || format!("seed {seed}: accepted although nothing is consistent"))?;
                let errors = errors_on_full(&s, &class, &t, &h.params, h.formula_index);
                ensure(errors == 0, || format!("seed {seed}: returned hypothesis has {errors} training errors"))?;
                accepted += 1;
            }
            None => {
                ensure(!exists, || format!("seed {seed}: rejected although a consistent hypothesis exists"))?;
                rejected += 1;
            }
        }
    }
    Ok(format!("100 instances ({accepted} accepted, {rejected} rejected) match exhaustive search"))
}

fn erm_learner() -> Check {
    let class = standard_class();
    let r = class.radius();
    let mut positive = 0;
    for seed in 100..200 {
        let (s, t) = instance(&class, seed);
        let oracle = LocalAccessOracle::new(&s);
        let learned = pac_learn(&t, &oracle, &class).unwrap();
        let n = s.ball(&t.elements(), (2 * r + 1) * class.ell()).unwrap();
        let best = all_tuples(&n, class.ell())
            .iter()
            .flat_map(|v| (0..class.formulas().len()).map(move |fi| (v.clone(), fi)))
            .map(|(v, fi)| errors_on_full(&s, &class, &t, &v, fi))
            .min()
            .unwrap();
        let h = &learned.hypothesis;
        ensure(learned.errors == best, || format!("seed {seed}: learner {} errors, grid minimum {best}", learned.errors))?;
        ensure(errors_on_full(&s, &class, &t, &h.params, h.formula_index) == best, || format!("seed {seed}: reported error is wrong"))?;
        positive += usize::from(best > 0);
    }
    Ok(format!("100 instances attain the grid minimum ({positive} with nonzero minimum)"))
}

fn query_locality() -> Check {
    let class = standard_class();
    let gadget = random_structure(&standard_signature(), 10, 2, 77).unwrap();
    let t = TrainingSequence::new(vec![(vec![0], true), (vec![3], false), (vec![7], true), (vec![12], false)]);
    let mut counts = Vec::new();
    let mut slowest = Duration::ZERO;
    for copies in [100, 1000] {
        let s = gadget.replicate(copies).unwrap();
        let start = Instant::now();
        let oracle = LocalAccessOracle::new(&s);
        let _ = exact_learn(&t, &oracle, &class).unwrap();
        let elapsed = start.elapsed();
        within(elapsed, Duration::from_secs(10), &format!("learning on n = {}", s.size()))?;
        slowest = slowest.max(elapsed);
        counts.push(oracle.counts());
    }
    ensure(counts[0] == counts[1] && counts[0].total() > 0, || format!("query counts differ: {:?} vs {:?}", counts[0], counts[1]))?;
    let c = counts[0];
    Ok(format!(
        "n = 1000 and n = 10000 both spend {} queries ({} probes, {} weights, {} neighbour lists); slowest run {:.2}s",
        c.total(),
        c.relation_probes,
        c.weight_lookups,
        c.neighbour_queries,
        slowest.as_secs_f64()
    ))
}

fn generalization() -> Check {
    let sig: Signature = standard_signature();
    let atoms: Vec<Formula> = ["(rel E x y)", "(rel R x)"].iter().map(|t| parse_formula(t, &sig).unwrap()).collect();
    let class = HypothesisClass::boolean_closure(&atoms, 1, vars(&["x"]), vars(&["y"])).unwrap();
    let s = random_structure(&sig, 16, 2, 9).unwrap();
    let support: Vec<Vec<usize>> = (0..s.size()).map(|a| vec![a]).collect();
    let target = class.formulas()[6].clone();
    let clean = ExampleDistribution::labelled_by(&s, support, &target, &vars(&["x"]), &[("y".into(), 4)], Rate::from_integer(0)).unwrap();
    let cfg = ExperimentConfig { epsilon: 0.2, delta: 0.2, trials: 200, seed: 2 };
    let report = run_generalization_experiment(&s, &class, &clean, &cfg).unwrap();
    ensure(report.rows.len() == 200, || "wrong number of trials".into())?;
    ensure(report.sample_size == sample_size(0.2, 0.2, report.class_size).unwrap(), || "sample size is not t(ε, δ)".into())?;
    ensure(report.best_error == Rate::from_integer(0), || "target is not in the grid".into())?;
    let freq = report.success_frequency();
    ensure(freq >= 0.8, || format!("success frequency {freq:.3} < 0.8"))?;
    let noisy = ExampleDistribution { noise: Rate::new(1, 2), ..clean };
    let noisy_report = run_generalization_experiment(&s, &class, &noisy, &cfg).unwrap();
    let mean = noisy_report.mean_true_error();
    ensure((mean - 0.5).abs() <= 0.2, || format!("noisy mean error {mean:.3}"))?;
    Ok(format!(
        "|H| = {}, t = {}: success frequency {freq:.3}; noise 1/2 mean error {mean:.3} (mean training error {:.3})",
        report.class_size,
        report.sample_size,
        noisy_report.mean_training_error()
    ))
}

// ---------------------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------------------

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("semantics agree with exhaustive enumeration", semantics),
        ("Feferman-Vaught decompositions over disjoint sums", fv_contract),
        ("Gaifman normal forms are well-shaped and equivalent", gaifman),
        ("cl-terms equal their aggregation terms", cl_terms),
        ("cl-term tables match naive values; precompute scales linearly", cl_evaluator),
        ("expanded structures satisfy the final formula exactly when the input does", expansion),
        ("exact learner rejects iff no consistent hypothesis exists", exact_learner),
        ("ERM learner attains the grid minimum", erm_learner),
        ("learner query counts are independent of n", query_locality),
        ("generalisation under realizable and noisy labels", generalization),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (title, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS [{secs:.1}s] {title}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL [{secs:.1}s] {title}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
