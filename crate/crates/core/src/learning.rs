//! Learning Boolean classifiers `ā ↦ ⟦φ*(ā, v̄*)⟧` with local access only.
//!
//! A hypothesis is a formula of a finite class `Φ*` of r-local formulas together with a
//! parameter tuple `v̄*`; it is evaluated on the r-neighbourhood of `āv̄*`, fetched through
//! the [`LocalAccessOracle`]. Both learners search the parameters in
//! `N = N_{(2r+1)ℓ}(T)`, the ball around the elements of the training sequence, with the
//! parameter tuples in the outer loop (lexicographic over ascending `N`) and the formulas of
//! `Φ*` in declared order in the inner loop. The consistent learner returns the first
//! consistent hypothesis; the ERM learner the first one of minimal training error.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gen::spot_check_local;
use crate::locality::localize;
use crate::logic::{Evaluator, Formula, Var};
use crate::structure::{LocalAccessOracle, QueryCounts, WeightedStructure};

/// Exact error rates and probabilities.
pub type Rate = Ratio<u64>;

/// A finite class `Φ*` of r-local formulas `φ*(x̄, ȳ)` with instance variables `x̄` and
/// parameter variables `ȳ`.
#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisClass {
    formulas: Vec<Formula>,
    radius: usize,
    xs: Vec<Var>,
    ys: Vec<Var>,
}

impl HypothesisClass {
    /// A class over the given variables; every formula's free variables must lie in
    /// `x̄ ∪ ȳ`, and `x̄` must be nonempty.
    pub fn new(formulas: Vec<Formula>, radius: usize, xs: Vec<Var>, ys: Vec<Var>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::OutOfRange("a hypothesis class needs at least one instance variable".into()));
        }
        let mut seen = HashSet::new();
        for v in xs.iter().chain(&ys) {
            if !seen.insert(v) {
                return Err(Error::ArityMismatch(format!("variable {v} is listed twice")));
            }
        }
        for f in &formulas {
            if let Some(v) = f.free_vars().into_iter().find(|v| !seen.contains(v)) {
                return Err(Error::ArityMismatch(format!("free variable {v} of {f} is neither an instance nor a parameter variable")));
            }
        }
        Ok(HypothesisClass { formulas, radius, xs, ys })
    }

    /// Like [`HypothesisClass::new`], additionally spot-checking r-locality of every formula
    /// around `x̄ȳ` on seeded random structures.
    pub fn checked(formulas: Vec<Formula>, radius: usize, xs: Vec<Var>, ys: Vec<Var>, seed: u64) -> Result<Self> {
        let class = Self::new(formulas, radius, xs, ys)?;
        let anchors = class.variables();
        for f in &class.formulas {
            spot_check_local(f, radius, &anchors, seed)?;
        }
        Ok(class)
    }

    /// A bounded closure: the base formulas localised around `x̄ȳ`, then closed under
    /// negation and binary disjunction (structurally deduplicated) until `cap` formulas.
    pub fn closure(base: &[Formula], radius: usize, xs: Vec<Var>, ys: Vec<Var>, cap: usize) -> Result<Self> {
        let anchors: Vec<Var> = xs.iter().chain(&ys).cloned().collect();
        let mut formulas: Vec<Formula> = Vec::new();
        let mut seen: HashSet<Formula> = HashSet::new();
        let mut push = |f: Formula, formulas: &mut Vec<Formula>| {
            if formulas.len() < cap && seen.insert(f.clone()) {
                formulas.push(f);
            }
        };
        for f in base {
            push(localize(f, radius, &anchors)?, &mut formulas);
        }
        let mut done = 0;
        while done < formulas.len() && formulas.len() < cap {
            let f = formulas[done].clone();
            push(Formula::not(f.clone()), &mut formulas);
            for g in formulas[..=done].to_vec() {
                push(Formula::or(vec![g, f.clone()]), &mut formulas);
            }
            done += 1;
        }
        Self::new(formulas, radius, xs, ys)
    }

    /// All Boolean combinations of the atoms up to equivalence: one disjunctive normal
    /// form per truth table, ordered by the table read as a bitmask over the rows.
    pub fn boolean_closure(atoms: &[Formula], radius: usize, xs: Vec<Var>, ys: Vec<Var>) -> Result<Self> {
        const MAX_ATOMS: usize = 4;
        if atoms.len() > MAX_ATOMS {
            return Err(Error::BlowupExceeded { what: "atoms of a Boolean closure".into(), needed: atoms.len(), cap: MAX_ATOMS });
        }
        let rows = 1usize << atoms.len();
        let mut formulas = Vec::with_capacity(1 << rows);
        for table in 0u64..1 << rows {
            let disjuncts = (0..rows)
                .filter(|row| table >> row & 1 == 1)
                .map(|row| {
                    let literals = atoms
                        .iter()
                        .enumerate()
                        .map(|(i, a)| if row >> i & 1 == 1 { a.clone() } else { Formula::not(a.clone()) })
                        .collect();
                    Formula::and(literals)
                })
                .collect();
            formulas.push(Formula::or(disjuncts));
        }
        Self::new(formulas, radius, xs, ys)
    }

    /// The formulas in declared order.
    pub fn formulas(&self) -> &[Formula] {
        &self.formulas
    }

    /// The common locality radius.
    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Instance variables `x̄`.
    pub fn instance_vars(&self) -> &[Var] {
        &self.xs
    }

    /// Parameter variables `ȳ`.
    pub fn parameter_vars(&self) -> &[Var] {
        &self.ys
    }

    /// `k = |x̄|`.
    pub fn k(&self) -> usize {
        self.xs.len()
    }

    /// `ℓ = |ȳ|`.
    pub fn ell(&self) -> usize {
        self.ys.len()
    }

    /// `x̄ȳ`.
    pub fn variables(&self) -> Vec<Var> {
        self.xs.iter().chain(&self.ys).cloned().collect()
    }

    /// `|Φ*| · m^ℓ` (saturating), the number of hypotheses over `m` parameter candidates.
    pub fn grid_size(&self, candidates: usize) -> u128 {
        let mut size = self.formulas.len() as u128;
        for _ in 0..self.ell() {
            size = size.saturating_mul(candidates as u128);
        }
        size
    }
}

/// A training sequence `((ā1, b1), …, (āt, bt))`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrainingSequence {
    examples: Vec<(Vec<usize>, bool)>,
}

impl TrainingSequence {
    pub fn new(examples: Vec<(Vec<usize>, bool)>) -> Self {
        TrainingSequence { examples }
    }

    pub fn examples(&self) -> &[(Vec<usize>, bool)] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Distinct elements occurring in the instances, ascending.
    pub fn elements(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.examples.iter().flat_map(|(a, _)| a.iter().copied()).collect();
        set.into_iter().collect()
    }

    /// Checks instance arity and element ids against a universe of size `n`.
    pub fn validate(&self, k: usize, n: usize) -> Result<()> {
        for (a, _) in &self.examples {
            if a.len() != k {
                return Err(Error::ArityMismatch(format!("training instance {a:?} has length {}, expected {k}", a.len())));
            }
            if let Some(&e) = a.iter().find(|&&e| e >= n) {
                return Err(Error::UnknownElement(e));
            }
        }
        Ok(())
    }

    /// Parses CSV lines `a1,…,ak,label` with labels `0`/`1`. Blank lines, `#` comments and a
    /// header line whose last field is `label` are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut examples = Vec::new();
        let mut k = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.last() == Some(&"label") {
                continue;
            }
            let err = |msg: String| Error::ParseError { line: i + 1, msg };
            let (label, ids) = fields.split_last().ok_or_else(|| err("empty row".into()))?;
            let label = match *label {
                "0" => false,
                "1" => true,
                other => return Err(err(format!("label must be 0 or 1, got `{other}`"))),
            };
            let a: Vec<usize> =
                ids.iter().map(|f| f.parse().map_err(|_| err(format!("`{f}` is not an element id")))).collect::<Result<_>>()?;
            if *k.get_or_insert(a.len()) != a.len() {
                return Err(err("rows have different lengths".into()));
            }
            examples.push((a, label));
        }
        Ok(TrainingSequence { examples })
    }

    /// CSV with a header `a1,…,ak,label`.
    pub fn to_csv(&self) -> String {
        let k = self.examples.first().map_or(0, |(a, _)| a.len());
        let mut out: Vec<String> = (1..=k).map(|i| format!("a{i}")).collect();
        out.push("label".into());
        let mut text = out.join(",") + "\n";
        for (a, b) in &self.examples {
            for e in a {
                let _ = write!(text, "{e},");
            }
            let _ = writeln!(text, "{}", u8::from(*b));
        }
        text
    }
}

/// A hypothesis `(φ*, v̄*)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Hypothesis {
    /// Position of the formula in the class.
    pub formula_index: usize,
    pub formula: Formula,
    pub params: Vec<usize>,
}

/// Evaluates every formula of the class at `āv̄` inside `N_r(āv̄)` fetched through the oracle.
fn classify_all(class: &HypothesisClass, oracle: &LocalAccessOracle, a: &[usize], params: &[usize]) -> Result<Vec<bool>> {
    let anchors: Vec<usize> = a.iter().chain(params).copied().collect();
    let (sub, ids) = oracle.neighbourhood(&anchors, class.radius)?;
    let local = |e: usize| ids.binary_search(&e).map_err(|_| Error::UnknownElement(e));
    let asg: Vec<(Var, usize)> = class.variables().into_iter().zip(anchors.iter().map(|&e| local(e)).collect::<Result<Vec<_>>>()?).collect();
    let eval = Evaluator::new(&sub);
    class
        .formulas
        .iter()
        .map(|f| {
            let mut asg = asg.clone();
            eval.formula(f, &mut asg)
        })
        .collect()
}

impl Hypothesis {
    /// `⟦φ*(ā, v̄*)⟧` evaluated in `N_r(āv̄*)`.
    pub fn classify(&self, class: &HypothesisClass, oracle: &LocalAccessOracle, a: &[usize]) -> Result<bool> {
        let anchors: Vec<usize> = a.iter().chain(&self.params).copied().collect();
        let (sub, ids) = oracle.neighbourhood(&anchors, class.radius)?;
        let mut asg = Vec::with_capacity(anchors.len());
        for (v, e) in class.variables().into_iter().zip(&anchors) {
            asg.push((v, ids.binary_search(e).map_err(|_| Error::UnknownElement(*e))?));
        }
        Evaluator::new(&sub).formula(&self.formula, &mut asg)
    }

    /// Canonical one-line record `{formula: …, params: [...]}`.
    pub fn describe(&self) -> String {
        let params: Vec<String> = self.params.iter().map(usize::to_string).collect();
        format!("{{formula: {}, params: [{}]}}", self.formula, params.join(", "))
    }
}

/// Result of the ERM learner.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Learned {
    pub hypothesis: Hypothesis,
    /// Number of misclassified training examples.
    pub errors: usize,
    pub examples: usize,
}

impl Learned {
    /// `err_T(h)`.
    pub fn training_error(&self) -> Rate {
        Rate::new(self.errors as u64, self.examples.max(1) as u64)
    }
}

/// `t_ℋ(ε, δ) = ⌈2·ln(2|ℋ|/δ)/ε²⌉`.
pub fn sample_size(epsilon: f64, delta: f64, class_size: u128) -> Result<u64> {
    let open = |x: f64| x > 0.0 && x < 1.0;
    if !open(epsilon) {
        return Err(Error::OutOfRange(format!("ε = {epsilon} must lie in (0, 1)")));
    }
    if !open(delta) {
        return Err(Error::OutOfRange(format!("δ = {delta} must lie in (0, 1)")));
    }
    if class_size == 0 {
        return Err(Error::OutOfRange("the hypothesis class must be nonempty".into()));
    }
    let log = std::f64::consts::LN_2 + (class_size as f64).ln() - delta.ln();
    Ok((2.0 * log / (epsilon * epsilon)).ceil() as u64)
}

/// `err_T(h)` as an exact rational.
pub fn training_error(h: &Hypothesis, class: &HypothesisClass, t: &TrainingSequence, oracle: &LocalAccessOracle) -> Result<Rate> {
    if t.is_empty() {
        return Err(Error::EmptyTraining);
    }
    let mut errors = 0u64;
    for (a, b) in t.examples() {
        if h.classify(class, oracle, a)? != *b {
            errors += 1;
        }
    }
    Ok(Rate::new(errors, t.len() as u64))
}

/// The parameter candidates `N = N_{(2r+1)ℓ}(T)`, ascending. An empty training sequence has
/// no elements to anchor the ball; the smallest element id stands in for it.
pub fn parameter_space(t: &TrainingSequence, oracle: &LocalAccessOracle, class: &HypothesisClass) -> Result<Vec<usize>> {
    if class.ell() == 0 {
        return Ok(Vec::new());
    }
    let elems = t.elements();
    if elems.is_empty() {
        return Ok(if oracle.size() > 0 { vec![0] } else { Vec::new() });
    }
    oracle.ball(&elems, (2 * class.radius + 1) * class.ell())
}

/// Lexicographic enumeration of `N^ℓ`.
struct Grid<'a> {
    space: &'a [usize],
    positions: Option<Vec<usize>>,
}

impl<'a> Grid<'a> {
    fn new(space: &'a [usize], ell: usize) -> Self {
        let positions = (ell == 0 || !space.is_empty()).then(|| vec![0; ell]);
        Grid { space, positions }
    }
}

impl Iterator for Grid<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let pos = self.positions.as_mut()?;
        let item = pos.iter().map(|&i| self.space[i]).collect();
        let mut i = pos.len();
        loop {
            if i == 0 {
                self.positions = None;
                break;
            }
            i -= 1;
            pos[i] += 1;
            if pos[i] < self.space.len() {
                break;
            }
            pos[i] = 0;
        }
        Some(item)
    }
}

/// Per-instance classifications under one parameter tuple, fetched lazily.
struct Classifications<'c, 'o> {
    class: &'c HypothesisClass,
    oracle: &'c LocalAccessOracle<'o>,
    params: Vec<usize>,
    cache: HashMap<Vec<usize>, Vec<bool>>,
}

impl<'c, 'o> Classifications<'c, 'o> {
    fn new(class: &'c HypothesisClass, oracle: &'c LocalAccessOracle<'o>, params: Vec<usize>) -> Self {
        Classifications { class, oracle, params, cache: HashMap::new() }
    }

    fn value(&mut self, a: &[usize], formula: usize) -> Result<bool> {
        if !self.cache.contains_key(a) {
            let values = classify_all(self.class, self.oracle, a, &self.params)?;
            self.cache.insert(a.to_vec(), values);
        }
        Ok(self.cache[a][formula])
    }
}

fn prepare(t: &TrainingSequence, oracle: &LocalAccessOracle, class: &HypothesisClass) -> Result<Vec<usize>> {
    t.validate(class.k(), oracle.size())?;
    parameter_space(t, oracle, class)
}

/// The consistent learner: the first `(φ*, v̄*)` consistent with `T`, or `None` (reject).
pub fn exact_learn(t: &TrainingSequence, oracle: &LocalAccessOracle, class: &HypothesisClass) -> Result<Option<Hypothesis>> {
    let space = prepare(t, oracle, class)?;
    for params in Grid::new(&space, class.ell()) {
        let mut values = Classifications::new(class, oracle, params);
        for (fi, f) in class.formulas.iter().enumerate() {
            let mut consistent = true;
            for (a, b) in t.examples() {
                if values.value(a, fi)? != *b {
                    consistent = false;
                    break;
                }
            }
            if consistent {
                return Ok(Some(Hypothesis { formula_index: fi, formula: f.clone(), params: values.params }));
            }
        }
    }
    Ok(None)
}

/// The ERM learner: the first `(φ*, v̄*)` of minimal training error (strict improvement
/// replaces the incumbent).
pub fn pac_learn(t: &TrainingSequence, oracle: &LocalAccessOracle, class: &HypothesisClass) -> Result<Learned> {
    if t.is_empty() {
        return Err(Error::EmptyTraining);
    }
    let space = prepare(t, oracle, class)?;
    let mut best: Option<(usize, Hypothesis)> = None;
    let mut err_min = t.len() + 1;
    for params in Grid::new(&space, class.ell()) {
        let mut values = Classifications::new(class, oracle, params);
        for (fi, f) in class.formulas.iter().enumerate() {
            let mut err_cur = 0;
            for (a, b) in t.examples() {
                if values.value(a, fi)? != *b {
                    err_cur += 1;
                }
            }
            if err_cur < err_min {
                err_min = err_cur;
                best = Some((err_cur, Hypothesis { formula_index: fi, formula: f.clone(), params: values.params.clone() }));
            }
        }
    }
    let (errors, hypothesis) =
        best.ok_or_else(|| Error::OutOfRange("the hypothesis space is empty (no formulas or no parameter candidates)".into()))?;
    Ok(Learned { hypothesis, errors, examples: t.len() })
}

/// A distribution over labelled instances: uniform over a finite support, each support
/// instance carrying a noise-free label that is flipped with probability `noise`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExampleDistribution {
    pub support: Vec<Vec<usize>>,
    pub labels: Vec<bool>,
    pub noise: Rate,
}

impl ExampleDistribution {
    /// Labels every support instance by `target(x̄)` evaluated on the full structure, with
    /// `fixed` binding any further free variables.
    pub fn labelled_by(
        s: &WeightedStructure,
        support: Vec<Vec<usize>>,
        target: &Formula,
        xs: &[Var],
        fixed: &[(Var, usize)],
        noise: Rate,
    ) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::OutOfRange("the distribution support is empty".into()));
        }
        if noise > Rate::from_integer(1) {
            return Err(Error::OutOfRange(format!("noise {noise} exceeds 1")));
        }
        let eval = Evaluator::new(s);
        let mut labels = Vec::with_capacity(support.len());
        for a in &support {
            let mut asg: Vec<(Var, usize)> = fixed.to_vec();
            asg.extend(xs.iter().cloned().zip(a.iter().copied()));
            labels.push(eval.formula(target, &mut asg)?);
        }
        Ok(ExampleDistribution { support, labels, noise })
    }

    /// Draws `t` labelled examples i.i.d.
    pub fn sample(&self, rng: &mut ChaCha8Rng, t: usize) -> TrainingSequence {
        let (num, den) = (*self.noise.numer(), *self.noise.denom());
        let examples = (0..t)
            .map(|_| {
                let i = rng.gen_range(0..self.support.len());
                let flip = num > 0 && rng.gen_range(0..den) < num;
                (self.support[i].clone(), self.labels[i] != flip)
            })
            .collect();
        TrainingSequence::new(examples)
    }

    /// Exact `err_D` of a classifier given by its predictions on the support.
    pub fn error(&self, predictions: &[bool]) -> Rate {
        let one = Rate::from_integer(1);
        let total: Rate = predictions
            .iter()
            .zip(&self.labels)
            .map(|(p, l)| if p == l { self.noise } else { one - self.noise })
            .fold(Rate::from_integer(0), |acc, x| acc + x);
        total / Rate::from_integer(self.support.len() as u64)
    }
}

/// Parameters of a generalisation experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
}

/// One trial of a generalisation experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRow {
    pub trial: usize,
    pub hypothesis: Hypothesis,
    pub training_error: Rate,
    pub true_error: Rate,
    pub success: bool,
    pub counts: QueryCounts,
}

/// Outcome of [`run_generalization_experiment`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// `|Φ*| · |N|^ℓ` with `N` the parameter candidates of the whole support.
    pub class_size: u128,
    /// Examples drawn per trial.
    pub sample_size: u64,
    /// Smallest `err_D` over the searched grid.
    pub best_error: Rate,
    /// Smallest `err_D` over all of `Φ* × A^ℓ`, when that space is small enough to scan.
    pub global_best_error: Option<Rate>,
    pub rows: Vec<TrialRow>,
}

fn to_f64(r: &Rate) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl ExperimentReport {
    /// Fraction of trials with `err_D(h) ≤ best + ε`.
    pub fn success_frequency(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().filter(|r| r.success).count() as f64 / self.rows.len() as f64
    }

    /// Mean `err_D` of the returned hypotheses.
    pub fn mean_true_error(&self) -> f64 {
        self.rows.iter().map(|r| to_f64(&r.true_error)).sum::<f64>() / self.rows.len().max(1) as f64
    }

    /// Mean training error of the returned hypotheses.
    pub fn mean_training_error(&self) -> f64 {
        self.rows.iter().map(|r| to_f64(&r.training_error)).sum::<f64>() / self.rows.len().max(1) as f64
    }

    /// Query counts summed over all trials.
    pub fn total_counts(&self) -> QueryCounts {
        let mut c = QueryCounts::default();
        for r in &self.rows {
            c.relation_probes += r.counts.relation_probes;
            c.weight_lookups += r.counts.weight_lookups;
            c.neighbour_queries += r.counts.neighbour_queries;
        }
        c
    }

    /// CSV with one row per trial followed by one summary row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "trial,formula_index,params,training_error,true_error,best_error,success,relation_probes,weight_lookups,neighbour_queries\n",
        );
        for r in &self.rows {
            let params: Vec<String> = r.hypothesis.params.iter().map(usize::to_string).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.trial,
                r.hypothesis.formula_index,
                params.join(" "),
                r.training_error,
                r.true_error,
                self.best_error,
                u8::from(r.success),
                r.counts.relation_probes,
                r.counts.weight_lookups,
                r.counts.neighbour_queries
            );
        }
        let c = self.total_counts();
        let _ = writeln!(
            out,
            "summary,,,{:.6},{:.6},{},{:.6},{},{},{}",
            self.mean_training_error(),
            self.mean_true_error(),
            self.best_error,
            self.success_frequency(),
            c.relation_probes,
            c.weight_lookups,
            c.neighbour_queries
        );
        out
    }
}

/// Largest `|Φ*|·|A|^ℓ` for which the global optimum is computed.
const GLOBAL_SCAN_LIMIT: u128 = 200_000;

/// Predictions of every hypothesis on the support, keyed by `(params, formula index)`.
fn support_errors(
    class: &HypothesisClass,
    oracle: &LocalAccessOracle,
    dist: &ExampleDistribution,
    space: &[usize],
) -> Result<HashMap<(Vec<usize>, usize), Rate>> {
    let mut out = HashMap::new();
    for params in Grid::new(space, class.ell()) {
        let per_instance: Vec<Vec<bool>> =
            dist.support.iter().map(|a| classify_all(class, oracle, a, &params)).collect::<Result<_>>()?;
        for fi in 0..class.formulas.len() {
            let predictions: Vec<bool> = per_instance.iter().map(|v| v[fi]).collect();
            out.insert((params.clone(), fi), dist.error(&predictions));
        }
    }
    Ok(out)
}

/// Repeatedly draws `t_ℋ(ε, δ)` examples from `dist`, runs the ERM learner through a fresh
/// oracle, and compares the true error of the result with the best hypothesis of the grid.
pub fn run_generalization_experiment(
    s: &WeightedStructure,
    class: &HypothesisClass,
    dist: &ExampleDistribution,
    config: &ExperimentConfig,
) -> Result<ExperimentReport> {
    let all = TrainingSequence::new(dist.support.iter().map(|a| (a.clone(), false)).collect());
    let setup = LocalAccessOracle::new(s);
    all.validate(class.k(), s.size())?;
    let space = parameter_space(&all, &setup, class)?;
    let class_size = class.grid_size(space.len());
    let t = sample_size(config.epsilon, config.delta, class_size)?;
    let errors = support_errors(class, &setup, dist, &space)?;
    let best_error = errors.values().min().copied().ok_or_else(|| Error::OutOfRange("the hypothesis space is empty".into()))?;
    let universe: Vec<usize> = (0..s.size()).collect();
    let global_best_error = if class.grid_size(universe.len()) <= GLOBAL_SCAN_LIMIT {
        support_errors(class, &setup, dist, &universe)?.values().min().copied()
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rows = Vec::with_capacity(config.trials);
    for trial in 0..config.trials {
        let sample = dist.sample(&mut rng, t as usize);
        let oracle = LocalAccessOracle::new(s);
        let learned = pac_learn(&sample, &oracle, class)?;
        let counts = oracle.counts();
        let h = &learned.hypothesis;
        let true_error = errors[&(h.params.clone(), h.formula_index)];
        let success = to_f64(&(true_error - best_error)) <= config.epsilon + 1e-12;
        rows.push(TrialRow { trial, hypothesis: h.clone(), training_error: learned.training_error(), true_error, success, counts });
    }
    Ok(ExperimentReport { config: *config, class_size, sample_size: t, best_error, global_best_error, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_size_examples() {
        assert_eq!(sample_size(0.5, 0.5, 1).unwrap(), 12);
        assert!(matches!(sample_size(1.0, 0.5, 1), Err(Error::OutOfRange(_))));
        assert!(matches!(sample_size(0.5, 0.0, 1), Err(Error::OutOfRange(_))));
        assert!(matches!(sample_size(0.5, 0.5, 0), Err(Error::OutOfRange(_))));
        assert!(sample_size(0.25, 0.5, 1).unwrap() >= 12);
        assert!(sample_size(0.5, 0.25, 1).unwrap() >= 12);
    }

    #[test]
    fn grid_is_lexicographic() {
        let items: Vec<Vec<usize>> = Grid::new(&[2, 5], 2).collect();
        assert_eq!(items, vec![vec![2, 2], vec![2, 5], vec![5, 2], vec![5, 5]]);
        assert_eq!(Grid::new(&[], 0).collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
        assert_eq!(Grid::new(&[], 1).count(), 0);
    }

    #[test]
    fn csv_round_trip() {
        let t = TrainingSequence::new(vec![(vec![1, 2], true), (vec![0, 3], false)]);
        let text = t.to_csv();
        assert_eq!(text, "a1,a2,label\n1,2,1\n0,3,0\n");
        assert_eq!(TrainingSequence::from_csv(&text).unwrap(), t);
        assert!(matches!(TrainingSequence::from_csv("1,1\n2,3,0\n"), Err(Error::ParseError { line: 2, .. })));
        assert!(matches!(TrainingSequence::from_csv("1,7\n"), Err(Error::ParseError { line: 1, .. })));
    }
}
