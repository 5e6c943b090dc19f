//! Table-based evaluation of cl-terms through the local-access oracle, and structure
//! expansion along a cl-decomposition.
//!
//! For a basic cl-term `Σ p.(ψ ∧ δ_{G,2r+1})(ȳ)` with connected `G` on `k` vertices, every
//! satisfying tuple lies within distance `(k−1)(2r+1)` of its first component, and its
//! `r`-neighbourhood within `R = r + (k−1)(2r+1)`. Precomputation therefore visits every
//! element `c1`, fetches `N_R(c1)` from the oracle, enumerates the tuples starting with `c1`
//! that realise `G`, evaluates `ψ` inside the fetched neighbourhood (exact, by locality) and
//! adds the product value to the group of the tuple's free-variable prefix.

use std::collections::{BTreeMap, HashMap};

use crate::algebra::{add_assign, combine, eval_predicate, ArithOp, Carrier, CarrierValue};
use crate::error::{Error, Result};
use crate::locality::Caps;
use crate::logic::{Evaluator, Factor, Formula, Var, WProduct};
use crate::structure::{LocalAccessOracle, QueryCounts, WeightedStructure};

use super::decompose::{cl_decompose, ClDecomposition, Definer, DEFINER_VAR};
use super::{BasicClTerm, ClTerm};

/// Grouped sums of one basic cl-term, keyed by the free-variable prefix (original ids).
#[derive(Clone, Debug)]
struct BasicTable {
    free: Vec<Var>,
    carrier: Carrier,
    groups: HashMap<Vec<usize>, CarrierValue>,
}

/// A cl-term with precomputed tables; lookups only touch the oracle for bare weight
/// applications.
#[derive(Debug)]
pub struct ClEvaluator<'o> {
    source: ClTerm,
    tables: Vec<BasicTable>,
    oracle: &'o LocalAccessOracle<'o>,
}

fn product_value(sub: &WeightedStructure, p: &WProduct, asg: &HashMap<&str, usize>) -> Result<CarrierValue> {
    let mut acc: Option<CarrierValue> = None;
    for f in &p.factors {
        let v = match f {
            Factor::Const(c) => c.clone(),
            Factor::Weight(w) => {
                let sym = sub
                    .signature()
                    .weight(&w.name)
                    .ok_or_else(|| Error::SignatureMismatch(format!("structure has no weight `{}`", w.name)))?;
                let tuple: Vec<usize> = w.vars.iter().map(|v| asg[v.as_str()]).collect();
                sub.weight_value(&sym, &tuple)
            }
        };
        if v.is_zero() {
            return Ok(p.carrier.zero());
        }
        acc = Some(match acc {
            None => v,
            Some(a) => combine(&a, &v, ArithOp::Mul)?,
        });
    }
    Ok(acc.unwrap_or_else(|| p.carrier.zero()))
}

/// Fills the table of one basic cl-term.
fn precompute_basic(b: &BasicClTerm, oracle: &LocalAccessOracle) -> Result<BasicTable> {
    let k = b.width();
    let span = (k - 1) * (2 * b.radius + 1);
    let big_r = b.radius + span;
    let near = 2 * b.radius + 1;
    let ell = b.free_count();
    let mut groups: HashMap<Vec<usize>, CarrierValue> = HashMap::new();
    for c1 in 0..oracle.size() {
        let (sub, ids) = oracle.neighbourhood(&[c1], big_r)?;
        let c = ids.binary_search(&c1).map_err(|_| Error::UnknownElement(c1))?;
        let candidates: Vec<usize> = sub.distances(&[c], span, None).into_keys().collect();
        let near_sets: BTreeMap<usize, Vec<usize>> =
            candidates.iter().map(|&a| (a, sub.distances(&[a], near, None).into_keys().collect())).collect();
        let eval = Evaluator::new(&sub);
        let mut tuple = vec![c];
        enumerate(&mut tuple, k, &candidates, &|t: &[usize]| {
            let i = t.len() - 1;
            (0..i).all(|j| near_sets[&t[j]].binary_search(&t[i]).is_ok() == b.graph.has_edge(j, i))
        }, &mut |t: &[usize]| -> Result<()> {
            let names: HashMap<&str, usize> = b.vars.iter().map(String::as_str).zip(t.iter().copied()).collect();
            let v = product_value(&sub, &b.product, &names)?;
            if v.is_zero() {
                return Ok(());
            }
            let mut asg: Vec<(Var, usize)> = b.vars.iter().cloned().zip(t.iter().copied()).collect();
            if eval.formula(&b.body, &mut asg)? {
                let key: Vec<usize> = t[..ell].iter().map(|&a| ids[a]).collect();
                match groups.get_mut(&key) {
                    Some(acc) => add_assign(acc, &v)?,
                    None => {
                        groups.insert(key, v);
                    }
                }
            }
            Ok(())
        })?;
    }
    groups.retain(|_, v| !v.is_zero());
    Ok(BasicTable { free: b.free_vars(), carrier: b.product.carrier.clone(), groups })
}

/// Depth-first enumeration of tuples over `candidates` extending `tuple` to length `k`,
/// pruned by `accept` (called on every new prefix).
fn enumerate(
    tuple: &mut Vec<usize>,
    k: usize,
    candidates: &[usize],
    accept: &dyn Fn(&[usize]) -> bool,
    visit: &mut dyn FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    if tuple.len() == k {
        return visit(tuple);
    }
    for &a in candidates {
        tuple.push(a);
        if accept(tuple) {
            enumerate(tuple, k, candidates, accept, visit)?;
        }
        tuple.pop();
    }
    Ok(())
}

/// Precomputes the grouped tables of every basic subterm of `t` through `oracle`.
pub fn precompute<'o>(t: &ClTerm, oracle: &'o LocalAccessOracle<'o>) -> Result<ClEvaluator<'o>> {
    let tables = t.basics().into_iter().map(|b| precompute_basic(b, oracle)).collect::<Result<_>>()?;
    Ok(ClEvaluator { source: t.clone(), tables, oracle })
}

impl ClEvaluator<'_> {
    /// The evaluated term.
    pub fn source(&self) -> &ClTerm {
        &self.source
    }

    /// Number of stored (nonzero) groups over all basic subterms.
    pub fn stored_groups(&self) -> usize {
        self.tables.iter().map(|t| t.groups.len()).sum()
    }

    /// Value of the term under `asg` (which must bind the term's free variables).
    pub fn lookup(&self, asg: &[(Var, usize)]) -> Result<CarrierValue> {
        let mut next = 0;
        self.value(&self.source, asg, &mut next)
    }

    fn value(&self, t: &ClTerm, asg: &[(Var, usize)], next: &mut usize) -> Result<CarrierValue> {
        let bound = |v: &Var| -> Result<usize> {
            asg.iter().rev().find(|(n, _)| n == v).map(|(_, a)| *a).ok_or_else(|| Error::UnboundVariable(v.clone()))
        };
        match t {
            ClTerm::Basic(_) => {
                let table = &self.tables[*next];
                *next += 1;
                let key: Vec<usize> = table.free.iter().map(bound).collect::<Result<_>>()?;
                Ok(table.groups.get(&key).cloned().unwrap_or_else(|| table.carrier.zero()))
            }
            ClTerm::Const(c) => Ok(c.clone()),
            ClTerm::Weight(w) => {
                let tuple: Vec<usize> = w.vars.iter().map(bound).collect::<Result<_>>()?;
                self.oracle.weight(&w.name, &tuple)
            }
            ClTerm::Arith(op, l, r) => {
                let l = self.value(l, asg, next)?;
                combine(&l, &self.value(r, asg, next)?, *op)
            }
            ClTerm::Scale(n, r) => {
                let n = self.value(n, asg, next)?;
                let n = n.as_int().ok_or_else(|| Error::TypeError("scale factor must have type Z".into()))?.clone();
                Ok(self.value(r, asg, next)?.scale(&n))
            }
        }
    }
}

/// A structure expanded along a cl-decomposition.
#[derive(Clone, Debug)]
pub struct Expansion {
    pub structure: WeightedStructure,
    pub decomposition: ClDecomposition,
    /// Local-access queries spent on all stages.
    pub counts: QueryCounts,
}

impl Expansion {
    /// The formula `φ′` to evaluate on the expanded structure.
    pub fn formula(&self) -> &Formula {
        &self.decomposition.final_formula
    }

    /// One line per introduced symbol: `layer<TAB>name/arity<TAB>definition`.
    pub fn manifest(&self) -> String {
        let mut out = String::new();
        for (i, layer) in self.decomposition.layers.iter().enumerate() {
            for s in &layer.symbols {
                out.push_str(&format!("{}\t{}/{}\t{}\n", i + 1, s.name, s.arity, s.definer.statement()));
            }
        }
        out.push_str(&format!("final\t{}\n", self.decomposition.final_formula));
        out
    }
}

fn holds(definer: &Definer, evals: &[ClEvaluator], asg: &[(Var, usize)]) -> Result<bool> {
    let values: Vec<CarrierValue> = evals.iter().map(|e| e.lookup(asg)).collect::<Result<_>>()?;
    match definer {
        Definer::Pred { pred, .. } => eval_predicate(pred, &values),
        Definer::AtLeastOne { .. } => Ok(values[0].as_int().is_some_and(|n| *n >= 1.into())),
        Definer::LocalAgg { value, .. } => Ok(&values[0] == value),
    }
}

/// Computes the expansion of `s` by all symbols of the cl-decomposition of `φ`, layer by
/// layer, evaluating each definer through a local-access oracle on the previous stage.
pub fn expand_structure(s: &WeightedStructure, phi: &Formula, caps: &Caps) -> Result<Expansion> {
    let decomposition = cl_decompose(phi, caps)?;
    let mut stage = s.clone();
    let mut counts = QueryCounts::default();
    for layer in &decomposition.layers {
        if layer.symbols.is_empty() {
            continue;
        }
        let oracle = LocalAccessOracle::new(&stage);
        let mut extra = Vec::new();
        for sym in &layer.symbols {
            let evals: Vec<ClEvaluator> = sym.definer.terms().into_iter().map(|t| precompute(t, &oracle)).collect::<Result<_>>()?;
            let mut tuples = Vec::new();
            if sym.arity == 0 {
                if holds(&sym.definer, &evals, &[])? {
                    tuples.push(vec![]);
                }
            } else {
                for a in 0..stage.size() {
                    if holds(&sym.definer, &evals, &[(DEFINER_VAR.to_string(), a)])? {
                        tuples.push(vec![a]);
                    }
                }
            }
            extra.push((sym.name.clone(), sym.arity, tuples));
        }
        let c = oracle.counts();
        counts.relation_probes += c.relation_probes;
        counts.weight_lookups += c.weight_lookups;
        counts.neighbour_queries += c.neighbour_queries;
        stage = stage.expand(&extra)?;
    }
    Ok(Expansion { structure: stage, decomposition, counts })
}

/// Evaluates a cl-term at every assignment of its free variables through a fresh oracle
/// on `s`; returns the values (ascending tuples) and the queries spent.
pub fn evaluate_all_cl(s: &WeightedStructure, t: &ClTerm) -> Result<(Vec<(Vec<usize>, CarrierValue)>, QueryCounts)> {
    let oracle = LocalAccessOracle::new(s);
    let eval = precompute(t, &oracle)?;
    let pre = oracle.counts();
    let free = t.free_vars();
    let universe: Vec<usize> = (0..s.size()).collect();
    let mut out = Vec::new();
    for tuple in crate::structure::all_tuples(&universe, free.len()) {
        let asg: Vec<(Var, usize)> = free.iter().cloned().zip(tuple.iter().copied()).collect();
        out.push((tuple, eval.lookup(&asg)?));
    }
    Ok((out, pre))
}
