//! Reference evaluator implementing the semantics by exhaustive enumeration.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;

use crate::algebra::{add_assign, combine, eval_predicate, ArithOp, CarrierValue};
use crate::error::{Error, Result};
use crate::structure::{all_tuples, WeightSymbol, WeightedStructure};

use super::{Expression, Factor, Formula, Scope, Term, Var, WeightApp};

/// Variable assignment; later entries shadow earlier ones.
pub type Assignment = Vec<(Var, usize)>;

/// Value of an expression: a truth value or a carrier element.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Bool(bool),
    Elem(CarrierValue),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Elem(v) => write!(f, "{v}"),
        }
    }
}

/// Evaluator bound to one structure, caching symbol resolution and distance rows.
pub struct Evaluator<'s> {
    s: &'s WeightedStructure,
    relations: RefCell<HashMap<String, usize>>,
    weights: RefCell<HashMap<String, WeightSymbol>>,
    rows: RefCell<HashMap<usize, Vec<usize>>>,
}

fn lookup(asg: &Assignment, v: &str) -> Result<usize> {
    asg.iter()
        .rev()
        .find(|(name, _)| name == v)
        .map(|(_, e)| *e)
        .ok_or_else(|| Error::UnboundVariable(v.to_string()))
}

impl<'s> Evaluator<'s> {
    /// New evaluator over `s`.
    pub fn new(s: &'s WeightedStructure) -> Self {
        Evaluator { s, relations: RefCell::default(), weights: RefCell::default(), rows: RefCell::default() }
    }

    /// The structure being evaluated.
    pub fn structure(&self) -> &'s WeightedStructure {
        self.s
    }

    fn relation_index(&self, name: &str, arity: usize) -> Result<usize> {
        if let Some(&i) = self.relations.borrow().get(name) {
            return Ok(i);
        }
        let (i, ar) = self
            .s
            .signature()
            .relation(name)
            .ok_or_else(|| Error::SignatureMismatch(format!("structure has no relation `{name}`")))?;
        if ar != arity {
            return Err(Error::ArityError(format!("relation `{name}` has arity {ar}")));
        }
        self.relations.borrow_mut().insert(name.to_string(), i);
        Ok(i)
    }

    fn weight_symbol(&self, w: &WeightApp) -> Result<WeightSymbol> {
        if let Some(sym) = self.weights.borrow().get(&w.name) {
            return Ok(sym.clone());
        }
        let sym = self
            .s
            .signature()
            .weight(&w.name)
            .ok_or_else(|| Error::SignatureMismatch(format!("structure has no weight `{}`", w.name)))?;
        if sym.carrier() != &w.carrier || sym.arity() != w.vars.len() {
            return Err(Error::SignatureMismatch(format!("weight `{}` is declared differently", w.name)));
        }
        self.weights.borrow_mut().insert(w.name.clone(), sym.clone());
        Ok(sym)
    }

    fn weight_at(&self, w: &WeightApp, asg: &Assignment) -> Result<CarrierValue> {
        let sym = self.weight_symbol(w)?;
        let tuple: Vec<usize> = w.vars.iter().map(|v| lookup(asg, v)).collect::<Result<_>>()?;
        Ok(self.s.weight_value(&sym, &tuple))
    }

    fn distance_row(&self, a: usize) -> Vec<usize> {
        if let Some(r) = self.rows.borrow().get(&a) {
            return r.clone();
        }
        let mut row = vec![usize::MAX; self.s.size()];
        for (e, d) in self.s.distances(&[a], usize::MAX, None) {
            row[e] = d;
        }
        self.rows.borrow_mut().insert(a, row.clone());
        row
    }

    /// Domain of the implicit quantifiers of a distance atom relativised by `scopes`
    /// (innermost first); `None` means the whole universe.
    fn scope_domain(&self, scopes: &[Scope], asg: &Assignment) -> Result<Option<BTreeSet<usize>>> {
        let mut env: Option<BTreeSet<usize>> = None;
        for scope in scopes.iter().rev() {
            let mut next = BTreeSet::new();
            for v in &scope.anchors {
                let a = lookup(asg, v)?;
                let ball: Vec<usize> = match &env {
                    None => self.s.distances(&[a], scope.radius, None).into_keys().collect(),
                    Some(dom) => {
                        let member = |e: usize| dom.contains(&e);
                        self.s.distances(&[a], scope.radius, Some(&member)).into_keys().collect()
                    }
                };
                next.extend(ball.into_iter().filter(|e| env.as_ref().map(|d| d.contains(e)).unwrap_or(true)));
            }
            env = Some(next);
        }
        Ok(env)
    }

    fn dist_holds(&self, a: &str, b: &str, bound: usize, scopes: &[Scope], asg: &Assignment) -> Result<bool> {
        let (x, y) = (lookup(asg, a)?, lookup(asg, b)?);
        if x == y {
            return Ok(true);
        }
        match self.scope_domain(scopes, asg)? {
            None => Ok(self.distance_row(x)[y] <= bound),
            Some(dom) => {
                let member = |e: usize| dom.contains(&e);
                Ok(self.s.distances(&[x], bound, Some(&member)).contains_key(&y))
            }
        }
    }

    /// Truth value of `f` under `asg`.
    pub fn formula(&self, f: &Formula, asg: &mut Assignment) -> Result<bool> {
        Ok(match f {
            Formula::Bool(b) => *b,
            Formula::Eq(a, b) => lookup(asg, a)? == lookup(asg, b)?,
            Formula::Rel(r, vs) => {
                let i = self.relation_index(r, vs.len())?;
                let t: Vec<usize> = vs.iter().map(|v| lookup(asg, v)).collect::<Result<_>>()?;
                self.s.relation_by_index(i).contains(&t)
            }
            Formula::WeightEq(c, w) => &self.weight_at(w, asg)? == c,
            Formula::Not(g) => !self.formula(g, asg)?,
            Formula::Or(gs) => {
                for g in gs {
                    if self.formula(g, asg)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::And(gs) => {
                for g in gs {
                    if !self.formula(g, asg)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Exists(y, g) => {
                for a in 0..self.s.size() {
                    asg.push((y.clone(), a));
                    let r = self.formula(g, asg);
                    asg.pop();
                    if r? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::SumEq(c, w, g) => &self.weight_sum(w, g, asg)? == c,
            Formula::Pred(p, ts) => {
                let args: Vec<CarrierValue> = ts.iter().map(|t| self.term(t, asg)).collect::<Result<_>>()?;
                eval_predicate(p, &args)?
            }
            Formula::Dist { a, b, bound, scopes } => self.dist_holds(a, b, *bound, scopes, asg)?,
        })
    }

    /// `Σ w(ȳ)` over all tuples `ȳ` satisfying `g`; only the support of `w` is visited.
    fn weight_sum(&self, w: &WeightApp, g: &Formula, asg: &mut Assignment) -> Result<CarrierValue> {
        let sym = self.weight_symbol(w)?;
        let mut acc = w.carrier.zero();
        match &sym {
            WeightSymbol::BuiltinOne { .. } => {
                let mut count = 0u64;
                for a in 0..self.s.size() {
                    asg.push((w.vars[0].clone(), a));
                    let r = self.formula(g, asg);
                    asg.pop();
                    if r? {
                        count += 1;
                    }
                }
                let one = self.s.weight_value(&sym, &[0]);
                acc = one.scale(&BigInt::from(count));
            }
            WeightSymbol::Declared { index, .. } => {
                for (key, val) in self.s.weight_table(*index) {
                    let n = asg.len();
                    asg.extend(w.vars.iter().cloned().zip(key.iter().copied()));
                    let r = self.formula(g, asg);
                    asg.truncate(n);
                    if r? {
                        add_assign(&mut acc, val)?;
                    }
                }
            }
        }
        Ok(acc)
    }

    /// Value of `t` under `asg`.
    pub fn term(&self, t: &Term, asg: &mut Assignment) -> Result<CarrierValue> {
        match t {
            Term::Const(c) => Ok(c.clone()),
            Term::Weight(w) => self.weight_at(w, asg),
            Term::Arith(op, l, r) => combine(&self.term(l, asg)?, &self.term(r, asg)?, *op),
            Term::Scale(n, r) => {
                let n = self.term(n, asg)?;
                let n = n.as_int().ok_or_else(|| Error::TypeError("scale factor must have type Z".into()))?.clone();
                Ok(self.term(r, asg)?.scale(&n))
            }
            Term::Agg(p, g) => {
                let vars = p.vars();
                // Drive the enumeration by the support of one declared weight factor.
                let driver = p.factors.iter().find_map(|f| match f {
                    Factor::Weight(w) => match self.weight_symbol(w) {
                        Ok(WeightSymbol::Declared { index, .. }) => Some(Ok((w.clone(), index))),
                        Ok(_) => None,
                        Err(e) => Some(Err(e)),
                    },
                    _ => None,
                });
                let mut acc = p.carrier.zero();
                match driver.transpose()? {
                    Some((w, index)) => {
                        let rest: Vec<Var> = vars.iter().filter(|v| !w.vars.contains(v)).cloned().collect();
                        let universe: Vec<usize> = (0..self.s.size()).collect();
                        let rest_tuples = all_tuples(&universe, rest.len());
                        for key in self.s.weight_table(index).keys() {
                            let n = asg.len();
                            asg.extend(w.vars.iter().cloned().zip(key.iter().copied()));
                            for rt in &rest_tuples {
                                let m = asg.len();
                                asg.extend(rest.iter().cloned().zip(rt.iter().copied()));
                                let r = self.summand(p, g, asg, &mut acc);
                                asg.truncate(m);
                                r?;
                            }
                            asg.truncate(n);
                        }
                    }
                    None => {
                        let universe: Vec<usize> = (0..self.s.size()).collect();
                        for tuple in all_tuples(&universe, vars.len()) {
                            let n = asg.len();
                            asg.extend(vars.iter().cloned().zip(tuple.iter().copied()));
                            let r = self.summand(p, g, asg, &mut acc);
                            asg.truncate(n);
                            r?;
                        }
                    }
                }
                Ok(acc)
            }
        }
    }

    fn summand(&self, p: &super::WProduct, g: &Formula, asg: &mut Assignment, acc: &mut CarrierValue) -> Result<()> {
        let mut value: Option<CarrierValue> = None;
        for f in &p.factors {
            let v = match f {
                Factor::Const(c) => c.clone(),
                Factor::Weight(w) => self.weight_at(w, asg)?,
            };
            if v.is_zero() {
                return Ok(());
            }
            value = Some(match value {
                None => v,
                Some(acc) => combine(&acc, &v, ArithOp::Mul)?,
            });
        }
        if self.formula(g, asg)? {
            add_assign(acc, &value.expect("nonempty product"))?;
        }
        Ok(())
    }

    /// Value of an expression.
    pub fn expression(&self, e: &Expression, asg: &mut Assignment) -> Result<Value> {
        Ok(match e {
            Expression::Formula(f) => Value::Bool(self.formula(f, asg)?),
            Expression::Term(t) => Value::Elem(self.term(t, asg)?),
        })
    }
}

/// Evaluates an expression in `s` under `asg`.
pub fn evaluate(s: &WeightedStructure, e: &Expression, asg: &[(Var, usize)]) -> Result<Value> {
    Evaluator::new(s).expression(e, &mut asg.to_vec())
}

/// Evaluates a formula in `s` under `asg`.
pub fn evaluate_formula(s: &WeightedStructure, f: &Formula, asg: &[(Var, usize)]) -> Result<bool> {
    Evaluator::new(s).formula(f, &mut asg.to_vec())
}

/// Evaluates a term in `s` under `asg`.
pub fn evaluate_term(s: &WeightedStructure, t: &Term, asg: &[(Var, usize)]) -> Result<CarrierValue> {
    Evaluator::new(s).term(t, &mut asg.to_vec())
}

/// Evaluates `e` on every tuple for `vars` (which must cover the free variables), in
/// lexicographic order of the tuples; a sentence yields one entry keyed by `()`.
pub fn evaluate_all(s: &WeightedStructure, e: &Expression, vars: &[Var]) -> Result<Vec<(Vec<usize>, Value)>> {
    let ev = Evaluator::new(s);
    let universe: Vec<usize> = (0..s.size()).collect();
    all_tuples(&universe, vars.len())
        .into_iter()
        .map(|t| {
            let mut asg: Assignment = vars.iter().cloned().zip(t.iter().copied()).collect();
            ev.expression(e, &mut asg).map(|v| (t, v))
        })
        .collect()
}
