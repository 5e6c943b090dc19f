//! The cl-normal form of `FOW1` formulas and the layered cl-decomposition of `WA1`
//! formulas.
//!
//! The normal form starts from the Gaifman normal form: local leaves stay, local
//! aggregation sentences get an equivalent ground cl-term, and a basic-local sentence
//! `∃v1…vℓ (⋀ dist(vi,vj) > 2r ∧ ⋀ ψ(vi))` becomes `atleast1(g)` for the ground cl-term
//! `g` obtained from `Σ one(v1)⋯one(vℓ). (⋀ dist(vi,vj) > 2r ∧ ⋀ ψ(vi))`.
//!
//! The decomposition peels one aggregation level per layer. Every predicate application
//! `π(y)` of aggregation depth 1 has aggregation terms `Σ p.ψ` with `FOW1` bodies; their
//! Gaifman normal forms contribute sentences `χ1…χs`. For every `J ⊆ [s]` the
//! aggregation terms become cl-terms valid under `χ_J`, and `π(y)` is replaced by
//! `⋁_J (χ_J ∧ R_{π,J}(y))`, where each `χ_j` is a fresh 0-ary symbol and `R_{π,J}` a
//! fresh symbol of arity `≤ 1` defined by the predicate over those cl-terms. After the last
//! layer, the remaining `FOW1` formula is put into cl-normal form and its sentence leaves
//! become 0-ary symbols of a final layer.

use std::collections::HashMap;
use std::fmt;

use crate::algebra::{CarrierValue, PredicateDef};
use crate::error::{Error, Result};
use crate::locality::{gaifman_nf, Caps, GnfLeaf, GnfNode};
use crate::logic::analyze::{agg_depth, fragment, term_agg_depth, Fragment};
use crate::logic::{rename_apart, Factor, Formula, Fresh, Term, Var, WProduct, WeightApp};

use super::{clterms_from_aggregation, substitute_sentences, ClTerm};

/// Leaf of a cl-normal form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ClLeaf {
    /// A formula that is `radius`-local around its free variables.
    Local { formula: Formula, radius: usize },
    /// `value = Σ weight(ȳ). body(ȳ)`, with `term` an equivalent ground cl-term.
    LocalAgg { value: CarrierValue, weight: WeightApp, body: Formula, radius: usize, term: ClTerm },
    /// `term ≥ 1` for a ground cl-term of type `Z`; `source` is the basic-local sentence
    /// it replaces.
    AtLeastOne { term: ClTerm, radius: usize, source: Formula },
}

impl ClLeaf {
    /// The leaf as a formula; sentence leaves are expressed through their cl-terms.
    pub fn to_formula(&self) -> Formula {
        match self {
            ClLeaf::Local { formula, .. } => formula.clone(),
            ClLeaf::LocalAgg { value, term, .. } => {
                let p = PredicateDef::resolve("eq", &[value.carrier(), value.carrier()]).expect("eq is defined on every carrier");
                Formula::Pred(p, vec![term.to_term(), Term::Const(value.clone())])
            }
            ClLeaf::AtLeastOne { term, .. } => Formula::Pred(PredicateDef::at_least_one(), vec![term.to_term()]),
        }
    }

    /// The leaf in the original syntax (the Gaifman normal form leaf).
    pub fn source_formula(&self) -> Formula {
        match self {
            ClLeaf::Local { formula, .. } => formula.clone(),
            ClLeaf::LocalAgg { value, weight, body, .. } => Formula::SumEq(value.clone(), weight.clone(), Box::new(body.clone())),
            ClLeaf::AtLeastOne { source, .. } => source.clone(),
        }
    }

    pub fn radius(&self) -> usize {
        match self {
            ClLeaf::Local { radius, .. } | ClLeaf::LocalAgg { radius, .. } | ClLeaf::AtLeastOne { radius, .. } => *radius,
        }
    }

    pub fn is_sentence(&self) -> bool {
        !matches!(self, ClLeaf::Local { .. })
    }

    /// Short tag naming the leaf kind.
    pub fn kind(&self) -> &'static str {
        match self {
            ClLeaf::Local { .. } => "local",
            ClLeaf::LocalAgg { .. } => "local-aggregation",
            ClLeaf::AtLeastOne { .. } => "at-least-one",
        }
    }

    /// The ground cl-term of a sentence leaf.
    pub fn term(&self) -> Option<&ClTerm> {
        match self {
            ClLeaf::Local { .. } => None,
            ClLeaf::LocalAgg { term, .. } | ClLeaf::AtLeastOne { term, .. } => Some(term),
        }
    }
}

/// Boolean combination of cl-normal-form leaves.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ClNode {
    Const(bool),
    Leaf(ClLeaf),
    Not(Box<ClNode>),
    And(Vec<ClNode>),
    Or(Vec<ClNode>),
}

impl ClNode {
    /// The node as a formula (see [`ClLeaf::to_formula`]).
    pub fn to_formula(&self) -> Formula {
        self.map_to_formula(&|l| l.to_formula())
    }

    /// The node as a formula with every leaf mapped by `leaf`.
    pub fn map_to_formula(&self, leaf: &dyn Fn(&ClLeaf) -> Formula) -> Formula {
        match self {
            ClNode::Const(b) => Formula::Bool(*b),
            ClNode::Leaf(l) => leaf(l),
            ClNode::Not(n) => Formula::not(n.map_to_formula(leaf)),
            ClNode::And(ns) => Formula::and(ns.iter().map(|n| n.map_to_formula(leaf)).collect()),
            ClNode::Or(ns) => Formula::or(ns.iter().map(|n| n.map_to_formula(leaf)).collect()),
        }
    }

    /// All leaves, left to right.
    pub fn leaves(&self) -> Vec<&ClLeaf> {
        match self {
            ClNode::Const(_) => vec![],
            ClNode::Leaf(l) => vec![l],
            ClNode::Not(n) => n.leaves(),
            ClNode::And(ns) | ClNode::Or(ns) => ns.iter().flat_map(|n| n.leaves()).collect(),
        }
    }

    /// Largest leaf radius (0 without leaves).
    pub fn radius(&self) -> usize {
        self.leaves().iter().map(|l| l.radius()).max().unwrap_or(0)
    }
}

/// A `FOW1` formula in cl-normal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClNormalForm {
    pub root: ClNode,
    pub free_vars: Vec<Var>,
}

impl ClNormalForm {
    pub fn to_formula(&self) -> Formula {
        self.root.to_formula()
    }
}

/// The ground cl-term counting `ℓ`-tuples of pairwise `> 2r` apart witnesses of `body`.
fn basic_local_term(count: usize, radius: usize, var: &Var, body: &Formula, caps: &Caps) -> Result<ClTerm> {
    let mut fresh = Fresh::for_formula(body);
    fresh.reserve(var);
    let vs: Vec<Var> = (0..count).map(|_| fresh.var()).collect();
    let mut parts = Vec::new();
    for i in 0..count {
        for j in i + 1..count {
            parts.push(Formula::not(Formula::dist_le(&vs[i], &vs[j], 2 * radius)));
        }
    }
    for v in &vs {
        parts.push(body.rename_free(&HashMap::from([(var.clone(), v.clone())])));
    }
    let u = Term::Agg(WProduct::counting(&vs), Box::new(Formula::and(parts)));
    clterms_from_aggregation(&u, radius, caps)
}

fn cl_leaf(leaf: &GnfLeaf, caps: &Caps) -> Result<ClLeaf> {
    Ok(match leaf {
        GnfLeaf::Local { formula, radius } => ClLeaf::Local { formula: formula.clone(), radius: *radius },
        GnfLeaf::BasicLocal { count, radius, var, body } => ClLeaf::AtLeastOne {
            term: basic_local_term(*count, *radius, var, body, caps)?,
            radius: *radius,
            source: leaf.to_formula(),
        },
        GnfLeaf::LocalAgg { value, weight, body, radius } => {
            let p = WProduct::new(weight.carrier.clone(), vec![Factor::Weight(weight.clone())])?;
            let term = clterms_from_aggregation(&Term::Agg(p, Box::new(body.clone())), *radius, caps)?;
            ClLeaf::LocalAgg { value: value.clone(), weight: weight.clone(), body: body.clone(), radius: *radius, term }
        }
    })
}

fn cl_node(n: &GnfNode, caps: &Caps) -> Result<ClNode> {
    Ok(match n {
        GnfNode::Const(b) => ClNode::Const(*b),
        GnfNode::Leaf(l) => ClNode::Leaf(cl_leaf(l, caps)?),
        GnfNode::Not(m) => ClNode::Not(Box::new(cl_node(m, caps)?)),
        GnfNode::And(ms) => ClNode::And(ms.iter().map(|m| cl_node(m, caps)).collect::<Result<_>>()?),
        GnfNode::Or(ms) => ClNode::Or(ms.iter().map(|m| cl_node(m, caps)).collect::<Result<_>>()?),
    })
}

/// A Boolean combination of local formulas, local aggregation sentences (with equivalent
/// ground cl-terms) and statements `g ≥ 1` for ground cl-terms `g` of type `Z`,
/// equivalent to the `FOW1` formula `φ`.
pub fn cl_normalform(phi: &Formula, caps: &Caps) -> Result<ClNormalForm> {
    if fragment(phi) > Fragment::FOW1 {
        return Err(Error::NotInFragment(format!("{phi} is not in FOW1")));
    }
    let nf = gaifman_nf(phi, caps)?;
    Ok(ClNormalForm { root: cl_node(&nf.root, caps)?, free_vars: nf.free_vars })
}

/// Name of the free variable of a unary layer symbol's definition.
pub const DEFINER_VAR: &str = "z";

/// The statement defining a layer symbol.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Definer {
    /// `pred(t1, …, tm)` over cl-terms whose free variables are among `{z}`.
    Pred { pred: PredicateDef, terms: Vec<ClTerm> },
    /// `term ≥ 1` for a ground cl-term of type `Z`.
    AtLeastOne { term: ClTerm },
    /// `value = term` for a ground cl-term equivalent to a local aggregation sentence.
    LocalAgg { value: CarrierValue, term: ClTerm },
}

impl Definer {
    /// The statement as a formula over the previous layer's signature.
    pub fn statement(&self) -> Formula {
        match self {
            Definer::Pred { pred, terms } => Formula::Pred(pred.clone(), terms.iter().map(ClTerm::to_term).collect()),
            Definer::AtLeastOne { term } => Formula::Pred(PredicateDef::at_least_one(), vec![term.to_term()]),
            Definer::LocalAgg { value, term } => {
                let p = PredicateDef::resolve("eq", &[value.carrier(), value.carrier()]).expect("eq is defined on every carrier");
                Formula::Pred(p, vec![term.to_term(), Term::Const(value.clone())])
            }
        }
    }

    /// All cl-terms of the statement.
    pub fn terms(&self) -> Vec<&ClTerm> {
        match self {
            Definer::Pred { terms, .. } => terms.iter().collect(),
            Definer::AtLeastOne { term } | Definer::LocalAgg { term, .. } => vec![term],
        }
    }

    fn from_sentence(leaf: &ClLeaf) -> Definer {
        match leaf {
            ClLeaf::LocalAgg { value, term, .. } => Definer::LocalAgg { value: value.clone(), term: term.clone() },
            ClLeaf::AtLeastOne { term, .. } => Definer::AtLeastOne { term: term.clone() },
            ClLeaf::Local { .. } => unreachable!("only sentence leaves define symbols"),
        }
    }
}

/// A relation symbol introduced by a layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerSymbol {
    pub name: String,
    /// 0 (defined by a sentence) or 1 (defined by a statement about `z`).
    pub arity: usize,
    pub definer: Definer,
}

impl fmt::Display for LayerSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args = if self.arity == 1 { DEFINER_VAR } else { "" };
        write!(f, "{}({}) := {}", self.name, args, self.definer.statement())
    }
}

/// One layer of new symbols; each definer only mentions symbols of earlier layers.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Layer {
    pub symbols: Vec<LayerSymbol>,
}

/// Result of [`cl_decompose`]: layers of defined symbols and a final formula `φ′` that is
/// a Boolean combination of local formulas and 0-ary atoms over the expanded signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClDecomposition {
    pub layers: Vec<Layer>,
    pub final_formula: Formula,
    pub free_vars: Vec<Var>,
}

impl ClDecomposition {
    /// All introduced symbols in layer order.
    pub fn symbols(&self) -> impl Iterator<Item = &LayerSymbol> {
        self.layers.iter().flat_map(|l| l.symbols.iter())
    }
}

impl fmt::Display for ClDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, layer) in self.layers.iter().enumerate() {
            writeln!(f, "layer {}:", i + 1)?;
            for s in &layer.symbols {
                writeln!(f, "  {s}")?;
            }
        }
        write!(f, "final: {}", self.final_formula)
    }
}

/// 64-bit FNV-1a, used for deterministic symbol names.
fn fnv1a(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Collects the symbols of one layer, sharing a symbol between identical definers.
struct LayerBuilder {
    index: usize,
    symbols: Vec<LayerSymbol>,
}

impl LayerBuilder {
    fn symbol(&mut self, arity: usize, definer: Definer) -> String {
        if let Some(s) = self.symbols.iter().find(|s| s.arity == arity && s.definer == definer) {
            return s.name.clone();
        }
        let text = format!("{arity}:{}", definer.statement());
        let mut h = fnv1a(&text);
        let mut name = format!("__R{}_{:016x}", self.index, h);
        while self.symbols.iter().any(|s| s.name == name) {
            h = h.wrapping_add(1);
            name = format!("__R{}_{:016x}", self.index, h);
        }
        self.symbols.push(LayerSymbol { name: name.clone(), arity, definer });
        name
    }
}

/// An aggregation subterm of a depth-1 predicate application, prepared for conditioning.
struct PreparedAgg {
    product: WProduct,
    /// Boolean combination of local formulas and sentence formulas (as in `sentences`).
    body: Formula,
    radius: usize,
}

/// Replaces every aggregation subterm in `t` (left to right) using `next`.
fn term_to_cl(t: &Term, next: &mut dyn FnMut() -> ClTerm) -> ClTerm {
    match t {
        Term::Const(c) => ClTerm::Const(c.clone()),
        Term::Weight(w) => ClTerm::Weight(w.clone()),
        Term::Arith(op, l, r) => {
            let l = term_to_cl(l, next);
            ClTerm::Arith(*op, Box::new(l), Box::new(term_to_cl(r, next)))
        }
        Term::Scale(n, r) => {
            let n = term_to_cl(n, next);
            ClTerm::Scale(Box::new(n), Box::new(term_to_cl(r, next)))
        }
        Term::Agg(..) => next(),
    }
}

fn collect_aggs<'t>(t: &'t Term, out: &mut Vec<(&'t WProduct, &'t Formula)>) {
    match t {
        Term::Arith(_, l, r) | Term::Scale(l, r) => {
            collect_aggs(l, out);
            collect_aggs(r, out);
        }
        Term::Agg(p, body) => out.push((p, body)),
        _ => {}
    }
}

struct Decomposer<'c> {
    caps: &'c Caps,
    layer: LayerBuilder,
}

impl Decomposer<'_> {
    /// Replaces every predicate application of aggregation depth exactly 1.
    fn replace(&mut self, f: &Formula) -> Result<Formula> {
        match f {
            Formula::Pred(pred, terms) if terms.iter().map(term_agg_depth).max().unwrap_or(0) == 1 => self.replace_pred(pred, terms),
            other => other.map_children(&mut |g| self.replace(g)),
        }
    }

    fn replace_pred(&mut self, pred: &PredicateDef, terms: &[Term]) -> Result<Formula> {
        let mut free: Vec<Var> = Vec::new();
        for t in terms {
            for v in t.free_vars() {
                if !free.contains(&v) {
                    free.push(v);
                }
            }
        }
        if free.len() > 1 {
            return Err(Error::NotInFragment(format!("predicate application with free variables {free:?}")));
        }
        let mut aggs = Vec::new();
        for t in terms {
            collect_aggs(t, &mut aggs);
        }
        // Normal forms of the bodies and their sentences.
        let mut sentences: Vec<(Formula, ClLeaf)> = Vec::new();
        let mut prepared = Vec::new();
        for (p, body) in aggs {
            let nf = cl_normalform(body, self.caps)?;
            for leaf in nf.root.leaves() {
                if leaf.is_sentence() {
                    let sf = leaf.source_formula();
                    if !sentences.iter().any(|(g, _)| g == &sf) {
                        sentences.push((sf, leaf.clone()));
                    }
                }
            }
            let radius = nf.root.leaves().iter().filter(|l| !l.is_sentence()).map(|l| l.radius()).max().unwrap_or(0);
            prepared.push(PreparedAgg { product: p.clone(), body: nf.root.map_to_formula(&ClLeaf::source_formula), radius });
        }
        self.caps.check_pairs("sentence selectors", 1usize.checked_shl(sentences.len() as u32).unwrap_or(usize::MAX))?;
        let chi_atoms: Vec<Formula> =
            sentences.iter().map(|(_, leaf)| Formula::Rel(self.layer.symbol(0, Definer::from_sentence(leaf)), vec![])).collect();
        let rename: HashMap<Var, Var> = free.iter().map(|v| (v.clone(), DEFINER_VAR.to_string())).collect();
        let mut cache: HashMap<(usize, Formula), ClTerm> = HashMap::new();
        let mut disjuncts = Vec::new();
        for mask in 0..1usize << sentences.len() {
            let values: Vec<(Formula, bool)> = sentences.iter().enumerate().map(|(j, (g, _))| (g.clone(), mask >> j & 1 == 1)).collect();
            let mut cl_terms = Vec::new();
            for (i, agg) in prepared.iter().enumerate() {
                let body = substitute_sentences(&agg.body, &values);
                let key = (i, body.clone());
                if let Some(t) = cache.get(&key) {
                    cl_terms.push(t.clone());
                    continue;
                }
                let t = clterms_from_aggregation(&Term::Agg(agg.product.clone(), Box::new(body)), agg.radius, self.caps)?;
                cache.insert(key, t.clone());
                cl_terms.push(t);
            }
            let mut it = cl_terms.into_iter();
            let defining: Vec<ClTerm> = terms
                .iter()
                .map(|t| term_to_cl(t, &mut || it.next().expect("one cl-term per aggregation")).rename_free(&rename))
                .collect();
            let name = self.layer.symbol(free.len(), Definer::Pred { pred: pred.clone(), terms: defining });
            let mut conj: Vec<Formula> =
                chi_atoms.iter().enumerate().map(|(j, a)| if mask >> j & 1 == 1 { a.clone() } else { Formula::not(a.clone()) }).collect();
            conj.push(Formula::Rel(name, free.clone()));
            disjuncts.push(Formula::and(conj));
        }
        Ok(Formula::or(disjuncts))
    }
}

/// Decomposes a `WA1` formula `φ` of aggregation depth `d` into `d + 1` layers of defined
/// symbols of arity `≤ 1` and a final formula `φ′`, such that for the staged expansion
/// `𝔄_{d+1}` (each layer's symbols interpreted by their definers on the previous stage)
/// `𝔄 ⊨ φ[ā] ⟺ 𝔄_{d+1} ⊨ φ′[ā]`.
pub fn cl_decompose(phi: &Formula, caps: &Caps) -> Result<ClDecomposition> {
    if fragment(phi) > Fragment::WA1 {
        return Err(Error::NotInFragment(format!("{phi} is not in WA1")));
    }
    let free_vars = phi.free_vars();
    let mut current = rename_apart(phi, &mut Fresh::for_formula(phi));
    let d = agg_depth(&current);
    let mut layers = Vec::new();
    for i in 1..=d {
        let mut dec = Decomposer { caps, layer: LayerBuilder { index: i, symbols: Vec::new() } };
        current = dec.replace(&current)?;
        layers.push(Layer { symbols: dec.layer.symbols });
    }
    debug_assert_eq!(agg_depth(&current), 0);
    let nf = cl_normalform(&current, caps)?;
    let mut last = LayerBuilder { index: d + 1, symbols: Vec::new() };
    let mut names: HashMap<ClLeaf, String> = HashMap::new();
    for leaf in nf.root.leaves() {
        if leaf.is_sentence() && !names.contains_key(leaf) {
            names.insert(leaf.clone(), last.symbol(0, Definer::from_sentence(leaf)));
        }
    }
    let final_formula = nf.root.map_to_formula(&|l| match names.get(l) {
        Some(name) => Formula::Rel(name.clone(), vec![]),
        None => l.to_formula(),
    });
    layers.push(Layer { symbols: last.symbols });
    Ok(ClDecomposition { layers, final_formula, free_vars })
}
