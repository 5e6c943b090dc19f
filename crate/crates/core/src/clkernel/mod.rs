//! Connected local terms (cl-terms): component-pattern formulas `δ_{G,r}`, the rewriting
//! of aggregation terms with local bodies into cl-terms, the cl-normal form of `FOW1`,
//! the layered cl-decomposition of `WA1`, table-based cl-term evaluation through the
//! local-access oracle, and structure expansion.

pub mod decompose;
pub mod evaluator;

use std::collections::HashMap;
use std::fmt;

use crate::algebra::{ArithOp, Carrier, CarrierValue};
use crate::error::{Error, Result};
use crate::locality::{fv_decompose, localize, Caps};
use crate::logic::analyze::{fragment, Fragment};
use crate::logic::{rename_term, Factor, Formula, Term, Var, WProduct, WeightApp};

pub use decompose::{cl_decompose, cl_normalform, ClDecomposition, ClLeaf, ClNode, ClNormalForm, Definer, Layer, LayerSymbol};
pub use evaluator::{evaluate_all_cl, expand_structure, precompute, ClEvaluator, Expansion};

/// An undirected graph on the vertex set `{0, …, k−1}`; edge `{i,j}` is bit
/// [`ComponentGraph::pair_index`] of the mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ComponentGraph {
    k: usize,
    edges: u64,
}

impl ComponentGraph {
    /// Bit position of the pair `{i, j}` (`i ≠ j`, both `< k`).
    pub fn pair_index(i: usize, j: usize) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        b * (b - 1) / 2 + a
    }

    /// Graph with `k ≥ 1` vertices and the given edges.
    pub fn new(k: usize, edges: &[(usize, usize)]) -> Result<ComponentGraph> {
        if k == 0 || k > 11 {
            return Err(Error::OutOfRange(format!("graph with {k} vertices")));
        }
        let mut mask = 0u64;
        for &(i, j) in edges {
            if i == j || i >= k || j >= k {
                return Err(Error::OutOfRange(format!("edge {{{i},{j}}} on {k} vertices")));
            }
            mask |= 1 << Self::pair_index(i, j);
        }
        Ok(ComponentGraph { k, edges: mask })
    }

    /// All graphs on `k` vertices, ordered by edge bitmask.
    pub fn all(k: usize) -> Vec<ComponentGraph> {
        let pairs = k * k.saturating_sub(1) / 2;
        (0..1u64 << pairs).map(|edges| ComponentGraph { k, edges }).collect()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mask(&self) -> u64 {
        self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.edges >> Self::pair_index(i, j) & 1 == 1
    }

    /// Edges `(i, j)` with `i < j` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.k).flat_map(|i| (i + 1..self.k).map(move |j| (i, j))).filter(|&(i, j)| self.has_edge(i, j)).collect()
    }

    /// Vertices connected to `v`, ascending.
    pub fn component_of(&self, v: usize) -> Vec<usize> {
        let mut seen = vec![false; self.k];
        let mut stack = vec![v];
        seen[v] = true;
        while let Some(u) = stack.pop() {
            for w in 0..self.k {
                if !seen[w] && self.has_edge(u, w) {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        (0..self.k).filter(|&w| seen[w]).collect()
    }

    pub fn components(&self) -> usize {
        let mut seen = vec![false; self.k];
        let mut count = 0;
        for v in 0..self.k {
            if !seen[v] {
                count += 1;
                for w in self.component_of(v) {
                    seen[w] = true;
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.components() == 1
    }

    /// The subgraph induced on `vertices`, renumbered in the given order.
    pub fn induced(&self, vertices: &[usize]) -> ComponentGraph {
        let mut edges = 0u64;
        for (a, &i) in vertices.iter().enumerate() {
            for (b, &j) in vertices.iter().enumerate().skip(a + 1) {
                if self.has_edge(i, j) {
                    edges |= 1 << Self::pair_index(a, b);
                }
            }
        }
        ComponentGraph { k: vertices.len(), edges }
    }

    /// All graphs `H ≠ self` on the same vertices that agree with `self` inside `left`
    /// and inside its complement (i.e. differ only by edges across the cut), by bitmask.
    pub fn cross_extensions(&self, left: &[usize]) -> Vec<ComponentGraph> {
        let cross: Vec<usize> = (0..self.k)
            .flat_map(|i| (i + 1..self.k).map(move |j| (i, j)))
            .filter(|&(i, j)| left.contains(&i) != left.contains(&j))
            .map(|(i, j)| Self::pair_index(i, j))
            .collect();
        let mut out: Vec<ComponentGraph> = (1..1u64 << cross.len())
            .map(|sub| {
                let extra = cross.iter().enumerate().filter(|(b, _)| sub >> b & 1 == 1).fold(0u64, |m, (_, &p)| m | 1 << p);
                ComponentGraph { k: self.k, edges: self.edges | extra }
            })
            .collect();
        out.sort();
        out
    }
}

impl fmt::Display for ComponentGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<String> = self.edges().iter().map(|(i, j)| format!("{}-{}", i + 1, j + 1)).collect();
        write!(f, "G{}[{}]", self.k, edges.join(","))
    }
}

/// `δ_{G,r}(ȳ)`: `dist(y_i, y_j) ≤ r` for every edge of `G` and `dist(y_i, y_j) > r` for
/// every non-edge.
pub fn delta_formula(g: &ComponentGraph, r: usize, ys: &[Var]) -> Result<Formula> {
    if ys.len() != g.k {
        return Err(Error::ArityMismatch(format!("δ for a graph on {} vertices applied to {} variables", g.k, ys.len())));
    }
    let mut parts = Vec::new();
    for i in 0..g.k {
        for j in i + 1..g.k {
            let d = Formula::dist_le(&ys[i], &ys[j], r);
            parts.push(if g.has_edge(i, j) { d } else { Formula::not(d) });
        }
    }
    Ok(Formula::and(parts))
}

/// A basic cl-term `Σ p.(ψ(ȳ) ∧ δ_{G,2r+1}(ȳ))` with `G` connected and `ψ` r-local.
///
/// The variables are stored free-first: `ȳ = (z̄, vars(p))`, and vertex `i` of `graph`
/// corresponds to `vars[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BasicClTerm {
    pub product: WProduct,
    pub body: Formula,
    pub graph: ComponentGraph,
    pub radius: usize,
    pub vars: Vec<Var>,
}

impl BasicClTerm {
    /// Builds a basic term, reordering `ys` so the free variables come first.
    fn new(product: WProduct, body: Formula, graph: ComponentGraph, radius: usize, ys: &[Var]) -> BasicClTerm {
        let bound = product.vars();
        let order: Vec<usize> =
            (0..ys.len()).filter(|&i| !bound.contains(&ys[i])).chain((0..ys.len()).filter(|&i| bound.contains(&ys[i]))).collect();
        let vars = order.iter().map(|&i| ys[i].clone()).collect();
        BasicClTerm { product, body, graph: graph.induced(&order), radius, vars }
    }

    /// Number of free variables (the prefix length `ℓ`).
    pub fn free_count(&self) -> usize {
        let bound = self.product.vars();
        self.vars.iter().filter(|v| !bound.contains(v)).count()
    }

    pub fn free_vars(&self) -> Vec<Var> {
        self.vars[..self.free_count()].to_vec()
    }

    pub fn width(&self) -> usize {
        self.vars.len()
    }

    /// `ψ ∧ δ_{G,2r+1}`.
    pub fn guarded_body(&self) -> Formula {
        let delta = delta_formula(&self.graph, 2 * self.radius + 1, &self.vars).expect("graph matches variables");
        Formula::and(vec![self.body.clone(), delta])
    }

    pub fn to_term(&self) -> Term {
        Term::Agg(self.product.clone(), Box::new(self.guarded_body()))
    }
}

/// A cl-term: basic cl-terms closed under constants, weight applications and arithmetic.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ClTerm {
    Basic(Box<BasicClTerm>),
    Const(CarrierValue),
    Weight(WeightApp),
    Arith(ArithOp, Box<ClTerm>, Box<ClTerm>),
    /// `n · t` for a `Z`-valued `n`.
    Scale(Box<ClTerm>, Box<ClTerm>),
}

impl ClTerm {
    pub fn zero(carrier: &Carrier) -> ClTerm {
        ClTerm::Const(carrier.zero())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ClTerm::Const(v) if v.is_zero())
    }

    pub fn carrier(&self) -> Carrier {
        match self {
            ClTerm::Basic(b) => b.product.carrier.clone(),
            ClTerm::Const(v) => v.carrier(),
            ClTerm::Weight(w) => w.carrier.clone(),
            ClTerm::Arith(_, l, _) => l.carrier(),
            ClTerm::Scale(_, t) => t.carrier(),
        }
    }

    /// `self + other`, dropping zero summands.
    pub fn add(self, other: ClTerm) -> ClTerm {
        if self.is_zero() {
            other
        } else if other.is_zero() {
            self
        } else {
            ClTerm::Arith(ArithOp::Add, Box::new(self), Box::new(other))
        }
    }

    /// `self − other`, dropping a zero subtrahend.
    pub fn sub(self, other: ClTerm) -> ClTerm {
        if other.is_zero() {
            self
        } else {
            ClTerm::Arith(ArithOp::Sub, Box::new(self), Box::new(other))
        }
    }

    /// The term in the logic's syntax.
    pub fn to_term(&self) -> Term {
        match self {
            ClTerm::Basic(b) => b.to_term(),
            ClTerm::Const(v) => Term::Const(v.clone()),
            ClTerm::Weight(w) => Term::Weight(w.clone()),
            ClTerm::Arith(op, l, r) => Term::Arith(*op, Box::new(l.to_term()), Box::new(r.to_term())),
            ClTerm::Scale(n, t) => Term::Scale(Box::new(n.to_term()), Box::new(t.to_term())),
        }
    }

    /// Free variables in first-occurrence order.
    pub fn free_vars(&self) -> Vec<Var> {
        let mut out: Vec<Var> = Vec::new();
        let push = |vs: Vec<Var>, out: &mut Vec<Var>| {
            for v in vs {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        };
        match self {
            ClTerm::Basic(b) => push(b.free_vars(), &mut out),
            ClTerm::Const(_) => {}
            ClTerm::Weight(w) => push(w.vars.clone(), &mut out),
            ClTerm::Arith(_, l, r) | ClTerm::Scale(l, r) => {
                push(l.free_vars(), &mut out);
                push(r.free_vars(), &mut out);
            }
        }
        out
    }

    /// All basic cl-terms, left to right.
    pub fn basics(&self) -> Vec<&BasicClTerm> {
        match self {
            ClTerm::Basic(b) => vec![b],
            ClTerm::Const(_) | ClTerm::Weight(_) => vec![],
            ClTerm::Arith(_, l, r) | ClTerm::Scale(l, r) => {
                let mut v = l.basics();
                v.extend(r.basics());
                v
            }
        }
    }

    /// Largest radius of a basic subterm (0 without any).
    pub fn radius(&self) -> usize {
        self.basics().iter().map(|b| b.radius).max().unwrap_or(0)
    }

    /// Largest width of a basic subterm (0 without any).
    pub fn width(&self) -> usize {
        self.basics().iter().map(|b| b.width()).max().unwrap_or(0)
    }

    /// Renames free variables (the new names must not be bound inside the term).
    pub fn rename_free(&self, map: &HashMap<Var, Var>) -> ClTerm {
        match self {
            ClTerm::Basic(b) => {
                let bound = b.product.vars();
                let map: HashMap<Var, Var> = map.iter().filter(|(k, _)| !bound.contains(k)).map(|(k, v)| (k.clone(), v.clone())).collect();
                ClTerm::Basic(Box::new(BasicClTerm {
                    product: b.product.clone(),
                    body: b.body.rename_free(&map),
                    graph: b.graph,
                    radius: b.radius,
                    vars: b.vars.iter().map(|v| map.get(v).cloned().unwrap_or_else(|| v.clone())).collect(),
                }))
            }
            ClTerm::Const(_) => self.clone(),
            ClTerm::Weight(w) => match rename_term(&Term::Weight(w.clone()), map) {
                Term::Weight(w) => ClTerm::Weight(w),
                _ => unreachable!("renaming preserves the node kind"),
            },
            ClTerm::Arith(op, l, r) => ClTerm::Arith(*op, Box::new(l.rename_free(map)), Box::new(r.rename_free(map))),
            ClTerm::Scale(n, t) => ClTerm::Scale(Box::new(n.rename_free(map)), Box::new(t.rename_free(map))),
        }
    }
}

impl fmt::Display for ClTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

/// `Σ p'.φ` where `p'` are the given factors, or a counting product over `bound` when
/// there are none (the constant `1` when `bound` is empty as well).
fn part_product(carrier: &Carrier, factors: Vec<Factor>, bound: &[Var]) -> (WProduct, bool) {
    if !factors.is_empty() {
        return (WProduct { carrier: carrier.clone(), factors }, true);
    }
    if bound.is_empty() {
        return (WProduct { carrier: Carrier::IntegerRing, factors: vec![Factor::Const(CarrierValue::int(1))] }, false);
    }
    (WProduct::counting(bound), false)
}

/// A conjunct of an aggregation body that is r-local around its anchors.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Piece {
    formula: Formula,
    anchors: Vec<Var>,
}

/// Recursive construction behind [`clterms_from_aggregation`].
struct ClBuilder<'c> {
    caps: &'c Caps,
    radius: usize,
    basics: usize,
    memo: HashMap<(WProduct, Vec<Piece>, Vec<Var>, ComponentGraph), ClTerm>,
}

impl ClBuilder<'_> {
    /// A cl-term equivalent to `Σ p.(ψ(ȳ) ∧ δ_{G,2r+1}(ȳ))` where `ψ` is the conjunction
    /// of the pieces.
    fn with_graph(&mut self, p: &WProduct, pieces: &[Piece], ys: &[Var], g: &ComponentGraph) -> Result<ClTerm> {
        let key = (p.clone(), pieces.to_vec(), ys.to_vec(), *g);
        if let Some(t) = self.memo.get(&key) {
            return Ok(t.clone());
        }
        let t = self.build(p, pieces, ys, g)?;
        self.memo.insert(key, t.clone());
        Ok(t)
    }

    fn build(&mut self, p: &WProduct, pieces: &[Piece], ys: &[Var], g: &ComponentGraph) -> Result<ClTerm> {
        let psi = Formula::and(pieces.iter().map(|x| x.formula.clone()).collect());
        if matches!(psi, Formula::Bool(false)) {
            return Ok(ClTerm::zero(&p.carrier));
        }
        if g.is_connected() {
            self.basics += 1;
            self.caps.check_pairs("basic cl-terms", self.basics)?;
            return Ok(ClTerm::Basic(Box::new(BasicClTerm::new(p.clone(), psi, *g, self.radius, ys))));
        }
        // Split off the component of the first vertex.
        let left = g.component_of(0);
        let right: Vec<usize> = (0..g.k()).filter(|i| !left.contains(i)).collect();
        let ys1: Vec<Var> = left.iter().map(|&i| ys[i].clone()).collect();
        let ys2: Vec<Var> = right.iter().map(|&i| ys[i].clone()).collect();
        let (g1, g2) = (g.induced(&left), g.induced(&right));
        let bound = p.vars();
        let bound1: Vec<Var> = ys1.iter().filter(|v| bound.contains(v)).cloned().collect();
        let bound2: Vec<Var> = ys2.iter().filter(|v| bound.contains(v)).cloned().collect();
        let mut f1 = Vec::new();
        let mut f2 = Vec::new();
        for factor in &p.factors {
            match factor {
                Factor::Const(_) => f1.push(factor.clone()),
                Factor::Weight(w) => {
                    let in1 = w.vars.iter().any(|v| ys1.contains(v));
                    let in2 = w.vars.iter().any(|v| ys2.contains(v));
                    if in1 && in2 {
                        // A weight spanning two far-apart parts is zero by locality.
                        return Ok(ClTerm::zero(&p.carrier));
                    }
                    if in1 {
                        f1.push(factor.clone())
                    } else {
                        f2.push(factor.clone())
                    }
                }
            }
        }
        let carrier = p.carrier.clone();
        let (p1, real1) = part_product(&carrier, f1, &bound1);
        let (p2, real2) = part_product(&carrier, f2, &bound2);
        // Pieces local around one side stay there; the others are decomposed together.
        let mut on1 = Vec::new();
        let mut on2 = Vec::new();
        let mut straddle: Vec<&Piece> = Vec::new();
        for piece in pieces {
            if piece.anchors.iter().all(|v| ys1.contains(v)) {
                on1.push(piece.clone());
            } else if piece.anchors.iter().all(|v| ys2.contains(v)) {
                on2.push(piece.clone());
            } else {
                straddle.push(piece);
            }
        }
        let splits = if straddle.is_empty() {
            vec![(Vec::new(), Vec::new())]
        } else {
            let formula = Formula::and(straddle.iter().map(|x| x.formula.clone()).collect());
            let anchors: Vec<Var> = ys.iter().filter(|v| straddle.iter().any(|x| x.anchors.contains(v))).cloned().collect();
            let a1: Vec<Var> = anchors.iter().filter(|v| ys1.contains(v)).cloned().collect();
            let a2: Vec<Var> = anchors.iter().filter(|v| ys2.contains(v)).cloned().collect();
            self.split(&formula, &a1, &a2)?
                .into_iter()
                .map(|(a, b)| (vec![Piece { formula: a, anchors: a1.clone() }], vec![Piece { formula: b, anchors: a2.clone() }]))
                .collect()
        };
        let mut total = ClTerm::zero(&carrier);
        for (extra1, extra2) in splits {
            let mut pieces1 = on1.clone();
            pieces1.extend(extra1);
            let mut pieces2 = on2.clone();
            pieces2.extend(extra2);
            let t1 = self.with_graph(&p1, &pieces1, &ys1, &g1)?;
            let t2 = self.with_graph(&p2, &pieces2, &ys2, &g2)?;
            if !t1.is_zero() && !t2.is_zero() {
                total = total.add(match (real1, real2) {
                    (true, true) => ClTerm::Arith(ArithOp::Mul, Box::new(t1), Box::new(t2)),
                    (true, false) => ClTerm::Scale(Box::new(t2), Box::new(t1)),
                    (false, true) => ClTerm::Scale(Box::new(t1), Box::new(t2)),
                    (false, false) => unreachable!("a product has at least one factor"),
                });
                // The product also counts tuples whose parts are close; those realise a
                // pattern with extra cross edges.
                let mut joint = pieces1;
                joint.extend(pieces2);
                for h in g.cross_extensions(&left) {
                    total = total.sub(self.with_graph(p, &joint, ys, &h)?);
                }
            }
        }
        Ok(total)
    }

    /// Exclusive r-local decomposition of `ψ(ȳ1 ȳ2)` valid whenever the two parts are
    /// more than `2r+1` apart; pairs with an unsatisfiable side are dropped.
    fn split(&self, psi: &Formula, ys1: &[Var], ys2: &[Var]) -> Result<Vec<(Formula, Formula)>> {
        let d = fv_decompose(psi, ys1, ys2, self.caps)?.into_exclusive(self.caps)?;
        let mut out = Vec::new();
        for (a, b) in d.pairs {
            if matches!(a, Formula::Bool(false)) || matches!(b, Formula::Bool(false)) {
                continue;
            }
            out.push((localize(&a, self.radius, ys1)?, localize(&b, self.radius, ys2)?));
        }
        Ok(out)
    }
}

/// Value of a product of constants.
fn constant_product(p: &WProduct) -> Result<CarrierValue> {
    let mut acc: Option<CarrierValue> = None;
    for f in &p.factors {
        let Factor::Const(c) = f else {
            return Err(Error::NotInFragment("weight factor without variables".into()));
        };
        acc = Some(match acc {
            None => c.clone(),
            Some(a) => crate::algebra::combine(&a, c, ArithOp::Mul)?,
        });
    }
    acc.ok_or_else(|| Error::TypeError("empty W-product".into()))
}

/// The variables `ȳ = (free(u), vars(p))` of an aggregation term `u = Σ p.ψ`.
fn aggregation_vars(p: &WProduct, psi: &Formula) -> Vec<Var> {
    let bound = p.vars();
    let mut ys: Vec<Var> = psi.free_vars().into_iter().filter(|v| !bound.contains(v)).collect();
    ys.extend(bound);
    ys
}

/// Rewrites an aggregation term `u = Σ p.ψ(ȳ)` with `ψ` an r-local `FOW1` formula into an
/// equivalent cl-term of radius `≤ r` and width `≤ |ȳ|`.
///
/// `u` is split over all graphs `G` on `ȳ` (ordered by edge bitmask); disconnected
/// patterns are reduced by splitting off the component of the first vertex, decomposing
/// `ψ` across the cut, and subtracting the patterns with extra cross edges.
pub fn clterms_from_aggregation(u: &Term, r: usize, caps: &Caps) -> Result<ClTerm> {
    let Term::Agg(p, psi) = u else {
        return Err(Error::NotInFragment(format!("{u} is not an aggregation term")));
    };
    if fragment(psi) > Fragment::FOW1 {
        return Err(Error::NotInFragment(format!("aggregation body {psi} is not in FOW1")));
    }
    let ys = aggregation_vars(p, psi);
    if ys.is_empty() {
        // A constant product over a sentence body without variables.
        return match **psi {
            Formula::Bool(false) => Ok(ClTerm::zero(&p.carrier)),
            Formula::Bool(true) => constant_product(p).map(ClTerm::Const),
            _ => Err(Error::NotInFragment(format!("aggregation {u} ranges over no variables"))),
        };
    }
    if ys.len() > caps.max_width {
        return Err(Error::BlowupExceeded { what: "aggregation width".into(), needed: ys.len(), cap: caps.max_width });
    }
    if caps.validate {
        crate::gen::spot_check_local(psi, r, &ys, 0)?;
    }
    let mut b = ClBuilder { caps, radius: r, basics: 0, memo: HashMap::new() };
    let mut total = ClTerm::zero(&p.carrier);
    let body = [Piece { formula: (**psi).clone(), anchors: ys.clone() }];
    for g in ComponentGraph::all(ys.len()) {
        total = total.add(b.with_graph(p, &body, &ys, &g)?);
    }
    Ok(total)
}

/// Replaces every occurrence of the listed subformulas by the given truth values and
/// simplifies the Boolean structure.
pub fn substitute_sentences(f: &Formula, values: &[(Formula, bool)]) -> Formula {
    if let Some((_, b)) = values.iter().find(|(g, _)| g == f) {
        return Formula::Bool(*b);
    }
    match f {
        Formula::Not(g) => Formula::not(substitute_sentences(g, values)),
        Formula::And(gs) => Formula::and(gs.iter().map(|g| substitute_sentences(g, values)).collect()),
        Formula::Or(gs) => Formula::or(gs.iter().map(|g| substitute_sentences(g, values)).collect()),
        other => other.map_children(&mut |g| Ok(substitute_sentences(g, values))).expect("substitution is infallible"),
    }
}

/// For every `J ⊆ [s]` (as a sorted index list, ordered by bitmask), a cl-term that agrees
/// with `u = Σ p.φ` on every structure satisfying `χ_J = ⋀_{j∈J} χ_j ∧ ⋀_{j∉J} ¬χ_j`,
/// where `φ` is a Boolean combination of the sentences `chis` and r-local `FOW1` formulas.
pub fn clterms_conditioned(u: &Term, chis: &[Formula], r: usize, caps: &Caps) -> Result<Vec<(Vec<usize>, ClTerm)>> {
    let Term::Agg(p, phi) = u else {
        return Err(Error::NotInFragment(format!("{u} is not an aggregation term")));
    };
    caps.check_pairs("sentence selectors", 1usize.checked_shl(chis.len() as u32).unwrap_or(usize::MAX))?;
    let mut out = Vec::new();
    for mask in 0..1usize << chis.len() {
        let values: Vec<(Formula, bool)> = chis.iter().enumerate().map(|(j, c)| (c.clone(), mask >> j & 1 == 1)).collect();
        let body = substitute_sentences(phi, &values);
        let term = Term::Agg(p.clone(), Box::new(body));
        let j: Vec<usize> = (0..chis.len()).filter(|j| mask >> j & 1 == 1).collect();
        let cl = match &term {
            Term::Agg(p, b) if matches!(**b, Formula::Bool(false)) => ClTerm::zero(&p.carrier),
            _ => clterms_from_aggregation(&term, r, caps)?,
        };
        out.push((j, cl));
    }
    Ok(out)
}
