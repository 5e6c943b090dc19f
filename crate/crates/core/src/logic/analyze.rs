//! Static analysis: free variables, quantifier rank, aggregation depth, fragment.

use super::{Expression, Formula, Term, Var};

/// Syntactic fragment, from most to least restrictive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Fragment {
    /// Plain first-order logic (equality, relation atoms, Boolean connectives, `∃`).
    FO,
    /// `WA¹` without aggregation terms.
    FOW1,
    /// Summation equations only over finite carriers; predicate applications with at most
    /// one free variable overall.
    WA1,
    /// Full logic.
    WA,
}

/// Result of [`analyze`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExprInfo {
    pub free_vars: Vec<Var>,
    pub quantifier_rank: usize,
    pub agg_depth: usize,
    pub fragment: Fragment,
}

#[derive(Default, Clone, Copy)]
struct Flags {
    non_fo: bool,
    agg: bool,
    infinite_sum: bool,
    wide_pred: bool,
}

impl Flags {
    fn join(self, o: Flags) -> Flags {
        Flags {
            non_fo: self.non_fo || o.non_fo,
            agg: self.agg || o.agg,
            infinite_sum: self.infinite_sum || o.infinite_sum,
            wide_pred: self.wide_pred || o.wide_pred,
        }
    }
}

/// Quantifier rank: maximal nesting of `∃` and summation equations.
pub fn quantifier_rank(f: &Formula) -> usize {
    match f {
        Formula::Not(g) => quantifier_rank(g),
        Formula::Or(gs) | Formula::And(gs) => gs.iter().map(quantifier_rank).max().unwrap_or(0),
        Formula::Exists(_, g) | Formula::SumEq(_, _, g) => 1 + quantifier_rank(g),
        Formula::Pred(_, ts) => ts.iter().map(term_qr).max().unwrap_or(0),
        _ => 0,
    }
}

fn term_qr(t: &Term) -> usize {
    match t {
        Term::Arith(_, l, r) | Term::Scale(l, r) => term_qr(l).max(term_qr(r)),
        Term::Agg(_, g) => quantifier_rank(g),
        _ => 0,
    }
}

/// Aggregation depth: nesting of aggregation terms.
pub fn agg_depth(f: &Formula) -> usize {
    match f {
        Formula::Not(g) | Formula::Exists(_, g) | Formula::SumEq(_, _, g) => agg_depth(g),
        Formula::Or(gs) | Formula::And(gs) => gs.iter().map(agg_depth).max().unwrap_or(0),
        Formula::Pred(_, ts) => ts.iter().map(term_agg_depth).max().unwrap_or(0),
        _ => 0,
    }
}

/// Aggregation depth of a term.
pub fn term_agg_depth(t: &Term) -> usize {
    match t {
        Term::Arith(_, l, r) | Term::Scale(l, r) => term_agg_depth(l).max(term_agg_depth(r)),
        Term::Agg(_, g) => agg_depth(g) + 1,
        _ => 0,
    }
}

fn flags(f: &Formula) -> Flags {
    match f {
        Formula::Bool(_) | Formula::Eq(..) | Formula::Rel(..) | Formula::Dist { .. } => Flags::default(),
        Formula::WeightEq(..) => Flags { non_fo: true, ..Flags::default() },
        Formula::Not(g) | Formula::Exists(_, g) => flags(g),
        Formula::Or(gs) | Formula::And(gs) => gs.iter().map(flags).fold(Flags::default(), Flags::join),
        Formula::SumEq(_, w, g) => {
            let own = Flags { non_fo: true, infinite_sum: !w.carrier.is_finite(), ..Flags::default() };
            own.join(flags(g))
        }
        Formula::Pred(_, ts) => {
            let mut free: Vec<Var> = Vec::new();
            for t in ts {
                for v in t.free_vars() {
                    if !free.contains(&v) {
                        free.push(v);
                    }
                }
            }
            let own = Flags { non_fo: true, wide_pred: free.len() > 1, ..Flags::default() };
            ts.iter().map(term_flags).fold(own, Flags::join)
        }
    }
}

fn term_flags(t: &Term) -> Flags {
    match t {
        Term::Const(_) | Term::Weight(_) => Flags::default(),
        Term::Arith(_, l, r) | Term::Scale(l, r) => term_flags(l).join(term_flags(r)),
        Term::Agg(_, g) => Flags { agg: true, ..flags(g) },
    }
}

fn classify(fl: Flags) -> Fragment {
    if !fl.non_fo && !fl.agg {
        Fragment::FO
    } else if fl.infinite_sum || fl.wide_pred {
        Fragment::WA
    } else if fl.agg {
        Fragment::WA1
    } else {
        Fragment::FOW1
    }
}

/// Fragment of a formula.
pub fn fragment(f: &Formula) -> Fragment {
    classify(flags(f))
}

/// Computes free variables, quantifier rank, aggregation depth and fragment.
///
/// A term is classified by the fragment of the predicate application it could appear in;
/// a bare term with aggregation is `WA1` at best.
pub fn analyze(e: &Expression) -> ExprInfo {
    match e {
        Expression::Formula(f) => ExprInfo {
            free_vars: f.free_vars(),
            quantifier_rank: quantifier_rank(f),
            agg_depth: agg_depth(f),
            fragment: fragment(f),
        },
        Expression::Term(t) => {
            let fl = Flags { non_fo: true, ..term_flags(t) };
            ExprInfo { free_vars: t.free_vars(), quantifier_rank: term_qr(t), agg_depth: term_agg_depth(t), fragment: classify(fl) }
        }
    }
}
