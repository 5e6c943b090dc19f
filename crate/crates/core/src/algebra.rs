//! Exact carriers (rings and abelian groups) and the built-in predicate library.
//!
//! Four carrier kinds are shipped: the integer ring `Z`, the rational field `Q`,
//! the residue groups `Z/m` and the rational vector groups `Q^k`. All arithmetic
//! is exact; values are always kept in canonical form so that structural
//! equality coincides with equality in the carrier.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A ring or abelian group from the shipped collection.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Carrier {
    /// The ring of integers `Z`.
    IntegerRing,
    /// The field of rationals `Q`.
    RationalField,
    /// The cyclic group `Z/m` with `m >= 2`.
    ResidueGroup(u64),
    /// The group `Q^k` of rational vectors with `k >= 1` components.
    RationalVectorGroup(usize),
}

impl Carrier {
    /// `true` for carriers on which multiplication and `1` are defined.
    pub fn is_ring(&self) -> bool {
        matches!(self, Carrier::IntegerRing | Carrier::RationalField)
    }

    /// `true` for carriers with finitely many elements.
    pub fn is_finite(&self) -> bool {
        matches!(self, Carrier::ResidueGroup(_))
    }

    /// `true` for carriers with a total order usable by comparison predicates.
    pub fn is_ordered(&self) -> bool {
        self.is_ring()
    }

    /// The additive identity `0_S`.
    pub fn zero(&self) -> CarrierValue {
        match self {
            Carrier::IntegerRing => CarrierValue::Int(BigInt::zero()),
            Carrier::RationalField => CarrierValue::Rat(BigRational::zero()),
            Carrier::ResidueGroup(m) => CarrierValue::Residue { modulus: *m, value: 0 },
            Carrier::RationalVectorGroup(k) => CarrierValue::Vector(vec![BigRational::zero(); *k]),
        }
    }

    /// The multiplicative identity `1_S`, if the carrier is a ring.
    pub fn one(&self) -> Option<CarrierValue> {
        match self {
            Carrier::IntegerRing => Some(CarrierValue::Int(BigInt::one())),
            Carrier::RationalField => Some(CarrierValue::Rat(BigRational::one())),
            _ => None,
        }
    }

    /// All elements of a finite carrier in ascending order; `None` for infinite carriers.
    pub fn elements(&self) -> Option<Vec<CarrierValue>> {
        match self {
            Carrier::ResidueGroup(m) => {
                Some((0..*m).map(|value| CarrierValue::Residue { modulus: *m, value }).collect())
            }
            _ => None,
        }
    }

    /// Parses a carrier literal: `Z`, `Q`, `Z/5`, `Q^3`.
    pub fn parse(text: &str) -> Result<Carrier> {
        let t = text.trim();
        let bad = || Error::TypeError(format!("unknown carrier `{t}`"));
        match t {
            "Z" => Ok(Carrier::IntegerRing),
            "Q" => Ok(Carrier::RationalField),
            _ => {
                if let Some(m) = t.strip_prefix("Z/") {
                    let m: u64 = m.trim().parse().map_err(|_| bad())?;
                    if m < 2 {
                        return Err(Error::OutOfRange(format!("residue modulus {m} < 2")));
                    }
                    Ok(Carrier::ResidueGroup(m))
                } else if let Some(k) = t.strip_prefix("Q^") {
                    let k: usize = k.trim().parse().map_err(|_| bad())?;
                    if k == 0 {
                        return Err(Error::OutOfRange("vector dimension 0".into()));
                    }
                    Ok(Carrier::RationalVectorGroup(k))
                } else {
                    Err(bad())
                }
            }
        }
    }

    /// Parses a value literal of this carrier.
    ///
    /// Accepted forms: `7`, `-3/4`, `(1/2, 0, -1)` (also with brackets), `3 mod 5`.
    pub fn parse_value(&self, text: &str) -> Result<CarrierValue> {
        let t = text.trim();
        let bad = || Error::TypeError(format!("`{t}` is not a literal of carrier {self}"));
        match self {
            Carrier::IntegerRing => t.parse::<BigInt>().map(CarrierValue::Int).map_err(|_| bad()),
            Carrier::RationalField => parse_rational(t).map(CarrierValue::Rat).ok_or_else(bad),
            Carrier::ResidueGroup(m) => {
                let (num, modulus) = match t.split_once("mod") {
                    Some((a, b)) => (a.trim(), Some(b.trim().parse::<u64>().map_err(|_| bad())?)),
                    None => (t, None),
                };
                if let Some(mm) = modulus {
                    if mm != *m {
                        return Err(Error::CarrierMismatch(format!("literal `{t}` is not in {self}")));
                    }
                }
                let v: BigInt = num.parse().map_err(|_| bad())?;
                Ok(CarrierValue::residue(&v, *m))
            }
            Carrier::RationalVectorGroup(k) => {
                let inner = t
                    .strip_prefix('(')
                    .and_then(|s| s.strip_suffix(')'))
                    .or_else(|| t.strip_prefix('[').and_then(|s| s.strip_suffix(']')))
                    .ok_or_else(bad)?;
                let comps: Option<Vec<BigRational>> = inner.split(',').map(|c| parse_rational(c.trim())).collect();
                let comps = comps.ok_or_else(bad)?;
                if comps.len() != *k {
                    return Err(Error::CarrierMismatch(format!("`{t}` has {} components, {self} needs {k}", comps.len())));
                }
                Ok(CarrierValue::Vector(comps))
            }
        }
    }
}

impl fmt::Display for Carrier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Carrier::IntegerRing => write!(f, "Z"),
            Carrier::RationalField => write!(f, "Q"),
            Carrier::ResidueGroup(m) => write!(f, "Z/{m}"),
            Carrier::RationalVectorGroup(k) => write!(f, "Q^{k}"),
        }
    }
}

fn parse_rational(t: &str) -> Option<BigRational> {
    match t.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(BigRational::new(n, d))
            }
        }
        None => t.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

fn fmt_rational(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// An element of one of the shipped carriers, always in canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CarrierValue {
    /// Element of `Z`.
    Int(BigInt),
    /// Element of `Q` (lowest terms, positive denominator).
    Rat(BigRational),
    /// Element of `Z/modulus`, with `value < modulus`.
    Residue { modulus: u64, value: u64 },
    /// Element of `Q^k` with `k` = length.
    Vector(Vec<BigRational>),
}

impl CarrierValue {
    /// The residue class of `v` modulo `m`.
    pub fn residue(v: &BigInt, m: u64) -> CarrierValue {
        let r = v.mod_floor(&BigInt::from(m));
        CarrierValue::Residue { modulus: m, value: r.to_u64().expect("residue fits") }
    }

    /// Integer literal in `Z`.
    pub fn int(v: i64) -> CarrierValue {
        CarrierValue::Int(BigInt::from(v))
    }

    /// Rational literal `n/d` in `Q`.
    pub fn rat(n: i64, d: i64) -> CarrierValue {
        CarrierValue::Rat(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    /// The carrier this value belongs to.
    pub fn carrier(&self) -> Carrier {
        match self {
            CarrierValue::Int(_) => Carrier::IntegerRing,
            CarrierValue::Rat(_) => Carrier::RationalField,
            CarrierValue::Residue { modulus, .. } => Carrier::ResidueGroup(*modulus),
            CarrierValue::Vector(v) => Carrier::RationalVectorGroup(v.len()),
        }
    }

    /// `true` iff the value is `0_S` of its carrier.
    pub fn is_zero(&self) -> bool {
        match self {
            CarrierValue::Int(v) => v.is_zero(),
            CarrierValue::Rat(v) => v.is_zero(),
            CarrierValue::Residue { value, .. } => *value == 0,
            CarrierValue::Vector(v) => v.iter().all(Zero::is_zero),
        }
    }

    /// Additive inverse.
    pub fn neg(&self) -> CarrierValue {
        match self {
            CarrierValue::Int(v) => CarrierValue::Int(-v),
            CarrierValue::Rat(v) => CarrierValue::Rat(-v),
            CarrierValue::Residue { modulus, value } => {
                CarrierValue::Residue { modulus: *modulus, value: (modulus - value) % modulus }
            }
            CarrierValue::Vector(v) => CarrierValue::Vector(v.iter().map(|c| -c).collect()),
        }
    }

    /// The `n`-fold sum of `self` (the canonical `Z`-module action; negative `n` negates).
    pub fn scale(&self, n: &BigInt) -> CarrierValue {
        match self {
            CarrierValue::Int(v) => CarrierValue::Int(v * n),
            CarrierValue::Rat(v) => CarrierValue::Rat(v * BigRational::from_integer(n.clone())),
            CarrierValue::Residue { modulus, value } => CarrierValue::residue(&(BigInt::from(*value) * n), *modulus),
            CarrierValue::Vector(v) => {
                let f = BigRational::from_integer(n.clone());
                CarrierValue::Vector(v.iter().map(|c| c * &f).collect())
            }
        }
    }

    /// Integer payload, if this is an element of `Z`.
    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            CarrierValue::Int(v) => Some(v),
            _ => None,
        }
    }

    /// Formula-syntax rendering: the value followed by `:carrier`, vectors in brackets.
    pub fn to_annotated(&self) -> String {
        let body = match self {
            CarrierValue::Vector(v) => format!("[{}]", v.iter().map(fmt_rational).collect::<Vec<_>>().join(",")),
            other => other.to_string(),
        };
        format!("{body}:{}", self.carrier())
    }

    fn cmp_ordered(&self, other: &CarrierValue) -> Result<Ordering> {
        match (self, other) {
            (CarrierValue::Int(a), CarrierValue::Int(b)) => Ok(a.cmp(b)),
            (CarrierValue::Rat(a), CarrierValue::Rat(b)) => Ok(a.cmp(b)),
            _ => Err(Error::CarrierMismatch(format!("cannot order {} against {}", self.carrier(), other.carrier()))),
        }
    }
}

impl fmt::Display for CarrierValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CarrierValue::Int(v) => write!(f, "{v}"),
            CarrierValue::Rat(v) => write!(f, "{}", fmt_rational(v)),
            CarrierValue::Residue { value, .. } => write!(f, "{value}"),
            CarrierValue::Vector(v) => {
                write!(f, "({})", v.iter().map(fmt_rational).collect::<Vec<_>>().join(", "))
            }
        }
    }
}

/// Binary term operation: `+`, `-` or `·`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl ArithOp {
    /// Concrete-syntax symbol.
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
        }
    }
}

/// Applies `op` to two values of the same carrier.
pub fn combine(a: &CarrierValue, b: &CarrierValue, op: ArithOp) -> Result<CarrierValue> {
    let mismatch = || Error::CarrierMismatch(format!("{} vs {}", a.carrier(), b.carrier()));
    if op == ArithOp::Mul && !a.carrier().is_ring() {
        if a.carrier() != b.carrier() {
            return Err(mismatch());
        }
        return Err(Error::MulOnGroup(a.carrier().to_string()));
    }
    Ok(match (a, b) {
        (CarrierValue::Int(x), CarrierValue::Int(y)) => CarrierValue::Int(match op {
            ArithOp::Add => x + y,
            ArithOp::Sub => x - y,
            ArithOp::Mul => x * y,
        }),
        (CarrierValue::Rat(x), CarrierValue::Rat(y)) => CarrierValue::Rat(match op {
            ArithOp::Add => x + y,
            ArithOp::Sub => x - y,
            ArithOp::Mul => x * y,
        }),
        (CarrierValue::Residue { modulus: m, value: x }, CarrierValue::Residue { modulus: n, value: y }) if m == n => {
            let value = match op {
                ArithOp::Add => ((*x as u128 + *y as u128) % *m as u128) as u64,
                _ => ((*x as u128 + (*m - *y) as u128) % *m as u128) as u64,
            };
            CarrierValue::Residue { modulus: *m, value }
        }
        (CarrierValue::Vector(x), CarrierValue::Vector(y)) if x.len() == y.len() => CarrierValue::Vector(
            x.iter()
                .zip(y)
                .map(|(p, q)| if op == ArithOp::Add { p + q } else { p - q })
                .collect(),
        ),
        _ => return Err(mismatch()),
    })
}

/// In-place addition used by aggregation loops; `acc` and `v` must share a carrier.
pub fn add_assign(acc: &mut CarrierValue, v: &CarrierValue) -> Result<()> {
    match (acc, v) {
        (CarrierValue::Int(x), CarrierValue::Int(y)) => *x += y,
        (CarrierValue::Rat(x), CarrierValue::Rat(y)) => *x += y,
        (CarrierValue::Vector(x), CarrierValue::Vector(y)) if x.len() == y.len() => {
            for (p, q) in x.iter_mut().zip(y) {
                *p += q;
            }
        }
        (acc, v) => *acc = combine(acc, v, ArithOp::Add)?,
    }
    Ok(())
}

/// The `⊕_S`-sum of a finite multiset; the empty multiset sums to `0_S`.
pub fn aggregate<'a, I>(values: I, carrier: &Carrier) -> Result<CarrierValue>
where
    I: IntoIterator<Item = &'a CarrierValue>,
{
    let mut acc = carrier.zero();
    for v in values {
        if &v.carrier() != carrier {
            return Err(Error::CarrierMismatch(format!("{} in aggregate over {carrier}", v.carrier())));
        }
        add_assign(&mut acc, v)?;
    }
    Ok(acc)
}

/// Version tag of the built-in predicate library, written into structure headers.
pub const PREDICATE_LIBRARY_VERSION: &str = "v1";

/// The semantics of a built-in predicate.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PredKind {
    /// Equality of two values of the same carrier.
    Eq,
    /// Disequality.
    Ne,
    /// `>=` on an ordered carrier.
    Ge,
    /// `>` on an ordered carrier.
    Gt,
    /// `<=` on an ordered carrier.
    Le,
    /// `<` on an ordered carrier.
    Lt,
    /// The unary predicate `n >= 1` on `Z`.
    AtLeastOne,
    /// `(u, v, q)` on `Q^k × Q^k × Q`: `q >= 0` and `|u - v|^2 <= q^2`.
    Ed,
    /// `(v, l, w)` on `Q^k × Z × Q^k`: `l > 0` and `|v - w/l|^2 < delta^2`.
    DistLt(BigRational),
}

/// A predicate instance: a name, a carrier type per argument, and its semantics.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredicateDef {
    pub name: String,
    pub kind: PredKind,
    pub types: Vec<Carrier>,
}

impl PredicateDef {
    /// Number of arguments.
    pub fn arity(&self) -> usize {
        self.types.len()
    }

    /// Resolves a library predicate by name against the carriers of its arguments.
    ///
    /// Library names: `eq`, `ne`, `ge`, `gt`, `le`, `lt` (binary, same carrier; order
    /// predicates need `Z` or `Q`), `atleast1` (on `Z`), `ed` (`Q^k × Q^k × Q`) and
    /// `distlt[δ]` (`Q^k × Z × Q^k`, with rational parameter `δ`).
    pub fn resolve(name: &str, args: &[Carrier]) -> Result<PredicateDef> {
        let ty_err = |why: &str| Error::TypeError(format!("predicate {name}: {why}"));
        let arity = |n: usize| -> Result<()> {
            if args.len() != n {
                Err(Error::ArityMismatch(format!("predicate {name} takes {n} arguments, got {}", args.len())))
            } else {
                Ok(())
            }
        };
        let kind = match name {
            "eq" | "ne" | "ge" | "gt" | "le" | "lt" => {
                arity(2)?;
                if args[0] != args[1] {
                    return Err(ty_err("arguments must share a carrier"));
                }
                let kind = match name {
                    "eq" => PredKind::Eq,
                    "ne" => PredKind::Ne,
                    "ge" => PredKind::Ge,
                    "gt" => PredKind::Gt,
                    "le" => PredKind::Le,
                    _ => PredKind::Lt,
                };
                if !matches!(kind, PredKind::Eq | PredKind::Ne) && !args[0].is_ordered() {
                    return Err(ty_err("carrier is not ordered"));
                }
                kind
            }
            "atleast1" => {
                arity(1)?;
                if args[0] != Carrier::IntegerRing {
                    return Err(ty_err("argument must be of type Z"));
                }
                PredKind::AtLeastOne
            }
            "ed" => {
                arity(3)?;
                match (&args[0], &args[1], &args[2]) {
                    (Carrier::RationalVectorGroup(a), Carrier::RationalVectorGroup(b), Carrier::RationalField) if a == b => {}
                    _ => return Err(ty_err("type must be Q^k × Q^k × Q")),
                }
                PredKind::Ed
            }
            _ => {
                let delta = name
                    .strip_prefix("distlt[")
                    .and_then(|s| s.strip_suffix(']'))
                    .ok_or_else(|| Error::TypeError(format!("unknown predicate `{name}`")))?;
                let delta = parse_rational(delta).ok_or_else(|| ty_err("bad parameter"))?;
                arity(3)?;
                match (&args[0], &args[1], &args[2]) {
                    (Carrier::RationalVectorGroup(a), Carrier::IntegerRing, Carrier::RationalVectorGroup(b)) if a == b => {}
                    _ => return Err(ty_err("type must be Q^k × Z × Q^k")),
                }
                PredKind::DistLt(delta)
            }
        };
        Ok(PredicateDef { name: name.to_string(), kind, types: args.to_vec() })
    }

    /// The predicate `atleast1` on `Z`.
    pub fn at_least_one() -> PredicateDef {
        PredicateDef { name: "atleast1".into(), kind: PredKind::AtLeastOne, types: vec![Carrier::IntegerRing] }
    }
}

fn squared_norm(v: &[BigRational]) -> BigRational {
    v.iter().fold(BigRational::zero(), |acc, c| acc + c * c)
}

/// Decides `(args) ∈ ⟦p⟧`.
pub fn eval_predicate(p: &PredicateDef, args: &[CarrierValue]) -> Result<bool> {
    if args.len() != p.arity() {
        return Err(Error::ArityMismatch(format!("predicate {} takes {} arguments, got {}", p.name, p.arity(), args.len())));
    }
    for (a, t) in args.iter().zip(&p.types) {
        if &a.carrier() != t {
            return Err(Error::CarrierMismatch(format!("predicate {} expects {t}, got {}", p.name, a.carrier())));
        }
    }
    Ok(match &p.kind {
        PredKind::Eq => args[0] == args[1],
        PredKind::Ne => args[0] != args[1],
        PredKind::Ge => args[0].cmp_ordered(&args[1])? != Ordering::Less,
        PredKind::Gt => args[0].cmp_ordered(&args[1])? == Ordering::Greater,
        PredKind::Le => args[0].cmp_ordered(&args[1])? != Ordering::Greater,
        PredKind::Lt => args[0].cmp_ordered(&args[1])? == Ordering::Less,
        PredKind::AtLeastOne => args[0].as_int().map(|v| v >= &BigInt::one()).unwrap_or(false),
        PredKind::Ed => match (&args[0], &args[1], &args[2]) {
            (CarrierValue::Vector(u), CarrierValue::Vector(v), CarrierValue::Rat(q)) => {
                let diff: Vec<BigRational> = u.iter().zip(v).map(|(a, b)| a - b).collect();
                !q.is_negative() && squared_norm(&diff) <= q * q
            }
            _ => unreachable!("types checked above"),
        },
        PredKind::DistLt(delta) => match (&args[0], &args[1], &args[2]) {
            (CarrierValue::Vector(v), CarrierValue::Int(l), CarrierValue::Vector(w)) => {
                if !l.is_positive() {
                    false
                } else {
                    let l = BigRational::from_integer(l.clone());
                    let diff: Vec<BigRational> = v.iter().zip(w).map(|(a, b)| a - b / &l).collect();
                    squared_norm(&diff) < delta * delta
                }
            }
            _ => unreachable!("types checked above"),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> CarrierValue {
        CarrierValue::rat(n, d)
    }

    #[test]
    fn rational_addition_is_exact() {
        assert_eq!(combine(&q(2, 3), &q(1, 6), ArithOp::Add).unwrap(), q(5, 6));
    }

    #[test]
    fn residue_addition_wraps() {
        let z5 = Carrier::ResidueGroup(5);
        let a = z5.parse_value("3").unwrap();
        let b = z5.parse_value("4 mod 5").unwrap();
        assert_eq!(combine(&a, &b, ArithOp::Add).unwrap(), CarrierValue::Residue { modulus: 5, value: 2 });
        assert_eq!(combine(&a, &b, ArithOp::Sub).unwrap(), CarrierValue::Residue { modulus: 5, value: 4 });
    }

    #[test]
    fn mul_on_group_is_rejected() {
        let v = Carrier::RationalVectorGroup(2).parse_value("(1, 2)").unwrap();
        assert!(matches!(combine(&v, &v, ArithOp::Mul), Err(Error::MulOnGroup(_))));
        assert!(matches!(combine(&q(1, 2), &CarrierValue::int(1), ArithOp::Add), Err(Error::CarrierMismatch(_))));
    }

    #[test]
    fn aggregate_conventions() {
        assert_eq!(aggregate(&[], &Carrier::IntegerRing).unwrap(), CarrierValue::int(0));
        let q2 = Carrier::RationalVectorGroup(2);
        let vals = [q2.parse_value("(1,2)").unwrap(), q2.parse_value("(3,4)").unwrap()];
        assert_eq!(aggregate(&vals, &q2).unwrap(), q2.parse_value("(4,6)").unwrap());
        let one = CarrierValue::Residue { modulus: 2, value: 1 };
        let five = vec![one.clone(); 5];
        assert_eq!(aggregate(&five, &Carrier::ResidueGroup(2)).unwrap(), one);
    }

    #[test]
    fn predicate_examples() {
        let ge = PredicateDef::resolve("ge", &[Carrier::RationalField, Carrier::RationalField]).unwrap();
        assert!(eval_predicate(&ge, &[q(3, 2), q(1, 1)]).unwrap());
        assert!(!eval_predicate(&PredicateDef::at_least_one(), &[CarrierValue::int(0)]).unwrap());
        let q2 = Carrier::RationalVectorGroup(2);
        let ed = PredicateDef::resolve("ed", &[q2.clone(), q2.clone(), Carrier::RationalField]).unwrap();
        let u = q2.parse_value("(1/2, -3)").unwrap();
        assert!(eval_predicate(&ed, &[u.clone(), u.clone(), q(1, 1)]).unwrap());
        let dl = PredicateDef::resolve("distlt[1/2]", &[q2.clone(), Carrier::IntegerRing, q2.clone()]).unwrap();
        let w = q2.parse_value("(1, -6)").unwrap();
        assert!(eval_predicate(&dl, &[u.clone(), CarrierValue::int(2), w.clone()]).unwrap());
        assert!(!eval_predicate(&dl, &[u, CarrierValue::int(0), w]).unwrap());
        assert!(matches!(eval_predicate(&ge, &[q(1, 1)]), Err(Error::ArityMismatch(_))));
        assert!(PredicateDef::resolve("ge", &[Carrier::ResidueGroup(3), Carrier::ResidueGroup(3)]).is_err());
    }

    #[test]
    fn literals_round_trip() {
        for (c, lit) in [("Z", "-7"), ("Q", "-3/4"), ("Z/5", "3"), ("Q^3", "(1/2, 0, -1)")] {
            let c = Carrier::parse(c).unwrap();
            assert_eq!(c.parse_value(lit).unwrap().to_string(), lit);
        }
        assert_eq!(Carrier::parse("Z/5").unwrap().parse_value("-1").unwrap().to_string(), "4");
        assert!(Carrier::parse("Z/1").is_err());
        assert!(Carrier::parse("Q^2").unwrap().parse_value("(1,2,3)").is_err());
    }

    #[test]
    fn scaling_matches_repeated_addition() {
        let v = CarrierValue::Residue { modulus: 7, value: 3 };
        let mut acc = Carrier::ResidueGroup(7).zero();
        for _ in 0..5 {
            acc = combine(&acc, &v, ArithOp::Add).unwrap();
        }
        assert_eq!(v.scale(&BigInt::from(5)), acc);
        assert_eq!(v.scale(&BigInt::from(-1)), v.neg());
    }
}
