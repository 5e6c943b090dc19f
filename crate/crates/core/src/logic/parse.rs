//! Concrete prefix syntax: parser and canonical pretty-printer.
//!
//! ```text
//! formula := (true) | (false) | (= x y) | (rel R x…) | (weq c w x…)
//!          | (not φ) | (or φ…) | (and φ…) | (implies φ ψ) | (iff φ ψ)
//!          | (exists y φ) | (forall y φ) | (sumEq c w (y…) φ)
//!          | (pred P t…) | (cmp t t) | (t cmp t)           cmp ∈ {>=, >, <=, <, ==, !=}
//!          | (modexists i m y φ)                           ≡ (sumEq i:Z/m one<m> (y) φ)
//!          | (dist x y n scope…)   scope := (within n x…)
//! term    := c | (w x…) | (+ t t) | (- t t) | (* t t) | (scale t t)
//!          | (agg product φ) | (count (y…) φ)              ≡ (agg (* (one y)…) φ)
//! product := (* factor…) | factor        factor := c | (w x…)
//! c       := literal:carrier, e.g. 3:Z, -1/2:Q, 2:Z/5, [1,0]:Q^2
//! ```
//!
//! Weight symbols are resolved against a [`Signature`]; a list headed by a declared
//! (or built-in `one`/`one<m>`) weight name is a weight term.

use crate::algebra::{ArithOp, Carrier, CarrierValue};
use crate::error::{Error, Result};
use crate::structure::Signature;

use super::{pred, Expression, Factor, Formula, Scope, Term, WProduct, WeightApp};

#[derive(Clone, Debug, PartialEq)]
enum Sexp {
    Atom(String, usize),
    List(Vec<Sexp>, usize),
}

impl Sexp {
    fn pos(&self) -> usize {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }
}

fn syntax(pos: usize, msg: impl Into<String>) -> Error {
    Error::SyntaxError { pos, msg: msg.into() }
}

fn tokenize(text: &str) -> Result<Sexp> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    let mut stack: Vec<(Vec<Sexp>, usize)> = Vec::new();
    let mut result: Option<Sexp> = None;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == ';' {
            while i < chars.len() && chars[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        if result.is_some() {
            return Err(syntax(pos, "trailing input after expression"));
        }
        match c {
            '(' => {
                stack.push((Vec::new(), pos));
                i += 1;
            }
            ')' => {
                let (items, start) = stack.pop().ok_or_else(|| syntax(pos, "unbalanced `)`"))?;
                let node = Sexp::List(items, start);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(node),
                    None => result = Some(node),
                }
                i += 1;
            }
            _ => {
                let start = pos;
                let mut s = String::new();
                let mut depth = 0usize;
                while i < chars.len() {
                    let ch = chars[i].1;
                    if depth == 0 && (ch.is_whitespace() || ch == '(' || ch == ')' || ch == ';') {
                        break;
                    }
                    if ch == '[' {
                        depth += 1;
                    } else if ch == ']' {
                        depth = depth.saturating_sub(1);
                    }
                    if !ch.is_whitespace() {
                        s.push(ch);
                    }
                    i += 1;
                }
                let node = Sexp::Atom(s, start);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(node),
                    None => result = Some(node),
                }
            }
        }
    }
    if let Some((_, start)) = stack.pop() {
        return Err(syntax(start, "unclosed `(`"));
    }
    result.ok_or_else(|| syntax(0, "empty input"))
}

const KEYWORDS: &[&str] = &[
    "true", "false", "=", "rel", "weq", "not", "or", "and", "implies", "iff", "exists", "forall", "sumEq", "pred",
    "modexists", "dist", "within", "+", "-", "*", "scale", "agg", "count", ">=", ">", "<=", "<", "==", "!=",
];

fn comparison(op: &str) -> Option<&'static str> {
    Some(match op {
        ">=" => "ge",
        ">" => "gt",
        "<=" => "le",
        "<" => "lt",
        "==" => "eq",
        "!=" => "ne",
        _ => return None,
    })
}

struct Parser<'a> {
    sig: &'a Signature,
}

impl<'a> Parser<'a> {
    fn atom<'s>(&self, s: &'s Sexp, what: &str) -> Result<&'s str> {
        match s {
            Sexp::Atom(a, _) => Ok(a),
            Sexp::List(_, p) => Err(syntax(*p, format!("expected {what}"))),
        }
    }

    fn var(&self, s: &Sexp) -> Result<String> {
        let a = self.atom(s, "a variable")?;
        let ok = a.chars().next().map(|c| c.is_ascii_alphabetic() || c == '_').unwrap_or(false)
            && a.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'');
        if !ok || KEYWORDS.contains(&a) || a.contains(':') {
            return Err(syntax(s.pos(), format!("`{a}` is not a variable")));
        }
        Ok(a.to_string())
    }

    fn var_list(&self, s: &Sexp) -> Result<Vec<String>> {
        match s {
            Sexp::List(items, _) => items.iter().map(|v| self.var(v)).collect(),
            Sexp::Atom(..) => Ok(vec![self.var(s)?]),
        }
    }

    fn number(&self, s: &Sexp) -> Result<usize> {
        let a = self.atom(s, "a natural number")?;
        a.parse().map_err(|_| syntax(s.pos(), format!("`{a}` is not a natural number")))
    }

    fn constant(&self, s: &Sexp) -> Result<CarrierValue> {
        let a = self.atom(s, "a constant")?;
        let (lit, carrier) = a
            .rsplit_once(':')
            .ok_or_else(|| syntax(s.pos(), format!("constant `{a}` needs a carrier annotation like `3:Z`")))?;
        let carrier = Carrier::parse(carrier)?;
        carrier.parse_value(lit)
    }

    fn is_weight(&self, name: &str) -> bool {
        !KEYWORDS.contains(&name) && self.sig.weight(name).is_some()
    }

    fn weight_app(&self, items: &[Sexp]) -> Result<WeightApp> {
        let name = self.atom(&items[0], "a weight symbol")?;
        let sym = self.sig.weight(name).ok_or_else(|| Error::TypeError(format!("unknown weight `{name}`")))?;
        let vars: Vec<String> = items[1..].iter().map(|v| self.var(v)).collect::<Result<_>>()?;
        if vars.len() != sym.arity() {
            return Err(Error::TypeError(format!("weight `{name}` has arity {}, applied to {}", sym.arity(), vars.len())));
        }
        WeightApp::new(name, sym.carrier().clone(), vars)
    }

    fn formula(&self, s: &Sexp) -> Result<Formula> {
        let (items, pos) = match s {
            Sexp::List(items, pos) => (items, *pos),
            Sexp::Atom(a, p) => {
                return match a.as_str() {
                    "true" => Ok(Formula::top()),
                    "false" => Ok(Formula::bottom()),
                    _ => Err(syntax(*p, format!("expected a formula, found `{a}`"))),
                }
            }
        };
        if items.is_empty() {
            return Err(syntax(pos, "empty list"));
        }
        // Infix comparison `(t1 op t2)`.
        if items.len() == 3 {
            if let Sexp::Atom(op, _) = &items[1] {
                if let Some(p) = comparison(op) {
                    if !matches!(&items[0], Sexp::Atom(h, _) if KEYWORDS.contains(&h.as_str())) {
                        return pred(p, vec![self.term(&items[0])?, self.term(&items[2])?]);
                    }
                }
            }
        }
        let head = self.atom(&items[0], "an operator")?;
        let args = &items[1..];
        let arity = |n: usize| -> Result<()> {
            if args.len() != n {
                Err(syntax(pos, format!("`{head}` takes {n} arguments")))
            } else {
                Ok(())
            }
        };
        match head {
            "true" => {
                arity(0)?;
                Ok(Formula::top())
            }
            "false" => {
                arity(0)?;
                Ok(Formula::bottom())
            }
            "=" => {
                arity(2)?;
                Ok(Formula::Eq(self.var(&args[0])?, self.var(&args[1])?))
            }
            "rel" => {
                if args.is_empty() {
                    return Err(syntax(pos, "`rel` needs a relation symbol"));
                }
                let name = self.atom(&args[0], "a relation symbol")?;
                let vars: Vec<String> = args[1..].iter().map(|v| self.var(v)).collect::<Result<_>>()?;
                if let Some((_, ar)) = self.sig.relation(name) {
                    if ar != vars.len() {
                        return Err(Error::TypeError(format!("relation `{name}` has arity {ar}, applied to {}", vars.len())));
                    }
                }
                Ok(Formula::Rel(name.to_string(), vars))
            }
            "weq" => {
                if args.len() < 3 {
                    return Err(syntax(pos, "`weq` takes a constant, a weight symbol and variables"));
                }
                let c = self.constant(&args[0])?;
                let w = self.weight_app(&args[1..])?;
                if c.carrier() != w.carrier {
                    return Err(Error::TypeError(format!("constant of type {} compared with weight of type {}", c.carrier(), w.carrier)));
                }
                Ok(Formula::WeightEq(c, w))
            }
            "not" => {
                arity(1)?;
                Ok(Formula::Not(Box::new(self.formula(&args[0])?)))
            }
            "or" => Ok(Formula::Or(args.iter().map(|a| self.formula(a)).collect::<Result<_>>()?)),
            "and" => Ok(Formula::And(args.iter().map(|a| self.formula(a)).collect::<Result<_>>()?)),
            "implies" => {
                arity(2)?;
                Ok(Formula::Or(vec![Formula::Not(Box::new(self.formula(&args[0])?)), self.formula(&args[1])?]))
            }
            "iff" => {
                arity(2)?;
                let (a, b) = (self.formula(&args[0])?, self.formula(&args[1])?);
                Ok(Formula::And(vec![
                    Formula::Or(vec![Formula::Not(Box::new(a.clone())), b.clone()]),
                    Formula::Or(vec![Formula::Not(Box::new(b)), a]),
                ]))
            }
            "exists" | "forall" => {
                arity(2)?;
                let vars = self.var_list(&args[0])?;
                let mut body = self.formula(&args[1])?;
                for v in vars.iter().rev() {
                    body = if head == "exists" {
                        Formula::Exists(v.clone(), Box::new(body))
                    } else {
                        Formula::Not(Box::new(Formula::Exists(v.clone(), Box::new(Formula::Not(Box::new(body))))))
                    };
                }
                Ok(body)
            }
            "sumEq" => {
                arity(4)?;
                let c = self.constant(&args[0])?;
                let name = self.atom(&args[1], "a weight symbol")?;
                let vars = self.var_list(&args[2])?;
                let mut app_items = vec![args[1].clone()];
                app_items.extend(vars.iter().map(|v| Sexp::Atom(v.clone(), args[2].pos())));
                let w = self.weight_app(&app_items)?;
                let _ = name;
                let body = self.formula(&args[3])?;
                Formula::sum_eq(c, w, body).map_err(|e| Error::TypeError(e.to_string()))
            }
            "modexists" => {
                arity(4)?;
                let i = self.number(&args[0])?;
                let m = self.number(&args[1])?;
                if m < 2 {
                    return Err(Error::OutOfRange(format!("modulus {m} < 2")));
                }
                let y = self.var(&args[2])?;
                let body = self.formula(&args[3])?;
                let carrier = Carrier::ResidueGroup(m as u64);
                let w = WeightApp::new(&format!("one{m}"), carrier, vec![y])?;
                Formula::sum_eq(CarrierValue::residue(&(i as i64).into(), m as u64), w, body)
            }
            "pred" => {
                if args.is_empty() {
                    return Err(syntax(pos, "`pred` needs a predicate name"));
                }
                let name = self.atom(&args[0], "a predicate name")?;
                let terms: Vec<Term> = args[1..].iter().map(|t| self.term(t)).collect::<Result<_>>()?;
                pred(name, terms)
            }
            "dist" => {
                if args.len() < 3 {
                    return Err(syntax(pos, "`dist` takes two variables and a bound"));
                }
                let a = self.var(&args[0])?;
                let b = self.var(&args[1])?;
                let bound = self.number(&args[2])?;
                let mut scopes = Vec::new();
                for sc in &args[3..] {
                    match sc {
                        Sexp::List(parts, p) if !parts.is_empty() && matches!(&parts[0], Sexp::Atom(w, _) if w == "within") => {
                            if parts.len() < 2 {
                                return Err(syntax(*p, "`within` takes a radius"));
                            }
                            let radius = self.number(&parts[1])?;
                            let anchors = parts[2..].iter().map(|v| self.var(v)).collect::<Result<_>>()?;
                            scopes.push(Scope { anchors, radius });
                        }
                        other => return Err(syntax(other.pos(), "expected `(within r x…)`")),
                    }
                }
                Ok(Formula::Dist { a, b, bound, scopes })
            }
            _ => {
                if let Some(p) = comparison(head) {
                    arity(2)?;
                    return pred(p, vec![self.term(&args[0])?, self.term(&args[1])?]);
                }
                if self.sig.relation(head).is_some() {
                    return Err(syntax(pos, format!("write relation atoms as `(rel {head} …)`")));
                }
                Err(syntax(pos, format!("unknown formula operator `{head}`")))
            }
        }
    }

    fn factor(&self, s: &Sexp) -> Result<Factor> {
        match s {
            Sexp::Atom(..) => Ok(Factor::Const(self.constant(s)?)),
            Sexp::List(items, p) => {
                if items.is_empty() || !matches!(&items[0], Sexp::Atom(h, _) if self.is_weight(h)) {
                    return Err(syntax(*p, "a product factor is a constant or a weight application"));
                }
                Ok(Factor::Weight(self.weight_app(items)?))
            }
        }
    }

    fn product(&self, s: &Sexp) -> Result<WProduct> {
        let factors: Vec<Factor> = match s {
            Sexp::List(items, _) if matches!(items.first(), Some(Sexp::Atom(h, _)) if h == "*") => {
                items[1..].iter().map(|f| self.factor(f)).collect::<Result<_>>()?
            }
            other => vec![self.factor(other)?],
        };
        let carrier = match &factors[0] {
            Factor::Const(c) => c.carrier(),
            Factor::Weight(w) => w.carrier.clone(),
        };
        WProduct::new(carrier, factors)
    }

    fn term(&self, s: &Sexp) -> Result<Term> {
        let (items, pos) = match s {
            Sexp::Atom(..) => return Ok(Term::Const(self.constant(s)?)),
            Sexp::List(items, pos) => (items, *pos),
        };
        if items.is_empty() {
            return Err(syntax(pos, "empty list"));
        }
        let head = self.atom(&items[0], "an operator")?;
        let args = &items[1..];
        match head {
            "+" | "-" | "*" => {
                if args.len() != 2 {
                    return Err(syntax(pos, format!("`{head}` takes 2 arguments")));
                }
                let op = match head {
                    "+" => ArithOp::Add,
                    "-" => ArithOp::Sub,
                    _ => ArithOp::Mul,
                };
                Term::arith(op, self.term(&args[0])?, self.term(&args[1])?).map_err(|e| Error::TypeError(e.to_string()))
            }
            "scale" => {
                if args.len() != 2 {
                    return Err(syntax(pos, "`scale` takes 2 arguments"));
                }
                Term::scale(self.term(&args[0])?, self.term(&args[1])?)
            }
            "agg" => {
                if args.len() != 2 {
                    return Err(syntax(pos, "`agg` takes a product and a formula"));
                }
                let p = self.product(&args[0])?;
                Ok(Term::Agg(p, Box::new(self.formula(&args[1])?)))
            }
            "count" => {
                if args.len() != 2 {
                    return Err(syntax(pos, "`count` takes a variable list and a formula"));
                }
                let vars = self.var_list(&args[0])?;
                let set: std::collections::BTreeSet<&String> = vars.iter().collect();
                if vars.is_empty() || set.len() != vars.len() {
                    return Err(Error::DistinctnessError(format!("count over ({})", vars.join(" "))));
                }
                Ok(Term::Agg(WProduct::counting(&vars), Box::new(self.formula(&args[1])?)))
            }
            _ if self.is_weight(head) => Ok(Term::Weight(self.weight_app(items)?)),
            _ => Err(syntax(pos, format!("unknown term operator `{head}`"))),
        }
    }

    fn expression(&self, s: &Sexp) -> Result<Expression> {
        let is_term = match s {
            Sexp::Atom(a, _) => a.contains(':'),
            Sexp::List(items, _) => match items.first() {
                Some(Sexp::Atom(h, _)) => {
                    matches!(h.as_str(), "+" | "-" | "*" | "scale" | "agg" | "count")
                        || (self.is_weight(h) && !(items.len() == 3 && matches!(&items[1], Sexp::Atom(op, _) if comparison(op).is_some())))
                }
                _ => false,
            },
        };
        if is_term {
            Ok(Expression::Term(self.term(s)?))
        } else {
            Ok(Expression::Formula(self.formula(s)?))
        }
    }
}

/// Parses a formula or a term.
pub fn parse_expression(text: &str, sig: &Signature) -> Result<Expression> {
    Parser { sig }.expression(&tokenize(text)?)
}

/// Parses a formula.
pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula> {
    Parser { sig }.formula(&tokenize(text)?)
}

/// Parses a term.
pub fn parse_term(text: &str, sig: &Signature) -> Result<Term> {
    Parser { sig }.term(&tokenize(text)?)
}

fn print_app(w: &WeightApp) -> String {
    format!("({} {})", w.name, w.vars.join(" "))
}

/// Canonical rendering of a formula.
pub fn print_formula(f: &Formula) -> String {
    let mut s = String::new();
    write_formula(f, &mut s);
    s
}

/// Canonical rendering of a term.
pub fn print_term(t: &Term) -> String {
    let mut s = String::new();
    write_term(t, &mut s);
    s
}

fn write_formula(f: &Formula, out: &mut String) {
    match f {
        Formula::Bool(true) => out.push_str("(true)"),
        Formula::Bool(false) => out.push_str("(false)"),
        Formula::Eq(a, b) => out.push_str(&format!("(= {a} {b})")),
        Formula::Rel(r, vs) => {
            out.push_str("(rel ");
            out.push_str(r);
            for v in vs {
                out.push(' ');
                out.push_str(v);
            }
            out.push(')');
        }
        Formula::WeightEq(c, w) => out.push_str(&format!("(weq {} {} {})", c.to_annotated(), w.name, w.vars.join(" "))),
        Formula::Not(g) => {
            out.push_str("(not ");
            write_formula(g, out);
            out.push(')');
        }
        Formula::Or(gs) | Formula::And(gs) => {
            out.push_str(if matches!(f, Formula::Or(_)) { "(or" } else { "(and" });
            for g in gs {
                out.push(' ');
                write_formula(g, out);
            }
            out.push(')');
        }
        Formula::Exists(y, g) => {
            out.push_str(&format!("(exists {y} "));
            write_formula(g, out);
            out.push(')');
        }
        Formula::SumEq(c, w, g) => {
            out.push_str(&format!("(sumEq {} {} ({}) ", c.to_annotated(), w.name, w.vars.join(" ")));
            write_formula(g, out);
            out.push(')');
        }
        Formula::Pred(p, ts) => {
            out.push_str("(pred ");
            out.push_str(&p.name);
            for t in ts {
                out.push(' ');
                write_term(t, out);
            }
            out.push(')');
        }
        Formula::Dist { a, b, bound, scopes } => {
            out.push_str(&format!("(dist {a} {b} {bound}"));
            for s in scopes {
                out.push_str(&format!(" (within {}", s.radius));
                for v in &s.anchors {
                    out.push(' ');
                    out.push_str(v);
                }
                out.push(')');
            }
            out.push(')');
        }
    }
}

fn write_term(t: &Term, out: &mut String) {
    match t {
        Term::Const(c) => out.push_str(&c.to_annotated()),
        Term::Weight(w) => out.push_str(&print_app(w)),
        Term::Arith(op, l, r) => {
            out.push_str(&format!("({} ", op.symbol()));
            write_term(l, out);
            out.push(' ');
            write_term(r, out);
            out.push(')');
        }
        Term::Scale(l, r) => {
            out.push_str("(scale ");
            write_term(l, out);
            out.push(' ');
            write_term(r, out);
            out.push(')');
        }
        Term::Agg(p, g) => {
            out.push_str("(agg (*");
            for f in &p.factors {
                out.push(' ');
                match f {
                    Factor::Const(c) => out.push_str(&c.to_annotated()),
                    Factor::Weight(w) => out.push_str(&print_app(w)),
                }
            }
            out.push_str(") ");
            write_formula(g, out);
            out.push(')');
        }
    }
}
