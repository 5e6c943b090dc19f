//! Weighted structures: storage, Gaifman geometry, neighbourhoods, disjoint sums,
//! the instrumented local-access oracle, a seeded generator and the text format.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Carrier, CarrierValue, PREDICATE_LIBRARY_VERSION};
use crate::error::{Error, Result};

/// Name of the unary relation marking the left part of a disjoint sum.
pub const LEFT_PART: &str = "X";
/// Name of the unary relation marking the right part of a disjoint sum.
pub const RIGHT_PART: &str = "Y";

/// Relation and weight symbols with arities (and carriers for weights).
///
/// Besides the declared weights, every signature implicitly provides the unary
/// built-in weights `one` (type `Z`) and `one<m>` (type `Z/m`, e.g. `one2`), which
/// every structure interprets as the constant `1`. A declaration with the same
/// name overrides the built-in.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Signature {
    relations: Vec<(String, usize)>,
    weights: Vec<(String, usize, Carrier)>,
}

/// Resolved weight symbol: position in the signature or a built-in constant-one weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WeightSymbol {
    Declared { index: usize, arity: usize, carrier: Carrier },
    BuiltinOne { carrier: Carrier },
}

impl WeightSymbol {
    pub fn arity(&self) -> usize {
        match self {
            WeightSymbol::Declared { arity, .. } => *arity,
            WeightSymbol::BuiltinOne { .. } => 1,
        }
    }
    pub fn carrier(&self) -> &Carrier {
        match self {
            WeightSymbol::Declared { carrier, .. } | WeightSymbol::BuiltinOne { carrier } => carrier,
        }
    }
}

fn valid_symbol(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Signature {
    /// Empty signature.
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a relation symbol.
    pub fn with_relation(mut self, name: &str, arity: usize) -> Result<Self> {
        self.add_relation(name, arity)?;
        Ok(self)
    }

    /// Adds a weight symbol.
    pub fn with_weight(mut self, name: &str, arity: usize, carrier: Carrier) -> Result<Self> {
        self.add_weight(name, arity, carrier)?;
        Ok(self)
    }

    fn check_fresh(&self, name: &str) -> Result<()> {
        if !valid_symbol(name) {
            return Err(Error::SignatureMismatch(format!("`{name}` is not a valid symbol name")));
        }
        if self.relation(name).is_some() || self.weights.iter().any(|w| w.0 == name) {
            return Err(Error::SignatureMismatch(format!("symbol `{name}` declared twice")));
        }
        Ok(())
    }

    /// Adds a relation symbol in place.
    pub fn add_relation(&mut self, name: &str, arity: usize) -> Result<usize> {
        self.check_fresh(name)?;
        self.relations.push((name.to_string(), arity));
        Ok(self.relations.len() - 1)
    }

    /// Adds a weight symbol in place; weight arity must be at least one.
    pub fn add_weight(&mut self, name: &str, arity: usize, carrier: Carrier) -> Result<usize> {
        self.check_fresh(name)?;
        if arity == 0 {
            return Err(Error::ArityError(format!("weight `{name}` must have arity >= 1")));
        }
        self.weights.push((name.to_string(), arity, carrier));
        Ok(self.weights.len() - 1)
    }

    /// Declared relations in order.
    pub fn relations(&self) -> &[(String, usize)] {
        &self.relations
    }

    /// Declared weights in order.
    pub fn weights(&self) -> &[(String, usize, Carrier)] {
        &self.weights
    }

    /// Index and arity of relation `name`.
    pub fn relation(&self, name: &str) -> Option<(usize, usize)> {
        self.relations.iter().position(|r| r.0 == name).map(|i| (i, self.relations[i].1))
    }

    /// Resolves a weight symbol, including the built-in `one`/`one<m>` weights.
    pub fn weight(&self, name: &str) -> Option<WeightSymbol> {
        if let Some(i) = self.weights.iter().position(|w| w.0 == name) {
            let (_, arity, carrier) = &self.weights[i];
            return Some(WeightSymbol::Declared { index: i, arity: *arity, carrier: carrier.clone() });
        }
        builtin_one(name).map(|carrier| WeightSymbol::BuiltinOne { carrier })
    }
}

/// Carrier of the built-in constant-one weight called `name`, if it is one.
pub fn builtin_one(name: &str) -> Option<Carrier> {
    if name == "one" {
        return Some(Carrier::IntegerRing);
    }
    let m: u64 = name.strip_prefix("one")?.parse().ok()?;
    (m >= 2 && !name[3..].starts_with('0')).then_some(Carrier::ResidueGroup(m))
}

/// One relation's interpretation: a sorted, duplicate-free list of tuples.
///
/// A 0-ary relation is either empty or `{()}`, i.e. a boolean; [`Relation::holds`]
/// reads it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    arity: usize,
    tuples: Vec<Vec<usize>>,
}

impl Relation {
    pub fn arity(&self) -> usize {
        self.arity
    }
    /// All tuples in ascending lexicographic order.
    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }
    /// Membership test.
    pub fn contains(&self, tuple: &[usize]) -> bool {
        self.tuples.binary_search_by(|t| t.as_slice().cmp(tuple)).is_ok()
    }
    /// Truth value of a 0-ary relation.
    pub fn holds(&self) -> bool {
        !self.tuples.is_empty()
    }
}

/// A finite `(σ, W)`-structure with universe `0..n`.
#[derive(Clone, Debug)]
pub struct WeightedStructure {
    signature: Signature,
    size: usize,
    relations: Vec<Relation>,
    weights: Vec<BTreeMap<Vec<usize>, CarrierValue>>,
    adjacency: Vec<Vec<usize>>,
    /// Per element, the `(relation, tuple index)` pairs of tuples containing it.
    incidence: Vec<Vec<(usize, usize)>>,
    /// Per element, the `(weight, key)` entries whose first component is that element.
    weight_starts: Vec<Vec<(usize, Vec<usize>)>>,
}

impl PartialEq for WeightedStructure {
    fn eq(&self, other: &Self) -> bool {
        self.signature == other.signature
            && self.size == other.size
            && self.relations == other.relations
            && self.weights == other.weights
    }
}

/// Builder collecting tuples and weights before validation.
#[derive(Clone, Debug)]
pub struct StructureBuilder {
    signature: Signature,
    size: usize,
    relations: Vec<BTreeSet<Vec<usize>>>,
    weights: Vec<BTreeMap<Vec<usize>, CarrierValue>>,
}

impl StructureBuilder {
    /// Starts a structure with universe `0..size`.
    pub fn new(signature: Signature, size: usize) -> Self {
        let relations = vec![BTreeSet::new(); signature.relations.len()];
        let weights = vec![BTreeMap::new(); signature.weights.len()];
        StructureBuilder { signature, size, relations, weights }
    }

    fn check_tuple(&self, what: &str, arity: usize, tuple: &[usize]) -> Result<()> {
        if tuple.len() != arity {
            return Err(Error::ArityError(format!("{what} has arity {arity}, got tuple of length {}", tuple.len())));
        }
        if let Some(&e) = tuple.iter().find(|&&e| e >= self.size) {
            return Err(Error::UnknownElement(e));
        }
        Ok(())
    }

    /// Adds a tuple to relation `name`.
    pub fn relation(&mut self, name: &str, tuple: &[usize]) -> Result<&mut Self> {
        let (idx, arity) = self
            .signature
            .relation(name)
            .ok_or_else(|| Error::SignatureMismatch(format!("unknown relation `{name}`")))?;
        self.check_tuple(name, arity, tuple)?;
        self.relations[idx].insert(tuple.to_vec());
        Ok(self)
    }

    /// Sets `name(tuple) = value`; a zero value removes the entry.
    pub fn weight(&mut self, name: &str, tuple: &[usize], value: CarrierValue) -> Result<&mut Self> {
        let idx = self
            .signature
            .weights
            .iter()
            .position(|w| w.0 == name)
            .ok_or_else(|| Error::SignatureMismatch(format!("unknown weight `{name}`")))?;
        let (_, arity, carrier) = &self.signature.weights[idx];
        self.check_tuple(name, *arity, tuple)?;
        if &value.carrier() != carrier {
            return Err(Error::CarrierMismatch(format!("weight `{name}` has carrier {carrier}, got {}", value.carrier())));
        }
        if value.is_zero() {
            self.weights[idx].remove(tuple);
        } else {
            self.weights[idx].insert(tuple.to_vec(), value);
        }
        Ok(self)
    }

    /// Validates the locality condition and builds the structure.
    pub fn build(self) -> Result<WeightedStructure> {
        let s = self.build_unchecked();
        s.check_locality()?;
        Ok(s)
    }

    /// Builds without checking the weight locality condition (used for induced substructures,
    /// where weights of clipped tuples may lose their covering relation tuple).
    pub fn build_unchecked(self) -> WeightedStructure {
        let relations: Vec<Relation> = self
            .relations
            .into_iter()
            .zip(&self.signature.relations)
            .map(|(set, (_, arity))| Relation { arity: *arity, tuples: set.into_iter().collect() })
            .collect();
        WeightedStructure::assemble(self.signature, self.size, relations, self.weights)
    }
}

impl WeightedStructure {
    fn assemble(
        signature: Signature,
        size: usize,
        relations: Vec<Relation>,
        weights: Vec<BTreeMap<Vec<usize>, CarrierValue>>,
    ) -> Self {
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); size];
        let mut incidence = vec![Vec::new(); size];
        for (ri, rel) in relations.iter().enumerate() {
            for (ti, t) in rel.tuples.iter().enumerate() {
                let mut seen: Vec<usize> = t.clone();
                seen.sort_unstable();
                seen.dedup();
                for &a in &seen {
                    incidence[a].push((ri, ti));
                    for &b in &seen {
                        if a != b {
                            adj[a].insert(b);
                        }
                    }
                }
            }
        }
        let mut weight_starts = vec![Vec::new(); size];
        for (wi, table) in weights.iter().enumerate() {
            for key in table.keys() {
                weight_starts[key[0]].push((wi, key.clone()));
            }
        }
        WeightedStructure {
            signature,
            size,
            relations,
            weights,
            adjacency: adj.into_iter().map(|s| s.into_iter().collect()).collect(),
            incidence,
            weight_starts,
        }
    }

    fn check_locality(&self) -> Result<()> {
        for (wi, table) in self.weights.iter().enumerate() {
            for key in table.keys() {
                if key.len() == 1 || key.iter().all(|&e| e == key[0]) {
                    continue;
                }
                let covered = self.incidence[key[0]].iter().any(|&(ri, ti)| {
                    let t = &self.relations[ri].tuples[ti];
                    key.iter().all(|e| t.contains(e))
                });
                if !covered {
                    return Err(Error::LocalityViolation(format!(
                        "{}({}) is nonzero but no relation tuple covers it",
                        self.signature.weights[wi].0,
                        key.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
                    )));
                }
            }
        }
        Ok(())
    }

    /// The signature.
    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    /// Number of elements `n`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Interpretation of the relation with the given index.
    pub fn relation_by_index(&self, idx: usize) -> &Relation {
        &self.relations[idx]
    }

    /// Interpretation of relation `name`.
    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.signature.relation(name).map(|(i, _)| &self.relations[i])
    }

    /// `true` iff `tuple ∈ R`.
    pub fn holds(&self, name: &str, tuple: &[usize]) -> Result<bool> {
        let (i, arity) = self
            .signature
            .relation(name)
            .ok_or_else(|| Error::SignatureMismatch(format!("unknown relation `{name}`")))?;
        if tuple.len() != arity {
            return Err(Error::ArityError(format!("relation `{name}` has arity {arity}")));
        }
        Ok(self.relations[i].contains(tuple))
    }

    /// Sparse table of the declared weight with the given index.
    pub fn weight_table(&self, idx: usize) -> &BTreeMap<Vec<usize>, CarrierValue> {
        &self.weights[idx]
    }

    /// `w(tuple)` for a resolved symbol; absent entries are `0_S`.
    pub fn weight_value(&self, sym: &WeightSymbol, tuple: &[usize]) -> CarrierValue {
        match sym {
            WeightSymbol::Declared { index, carrier, .. } => {
                self.weights[*index].get(tuple).cloned().unwrap_or_else(|| carrier.zero())
            }
            WeightSymbol::BuiltinOne { carrier } => match carrier {
                Carrier::IntegerRing => CarrierValue::int(1),
                Carrier::ResidueGroup(m) => CarrierValue::Residue { modulus: *m, value: 1 },
                other => unreachable!("built-in one weight over {other}"),
            },
        }
    }

    /// `w(tuple)` by weight name.
    pub fn weight(&self, name: &str, tuple: &[usize]) -> Result<CarrierValue> {
        let sym = self
            .signature
            .weight(name)
            .ok_or_else(|| Error::SignatureMismatch(format!("unknown weight `{name}`")))?;
        if tuple.len() != sym.arity() {
            return Err(Error::ArityError(format!("weight `{name}` has arity {}", sym.arity())));
        }
        if let Some(&e) = tuple.iter().find(|&&e| e >= self.size) {
            return Err(Error::UnknownElement(e));
        }
        Ok(self.weight_value(&sym, tuple))
    }

    /// Sorted Gaifman neighbours of `a`.
    pub fn neighbours(&self, a: usize) -> &[usize] {
        &self.adjacency[a]
    }

    /// Maximum Gaifman degree (0 for the empty structure).
    pub fn degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Elements `v ≠ a` joined to `a` by a relation tuple all of whose other components lie
    /// in `{x : member(x)} ∪ {v}`.
    ///
    /// This is one step of a path whose intermediate elements are restricted to a set while
    /// the two endpoints of the step are free, matching the first-order definition of
    /// adjacency with relativised existential quantifiers.
    pub fn neighbours_within(&self, a: usize, member: &dyn Fn(usize) -> bool) -> Vec<usize> {
        let mut out = BTreeSet::new();
        for &(ri, ti) in &self.incidence[a] {
            let t = &self.relations[ri].tuples[ti];
            let outside: BTreeSet<usize> = t.iter().copied().filter(|&e| e != a && !member(e)).collect();
            match outside.len() {
                0 => out.extend(t.iter().copied().filter(|&e| e != a)),
                1 => {
                    out.insert(*outside.iter().next().expect("one element"));
                }
                _ => {}
            }
        }
        out.into_iter().collect()
    }

    fn check_ids(&self, ids: &[usize]) -> Result<()> {
        match ids.iter().find(|&&e| e >= self.size) {
            Some(&e) => Err(Error::UnknownElement(e)),
            None => Ok(()),
        }
    }

    /// Breadth-first distances from `sources` up to `radius`, as a map element → distance.
    ///
    /// With `member = Some(f)`, paths may only pass *through* elements satisfying `f`
    /// (sources excepted), and each step must be witnessed by a tuple as in
    /// [`neighbours_within`](Self::neighbours_within); the reported elements are the possible
    /// path endpoints, which need not satisfy `f` themselves.
    pub fn distances(&self, sources: &[usize], radius: usize, member: Option<&dyn Fn(usize) -> bool>) -> BTreeMap<usize, usize> {
        let mut dist = BTreeMap::new();
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist.insert(s, 0).is_none() {
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = dist[&u];
            if du == radius {
                continue;
            }
            let nbrs: Vec<usize> = match member {
                None => self.adjacency[u].clone(),
                Some(f) => {
                    if !f(u) && !sources.contains(&u) {
                        continue;
                    }
                    self.neighbours_within(u, f)
                }
            };
            for v in nbrs {
                if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(v) {
                    e.insert(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Gaifman distance between `a` and `b` (`None` if disconnected).
    pub fn distance(&self, a: usize, b: usize) -> Option<usize> {
        self.distances(&[a], usize::MAX, None).get(&b).copied()
    }

    /// The r-ball `{b : dist(anchors, b) <= r}`, sorted ascending.
    pub fn ball(&self, anchors: &[usize], r: usize) -> Result<Vec<usize>> {
        self.check_ids(anchors)?;
        Ok(self.distances(anchors, r, None).into_keys().collect())
    }

    /// Induced substructure on an arbitrary sorted element set; returns the substructure and
    /// the table mapping new ids to old ids (new id `i` is `elements[i]`).
    pub fn induced_substructure(&self, elements: &[usize]) -> Result<(WeightedStructure, Vec<usize>)> {
        self.check_ids(elements)?;
        let mut elems = elements.to_vec();
        elems.sort_unstable();
        elems.dedup();
        let index: HashMap<usize, usize> = elems.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut relations: Vec<BTreeSet<Vec<usize>>> = vec![BTreeSet::new(); self.relations.len()];
        for (ri, rel) in self.relations.iter().enumerate() {
            if rel.arity == 0 {
                relations[ri] = rel.tuples.iter().cloned().collect();
            }
        }
        let mut weights = vec![BTreeMap::new(); self.weights.len()];
        for &e in &elems {
            for &(ri, ti) in &self.incidence[e] {
                let t = &self.relations[ri].tuples[ti];
                if t.iter().all(|x| index.contains_key(x)) {
                    relations[ri].insert(t.iter().map(|x| index[x]).collect());
                }
            }
            for (wi, key) in &self.weight_starts[e] {
                if key.iter().all(|x| index.contains_key(x)) {
                    weights[*wi].insert(key.iter().map(|x| index[x]).collect(), self.weights[*wi][key].clone());
                }
            }
        }
        let builder = StructureBuilder { signature: self.signature.clone(), size: elems.len(), relations, weights };
        Ok((builder.build_unchecked(), elems))
    }

    /// The r-neighbourhood `N_r(anchors)`: induced substructure on the r-ball, with id remap.
    pub fn induced_neighborhood(&self, anchors: &[usize], r: usize) -> Result<(WeightedStructure, Vec<usize>)> {
        let ball = self.ball(anchors, r)?;
        self.induced_substructure(&ball)
    }

    /// Disjoint sum with marker relations `X` (left part) and `Y` (right part).
    pub fn disjoint_sum(&self, other: &WeightedStructure) -> Result<WeightedStructure> {
        self.sum_impl(other, true)
    }

    /// Disjoint union without marker relations.
    pub fn disjoint_union(&self, other: &WeightedStructure) -> Result<WeightedStructure> {
        self.sum_impl(other, false)
    }

    fn sum_impl(&self, other: &WeightedStructure, markers: bool) -> Result<WeightedStructure> {
        if self.signature != other.signature {
            return Err(Error::SignatureMismatch("disjoint sum of structures over different signatures".into()));
        }
        let mut sig = self.signature.clone();
        if markers {
            sig.add_relation(LEFT_PART, 1)?;
            sig.add_relation(RIGHT_PART, 1)?;
        }
        let off = self.size;
        let mut b = StructureBuilder::new(sig, self.size + other.size);
        for (ri, (name, _)) in self.signature.relations.iter().enumerate() {
            for t in self.relations[ri].tuples.iter() {
                b.relations[ri].insert(t.clone());
            }
            for t in other.relations[ri].tuples.iter() {
                b.relations[ri].insert(t.iter().map(|e| e + off).collect());
            }
            let _ = name;
        }
        for wi in 0..self.weights.len() {
            for (k, v) in &self.weights[wi] {
                b.weights[wi].insert(k.clone(), v.clone());
            }
            for (k, v) in &other.weights[wi] {
                b.weights[wi].insert(k.iter().map(|e| e + off).collect(), v.clone());
            }
        }
        if markers {
            let nr = self.signature.relations.len();
            for a in 0..self.size {
                b.relations[nr].insert(vec![a]);
            }
            for a in 0..other.size {
                b.relations[nr + 1].insert(vec![a + off]);
            }
        }
        Ok(b.build_unchecked())
    }

    /// Disjoint union of `copies` copies of the structure; copy `c` occupies ids
    /// `c·n .. (c+1)·n`. 0-ary relations are shared.
    pub fn replicate(&self, copies: usize) -> Result<WeightedStructure> {
        if copies == 0 {
            return Err(Error::OutOfRange("at least one copy is needed".into()));
        }
        let n = self.size;
        let mut b = StructureBuilder::new(self.signature.clone(), n * copies);
        for c in 0..copies {
            let off = c * n;
            for (ri, rel) in self.relations.iter().enumerate() {
                for t in &rel.tuples {
                    b.relations[ri].insert(t.iter().map(|e| e + off).collect());
                }
            }
            for (wi, table) in self.weights.iter().enumerate() {
                for (k, v) in table {
                    b.weights[wi].insert(k.iter().map(|e| e + off).collect(), v.clone());
                }
            }
        }
        Ok(b.build_unchecked())
    }

    /// Same universe and weights with additional relation symbols appended to the signature.
    pub fn expand(&self, extra: &[(String, usize, Vec<Vec<usize>>)]) -> Result<WeightedStructure> {
        let mut sig = self.signature.clone();
        let mut relations = self.relations.clone();
        for (name, arity, tuples) in extra {
            sig.add_relation(name, *arity)?;
            let mut ts: Vec<Vec<usize>> = tuples.clone();
            for t in &ts {
                if t.len() != *arity {
                    return Err(Error::ArityError(format!("relation `{name}` has arity {arity}")));
                }
                self.check_ids(t)?;
            }
            ts.sort();
            ts.dedup();
            relations.push(Relation { arity: *arity, tuples: ts });
        }
        Ok(WeightedStructure::assemble(sig, self.size, relations, self.weights.clone()))
    }

    /// Serializes in the structure text format. Deterministic: symbols in signature order,
    /// tuples and weight keys ascending.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("signature\n");
        for (name, arity) in &self.signature.relations {
            let _ = writeln!(out, "relation {name} {arity}");
        }
        for (name, arity, carrier) in &self.signature.weights {
            let _ = writeln!(out, "weight {name} {arity} {carrier}");
        }
        let _ = writeln!(out, "predicates {PREDICATE_LIBRARY_VERSION}");
        out.push_str("end\n");
        let _ = writeln!(out, "universe {}", self.size);
        let join = |t: &[usize]| t.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        for (ri, (name, _)) in self.signature.relations.iter().enumerate() {
            for t in &self.relations[ri].tuples {
                let _ = writeln!(out, "{name}({})", join(t));
            }
        }
        for (wi, (name, _, _)) in self.signature.weights.iter().enumerate() {
            for (k, v) in &self.weights[wi] {
                let _ = writeln!(out, "{name}({}) = {v}", join(k));
            }
        }
        out
    }

    /// Parses the structure text format (see [`WeightedStructure::to_text`]).
    ///
    /// Lines starting with `#` and blank lines are ignored.
    pub fn from_text(text: &str) -> Result<WeightedStructure> {
        let perr = |line: usize, msg: String| Error::ParseError { line, msg };
        let mut lines = document_lines(text);
        let sig = read_signature(&mut lines)?;
        let (ln, uline) = lines.next().ok_or_else(|| perr(0, "missing `universe` line".into()))?;
        let n: usize = uline
            .strip_prefix("universe")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| perr(ln, "expected `universe <n>`".into()))?;
        let mut b = StructureBuilder::new(sig, n);
        for (ln, line) in lines {
            let (head, value) = match line.split_once('=') {
                Some((h, v)) => (h.trim(), Some(v.trim())),
                None => (line, None),
            };
            let open = head.find('(').ok_or_else(|| perr(ln, format!("expected `name(...)` in `{line}`")))?;
            let name = head[..open].trim();
            let args = head[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| perr(ln, format!("missing `)` in `{line}`")))?;
            let tuple: Vec<usize> = if args.trim().is_empty() {
                Vec::new()
            } else {
                args.split(',')
                    .map(|a| a.trim().parse::<usize>().map_err(|_| perr(ln, format!("bad element id `{a}`"))))
                    .collect::<Result<_>>()?
            };
            match value {
                None => {
                    if b.signature.relation(name).is_none() {
                        return Err(perr(ln, format!("unknown relation `{name}`")));
                    }
                    b.relation(name, &tuple)?;
                }
                Some(v) => {
                    let carrier = b
                        .signature
                        .weights
                        .iter()
                        .find(|w| w.0 == name)
                        .map(|w| w.2.clone())
                        .ok_or_else(|| perr(ln, format!("unknown weight `{name}`")))?;
                    let value = carrier.parse_value(v).map_err(|e| match e {
                        Error::CarrierMismatch(m) => Error::CarrierMismatch(m),
                        e => perr(ln, e.to_string()),
                    })?;
                    b.weight(name, &tuple, value)?;
                }
            }
        }
        b.build()
    }
}

/// Non-blank lines of a document with comments stripped, numbered from 1.
fn document_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Reads the `signature … end` header.
fn read_signature<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<Signature> {
    let perr = |line: usize, msg: String| Error::ParseError { line, msg };
    let (ln, first) = lines.next().ok_or_else(|| perr(0, "empty document".into()))?;
    if first != "signature" {
        return Err(perr(ln, "expected `signature`".into()));
    }
    let mut sig = Signature::new();
    for (ln, line) in lines.by_ref() {
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["end"] => return Ok(sig),
            ["relation", name, arity] => {
                let arity = arity.parse().map_err(|_| perr(ln, format!("bad arity `{arity}`")))?;
                sig.add_relation(name, arity).map_err(|e| perr(ln, e.to_string()))?;
            }
            ["weight", name, arity, carrier] => {
                let arity = arity.parse().map_err(|_| perr(ln, format!("bad arity `{arity}`")))?;
                let carrier = Carrier::parse(carrier).map_err(|e| perr(ln, e.to_string()))?;
                sig.add_weight(name, arity, carrier).map_err(|e| match e {
                    Error::ArityError(m) => Error::ArityError(m),
                    e => perr(ln, e.to_string()),
                })?;
            }
            ["predicates", v] => {
                if *v != PREDICATE_LIBRARY_VERSION {
                    return Err(perr(ln, format!("unsupported predicate library `{v}`")));
                }
            }
            _ => return Err(perr(ln, format!("unexpected header line `{line}`"))),
        }
    }
    Err(perr(0, "missing `end` of signature".into()))
}

impl Signature {
    /// Reads the signature header of a structure document (the body, if any, is ignored).
    pub fn from_text(text: &str) -> Result<Signature> {
        read_signature(&mut document_lines(text))
    }
}

/// Counters of the three local-access query kinds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct QueryCounts {
    pub relation_probes: u64,
    pub weight_lookups: u64,
    pub neighbour_queries: u64,
}

impl QueryCounts {
    /// Sum of all three counters.
    pub fn total(&self) -> u64 {
        self.relation_probes + self.weight_lookups + self.neighbour_queries
    }
}

/// Instrumented local access to a structure: relation probes, weight lookups and
/// neighbour lists, each call incrementing exactly one counter.
#[derive(Debug)]
pub struct LocalAccessOracle<'a> {
    target: &'a WeightedStructure,
    probes: AtomicU64,
    lookups: AtomicU64,
    neighbour_calls: AtomicU64,
}

impl<'a> LocalAccessOracle<'a> {
    /// Fresh oracle with zeroed counters.
    pub fn new(target: &'a WeightedStructure) -> Self {
        LocalAccessOracle { target, probes: AtomicU64::new(0), lookups: AtomicU64::new(0), neighbour_calls: AtomicU64::new(0) }
    }

    /// Signature of the target (metadata, not counted).
    pub fn signature(&self) -> &Signature {
        &self.target.signature
    }

    /// Universe size of the target (metadata, not counted).
    pub fn size(&self) -> usize {
        self.target.size
    }

    /// "Is ā ∈ R?" by relation index.
    pub fn probe_index(&self, rel: usize, tuple: &[usize]) -> bool {
        self.probes.fetch_add(1, AtomicOrdering::Relaxed);
        self.target.relations[rel].contains(tuple)
    }

    /// "Is ā ∈ R?"
    pub fn probe(&self, name: &str, tuple: &[usize]) -> Result<bool> {
        self.probes.fetch_add(1, AtomicOrdering::Relaxed);
        self.target.holds(name, tuple)
    }

    /// "Return w(ā)" for a resolved symbol.
    pub fn weight_value(&self, sym: &WeightSymbol, tuple: &[usize]) -> CarrierValue {
        self.lookups.fetch_add(1, AtomicOrdering::Relaxed);
        self.target.weight_value(sym, tuple)
    }

    /// "Return w(ā)".
    pub fn weight(&self, name: &str, tuple: &[usize]) -> Result<CarrierValue> {
        self.lookups.fetch_add(1, AtomicOrdering::Relaxed);
        self.target.weight(name, tuple)
    }

    /// "Return the list of all neighbours of a".
    pub fn neighbours(&self, a: usize) -> Result<Vec<usize>> {
        self.neighbour_calls.fetch_add(1, AtomicOrdering::Relaxed);
        self.target.check_ids(&[a])?;
        Ok(self.target.adjacency[a].clone())
    }

    /// Current counter values.
    pub fn counts(&self) -> QueryCounts {
        QueryCounts {
            relation_probes: self.probes.load(AtomicOrdering::Relaxed),
            weight_lookups: self.lookups.load(AtomicOrdering::Relaxed),
            neighbour_queries: self.neighbour_calls.load(AtomicOrdering::Relaxed),
        }
    }

    /// r-ball around `anchors` by breadth-first exploration with neighbour queries
    /// (one query per element at distance < r).
    pub fn ball(&self, anchors: &[usize], r: usize) -> Result<Vec<usize>> {
        Ok(self.explore(anchors, r)?.0.into_keys().collect())
    }

    /// Explores the r-ball, returning distances and the neighbour lists fetched so far.
    fn explore(&self, anchors: &[usize], r: usize) -> Result<(BTreeMap<usize, usize>, HashMap<usize, Vec<usize>>)> {
        let mut dist = BTreeMap::new();
        let mut lists = HashMap::new();
        let mut queue = VecDeque::new();
        for &a in anchors {
            self.target.check_ids(&[a])?;
            if dist.insert(a, 0).is_none() {
                queue.push_back(a);
            }
        }
        while let Some(u) = queue.pop_front() {
            let du = dist[&u];
            if du >= r {
                continue;
            }
            let nb = self.neighbours(u)?;
            for &v in &nb {
                if !dist.contains_key(&v) {
                    dist.insert(v, du + 1);
                    queue.push_back(v);
                }
            }
            lists.insert(u, nb);
        }
        Ok((dist, lists))
    }

    /// Builds `N_r(anchors)` through local access only: breadth-first exploration, neighbour
    /// lists of the boundary, then probes/lookups on every Gaifman-clique tuple of the ball.
    /// Returns the substructure and the new-id → old-id table.
    pub fn neighbourhood(&self, anchors: &[usize], r: usize) -> Result<(WeightedStructure, Vec<usize>)> {
        let (dist, mut lists) = self.explore(anchors, r)?;
        let elems: Vec<usize> = dist.keys().copied().collect();
        for &e in &elems {
            if !lists.contains_key(&e) {
                let nb = self.neighbours(e)?;
                lists.insert(e, nb);
            }
        }
        let index: HashMap<usize, usize> = elems.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let local_adj: Vec<Vec<usize>> = elems
            .iter()
            .map(|e| lists[e].iter().filter_map(|x| index.get(x).copied()).collect())
            .collect();
        let sig = self.target.signature.clone();
        let mut b = StructureBuilder::new(sig.clone(), elems.len());
        for (ri, (_, arity)) in sig.relations.iter().enumerate() {
            for t in clique_tuples(&local_adj, *arity) {
                let orig: Vec<usize> = t.iter().map(|&i| elems[i]).collect();
                if self.probe_index(ri, &orig) {
                    b.relations[ri].insert(t);
                }
            }
        }
        for (wi, (_, arity, carrier)) in sig.weights.iter().enumerate() {
            let sym = WeightSymbol::Declared { index: wi, arity: *arity, carrier: carrier.clone() };
            for t in clique_tuples(&local_adj, *arity) {
                let orig: Vec<usize> = t.iter().map(|&i| elems[i]).collect();
                let v = self.weight_value(&sym, &orig);
                if !v.is_zero() {
                    b.weights[wi].insert(t, v);
                }
            }
        }
        Ok((b.build_unchecked(), elems))
    }
}

/// All tuples of the given arity whose components are pairwise equal or adjacent.
fn clique_tuples(adj: &[Vec<usize>], arity: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(arity);
    fn rec(adj: &[Vec<usize>], arity: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == arity {
            out.push(cur.clone());
            return;
        }
        let candidates: Vec<usize> = match cur.first() {
            None => (0..adj.len()).collect(),
            Some(&f) => {
                let mut c: Vec<usize> = adj[f].clone();
                c.push(f);
                c.sort_unstable();
                c
            }
        };
        for v in candidates {
            if cur.iter().all(|&u| u == v || adj[u].contains(&v)) {
                cur.push(v);
                rec(adj, arity, cur, out);
                cur.pop();
            }
        }
    }
    rec(adj, arity, &mut cur, &mut out);
    out
}

/// Weight symbol specification for the generator.
#[derive(Clone, Debug)]
pub struct GenWeight {
    pub name: String,
    pub arity: usize,
    pub carrier: Carrier,
    /// Values drawn uniformly; zeros in the pool simply leave the entry absent.
    pub pool: Vec<CarrierValue>,
    /// Probability that an admissible tuple receives a value.
    pub density: f64,
}

/// Parameters of the seeded bounded-degree structure generator.
#[derive(Clone, Debug)]
pub struct GenParams {
    pub size: usize,
    /// Maximum Gaifman degree of the output.
    pub degree_bound: usize,
    /// `(name, arity, probability)`; for arity ≥ 2 the probability applies per candidate tuple.
    pub relations: Vec<(String, usize, f64)>,
    pub weights: Vec<GenWeight>,
    pub seed: u64,
}

/// Generates a structure deterministically from `params`.
///
/// Relation tuples of arity ≥ 2 are drawn over distinct elements and kept only if the
/// Gaifman degree bound stays satisfied. Weights are placed only on admissible tuples
/// (unary, constant, or covered by a relation tuple), so the output always satisfies the
/// locality condition.
pub fn generate(params: &GenParams) -> Result<WeightedStructure> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = params.size;
    let mut sig = Signature::new();
    for (name, arity, _) in &params.relations {
        sig.add_relation(name, *arity)?;
    }
    for w in &params.weights {
        sig.add_weight(&w.name, w.arity, w.carrier.clone())?;
    }
    let mut b = StructureBuilder::new(sig, n);
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for (ri, (_, arity, p)) in params.relations.iter().enumerate() {
        match *arity {
            0 => {
                if rng.gen_bool(p.clamp(0.0, 1.0)) {
                    b.relations[ri].insert(vec![]);
                }
            }
            1 => {
                for a in 0..n {
                    if rng.gen_bool(p.clamp(0.0, 1.0)) {
                        b.relations[ri].insert(vec![a]);
                    }
                }
            }
            m => {
                if n < m {
                    continue;
                }
                // Expected number of candidate draws: p per ordered pair for binary relations,
                // scaled to n·(n−1) draws in general.
                let draws = n * (n - 1);
                for _ in 0..draws {
                    if !rng.gen_bool(p.clamp(0.0, 1.0)) {
                        continue;
                    }
                    let mut pool: Vec<usize> = (0..n).collect();
                    pool.shuffle(&mut rng);
                    let t: Vec<usize> = pool[..m].to_vec();
                    let fresh: Vec<(usize, usize)> = t
                        .iter()
                        .flat_map(|&a| t.iter().map(move |&c| (a, c)))
                        .filter(|&(a, c)| a != c && !adj[a].contains(&c))
                        .collect();
                    let mut extra = vec![0usize; n];
                    for &(a, _) in &fresh {
                        extra[a] += 1;
                    }
                    if t.iter().all(|&a| adj[a].len() + extra[a] <= params.degree_bound) {
                        for (a, c) in fresh {
                            adj[a].insert(c);
                        }
                        b.relations[ri].insert(t);
                    }
                }
            }
        }
    }
    let tuples: Vec<Vec<usize>> = b.relations.iter().flat_map(|s| s.iter().cloned()).collect();
    for (wi, w) in params.weights.iter().enumerate() {
        let mut candidates: BTreeSet<Vec<usize>> = BTreeSet::new();
        if w.arity == 1 {
            candidates.extend((0..n).map(|a| vec![a]));
        } else {
            candidates.extend((0..n).map(|a| vec![a; w.arity]));
            for t in &tuples {
                let mut elems = t.clone();
                elems.sort_unstable();
                elems.dedup();
                for key in all_tuples(&elems, w.arity) {
                    candidates.insert(key);
                }
            }
        }
        for key in candidates {
            if !w.pool.is_empty() && rng.gen_bool(w.density.clamp(0.0, 1.0)) {
                let v = w.pool[rng.gen_range(0..w.pool.len())].clone();
                b.weight(&w.name, &key, v)?;
            }
        }
        let _ = wi;
    }
    b.build()
}

/// All `k`-tuples over `elems` in lexicographic order.
pub fn all_tuples(elems: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::with_capacity(out.len() * elems.len());
        for t in &out {
            for &e in elems {
                let mut t2 = t.clone();
                t2.push(e);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Path 0–1–2 with R = {0}, B = {2}, w(0,1) = w(1,0) = 2, w(1,2) = w(2,1) = 1/2.
    pub(crate) fn g1_text() -> &'static str {
        "signature\nrelation E 2\nrelation R 1\nrelation B 1\nweight w 2 Q\npredicates v1\nend\nuniverse 3\n\
         E(0,1)\nE(1,0)\nE(1,2)\nE(2,1)\nR(0)\nB(2)\nw(0,1) = 2\nw(1,0) = 2\nw(1,2) = 1/2\nw(2,1) = 1/2\n"
    }

    #[test]
    fn g1_loads_and_round_trips() {
        let s = WeightedStructure::from_text(g1_text()).unwrap();
        assert_eq!(s.size(), 3);
        assert_eq!(s.degree(), 2);
        assert_eq!(s.neighbours(1), &[0, 2]);
        assert_eq!(s.to_text(), g1_text());
        assert_eq!(s.weight("w", &[1, 2]).unwrap(), CarrierValue::rat(1, 2));
        assert_eq!(s.weight("w", &[0, 2]).unwrap(), CarrierValue::rat(0, 1));
        assert_eq!(s.weight("one", &[2]).unwrap(), CarrierValue::int(1));
    }

    #[test]
    fn uncovered_weight_is_rejected() {
        let bad = format!("{}w(0,2) = 1\n", g1_text());
        assert!(matches!(WeightedStructure::from_text(&bad), Err(Error::LocalityViolation(_))));
        let unary = "signature\nweight u 1 Z\npredicates v1\nend\nuniverse 2\nu(0) = 5\nu(1) = -1\n";
        assert!(WeightedStructure::from_text(unary).is_ok());
        let constant = format!("{}w(2,2) = 1\n", g1_text());
        assert!(WeightedStructure::from_text(&constant).is_ok());
    }

    #[test]
    fn balls_and_neighbourhoods() {
        let s = WeightedStructure::from_text(g1_text()).unwrap();
        assert_eq!(s.ball(&[1], 1).unwrap(), vec![0, 1, 2]);
        assert_eq!(s.ball(&[0], 0).unwrap(), vec![0]);
        assert_eq!(s.ball(&[0, 2], 1).unwrap(), vec![0, 1, 2]);
        assert!(matches!(s.ball(&[7], 1), Err(Error::UnknownElement(7))));
        let (n, remap) = s.induced_neighborhood(&[0], 1).unwrap();
        assert_eq!(remap, vec![0, 1]);
        assert_eq!(n.relation("E").unwrap().tuples(), &[vec![0, 1], vec![1, 0]]);
        assert!(n.holds("R", &[0]).unwrap());
        assert_eq!(n.weight("w", &[0, 1]).unwrap(), CarrierValue::rat(2, 1));
        assert_eq!(n.weight_table(0).len(), 2);
        let (full, _) = s.induced_neighborhood(&[1], 5).unwrap();
        assert_eq!(full, s);
    }

    #[test]
    fn disjoint_sum_shapes() {
        let s = WeightedStructure::from_text(g1_text()).unwrap();
        let (t, _) = s.induced_neighborhood(&[0], 1).unwrap();
        let c = s.disjoint_sum(&t).unwrap();
        assert_eq!(c.size(), 5);
        assert_eq!(c.relation("X").unwrap().tuples().len(), 3);
        assert_eq!(c.relation("Y").unwrap().tuples().len(), 2);
        assert_eq!(c.weight("w", &[2, 3]).unwrap(), CarrierValue::rat(0, 1));
        assert_eq!(c.weight("w", &[3, 4]).unwrap(), CarrierValue::rat(2, 1));
        for a in 0..3 {
            assert!(c.neighbours(a).iter().all(|&b| b < 3));
        }
        let u = s.disjoint_union(&t).unwrap();
        assert!(u.relation("X").is_none());
        let other = WeightedStructure::from_text("signature\nend\nuniverse 1\n").unwrap();
        assert!(matches!(s.disjoint_sum(&other), Err(Error::SignatureMismatch(_))));
    }

    #[test]
    fn oracle_counts_queries() {
        let s = WeightedStructure::from_text(g1_text()).unwrap();
        let o = LocalAccessOracle::new(&s);
        assert!(o.probe("E", &[0, 1]).unwrap());
        assert_eq!(o.weight("w", &[0, 2]).unwrap(), CarrierValue::rat(0, 1));
        assert_eq!(o.counts(), QueryCounts { relation_probes: 1, weight_lookups: 1, neighbour_queries: 0 });
        let o = LocalAccessOracle::new(&s);
        assert_eq!(o.ball(&[1], 1).unwrap(), vec![0, 1, 2]);
        assert_eq!(o.counts().neighbour_queries, 1);
        let (n, remap) = o.neighbourhood(&[1], 1).unwrap();
        assert_eq!(o.counts().neighbour_queries, 1 + 1 + 2);
        let (m, remap2) = s.induced_neighborhood(&[1], 1).unwrap();
        assert_eq!(remap, remap2);
        assert_eq!(n, m);
    }

    #[test]
    fn oracle_neighbourhood_matches_induced_on_generated() {
        for seed in 0..20 {
            let s = generate(&GenParams {
                size: 12,
                degree_bound: 3,
                relations: vec![("E".into(), 2, 0.1), ("T".into(), 3, 0.02), ("R".into(), 1, 0.4), ("C".into(), 0, 0.5)],
                weights: vec![GenWeight {
                    name: "w".into(),
                    arity: 2,
                    carrier: Carrier::IntegerRing,
                    pool: vec![CarrierValue::int(1), CarrierValue::int(-2)],
                    density: 0.5,
                }],
                seed,
            })
            .unwrap();
            assert!(s.degree() <= 3);
            for a in 0..12 {
                let o = LocalAccessOracle::new(&s);
                assert_eq!(o.neighbourhood(&[a], 2).unwrap(), s.induced_neighborhood(&[a], 2).unwrap());
            }
            assert_eq!(WeightedStructure::from_text(&s.to_text()).unwrap().to_text(), s.to_text());
        }
    }

    #[test]
    fn restricted_distances_respect_tuples() {
        let text = "signature\nrelation T 3\nend\nuniverse 4\nT(0,1,2)\nT(2,3,3)\n";
        let s = WeightedStructure::from_text(text).unwrap();
        let member = |e: usize| e != 2;
        let d = s.distances(&[0], 5, Some(&member));
        // 1 would need 2 as a non-endpoint component; 2 itself is reachable as an endpoint
        // but cannot be passed through.
        assert_eq!(d.get(&1), None);
        assert_eq!(d.get(&2), Some(&1));
        assert_eq!(d.get(&3), None);
        let d = s.distances(&[0], 5, None);
        assert_eq!(d.get(&3), Some(&2));
    }
}
