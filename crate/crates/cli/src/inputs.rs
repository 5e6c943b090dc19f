//! Reading structures, signatures, expressions, hypothesis classes and training files.
//!
//! A hypothesis-class file lists one directive per line (`#` starts a comment):
//!
//! ```text
//! radius 1
//! instance x
//! parameters y
//! formula (rel E x y)
//! formula (rel B x)
//! closure boolean
//! ```
//!
//! `closure boolean` replaces the listed formulas by all Boolean combinations of them (at
//! most four atoms); `closure negation <cap>` closes them under negation and disjunction up
//! to `cap` formulas. Without a `closure` line the class is the list itself.

use std::fs;
use std::path::{Path, PathBuf};

use wagg_core::gen::standard_signature;
use wagg_core::{parse_expression, parse_formula, Error, Expression, Formula, HypothesisClass, Signature, TrainingSequence, Var, WeightedStructure};

use crate::error::{CliError, WithPath};

/// Reads a whole file, mapping failures to `IoError`.
pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| Error::IoError(e.to_string())).in_file(path)
}

/// Writes a whole file, mapping failures to `IoError`.
pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| Error::IoError(e.to_string())).in_file(path)
}

pub fn load_structure(path: &Path) -> Result<WeightedStructure, CliError> {
    WeightedStructure::from_text(&read(path)?).in_file(path)
}

/// The signature of `--structure`, else of `--signature`, else the standard test signature.
pub fn load_signature(structure: Option<&Path>, signature: Option<&Path>) -> Result<Signature, CliError> {
    match (structure, signature) {
        (Some(s), _) => Ok(load_structure(s)?.signature().clone()),
        (None, Some(p)) => Signature::from_text(&read(p)?).in_file(p),
        (None, None) => Ok(standard_signature()),
    }
}

/// Expression text from a file or given inline.
pub struct ExprSource {
    pub path: Option<PathBuf>,
    pub text: Option<String>,
}

impl ExprSource {
    fn content(&self) -> Result<(String, PathBuf), CliError> {
        match (&self.path, &self.text) {
            (Some(p), _) => Ok((read(p)?, p.clone())),
            (None, Some(t)) => Ok((t.clone(), PathBuf::from("<expr>"))),
            (None, None) => Err(CliError::Usage("one of --formula or --expr is required".into())),
        }
    }

    pub fn expression(&self, sig: &Signature) -> Result<Expression, CliError> {
        let (text, path) = self.content()?;
        parse_expression(&text, sig).in_file(&path)
    }

    pub fn formula(&self, sig: &Signature) -> Result<Formula, CliError> {
        let (text, path) = self.content()?;
        parse_formula(&text, sig).in_file(&path)
    }
}

/// Splits a comma-separated list, ignoring blanks.
pub fn split_list(text: &str) -> Vec<String> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect()
}

/// Parses a comma-separated tuple of element ids.
pub fn parse_tuple(text: &str) -> Result<Vec<usize>, CliError> {
    split_list(text)
        .iter()
        .map(|s| s.parse::<usize>().map_err(|_| CliError::Usage(format!("`{s}` is not an element id"))))
        .collect()
}

fn class_error(line: usize, msg: impl Into<String>) -> Error {
    Error::ParseError { line, msg: msg.into() }
}

enum Closure {
    None,
    Boolean,
    Negation(usize),
}

fn parse_class(text: &str, sig: &Signature, seed: u64, check: bool) -> Result<HypothesisClass, Error> {
    let mut radius = None;
    let mut xs: Vec<Var> = Vec::new();
    let mut ys: Vec<Var> = Vec::new();
    let mut formulas = Vec::new();
    let mut closure = Closure::None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        let rest = rest.trim();
        match key {
            "radius" => radius = Some(rest.parse::<usize>().map_err(|_| class_error(line, "radius must be a natural number"))?),
            "instance" => xs = rest.split_whitespace().map(str::to_string).collect(),
            "parameters" => ys = rest.split_whitespace().map(str::to_string).collect(),
            "formula" => formulas.push(parse_formula(rest, sig).map_err(|e| class_error(line, e.to_string()))?),
            "closure" => {
                let words: Vec<&str> = rest.split_whitespace().collect();
                closure = match words.as_slice() {
                    ["boolean"] => Closure::Boolean,
                    ["negation", cap] => {
                        Closure::Negation(cap.parse().map_err(|_| class_error(line, "closure cap must be a natural number"))?)
                    }
                    _ => return Err(class_error(line, "expected `closure boolean` or `closure negation <cap>`")),
                }
            }
            other => return Err(class_error(line, format!("unknown directive `{other}`"))),
        }
    }
    let radius = radius.ok_or_else(|| class_error(0, "missing `radius` line"))?;
    match closure {
        Closure::None if check => HypothesisClass::checked(formulas, radius, xs, ys, seed),
        Closure::None => HypothesisClass::new(formulas, radius, xs, ys),
        Closure::Boolean => HypothesisClass::boolean_closure(&formulas, radius, xs, ys),
        Closure::Negation(cap) => HypothesisClass::closure(&formulas, radius, xs, ys, cap),
    }
}

/// Loads a hypothesis-class file; `check` spot-checks the locality of listed formulas.
pub fn load_class(path: &Path, sig: &Signature, seed: u64, check: bool) -> Result<HypothesisClass, CliError> {
    parse_class(&read(path)?, sig, seed, check).in_file(path)
}

pub fn load_training(path: &Path) -> Result<TrainingSequence, CliError> {
    TrainingSequence::from_csv(&read(path)?).in_file(path)
}
