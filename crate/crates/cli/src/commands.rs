//! Command implementations.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use wagg_core::clkernel::{cl_decompose, expand_structure};
use wagg_core::gen::random_structure;
use wagg_core::learning::{run_generalization_experiment, ExampleDistribution, ExperimentConfig, Rate};
use wagg_core::locality::{fv_decompose, fv_decompose_local, gaifman_nf, localize};
use wagg_core::structure::all_tuples;
use wagg_core::{analyze, evaluate, evaluate_all, exact_learn, pac_learn, Error, Hypothesis, LocalAccessOracle, QueryCounts, Var};

use crate::error::{CliError, WithPath};
use crate::inputs::{load_class, load_signature, load_structure, load_training, parse_tuple, split_list, write};
use crate::{Cli, Command, LearnArgs, Profile};

/// Query counters as reported in JSON records.
#[derive(Serialize)]
struct Counts {
    relation_probes: u64,
    weight_lookups: u64,
    neighbour_queries: u64,
}

impl From<QueryCounts> for Counts {
    fn from(c: QueryCounts) -> Self {
        Counts { relation_probes: c.relation_probes, weight_lookups: c.weight_lookups, neighbour_queries: c.neighbour_queries }
    }
}

/// The record printed by both learners.
#[derive(Serialize)]
struct LearnRecord {
    formula: String,
    formula_index: usize,
    params: Vec<usize>,
    training_error: String,
    examples: usize,
    query_counts: Counts,
}

#[derive(Serialize)]
struct ExperimentSummary {
    trials: usize,
    epsilon: f64,
    delta: f64,
    noise: String,
    class_size: u128,
    sample_size: u64,
    best_error: String,
    global_best_error: Option<String>,
    success_frequency: f64,
    mean_true_error: f64,
    mean_training_error: f64,
    query_counts: Counts,
}

/// Writes `text` to `--output` if given, else to standard output.
fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.output {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report records serialise");
    text.push('\n');
    text
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let caps = cli.caps();
    match &cli.command {
        Command::Eval { structure, expr, tuple, vars } => {
            let s = load_structure(structure)?;
            let e = expr.source().expression(s.signature())?;
            let free = analyze(&e).free_vars;
            let order: Vec<Var> = match vars {
                Some(v) => split_list(v),
                None => free.clone(),
            };
            if let Some(missing) = free.iter().find(|v| !order.contains(v)) {
                return Err(Error::UnboundVariable(missing.clone()).into());
            }
            let mut out = String::new();
            match tuple {
                Some(t) => {
                    let t = parse_tuple(t)?;
                    if t.len() != order.len() {
                        return Err(CliError::Usage(format!("--tuple has {} ids for {} variables", t.len(), order.len())));
                    }
                    let asg: Vec<(Var, usize)> = order.iter().cloned().zip(t).collect();
                    let _ = writeln!(out, "{}", evaluate(&s, &e, &asg)?);
                }
                None => {
                    let _ = writeln!(out, "# {}", order.join(","));
                    for (t, v) in evaluate_all(&s, &e, &order)? {
                        let ids: Vec<String> = t.iter().map(usize::to_string).collect();
                        let _ = writeln!(out, "{}\t{v}", ids.join(","));
                    }
                }
            }
            emit(cli, &out)
        }
        Command::Analyze { sig, expr } => {
            let sig = load_signature(sig.structure.as_deref(), sig.signature.as_deref())?;
            let info = analyze(&expr.source().expression(&sig)?);
            let text = format!(
                "free_vars: {}\nquantifier_rank: {}\nagg_depth: {}\nfragment: {:?}\n",
                info.free_vars.join(","),
                info.quantifier_rank,
                info.agg_depth,
                info.fragment
            );
            emit(cli, &text)
        }
        Command::Localize { sig, expr, radius, anchors } => {
            let sig = load_signature(sig.structure.as_deref(), sig.signature.as_deref())?;
            let f = expr.source().formula(&sig)?;
            emit(cli, &format!("{}\n", localize(&f, *radius, &split_list(anchors))?))
        }
        Command::Fv { sig, expr, left, right, radius, exclusive } => {
            let sig = load_signature(sig.structure.as_deref(), sig.signature.as_deref())?;
            let f = expr.source().formula(&sig)?;
            let (xs, ys) = (split_list(left), split_list(right));
            let mut d = match radius {
                Some(r) => fv_decompose_local(&f, *r, &xs, &ys, &caps)?,
                None => fv_decompose(&f, &xs, &ys, &caps)?,
            };
            if *exclusive {
                d = d.into_exclusive(&caps)?;
            }
            let mut out = format!("formula: {}\nexclusive: {}\npairs: {}\n", d.to_formula(), d.mutually_exclusive, d.pairs.len());
            for (a, b) in &d.pairs {
                let _ = writeln!(out, "{a}\t{b}");
            }
            emit(cli, &out)
        }
        Command::Gaifman { sig, expr } => {
            let sig = load_signature(sig.structure.as_deref(), sig.signature.as_deref())?;
            let f = expr.source().formula(&sig)?;
            let nf = gaifman_nf(&f, &caps)?;
            if cli.profile == Profile::Debug {
                nf.validate_shape()?;
            }
            let leaves = nf.root.leaves();
            let mut out = format!("formula: {}\nleaves: {}\n", nf.to_formula(), leaves.len());
            for l in leaves {
                let _ = writeln!(out, "{}\t{}\t{}", l.kind(), l.radius(), l.to_formula());
            }
            emit(cli, &out)
        }
        Command::ClDecompose { sig, expr } => {
            let sig = load_signature(sig.structure.as_deref(), sig.signature.as_deref())?;
            let f = expr.source().formula(&sig)?;
            emit(cli, &format!("{}\n", cl_decompose(&f, &caps)?))
        }
        Command::Expand { structure, expr } => {
            let s = load_structure(structure)?;
            let f = expr.source().formula(s.signature())?;
            let x = expand_structure(&s, &f, &caps)?;
            let target = cli.output.clone().unwrap_or_else(|| sibling(structure, "expanded.wst"));
            let manifest = target.with_extension("manifest");
            write(&target, &x.structure.to_text())?;
            write(&manifest, &x.manifest())?;
            println!("structure: {}", target.display());
            println!("manifest: {}", manifest.display());
            println!("final: {}", x.formula());
            Ok(())
        }
        Command::LearnExact { learn } => {
            let (s, class, t) = learner_inputs(cli, learn)?;
            let oracle = LocalAccessOracle::new(&s);
            match exact_learn(&t, &oracle, &class).in_file(&learn.training)? {
                Some(h) => emit(cli, &json(&record(&h, Rate::from_integer(0), t.len(), oracle.counts()))),
                None => Err(CliError::Reject),
            }
        }
        Command::LearnPac { learn } => {
            let (s, class, t) = learner_inputs(cli, learn)?;
            let oracle = LocalAccessOracle::new(&s);
            let learned = pac_learn(&t, &oracle, &class).in_file(&learn.training)?;
            emit(cli, &json(&record(&learned.hypothesis, learned.training_error(), t.len(), oracle.counts())))
        }
        Command::Experiment { structure, class, target, target_params, noise, epsilon, delta, trials } => {
            let s = load_structure(structure)?;
            let class = load_class(class, s.signature(), cli.seed, cli.profile == Profile::Debug)?;
            let target = target.source().formula(s.signature())?;
            let vars = class.variables();
            if let Some(v) = target.free_vars().into_iter().find(|v| !vars.contains(v)) {
                return Err(CliError::Usage(format!("target variable `{v}` is not a class variable")));
            }
            let params = parse_tuple(target_params)?;
            if params.len() != class.ell() {
                return Err(CliError::Usage(format!("--target-params has {} ids for {} parameters", params.len(), class.ell())));
            }
            let fixed: Vec<(Var, usize)> = class.parameter_vars().iter().cloned().zip(params).collect();
            let noise: Rate = noise.parse().map_err(|_| CliError::Usage(format!("`{noise}` is not a fraction")))?;
            let universe: Vec<usize> = (0..s.size()).collect();
            let support = all_tuples(&universe, class.k());
            let dist = ExampleDistribution::labelled_by(&s, support, &target, class.instance_vars(), &fixed, noise)?;
            let config = ExperimentConfig { epsilon: *epsilon, delta: *delta, trials: *trials, seed: cli.seed };
            let report = run_generalization_experiment(&s, &class, &dist, &config)?;
            let summary = ExperimentSummary {
                trials: report.rows.len(),
                epsilon: *epsilon,
                delta: *delta,
                noise: noise.to_string(),
                class_size: report.class_size,
                sample_size: report.sample_size,
                best_error: report.best_error.to_string(),
                global_best_error: report.global_best_error.map(|r| r.to_string()),
                success_frequency: report.success_frequency(),
                mean_true_error: report.mean_true_error(),
                mean_training_error: report.mean_training_error(),
                query_counts: report.total_counts().into(),
            };
            match &cli.output {
                Some(p) => {
                    write(p, &report.to_csv())?;
                    print!("{}", json(&summary));
                }
                None => print!("{}\n{}", report.to_csv(), json(&summary)),
            }
            Ok(())
        }
        Command::GenStructure { signature, size, degree } => {
            let sig = load_signature(None, signature.as_deref())?;
            emit(cli, &random_structure(&sig, *size, *degree, cli.seed)?.to_text())
        }
    }
}

/// `dir/stem.<suffix>` for an input `dir/stem.ext`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn learner_inputs(
    cli: &Cli,
    learn: &LearnArgs,
) -> Result<(wagg_core::WeightedStructure, wagg_core::HypothesisClass, wagg_core::TrainingSequence), CliError> {
    let s = load_structure(&learn.structure)?;
    let class = load_class(&learn.class, s.signature(), cli.seed, cli.profile == Profile::Debug)?;
    let t = load_training(&learn.training)?;
    t.validate(class.k(), s.size()).in_file(&learn.training)?;
    Ok((s, class, t))
}

fn record(h: &Hypothesis, training_error: Rate, examples: usize, counts: QueryCounts) -> LearnRecord {
    LearnRecord {
        formula: h.formula.to_string(),
        formula_index: h.formula_index,
        params: h.params.clone(),
        training_error: training_error.to_string(),
        examples,
        query_counts: counts.into(),
    }
}
