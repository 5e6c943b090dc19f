//! `wagg`: command-line front end for weighted-aggregation logic.
//!
//! Every command is deterministic: all randomness derives from `--seed`, and reports list
//! tuples, pairs, leaves and symbols in a fixed order. Failures exit with status 1 and print
//! `<ErrorName>: <message>` on standard error; a rejecting exact learner exits with status 3.

mod commands;
mod error;
mod inputs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wagg_core::locality::{Caps, DEFAULT_MAX_PAIRS, DEFAULT_MAX_WIDTH};

use crate::inputs::ExprSource;

#[derive(Parser, Debug)]
#[command(name = "wagg", version, about = "First-order logic with weight aggregation over weighted structures")]
pub struct Cli {
    /// Seed for every pseudo-random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Cap on the number of pairs in intermediate decompositions.
    #[arg(long = "caps.pairs", global = true, default_value_t = DEFAULT_MAX_PAIRS)]
    pub caps_pairs: usize,
    /// Cap on the aggregation width handled by the cl-term construction.
    #[arg(long = "caps.width", global = true, default_value_t = DEFAULT_MAX_WIDTH)]
    pub caps_width: usize,
    /// `debug` runs seeded semantic spot checks after transformations; `release` skips them.
    #[arg(long, global = true, value_enum, default_value_t = Profile::Debug)]
    pub profile: Profile,
    /// Write the main artifact here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Debug,
    Release,
}

impl Cli {
    pub fn caps(&self) -> Caps {
        Caps { max_pairs: self.caps_pairs, max_width: self.caps_width, validate: self.profile == Profile::Debug }
    }
}

/// An expression given as a file or inline.
#[derive(Args, Debug)]
pub struct ExprArgs {
    /// File holding one expression in prefix syntax.
    #[arg(long, conflicts_with = "expr")]
    pub formula: Option<PathBuf>,
    /// The expression itself.
    #[arg(long)]
    pub expr: Option<String>,
}

impl ExprArgs {
    pub fn source(&self) -> ExprSource {
        ExprSource { path: self.formula.clone(), text: self.expr.clone() }
    }
}

/// Where the signature comes from (default: the standard test signature).
#[derive(Args, Debug)]
pub struct SigArgs {
    /// Structure file whose signature is used.
    #[arg(long)]
    pub structure: Option<PathBuf>,
    /// File holding only a signature header.
    #[arg(long, conflicts_with = "structure")]
    pub signature: Option<PathBuf>,
}

/// Inputs shared by the learners.
#[derive(Args, Debug)]
pub struct LearnArgs {
    #[arg(long)]
    pub structure: PathBuf,
    /// Hypothesis-class file.
    #[arg(long)]
    pub class: PathBuf,
    /// Training CSV: one example per line, element ids then a 0/1 label.
    #[arg(long)]
    pub training: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate an expression at one tuple, or at every tuple of its free variables.
    Eval {
        #[arg(long)]
        structure: PathBuf,
        #[command(flatten)]
        expr: ExprArgs,
        /// Comma-separated element ids for the free variables.
        #[arg(long)]
        tuple: Option<String>,
        /// Comma-separated order of the free variables (default: order of appearance).
        #[arg(long)]
        vars: Option<String>,
    },
    /// Print free variables, quantifier rank, aggregation depth and fragment.
    Analyze {
        #[command(flatten)]
        sig: SigArgs,
        #[command(flatten)]
        expr: ExprArgs,
    },
    /// Relativise a formula to the r-ball around anchor variables.
    Localize {
        #[command(flatten)]
        sig: SigArgs,
        #[command(flatten)]
        expr: ExprArgs,
        #[arg(long)]
        radius: usize,
        /// Comma-separated anchor variables.
        #[arg(long)]
        anchors: String,
    },
    /// Feferman–Vaught decomposition into pairs over a left and a right variable block.
    Fv {
        #[command(flatten)]
        sig: SigArgs,
        #[command(flatten)]
        expr: ExprArgs,
        /// Comma-separated left variables.
        #[arg(long, default_value = "")]
        left: String,
        /// Comma-separated right variables.
        #[arg(long, default_value = "")]
        right: String,
        /// Decompose for far-apart tuples in a single structure at this locality radius.
        #[arg(long)]
        radius: Option<usize>,
        /// Refine the pairs so that the left components are mutually exclusive.
        #[arg(long)]
        exclusive: bool,
    },
    /// Gaifman normal form of a formula without aggregation terms.
    Gaifman {
        #[command(flatten)]
        sig: SigArgs,
        #[command(flatten)]
        expr: ExprArgs,
    },
    /// Layers of defined symbols and the final local formula.
    ClDecompose {
        #[command(flatten)]
        sig: SigArgs,
        #[command(flatten)]
        expr: ExprArgs,
    },
    /// Expand a structure by the symbols of a cl-decomposition.
    Expand {
        #[arg(long)]
        structure: PathBuf,
        #[command(flatten)]
        expr: ExprArgs,
    },
    /// Consistent learner: first hypothesis with training error 0, or rejection.
    LearnExact {
        #[command(flatten)]
        learn: LearnArgs,
    },
    /// Empirical risk minimiser over the searched parameter grid.
    LearnPac {
        #[command(flatten)]
        learn: LearnArgs,
    },
    /// Repeated ERM runs on samples from a labelled distribution.
    Experiment {
        #[arg(long)]
        structure: PathBuf,
        /// Hypothesis-class file.
        #[arg(long)]
        class: PathBuf,
        /// Target formula over the class variables.
        #[command(flatten)]
        target: ExprArgs,
        /// Comma-separated element ids bound to the class parameter variables in the target.
        #[arg(long, default_value = "")]
        target_params: String,
        /// Label-flip probability as a fraction, e.g. `1/2`.
        #[arg(long, default_value = "0")]
        noise: String,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
    /// Seeded random bounded-degree structure.
    GenStructure {
        /// Signature header file (default: the standard test signature).
        #[arg(long)]
        signature: Option<PathBuf>,
        #[arg(long)]
        size: usize,
        /// Bound on the Gaifman degree.
        #[arg(long, default_value_t = 2)]
        degree: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}: {e}", e.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
