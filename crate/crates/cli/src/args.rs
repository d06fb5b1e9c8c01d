use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "transprod", version, about = "Transfinite sums, products and product integrals")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Target tolerance.
    #[arg(long, global = true, default_value_t = 1e-8, value_parser = positive)]
    pub tol: f64,
    /// Maximum refinement levels.
    #[arg(long, global = true, default_value_t = 16, value_parser = clap::value_parser!(u32).range(1..))]
    pub levels: u32,
    /// Generator evaluation budget.
    #[arg(long, global = true, env = "PRODINT_BUDGET", default_value_t = 1_000_000)]
    pub budget: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Omit the timestamp so identical runs produce identical bytes.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Built-in examples.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
    /// Transfinite sum of a family, or ∫A for a step mapping.
    Sum(InputArg),
    /// Transfinite product of a family, or ∏(I + A dt) for a step mapping.
    Prod(InputArg),
    /// Riemann product integral by uniform refinement.
    Prodint {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, value_enum, default_value_t = TagArg::Left)]
        tag: TagArg,
    },
    /// Stieltjes product integral diagnostics.
    Stieltjes {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, value_enum, default_value_t = Mode::Ks)]
        mode: Mode,
        /// Exponent for --mode pvar.
        #[arg(long, default_value_t = 2.0, value_parser = positive)]
        p: f64,
        /// ε for --mode scalar.
        #[arg(long, default_value_t = 0.5, value_parser = positive)]
        eps: f64,
        /// Limit-element rule for --mode ks.
        #[arg(long, value_enum, default_value_t = RuleArg::Continuous)]
        rule: RuleArg,
    },
    /// Parallel transport along a surface curve.
    Transport {
        /// sphere:R or cylinder:R.
        #[arg(long)]
        surface: Option<String>,
        /// latitude:THETA, helix:PITCH, cube-corner or tetrahedron-corner.
        #[arg(long)]
        path: String,
    },
    /// Generalized ODE built from a mapping.
    Gode {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, value_enum, default_value_t = FormArg::Vdef)]
        form: FormArg,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExamplesAction {
    /// Names, descriptions and expected closed forms.
    List {
        /// Substring filter on names and descriptions.
        filter: Option<String>,
    },
    Run { name: String },
}

#[derive(Debug, Args)]
pub struct InputArg {
    /// Catalog name, JSON file, or inline JSON description.
    #[arg(long, visible_alias = "mapping")]
    pub input: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TagArg {
    Left,
    Right,
    Mid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Ks,
    Rs,
    Pvar,
    Scalar,
    Subst,
    Idem,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RuleArg {
    Continuous,
    General,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormArg {
    Linear,
    Stieltjes,
    Vdef,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(_) => Err("must be a positive number".into()),
        Err(e) => Err(e.to_string()),
    }
}
