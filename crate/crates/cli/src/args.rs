use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use narrowlab_core::aplab::SubsetRule;
use narrowlab_core::{CutoffKind, ExponentPattern, Normalization, ShiftVector};

#[derive(Parser, Debug)]
#[command(name = "narrowlab", version, about = "Experiments on narrow progressions in the primes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a smallest-prime-factor sieve and write it as a binary cache.
    SieveBuild(SieveBuildArgs),
    /// Collision index of a system of linear forms.
    Lindex(LindexArgs),
    /// Print a system of linear forms in interchange format.
    FormsDump(FormsDumpArgs),
    /// Truncated singular series of a shift vector.
    Singular(SingularArgs),
    /// Averages of singular-series weights over a box of shifts.
    Gallagher(GallagherArgs),
    /// Normalization residuals and sieve factors of the cutoff.
    CutoffCheck(CutoffCheckArgs),
    /// Tabulate the prime majorant over Z/N'Z.
    Majorant(MajorantArgs),
    /// Pair correlations of a majorant table.
    Correlate(CorrelateArgs),
    /// Linear-forms average of a weight model over a box.
    Lfc(LfcArgs),
    /// Width threshold of the random model along an α ladder.
    Threshold(ThresholdArgs),
    /// The Λ_D functional of a weight over Z/N'Z.
    LambdaD(LambdaDArgs),
    /// Progressions of primes: narrowness statistics or exact counts.
    Apsearch(ApsearchArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SieveBuild(_) => "sieve-build",
            Command::Lindex(_) => "lindex",
            Command::FormsDump(_) => "forms-dump",
            Command::Singular(_) => "singular",
            Command::Gallagher(_) => "gallagher",
            Command::CutoffCheck(_) => "cutoff-check",
            Command::Majorant(_) => "majorant",
            Command::Correlate(_) => "correlate",
            Command::Lfc(_) => "lfc",
            Command::Threshold(_) => "threshold",
            Command::LambdaD(_) => "lambda-d",
            Command::Apsearch(_) => "apsearch",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::SieveBuild(a) => &a.common,
            Command::Lindex(a) => &a.common,
            Command::FormsDump(a) => &a.common,
            Command::Singular(a) => &a.common,
            Command::Gallagher(a) => &a.common,
            Command::CutoffCheck(a) => &a.common,
            Command::Majorant(a) => &a.common,
            Command::Correlate(a) => &a.common,
            Command::Lfc(a) => &a.common,
            Command::Threshold(a) => &a.common,
            Command::LambdaD(a) => &a.common,
            Command::Apsearch(a) => &a.common,
        }
    }
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// key=value file whose entries act as flags; explicit flags win.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Report file; `.csv` selects CSV, anything else JSON.
    #[arg(long = "report", value_name = "PATH")]
    pub report: Option<PathBuf>,
    /// Print the JSON report on stdout instead of a table.
    #[arg(long)]
    pub json: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Factor sieve cache to load instead of sieving.
    #[arg(long, value_name = "PATH")]
    pub sieve: Option<PathBuf>,
}

/// Accepts `1000003`, `1e7` or `10^7`.
pub fn parse_count(s: &str) -> Result<u64, String> {
    let s = s.trim().replace('_', "");
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let v = match s.split_once('^') {
        Some((b, e)) => {
            let b: f64 = b.parse().map_err(|_| format!("`{s}` is not a count"))?;
            let e: i32 = e.parse().map_err(|_| format!("`{s}` is not a count"))?;
            b.powi(e)
        }
        None => s.parse::<f64>().map_err(|_| format!("`{s}` is not a count"))?,
    };
    if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v < 1.8e19 {
        Ok(v as u64)
    } else {
        Err(format!("`{s}` is not a non-negative integer"))
    }
}

/// A comma-separated list given as one flag value.
#[derive(Clone, Debug, PartialEq)]
pub struct List<T>(pub Vec<T>);

pub fn parse_counts(s: &str) -> Result<List<u64>, String> {
    s.split(',').map(parse_count).collect::<Result<_, _>>().map(List)
}

pub fn parse_reals(s: &str) -> Result<List<f64>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("`{x}` is not a number")))
        .collect::<Result<_, _>>()
        .map(List)
}

pub fn parse_ints(s: &str) -> Result<List<i64>, String> {
    s.split(',')
        .map(|x| x.trim().parse::<i64>().map_err(|_| format!("`{x}` is not an integer")))
        .collect::<Result<_, _>>()
        .map(List)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    First,
    Second,
    Third,
}

/// Where a linear system comes from.
#[derive(Args, Debug, Clone)]
pub struct SystemArgs {
    #[arg(long, value_enum, conflicts_with = "file")]
    pub family: Option<Family>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Distinguished index for the third family.
    #[arg(long)]
    pub j: Option<usize>,
    /// System file, one form per line as `c0; c1 c2 … cd`.
    #[arg(long, value_name = "PATH")]
    pub file: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct SieveBuildArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_parser = parse_count)]
    pub limit: u64,
    /// Cache file (default: `sieve-<limit>.bin` in $NARROWLAB_CACHE_DIR).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct LindexArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_subspaces: usize,
    /// Also run the exhaustive partition search and compare.
    #[arg(long)]
    pub bruteforce: bool,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct FormsDumpArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub system: SystemArgs,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct SingularArgs {
    #[command(flatten)]
    pub common: Common,
    /// Shift vector, e.g. `0,2,6`.
    #[arg(long, allow_hyphen_values = true)]
    pub h: ShiftVector,
    #[arg(long, value_parser = parse_count, default_value = "100000")]
    pub pmax: u64,
    /// Squarefree modulus whose primes are left out.
    #[arg(long = "W", default_value_t = 1)]
    pub big_w: u64,
    /// Constant of the error factor reported alongside.
    #[arg(long = "error-c")]
    pub error_c: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum WeightChoice {
    Singular,
    ErrorFactor,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct GallagherArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "singular")]
    pub weight: WeightChoice,
    /// Constant of the error factor.
    #[arg(long = "error-c", default_value_t = 1.0)]
    pub error_c: f64,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub lo: i64,
    #[arg(long, default_value_t = 500, allow_hyphen_values = true)]
    pub hi: i64,
    /// Ladder of w values; W is the product of primes up to w.
    #[arg(long, value_parser = parse_counts, default_value = "2,3,5,7")]
    pub w: List<u64>,
    #[arg(long, value_parser = parse_count, default_value = "100000")]
    pub pmax: u64,
    /// Sample this many points instead of enumerating the box.
    #[arg(long, value_parser = parse_count)]
    pub samples: Option<u64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ChiChoice {
    Cosine,
    Bump,
    Both,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct CutoffCheckArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "both")]
    pub chi: ChiChoice,
    #[arg(long, default_value = "half-line")]
    pub normalization: Normalization,
    /// Sieve-factor orders to evaluate.
    #[arg(long, value_parser = parse_counts, default_value = "1,2")]
    pub m: List<u64>,
}

/// Parameters of a majorant table built on the fly.
#[derive(Args, Debug, Clone)]
pub struct TableParams {
    /// Prime modulus N'.
    #[arg(long = "N", value_parser = parse_count)]
    pub modulus: Option<u64>,
    #[arg(long, default_value_t = 3)]
    pub w: u64,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    pub b: i64,
    /// R = (W N' + b)^exp; defaults to the exponent tied to --k-forms.
    #[arg(long = "R-exp")]
    pub r_exp: Option<f64>,
    /// Progression length k whose proof exponent sets the default R.
    #[arg(long = "k-forms", default_value_t = 3)]
    pub k_forms: usize,
    #[arg(long, default_value = "cosine")]
    pub chi: CutoffKind,
    #[arg(long, default_value = "half-line")]
    pub normalization: Normalization,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct MajorantArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub table: TableParams,
    /// Binary table output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Also scan all primes for the minorization floor.
    #[arg(long)]
    pub check_floor: bool,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Load this table instead of building one.
    #[arg(long, value_name = "PATH")]
    pub table: Option<PathBuf>,
    #[command(flatten)]
    pub params: TableParams,
    /// Shifts to correlate at.
    #[arg(long, value_parser = parse_ints, default_value = "6", allow_hyphen_values = true)]
    pub h: List<i64>,
    #[arg(long, value_parser = parse_count, default_value = "100000")]
    pub pmax: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    Majorant,
    Random,
    One,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct LfcArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, value_enum, default_value = "majorant")]
    pub model: ModelChoice,
    #[arg(long, value_name = "PATH")]
    pub table: Option<PathBuf>,
    #[command(flatten)]
    pub params: TableParams,
    /// Density of the random model.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Half-width of the box [−S, S]^d.
    #[arg(long = "S", value_parser = parse_count)]
    pub width: u64,
    /// Exponent pattern such as `1,0,1`; all ones by default.
    #[arg(long)]
    pub e: Option<ExponentPattern>,
    #[arg(long, value_parser = parse_count, default_value = "100000")]
    pub samples: u64,
    /// Compute the exact average as well, if it fits under the cap.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, value_parser = parse_count, default_value = "10000000")]
    pub exact_cap: u64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, value_parser = parse_reals, default_value = "0.2,0.1,0.05")]
    pub alphas: List<f64>,
    #[arg(long, default_value_t = 2)]
    pub max_codim: usize,
    #[arg(long, default_value_t = 200_000)]
    pub max_flats: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum LambdaWeight {
    /// log N' on primes in [√N', N').
    Primes,
    Ones,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct LambdaDArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long = "N", value_parser = parse_count)]
    pub modulus: u64,
    /// Difference range; defaults to ⌈(log N')^{L_k}⌉.
    #[arg(long = "D", value_parser = parse_count)]
    pub d_max: Option<u64>,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "primes")]
    pub weight: LambdaWeight,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ApMode {
    Narrowness,
    Count,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
pub struct ApsearchArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "narrowness")]
    pub mode: ApMode,
    /// Upper end N for count mode; ladder default in narrowness mode.
    #[arg(long = "N", value_parser = parse_count)]
    pub n: Option<u64>,
    #[arg(long, value_parser = parse_counts)]
    pub ladder: Option<List<u64>>,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    /// Common difference (count mode).
    #[arg(long, value_parser = parse_count)]
    pub d: Option<u64>,
    /// Congruence filter such as `1,2@7`, or `all`.
    #[arg(long, default_value = "all")]
    pub subset: SubsetRule,
    #[arg(long, value_parser = parse_count)]
    pub d_cap: Option<u64>,
    #[arg(long, value_parser = parse_count, default_value = "1000000")]
    pub pmax: u64,
    /// Report file for this run (same as --report).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definitions_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn counts() {
        assert_eq!(parse_count("1000003"), Ok(1_000_003));
        assert_eq!(parse_count("1e7"), Ok(10_000_000));
        assert_eq!(parse_count("10^5"), Ok(100_000));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
        assert_eq!(parse_counts("1e5,1e6"), Ok(List(vec![100_000, 1_000_000])));
    }
}
