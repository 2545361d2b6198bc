use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "bankruin", version, about = "Bank failure analytics: features, prediction, receiverships")]
pub struct Cli {
    /// Worker threads (defaults to available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Omit the generated_at field from JSON outputs.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate and normalize a call-report panel.
    Ingest(IngestArgs),
    /// Build fundamentals, growth quintiles, controls and failure labels.
    Features(FeaturesArgs),
    /// Event-time dynamics of an outcome before failure.
    EventStudy(EventStudyArgs),
    /// Failure-prediction models and classification metrics.
    #[command(subcommand)]
    Predict(PredictCommand),
    /// Aggregate predicted failure rate and its regression on realized rates.
    Aggregate(AggregateArgs),
    /// Receivership analyses.
    #[command(subcommand)]
    Receivership(ReceivershipCommand),
    /// Write a seeded synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DelimiterArg {
    Comma,
    Tab,
}

impl From<DelimiterArg> for bankruin::panel::Delimiter {
    fn from(d: DelimiterArg) -> Self {
        match d {
            DelimiterArg::Comma => bankruin::panel::Delimiter::Comma,
            DelimiterArg::Tab => bankruin::panel::Delimiter::Tab,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EraArg {
    Historical,
    Modern,
}

impl From<EraArg> for bankruin::panel::Era {
    fn from(e: EraArg) -> Self {
        match e {
            EraArg::Historical => bankruin::panel::Era::Historical,
            EraArg::Modern => bankruin::panel::Era::Modern,
        }
    }
}

#[derive(Debug, Args)]
pub struct PanelArgs {
    /// Call-report panel file.
    #[arg(long)]
    pub panel: PathBuf,
    /// JSON column mapping from canonical field names to file headers.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "comma")]
    pub delimiter: DelimiterArg,
}

#[derive(Debug, Args)]
pub struct FailureArgs {
    /// Failure events (defaults to failures.csv next to the panel).
    #[arg(long)]
    pub failures: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    /// Abort on the first malformed row instead of rejecting it.
    #[arg(long)]
    pub strict: bool,
    /// First admissible calendar year.
    #[arg(long, requires = "year_max")]
    pub year_min: Option<i32>,
    /// Last admissible calendar year.
    #[arg(long, requires = "year_min")]
    pub year_max: Option<i32>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    #[command(flatten)]
    pub failures: FailureArgs,
    #[arg(long, value_enum, default_value = "historical")]
    pub era: EraArg,
    /// Failure horizons in years.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub horizons: Vec<u32>,
    /// Drop banks younger than this many years (0 keeps all).
    #[arg(long, default_value_t = 3)]
    pub min_age: i32,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TransformArg {
    Level,
    Log,
    LogReal,
}

#[derive(Debug, Args)]
pub struct EventStudyArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    #[command(flatten)]
    pub failures: FailureArgs,
    /// Panel column or feature to study.
    #[arg(long)]
    pub outcome: String,
    #[arg(long, value_enum, default_value = "level")]
    pub transform: TransformArg,
    /// Event window in years, e.g. -10,0; the first value is the benchmark.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true, default_value = "-10,0")]
    pub window: (i32, i32),
    #[arg(long, default_value_t = 2)]
    pub bandwidth: usize,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[command(flatten)]
    pub panel: PanelArgs,
    #[command(flatten)]
    pub failures: FailureArgs,
    #[arg(long, value_enum, default_value = "historical")]
    pub era: EraArg,
    /// Model specification JSON.
    #[arg(long)]
    pub spec: PathBuf,
    /// Failure horizon in years.
    #[arg(long)]
    pub horizon: u32,
    /// Drop banks younger than this many years (0 keeps all).
    #[arg(long, default_value_t = 3)]
    pub min_age: i32,
    /// Cutoffs for the TPR/FPR table.
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.02,0.05,0.1,0.2")]
    pub cutoffs: Vec<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum PredictCommand {
    /// Fit on the full sample and score in sample.
    Fit(ModelArgs),
    /// Expanding-window out-of-sample backtest.
    Backtest {
        #[command(flatten)]
        model: ModelArgs,
        /// Years of data before the first scored year.
        #[arg(long, default_value_t = 10)]
        train_years: u32,
    },
    /// Metrics for an existing predictions file.
    Metrics {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.01,0.02,0.05,0.1,0.2")]
        cutoffs: Vec<f64>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum WeightArg {
    Equal,
    AssetShare,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DenominatorArg {
    PriorYearFilers,
    CurrentYearBanks,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// Out-of-sample predictions written by `predict backtest`.
    #[arg(long)]
    pub predictions: PathBuf,
    #[command(flatten)]
    pub panel: PanelArgs,
    #[command(flatten)]
    pub failures: FailureArgs,
    #[arg(long, value_enum, default_value = "equal")]
    pub weights: WeightArg,
    #[arg(long, value_enum, default_value = "prior-year-filers")]
    pub denominator: DenominatorArg,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Baseline,
    WithDoubleLiability,
    DepositsAtSuspension,
}

impl From<VariantArg> for bankruin::receivership::SolvencyVariant {
    fn from(v: VariantArg) -> Self {
        use bankruin::receivership::SolvencyVariant as S;
        match v {
            VariantArg::Baseline => S::Baseline,
            VariantArg::WithDoubleLiability => S::WithDoubleLiability,
            VariantArg::DepositsAtSuspension => S::DepositsAtSuspensionDenominator,
        }
    }
}

#[derive(Debug, Args)]
pub struct RecordArgs {
    /// Receivership records file.
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long, value_enum, default_value = "comma")]
    pub delimiter: DelimiterArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RunFilterArg {
    All,
    RunOnly,
    NoRunOnly,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum UtilityArg {
    RiskNeutral,
    Log,
    Crra,
}

#[derive(Debug, Subcommand)]
pub enum ReceivershipCommand {
    /// Recovery rates, leverage, depositor losses and asset quality.
    Recovery {
        #[command(flatten)]
        records: RecordArgs,
        #[arg(long, value_enum, default_value = "baseline")]
        variant: VariantArg,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Share of fundamentally insolvent banks over a (rho, v) grid.
    Grid {
        #[command(flatten)]
        records: RecordArgs,
        #[arg(long, value_delimiter = ',', default_value = "0,0.05,0.1,0.15,0.2,0.25,0.3")]
        rho: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0,0.05,0.1,0.15,0.2")]
        v: Vec<f64>,
        #[arg(long, value_enum, default_value = "all")]
        filter: RunFilterArg,
        #[arg(long, value_enum, default_value = "baseline")]
        variant: VariantArg,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Classify OCC causes of failure.
    Causes {
        #[command(flatten)]
        records: RecordArgs,
        /// JSON array of {pattern, category} rules in precedence order.
        #[arg(long)]
        mapping: Option<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Required excess return on deposits.
    ExcessReturn {
        /// Failure probabilities.
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        /// Depositor loss rates given failure.
        #[arg(long, value_delimiter = ',', required = true)]
        loss: Vec<f64>,
        /// Risk-free rate.
        #[arg(long, default_value_t = 0.0)]
        r: f64,
        #[arg(long, value_enum, default_value = "risk-neutral")]
        utility: UtilityArg,
        /// Relative risk aversion for CRRA utility.
        #[arg(long, required_if_eq("utility", "crra"))]
        gamma: Option<f64>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Seed (overrides the config file; 0 when neither is given).
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON generator configuration; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Concurrent bank slots; a failed bank is replaced by an entrant.
    #[arg(long)]
    pub n_banks: Option<usize>,
    /// Years simulated per slot.
    #[arg(long)]
    pub n_years: Option<usize>,
    #[arg(long)]
    pub start_year: Option<i32>,
    /// Call-report layout of the generated panel.
    #[arg(long, value_enum)]
    pub era: Option<EraArg>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn parse_window(s: &str) -> Result<(i32, i32), String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<i32>().map_err(|e| format!("`{v}`: {e}"));
    Ok((parse(lo)?, parse(hi)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    #[test]
    fn window_parses_signed_pairs() {
        assert_eq!(parse_window("-10,0"), Ok((-10, 0)));
        assert_eq!(parse_window(" -3 , 2"), Ok((-3, 2)));
        assert!(parse_window("-3").is_err());
        assert!(parse_window("a,0").is_err());
    }

    #[test]
    fn excess_return_accepts_crra_with_gamma() {
        let cli = Cli::try_parse_from(["bankruin", "receivership", "excess-return", "--p", "0.1", "--loss", "0.2"]).unwrap();
        assert!(!cli.no_timestamp);
        assert!(Cli::try_parse_from([
            "bankruin", "receivership", "excess-return", "--p", "0.1", "--loss", "0.2", "--utility", "crra", "--gamma", "2"
        ])
        .is_ok());
    }
}
