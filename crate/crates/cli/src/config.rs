//! Command-line and config-file parameters.
//!
//! Every experiment parameter is optional at both levels. A flag given on the
//! command line wins over the same key in the config file's section for that
//! subcommand; what is still unset falls back to the experiment's default.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "holochaos", version, about = "Monte Carlo and exact experiments on holomorphic multiplicative chaos")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Root seed; replicate i uses split(seed, i).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Monte Carlo replicates per grid point.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Two-column plot file.
    #[arg(long, global = true)]
    pub plot: Option<PathBuf>,
    /// Evaluate the experiment's checks and exit with status 4 if any fails.
    #[arg(long, global = true)]
    pub check: bool,
    /// TOML config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

macro_rules! params {
    ($(#[$sm:meta])* $name:ident { $( $(#[$fm:meta])* $field:ident : $ty:ty ),* $(,)? }) => {
        $(#[$sm])*
        #[derive(Debug, Clone, Default, Args, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            $( $(#[$fm])* pub $field: Option<$ty>, )*
        }

        impl $name {
            /// Fills fields not given on the command line from `file`.
            pub fn or(self, file: Option<Self>) -> Self {
                let file = file.unwrap_or_default();
                Self { $( $field: self.$field.or(file.$field), )* }
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Relaxed,
    Recurrence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffsetKind {
    Zero,
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    G,
    GGrid,
    L,
    TwoWalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CircleMethod {
    Direct,
    Parseval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FfMode {
    Moment,
    Counts,
    Identity,
}

params!(
    /// Coefficients A(0..N) of one draw.
    SampleParams {
        #[arg(long = "N")]
        #[serde(rename = "N")]
        n: usize,
        /// Truncation K (default N).
        #[arg(long = "K")]
        #[serde(rename = "K")]
        k: f64,
        #[arg(long, value_enum)]
        engine: Engine,
    }
);

params!(
    /// Estimates of E|A(N)|^{2q}.
    MomentParams {
        #[arg(long = "N", value_delimiter = ',')]
        #[serde(rename = "N")]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        q: Vec<f64>,
    }
);

params!(
    /// E|A(N)| along a grid of N.
    DecayParams {
        #[arg(long = "N", value_delimiter = ',')]
        #[serde(rename = "N")]
        n: Vec<usize>,
        /// Replicates per grid point (one value, or one per N).
        #[arg(long, value_delimiter = ',')]
        samples_per_n: Vec<usize>,
        /// Smallest N entering the band check.
        #[arg(long = "band-min-N")]
        #[serde(rename = "band_min_N")]
        band_min_n: usize,
    }
);

params!(
    /// Exact total mass sum over partitions of N.
    MassParams {
        #[arg(long = "N-max")]
        #[serde(rename = "N_max")]
        n_max: usize,
    }
);

params!(
    /// Probability a Gaussian walk stays below a + h(j).
    BallotParams {
        #[arg(long, value_delimiter = ',')]
        a: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long, value_enum)]
        offset: OffsetKind,
        /// Step variance.
        #[arg(long)]
        variance: f64,
    }
);

params!(
    /// Barrier events and the two-walk expectation.
    EventParams {
        #[arg(long, value_enum)]
        kind: EventKind,
        #[arg(long = "K")]
        #[serde(rename = "K")]
        k: f64,
        #[arg(long)]
        r: f64,
        /// Angle for the two-walk expectation.
        #[arg(long)]
        theta: f64,
        /// Barrier heights (levels B for two-walk).
        #[arg(long = "A", value_delimiter = ',', allow_hyphen_values = true)]
        #[serde(rename = "A")]
        a: Vec<f64>,
    }
);

params!(
    /// Both sides of the change-of-measure identity.
    ComCheckParams {
        #[arg(long = "K")]
        #[serde(rename = "K")]
        k: f64,
        #[arg(long)]
        r: f64,
        /// Barrier height; `inf` removes the barrier.
        #[arg(long = "A")]
        #[serde(rename = "A")]
        a: f64,
        #[arg(long)]
        samples_left: usize,
        #[arg(long)]
        samples_right: usize,
    }
);

params!(
    /// E|F_K(r e^{i theta})|^2 against exp(sum r^{2k}/k).
    CircleParams {
        #[arg(long = "K")]
        #[serde(rename = "K")]
        k: f64,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long, value_enum)]
        method: CircleMethod,
        /// Truncation degree for the Parseval route.
        #[arg(long)]
        degree: usize,
        /// Allowed distance from the closed form, in standard errors.
        #[arg(long)]
        sigmas: f64,
    }
);

params!(
    /// Block variances and covariances.
    BlocksParams {
        #[arg(long, value_delimiter = ',')]
        r: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        theta: Vec<f64>,
        #[arg(long = "K")]
        #[serde(rename = "K")]
        k: f64,
        /// Also list blocks beyond log K_r, up to this index.
        #[arg(long)]
        m_max: usize,
    }
);

params!(
    /// Bivariate normal density against its dominating density.
    BivariateParamsArgs {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        rho: Vec<f64>,
        /// Points per axis of the domination grid.
        #[arg(long)]
        grid: usize,
        /// Points per axis of the normalization quadrature.
        #[arg(long)]
        norm_grid: usize,
        #[arg(long, allow_hyphen_values = true)]
        mu1: f64,
        #[arg(long, allow_hyphen_values = true)]
        mu2: f64,
        #[arg(long)]
        var1: f64,
        #[arg(long)]
        var2: f64,
    }
);

params!(
    /// Partial sums of a Steinhaus random multiplicative function.
    SteinhausParams {
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
    }
);

params!(
    /// The function-field model over F_q[t].
    FfParams {
        #[arg(long)]
        q: u64,
        #[arg(long = "N")]
        #[serde(rename = "N")]
        n: u32,
        #[arg(long, value_enum)]
        mode: FfMode,
        /// In counts mode, also count by trial division.
        #[arg(long)]
        brute: bool,
    }
);

params!(
    /// Cross-checks between independent computations of the same quantity.
    SelftestParams {
        /// Degree for the exp-engine comparison.
        #[arg(long = "N")]
        #[serde(rename = "N")]
        n: usize,
        /// Random draws per comparison.
        #[arg(long)]
        trials: usize,
        #[arg(long = "partition-N-max")]
        #[serde(rename = "partition_N_max")]
        partition_n_max: usize,
        #[arg(long = "largest-part-N-max")]
        #[serde(rename = "largest_part_N_max")]
        largest_part_n_max: usize,
        #[arg(long = "J-max")]
        #[serde(rename = "J_max")]
        j_max: usize,
    }
);

#[derive(Debug, Subcommand)]
pub enum Command {
    Sample(SampleParams),
    Moment(MomentParams),
    Decay(DecayParams),
    Mass(MassParams),
    Ballot(BallotParams),
    Event(EventParams),
    #[command(name = "com-check")]
    ComCheck(ComCheckParams),
    Circle(CircleParams),
    Blocks(BlocksParams),
    Bivariate(BivariateParamsArgs),
    Steinhaus(SteinhausParams),
    Ff(FfParams),
    #[command(name = "series-selftest")]
    SeriesSelftest(SelftestParams),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sample(_) => "sample",
            Command::Moment(_) => "moment",
            Command::Decay(_) => "decay",
            Command::Mass(_) => "mass",
            Command::Ballot(_) => "ballot",
            Command::Event(_) => "event",
            Command::ComCheck(_) => "com-check",
            Command::Circle(_) => "circle",
            Command::Blocks(_) => "blocks",
            Command::Bivariate(_) => "bivariate",
            Command::Steinhaus(_) => "steinhaus",
            Command::Ff(_) => "ff",
            Command::SeriesSelftest(_) => "series-selftest",
        }
    }

    /// Merges the config file's section for this subcommand under the flags.
    pub fn with_file(self, file: &mut ConfigFile) -> Self {
        match self {
            Command::Sample(p) => Command::Sample(p.or(file.sample.take())),
            Command::Moment(p) => Command::Moment(p.or(file.moment.take())),
            Command::Decay(p) => Command::Decay(p.or(file.decay.take())),
            Command::Mass(p) => Command::Mass(p.or(file.mass.take())),
            Command::Ballot(p) => Command::Ballot(p.or(file.ballot.take())),
            Command::Event(p) => Command::Event(p.or(file.event.take())),
            Command::ComCheck(p) => Command::ComCheck(p.or(file.com_check.take())),
            Command::Circle(p) => Command::Circle(p.or(file.circle.take())),
            Command::Blocks(p) => Command::Blocks(p.or(file.blocks.take())),
            Command::Bivariate(p) => Command::Bivariate(p.or(file.bivariate.take())),
            Command::Steinhaus(p) => Command::Steinhaus(p.or(file.steinhaus.take())),
            Command::Ff(p) => Command::Ff(p.or(file.ff.take())),
            Command::SeriesSelftest(p) => Command::SeriesSelftest(p.or(file.series_selftest.take())),
        }
    }
}

/// Contents of a `--config` TOML file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// When present, must name the subcommand being run.
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub plot: Option<PathBuf>,
    pub check: Option<bool>,
    pub sample: Option<SampleParams>,
    pub moment: Option<MomentParams>,
    pub decay: Option<DecayParams>,
    pub mass: Option<MassParams>,
    pub ballot: Option<BallotParams>,
    pub event: Option<EventParams>,
    #[serde(rename = "com-check")]
    pub com_check: Option<ComCheckParams>,
    pub circle: Option<CircleParams>,
    pub blocks: Option<BlocksParams>,
    pub bivariate: Option<BivariateParamsArgs>,
    pub steinhaus: Option<SteinhausParams>,
    pub ff: Option<FfParams>,
    #[serde(rename = "series-selftest")]
    pub series_selftest: Option<SelftestParams>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Parse errors name the offending line and column.
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

/// Run-wide settings after merging flags, config file and defaults.
#[derive(Debug, Clone)]
pub struct Settings {
    pub seed: u64,
    pub samples: Option<usize>,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub plot: Option<PathBuf>,
    pub check: bool,
    pub config: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = 0;

impl Settings {
    pub fn resolve(cli: CommonArgs, file: &ConfigFile) -> Self {
        Self {
            seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            samples: cli.samples.or(file.samples),
            workers: cli.workers.or(file.workers).unwrap_or(0),
            out: cli.out.or_else(|| file.out.clone()),
            format: cli.format.or(file.format).unwrap_or_default(),
            plot: cli.plot.or_else(|| file.plot.clone()),
            check: cli.check || file.check.unwrap_or(false),
            config: cli.config,
        }
    }
}
