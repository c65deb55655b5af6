//! Command-line parsing and configuration resolution.
//!
//! Each setting is taken from the first source that provides it: command-line
//! flag, then `--config` TOML file, then environment, then built-in default.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const ENV_SEED: &str = "SYNCHROLAB_SEED";
pub const ENV_OUTDIR: &str = "SYNCHROLAB_OUTDIR";

pub const DEFAULT_TRIALS: u64 = 1000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_EPSILON: f64 = 0.05;
pub const DEFAULT_OUTDIR: &str = "runs";

#[derive(Debug, Parser)]
#[command(
    name = "synchrolab",
    version,
    about = "Synchronization of random circular automata"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Pair-automaton synchronization test for one mapping
    #[command(name = "sync-check")]
    SyncCheck,
    /// Exact and greedy reset words for one mapping
    #[command(name = "reset-word")]
    ResetWord,
    /// Shortest reset words of Cerny automata
    #[command(name = "cerny")]
    Cerny,
    /// Distance matrix, row statistics and certificate for one mapping
    #[command(name = "matrix")]
    Matrix,
    /// Acyclicity and exact joint law for a set of matrix positions
    #[command(name = "independence")]
    Independence,
    /// Chromatic polynomial of a circulant graph
    #[command(name = "chromatic")]
    Chromatic,
    /// Exhaustive enumeration over all mappings
    #[command(name = "exact")]
    Exact,
    /// Seeded Monte Carlo synchronization estimates
    #[command(name = "mc")]
    Mc,
    /// Row-diversity event frequencies and union bound
    #[command(name = "lemma-row")]
    LemmaRow,
    /// Zero-row event frequencies and moments
    #[command(name = "lemma-zero")]
    LemmaZero,
    /// Exact moments of D and sampled row means
    #[command(name = "moments")]
    Moments,
    /// Chromatic lower bound on the synchronization probability
    #[command(name = "bound-thm22")]
    BoundThm22,
    /// Exact Var[D]/n over a range of n
    #[command(name = "probe-var-d")]
    ProbeVarD,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SyncCheck => "sync-check",
            Command::ResetWord => "reset-word",
            Command::Cerny => "cerny",
            Command::Matrix => "matrix",
            Command::Independence => "independence",
            Command::Chromatic => "chromatic",
            Command::Exact => "exact",
            Command::Mc => "mc",
            Command::LemmaRow => "lemma-row",
            Command::LemmaZero => "lemma-zero",
            Command::Moments => "moments",
            Command::BoundThm22 => "bound-thm22",
            Command::ProbeVarD => "probe-var-d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Number of states
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Comma-separated list of state counts
    #[arg(long = "n-grid", global = true, value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    /// Samples per grid point
    #[arg(long, global = true)]
    pub trials: Option<u64>,
    /// Master seed [env: SYNCHROLAB_SEED]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Row-diversity threshold (defaults to 1 - 1/e - epsilon)
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Zero-row threshold (defaults to 1/2 - epsilon)
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Slack for the event thresholds and bounds
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Data file format
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output root [env: SYNCHROLAB_OUTDIR]
    #[arg(long, global = true)]
    pub outdir: Option<PathBuf>,
    /// Size limit for exhaustive enumeration and exact reset-word search
    #[arg(long = "max-exact-n", global = true)]
    pub max_exact_n: Option<usize>,
    /// Vertex limit for deletion-contraction
    #[arg(long = "max-chromatic-n", global = true)]
    pub max_chromatic_n: Option<usize>,
    /// Worker threads, 0 for all cores
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// TOML file with default settings
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Mapping as comma-separated values b_0,...,b_{n-1}
    #[arg(long, global = true, value_delimiter = ',')]
    pub b: Option<Vec<usize>>,
    /// Matrix positions as i:j pairs, e.g. 1:0,1:1,2:0
    #[arg(long, global = true)]
    pub pairs: Option<String>,
    /// First circulant offset
    #[arg(long, global = true)]
    pub i: Option<usize>,
    /// Second circulant offset
    #[arg(long, global = true)]
    pub j: Option<usize>,
    /// Evaluation point for the chromatic polynomial (defaults to n)
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub eval: Option<i64>,
}

/// Settings accepted in a `--config` file. Keys use the flag names with
/// dashes or underscores.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub n: Option<usize>,
    #[serde(alias = "n_grid")]
    pub n_grid: Option<Vec<usize>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub epsilon: Option<f64>,
    pub format: Option<Format>,
    pub outdir: Option<PathBuf>,
    #[serde(alias = "max_exact_n")]
    pub max_exact_n: Option<usize>,
    #[serde(alias = "max_chromatic_n")]
    pub max_chromatic_n: Option<usize>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))
    }
}

/// Fully resolved settings for one run. Recorded verbatim in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub n: Option<usize>,
    pub n_grid: Option<Vec<usize>>,
    pub trials: u64,
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub format: Format,
    pub outdir: PathBuf,
    pub max_exact_n: Option<usize>,
    pub max_chromatic_n: Option<usize>,
    pub threads: usize,
    pub b: Option<Vec<usize>>,
    pub pairs: Option<String>,
    pub i: Option<usize>,
    pub j: Option<usize>,
    pub eval: Option<i64>,
}

impl RunConfig {
    /// `--n-grid` if given, else `[--n]`.
    pub fn n_values(&self) -> Result<Vec<usize>, CliError> {
        match (&self.n_grid, self.n) {
            (Some(grid), _) => Ok(grid.clone()),
            (None, Some(n)) => Ok(vec![n]),
            (None, None) => Err(CliError::Config(format!(
                "{} needs --n or --n-grid",
                self.command.name()
            ))),
        }
    }

    pub fn require_n(&self) -> Result<usize, CliError> {
        self.n
            .ok_or_else(|| CliError::Config(format!("{} needs --n", self.command.name())))
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.trials == 0 {
            return bad("--trials must be at least 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!(
                "--epsilon must lie in (0, 1), got {}",
                self.epsilon
            ));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("--{name} must lie in (0, 1], got {v}"));
            }
        }
        if self.n == Some(0)
            || self
                .n_grid
                .as_ref()
                .is_some_and(|g| g.is_empty() || g.contains(&0))
        {
            return bad("state counts must be positive".into());
        }
        Ok(())
    }
}

/// Parses `argv` (including the program name) and resolves every setting.
/// `env` looks up environment variables.
pub fn parse_config<I, T>(
    argv: I,
    env: impl Fn(&str) -> Option<String>,
) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(CliError::Usage)?;
    resolve(cli, env)
}

pub fn resolve(cli: Cli, env: impl Fn(&str) -> Option<String>) -> Result<RunConfig, CliError> {
    let f = cli.flags;
    let file = match &f.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let env_seed = env(ENV_SEED)
        .map(|s| {
            s.trim().parse::<u64>().map_err(|_| {
                CliError::Config(format!("{ENV_SEED} must be a decimal u64, got {s:?}"))
            })
        })
        .transpose()?;
    let env_outdir = env(ENV_OUTDIR).map(PathBuf::from);

    let epsilon = f.epsilon.or(file.epsilon).unwrap_or(DEFAULT_EPSILON);
    let cfg = RunConfig {
        command: cli.command,
        n: f.n.or(file.n),
        n_grid: f.n_grid.or(file.n_grid),
        trials: f.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS),
        seed: f.seed.or(file.seed).or(env_seed).unwrap_or(DEFAULT_SEED),
        alpha: f
            .alpha
            .or(file.alpha)
            .unwrap_or(1.0 - (-1.0f64).exp() - epsilon),
        beta: f.beta.or(file.beta).unwrap_or(0.5 - epsilon),
        epsilon,
        format: f.format.or(file.format).unwrap_or(Format::Json),
        outdir: f
            .outdir
            .or(file.outdir)
            .or(env_outdir)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTDIR)),
        max_exact_n: f.max_exact_n.or(file.max_exact_n),
        max_chromatic_n: f.max_chromatic_n.or(file.max_chromatic_n),
        threads: f.threads.or(file.threads).unwrap_or(0),
        b: f.b,
        pairs: f.pairs,
        i: f.i,
        j: f.j,
        eval: f.eval,
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str], env: &[(&str, &str)]) -> Result<RunConfig, CliError> {
        let env: Vec<(String, String)> = env
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        parse_config(
            std::iter::once("synchrolab").chain(args.iter().copied()),
            move |k| env.iter().find(|(key, _)| key == k).map(|(_, v)| v.clone()),
        )
    }

    #[test]
    fn flag_beats_env() {
        let cfg = parse(&["mc", "--n", "8", "--seed", "42"], &[(ENV_SEED, "7")]).unwrap();
        assert_eq!(cfg.seed, 42);
        let cfg = parse(&["mc", "--n", "8"], &[(ENV_SEED, "7")]).unwrap();
        assert_eq!(cfg.seed, 7);
        let cfg = parse(&["mc", "--n", "8"], &[]).unwrap();
        assert_eq!(cfg.seed, DEFAULT_SEED);
    }

    #[test]
    fn config_file_between_flags_and_env() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "seed = 9\ntrials = 50\nn-grid = [4, 5]\n").unwrap();
        let p = path.to_str().unwrap();
        let cfg = parse(&["mc", "--config", p], &[(ENV_SEED, "7")]).unwrap();
        assert_eq!((cfg.seed, cfg.trials), (9, 50));
        assert_eq!(cfg.n_values().unwrap(), vec![4, 5]);
        let cfg = parse(&["mc", "--config", p, "--seed", "3"], &[]).unwrap();
        assert_eq!(cfg.seed, 3);

        std::fs::write(&path, "sed = 9\n").unwrap();
        assert!(matches!(
            parse(&["mc", "--config", p], &[]),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn grid_and_defaults() {
        let cfg = parse(&["lemma-row", "--n-grid", "64,128,256"], &[]).unwrap();
        assert_eq!(cfg.n_values().unwrap(), vec![64, 128, 256]);
        assert!((cfg.alpha - (1.0 - (-1.0f64).exp() - 0.05)).abs() < 1e-15);
        assert_eq!(cfg.beta, 0.45);
        assert_eq!(cfg.format, Format::Json);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            parse(&["mc", "--bogus"], &[]),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            parse(&["mc", "--n", "x"], &[]),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            parse(&["mc", "--trials", "0"], &[]),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            parse(&["mc", "--alpha", "1.5"], &[]),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            parse(&["mc"], &[(ENV_SEED, "abc")]),
            Err(CliError::Config(_))
        ));
        let cfg = parse(&["cerny"], &[]).unwrap();
        assert!(cfg.require_n().is_err());
    }

    #[test]
    fn mapping_and_pairs_flags() {
        let cfg = parse(&["sync-check", "--b", "0,0,2,2"], &[]).unwrap();
        assert_eq!(cfg.b, Some(vec![0, 0, 2, 2]));
        let cfg = parse(&["chromatic", "--n", "6", "--i", "1", "--eval", "-2"], &[]).unwrap();
        assert_eq!(cfg.eval, Some(-2));
    }
}
