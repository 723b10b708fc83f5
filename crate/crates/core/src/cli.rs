//! `encctl` command-line front end.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 3 when a
//! computation fails. Diagnostics go to standard error.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::cryptoloop::{run_encrypted_loop, LoopConfig, ScalingFactor};
use crate::h2syn;
use crate::lsattack::{self, MonteCarloTable};
use crate::plantsim::PlantModel;
use crate::seclevel::{self, SecurityReport, SecuritySpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;

const DEFAULT_CRYPTO_HORIZON: usize = 200;

#[derive(Parser, Debug)]
#[command(
    name = "encctl",
    version,
    about = "Security-optimal encrypted control design"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Synthesize F* and size N*, λ*, k*; prints a JSON report.
    Design {
        #[arg(long)]
        config: PathBuf,
    },
    /// Monte Carlo identification attack; writes trials.csv and summary.csv.
    AttackSim {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Smallest GNFS key length for a security parameter.
    Keylen {
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..=100_000))]
        lambda: u32,
    },
    /// Encrypted closed loop against its plaintext twin; prints a JSON report.
    Encdemo {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub plant: PlantModel,
    pub security: SecuritySpec,
    pub attack: AttackConfig,
    pub crypto: CryptoConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackConfig {
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CryptoConfig {
    pub key_length_bits: u64,
    pub delta_scale_log2: i32,
    #[serde(default = "default_crypto_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_crypto_horizon() -> usize {
    DEFAULT_CRYPTO_HORIZON
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("invalid config: {e}"))
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text =
            fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Self::parse(&text)
    }
}

/// `design` output: the gain followed by the security report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    /// F* in row-major order.
    pub f_star: Vec<f64>,
    #[serde(flatten)]
    pub report: SecurityReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncdemoReport {
    pub max_deviation: f64,
    pub horizon: usize,
    pub key_length: u64,
    pub epochs_rotated: u64,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn compute(err: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_COMPUTE,
            message: err.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(text) => {
            if out.write_all(text.as_bytes()).is_err() {
                return EXIT_COMPUTE;
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "encctl: {}", e.message);
            e.code
        }
    }
}

/// Runs a parsed command and returns what it prints on standard output.
pub fn execute(command: &Command) -> CliResult<String> {
    match command {
        Command::Design { config } => {
            let cfg = ConfigFile::load(config).map_err(CliError::usage)?;
            let report = cmd_design(&cfg)?;
            Ok(to_json_line(&report))
        }
        Command::AttackSim { config, out, seed } => {
            let cfg = ConfigFile::load(config).map_err(CliError::usage)?;
            let table = cmd_attack_sim(&cfg, *seed)?;
            write_attack_csvs(&table, out)?;
            Ok(format!(
                "{}\n{}\n",
                out.join("trials.csv").display(),
                out.join("summary.csv").display()
            ))
        }
        Command::Keylen { lambda } => Ok(format!("{}\n", cmd_keylen(*lambda)?)),
        Command::Encdemo { config, seed } => {
            let cfg = ConfigFile::load(config).map_err(CliError::usage)?;
            let report = cmd_encdemo(&cfg, *seed)?;
            Ok(to_json_line(&report))
        }
    }
}

fn to_json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn cmd_design(cfg: &ConfigFile) -> CliResult<DesignReport> {
    let design = seclevel::design_pipeline(&cfg.plant, &cfg.security).map_err(CliError::compute)?;
    Ok(DesignReport {
        f_star: design.synthesis.gain.matrix().as_slice().to_vec(),
        report: design.report,
    })
}

pub fn cmd_attack_sim(cfg: &ConfigFile, seed: Option<u64>) -> CliResult<MonteCarloTable> {
    let synthesis = h2syn::synthesize(&cfg.plant).map_err(CliError::compute)?;
    let seed = seed.unwrap_or(cfg.attack.seed);
    lsattack::monte_carlo(
        &cfg.plant,
        &synthesis.gain,
        &cfg.attack.sizes,
        cfg.attack.trials,
        seed,
    )
    .map_err(CliError::compute)
}

pub fn cmd_keylen(lambda: u32) -> CliResult<u64> {
    seclevel::opt_key_length(lambda).map_err(|e| CliError::usage(e.to_string()))
}

pub fn cmd_encdemo(cfg: &ConfigFile, seed: Option<u64>) -> CliResult<EncdemoReport> {
    let scale = ScalingFactor::from_log2(cfg.crypto.delta_scale_log2)
        .map_err(|e| CliError::usage(e.to_string()))?;
    let synthesis = h2syn::synthesize(&cfg.plant).map_err(CliError::compute)?;
    let loop_cfg = LoopConfig {
        horizon: cfg.crypto.horizon,
        key_bits: cfg.crypto.key_length_bits,
        scale,
        seed: seed.unwrap_or(cfg.crypto.seed),
        initial_state: None,
    };
    let report =
        run_encrypted_loop(&cfg.plant, &synthesis.gain, &loop_cfg).map_err(CliError::compute)?;
    Ok(EncdemoReport {
        max_deviation: report.max_deviation,
        horizon: report.horizon,
        key_length: report.key_length,
        epochs_rotated: report.epochs_rotated,
    })
}

fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "NaN".to_string()
    }
}

/// `trials.csv` contents; failed trials are written as NaN.
pub fn trials_csv(table: &MonteCarloTable) -> String {
    let mut s = String::from("N,trial,epsilon\n");
    for r in &table.trials {
        let eps = r.epsilon.as_ref().map(|v| *v).unwrap_or(f64::NAN);
        let _ = writeln!(s, "{},{},{}", r.n_samples, r.trial, fmt_float(eps));
    }
    s
}

pub fn summary_csv(table: &MonteCarloTable) -> String {
    let mut s = String::from("N,mean_epsilon,gamma\n");
    for r in &table.summary {
        let _ = writeln!(
            s,
            "{},{},{}",
            r.n_samples,
            fmt_float(r.mean_epsilon),
            fmt_float(r.gamma)
        );
    }
    s
}

fn write_attack_csvs(table: &MonteCarloTable, dir: &Path) -> CliResult<()> {
    let io =
        |e: std::io::Error| CliError::compute(format!("cannot write to {}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    fs::write(dir.join("trials.csv"), trials_csv(table)).map_err(io)?;
    fs::write(dir.join("summary.csv"), summary_csv(table)).map_err(io)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"{
        "plant": {"a_p": [0.5, 0.0, 0.0, 0.25], "b_p": [1.0, 0.0, 0.0, 1.0], "n": 2, "m": 2, "sigma2": 0.01},
        "security": {"gamma_c": 1e-6, "tau_c_seconds": 31536e4, "upsilon_flops": 4.42e17},
        "attack": {"sizes": [20, 40], "trials": 2, "seed": 7},
        "crypto": {"key_length_bits": 32, "delta_scale_log2": -10}
    }"#;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(args.iter().copied(), &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn config_defaults() {
        let cfg = ConfigFile::parse(CONFIG).unwrap();
        assert_eq!(cfg.crypto.horizon, DEFAULT_CRYPTO_HORIZON);
        assert_eq!(cfg.crypto.seed, 0);
        assert_eq!(cfg.plant.n(), 2);
    }

    #[test]
    fn config_rejects_bad_shapes_and_unknown_keys() {
        let bad = CONFIG.replace("\"n\": 2", "\"n\": 3");
        assert!(ConfigFile::parse(&bad).is_err());
        let extra = CONFIG.replace("\"seed\": 7", "\"seed\": 7, \"bogus\": 1");
        assert!(ConfigFile::parse(&extra).is_err());
        let neg = CONFIG.replace("1e-6", "-1e-6");
        assert!(ConfigFile::parse(&neg).is_err());
    }

    #[test]
    fn keylen_flag_bounds() {
        assert_eq!(
            run_capture(&["encctl", "keylen", "--lambda", "68"]).1,
            "589\n"
        );
        assert_eq!(
            run_capture(&["encctl", "keylen", "--lambda", "1"]).0,
            EXIT_USAGE
        );
        assert_eq!(
            run_capture(&["encctl", "keylen", "--lambda", "x"]).0,
            EXIT_USAGE
        );
        assert_eq!(run_capture(&["encctl", "keylen"]).0, EXIT_USAGE);
    }

    #[test]
    fn missing_config_file_is_usage_error() {
        let (code, _, err) =
            run_capture(&["encctl", "design", "--config", "/nonexistent/cfg.json"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("cannot read"));
    }

    #[test]
    fn encdemo_with_zero_horizon() {
        let mut cfg = ConfigFile::parse(CONFIG).unwrap();
        cfg.crypto.horizon = 0;
        let r = cmd_encdemo(&cfg, None).unwrap();
        assert_eq!(r.epochs_rotated, 0);
        assert_eq!(r.max_deviation, 0.0);
    }

    #[test]
    fn csv_layout() {
        let cfg = ConfigFile::parse(CONFIG).unwrap();
        let table = cmd_attack_sim(&cfg, None).unwrap();
        let trials = trials_csv(&table);
        assert_eq!(trials.lines().count(), 1 + 4);
        assert!(trials.starts_with("N,trial,epsilon\n20,0,"));
        let summary = summary_csv(&table);
        assert_eq!(summary.lines().count(), 3);
        assert!(summary.starts_with("N,mean_epsilon,gamma\n"));
    }

    #[test]
    fn design_report_round_trips() {
        let cfg = ConfigFile::parse(CONFIG).unwrap();
        let r = cmd_design(&cfg).unwrap();
        let text = to_json_line(&r);
        let back: DesignReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in [
            "f_star",
            "gramian_trace",
            "n_star",
            "lambda_star",
            "lambda_star_static",
            "k_star",
            "k_star_static",
            "secure",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
