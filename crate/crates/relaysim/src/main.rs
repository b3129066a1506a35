//! relaysim: Monte Carlo sweeps for amplify-and-forward relaying in a
//! parallel MIMO relay network.
//!
//! Subcommands map one-to-one onto the experiment sweeps: `rate-vs-k`,
//! `multiplexing`, `relay-power`, `outage`, and `validate-lemmas`. Each run
//! writes a CSV table plus a JSON manifest echoing the resolved
//! configuration. Reruns with identical flags and seed produce
//! byte-identical CSV for any `--workers` value.
//!
//! Exit codes: 0 success, 1 validation-suite failure, 2 usage or config
//! error, 3 numeric failure.

mod config;
mod output;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relay_core::channel::NetworkDims;
use relay_core::montecarlo::{
    run_outage_probe, run_rate_vs_k, run_rate_vs_snr, run_relay_power_sweep, ExperimentConfig,
    IcbsThreshold, MarginRule, RelayPowerRule, Series,
};
use relay_core::Error;

use config::{
    parse_beta, parse_rules, parse_schemes, resolve_seed, unix_now, FileConfig, RunManifest,
    SlopeRecord,
};
use output::{write_file, ProbeRow, RATE_UNITS};

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "relaysim",
    version,
    about = "Monte Carlo experiments for a parallel MIMO amplify-and-forward relay network"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Transmitter/receiver antenna count M.
    #[arg(long = "M")]
    m: Option<usize>,
    /// Relay antenna count N (N >= M).
    #[arg(long = "N")]
    n: Option<usize>,
    /// Trials per grid point.
    #[arg(long)]
    trials: Option<u64>,
    /// Master seed (fallback: RELAYSIM_SEED, then 1).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
    /// Flat JSON config file; explicit flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Mean rate of each scheme versus the relay count K.
    RateVsK {
        #[command(flatten)]
        common: CommonArgs,
        /// Relay counts, comma separated.
        #[arg(long = "k", value_delimiter = ',')]
        k: Vec<usize>,
        /// Single SNR point in dB.
        #[arg(long = "snr-db", value_delimiter = ',')]
        snr_db: Vec<f64>,
        /// Schemes to run (CBS, ICBS, BNOP, CUT_SET, CU_STAR, R_S).
        #[arg(long, value_delimiter = ',')]
        schemes: Vec<String>,
        /// ICBS threshold: auto, schedule, or a positive number.
        #[arg(long)]
        beta: Option<String>,
    },
    /// Rate versus SNR at fixed K, with fitted high-SNR slopes.
    Multiplexing {
        #[command(flatten)]
        common: CommonArgs,
        /// Relay count.
        #[arg(long = "K")]
        relays: Option<usize>,
        /// SNR grid in dB, comma separated (needs at least two points).
        #[arg(long = "snr-db", value_delimiter = ',')]
        snr_db: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        schemes: Vec<String>,
        #[arg(long)]
        beta: Option<String>,
    },
    /// ICBS rate under relay-power scaling rules, against equal power.
    RelayPower {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "k", value_delimiter = ',')]
        k: Vec<usize>,
        #[arg(long = "snr-db", value_delimiter = ',')]
        snr_db: Vec<f64>,
        /// Rules: equal, inv-sqrt-k, inv-k2 (comma separated).
        #[arg(long = "rule", value_delimiter = ',')]
        rules: Vec<String>,
        #[arg(long)]
        beta: Option<String>,
    },
    /// Empirical outage of per-realization ICBS rate below a margin under
    /// the cut-set mean.
    Outage {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long = "k", value_delimiter = ',')]
        k: Vec<usize>,
        #[arg(long = "snr-db", value_delimiter = ',')]
        snr_db: Vec<f64>,
        /// Margin coefficient c in target = mean cut-set - c / ln K.
        #[arg(long = "margin-c")]
        margin_c: Option<f64>,
        #[arg(long)]
        beta: Option<String>,
    },
    /// Distribution, concentration, and threshold-schedule probes.
    ValidateLemmas {
        #[command(flatten)]
        common: CommonArgs,
        /// Samples per distribution check.
        #[arg(long)]
        samples: Option<usize>,
        /// Run a single probe: beta-dist, min-eig, concentration,
        /// interference-tail, deactivation.
        #[arg(long)]
        probe: Option<String>,
        /// Relay count override for single-probe runs.
        #[arg(long = "K")]
        relays: Option<usize>,
        /// SNR in dB for the load-dependent probes.
        #[arg(long = "snr-db", value_delimiter = ',')]
        snr_db: Vec<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::ContractViolation(_) => ExitCode::from(2),
                Error::NumericFailure(_) => ExitCode::from(3),
            }
        }
    }
}

struct Resolved {
    file: FileConfig,
    seed: u64,
    trials: u64,
    workers: usize,
    out_dir: PathBuf,
    m: usize,
    n: usize,
}

fn resolve_common(common: &CommonArgs) -> Result<Resolved, Error> {
    let file = match &common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let seed = resolve_seed(common.seed, file.seed)?;
    Ok(Resolved {
        seed,
        trials: common.trials.or(file.trials).unwrap_or(2000),
        workers: common.workers.or(file.workers).unwrap_or(1).max(1),
        out_dir: common
            .out_dir
            .clone()
            .or(file.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out")),
        m: common.m.or(file.m).unwrap_or(2),
        n: common.n.or(file.n).unwrap_or(2),
        file,
    })
}

fn resolve_snr(flag: &[f64], file: &FileConfig) -> Vec<f64> {
    if !flag.is_empty() {
        flag.to_vec()
    } else {
        file.snr_db.clone().unwrap_or_else(|| vec![10.0])
    }
}

fn resolve_k(flag: &[usize], file: &FileConfig, default: &[usize]) -> Vec<usize> {
    if !flag.is_empty() {
        flag.to_vec()
    } else {
        file.k.clone().unwrap_or_else(|| default.to_vec())
    }
}

fn resolve_schemes(flag: &[String], file: &FileConfig) -> Result<Vec<Series>, Error> {
    let names: Vec<String> = if !flag.is_empty() {
        flag.to_vec()
    } else if let Some(names) = &file.schemes {
        names.clone()
    } else {
        return Ok(Series::ALL.to_vec());
    };
    let parsed = parse_schemes(&names)?;
    if parsed.is_empty() {
        return Err(Error::ContractViolation("no schemes selected".into()));
    }
    Ok(parsed)
}

fn resolve_beta(flag: &Option<String>, file: &FileConfig) -> Result<IcbsThreshold, Error> {
    match flag.as_deref().or(file.beta.as_deref()) {
        Some(spec) => parse_beta(spec),
        None => Ok(IcbsThreshold::Adaptive),
    }
}

fn experiment_config(
    r: &Resolved,
    k_grid: Vec<usize>,
    snr_db_grid: Vec<f64>,
    schemes: Vec<Series>,
    beta: IcbsThreshold,
) -> ExperimentConfig {
    ExperimentConfig {
        k_grid,
        tx_antennas: r.m,
        relay_antennas: r.n,
        snr_db_grid,
        trials: r.trials,
        master_seed: r.seed,
        schemes,
        workers: r.workers,
        icbs_threshold: beta,
        relay_power_rule: RelayPowerRule::Equal,
    }
}

fn config_echo(cfg: &ExperimentConfig, extra: serde_json::Value) -> serde_json::Value {
    let mut echo = serde_json::json!({
        "M": cfg.tx_antennas,
        "N": cfg.relay_antennas,
        "K": cfg.k_grid,
        "snr_db": cfg.snr_db_grid,
        "trials": cfg.trials,
        "seed": cfg.master_seed,
        "workers": cfg.workers,
        "schemes": cfg.schemes.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
        "icbs_threshold": cfg.icbs_threshold.describe(),
    });
    if let (Some(obj), Some(add)) = (echo.as_object_mut(), extra.as_object()) {
        for (k, v) in add {
            obj.insert(k.clone(), v.clone());
        }
    }
    echo
}

fn write_manifest(
    out_dir: &std::path::Path,
    name: &str,
    manifest: &RunManifest,
) -> Result<PathBuf, Error> {
    let text = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::NumericFailure(format!("manifest serialization: {e}")))?;
    write_file(out_dir, name, &(text + "\n"))
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::RateVsK {
            common,
            k,
            snr_db,
            schemes,
            beta,
        } => {
            let r = resolve_common(&common)?;
            let cfg = experiment_config(
                &r,
                resolve_k(&k, &r.file, &[4, 8, 16, 32, 64]),
                resolve_snr(&snr_db, &r.file),
                resolve_schemes(&schemes, &r.file)?,
                resolve_beta(&beta, &r.file)?,
            );
            let started = unix_now();
            let rows = run_rate_vs_k(&cfg)?;
            let header = format!(
                "relaysim rate-vs-k v{VERSION} | rates in {RATE_UNITS} | P = 10^(snr_db/10) vs unit noise | M={} N={} snr_db={} trials={} seed={} icbs_threshold={}",
                cfg.tx_antennas,
                cfg.relay_antennas,
                cfg.snr_db_grid[0],
                cfg.trials,
                cfg.master_seed,
                cfg.icbs_threshold.describe()
            );
            let csv = write_file(&r.out_dir, "rate_vs_k.csv", &output::rate_vs_k_csv(&header, &rows))?;
            let manifest = RunManifest {
                command: "rate-vs-k".into(),
                version: VERSION.into(),
                seed: cfg.master_seed,
                config: config_echo(&cfg, serde_json::json!({})),
                started_unix: started,
                finished_unix: unix_now(),
                outputs: vec![csv.display().to_string()],
                slopes: None,
            };
            write_manifest(&r.out_dir, "rate_vs_k_manifest.json", &manifest)?;
            println!("wrote {}", csv.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Multiplexing {
            common,
            relays,
            snr_db,
            schemes,
            beta,
        } => {
            let r = resolve_common(&common)?;
            let k = relays
                .or_else(|| r.file.k.as_ref().and_then(|v| v.first().copied()))
                .unwrap_or(4);
            let snrs = resolve_snr(&snr_db, &r.file);
            let cfg = experiment_config(
                &r,
                vec![k],
                snrs,
                resolve_schemes(&schemes, &r.file)?,
                resolve_beta(&beta, &r.file)?,
            );
            let started = unix_now();
            let (rows, fits) = run_rate_vs_snr(&cfg)?;
            let header = format!(
                "relaysim multiplexing v{VERSION} | rates in {RATE_UNITS} | slope fit on top half of SNR grid | M={} N={} K={} trials={} seed={} icbs_threshold={}",
                cfg.tx_antennas, cfg.relay_antennas, k, cfg.trials, cfg.master_seed,
                cfg.icbs_threshold.describe()
            );
            let csv = write_file(
                &r.out_dir,
                "multiplexing.csv",
                &output::multiplexing_csv(&header, &rows),
            )?;
            let manifest = RunManifest {
                command: "multiplexing".into(),
                version: VERSION.into(),
                seed: cfg.master_seed,
                config: config_echo(&cfg, serde_json::json!({})),
                started_unix: started,
                finished_unix: unix_now(),
                outputs: vec![csv.display().to_string()],
                slopes: Some(
                    fits.iter()
                        .map(|f| SlopeRecord {
                            scheme: f.series.as_str().into(),
                            bits_per_doubling: f.bits_per_doubling,
                            points_used: f.points_used,
                        })
                        .collect(),
                ),
            };
            write_manifest(&r.out_dir, "multiplexing_manifest.json", &manifest)?;
            println!("wrote {}", csv.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::RelayPower {
            common,
            k,
            snr_db,
            rules,
            beta,
        } => {
            let r = resolve_common(&common)?;
            let rule_list = if rules.is_empty() && r.file.rules.is_none() {
                vec![
                    RelayPowerRule::Equal,
                    RelayPowerRule::InvSqrtK,
                    RelayPowerRule::InvKSquared,
                ]
            } else if !rules.is_empty() {
                parse_rules(&rules)?
            } else {
                parse_rules(r.file.rules.as_ref().unwrap())?
            };
            let cfg = experiment_config(
                &r,
                resolve_k(&k, &r.file, &[16, 32, 64, 128]),
                resolve_snr(&snr_db, &r.file),
                vec![Series::Icbs],
                resolve_beta(&beta, &r.file)?,
            );
            let started = unix_now();
            let rows = run_relay_power_sweep(&cfg, &rule_list)?;
            let header = format!(
                "relaysim relay-power v{VERSION} | ICBS rates in {RATE_UNITS} | gap_bits = equal-power mean minus rule mean (paired seeds); gap_rel = gap_bits / equal-power mean | M={} N={} snr_db={} trials={} seed={} icbs_threshold={}",
                cfg.tx_antennas,
                cfg.relay_antennas,
                cfg.snr_db_grid[0],
                cfg.trials,
                cfg.master_seed,
                cfg.icbs_threshold.describe()
            );
            let csv = write_file(
                &r.out_dir,
                "relay_power.csv",
                &output::relay_power_csv(&header, &rows),
            )?;
            let manifest = RunManifest {
                command: "relay-power".into(),
                version: VERSION.into(),
                seed: cfg.master_seed,
                config: config_echo(
                    &cfg,
                    serde_json::json!({
                        "rules": rule_list.iter().map(|r| r.as_str()).collect::<Vec<_>>()
                    }),
                ),
                started_unix: started,
                finished_unix: unix_now(),
                outputs: vec![csv.display().to_string()],
                slopes: None,
            };
            write_manifest(&r.out_dir, "relay_power_manifest.json", &manifest)?;
            println!("wrote {}", csv.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Outage {
            common,
            k,
            snr_db,
            margin_c,
            beta,
        } => {
            let r = resolve_common(&common)?;
            let c = margin_c.or(r.file.margin_c).unwrap_or(2.0);
            if c <= 0.0 || c.is_nan() {
                return Err(Error::ContractViolation(
                    "--margin-c must be positive".into(),
                ));
            }
            let cfg = experiment_config(
                &r,
                resolve_k(&k, &r.file, &[16, 32, 64]),
                resolve_snr(&snr_db, &r.file),
                vec![Series::Icbs],
                resolve_beta(&beta, &r.file)?,
            );
            let started = unix_now();
            let rows = run_outage_probe(&cfg, MarginRule::CutSetMinusMargin { c })?;
            let header = format!(
                "relaysim outage v{VERSION} | target = mean cut-set - {c}/ln(K), rates in {RATE_UNITS} | M={} N={} snr_db={} trials={} seed={} icbs_threshold={}",
                cfg.tx_antennas,
                cfg.relay_antennas,
                cfg.snr_db_grid[0],
                cfg.trials,
                cfg.master_seed,
                cfg.icbs_threshold.describe()
            );
            let csv = write_file(&r.out_dir, "outage.csv", &output::outage_csv(&header, &rows))?;
            let manifest = RunManifest {
                command: "outage".into(),
                version: VERSION.into(),
                seed: cfg.master_seed,
                config: config_echo(&cfg, serde_json::json!({ "margin_c": c })),
                started_unix: started,
                finished_unix: unix_now(),
                outputs: vec![csv.display().to_string()],
                slopes: None,
            };
            write_manifest(&r.out_dir, "outage_manifest.json", &manifest)?;
            println!("wrote {}", csv.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::ValidateLemmas {
            common,
            samples,
            probe,
            relays,
            snr_db,
        } => {
            let r = resolve_common(&common)?;
            let samples = samples.or(r.file.samples).unwrap_or(10_000);
            if samples < relay_core::validation::MIN_SAMPLES {
                return Err(Error::ContractViolation(format!(
                    "--samples must be at least {}, got {samples}",
                    relay_core::validation::MIN_SAMPLES
                )));
            }
            let snr = resolve_snr(&snr_db, &r.file)[0];
            let only = match probe.as_deref().or(r.file.probe.as_deref()) {
                Some(name) => {
                    let kind = validate::parse_probe(name)?;
                    let k = relays
                        .or_else(|| r.file.k.as_ref().and_then(|v| v.first().copied()))
                        .unwrap_or(16);
                    Some((kind, NetworkDims::new(k, r.m, r.n)?))
                }
                None => None,
            };
            let params = validate::SuiteParams {
                samples,
                tail_trials: r.trials as usize,
                seed: r.seed,
                snr_db: snr,
                only,
            };
            let started = unix_now();
            let rows = validate::run_suite(&params)?;
            let failures: Vec<&ProbeRow> = rows.iter().filter(|row| !row.pass).collect();
            let header = format!(
                "relaysim validate-lemmas v{VERSION} | KS threshold 1.63/sqrt(n) (asymptotic 1% level) | samples={samples} trials={} seed={} snr_db={snr}",
                params.tail_trials, params.seed
            );
            let csv = write_file(
                &r.out_dir,
                "validate_lemmas.csv",
                &output::validation_csv(&header, &rows),
            )?;
            let manifest = RunManifest {
                command: "validate-lemmas".into(),
                version: VERSION.into(),
                seed: params.seed,
                config: serde_json::json!({
                    "samples": samples,
                    "trials": params.tail_trials,
                    "seed": params.seed,
                    "snr_db": snr,
                    "probe": probe,
                    "M": r.m,
                    "N": r.n,
                }),
                started_unix: started,
                finished_unix: unix_now(),
                outputs: vec![csv.display().to_string()],
                slopes: None,
            };
            write_manifest(&r.out_dir, "validate_lemmas_manifest.json", &manifest)?;
            for row in &rows {
                println!(
                    "{} {} [{}] {} = {:.6} ({})",
                    if row.pass { "PASS" } else { "FAIL" },
                    row.probe,
                    row.setting,
                    row.metric,
                    row.value,
                    row.bound
                );
            }
            if failures.is_empty() {
                println!("all probes passed");
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("{} probe check(s) failed", failures.len());
                Ok(ExitCode::from(1))
            }
        }
    }
}
