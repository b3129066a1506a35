//! CSV and manifest emission.
//!
//! Tables are written with fixed six-decimal formatting and a single `#`
//! header comment describing units and configuration, so a rerun with the
//! same flags and seed produces byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use relay_core::montecarlo::{OutagePoint, RatePoint, RelayPowerPoint};
use relay_core::Error;

pub const RATE_UNITS: &str = "bits/channel-use (half-duplex factor included)";

fn fmt_f(value: f64) -> String {
    format!("{value:.6}")
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(fmt_f).unwrap_or_default()
}

pub fn rate_vs_k_csv(header: &str, rows: &[RatePoint]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {header}");
    let _ = writeln!(
        out,
        "K,scheme,mean_bits,stderr,trials,mean_alpha,mean_active,empty_active_frac"
    );
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.relays,
            row.series.as_str(),
            fmt_f(row.estimate.mean),
            fmt_f(row.estimate.stderr),
            row.estimate.trials,
            fmt_opt(row.aux.map(|a| a.mean_alpha)),
            fmt_opt(row.aux.map(|a| a.mean_active)),
            fmt_opt(row.aux.map(|a| a.empty_active_frac)),
        );
    }
    out
}

pub fn multiplexing_csv(header: &str, rows: &[RatePoint]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {header}");
    let _ = writeln!(
        out,
        "snr_db,scheme,mean_bits,stderr,trials,mean_alpha,mean_active,empty_active_frac"
    );
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_f(row.snr_db),
            row.series.as_str(),
            fmt_f(row.estimate.mean),
            fmt_f(row.estimate.stderr),
            row.estimate.trials,
            fmt_opt(row.aux.map(|a| a.mean_alpha)),
            fmt_opt(row.aux.map(|a| a.mean_active)),
            fmt_opt(row.aux.map(|a| a.empty_active_frac)),
        );
    }
    out
}

pub fn relay_power_csv(header: &str, rows: &[RelayPowerPoint]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {header}");
    let _ = writeln!(out, "K,rule,mean_bits,stderr,trials,gap_bits,gap_rel");
    for row in rows {
        let gap_rel = if row.relays > 0 && row.estimate.mean + row.gap_to_equal != 0.0 {
            row.gap_to_equal / (row.estimate.mean + row.gap_to_equal)
        } else {
            0.0
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.relays,
            row.rule.as_str(),
            fmt_f(row.estimate.mean),
            fmt_f(row.estimate.stderr),
            row.estimate.trials,
            fmt_f(row.gap_to_equal),
            fmt_f(gap_rel),
        );
    }
    out
}

pub fn outage_csv(header: &str, rows: &[OutagePoint]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {header}");
    let _ = writeln!(out, "K,target_bits,outage,ci_low,ci_high,trials");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.relays,
            fmt_f(row.target),
            fmt_f(row.outage),
            fmt_f(row.ci_low),
            fmt_f(row.ci_high),
            row.trials,
        );
    }
    out
}

/// One row of the validation report.
#[derive(Debug, Clone)]
pub struct ProbeRow {
    pub probe: String,
    pub setting: String,
    pub samples: u64,
    pub metric: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
}

pub fn validation_csv(header: &str, rows: &[ProbeRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {header}");
    let _ = writeln!(out, "probe,setting,samples,metric,value,bound,pass");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.probe,
            row.setting,
            row.samples,
            row.metric,
            fmt_f(row.value),
            row.bound,
            row.pass,
        );
    }
    out
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Error> {
    std::fs::create_dir_all(dir).map_err(|e| {
        Error::ContractViolation(format!("cannot create out dir {}: {e}", dir.display()))
    })?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| Error::ContractViolation(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}
