//! Flag merging and the run manifest.
//!
//! Every subcommand resolves its settings in the same order: built-in
//! default, then the optional flat JSON config file, then explicit flags.
//! The resolved configuration is echoed into the manifest so a run can be
//! reproduced from its outputs alone.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use relay_core::montecarlo::{IcbsThreshold, RelayPowerRule, Series};
use relay_core::Error;

/// Flat JSON config mirroring the command-line flags. Flags override file
/// values field by field.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(rename = "M")]
    pub m: Option<usize>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[serde(rename = "K")]
    pub k: Option<Vec<usize>>,
    pub snr_db: Option<Vec<f64>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub schemes: Option<Vec<String>>,
    pub beta: Option<String>,
    pub rules: Option<Vec<String>>,
    pub margin_c: Option<f64>,
    pub samples: Option<usize>,
    pub probe: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::ContractViolation(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text).map_err(|e| {
            Error::ContractViolation(format!("invalid config {}: {e}", path.display()))
        })
    }
}

/// Seed resolution order: flag, config file, RELAYSIM_SEED, default 1.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64, Error> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match std::env::var("RELAYSIM_SEED") {
        Ok(v) => v
            .parse()
            .map_err(|_| Error::ContractViolation(format!("RELAYSIM_SEED is not a u64: {v}"))),
        Err(_) => Ok(1),
    }
}

pub fn parse_schemes(names: &[String]) -> Result<Vec<Series>, Error> {
    let mut out = Vec::new();
    for name in names {
        for piece in name.split(',') {
            let piece = piece.trim();
            if piece.is_empty() {
                continue;
            }
            let series = Series::parse(piece).ok_or_else(|| {
                Error::ContractViolation(format!(
                    "unknown scheme {piece}; expected one of CBS, ICBS, BNOP, CUT_SET, CU_STAR, R_S"
                ))
            })?;
            if !out.contains(&series) {
                out.push(series);
            }
        }
    }
    Ok(out)
}

pub fn parse_beta(spec: &str) -> Result<IcbsThreshold, Error> {
    match spec {
        "auto" | "adaptive" => Ok(IcbsThreshold::Adaptive),
        "schedule" => Ok(IcbsThreshold::Schedule),
        other => other
            .parse::<f64>()
            .ok()
            .filter(|v| *v > 0.0)
            .map(IcbsThreshold::Fixed)
            .ok_or_else(|| {
                Error::ContractViolation(format!(
                    "--beta must be 'auto', 'schedule', or a positive number, got {other}"
                ))
            }),
    }
}

pub fn parse_rules(names: &[String]) -> Result<Vec<RelayPowerRule>, Error> {
    let mut out = Vec::new();
    for name in names {
        for piece in name.split(',') {
            let piece = piece.trim();
            if piece.is_empty() {
                continue;
            }
            let rule = RelayPowerRule::parse(piece).ok_or_else(|| {
                Error::ContractViolation(format!(
                    "unknown relay-power rule {piece}; expected equal, inv-sqrt-k, or inv-k2"
                ))
            })?;
            if !out.contains(&rule) {
                out.push(rule);
            }
        }
    }
    Ok(out)
}

/// Manifest written next to every output table.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slopes: Option<Vec<SlopeRecord>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SlopeRecord {
    pub scheme: String,
    pub bits_per_doubling: f64,
    pub points_used: usize,
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let m = RunManifest {
            command: "rate-vs-k".into(),
            version: "0.1.0".into(),
            seed: 7,
            config: serde_json::json!({"M": 2, "K": [4, 8]}),
            started_unix: 1000,
            finished_unix: 1005,
            outputs: vec!["out/rate_vs_k.csv".into()],
            slopes: Some(vec![SlopeRecord {
                scheme: "CBS".into(),
                bits_per_doubling: 0.98,
                points_used: 2,
            }]),
        };
        let text = serde_json::to_string_pretty(&m).unwrap();
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn scheme_and_rule_parsing() {
        let s = parse_schemes(&["cbs,ICBS".into(), "cut_set".into()]).unwrap();
        assert_eq!(s, vec![Series::Cbs, Series::Icbs, Series::CutSet]);
        assert!(parse_schemes(&["nope".into()]).is_err());

        let r = parse_rules(&["equal,inv-sqrt-k".into()]).unwrap();
        assert_eq!(r, vec![RelayPowerRule::Equal, RelayPowerRule::InvSqrtK]);
        assert!(parse_rules(&["fast".into()]).is_err());
    }

    #[test]
    fn beta_parsing() {
        assert_eq!(parse_beta("auto").unwrap(), IcbsThreshold::Adaptive);
        assert_eq!(parse_beta("schedule").unwrap(), IcbsThreshold::Schedule);
        assert_eq!(parse_beta("0.5").unwrap(), IcbsThreshold::Fixed(0.5));
        assert!(parse_beta("-1").is_err());
        assert!(parse_beta("word").is_err());
    }
}
