//! Browser bindings for the relay network simulator.
//!
//! Three interactive operations, each returning a JSON string the demo page
//! plots directly: the rate-versus-relay-count sweep, the rate-versus-SNR
//! sweep with fitted multiplexing slopes, and the random-matrix
//! distribution explorer (unitary block norms against the Beta law, minimum
//! Gram eigenvalues against the exponential law).
//!
//! Everything runs single-worker: results match the CLI bit for bit at the
//! same seed. The `*_impl` functions are plain Rust (tested on the host);
//! the `#[wasm_bindgen]` wrappers only translate errors to JS.

use wasm_bindgen::prelude::*;

use relay_core::channel::{sample_realization, NetworkDims};
use relay_core::matrix::{min_gram_eigenvalue, ComplexMatrix};
use relay_core::montecarlo::{
    run_rate_vs_k, run_rate_vs_snr, ExperimentConfig, IcbsThreshold, RelayPowerRule, Series,
};
use relay_core::rng::{mix_seed, Xoshiro256PlusPlus};
use relay_core::schemes::uplink_svd;
use relay_core::stats::ln_gamma;
use relay_core::validation::{check_min_eig_exponential, check_unitary_block_norm_dist};

fn parse_usize_list(csv: &str) -> Result<Vec<usize>, String> {
    csv.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| format!("not a positive integer: {s}"))
        })
        .collect()
}

fn parse_f64_list(csv: &str) -> Result<Vec<f64>, String> {
    csv.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| format!("not a number: {s}")))
        .collect()
}

fn threshold_mode(beta: &str) -> Result<IcbsThreshold, String> {
    match beta {
        "auto" | "adaptive" | "" => Ok(IcbsThreshold::Adaptive),
        "schedule" => Ok(IcbsThreshold::Schedule),
        other => other
            .parse::<f64>()
            .ok()
            .filter(|v| *v > 0.0)
            .map(IcbsThreshold::Fixed)
            .ok_or_else(|| "beta must be auto, schedule, or a positive number".to_string()),
    }
}

fn base_config(
    m: usize,
    n: usize,
    k_grid: Vec<usize>,
    snr_db_grid: Vec<f64>,
    trials: u64,
    seed: u64,
    beta: IcbsThreshold,
) -> ExperimentConfig {
    ExperimentConfig {
        k_grid,
        tx_antennas: m,
        relay_antennas: n,
        snr_db_grid,
        trials,
        master_seed: seed,
        schemes: vec![
            Series::CutSet,
            Series::CuStar,
            Series::Icbs,
            Series::Bnop,
            Series::Cbs,
        ],
        workers: 1,
        icbs_threshold: beta,
        relay_power_rule: RelayPowerRule::Equal,
    }
}

fn rate_vs_k_impl(
    m: usize,
    n: usize,
    snr_db: f64,
    k_csv: &str,
    trials: u64,
    seed: u64,
    beta: &str,
) -> Result<String, String> {
    let cfg = base_config(
        m,
        n,
        parse_usize_list(k_csv)?,
        vec![snr_db],
        trials,
        seed,
        threshold_mode(beta)?,
    );
    let rows = run_rate_vs_k(&cfg).map_err(|e| e.to_string())?;
    let json = serde_json::json!({
        "rows": rows.iter().map(|r| serde_json::json!({
            "k": r.relays,
            "scheme": r.series.as_str(),
            "mean": r.estimate.mean,
            "stderr": r.estimate.stderr,
            "mean_active": r.aux.map(|a| a.mean_active),
        })).collect::<Vec<_>>(),
    });
    Ok(json.to_string())
}

fn multiplexing_impl(
    m: usize,
    n: usize,
    k: usize,
    snr_db_csv: &str,
    trials: u64,
    seed: u64,
) -> Result<String, String> {
    let cfg = base_config(
        m,
        n,
        vec![k],
        parse_f64_list(snr_db_csv)?,
        trials,
        seed,
        IcbsThreshold::Adaptive,
    );
    let (rows, fits) = run_rate_vs_snr(&cfg).map_err(|e| e.to_string())?;
    let json = serde_json::json!({
        "rows": rows.iter().map(|r| serde_json::json!({
            "snr_db": r.snr_db,
            "scheme": r.series.as_str(),
            "mean": r.estimate.mean,
            "stderr": r.estimate.stderr,
        })).collect::<Vec<_>>(),
        "slopes": fits.iter().map(|f| serde_json::json!({
            "scheme": f.series.as_str(),
            "bits_per_doubling": f.bits_per_doubling,
        })).collect::<Vec<_>>(),
    });
    Ok(json.to_string())
}

fn beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
        + (a - 1.0) * x.ln()
        + (b - 1.0) * (1.0 - x).ln())
    .exp()
}

fn block_norm_samples(dims: NetworkDims, samples: usize, seed: u64) -> Result<Vec<f64>, String> {
    (0..samples)
        .map(|i| {
            let real = sample_realization(dims, mix_seed(seed, i as u64));
            let svd = uplink_svd(&real).map_err(|e| e.to_string())?;
            let block = &svd.u_blocks[0];
            Ok((0..block.rows()).map(|r| block.at(r, 0).norm_sqr()).sum())
        })
        .collect()
}

fn min_eig_samples(m: usize, samples: usize, seed: u64) -> Result<Vec<f64>, String> {
    (0..samples)
        .map(|i| {
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(mix_seed(seed, i as u64));
            let a = ComplexMatrix::gaussian(m, m, &mut rng);
            min_gram_eigenvalue(&a).map_err(|e| e.to_string())
        })
        .collect()
}

fn distribution_impl(
    which: &str,
    m: usize,
    n: usize,
    k: usize,
    samples: usize,
    seed: u64,
    bins: usize,
) -> Result<String, String> {
    let bins = bins.clamp(5, 400);
    let (report, values, x_max, label, pdf): (_, _, f64, String, Box<dyn Fn(f64) -> f64>) =
        match which {
            "block-norm" => {
                let dims = NetworkDims::new(k, m, n).map_err(|e| e.to_string())?;
                let rep = check_unitary_block_norm_dist(dims, samples, seed)
                    .map_err(|e| e.to_string())?;
                let values = block_norm_samples(dims, samples, seed)?;
                let a = n as f64;
                let b = (k * n - n) as f64;
                let x_max = (rep.empirical_mean + 6.0 * rep.empirical_var.sqrt()).min(1.0);
                (
                    rep,
                    values,
                    x_max,
                    format!("Beta({a}, {b})"),
                    Box::new(move |x| beta_pdf(x, a, b)),
                )
            }
            "min-eig" => {
                let rep =
                    check_min_eig_exponential(m, samples, seed).map_err(|e| e.to_string())?;
                let values = min_eig_samples(m, samples, seed)?;
                let rate = m as f64;
                let x_max = 5.0 / rate;
                (
                    rep,
                    values,
                    x_max,
                    format!("Exponential(rate {m})"),
                    Box::new(move |x| rate * (-rate * x).exp()),
                )
            }
            other => {
                return Err(format!(
                    "unknown distribution {other}; expected block-norm or min-eig"
                ))
            }
        };

    let width = x_max / bins as f64;
    let mut counts = vec![0u64; bins];
    for v in &values {
        if *v < x_max {
            counts[((v / width) as usize).min(bins - 1)] += 1;
        }
    }
    let density: Vec<f64> = counts
        .iter()
        .map(|c| *c as f64 / (samples as f64 * width))
        .collect();
    let curve_n = 200;
    let pdf_points: Vec<(f64, f64)> = (0..=curve_n)
        .map(|i| {
            let x = x_max * i as f64 / curve_n as f64;
            (x, pdf(x))
        })
        .collect();

    let json = serde_json::json!({
        "target": label,
        "samples": report.samples,
        "ks": report.statistic,
        "ks_threshold": report.threshold,
        "pass": report.pass,
        "mean": report.empirical_mean,
        "bin_width": width,
        "x_max": x_max,
        "density": density,
        "pdf_x": pdf_points.iter().map(|p| p.0).collect::<Vec<_>>(),
        "pdf_y": pdf_points.iter().map(|p| p.1).collect::<Vec<_>>(),
    });
    Ok(json.to_string())
}

/// Rate of each scheme versus relay count. Returns
/// `{"rows": [{"k", "scheme", "mean", "stderr", "mean_active"}...]}`.
#[wasm_bindgen]
pub fn rate_vs_k_json(
    m: usize,
    n: usize,
    snr_db: f64,
    k_csv: &str,
    trials: u64,
    seed: u64,
    beta: &str,
) -> Result<String, JsValue> {
    rate_vs_k_impl(m, n, snr_db, k_csv, trials, seed, beta).map_err(|e| JsValue::from_str(&e))
}

/// Rate versus SNR at fixed K plus fitted slopes. Returns
/// `{"rows": [...], "slopes": [{"scheme", "bits_per_doubling"}...]}`.
#[wasm_bindgen]
pub fn multiplexing_json(
    m: usize,
    n: usize,
    k: usize,
    snr_db_csv: &str,
    trials: u64,
    seed: u64,
) -> Result<String, JsValue> {
    multiplexing_impl(m, n, k, snr_db_csv, trials, seed).map_err(|e| JsValue::from_str(&e))
}

/// Distribution explorer. `which` is `"block-norm"` (squared norm of one
/// relay block column of the uplink's left singular factor, Beta target) or
/// `"min-eig"` (minimum Gram eigenvalue of an MxM Gaussian, exponential
/// target). Returns histogram density, the target pdf curve, the KS
/// statistic, and the verdict at the 1% level.
#[wasm_bindgen]
pub fn distribution_json(
    which: &str,
    m: usize,
    n: usize,
    k: usize,
    samples: usize,
    seed: u64,
    bins: usize,
) -> Result<String, JsValue> {
    distribution_impl(which, m, n, k, samples, seed, bins).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_vs_k_json_parses() {
        let text = rate_vs_k_impl(2, 2, 10.0, "4,8", 100, 7, "auto").unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 2 * 5);
        assert!(rows.iter().all(|r| r["mean"].as_f64().unwrap() >= 0.0));
    }

    #[test]
    fn multiplexing_json_has_slopes() {
        let text = multiplexing_impl(2, 2, 4, "10,20", 100, 7).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["slopes"].as_array().unwrap().len(), 5);
    }

    #[test]
    fn distribution_json_block_norm() {
        let text = distribution_impl("block-norm", 2, 2, 16, 500, 3, 40).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["density"].as_array().unwrap().len(), 40);
        let total: f64 = v["density"]
            .as_array()
            .unwrap()
            .iter()
            .map(|d| d.as_f64().unwrap())
            .sum::<f64>()
            * v["bin_width"].as_f64().unwrap();
        assert!(total > 0.5 && total <= 1.0 + 1e-9, "mass {total}");
    }

    #[test]
    fn distribution_json_min_eig() {
        let text = distribution_impl("min-eig", 2, 2, 1, 800, 5, 50).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v["pass"].as_bool().is_some());
        assert!((v["mean"].as_f64().unwrap() - 0.5).abs() < 0.1);
    }

    #[test]
    fn distribution_json_rejects_unknown() {
        assert!(distribution_impl("nope", 2, 2, 4, 500, 3, 40).is_err());
    }

    #[test]
    fn bad_inputs_are_reported() {
        assert!(rate_vs_k_impl(2, 2, 10.0, "4,x", 100, 7, "auto").is_err());
        assert!(multiplexing_impl(2, 2, 4, "10", 100, 7).is_err());
        assert!(rate_vs_k_impl(2, 2, 10.0, "4", 100, 7, "-2").is_err());
    }
}
