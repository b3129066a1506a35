//! The validate-lemmas suite: distribution checks, concentration, and the
//! coupled threshold-schedule probes, assembled into a pass/fail report.

use relay_core::channel::{NetworkDims, PowerConfig};
use relay_core::stats::wilson_interval;
use relay_core::validation::{
    check_min_eig_exponential, check_min_gram_concentration, check_unitary_block_norm_dist,
    probe_deactivation_prob, probe_interference_tail, DistCheckReport, ProbeConfig, TailReport,
};
use relay_core::{Error, Result};

use crate::output::ProbeRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeKind {
    BetaDist,
    MinEig,
    Concentration,
    InterferenceTail,
    Deactivation,
}

impl ProbeKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "beta-dist" => Some(ProbeKind::BetaDist),
            "min-eig" => Some(ProbeKind::MinEig),
            "concentration" => Some(ProbeKind::Concentration),
            "interference-tail" => Some(ProbeKind::InterferenceTail),
            "deactivation" => Some(ProbeKind::Deactivation),
            _ => None,
        }
    }
}

pub struct SuiteParams {
    pub samples: usize,
    pub tail_trials: usize,
    pub seed: u64,
    pub snr_db: f64,
    /// Restrict to one probe kind, with dimension overrides.
    pub only: Option<(ProbeKind, NetworkDims)>,
}

fn dist_rows(probe: &str, setting: String, rep: &DistCheckReport) -> ProbeRow {
    ProbeRow {
        probe: probe.into(),
        setting,
        samples: rep.samples as u64,
        metric: "ks".into(),
        value: rep.statistic,
        bound: format!("<{:.6}", rep.threshold),
        pass: rep.pass,
    }
}

fn tail_row(setting: String, rep: &TailReport) -> ProbeRow {
    ProbeRow {
        probe: "interference-tail".into(),
        setting,
        samples: rep.samples as u64,
        metric: "p_exceed".into(),
        value: rep.probability,
        bound: format!("ci=[{:.4};{:.4}]", rep.ci_low, rep.ci_high),
        pass: true,
    }
}

/// Runs the configured probes, in parallel where independent, and returns
/// the report rows. Rows with `bound == "report"` are informational.
pub fn run_suite(params: &SuiteParams) -> Result<Vec<ProbeRow>> {
    let p = PowerConfig::equal(relay_core::montecarlo::db_to_linear(params.snr_db))?;

    if let Some((kind, dims)) = params.only {
        return run_single(params, kind, dims, p);
    }

    // Independent tasks, joined in a fixed report order.
    let mut tasks: Vec<Box<dyn FnOnce() -> Result<Vec<ProbeRow>> + Send>> = Vec::new();
    let samples = params.samples;
    let seed = params.seed;
    let tail_trials = params.tail_trials;

    tasks.push(Box::new(move || {
        let dims = NetworkDims::new(16, 2, 2)?;
        let rep = check_unitary_block_norm_dist(dims, samples, seed)?;
        Ok(vec![dist_rows("beta-dist", "N=2 K=16 M=2".into(), &rep)])
    }));
    tasks.push(Box::new(move || {
        let dims = NetworkDims::new(2, 1, 1)?;
        let rep = check_unitary_block_norm_dist(dims, samples, seed.wrapping_add(1))?;
        Ok(vec![dist_rows(
            "beta-dist",
            "N=1 K=2 M=1 (uniform)".into(),
            &rep,
        )])
    }));
    tasks.push(Box::new(move || {
        let rep = check_min_eig_exponential(2, samples, seed.wrapping_add(2))?;
        let mut rows = vec![dist_rows("min-eig", "M=2".into(), &rep)];
        // Mean must sit within three standard errors of 1/M.
        let sigma = (rep.empirical_var / rep.samples as f64).sqrt();
        rows.push(ProbeRow {
            probe: "min-eig".into(),
            setting: "M=2".into(),
            samples: rep.samples as u64,
            metric: "mean_abs_err_vs_half".into(),
            value: (rep.empirical_mean - 0.5).abs(),
            bound: format!("<{:.6}", 3.0 * sigma),
            pass: (rep.empirical_mean - 0.5).abs() < 3.0 * sigma,
        });
        Ok(rows)
    }));
    tasks.push(Box::new(move || {
        let pts = check_min_gram_concentration(2, &[500, 2000, 5000], 500, seed.wrapping_add(3))?;
        let mut rows = Vec::new();
        for pt in &pts {
            let in_window = pt.mean_ratio >= 0.7 && pt.mean_ratio <= 1.0;
            rows.push(ProbeRow {
                probe: "concentration".into(),
                setting: format!("r=2 s={}", pt.s),
                samples: 500,
                metric: "mean_ratio".into(),
                value: pt.mean_ratio,
                bound: if pt.s == 2000 {
                    "[0.7;1.0]".into()
                } else {
                    "report".into()
                },
                pass: pt.s != 2000 || in_window,
            });
        }
        let d_first = (pts[0].mean_ratio - 1.0).abs();
        let d_last = (pts[2].mean_ratio - 1.0).abs();
        rows.push(ProbeRow {
            probe: "concentration".into(),
            setting: "r=2 s=500 vs s=5000".into(),
            samples: 500,
            metric: "tightening".into(),
            value: d_first - d_last,
            bound: ">0".into(),
            pass: d_last < d_first,
        });
        Ok(rows)
    }));
    let powers = p;
    tasks.push(Box::new(move || {
        let mut rows = Vec::new();
        let mut reports = Vec::new();
        for (i, k) in [16usize, 32, 64, 128].into_iter().enumerate() {
            let dims = NetworkDims::new(k, 2, 2)?;
            let cfg = ProbeConfig::schedule(dims, powers, tail_trials, seed.wrapping_add(4))?;
            let rep = probe_interference_tail(&cfg)?;
            rows.push(tail_row(format!("schedule K={k}"), &rep));
            reports.push(rep);
            let _ = i;
        }
        // Monotone trend, with overlap of adjacent Wilson intervals as the
        // allowed exception.
        let mut trend_ok = true;
        for w in reports.windows(2) {
            let decreased = w[1].probability <= w[0].probability;
            let overlap = w[1].ci_low <= w[0].ci_high && w[0].ci_low <= w[1].ci_high;
            if !(decreased || overlap) {
                trend_ok = false;
            }
        }
        rows.push(ProbeRow {
            probe: "interference-tail".into(),
            setting: "schedule K=16..128".into(),
            samples: tail_trials as u64,
            metric: "monotone_trend".into(),
            value: reports.first().unwrap().probability - reports.last().unwrap().probability,
            bound: "decreasing|ci-overlap".into(),
            pass: trend_ok,
        });
        Ok(rows)
    }));
    tasks.push(Box::new(move || {
        let dims = NetworkDims::new(32, 2, 2)?;
        let cfg = ProbeConfig::schedule(dims, powers, tail_trials, seed.wrapping_add(5))?;
        let rep = probe_deactivation_prob(&cfg)?;
        let tail = probe_interference_tail(&cfg)?;
        let k = 32.0f64;
        let rhs = dims.tx_antennas as f64 * dims.relay_antennas as f64 * k * k / cfg.xi
            * (rep.p_block_norm + cfg.gamma * rep.p_deactivate);
        let mut rows = vec![
            ProbeRow {
                probe: "deactivation".into(),
                setting: "schedule K=32".into(),
                samples: rep.count,
                metric: "p_deactivate".into(),
                value: rep.p_deactivate,
                bound: format!("ci=[{:.4};{:.4}]", rep.p_deactivate_ci.0, rep.p_deactivate_ci.1),
                pass: true,
            },
            ProbeRow {
                probe: "deactivation".into(),
                setting: "schedule K=32".into(),
                samples: rep.count,
                metric: "p_block_norm".into(),
                value: rep.p_block_norm,
                bound: format!("ci=[{:.4};{:.4}]", rep.p_block_norm_ci.0, rep.p_block_norm_ci.1),
                pass: true,
            },
        ];
        // The Markov-style bound on P[v > xi] evaluated with the measured
        // frequencies must cover the measured tail (it is loose by orders
        // of magnitude at this scale, so this is a sanity check of signs
        // and assembly, not a tightness claim).
        rows.push(ProbeRow {
            probe: "deactivation".into(),
            setting: "schedule K=32".into(),
            samples: rep.count,
            metric: "tail_bound_rhs".into(),
            value: rhs,
            bound: format!(">={:.4}", tail.ci_low),
            pass: rhs >= tail.ci_low,
        });
        Ok(rows)
    }));

    let results: Vec<Result<Vec<ProbeRow>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = tasks
            .into_iter()
            .map(|task| scope.spawn(task))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("probe task panicked"))
            .collect()
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

fn run_single(
    params: &SuiteParams,
    kind: ProbeKind,
    dims: NetworkDims,
    powers: PowerConfig,
) -> Result<Vec<ProbeRow>> {
    match kind {
        ProbeKind::BetaDist => {
            let rep = check_unitary_block_norm_dist(dims, params.samples, params.seed)?;
            Ok(vec![dist_rows(
                "beta-dist",
                format!(
                    "N={} K={} M={}",
                    dims.relay_antennas, dims.relays, dims.tx_antennas
                ),
                &rep,
            )])
        }
        ProbeKind::MinEig => {
            let rep = check_min_eig_exponential(dims.tx_antennas, params.samples, params.seed)?;
            Ok(vec![dist_rows(
                "min-eig",
                format!("M={}", dims.tx_antennas),
                &rep,
            )])
        }
        ProbeKind::Concentration => {
            let pts = check_min_gram_concentration(
                dims.tx_antennas.min(4),
                &[500, 2000, 5000],
                500,
                params.seed,
            )?;
            Ok(pts
                .iter()
                .map(|pt| ProbeRow {
                    probe: "concentration".into(),
                    setting: format!("r={} s={}", dims.tx_antennas.min(4), pt.s),
                    samples: 500,
                    metric: "mean_ratio".into(),
                    value: pt.mean_ratio,
                    bound: "report".into(),
                    pass: true,
                })
                .collect())
        }
        ProbeKind::InterferenceTail => {
            let cfg = ProbeConfig::schedule(dims, powers, params.tail_trials, params.seed)?;
            let rep = probe_interference_tail(&cfg)?;
            Ok(vec![tail_row(format!("schedule K={}", dims.relays), &rep)])
        }
        ProbeKind::Deactivation => {
            let cfg = ProbeConfig::schedule(dims, powers, params.tail_trials, params.seed)?;
            let rep = probe_deactivation_prob(&cfg)?;
            let (lo, hi) = wilson_interval(
                (rep.p_deactivate * rep.count as f64).round() as u64,
                rep.count,
                1.96,
            );
            Ok(vec![ProbeRow {
                probe: "deactivation".into(),
                setting: format!("schedule K={}", dims.relays),
                samples: rep.count,
                metric: "p_deactivate".into(),
                value: rep.p_deactivate,
                bound: format!("ci=[{lo:.4};{hi:.4}]"),
                pass: true,
            }])
        }
    }
}

/// Map a user-facing probe name, or reject it.
pub fn parse_probe(name: &str) -> Result<ProbeKind> {
    ProbeKind::parse(name).ok_or_else(|| {
        Error::ContractViolation(format!(
            "unknown probe {name}; expected beta-dist, min-eig, concentration, \
             interference-tail, or deactivation"
        ))
    })
}
