//! Experiment orchestration: paired-seed sweeps over relay count, SNR, and
//! relay-power schedules.
//!
//! Every (point, trial) pair maps to a fixed derived seed, so all series at
//! a point see identical channel realizations (paired comparison), reruns
//! are bit-identical, and the worker count never changes a number.

use crate::capacity::{closed_form_cu_star, cut_set_rate_from_gains, r_s, RateEstimate};
use crate::channel::{sample_realization, NetworkDims, PowerConfig};
use crate::error::{Error, Result};
use crate::exec::{mean_and_stderr, run_trials};
use crate::rng::mix_seed;
use crate::schemes::{
    bnop_matched_filter, cbs_gain, compute_plan, default_threshold, icbs_activate,
    icbs_best_threshold, rate_cbs_from_plan, rate_icbs_from_plan,
};
use crate::stats::wilson_interval;

/// Everything a sweep can put on a plot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Series {
    Cbs,
    Icbs,
    Bnop,
    CutSet,
    CuStar,
    RateAnchor,
}

impl Series {
    pub fn as_str(&self) -> &'static str {
        match self {
            Series::Cbs => "CBS",
            Series::Icbs => "ICBS",
            Series::Bnop => "BNOP",
            Series::CutSet => "CUT_SET",
            Series::CuStar => "CU_STAR",
            Series::RateAnchor => "R_S",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CBS" => Some(Series::Cbs),
            "ICBS" => Some(Series::Icbs),
            "BNOP" => Some(Series::Bnop),
            "CUT_SET" | "CUTSET" | "CUT-SET" => Some(Series::CutSet),
            "CU_STAR" | "CUSTAR" | "CU-STAR" => Some(Series::CuStar),
            "R_S" | "RS" | "R-S" => Some(Series::RateAnchor),
            _ => None,
        }
    }

    pub const ALL: [Series; 6] = [
        Series::Cbs,
        Series::Icbs,
        Series::Bnop,
        Series::CutSet,
        Series::CuStar,
        Series::RateAnchor,
    ];
}

/// How the ICBS activation threshold is chosen at each point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IcbsThreshold {
    /// Per-realization rate-maximizing threshold over the load candidates.
    /// The sweep default: a single fixed value cannot serve every (K, P).
    Adaptive,
    /// The analytic schedule `beta = 1 / ln K`.
    Schedule,
    /// A caller-supplied fixed threshold.
    Fixed(f64),
}

impl IcbsThreshold {
    pub fn describe(&self) -> String {
        match self {
            IcbsThreshold::Adaptive => "adaptive".to_string(),
            IcbsThreshold::Schedule => "schedule".to_string(),
            IcbsThreshold::Fixed(v) => format!("{v}"),
        }
    }
}

/// How relay power scales with the relay count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelayPowerRule {
    /// P_r = P_s at every K.
    Equal,
    /// P_r = P_s / sqrt(K): decays, but slowly enough to cost nothing
    /// asymptotically.
    InvSqrtK,
    /// P_r = P_s / K^2: decays too fast; the contrast case.
    InvKSquared,
}

impl RelayPowerRule {
    pub fn relay_power(&self, p_source: f64, relays: usize) -> f64 {
        match self {
            RelayPowerRule::Equal => p_source,
            RelayPowerRule::InvSqrtK => p_source / (relays as f64).sqrt(),
            RelayPowerRule::InvKSquared => p_source / (relays as f64 * relays as f64),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            RelayPowerRule::Equal => "equal",
            RelayPowerRule::InvSqrtK => "inv-sqrt-k",
            RelayPowerRule::InvKSquared => "inv-k2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "equal" => Some(RelayPowerRule::Equal),
            "inv-sqrt-k" => Some(RelayPowerRule::InvSqrtK),
            "inv-k2" => Some(RelayPowerRule::InvKSquared),
            _ => None,
        }
    }
}

/// Sweep configuration. `snr_db` converts as `P = 10^(dB/10)` against unit
/// noise power.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub k_grid: Vec<usize>,
    pub tx_antennas: usize,
    pub relay_antennas: usize,
    pub snr_db_grid: Vec<f64>,
    pub trials: u64,
    pub master_seed: u64,
    pub schemes: Vec<Series>,
    pub workers: usize,
    pub icbs_threshold: IcbsThreshold,
    pub relay_power_rule: RelayPowerRule,
}

/// Reported points must average at least this many trials.
pub const MIN_TRIALS: u64 = 100;

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_grid.is_empty() || self.snr_db_grid.is_empty() {
            return Err(Error::contract("K and SNR grids must be nonempty"));
        }
        if self.trials < MIN_TRIALS {
            return Err(Error::contract(format!(
                "at least {MIN_TRIALS} trials required, got {}",
                self.trials
            )));
        }
        if self.schemes.is_empty() {
            return Err(Error::contract("at least one scheme must be selected"));
        }
        if self.tx_antennas == 0 || self.relay_antennas < self.tx_antennas {
            return Err(Error::contract("antenna counts must satisfy N >= M >= 1"));
        }
        Ok(())
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Scheme-level extras averaged over the trials of one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxStats {
    pub mean_alpha: f64,
    pub mean_active: f64,
    pub empty_active_frac: f64,
}

/// One (point, series) table row.
#[derive(Debug, Clone)]
pub struct RatePoint {
    pub relays: usize,
    pub snr_db: f64,
    pub series: Series,
    pub estimate: RateEstimate,
    pub aux: Option<AuxStats>,
}

#[derive(Debug, Clone, Copy, Default)]
struct TrialAux {
    alpha: f64,
    active: f64,
    empty: bool,
}

#[derive(Debug, Clone)]
struct TrialSamples {
    rates: Vec<f64>,
    aux: Vec<Option<TrialAux>>,
}

/// Seed for one trial at one grid point. Folds the relay count and the SNR
/// bit pattern in so a point's draws depend only on its own coordinates:
/// matching points of different sweeps share realizations exactly.
fn trial_seed(master: u64, relays: usize, snr_db: f64, trial: u64) -> u64 {
    let point = mix_seed(mix_seed(master, relays as u64), snr_db.to_bits());
    mix_seed(point, trial)
}

fn evaluate_trial(
    dims: NetworkDims,
    powers: &PowerConfig,
    schemes: &[Series],
    icbs_threshold: IcbsThreshold,
    seed: u64,
) -> Result<TrialSamples> {
    let real = sample_realization(dims, seed);
    let needs_plan = schemes.iter().any(|s| {
        matches!(s, Series::Cbs | Series::Icbs | Series::CutSet)
    });
    let plan = if needs_plan {
        Some(compute_plan(&real, powers)?)
    } else {
        None
    };

    let mut rates = Vec::with_capacity(schemes.len());
    let mut aux: Vec<Option<TrialAux>> = Vec::with_capacity(schemes.len());
    for series in schemes {
        match series {
            Series::Cbs => {
                let plan = plan.as_ref().unwrap();
                let alpha = cbs_gain(plan, powers)?;
                rates.push(rate_cbs_from_plan(plan, powers)?);
                aux.push(Some(TrialAux {
                    alpha,
                    active: dims.relays as f64,
                    empty: false,
                }));
            }
            Series::Icbs => {
                let plan = plan.as_ref().unwrap();
                let threshold = match icbs_threshold {
                    IcbsThreshold::Adaptive => icbs_best_threshold(&real, plan, powers)?,
                    IcbsThreshold::Schedule => default_threshold(dims.relays),
                    IcbsThreshold::Fixed(v) => v,
                };
                let act = icbs_activate(plan, threshold, powers)?;
                rates.push(rate_icbs_from_plan(&real, plan, &act, powers)?);
                aux.push(Some(TrialAux {
                    alpha: act.alpha,
                    active: act.active.len() as f64,
                    empty: act.is_empty(),
                }));
            }
            Series::Bnop => {
                let (_, rate) = bnop_matched_filter(&real, powers)?;
                rates.push(rate);
                aux.push(None);
            }
            Series::CutSet => {
                let plan = plan.as_ref().unwrap();
                rates.push(cut_set_rate_from_gains(&plan.svd.lambda, powers.p_source)?);
                aux.push(None);
            }
            // Closed forms are handled outside the trial loop.
            Series::CuStar | Series::RateAnchor => {
                rates.push(0.0);
                aux.push(None);
            }
        }
    }
    Ok(TrialSamples { rates, aux })
}

/// Evaluates all requested series at one (K, SNR) grid point with paired
/// trials.
fn evaluate_point(
    cfg: &ExperimentConfig,
    relays: usize,
    snr_db: f64,
    rule: RelayPowerRule,
) -> Result<Vec<RatePoint>> {
    let dims = NetworkDims::new(relays, cfg.tx_antennas, cfg.relay_antennas)?;
    let p_source = db_to_linear(snr_db);
    let powers = PowerConfig::new(p_source, rule.relay_power(p_source, relays))?;

    let sampled: Vec<Series> = cfg
        .schemes
        .iter()
        .copied()
        .filter(|s| !matches!(s, Series::CuStar | Series::RateAnchor))
        .collect();

    let mut out = Vec::with_capacity(cfg.schemes.len());
    let mut sampled_points: Vec<RatePoint> = Vec::new();
    if !sampled.is_empty() {
        let trials = run_trials(cfg.trials as usize, cfg.workers, |t| {
            evaluate_trial(
                dims,
                &powers,
                &sampled,
                cfg.icbs_threshold,
                trial_seed(cfg.master_seed, relays, snr_db, t as u64),
            )
        })?;
        for (idx, series) in sampled.iter().enumerate() {
            let rates: Vec<f64> = trials.iter().map(|t| t.rates[idx]).collect();
            let (mean, stderr) = mean_and_stderr(&rates);
            let aux = if trials.iter().all(|t| t.aux[idx].is_some()) {
                let alphas: Vec<f64> =
                    trials.iter().map(|t| t.aux[idx].unwrap().alpha).collect();
                let actives: Vec<f64> =
                    trials.iter().map(|t| t.aux[idx].unwrap().active).collect();
                let empties = trials.iter().filter(|t| t.aux[idx].unwrap().empty).count();
                Some(AuxStats {
                    mean_alpha: mean_and_stderr(&alphas).0,
                    mean_active: mean_and_stderr(&actives).0,
                    empty_active_frac: empties as f64 / trials.len() as f64,
                })
            } else {
                None
            };
            sampled_points.push(RatePoint {
                relays,
                snr_db,
                series: *series,
                estimate: RateEstimate {
                    mean,
                    stderr,
                    trials: cfg.trials,
                },
                aux,
            });
        }
    }

    // Emit rows in the configured scheme order.
    for series in &cfg.schemes {
        match series {
            Series::CuStar => out.push(RatePoint {
                relays,
                snr_db,
                series: *series,
                estimate: RateEstimate {
                    mean: closed_form_cu_star(dims, p_source),
                    stderr: 0.0,
                    trials: cfg.trials,
                },
                aux: None,
            }),
            Series::RateAnchor => out.push(RatePoint {
                relays,
                snr_db,
                series: *series,
                estimate: RateEstimate {
                    mean: r_s(dims, p_source),
                    stderr: 0.0,
                    trials: cfg.trials,
                },
                aux: None,
            }),
            other => {
                let row = sampled_points
                    .iter()
                    .find(|p| p.series == *other)
                    .expect("sampled series present")
                    .clone();
                out.push(row);
            }
        }
    }
    Ok(out)
}

/// Rate versus relay count at fixed antennas and SNR (the headline sweep).
/// Uses the first SNR grid entry.
pub fn run_rate_vs_k(cfg: &ExperimentConfig) -> Result<Vec<RatePoint>> {
    cfg.validate()?;
    let snr_db = cfg.snr_db_grid[0];
    let mut rows = Vec::new();
    for &k in &cfg.k_grid {
        rows.extend(evaluate_point(cfg, k, snr_db, cfg.relay_power_rule)?);
    }
    Ok(rows)
}

/// Fitted high-SNR slope for one series, in bits per power doubling.
#[derive(Debug, Clone, Copy)]
pub struct SlopeFit {
    pub series: Series,
    pub bits_per_doubling: f64,
    /// Number of top-of-grid points used in the fit.
    pub points_used: usize,
}

/// Rate versus SNR at fixed relay count, plus the multiplexing-gain slope
/// fitted by least squares on the top half of the grid.
pub fn run_rate_vs_snr(cfg: &ExperimentConfig) -> Result<(Vec<RatePoint>, Vec<SlopeFit>)> {
    cfg.validate()?;
    if cfg.snr_db_grid.len() < 2 {
        return Err(Error::contract(
            "slope fitting needs at least two SNR grid points",
        ));
    }
    let relays = cfg.k_grid[0];
    let mut snrs = cfg.snr_db_grid.clone();
    snrs.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut rows = Vec::new();
    for &snr_db in &snrs {
        rows.extend(evaluate_point(cfg, relays, snr_db, cfg.relay_power_rule)?);
    }

    // High-SNR slope: regress mean rate on log2(P) over the top half.
    let top = snrs.len().div_ceil(2);
    let top_snrs = &snrs[snrs.len() - top.max(2)..];
    let fits = cfg
        .schemes
        .iter()
        .map(|series| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.series == *series && top_snrs.contains(&r.snr_db))
                .map(|r| (db_to_linear(r.snr_db).log2(), r.estimate.mean))
                .collect();
            SlopeFit {
                series: *series,
                bits_per_doubling: least_squares_slope(&pts),
                points_used: pts.len(),
            }
        })
        .collect();
    Ok((rows, fits))
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    sxy / sxx
}

/// One row of the relay-power sweep.
#[derive(Debug, Clone)]
pub struct RelayPowerPoint {
    pub relays: usize,
    pub rule: RelayPowerRule,
    pub estimate: RateEstimate,
    pub aux: Option<AuxStats>,
    /// Mean ICBS rate under equal power minus under this rule (paired
    /// realizations, so the gap is a true per-draw comparison).
    pub gap_to_equal: f64,
}

/// ICBS rate under scaled relay power, against the equal-power baseline.
pub fn run_relay_power_sweep(
    cfg: &ExperimentConfig,
    rules: &[RelayPowerRule],
) -> Result<Vec<RelayPowerPoint>> {
    cfg.validate()?;
    let snr_db = cfg.snr_db_grid[0];
    let mut icbs_cfg = cfg.clone();
    icbs_cfg.schemes = vec![Series::Icbs];

    let mut out = Vec::new();
    for &k in &cfg.k_grid {
        let baseline = evaluate_point(&icbs_cfg, k, snr_db, RelayPowerRule::Equal)?
            .pop()
            .expect("one ICBS row");
        for &rule in rules {
            let row = if rule == RelayPowerRule::Equal {
                baseline.clone()
            } else {
                evaluate_point(&icbs_cfg, k, snr_db, rule)?
                    .pop()
                    .expect("one ICBS row")
            };
            out.push(RelayPowerPoint {
                relays: k,
                rule,
                gap_to_equal: baseline.estimate.mean - row.estimate.mean,
                estimate: row.estimate,
                aux: row.aux,
            });
        }
    }
    Ok(out)
}

/// Outage target selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarginRule {
    /// Target = (sample mean cut-set at this K) - c / ln K.
    CutSetMinusMargin { c: f64 },
    /// Fixed rate target.
    FixedTarget(f64),
    /// Target = the same realization's cut-set rate (always an outage,
    /// up to ties; used as a harness self-check).
    PerRealizationCutSet,
}

/// One row of the outage probe.
#[derive(Debug, Clone)]
pub struct OutagePoint {
    pub relays: usize,
    pub target: f64,
    pub outage: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub trials: u64,
}

/// Empirical outage frequency of per-realization ICBS rate against a
/// target derived from the cut-set bound.
pub fn run_outage_probe(cfg: &ExperimentConfig, margin: MarginRule) -> Result<Vec<OutagePoint>> {
    cfg.validate()?;
    let snr_db = cfg.snr_db_grid[0];
    let p_source = db_to_linear(snr_db);
    let mut out = Vec::new();
    for &k in &cfg.k_grid {
        let dims = NetworkDims::new(k, cfg.tx_antennas, cfg.relay_antennas)?;
        let powers = PowerConfig::new(
            p_source,
            cfg.relay_power_rule.relay_power(p_source, k),
        )?;
        let pairs = run_trials(cfg.trials as usize, cfg.workers, |t| {
            let real = sample_realization(dims, trial_seed(cfg.master_seed, k, snr_db, t as u64));
            let plan = compute_plan(&real, &powers)?;
            let threshold = match cfg.icbs_threshold {
                IcbsThreshold::Adaptive => icbs_best_threshold(&real, &plan, &powers)?,
                IcbsThreshold::Schedule => default_threshold(k),
                IcbsThreshold::Fixed(v) => v,
            };
            let act = icbs_activate(&plan, threshold, &powers)?;
            let icbs = rate_icbs_from_plan(&real, &plan, &act, &powers)?;
            let cut = cut_set_rate_from_gains(&plan.svd.lambda, powers.p_source)?;
            Ok((icbs, cut))
        })?;

        let cuts: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let mean_cut = mean_and_stderr(&cuts).0;
        let (target, outages) = match margin {
            MarginRule::CutSetMinusMargin { c } => {
                let target = mean_cut - c / (k as f64).ln();
                let n = pairs.iter().filter(|p| p.0 < target).count();
                (target, n)
            }
            MarginRule::FixedTarget(t) => {
                let n = pairs.iter().filter(|p| p.0 < t).count();
                (t, n)
            }
            MarginRule::PerRealizationCutSet => {
                let n = pairs.iter().filter(|p| p.0 < p.1).count();
                (mean_cut, n)
            }
        };
        let (ci_low, ci_high) = wilson_interval(outages as u64, cfg.trials, 1.96);
        out.push(OutagePoint {
            relays: k,
            target,
            outage: outages as f64 / cfg.trials as f64,
            ci_low,
            ci_high,
            trials: cfg.trials,
        });
    }
    Ok(out)
}
