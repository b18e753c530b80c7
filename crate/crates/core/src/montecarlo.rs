//! Monte-Carlo sweeps of the allocator over random channel realizations.
//!
//! Trials use common random numbers: trial `t` of every sweep point draws the
//! same channel realization (for a given group size), so comparisons between
//! power levels and SI modes are paired per trial.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocator::{allocate, AllocError, AllocationPlan, RateReport};
use crate::scenario::{normalize_gains, sample_channels, ScenarioConfig, ScenarioError};
use crate::Real;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] ScenarioError),
    #[error("invalid sweep: `{field}` {reason}")]
    Spec { field: &'static str, reason: String },
    #[error("trial {trial} at k1={k1} k2={k2}: {source}")]
    Alloc {
        trial: u64,
        k1: usize,
        k2: usize,
        #[source]
        source: AllocError,
    },
    #[error("cannot aggregate an empty sample")]
    EmptySample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiMode {
    WithSi,
    WithoutSi,
}

impl SiMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SiMode::WithSi => "with_si",
            SiMode::WithoutSi => "without_si",
        }
    }

    pub fn enabled(self) -> bool {
        self == SiMode::WithSi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub pmax_user_dbm_values: Vec<f64>,
    pub si_modes: Vec<SiMode>,
    pub trials_per_point: usize,
    /// `(k1, k2)` pairs.
    pub group_sizes: Vec<(usize, usize)>,
}

pub const DEFAULT_PMAX_DBM: [f64; 6] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0];
pub const DEFAULT_TRIALS: usize = 500;

impl SweepSpec {
    /// Default grid around `base`: 0 to 25 dBm in 5 dB steps, both SI modes,
    /// the base group size and 500 trials per point.
    pub fn around(base: ScenarioConfig) -> Self {
        let group = (base.k1, base.k2);
        Self {
            base,
            pmax_user_dbm_values: DEFAULT_PMAX_DBM.to_vec(),
            si_modes: vec![SiMode::WithSi, SiMode::WithoutSi],
            trials_per_point: DEFAULT_TRIALS,
            group_sizes: vec![group],
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let spec = |field, reason: &str| SweepError::Spec {
            field,
            reason: reason.to_string(),
        };
        if self.trials_per_point < 1 {
            return Err(spec("trials_per_point", "must be at least 1"));
        }
        if self.pmax_user_dbm_values.is_empty() {
            return Err(spec("pmax_user_dbm_values", "must not be empty"));
        }
        if self.pmax_user_dbm_values.iter().any(|v| !v.is_finite())
            || self.pmax_user_dbm_values.windows(2).any(|w| !(w[1] > w[0]))
        {
            return Err(spec(
                "pmax_user_dbm_values",
                "must be finite and strictly increasing",
            ));
        }
        if self.si_modes.is_empty() {
            return Err(spec("si_modes", "must not be empty"));
        }
        if self
            .si_modes
            .iter()
            .enumerate()
            .any(|(i, m)| self.si_modes[..i].contains(m))
        {
            return Err(spec("si_modes", "must not repeat a mode"));
        }
        if self.group_sizes.is_empty() {
            return Err(spec("group_sizes", "must not be empty"));
        }
        for &point in &self.pmax_user_dbm_values {
            for &(k1, k2) in &self.group_sizes {
                self.point_config(k1, k2, point, SiMode::WithSi)
                    .validate()?;
            }
        }
        Ok(())
    }

    pub fn point_config(&self, k1: usize, k2: usize, pmax_dbm: f64, si: SiMode) -> ScenarioConfig {
        ScenarioConfig {
            k1,
            k2,
            pmax_user_dbm: pmax_dbm,
            si_enabled: si.enabled(),
            ..self.base.clone()
        }
    }
}

/// One (trial, point) allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord<T> {
    pub trial_index: u64,
    pub plan: AllocationPlan<T>,
    pub report: RateReport<T>,
}

/// All trials of one sweep point, ordered by trial index.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTrials<T> {
    pub pmax_dbm: f64,
    pub si_mode: SiMode,
    pub k1: usize,
    pub k2: usize,
    pub trials: Vec<TrialRecord<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub pmax_dbm: f64,
    pub si_mode: SiMode,
    pub k1: usize,
    pub k2: usize,
    pub trials: usize,
    pub mean_sum_rate: f64,
    pub ci95_halfwidth: f64,
    pub outage_fraction: f64,
    /// A single trial gives no spread estimate; the half-width is then 0.
    pub degenerate_sample: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub records: Vec<SweepRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub mean: f64,
    pub ci95_halfwidth: f64,
    pub outage_fraction: f64,
    pub degenerate: bool,
}

/// Mean, normal-approximation 95% half-width `1.96·s/√n` with the sample
/// standard deviation `s`, and the fraction of infeasible trials.
pub fn aggregate(samples: &[(f64, bool)]) -> Result<Aggregate, SweepError> {
    let n = samples.len();
    if n == 0 {
        return Err(SweepError::EmptySample);
    }
    let nf = n as f64;
    let mean = samples.iter().map(|s| s.0).sum::<f64>() / nf;
    let outage = samples.iter().filter(|s| !s.1).count() as f64 / nf;
    if n == 1 {
        return Ok(Aggregate {
            mean,
            ci95_halfwidth: 0.0,
            outage_fraction: outage,
            degenerate: true,
        });
    }
    let var = samples.iter().map(|s| (s.0 - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(Aggregate {
        mean,
        ci95_halfwidth: 1.96 * var.sqrt() / nf.sqrt(),
        outage_fraction: outage,
        degenerate: false,
    })
}

/// Allocation for realization `trial_index` of `config`.
pub fn run_trial_detailed<T: Real>(
    config: &ScenarioConfig,
    trial_index: u64,
) -> Result<(AllocationPlan<T>, RateReport<T>), SweepError> {
    config.validate()?;
    let channels = sample_channels::<T>(config, trial_index);
    let gains = normalize_gains(config, &channels)?;
    allocate(&gains, config).map_err(|source| SweepError::Alloc {
        trial: trial_index,
        k1: config.k1,
        k2: config.k2,
        source,
    })
}

pub fn run_trial<T: Real>(
    config: &ScenarioConfig,
    trial_index: u64,
) -> Result<RateReport<T>, SweepError> {
    run_trial_detailed(config, trial_index).map(|(_, report)| report)
}

/// Runs every trial of every sweep point. Ordering: group size, then SI
/// mode, then power; trials by index. Parallel over trials with an ordered
/// collection, so the output does not depend on the thread count.
pub fn run_sweep_trials(spec: &SweepSpec) -> Result<Vec<PointTrials<f64>>, SweepError> {
    spec.validate()?;
    let mut points = Vec::new();
    for &(k1, k2) in &spec.group_sizes {
        let per_trial: Vec<Vec<TrialRecord<f64>>> = (0..spec.trials_per_point as u64)
            .into_par_iter()
            .map(|t| trial_across_points(spec, k1, k2, t))
            .collect::<Result<_, _>>()?;
        let mut slot = 0;
        for &si_mode in &spec.si_modes {
            for &pmax_dbm in &spec.pmax_user_dbm_values {
                let trials = per_trial.iter().map(|row| row[slot].clone()).collect();
                points.push(PointTrials {
                    pmax_dbm,
                    si_mode,
                    k1,
                    k2,
                    trials,
                });
                slot += 1;
            }
        }
    }
    Ok(points)
}

fn trial_across_points(
    spec: &SweepSpec,
    k1: usize,
    k2: usize,
    trial_index: u64,
) -> Result<Vec<TrialRecord<f64>>, SweepError> {
    let base = spec.point_config(k1, k2, spec.pmax_user_dbm_values[0], SiMode::WithSi);
    let channels = sample_channels::<f64>(&base, trial_index);
    let mut out = Vec::with_capacity(spec.si_modes.len() * spec.pmax_user_dbm_values.len());
    for &si in &spec.si_modes {
        for &pmax in &spec.pmax_user_dbm_values {
            let config = spec.point_config(k1, k2, pmax, si);
            let gains = normalize_gains(&config, &channels)?;
            let (plan, report) = allocate(&gains, &config).map_err(|source| SweepError::Alloc {
                trial: trial_index,
                k1,
                k2,
                source,
            })?;
            out.push(TrialRecord {
                trial_index,
                plan,
                report,
            });
        }
    }
    Ok(out)
}

pub fn summarize(points: &[PointTrials<f64>]) -> Result<SweepResult, SweepError> {
    let records = points
        .iter()
        .map(|p| {
            let samples: Vec<(f64, bool)> = p
                .trials
                .iter()
                .map(|t| (t.report.sum_rate_bps_hz, t.report.feasible))
                .collect();
            let agg = aggregate(&samples)?;
            Ok(SweepRecord {
                pmax_dbm: p.pmax_dbm,
                si_mode: p.si_mode,
                k1: p.k1,
                k2: p.k2,
                trials: samples.len(),
                mean_sum_rate: agg.mean,
                ci95_halfwidth: agg.ci95_halfwidth,
                outage_fraction: agg.outage_fraction,
                degenerate_sample: agg.degenerate,
            })
        })
        .collect::<Result<_, SweepError>>()?;
    Ok(SweepResult { records })
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    summarize(&run_sweep_trials(spec)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(trials: usize) -> SweepSpec {
        SweepSpec {
            pmax_user_dbm_values: vec![0.0, 10.0, 20.0],
            trials_per_point: trials,
            ..SweepSpec::around(ScenarioConfig::default())
        }
    }

    #[test]
    fn aggregate_cases() {
        let a = aggregate(&[(2.0, true), (2.0, true), (2.0, true)]).unwrap();
        assert_eq!(
            (a.mean, a.ci95_halfwidth, a.outage_fraction),
            (2.0, 0.0, 0.0)
        );
        // sample std of [0, 4] is 2·√2
        let a = aggregate(&[(0.0, true), (4.0, false)]).unwrap();
        assert_eq!(a.mean, 2.0);
        assert!((a.ci95_halfwidth - 3.92).abs() < 1e-12);
        assert_eq!(a.outage_fraction, 0.5);
        let a = aggregate(&[(1.5, false)]).unwrap();
        assert!(a.degenerate && a.ci95_halfwidth == 0.0 && a.outage_fraction == 1.0);
        assert_eq!(aggregate(&[]), Err(SweepError::EmptySample));
    }

    #[test]
    fn trial_is_deterministic() {
        let cfg = ScenarioConfig::default();
        let a = run_trial::<f64>(&cfg, 9).unwrap();
        let b = run_trial::<f64>(&cfg, 9).unwrap();
        assert_eq!(a.sum_rate_bps_hz.to_bits(), b.sum_rate_bps_hz.to_bits());
    }

    #[test]
    fn smoke_trials_are_positive() {
        let cfg = ScenarioConfig::default();
        for t in 0..100 {
            let r = run_trial::<f64>(&cfg, t).unwrap();
            assert!(r.sum_rate_bps_hz.is_finite() && r.sum_rate_bps_hz > 0.0);
        }
    }

    #[test]
    fn si_never_helps_per_trial() {
        let cfg = ScenarioConfig::default();
        let off = ScenarioConfig {
            si_enabled: false,
            ..cfg.clone()
        };
        for t in 0..50 {
            let with = run_trial::<f64>(&cfg, t).unwrap();
            let without = run_trial::<f64>(&off, t).unwrap();
            assert!(without.sum_rate_bps_hz >= with.sum_rate_bps_hz);
        }
    }

    #[test]
    fn sweep_shape_and_ordering() {
        let spec = small_spec(5);
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.records.len(), 6);
        assert_eq!(result.records[0].si_mode, SiMode::WithSi);
        assert_eq!(result.records[3].si_mode, SiMode::WithoutSi);
        for r in &result.records {
            assert!(r.mean_sum_rate >= 0.0 && r.ci95_halfwidth >= 0.0);
            assert!((0.0..=1.0).contains(&r.outage_fraction));
        }
        for w in result.records[..3].windows(2) {
            assert!(w[1].mean_sum_rate >= w[0].mean_sum_rate);
        }
    }

    #[test]
    fn single_trial_is_degenerate() {
        let result = run_sweep(&small_spec(1)).unwrap();
        assert!(result
            .records
            .iter()
            .all(|r| r.degenerate_sample && r.ci95_halfwidth == 0.0));
    }

    #[test]
    fn sweep_is_reproducible() {
        let spec = small_spec(8);
        assert_eq!(run_sweep(&spec).unwrap(), run_sweep(&spec).unwrap());
    }

    #[test]
    fn larger_groups_raise_mean_sum_rate() {
        let spec = SweepSpec {
            pmax_user_dbm_values: vec![20.0],
            si_modes: vec![SiMode::WithSi],
            group_sizes: vec![(2, 2), (4, 4)],
            trials_per_point: 20,
            ..SweepSpec::around(ScenarioConfig::default())
        };
        let r = run_sweep(&spec).unwrap();
        assert!(r.records[1].mean_sum_rate > r.records[0].mean_sum_rate);
    }

    #[test]
    fn spec_validation() {
        let mut spec = small_spec(0);
        assert!(matches!(
            spec.validate(),
            Err(SweepError::Spec {
                field: "trials_per_point",
                ..
            })
        ));
        spec.trials_per_point = 2;
        spec.pmax_user_dbm_values = vec![5.0, 5.0];
        assert!(matches!(
            spec.validate(),
            Err(SweepError::Spec {
                field: "pmax_user_dbm_values",
                ..
            })
        ));
        spec.pmax_user_dbm_values = vec![5.0];
        spec.si_modes = vec![SiMode::WithSi, SiMode::WithSi];
        assert!(spec.validate().is_err());
        spec.si_modes = vec![SiMode::WithSi];
        spec.group_sizes = vec![(0, 2)];
        assert!(matches!(spec.validate(), Err(SweepError::Config(_))));
    }
}
