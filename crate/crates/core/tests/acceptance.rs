//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fdcoop::allocator::{allocate, check_constraints, AllocationPlan, RateReport};
use fdcoop::concavity_audit::{
    analytic_coop_eigenvalues, audit_concavity, fd_hessian, simplified_objective, sym2_eigenvalues,
    AuditPoint, AuditSpec,
};
use fdcoop::lapjv::{solve_square, CostMatrix};
use fdcoop::montecarlo::{run_sweep_trials, PointTrials, SiMode, SweepSpec};
use fdcoop::scenario::{normalize_gains, sample_channels, NormalizedGains, ScenarioConfig};

const LAP_MATRICES: usize = 1000;
const LAP_TIME_LIMIT: Duration = Duration::from_secs(5);

const E2E_REALIZATIONS: u64 = 200;
const E2E_TOL_BPS_HZ: f64 = 1e-3;
const ORACLE_GRID: usize = 100;
const ORACLE_ZOOM_ROUNDS: usize = 8;

const AUDIT_SPOT: f64 = -0.5;
const AUDIT_SPOT_TOL: f64 = 1e-12;
const AUDIT_SPOT_FD_REL_TOL: f64 = 1e-3;

const SWEEP_TRIALS: usize = 500;
const SWEEP_PMAX_DBM: [f64; 6] = [0.0, 5.0, 10.0, 15.0, 20.0, 25.0];
const SWEEP_TIME_LIMIT: Duration = Duration::from_secs(120);
/// Allowed decrease of a trial's sum-rate when the power budget grows.
const MONOTONE_TOL_BPS_HZ: f64 = 1e-9;
/// Allowed excess of the with-SI sum-rate over the paired without-SI one.
const SI_TOL_BPS_HZ: f64 = 0.0;

const DETERMINISM_TRIALS: usize = 40;

type Plans = Vec<(AllocationPlan<f64>, RateReport<f64>, ScenarioConfig)>;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: u32, name: &str, outcome: &Outcome) -> bool {
    let status = if outcome.pass { "PASS" } else { "FAIL" };
    println!("{status} criterion {id} ({name}): {}", outcome.detail);
    outcome.pass
}

// ---------------------------------------------------------------- criterion 1

fn brute_force_min(m: &CostMatrix<f64>) -> f64 {
    let n = m.rows();
    (0..n)
        .permutations(n)
        .map(|perm| {
            perm.iter()
                .enumerate()
                .map(|(r, &c)| m.get(r, c))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

fn criterion_lap() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut solver_time = Duration::ZERO;
    let mut mismatches = 0;
    for t in 0..LAP_MATRICES {
        let n = rng.random_range(2..=7);
        let integer = t % 2 == 1;
        let m = CostMatrix::from_fn(n, n, |_, _| {
            if integer {
                rng.random_range(0..100) as f64
            } else {
                rng.random::<f64>()
            }
        })
        .expect("finite matrix");
        let start = Instant::now();
        let a = solve_square(&m).expect("square instance");
        solver_time += start.elapsed();
        // both totals summed in row order
        let lap_total: f64 = a.pairs().map(|(r, c)| m.get(r, c)).sum();
        if lap_total != brute_force_min(&m) {
            mismatches += 1;
        }
    }
    Outcome {
        pass: mismatches == 0 && solver_time < LAP_TIME_LIMIT,
        detail: format!(
            "{mismatches}/{LAP_MATRICES} mismatches vs brute force, solver time {:.3} s (limit {} s)",
            solver_time.as_secs_f64(),
            LAP_TIME_LIMIT.as_secs()
        ),
    }
}

// ---------------------------------------------------------------- criterion 2

fn coop_rate(a: f64, b: f64, c: f64, x: f64, y: f64) -> f64 {
    let sinr = x * y * a * b / (1.0 + y * b + x * a + c + c * x * a);
    0.5 * (1.0 + sinr).log2()
}

fn direct_slot_rate(b: f64, c: f64, p: f64) -> f64 {
    0.5 * (1.0 + p * b / (1.0 + c)).log2()
}

/// Best cooperative rate over `x + y = budget`, by a uniform grid that is
/// repeatedly narrowed around its best point.
fn zoom_grid_coop(a: f64, b: f64, c: f64, budget: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, budget);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..ORACLE_ZOOM_ROUNDS {
        let step = (hi - lo) / (ORACLE_GRID - 1) as f64;
        let (idx, value) = (0..ORACLE_GRID)
            .map(|t| {
                let x = (lo + step * t as f64).min(budget);
                coop_rate(a, b, c, x, budget - x)
            })
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (t, v)| if v > acc.1 { (t, v) } else { acc },
            );
        best = best.max(value);
        let centre = lo + step * idx as f64;
        lo = (centre - step).max(0.0);
        hi = (centre + step).min(budget);
    }
    best
}

fn grid_direct(b: f64, c: f64, budget: f64) -> f64 {
    let slot = (0..ORACLE_GRID)
        .map(|t| direct_slot_rate(b, c, budget * t as f64 / (ORACLE_GRID - 1) as f64))
        .fold(f64::NEG_INFINITY, f64::max);
    2.0 * slot
}

/// Exhaustive optimum for one far user and two near users: relay choice ×
/// subcarrier assignment × power grid.
fn exhaustive_sum_rate(gains: &NormalizedGains<f64>, cfg: &ScenarioConfig) -> f64 {
    assert_eq!((cfg.k1, cfg.k2), (1, 2));
    let (p, z, n) = (cfg.pmax_user_w(), cfg.pmax_bs_w(), cfg.n_subcarriers);
    let mut best = f64::NEG_INFINITY;
    for relay in 0..2 {
        let near = 1 - relay;
        let coop: Vec<f64> = (0..n)
            .map(|i| {
                zoom_grid_coop(
                    gains.alpha(0, relay, i),
                    gains.beta(relay, i),
                    z * gains.gamma_si(i),
                    p,
                )
            })
            .collect();
        let direct: Vec<f64> = (0..n)
            .map(|j| grid_direct(gains.beta(near, j), z * gains.gamma_si(j), p))
            .collect();
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                best = best.max(coop[i] + direct[j]);
            }
        }
    }
    best
}

fn criterion_end_to_end(plans: &mut Plans) -> Outcome {
    let mut worst = 0.0f64;
    let mut failures = 0;
    let mut cases = 0;
    for si_enabled in [true, false] {
        let cfg = ScenarioConfig {
            k1: 1,
            k2: 2,
            n_subcarriers: 4,
            si_enabled,
            ..ScenarioConfig::default()
        };
        for t in 0..E2E_REALIZATIONS {
            let gains =
                normalize_gains(&cfg, &sample_channels::<f64>(&cfg, t)).expect("consistent gains");
            let (plan, rep) = allocate(&gains, &cfg).expect("allocation");
            let gap = (rep.sum_rate_bps_hz - exhaustive_sum_rate(&gains, &cfg)).abs();
            worst = worst.max(gap);
            if !(gap <= E2E_TOL_BPS_HZ) {
                failures += 1;
            }
            cases += 1;
            plans.push((plan, rep, cfg.clone()));
        }
    }
    Outcome {
        pass: failures == 0,
        detail: format!("{failures}/{cases} realizations off by more than {E2E_TOL_BPS_HZ}; worst gap {worst:.3e} bit/s/Hz"),
    }
}

// ---------------------------------------------------------------- criterion 3

fn criterion_audit() -> Outcome {
    let report = audit_concavity(&AuditSpec::default()).expect("audit runs");
    let unit = AuditPoint {
        x: 1.0,
        y: 1.0,
        a: 1.0,
        b: 1.0,
        c: 1.0,
    };
    // -2·a²b²c(x²+y²)/(acx+by)³ at the unit point: -2·2/8
    let (_, analytic) = analytic_coop_eigenvalues(&unit).expect("non-zero denominator");
    let q = unit.to_rational();
    let [_, fd] =
        sym2_eigenvalues(&fd_hessian(simplified_objective(&q), (&q.x, &q.y)).expect("finite"));
    let spot_ok = (analytic - AUDIT_SPOT).abs() <= AUDIT_SPOT_TOL
        && ((fd - AUDIT_SPOT) / AUDIT_SPOT).abs() <= AUDIT_SPOT_FD_REL_TOL;
    let enough =
        report.cooperative.points_tested >= 1000 && report.noncooperative.points_tested >= 1000;
    Outcome {
        pass: report.pass && spot_ok && enough,
        detail: format!(
            "points {}+{}, max fd eigenvalue {:.3e}/{:.3e} (slack {}), max rel error {:.3e}/{:.3e} (tol {}), \
             spot analytic {analytic} fd {fd:.6}",
            report.cooperative.points_tested,
            report.noncooperative.points_tested,
            report.cooperative.max_fd_eigenvalue,
            report.noncooperative.max_fd_eigenvalue,
            report.eigen_slack,
            report.cooperative.max_relative_error,
            report.noncooperative.max_relative_error,
            report.eigen_rel_tol,
        ),
    }
}

// ---------------------------------------------------------- criteria 4 and 5

fn find<'a>(
    points: &'a [PointTrials<f64>],
    si: SiMode,
    pmax: f64,
    group: (usize, usize),
) -> &'a PointTrials<f64> {
    points
        .iter()
        .find(|p| p.si_mode == si && p.pmax_dbm == pmax && (p.k1, p.k2) == group)
        .expect("sweep point present")
}

fn collect_plans(points: &[PointTrials<f64>], base: &SweepSpec, plans: &mut Plans) {
    for p in points {
        let cfg = base.point_config(p.k1, p.k2, p.pmax_dbm, p.si_mode);
        for t in &p.trials {
            plans.push((t.plan.clone(), t.report.clone(), cfg.clone()));
        }
    }
}

fn criteria_power_and_si(plans: &mut Plans) -> (Outcome, Outcome) {
    let spec = SweepSpec {
        pmax_user_dbm_values: SWEEP_PMAX_DBM.to_vec(),
        si_modes: vec![SiMode::WithSi, SiMode::WithoutSi],
        trials_per_point: SWEEP_TRIALS,
        group_sizes: vec![(2, 2)],
        base: ScenarioConfig::default(),
    };
    let start = Instant::now();
    let points = run_sweep_trials(&spec).expect("sweep runs");
    let elapsed = start.elapsed();

    let mut drops = 0;
    let mut worst_drop = 0.0f64;
    for si in [SiMode::WithSi, SiMode::WithoutSi] {
        for (lo, hi) in SWEEP_PMAX_DBM.iter().tuple_windows() {
            let (a, b) = (
                find(&points, si, *lo, (2, 2)),
                find(&points, si, *hi, (2, 2)),
            );
            for (ta, tb) in a.trials.iter().zip(&b.trials) {
                let drop = ta.report.sum_rate_bps_hz - tb.report.sum_rate_bps_hz;
                worst_drop = worst_drop.max(drop);
                if drop > MONOTONE_TOL_BPS_HZ {
                    drops += 1;
                }
            }
        }
    }
    let steps = 2 * (SWEEP_PMAX_DBM.len() - 1) * SWEEP_TRIALS;
    let monotone = Outcome {
        pass: drops == 0 && elapsed < SWEEP_TIME_LIMIT,
        detail: format!(
            "{drops}/{steps} power steps lowered a trial's sum-rate (worst drop {worst_drop:.3e}); \
             sweep time {:.2} s (limit {} s)",
            elapsed.as_secs_f64(),
            SWEEP_TIME_LIMIT.as_secs()
        ),
    };

    let mut si_failures = 0;
    let mut compared = 0;
    for &pmax in &SWEEP_PMAX_DBM {
        let (w, wo) = (
            find(&points, SiMode::WithSi, pmax, (2, 2)),
            find(&points, SiMode::WithoutSi, pmax, (2, 2)),
        );
        for (tw, two) in w.trials.iter().zip(&wo.trials) {
            compared += 1;
            if tw.report.sum_rate_bps_hz - two.report.sum_rate_bps_hz > SI_TOL_BPS_HZ {
                si_failures += 1;
            }
        }
    }
    let si = Outcome {
        pass: si_failures == 0,
        detail: format!("{si_failures}/{compared} paired trials where SI raised the sum-rate"),
    };
    collect_plans(&points, &spec, plans);
    (monotone, si)
}

// ---------------------------------------------------------------- criterion 6

fn criterion_group_size(plans: &mut Plans) -> Outcome {
    let spec = SweepSpec {
        pmax_user_dbm_values: vec![20.0],
        si_modes: vec![SiMode::WithSi, SiMode::WithoutSi],
        trials_per_point: SWEEP_TRIALS,
        group_sizes: vec![(2, 2), (4, 4)],
        base: ScenarioConfig::default(),
    };
    let points = run_sweep_trials(&spec).expect("sweep runs");
    let mean = |p: &PointTrials<f64>| {
        p.trials
            .iter()
            .map(|t| t.report.sum_rate_bps_hz)
            .sum::<f64>()
            / p.trials.len() as f64
    };
    let mut pass = true;
    let mut detail = Vec::new();
    for si in [SiMode::WithSi, SiMode::WithoutSi] {
        let (small, large) = (
            mean(find(&points, si, 20.0, (2, 2))),
            mean(find(&points, si, 20.0, (4, 4))),
        );
        pass &= large > small;
        detail.push(format!(
            "{}: mean (4,4) {large:.4} vs (2,2) {small:.4}",
            si.as_str()
        ));
    }
    collect_plans(&points, &spec, plans);
    Outcome {
        pass,
        detail: detail.join("; "),
    }
}

// ---------------------------------------------------------------- criterion 7

fn criterion_constraints(plans: &Plans) -> Outcome {
    let mut hard = 0;
    let mut outages = 0;
    for (plan, rep, cfg) in plans {
        let violations = check_constraints(plan, rep, cfg);
        if violations.iter().any(|v| (1..=6).contains(&v.constraint)) {
            hard += 1;
        }
        if violations.iter().any(|v| v.constraint >= 7) {
            outages += 1;
            if rep.feasible {
                // a QoS violation must be flagged as outage
                hard += 1;
            }
        }
    }
    Outcome {
        pass: hard == 0 && !plans.is_empty(),
        detail: format!(
            "{hard}/{} plans violate families 1-6 or hide an outage; {outages} flagged QoS outages",
            plans.len()
        ),
    }
}

// ---------------------------------------------------------------- criterion 8

fn criterion_determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let config = dir.path().join("sweep.json");
    std::fs::write(
        &config,
        format!(
            r#"{{"scenario": {{"seed": 11}}, "sweep": {{"trials_per_point": {DETERMINISM_TRIALS}, "group_sizes": [[2, 2], [3, 3]]}}}}"#
        ),
    )
    .expect("write config");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_fdcoop"))
            .arg("sweep")
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .status()
            .expect("binary runs");
        (status.success(), std::fs::read(&out).unwrap_or_default())
    };
    let (ok_a, a) = run("a.csv");
    let (ok_b, b) = run("b.csv");
    let rows = a.iter().filter(|&&c| c == b'\n').count();
    Outcome {
        pass: ok_a && ok_b && !a.is_empty() && a == b,
        detail: format!(
            "exit ok {ok_a}/{ok_b}, {} bytes / {rows} lines, identical {}",
            a.len(),
            a == b
        ),
    }
}

fn main() {
    let mut plans = Plans::new();
    let mut all = true;
    all &= report(1, "LAP optimality", &criterion_lap());
    all &= report(
        2,
        "end-to-end optimality",
        &criterion_end_to_end(&mut plans),
    );
    all &= report(3, "concavity audit", &criterion_audit());
    let (monotone, si) = criteria_power_and_si(&mut plans);
    all &= report(4, "power monotonicity", &monotone);
    all &= report(5, "SI penalty", &si);
    all &= report(6, "group size", &criterion_group_size(&mut plans));
    all &= report(7, "constraint conformance", &criterion_constraints(&plans));
    all &= report(8, "determinism", &criterion_determinism());
    if !all {
        std::process::exit(1);
    }
}
