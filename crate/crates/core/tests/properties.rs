use itertools::Itertools;
use proptest::prelude::*;

use fdcoop::allocator::{allocate, check_constraints, Entity};
use fdcoop::lapjv::{solve_rectangular, solve_square, CostMatrix};
use fdcoop::montecarlo::aggregate;
use fdcoop::scenario::{
    dbm_to_watts, normalize_gains, sample_channels, watts_to_dbm, ScenarioConfig,
};

fn brute_force(m: &CostMatrix<f64>) -> f64 {
    let (r, c) = (m.rows(), m.cols());
    (0..c)
        .permutations(r)
        .map(|cols| {
            cols.iter()
                .enumerate()
                .map(|(i, &j)| m.get(i, j))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

fn matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = CostMatrix<f64>> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-50i32..50, r * c).prop_map(move |v| {
            CostMatrix::new(r, c, v.into_iter().map(f64::from).collect()).unwrap()
        })
    })
}

fn scenario() -> impl Strategy<Value = (ScenarioConfig, u64)> {
    (
        1usize..=3,
        1usize..=3,
        0usize..=3,
        -10.0f64..30.0,
        any::<u64>(),
        0u64..1000,
    )
        .prop_map(|(k1, k2, spare, pmax, seed, trial)| {
            let cfg = ScenarioConfig {
                k1,
                k2,
                n_subcarriers: k1 + k2 + spare,
                pmax_user_dbm: pmax,
                seed,
                ..ScenarioConfig::default()
            };
            (cfg, trial)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dbm_round_trip(p in -200.0f64..60.0) {
        prop_assert!((watts_to_dbm(dbm_to_watts(p)) - p).abs() <= 1e-12);
    }

    #[test]
    fn square_lap_is_optimal(m in matrix(6, 6).prop_filter("square", |m| m.is_square())) {
        let a = solve_square(&m).unwrap();
        prop_assert!(a.row_to_col.iter().flatten().all_unique());
        prop_assert_eq!(a.total_cost, brute_force(&m));
    }

    #[test]
    fn wide_lap_is_optimal(m in matrix(5, 7).prop_filter("wide", |m| m.rows() <= m.cols())) {
        let a = solve_rectangular(&m).unwrap();
        prop_assert!(a.row_to_col.iter().all(Option::is_some));
        prop_assert_eq!(a.total_cost, brute_force(&m));
    }

    #[test]
    fn constant_row_shift_moves_optimum_by_shift(m in matrix(5, 5).prop_filter("square", |m| m.is_square()), row in 0usize..5, shift in -20i32..20) {
        let row = row % m.rows();
        let shifted = CostMatrix::from_fn(m.rows(), m.cols(), |r, c| m.get(r, c) + if r == row { f64::from(shift) } else { 0.0 }).unwrap();
        let (a, b) = (solve_square(&m).unwrap(), solve_square(&shifted).unwrap());
        prop_assert_eq!(b.total_cost, a.total_cost + f64::from(shift));
    }

    #[test]
    fn allocation_invariants((cfg, trial) in scenario()) {
        let gains = normalize_gains(&cfg, &sample_channels::<f64>(&cfg, trial)).unwrap();
        let (plan, report) = allocate(&gains, &cfg).unwrap();
        let pmax = cfg.pmax_user_w();

        // budgets bind
        for link in &plan.coop {
            prop_assert!((link.far_power_w + link.relay_power_w - pmax).abs() <= 1e-12 * pmax);
            prop_assert!(link.far_power_w >= 0.0 && link.relay_power_w >= 0.0);
        }
        for link in &plan.direct {
            prop_assert_eq!(link.power_w, [pmax, pmax]);
        }
        // relays carry no own traffic
        prop_assert!(plan.direct.iter().all(|d| !plan.relay_of.contains(&d.user)));
        // every far user and non-relay near user is scheduled
        let relays = plan.relay_of.iter().unique().count();
        prop_assert_eq!(report.entities.len(), cfg.k1 + cfg.k2 - relays);

        let total: f64 = report.entities.iter().map(|e| e.rate_bps_hz).sum();
        prop_assert!((total - report.sum_rate_bps_hz).abs() <= 1e-12 * total.max(1.0));
        for e in &report.entities {
            prop_assert_eq!(e.qos_met, e.rate_bps_hz >= e.rmin_bps_hz);
            let expected = match e.entity {
                Entity::Cooperative { .. } => cfg.rmin_coop_bps_hz,
                Entity::Direct { .. } => cfg.rmin_noncoop_bps_hz,
            };
            prop_assert_eq!(e.rmin_bps_hz, expected);
        }
        prop_assert_eq!(report.feasible, report.entities.iter().all(|e| e.qos_met));
        prop_assert!(check_constraints(&plan, &report, &cfg).iter().all(|v| v.constraint >= 7));
    }

    #[test]
    fn more_power_never_hurts((cfg, trial) in scenario(), step in 0.0f64..10.0) {
        let channels = sample_channels::<f64>(&cfg, trial);
        let louder = ScenarioConfig { pmax_user_dbm: cfg.pmax_user_dbm + step, ..cfg.clone() };
        let (_, low) = allocate(&normalize_gains(&cfg, &channels).unwrap(), &cfg).unwrap();
        let (_, high) = allocate(&normalize_gains(&louder, &channels).unwrap(), &louder).unwrap();
        prop_assert!(high.sum_rate_bps_hz >= low.sum_rate_bps_hz - 1e-9);
    }

    #[test]
    fn removing_si_never_hurts((cfg, trial) in scenario()) {
        let channels = sample_channels::<f64>(&cfg, trial);
        let clean = ScenarioConfig { si_enabled: false, ..cfg.clone() };
        let (_, with) = allocate(&normalize_gains(&cfg, &channels).unwrap(), &cfg).unwrap();
        let (_, without) = allocate(&normalize_gains(&clean, &channels).unwrap(), &clean).unwrap();
        prop_assert!(without.sum_rate_bps_hz >= with.sum_rate_bps_hz);
    }

    #[test]
    fn aggregate_bounds(samples in prop::collection::vec((0.0f64..100.0, any::<bool>()), 1..60)) {
        let agg = aggregate(&samples).unwrap();
        let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        let hi = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(agg.mean >= lo - 1e-9 && agg.mean <= hi + 1e-9);
        prop_assert!(agg.ci95_halfwidth >= 0.0);
        prop_assert!((0.0..=1.0).contains(&agg.outage_fraction));
        prop_assert_eq!(agg.degenerate, samples.len() == 1);
    }
}
