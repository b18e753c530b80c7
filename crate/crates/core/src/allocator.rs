//! Relay selection, subcarrier assignment and power allocation for one
//! channel realization.
//!
//! Every scheduled entity (a far user with its relay, or a near user sending
//! directly) occupies one subcarrier index in both time slots. With that
//! restriction the per-entity rates are independent once the relays are
//! fixed, so the subcarrier step is a single rectangular assignment problem
//! over entities × subcarriers with negated full-budget rates as costs.
//!
//! Power and subcarrier constraints are enforced by construction. Minimum
//! rate requirements are evaluated and reported, never repaired.

use std::collections::BTreeSet;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::lapjv::{self, CostMatrix, LapError};
use crate::rate_model::{
    self, rate_from_sinr, sinr_cooperative, sinr_noncooperative, CoopLinkParams, NonCoopLinkParams,
    RateError, SinrForm,
};
use crate::scenario::{NormalizedGains, ScenarioConfig};
use crate::search::maximize_on_interval;
use crate::Real;

/// Grid points of the pre-scan before golden-section refinement.
pub const POWER_GRID_POINTS: usize = 64;
/// Relative bracket width at which the power search stops.
pub const POWER_REL_TOL: f64 = 1e-10;
/// Relative slack on power budgets in [`check_constraints`].
pub const BUDGET_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AllocError {
    #[error("{entities} entities cannot share {subcarriers} subcarriers one-to-one")]
    OverSubscribed { entities: usize, subcarriers: usize },
    #[error("gains do not match configuration")]
    Inconsistent,
    #[error("relay map has {got} entries, expected {expected}")]
    RelayMap { expected: usize, got: usize },
    #[error(transparent)]
    Lap(#[from] LapError),
    #[error(transparent)]
    Rate(#[from] RateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubcarrierPair {
    pub slot1: usize,
    pub slot2: usize,
}

impl SubcarrierPair {
    pub fn same(index: usize) -> Self {
        Self {
            slot1: index,
            slot2: index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoopLink<T> {
    pub far_user: usize,
    pub relay: usize,
    pub subcarriers: SubcarrierPair,
    pub far_power_w: T,
    pub relay_power_w: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectLink<T> {
    pub user: usize,
    pub subcarriers: SubcarrierPair,
    /// Transmit power in slot 1 and slot 2.
    pub power_w: [T; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationPlan<T> {
    /// Relay (near-user index) chosen for each far user.
    pub relay_of: Vec<usize>,
    pub coop: Vec<CoopLink<T>>,
    pub direct: Vec<DirectLink<T>>,
    pub bs_power_w: T,
    pub sinr_form: SinrForm,
}

impl<T> AllocationPlan<T> {
    /// Subcarriers carrying nothing in slot 1 and in slot 2.
    pub fn idle_subcarriers(&self, n: usize) -> [Vec<usize>; 2] {
        let mut used = [vec![false; n], vec![false; n]];
        let pairs = self
            .coop
            .iter()
            .map(|l| l.subcarriers)
            .chain(self.direct.iter().map(|l| l.subcarriers));
        for p in pairs {
            if let Some(u) = used[0].get_mut(p.slot1) {
                *u = true;
            }
            if let Some(u) = used[1].get_mut(p.slot2) {
                *u = true;
            }
        }
        used.map(|u| (0..n).filter(|&i| !u[i]).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Entity {
    Cooperative { far_user: usize, relay: usize },
    Direct { user: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityRate<T> {
    pub entity: Entity,
    pub rate_bps_hz: T,
    pub rmin_bps_hz: T,
    pub qos_met: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport<T> {
    pub entities: Vec<EntityRate<T>>,
    pub sum_rate_bps_hz: T,
    /// Every far user and every non-relaying near user meets its minimum rate.
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelayPolicy {
    /// Keep the relays picked by [`select_relays`].
    MaxSinr,
    /// Start from [`select_relays`] and search admissible relay maps for the
    /// largest assignment sum-rate.
    #[default]
    MaxSumRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocatorOptions {
    pub sinr_form: SinrForm,
    pub relay_policy: RelayPolicy,
    /// Relay maps are enumerated exhaustively up to this count; larger
    /// spaces fall back to single-user relay moves from the initial map.
    pub max_relay_maps: usize,
}

impl Default for AllocatorOptions {
    fn default() -> Self {
        Self {
            sinr_form: SinrForm::Full,
            relay_policy: RelayPolicy::MaxSumRate,
            max_relay_maps: 40_320,
        }
    }
}

/// Optimal split of one cooperative pair's budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoopPowerSplit<T> {
    pub x: T,
    pub y: T,
    pub sinr: T,
    /// One of the hops has zero gain, so no split carries any rate.
    pub dead: bool,
}

/// Maximizes the cooperative SINR over `x + y = pmax`. The SINR increases in
/// both powers, so the budget always binds.
pub fn allocate_powers_cooperative<T: Real>(
    a: T,
    b: T,
    gamma: T,
    z: T,
    pmax: T,
    form: SinrForm,
) -> CoopPowerSplit<T> {
    if !(pmax > T::zero()) {
        return CoopPowerSplit {
            x: T::zero(),
            y: T::zero(),
            sinr: T::zero(),
            dead: a == T::zero() || b == T::zero(),
        };
    }
    let half = pmax * T::lit(0.5);
    if a == T::zero() || b == T::zero() {
        return CoopPowerSplit {
            x: half,
            y: half,
            sinr: T::zero(),
            dead: true,
        };
    }
    let sinr_at = |x: T| {
        let p = CoopLinkParams {
            x,
            y: pmax - x,
            z,
            a,
            b,
            gamma,
        };
        // zero-denominator errors need a zero hop, excluded above
        sinr_cooperative(&p, form).unwrap_or(T::zero())
    };
    let best = maximize_on_interval(
        sinr_at,
        T::zero(),
        pmax,
        POWER_GRID_POINTS,
        T::lit(POWER_REL_TOL),
    );
    CoopPowerSplit {
        x: best.arg,
        y: pmax - best.arg,
        sinr: best.value,
        dead: false,
    }
}

/// Direct-link power per slot. The direct SINR increases in power, so each
/// slot uses the full per-user budget.
pub fn allocate_powers_noncooperative<T: Real>(config: &ScenarioConfig) -> [T; 2] {
    let p = T::lit(config.pmax_user_w());
    [p, p]
}

/// Per-(entity, subcarrier) rates at the full-budget power point.
#[derive(Debug, Clone)]
pub struct RateTables<T> {
    k1: usize,
    k2: usize,
    n: usize,
    coop: Vec<(CoopPowerSplit<T>, T)>,
    direct: Vec<T>,
}

impl<T: Real> RateTables<T> {
    pub fn compute(gains: &NormalizedGains<T>, config: &ScenarioConfig, form: SinrForm) -> Self {
        let budget = config.budget::<T>();
        let (k1, k2, n) = (gains.k1, gains.k2, gains.n);
        let z = budget.pmax_bs_w;
        let mut coop = Vec::with_capacity(k1 * k2 * n);
        for k in 0..k1 {
            for m in 0..k2 {
                for i in 0..n {
                    let split = allocate_powers_cooperative(
                        gains.alpha(k, m, i),
                        gains.beta(m, i),
                        gains.gamma_si(i),
                        z,
                        budget.pmax_user_w,
                        form,
                    );
                    coop.push((split, rate_from_sinr(split.sinr)));
                }
            }
        }
        let [p1, p2] = allocate_powers_noncooperative::<T>(config);
        let mut direct = Vec::with_capacity(k2 * n);
        for m in 0..k2 {
            for i in 0..n {
                let slot = |p| {
                    rate_from_sinr(sinr_noncooperative(&NonCoopLinkParams {
                        p,
                        b: gains.beta(m, i),
                        z,
                        gamma: gains.gamma_si(i),
                    }))
                };
                direct.push(slot(p1) + slot(p2));
            }
        }
        Self {
            k1,
            k2,
            n,
            coop,
            direct,
        }
    }

    pub fn coop(&self, k: usize, m: usize, i: usize) -> &(CoopPowerSplit<T>, T) {
        &self.coop[(k * self.k2 + m) * self.n + i]
    }

    pub fn direct(&self, m: usize, i: usize) -> T {
        self.direct[m * self.n + i]
    }

    /// Far users first, then the near users not acting as relays.
    pub fn entities(&self, relays: &[usize]) -> Vec<Entity> {
        debug_assert_eq!(relays.len(), self.k1);
        let used: BTreeSet<usize> = relays.iter().copied().collect();
        relays
            .iter()
            .enumerate()
            .map(|(far_user, &relay)| Entity::Cooperative { far_user, relay })
            .chain(
                (0..self.k2)
                    .filter(|m| !used.contains(m))
                    .map(|user| Entity::Direct { user }),
            )
            .collect()
    }

    pub fn entity_rate(&self, entity: Entity, i: usize) -> T {
        match entity {
            Entity::Cooperative { far_user, relay } => self.coop(far_user, relay, i).1,
            Entity::Direct { user } => self.direct(user, i),
        }
    }

    pub fn cost_matrix(&self, entities: &[Entity]) -> Result<CostMatrix<T>, LapError> {
        CostMatrix::from_fn(entities.len(), self.n, |e, i| {
            -self.entity_rate(entities[e], i)
        })
    }
}

/// Relay for each far user by largest cooperative SINR on its best
/// subcarrier, evaluated at the equal split of the budget. Ties go to the
/// lowest relay index. When `k1 <= k2` each relay serves at most one far user
/// and the pairs are fixed greedily in descending SINR order.
pub fn select_relays<T: Real>(gains: &NormalizedGains<T>, config: &ScenarioConfig) -> Vec<usize> {
    select_relays_with(gains, config, SinrForm::Full)
}

fn select_relays_with<T: Real>(
    gains: &NormalizedGains<T>,
    config: &ScenarioConfig,
    form: SinrForm,
) -> Vec<usize> {
    let budget = config.budget::<T>();
    let half = budget.pmax_user_w * T::lit(0.5);
    let (k1, k2, n) = (gains.k1, gains.k2, gains.n);
    let score = |k: usize, m: usize| -> T {
        (0..n)
            .map(|i| {
                let p = CoopLinkParams {
                    x: half,
                    y: half,
                    z: budget.pmax_bs_w,
                    a: gains.alpha(k, m, i),
                    b: gains.beta(m, i),
                    gamma: gains.gamma_si(i),
                };
                sinr_cooperative(&p, form).unwrap_or(T::zero())
            })
            .fold(T::zero(), T::max)
    };
    let scores: Vec<Vec<T>> = (0..k1)
        .map(|k| (0..k2).map(|m| score(k, m)).collect())
        .collect();
    let argmax = |row: &[T], allowed: &dyn Fn(usize) -> bool| -> Option<usize> {
        let mut best: Option<usize> = None;
        for (m, &s) in row.iter().enumerate() {
            if allowed(m) && best.is_none_or(|b| s > row[b]) {
                best = Some(m);
            }
        }
        best
    };
    if k1 > k2 {
        return scores
            .iter()
            .map(|row| argmax(row, &|_| true).unwrap_or(0))
            .collect();
    }
    let mut relay_of = vec![usize::MAX; k1];
    let mut taken = vec![false; k2];
    for _ in 0..k1 {
        // strongest remaining (far user, relay) pair; lowest indices on ties
        let mut pick: Option<(usize, usize)> = None;
        for k in (0..k1).filter(|&k| relay_of[k] == usize::MAX) {
            if let Some(m) = argmax(&scores[k], &|m| !taken[m]) {
                if pick.is_none_or(|(pk, pm)| scores[k][m] > scores[pk][pm]) {
                    pick = Some((k, m));
                }
            }
        }
        let (k, m) = pick.expect("k1 <= k2 leaves a free relay");
        relay_of[k] = m;
        taken[m] = true;
    }
    relay_of
}

/// Cost matrix of the subcarrier assignment for fixed relays, with the
/// entity order of its rows.
pub fn build_cost_matrix<T: Real>(
    gains: &NormalizedGains<T>,
    relays: &[usize],
    config: &ScenarioConfig,
) -> Result<(CostMatrix<T>, Vec<Entity>), AllocError> {
    if !gains.matches(config) {
        return Err(AllocError::Inconsistent);
    }
    if relays.len() != config.k1 {
        return Err(AllocError::RelayMap {
            expected: config.k1,
            got: relays.len(),
        });
    }
    let tables = RateTables::compute(gains, config, SinrForm::Full);
    let entities = tables.entities(relays);
    Ok((tables.cost_matrix(&entities)?, entities))
}

/// One subcarrier per cost-matrix row, minimizing total cost.
pub fn assign_subcarriers<T: Real>(cost: &CostMatrix<T>) -> Result<Vec<usize>, AllocError> {
    if cost.rows() > cost.cols() {
        return Err(AllocError::OverSubscribed {
            entities: cost.rows(),
            subcarriers: cost.cols(),
        });
    }
    let assignment = lapjv::solve_rectangular(cost)?;
    Ok(assignment
        .row_to_col
        .into_iter()
        .map(|c| c.expect("rows <= cols assigns every row"))
        .collect())
}

pub fn allocate<T: Real>(
    gains: &NormalizedGains<T>,
    config: &ScenarioConfig,
) -> Result<(AllocationPlan<T>, RateReport<T>), AllocError> {
    allocate_with(gains, config, &AllocatorOptions::default())
}

struct Candidate {
    relays: Vec<usize>,
    entities: Vec<Entity>,
    subcarriers: Vec<usize>,
}

fn evaluate_relays<T: Real>(
    tables: &RateTables<T>,
    relays: &[usize],
) -> Result<(T, Candidate), AllocError> {
    let entities = tables.entities(relays);
    let cost = tables.cost_matrix(&entities)?;
    let subcarriers = assign_subcarriers(&cost)?;
    let sum = entities
        .iter()
        .zip(&subcarriers)
        .fold(T::zero(), |acc, (&e, &i)| acc + tables.entity_rate(e, i));
    Ok((
        sum,
        Candidate {
            relays: relays.to_vec(),
            entities,
            subcarriers,
        },
    ))
}

fn relay_map_count(k1: usize, k2: usize) -> usize {
    if k1 <= k2 {
        (k2 - k1 + 1..=k2).fold(1usize, |acc, f| acc.saturating_mul(f))
    } else {
        (0..k1).fold(1usize, |acc, _| acc.saturating_mul(k2))
    }
}

fn all_relay_maps(k1: usize, k2: usize) -> Box<dyn Iterator<Item = Vec<usize>>> {
    if k1 <= k2 {
        Box::new((0..k2).permutations(k1))
    } else {
        Box::new((0..k1).map(|_| 0..k2).multi_cartesian_product())
    }
}

pub fn allocate_with<T: Real>(
    gains: &NormalizedGains<T>,
    config: &ScenarioConfig,
    options: &AllocatorOptions,
) -> Result<(AllocationPlan<T>, RateReport<T>), AllocError> {
    if !gains.matches(config) {
        return Err(AllocError::Inconsistent);
    }
    let (k1, k2) = (config.k1, config.k2);
    let tables = RateTables::compute(gains, config, options.sinr_form);
    let initial = select_relays_with(gains, config, options.sinr_form);

    let mut best: Option<(T, Candidate)> = None;
    let mut first_error: Option<AllocError> = None;
    let mut consider = |relays: &[usize], best: &mut Option<(T, Candidate)>| match evaluate_relays(
        &tables, relays,
    ) {
        Ok((sum, cand)) => {
            if best.as_ref().is_none_or(|(b, _)| sum > *b) {
                *best = Some((sum, cand));
            }
        }
        Err(e) => {
            first_error.get_or_insert(e);
        }
    };
    consider(&initial, &mut best);
    match options.relay_policy {
        RelayPolicy::MaxSinr => {}
        RelayPolicy::MaxSumRate if relay_map_count(k1, k2) <= options.max_relay_maps => {
            for relays in all_relay_maps(k1, k2) {
                if relays != initial {
                    consider(&relays, &mut best);
                }
            }
        }
        RelayPolicy::MaxSumRate => {
            // single far-user relay moves, swapping when relays are exclusive
            if let Some(mut current_sum) = best.as_ref().map(|(s, _)| *s) {
                loop {
                    let current = best.as_ref().expect("seeded").1.relays.clone();
                    for k in 0..k1 {
                        for m in (0..k2).filter(|&m| m != current[k]) {
                            let mut next = current.clone();
                            if k1 <= k2 {
                                if let Some(holder) = current.iter().position(|&r| r == m) {
                                    next[holder] = current[k];
                                }
                            }
                            next[k] = m;
                            consider(&next, &mut best);
                        }
                    }
                    let sum = best.as_ref().expect("seeded").0;
                    if !(sum > current_sum) {
                        break;
                    }
                    current_sum = sum;
                }
            }
        }
    }
    let (_, cand) = match best {
        Some(b) => b,
        None => return Err(first_error.expect("at least one relay map evaluated")),
    };

    let bs_power_w = T::lit(config.pmax_bs_w());
    let direct_power = allocate_powers_noncooperative::<T>(config);
    let mut plan = AllocationPlan {
        relay_of: cand.relays.clone(),
        coop: Vec::with_capacity(k1),
        direct: Vec::new(),
        bs_power_w,
        sinr_form: options.sinr_form,
    };
    for (&entity, &i) in cand.entities.iter().zip(&cand.subcarriers) {
        match entity {
            Entity::Cooperative { far_user, relay } => {
                let (split, _) = tables.coop(far_user, relay, i);
                plan.coop.push(CoopLink {
                    far_user,
                    relay,
                    subcarriers: SubcarrierPair::same(i),
                    far_power_w: split.x,
                    relay_power_w: split.y,
                });
            }
            Entity::Direct { user } => plan.direct.push(DirectLink {
                user,
                subcarriers: SubcarrierPair::same(i),
                power_w: direct_power,
            }),
        }
    }
    let report = evaluate_plan(&plan, gains, config)?;
    Ok((plan, report))
}

/// Recomputes every entity rate of `plan` and checks the minimum rates.
pub fn evaluate_plan<T: Real>(
    plan: &AllocationPlan<T>,
    gains: &NormalizedGains<T>,
    config: &ScenarioConfig,
) -> Result<RateReport<T>, AllocError> {
    if !gains.matches(config) {
        return Err(AllocError::Inconsistent);
    }
    let budget = config.budget::<T>();
    let entities: Vec<EntityRate<T>> = rate_model::link_rates(plan, gains)?
        .into_iter()
        .map(|(entity, rate)| {
            let rmin = match entity {
                Entity::Cooperative { .. } => budget.rmin_coop,
                Entity::Direct { .. } => budget.rmin_noncoop,
            };
            EntityRate {
                entity,
                rate_bps_hz: rate,
                rmin_bps_hz: rmin,
                qos_met: rate >= rmin,
            }
        })
        .collect();
    let sum_rate_bps_hz = entities
        .iter()
        .fold(T::zero(), |acc, e| acc + e.rate_bps_hz);
    let mut report = RateReport {
        entities,
        sum_rate_bps_hz,
        feasible: false,
    };
    report.feasible = qos_violations(plan, &report, config).is_empty();
    Ok(report)
}

/// A violated constraint family (1 to 8) and the offending index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub constraint: u8,
    pub index: usize,
    pub detail: String,
}

impl Violation {
    fn new(constraint: u8, index: usize, detail: impl Into<String>) -> Self {
        Self {
            constraint,
            index,
            detail: detail.into(),
        }
    }
}

/// Lists every violated constraint.
///
/// 1: indicator consistency (indices in range, one link per user, relays
/// have no own traffic); 2, 3: at most one transmission per subcarrier in
/// slot 1 and slot 2; 4: non-negative powers; 5: cooperative pair budget;
/// 6: direct per-slot budget; 7: far-user minimum rate; 8: direct-user
/// minimum rate.
pub fn check_constraints<T: Real>(
    plan: &AllocationPlan<T>,
    report: &RateReport<T>,
    config: &ScenarioConfig,
) -> Vec<Violation> {
    let (k1, k2, n) = (config.k1, config.k2, config.n_subcarriers);
    let mut out = Vec::new();

    if plan.relay_of.len() != k1 {
        out.push(Violation::new(
            1,
            0,
            format!(
                "relay_of has {} entries for {k1} far users",
                plan.relay_of.len()
            ),
        ));
    }
    for (k, &m) in plan.relay_of.iter().enumerate() {
        if m >= k2 {
            out.push(Violation::new(
                1,
                k,
                format!("far user {k} relay {m} out of range"),
            ));
        }
    }
    if k1 <= k2 {
        for (k, m) in plan.relay_of.iter().enumerate() {
            if plan.relay_of[..k].contains(m) {
                out.push(Violation::new(
                    1,
                    k,
                    format!("relay {m} shared although k1 <= k2"),
                ));
            }
        }
    }
    let relays: BTreeSet<usize> = plan.relay_of.iter().copied().collect();
    let mut far_seen = vec![false; k1];
    for link in &plan.coop {
        let k = link.far_user;
        if k >= k1 {
            out.push(Violation::new(1, k, "far user out of range"));
            continue;
        }
        if std::mem::replace(&mut far_seen[k], true) {
            out.push(Violation::new(
                1,
                k,
                "far user has more than one cooperative link",
            ));
        }
        if plan.relay_of.get(k) != Some(&link.relay) {
            out.push(Violation::new(
                1,
                k,
                "cooperative link relay differs from relay_of",
            ));
        }
    }
    let mut near_seen = vec![false; k2];
    for link in &plan.direct {
        let m = link.user;
        if m >= k2 {
            out.push(Violation::new(1, m, "near user out of range"));
            continue;
        }
        if std::mem::replace(&mut near_seen[m], true) {
            out.push(Violation::new(
                1,
                m,
                "near user has more than one direct link",
            ));
        }
        if relays.contains(&m) {
            out.push(Violation::new(
                1,
                m,
                "relay has a non-cooperative assignment",
            ));
        }
    }

    let mut occupancy = [vec![0usize; n], vec![0usize; n]];
    let pairs = plan
        .coop
        .iter()
        .map(|l| l.subcarriers)
        .chain(plan.direct.iter().map(|l| l.subcarriers));
    for p in pairs {
        for (slot, sc) in [p.slot1, p.slot2].into_iter().enumerate() {
            match occupancy[slot].get_mut(sc) {
                Some(count) => *count += 1,
                None => out.push(Violation::new(
                    1,
                    sc,
                    format!("slot {} subcarrier {sc} out of range", slot + 1),
                )),
            }
        }
    }
    for (slot, counts) in occupancy.iter().enumerate() {
        for (i, &c) in counts.iter().enumerate() {
            if c > 1 {
                out.push(Violation::new(
                    2 + slot as u8,
                    i,
                    format!("{c} transmissions share subcarrier {i}"),
                ));
            }
        }
    }

    let nonneg = |p: T| p.is_finite() && p >= T::zero();
    if !nonneg(plan.bs_power_w) {
        out.push(Violation::new(
            4,
            0,
            "base-station power negative or non-finite",
        ));
    }
    for link in &plan.coop {
        if !nonneg(link.far_power_w) || !nonneg(link.relay_power_w) {
            out.push(Violation::new(
                4,
                link.far_user,
                "cooperative power negative or non-finite",
            ));
        }
    }
    for link in &plan.direct {
        if !link.power_w.iter().all(|&p| nonneg(p)) {
            out.push(Violation::new(
                4,
                link.user,
                "direct power negative or non-finite",
            ));
        }
    }

    let pmax = T::lit(config.pmax_user_w());
    let cap = pmax * T::lit(1.0 + BUDGET_SLACK);
    for link in &plan.coop {
        let total = link.far_power_w + link.relay_power_w;
        if total > cap {
            out.push(Violation::new(
                5,
                link.far_user,
                format!("pair power {total} exceeds {pmax}"),
            ));
        }
    }
    for link in &plan.direct {
        for (slot, &p) in link.power_w.iter().enumerate() {
            if p > cap {
                out.push(Violation::new(
                    6,
                    link.user,
                    format!("slot {} power {p} exceeds {pmax}", slot + 1),
                ));
            }
        }
    }

    out.extend(qos_violations(plan, report, config));
    out
}

fn qos_violations<T: Real>(
    plan: &AllocationPlan<T>,
    report: &RateReport<T>,
    config: &ScenarioConfig,
) -> Vec<Violation> {
    let budget = config.budget::<T>();
    let mut far_rate = vec![T::zero(); config.k1];
    let mut near_rate = vec![T::zero(); config.k2];
    for e in &report.entities {
        match e.entity {
            Entity::Cooperative { far_user, .. } => {
                if let Some(r) = far_rate.get_mut(far_user) {
                    *r = *r + e.rate_bps_hz;
                }
            }
            Entity::Direct { user } => {
                if let Some(r) = near_rate.get_mut(user) {
                    *r = *r + e.rate_bps_hz;
                }
            }
        }
    }
    let mut out = Vec::new();
    for (k, &r) in far_rate.iter().enumerate() {
        if r < budget.rmin_coop {
            out.push(Violation::new(
                7,
                k,
                format!("far user rate {r} below {}", budget.rmin_coop),
            ));
        }
    }
    let relays: BTreeSet<usize> = plan.relay_of.iter().copied().collect();
    for (m, &r) in near_rate.iter().enumerate() {
        if !relays.contains(&m) && r < budget.rmin_noncoop {
            out.push(Violation::new(
                8,
                m,
                format!("near user rate {r} below {}", budget.rmin_noncoop),
            ));
        }
    }
    out
}
