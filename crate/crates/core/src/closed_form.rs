//! Closed-form equilibria of the three delegation sets, their information
//! cost thresholds, the principal's values and the optimal-delegation
//! comparison.

use std::fmt;

use crate::model::{Action, DelegationSet, ExpertType, ModelParams, TAU_NUM};
use crate::strategy::StrategyProfile;

use Action::{Moderate, Radical, StatusQuo};
use ExpertType::{Congruent, Noncongruent};

/// `p(r-1)^2`: the full-menu pooling equilibrium needs `k` strictly above it.
pub fn k_threshold_pooling(params: &ModelParams) -> f64 {
    params.p * (params.r - 1.0).powi(2)
}

/// `p(r^2 - R)`: value of information for the congruent expert under the
/// no-compromise set.
pub fn k_threshold_no_compromise(params: &ModelParams) -> f64 {
    params.p * (params.r * params.r - params.rent)
}

/// Cost bound of the informative equilibrium under the change set: the
/// smaller of the losses from the two uninformed deviations (always
/// moderate, always radical).
pub fn k_threshold_change(params: &ModelParams) -> f64 {
    let ModelParams { p, r, rent, .. } = *params;
    let sq = (r - 1.0).powi(2);
    let vs_moderate = p * (rent + sq);
    let vs_radical = p * ((r * r - 1.0) - rent) + (1.0 - 2.0 * p) * (sq - rent);
    vs_moderate.min(vs_radical)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub pooling: f64,
    pub no_compromise: f64,
    pub change: f64,
}

impl Thresholds {
    pub fn at(params: &ModelParams) -> Self {
        Thresholds {
            pooling: k_threshold_pooling(params),
            no_compromise: k_threshold_no_compromise(params),
            change: k_threshold_change(params),
        }
    }
}

/// The three delegation strategies the principal compares.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DelegationStrategy {
    FullMenu,
    NoCompromise,
    Change,
}

impl DelegationStrategy {
    pub const ALL: [DelegationStrategy; 3] =
        [DelegationStrategy::FullMenu, DelegationStrategy::NoCompromise, DelegationStrategy::Change];

    pub fn delegation(self) -> DelegationSet {
        match self {
            DelegationStrategy::FullMenu => DelegationSet::FULL_MENU,
            DelegationStrategy::NoCompromise => DelegationSet::NO_COMPROMISE,
            DelegationStrategy::Change => DelegationSet::CHANGE,
        }
    }

    pub fn of(d: DelegationSet) -> Option<DelegationStrategy> {
        DelegationStrategy::ALL.into_iter().find(|s| s.delegation() == d)
    }
}

impl fmt::Display for DelegationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DelegationStrategy::FullMenu => "FullMenu",
            DelegationStrategy::NoCompromise => "NoCompromise",
            DelegationStrategy::Change => "Change",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutcomeKind {
    PoolingModerate,
    InformativeNoCompromise,
    InformativeChange,
    Infeasible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    AtMost,
    Above,
}

/// The cost condition under which an outcome obtains: `k <= bound` or
/// `k > bound`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KCondition {
    pub bound: f64,
    pub direction: Direction,
}

impl KCondition {
    pub fn holds(&self, k: f64) -> bool {
        match self.direction {
            Direction::AtMost => k <= self.bound,
            Direction::Above => k > self.bound,
        }
    }
}

impl fmt::Display for KCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.direction {
            Direction::AtMost => write!(f, "k <= {}", self.bound),
            Direction::Above => write!(f, "k > {}", self.bound),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquilibriumOutcome {
    pub delegation: DelegationSet,
    pub kind: OutcomeKind,
    /// `None` iff the outcome is infeasible.
    pub profile: Option<StrategyProfile>,
    pub principal_value: Option<f64>,
    pub k_condition: KCondition,
}

impl EquilibriumOutcome {
    pub fn is_feasible(&self) -> bool {
        self.kind != OutcomeKind::Infeasible
    }
}

/// Both types stay uninformed and play the moderate reform; any reform is
/// retained.
pub fn pooling_profile(delegation: DelegationSet) -> StrategyProfile {
    let retained: Vec<Action> = [Moderate, Radical].into_iter().filter(|a| delegation.contains(*a)).collect();
    StrategyProfile::new(delegation)
        .uninformed_at(Congruent, Moderate)
        .uninformed_at(Noncongruent, Moderate)
        .retaining(&retained)
}

/// Noncongruent stays at the status quo; the informed congruent expert
/// matches the state except that the moderate state goes radical; only the
/// radical reform is retained.
pub fn no_compromise_profile() -> StrategyProfile {
    StrategyProfile::new(DelegationSet::NO_COMPROMISE)
        .uninformed_at(Noncongruent, StatusQuo)
        .informed_as(Congruent, [StatusQuo, Radical, Radical])
        .retaining(&[Radical])
}

/// Noncongruent plays the moderate reform; the informed congruent expert
/// plays moderate in the status-quo and moderate states and radical in the
/// radical state; only the radical reform is retained.
pub fn change_profile() -> StrategyProfile {
    StrategyProfile::new(DelegationSet::CHANGE)
        .uninformed_at(Noncongruent, Moderate)
        .informed_as(Congruent, [Moderate, Moderate, Radical])
        .retaining(&[Radical])
}

fn infeasible(delegation: DelegationSet, k_condition: KCondition) -> EquilibriumOutcome {
    EquilibriumOutcome {
        delegation,
        kind: OutcomeKind::Infeasible,
        profile: None,
        principal_value: None,
        k_condition,
    }
}

pub fn equilibrium_full_menu(params: &ModelParams) -> EquilibriumOutcome {
    let cond = KCondition { bound: k_threshold_pooling(params), direction: Direction::Above };
    if !cond.holds(params.k) {
        return infeasible(DelegationSet::FULL_MENU, cond);
    }
    EquilibriumOutcome {
        delegation: DelegationSet::FULL_MENU,
        kind: OutcomeKind::PoolingModerate,
        profile: Some(pooling_profile(DelegationSet::FULL_MENU)),
        principal_value: Some(value_full_menu(params)),
        k_condition: cond,
    }
}

pub fn equilibrium_no_compromise(params: &ModelParams) -> EquilibriumOutcome {
    let cond = KCondition { bound: k_threshold_no_compromise(params), direction: Direction::AtMost };
    if !cond.holds(params.k) {
        return infeasible(DelegationSet::NO_COMPROMISE, cond);
    }
    EquilibriumOutcome {
        delegation: DelegationSet::NO_COMPROMISE,
        kind: OutcomeKind::InformativeNoCompromise,
        profile: Some(no_compromise_profile()),
        principal_value: Some(value_no_compromise(params)),
        k_condition: cond,
    }
}

/// Informative equilibrium when `k` is below the change threshold;
/// otherwise the uninformed pooling outcome, worth the full-menu value.
pub fn equilibrium_change(params: &ModelParams) -> EquilibriumOutcome {
    let bound = k_threshold_change(params);
    let cond = KCondition { bound, direction: Direction::AtMost };
    if cond.holds(params.k) {
        EquilibriumOutcome {
            delegation: DelegationSet::CHANGE,
            kind: OutcomeKind::InformativeChange,
            profile: Some(change_profile()),
            principal_value: Some(value_change(params)),
            k_condition: cond,
        }
    } else {
        EquilibriumOutcome {
            delegation: DelegationSet::CHANGE,
            kind: OutcomeKind::PoolingModerate,
            profile: Some(pooling_profile(DelegationSet::CHANGE)),
            principal_value: Some(value_full_menu(params)),
            k_condition: KCondition { bound, direction: Direction::Above },
        }
    }
}

pub fn equilibrium(strategy: DelegationStrategy, params: &ModelParams) -> EquilibriumOutcome {
    match strategy {
        DelegationStrategy::FullMenu => equilibrium_full_menu(params),
        DelegationStrategy::NoCompromise => equilibrium_no_compromise(params),
        DelegationStrategy::Change => equilibrium_change(params),
    }
}

/// `-p - p(r-1)^2`: the expected loss of the moderate reform.
pub fn value_full_menu(params: &ModelParams) -> f64 {
    let ModelParams { p, r, .. } = *params;
    -p - p * (r - 1.0).powi(2)
}

pub fn value_no_compromise(params: &ModelParams) -> f64 {
    let ModelParams { p, r, pi, .. } = *params;
    pi * (-(1.0 - 2.0 * p) * (r - 1.0).powi(2)) + (1.0 - pi) * (-(1.0 - 2.0 * p) - p * r * r)
}

pub fn value_change(params: &ModelParams) -> f64 {
    let ModelParams { p, r, pi, .. } = *params;
    -p - (1.0 - pi) * p * (r - 1.0).powi(2)
}

/// Principal's value of the informative (or pooling, for the full menu)
/// equilibrium of each strategy.
pub fn principal_value(strategy: DelegationStrategy, params: &ModelParams) -> f64 {
    match strategy {
        DelegationStrategy::FullMenu => value_full_menu(params),
        DelegationStrategy::NoCompromise => value_no_compromise(params),
        DelegationStrategy::Change => value_change(params),
    }
}

/// Net loss of banning the moderate reform relative to banning the status
/// quo; positive means the change set is better.
pub fn delta(p: f64, r: f64, pi: f64) -> f64 {
    pi * (1.0 - 2.0 * p) * (r - 1.0).powi(2) + (1.0 - pi) * (1.0 - 3.0 * p + 2.0 * p * r) - p
}

/// Positive root of `(1-2p) r^2 - 2(1-3p) r - c = 0`. The rationalised form
/// is used for `p > 1/3`, where the leading coefficient vanishes at `p = 1/2`.
fn positive_root(p: f64, c: f64) -> f64 {
    let a = 1.0 - 2.0 * p;
    let b = 1.0 - 3.0 * p;
    let disc = (b * b + a * c).sqrt();
    if b >= 0.0 {
        (b + disc) / a
    } else {
        c / (disc - b)
    }
}

/// Radical magnitude at which the change threshold meets the pooling
/// threshold (with `R = 1`); decreasing from 2 at `p = 0` to 3/2 at
/// `p = 1/2`.
pub fn r_underline(p: f64) -> f64 {
    positive_root(p, 3.0 * p)
}

/// Zero of `delta(p, ., 1)` on `(√2, 2]`, found by bisection to 1e-10.
/// `None` when the sign does not change on that interval.
pub fn r_one_root(p: f64) -> Option<f64> {
    let f = |r: f64| delta(p, r, 1.0);
    let (mut lo, mut hi) = (std::f64::consts::SQRT_2, 2.0);
    if f(lo) > 0.0 || f(hi) < 0.0 {
        return None;
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// The closed form `1 + p/(1-2p)` as printed for the `pi = 1` boundary. It
/// does not solve `delta(p, r, 1) = 0`; kept for comparison.
pub fn r_one_printed(p: f64) -> f64 {
    1.0 + p / (1.0 - 2.0 * p)
}

/// `2 - 1/(2p)`, the zero of `delta(p, ., 0)`. Never above √2 for
/// `p <= 1/2`.
pub fn r_zero_printed(p: f64) -> f64 {
    2.0 - 1.0 / (2.0 * p)
}

/// A point of the region where the pooling and both informative
/// equilibria coexist.
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaSample {
    pub params: ModelParams,
    pub r_underline: f64,
    pub thresholds: Thresholds,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmegaInfeasible {
    pub params: Option<ModelParams>,
    pub reasons: Vec<String>,
}

impl fmt::Display for OmegaInfeasible {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "infeasible: {}", self.reasons.join("; "))
    }
}

/// Builds a point with `R = 1`, `k = p(r-1)^2 + epsilon` and `r` just above
/// `max{3/2, r_underline(p)}`. The radical magnitude solves the change
/// threshold equal to the pooling threshold plus `2 epsilon`, so that `k`
/// sits `epsilon` inside it. Every threshold ordering is checked on the
/// result.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn omega_sample(p: f64, pi: f64, epsilon: f64) -> Result<OmegaSample, OmegaInfeasible> {
    if !(p > 0.0 && p <= 0.5) {
        return Err(OmegaInfeasible { params: None, reasons: vec![format!("p = {p} outside (0, 1/2]")] });
    }
    if !(epsilon > 0.0) {
        return Err(OmegaInfeasible { params: None, reasons: vec![format!("epsilon = {epsilon} must be positive")] });
    }
    let r = positive_root(p, 3.0 * p + 2.0 * epsilon).max(1.5);
    let pooling = p * (r - 1.0).powi(2);
    let params = ModelParams { p, r, rent: 1.0, k: pooling + epsilon, pi, epsilon };
    let th = Thresholds::at(&params);

    let mut reasons: Vec<String> = params.validate().violations.iter().map(|v| v.to_string()).collect();
    if !(params.k > th.pooling) {
        reasons.push(format!("k = {} not above pooling threshold {}", params.k, th.pooling));
    }
    if !(params.k <= th.no_compromise) {
        reasons.push(format!("k = {} above no-compromise threshold {}", params.k, th.no_compromise));
    }
    if !(params.k <= th.change) {
        reasons.push(format!("k = {} above change threshold {}", params.k, th.change));
    }
    if !(th.pooling < th.no_compromise.min(th.change)) {
        reasons.push("pooling threshold not below both informative thresholds".to_string());
    }
    if reasons.is_empty() {
        Ok(OmegaSample { params, r_underline: r_underline(p), thresholds: th })
    } else {
        Err(OmegaInfeasible { params: Some(params), reasons })
    }
}

/// The principal's optimal strategy at a point, or the set of strategies
/// tied at the optimum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Optimal {
    Unique(DelegationStrategy),
    Tie(Vec<DelegationStrategy>),
}

impl Optimal {
    pub fn includes(&self, s: DelegationStrategy) -> bool {
        match self {
            Optimal::Unique(x) => *x == s,
            Optimal::Tie(xs) => xs.contains(&s),
        }
    }
}

impl fmt::Display for Optimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Optimal::Unique(s) => write!(f, "{s}"),
            Optimal::Tie(xs) => {
                let names: Vec<String> = xs.iter().map(|s| s.to_string()).collect();
                write!(f, "tie:{}", names.join("+"))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionRecord {
    pub params: ModelParams,
    /// Inside the assumption region.
    pub valid: bool,
    pub feas_pool: bool,
    pub feas_nc: bool,
    /// The informative change equilibrium exists (otherwise the change set
    /// falls back to pooling).
    pub feas_change: bool,
    pub v_full: f64,
    pub v_nc: f64,
    /// Value of the change set, informative or fallback.
    pub v_change: f64,
    pub delta: f64,
    pub optimal: Optimal,
}

impl RegionRecord {
    pub fn value(&self, s: DelegationStrategy) -> f64 {
        match s {
            DelegationStrategy::FullMenu => self.v_full,
            DelegationStrategy::NoCompromise => self.v_nc,
            DelegationStrategy::Change => self.v_change,
        }
    }

    pub fn is_feasible(&self, s: DelegationStrategy) -> bool {
        match s {
            DelegationStrategy::FullMenu => self.feas_pool,
            DelegationStrategy::NoCompromise => self.feas_nc,
            DelegationStrategy::Change => true,
        }
    }
}

/// Compares the three delegation strategies at `params`. The change set is
/// always available (its pooling fallback is worth the full-menu value).
/// Ties within [`TAU_NUM`] are reported, except that an informative change
/// equilibrium tied with the full menu is reported as the change set, which
/// weakly dominates it.
pub fn optimal_delegation(params: &ModelParams) -> RegionRecord {
    let full = equilibrium_full_menu(params);
    let nc = equilibrium_no_compromise(params);
    let change = equilibrium_change(params);
    let feas_change = change.kind == OutcomeKind::InformativeChange;
    let mut rec = RegionRecord {
        params: *params,
        valid: params.validate().is_ok(),
        feas_pool: full.is_feasible(),
        feas_nc: nc.is_feasible(),
        feas_change,
        v_full: value_full_menu(params),
        v_nc: value_no_compromise(params),
        v_change: change.principal_value.expect("change set always has an outcome"),
        delta: delta(params.p, params.r, params.pi),
        optimal: Optimal::Tie(Vec::new()),
    };
    let best = DelegationStrategy::ALL
        .into_iter()
        .filter(|&s| rec.is_feasible(s))
        .map(|s| rec.value(s))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut winners: Vec<DelegationStrategy> = DelegationStrategy::ALL
        .into_iter()
        .filter(|&s| rec.is_feasible(s) && rec.value(s) >= best - TAU_NUM)
        .collect();
    if feas_change && winners.contains(&DelegationStrategy::Change) {
        winners.retain(|&s| s != DelegationStrategy::FullMenu);
    }
    rec.optimal = match winners.as_slice() {
        [one] => Optimal::Unique(*one),
        _ => Optimal::Tie(winners),
    };
    rec
}
