//! Expert strategies, the principal's retention rule, action frequencies,
//! Bayesian posteriors and continuation values.

use std::fmt;

use thiserror::Error;

use crate::model::{
    expected_uninformed_loss, policy_loss, Action, DelegationSet, ExpertType, ModelParams, Role,
    State, TAU_NUM,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("action {action} is not in delegation set {delegation}")]
    NotInDelegation { action: Action, delegation: DelegationSet },
    #[error("{what} does not sum to 1 (sum = {sum})")]
    NotADistribution { what: String, sum: f64 },
    #[error("{what} has invalid probability {value} on action {action}")]
    BadProbability { what: String, action: Action, value: f64 },
    #[error("{what} puts mass {mass} on action {action} outside {delegation}")]
    MassOutsideDelegation { what: String, action: Action, mass: f64, delegation: DelegationSet },
}

/// Probability distribution over the three actions, indexed by
/// [`Action::index`].
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ActionDist(pub [f64; 3]);

impl ActionDist {
    pub fn point(a: Action) -> Self {
        let mut w = [0.0; 3];
        w[a.index()] = 1.0;
        ActionDist(w)
    }

    pub fn prob(&self, a: Action) -> f64 {
        self.0[a.index()]
    }

    pub fn set(&mut self, a: Action, v: f64) {
        self.0[a.index()] = v;
    }

    pub fn support(&self) -> impl Iterator<Item = Action> + '_ {
        Action::ALL.into_iter().filter(|a| self.prob(*a) > 0.0)
    }

    /// The single action carrying all mass, if any.
    pub fn as_point(&self) -> Option<Action> {
        let mut s = self.support();
        match (s.next(), s.next()) {
            (Some(a), None) if (self.prob(a) - 1.0).abs() <= TAU_NUM => Some(a),
            _ => None,
        }
    }

    pub fn approx_eq(&self, other: &ActionDist, tol: f64) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| (a - b).abs() <= tol)
    }

    fn check(&self, what: impl Fn() -> String, d: DelegationSet) -> Result<(), StrategyError> {
        for a in Action::ALL {
            let v = self.prob(a);
            if !(0.0..=1.0 + TAU_NUM).contains(&v) {
                return Err(StrategyError::BadProbability { what: what(), action: a, value: v });
            }
            if v > 0.0 && !d.contains(a) {
                return Err(StrategyError::MassOutsideDelegation {
                    what: what(),
                    action: a,
                    mass: v,
                    delegation: d,
                });
            }
        }
        let sum: f64 = self.0.iter().sum();
        if (sum - 1.0).abs() > TAU_NUM {
            return Err(StrategyError::NotADistribution { what: what(), sum });
        }
        Ok(())
    }
}

/// Information acquisition choice per type (`true` = acquires).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct InfoChoice {
    pub tau: [bool; 2],
}

impl InfoChoice {
    pub fn acquires(&self, t: ExpertType) -> bool {
        self.tau[t.index()]
    }
}

/// Action distribution of an uninformed expert, per type.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UninformedPolicy {
    pub q: [ActionDist; 2],
}

impl UninformedPolicy {
    pub fn of(&self, t: ExpertType) -> &ActionDist {
        &self.q[t.index()]
    }
}

/// State-contingent action distribution of an informed expert, indexed
/// `[type][state]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InformedPolicy {
    pub p: [[ActionDist; 3]; 2],
}

impl InformedPolicy {
    pub fn of(&self, t: ExpertType, w: State) -> &ActionDist {
        &self.p[t.index()][w.index()]
    }
}

/// Deterministic retention decision per action.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Hash, PartialOrd, Ord)]
pub struct RetentionRule {
    pub retain: [bool; 3],
}

impl RetentionRule {
    pub fn on(actions: &[Action]) -> Self {
        let mut retain = [false; 3];
        for a in actions {
            retain[a.index()] = true;
        }
        RetentionRule { retain }
    }

    pub fn retains(&self, a: Action) -> bool {
        self.retain[a.index()]
    }

    pub fn set(&mut self, a: Action, v: bool) {
        self.retain[a.index()] = v;
    }

    fn rent(&self, a: Action, params: &ModelParams) -> f64 {
        if self.retains(a) {
            params.rent
        } else {
            0.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrategyProfile {
    pub delegation: DelegationSet,
    pub info: InfoChoice,
    pub uninformed: UninformedPolicy,
    pub informed: InformedPolicy,
    pub retention: RetentionRule,
}

impl StrategyProfile {
    /// Both types uninformed and every policy a point mass on the lowest
    /// permitted action; nothing retained. Meant as a starting point for the
    /// builder methods below.
    pub fn new(delegation: DelegationSet) -> Self {
        let low = ActionDist::point(delegation.lowest());
        StrategyProfile {
            delegation,
            info: InfoChoice::default(),
            uninformed: UninformedPolicy { q: [low; 2] },
            informed: InformedPolicy { p: [[low; 3]; 2] },
            retention: RetentionRule::default(),
        }
    }

    /// Type `t` stays uninformed and plays `a`.
    pub fn uninformed_at(mut self, t: ExpertType, a: Action) -> Self {
        self.info.tau[t.index()] = false;
        self.uninformed.q[t.index()] = ActionDist::point(a);
        self
    }

    /// Type `t` acquires information and plays `by_state[w]` in state `w`.
    pub fn informed_as(mut self, t: ExpertType, by_state: [Action; 3]) -> Self {
        self.info.tau[t.index()] = true;
        for (w, a) in by_state.into_iter().enumerate() {
            self.informed.p[t.index()][w] = ActionDist::point(a);
        }
        self
    }

    pub fn retaining(mut self, actions: &[Action]) -> Self {
        self.retention = RetentionRule::on(actions);
        self
    }

    pub fn validate(&self) -> Result<(), StrategyError> {
        let d = self.delegation;
        for t in ExpertType::ALL {
            self.uninformed.of(t).check(|| format!("q.{t}"), d)?;
            for w in Action::ALL {
                self.informed.of(t, w).check(|| format!("p.{t}.{w}"), d)?;
            }
        }
        Ok(())
    }

    /// Distribution of type `t`'s action in state `w` under the branch
    /// selected by its information choice.
    pub fn play(&self, t: ExpertType, w: State) -> &ActionDist {
        if self.info.acquires(t) {
            self.informed.of(t, w)
        } else {
            self.uninformed.of(t)
        }
    }

    fn ensure_member(&self, d: Action) -> Result<(), StrategyError> {
        if self.delegation.contains(d) {
            Ok(())
        } else {
            Err(StrategyError::NotInDelegation { action: d, delegation: self.delegation })
        }
    }
}

/// Where a belief came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    OnPathBayes,
    OffPathD1,
    OffPathUnrestricted,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::OnPathBayes => "on-path",
            Provenance::OffPathD1 => "off-path D1",
            Provenance::OffPathUnrestricted => "off-path unrestricted",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Belief {
    pub mu: f64,
    pub provenance: Provenance,
}

/// Posterior probability of congruence after each action.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct BeliefMap {
    entries: [Option<Belief>; 3],
}

impl BeliefMap {
    pub fn get(&self, a: Action) -> Option<Belief> {
        self.entries[a.index()]
    }

    pub fn set(&mut self, a: Action, mu: f64, provenance: Provenance) {
        self.entries[a.index()] = Some(Belief { mu, provenance });
    }

    pub fn covers(&self, d: DelegationSet) -> bool {
        d.actions().all(|a| self.get(a).is_some())
    }

    /// Retention implied by the beliefs: retain iff `mu >= pi`. Actions
    /// without a belief are not retained.
    pub fn retention(&self, pi: f64) -> RetentionRule {
        let mut y = RetentionRule::default();
        for a in Action::ALL {
            if let Some(b) = self.get(a) {
                y.set(a, retain_given(b.mu, pi));
            }
        }
        y
    }
}

/// The principal retains on weak good news, `mu >= pi`, with ties inside
/// [`TAU_NUM`] counted as good news.
pub fn retain_given(mu: f64, pi: f64) -> bool {
    mu >= pi - TAU_NUM
}

/// Probability that type `t` plays `d`. An informed type mixes its
/// state-contingent policy with the state prior.
pub fn action_frequency(
    profile: &StrategyProfile,
    t: ExpertType,
    d: Action,
    params: &ModelParams,
) -> Result<f64, StrategyError> {
    profile.ensure_member(d)?;
    Ok(Action::ALL
        .iter()
        .map(|&w| params.state_prob(w) * profile.play(t, w).prob(d))
        .sum())
}

/// The uninformed policy that reproduces type `t`'s action frequencies:
/// its informed policy mixed over the state prior.
pub fn prior_mixture(profile: &StrategyProfile, t: ExpertType, params: &ModelParams) -> ActionDist {
    let mut q = ActionDist::default();
    for w in Action::ALL {
        let dist = profile.informed.of(t, w);
        for x in dist.support() {
            q.set(x, q.prob(x) + params.state_prob(w) * dist.prob(x));
        }
    }
    q
}

/// Same profile with type `t` skipping information and playing
/// [`prior_mixture`] instead.
pub fn mimic_uninformed(profile: &StrategyProfile, t: ExpertType, params: &ModelParams) -> StrategyProfile {
    let mut out = *profile;
    out.uninformed.q[t.index()] = prior_mixture(profile, t, params);
    out.info.tau[t.index()] = false;
    out
}

/// Unconditional probability of observing `d`.
pub fn total_frequency(
    profile: &StrategyProfile,
    d: Action,
    params: &ModelParams,
) -> Result<f64, StrategyError> {
    let c = action_frequency(profile, ExpertType::Congruent, d, params)?;
    let n = action_frequency(profile, ExpertType::Noncongruent, d, params)?;
    Ok(params.pi * c + (1.0 - params.pi) * n)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Posterior {
    OnPath(f64),
    /// Zero total frequency: Bayes' rule is silent.
    OffPath,
}

impl Posterior {
    pub fn on_path(self) -> Option<f64> {
        match self {
            Posterior::OnPath(mu) => Some(mu),
            Posterior::OffPath => None,
        }
    }
}

pub fn posterior(
    profile: &StrategyProfile,
    d: Action,
    params: &ModelParams,
) -> Result<Posterior, StrategyError> {
    let c = params.pi * action_frequency(profile, ExpertType::Congruent, d, params)?;
    let n = (1.0 - params.pi) * action_frequency(profile, ExpertType::Noncongruent, d, params)?;
    let total = c + n;
    Ok(if total > 0.0 { Posterior::OnPath(c / total) } else { Posterior::OffPath })
}

/// Bayes posteriors for every on-path action; off-path entries are left
/// empty.
pub fn bayes_beliefs(profile: &StrategyProfile, params: &ModelParams) -> BeliefMap {
    let mut beliefs = BeliefMap::default();
    for d in profile.delegation.actions() {
        if let Ok(Posterior::OnPath(mu)) = posterior(profile, d, params) {
            beliefs.set(d, mu, Provenance::OnPathBayes);
        }
    }
    beliefs
}

/// Expected payoff of an uninformed type `t` committing to `x`.
pub fn uninformed_payoff(
    t: ExpertType,
    x: Action,
    retention: &RetentionRule,
    params: &ModelParams,
) -> f64 {
    expected_uninformed_loss(Role::Expert(t), x, params) + retention.rent(x, params)
}

/// Payoff of type `t` choosing `x` after learning the state is `w`.
pub fn informed_payoff(
    t: ExpertType,
    x: Action,
    w: State,
    retention: &RetentionRule,
    params: &ModelParams,
) -> f64 {
    policy_loss(Role::Expert(t), x, w, params) + retention.rent(x, params)
}

/// `V_t(0)` when `informed` is false, `V_t(1)` otherwise, under an explicit
/// retention rule over `delegation`. Neither includes the information
/// cost.
pub fn continuation_value_under(
    delegation: DelegationSet,
    retention: &RetentionRule,
    t: ExpertType,
    informed: bool,
    params: &ModelParams,
) -> f64 {
    if informed {
        Action::ALL
            .iter()
            .map(|&w| {
                let best = delegation
                    .actions()
                    .map(|x| informed_payoff(t, x, w, retention, params))
                    .fold(f64::NEG_INFINITY, f64::max);
                params.state_prob(w) * best
            })
            .sum()
    } else {
        delegation
            .actions()
            .map(|x| uninformed_payoff(t, x, retention, params))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn continuation_value(
    profile: &StrategyProfile,
    t: ExpertType,
    informed: bool,
    params: &ModelParams,
) -> f64 {
    continuation_value_under(profile.delegation, &profile.retention, t, informed, params)
}

/// Gross value of information `V_t(1) - V_t(0)`.
pub fn value_of_information(
    delegation: DelegationSet,
    retention: &RetentionRule,
    t: ExpertType,
    params: &ModelParams,
) -> f64 {
    continuation_value_under(delegation, retention, t, true, params)
        - continuation_value_under(delegation, retention, t, false, params)
}

/// `true` iff type `t` should acquire information: `k <= V_t(1) - V_t(0)`
/// up to [`TAU_NUM`].
pub fn info_best_response(profile: &StrategyProfile, t: ExpertType, params: &ModelParams) -> bool {
    params.k <= value_of_information(profile.delegation, &profile.retention, t, params) + TAU_NUM
}

/// Deterministic best informed action. Ties go to the state-matching
/// action for the congruent type and to the lowest action otherwise.
pub fn best_informed_action(
    delegation: DelegationSet,
    retention: &RetentionRule,
    t: ExpertType,
    w: State,
    params: &ModelParams,
) -> Action {
    let best = delegation
        .actions()
        .map(|x| informed_payoff(t, x, w, retention, params))
        .fold(f64::NEG_INFINITY, f64::max);
    let is_best = |x: Action| informed_payoff(t, x, w, retention, params) >= best - TAU_NUM;
    if t == ExpertType::Congruent && delegation.contains(w) && is_best(w) {
        return w;
    }
    delegation.actions().find(|&x| is_best(x)).expect("nonempty delegation set")
}

/// Expected payoff type `t` obtains by following the profile, net of the
/// information cost when it acquires.
pub fn equilibrium_payoff(profile: &StrategyProfile, t: ExpertType, params: &ModelParams) -> f64 {
    let y = &profile.retention;
    if profile.info.acquires(t) {
        let gross: f64 = Action::ALL
            .iter()
            .map(|&w| {
                let dist = profile.informed.of(t, w);
                let v: f64 = dist
                    .support()
                    .map(|x| dist.prob(x) * informed_payoff(t, x, w, y, params))
                    .sum();
                params.state_prob(w) * v
            })
            .sum();
        gross - params.k
    } else {
        let dist = profile.uninformed.of(t);
        dist.support().map(|x| dist.prob(x) * uninformed_payoff(t, x, y, params)).sum()
    }
}

/// The principal's expected policy payoff under the profile.
pub fn principal_payoff(profile: &StrategyProfile, params: &ModelParams) -> f64 {
    ExpertType::ALL
        .iter()
        .map(|&t| {
            let per_type: f64 = Action::ALL
                .iter()
                .map(|&w| {
                    let dist = profile.play(t, w);
                    let v: f64 = dist
                        .support()
                        .map(|x| dist.prob(x) * policy_loss(Role::Principal, x, w, params))
                        .sum();
                    params.state_prob(w) * v
                })
                .sum();
            params.type_prob(t) * per_type
        })
        .sum()
}

/// `true` when some type acquires information and its play varies across
/// states that occur with positive probability.
pub fn is_informative(profile: &StrategyProfile, params: &ModelParams) -> bool {
    ExpertType::ALL.iter().any(|&t| {
        if !profile.info.acquires(t) {
            return false;
        }
        let mut live = Action::ALL.iter().filter(|&&w| params.state_prob(w) > 0.0);
        let Some(&first) = live.next() else { return false };
        let reference = profile.informed.of(t, first);
        live.any(|&w| !profile.informed.of(t, w).approx_eq(reference, TAU_NUM))
    })
}
