//! Perfect Bayesian Equilibrium verification with divinity (D1) beliefs
//! off the equilibrium path.
//!
//! A profile is checked against four conditions: sequential rationality of
//! every action in the support of each type's play, the information
//! acquisition rule `tau_t = 1 <=> k <= V_t(1) - V_t(0)`, the retention rule
//! `y(d) = 1{mu_d >= pi}`, and Bayes consistency of on-path beliefs.
//!
//! Off-path beliefs come from the D1 test. For every type we compute the
//! smallest retention probability on the deviation that would make some
//! deviating strategy (uninformed, or informed and using the deviation in
//! at least one state) break even against the type's equilibrium payoff.
//! The type that needs more compensation is ruled out. When both types need
//! the same compensation, or neither can ever gain, the belief is left
//! unrestricted and either extreme belief may support the profile.

use std::fmt;

use thiserror::Error;

use crate::model::{
    expected_uninformed_loss, policy_loss, Action, ExpertType, ModelParams, Role, State, TAU_NUM,
};
use crate::strategy::{
    equilibrium_payoff, informed_payoff, is_informative, posterior, retain_given,
    uninformed_payoff, value_of_information, BeliefMap, Posterior, Provenance, StrategyProfile,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PbeError {
    #[error("no belief supplied for action {0}")]
    MissingBelief(Action),
    #[error("action {0} is on the equilibrium path")]
    OnPath(Action),
    #[error("action {0} is not in the delegation set")]
    NotInDelegation(Action),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Condition {
    /// An uninformed type plays an action that is not a best reply.
    SeqUninformed,
    /// An informed type plays a non-best action in some state.
    SeqInformed,
    /// The information acquisition rule is violated.
    InfoChoice,
    /// Retention disagrees with the on-path posterior.
    Retention,
    /// Retention disagrees with the D1 off-path belief.
    D1Retention,
    /// A stated on-path belief disagrees with Bayes' rule.
    BeliefConsistency,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::SeqUninformed => "seq-uninformed",
            Condition::SeqInformed => "seq-informed",
            Condition::InfoChoice => "info-choice",
            Condition::Retention => "retention",
            Condition::D1Retention => "d1-retention",
            Condition::BeliefConsistency => "belief-consistency",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Actor {
    Principal,
    Expert(ExpertType),
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Actor::Principal => f.write_str("principal"),
            Actor::Expert(t) => write!(f, "expert.{t}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PbeViolation {
    pub condition: Condition,
    pub actor: Actor,
    pub action: Option<Action>,
    pub state: Option<State>,
    /// How far the violated inequality misses, in payoff or belief units.
    pub margin: f64,
}

impl fmt::Display for PbeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = match (self.action, self.state) {
            (Some(a), Some(w)) => format!("{a}@{w}"),
            (Some(a), None) => a.to_string(),
            (None, _) => "-".to_string(),
        };
        write!(f, "{} {} {} {:.6e}", self.condition, self.actor, at, self.margin)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pbe,
    NotPbe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum D1Status {
    /// Some off-path action received a D1 belief and retention agrees.
    Yes,
    /// Retention contradicts a D1 belief.
    No,
    /// No off-path action, or D1 had no bite on any of them.
    Vacuous,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub violations: Vec<PbeViolation>,
    pub informative: bool,
    pub survives_d1: D1Status,
    pub beliefs: BeliefMap,
}

impl VerificationReport {
    pub fn is_pbe(&self) -> bool {
        self.verdict == Verdict::Pbe
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.is_pbe() { "PBE" } else { "not PBE" };
        let informative = if self.informative { "informative" } else { "uninformative" };
        writeln!(f, "verdict: {verdict}, {informative}")?;
        let d1 = match self.survives_d1 {
            D1Status::Yes => "yes",
            D1Status::No => "no",
            D1Status::Vacuous => "vacuous",
        };
        writeln!(f, "survives D1: {d1}")?;
        for a in Action::ALL {
            if let Some(b) = self.beliefs.get(a) {
                writeln!(f, "belief {a}: {:.6} ({})", b.mu, b.provenance)?;
            }
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Outcome of the D1 test for one off-path action.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum D1Assignment {
    Belief(f64),
    Unrestricted,
}

/// Equilibrium checks at a fixed slack. Margins at or below `tol` are ties
/// and never count as violations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Verifier {
    pub tol: f64,
}

impl Default for Verifier {
    fn default() -> Self {
        Verifier { tol: TAU_NUM }
    }
}

impl Verifier {
    pub fn new(tol: f64) -> Self {
        Verifier { tol }
    }

    /// Best-reply checks for both types (item 1) and the information
    /// acquisition rule (item 3), with retention read off `beliefs`.
    pub fn sequential_rationality(
        &self,
        profile: &StrategyProfile,
        beliefs: &BeliefMap,
        params: &ModelParams,
    ) -> Result<Vec<PbeViolation>, PbeError> {
        let d = profile.delegation;
        if let Some(a) = d.actions().find(|&a| beliefs.get(a).is_none()) {
            return Err(PbeError::MissingBelief(a));
        }
        let y = beliefs.retention(params.pi);
        let mut out = Vec::new();
        for t in ExpertType::ALL {
            let actor = Actor::Expert(t);
            if profile.info.acquires(t) {
                for w in Action::ALL.into_iter().filter(|&w| params.state_prob(w) > 0.0) {
                    let best = d
                        .actions()
                        .map(|x| informed_payoff(t, x, w, &y, params))
                        .fold(f64::NEG_INFINITY, f64::max);
                    for a in profile.informed.of(t, w).support() {
                        let margin = best - informed_payoff(t, a, w, &y, params);
                        if margin > self.tol {
                            out.push(PbeViolation {
                                condition: Condition::SeqInformed,
                                actor,
                                action: Some(a),
                                state: Some(w),
                                margin,
                            });
                        }
                    }
                }
            } else {
                let best = d
                    .actions()
                    .map(|x| uninformed_payoff(t, x, &y, params))
                    .fold(f64::NEG_INFINITY, f64::max);
                for a in profile.uninformed.of(t).support() {
                    let margin = best - uninformed_payoff(t, a, &y, params);
                    if margin > self.tol {
                        out.push(PbeViolation {
                            condition: Condition::SeqUninformed,
                            actor,
                            action: Some(a),
                            state: None,
                            margin,
                        });
                    }
                }
            }

            let voi = value_of_information(d, &y, t, params);
            let margin = if profile.info.acquires(t) { params.k - voi } else { voi - params.k };
            if margin > self.tol {
                out.push(PbeViolation {
                    condition: Condition::InfoChoice,
                    actor,
                    action: None,
                    state: None,
                    margin,
                });
            }
        }
        Ok(out)
    }

    /// Compares stated on-path beliefs with Bayes' rule (item 4).
    pub fn belief_consistency(
        &self,
        profile: &StrategyProfile,
        beliefs: &BeliefMap,
        params: &ModelParams,
    ) -> Vec<PbeViolation> {
        let mut out = Vec::new();
        for a in profile.delegation.actions() {
            let Ok(Posterior::OnPath(mu)) = posterior(profile, a, params) else { continue };
            let margin = match beliefs.get(a) {
                Some(b) => (b.mu - mu).abs(),
                None => f64::INFINITY,
            };
            if margin > self.tol {
                out.push(PbeViolation {
                    condition: Condition::BeliefConsistency,
                    actor: Actor::Principal,
                    action: Some(a),
                    state: None,
                    margin,
                });
            }
        }
        out
    }

    pub fn d1_assign(
        &self,
        profile: &StrategyProfile,
        params: &ModelParams,
        offpath: Action,
    ) -> Result<D1Assignment, PbeError> {
        if !profile.delegation.contains(offpath) {
            return Err(PbeError::NotInDelegation(offpath));
        }
        if let Ok(Posterior::OnPath(_)) = posterior(profile, offpath, params) {
            return Err(PbeError::OnPath(offpath));
        }
        let c = compensation_threshold(profile, params, ExpertType::Congruent, offpath);
        let n = compensation_threshold(profile, params, ExpertType::Noncongruent, offpath);
        Ok(d1_from_thresholds(c, n, self.tol))
    }

    /// Assembles beliefs (Bayes on path, D1 off path) and runs every check.
    pub fn verify(&self, profile: &StrategyProfile, params: &ModelParams) -> VerificationReport {
        let mut beliefs = BeliefMap::default();
        let mut violations = Vec::new();
        let mut d1_bite = false;
        let mut d1_failed = false;
        let pi = params.pi;

        for a in profile.delegation.actions() {
            let retained = profile.retention.retains(a);
            match posterior(profile, a, params).expect("member of the delegation set") {
                Posterior::OnPath(mu) => {
                    beliefs.set(a, mu, Provenance::OnPathBayes);
                    if retain_given(mu, pi) != retained {
                        violations.push(PbeViolation {
                            condition: Condition::Retention,
                            actor: Actor::Principal,
                            action: Some(a),
                            state: None,
                            margin: (mu - pi).abs(),
                        });
                    }
                }
                Posterior::OffPath => match self.d1_assign(profile, params, a) {
                    Ok(D1Assignment::Belief(mu)) => {
                        d1_bite = true;
                        beliefs.set(a, mu, Provenance::OffPathD1);
                        if retain_given(mu, pi) != retained {
                            d1_failed = true;
                            violations.push(PbeViolation {
                                condition: Condition::D1Retention,
                                actor: Actor::Principal,
                                action: Some(a),
                                state: None,
                                margin: (mu - pi).abs(),
                            });
                        }
                    }
                    _ => {
                        // Any belief is admissible; pick an extreme one that supports the rule.
                        match [0.0, 1.0].into_iter().find(|&mu| retain_given(mu, pi) == retained) {
                            Some(mu) => beliefs.set(a, mu, Provenance::OffPathUnrestricted),
                            None => {
                                beliefs.set(a, 1.0, Provenance::OffPathUnrestricted);
                                violations.push(PbeViolation {
                                    condition: Condition::Retention,
                                    actor: Actor::Principal,
                                    action: Some(a),
                                    state: None,
                                    margin: pi,
                                });
                            }
                        }
                    }
                },
            }
        }

        violations.extend(
            self.sequential_rationality(profile, &beliefs, params)
                .expect("beliefs cover the delegation set"),
        );
        let survives_d1 = if d1_failed {
            D1Status::No
        } else if d1_bite {
            D1Status::Yes
        } else {
            D1Status::Vacuous
        };
        VerificationReport {
            verdict: if violations.is_empty() { Verdict::Pbe } else { Verdict::NotPbe },
            violations,
            informative: is_informative(profile, params),
            survives_d1,
            beliefs,
        }
    }
}

/// Smallest retention probability on `offpath` at which some deviating
/// strategy of type `t` that uses `offpath` breaks even with the type's
/// equilibrium payoff. The value is not clamped to `[0, 1]`: it is the
/// compensation the type needs, and may exceed one when no feasible
/// retention makes the deviation attractive.
pub fn compensation_threshold(
    profile: &StrategyProfile,
    params: &ModelParams,
    t: ExpertType,
    offpath: Action,
) -> f64 {
    let role = Role::Expert(t);
    let y = &profile.retention;
    let target = equilibrium_payoff(profile, t, params);
    let needed = |base: f64, weight: f64| {
        let slope = params.rent * weight;
        let gap = target - base;
        if slope > 0.0 {
            gap / slope
        } else if gap < 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    };

    // Uninformed: play the deviation outright.
    let mut best = needed(expected_uninformed_loss(role, offpath, params), 1.0);

    // Informed: pay k, use the deviation on a nonempty set of live states and
    // the best remaining action elsewhere.
    let live: Vec<State> =
        Action::ALL.into_iter().filter(|&w| params.state_prob(w) > 0.0).collect();
    let others: Vec<Action> = profile.delegation.actions().filter(|&x| x != offpath).collect();
    if others.is_empty() {
        return best;
    }
    let fallback: Vec<f64> = live
        .iter()
        .map(|&w| {
            others
                .iter()
                .map(|&x| informed_payoff(t, x, w, y, params))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    for mask in 1u32..(1 << live.len()) {
        let mut base = -params.k;
        let mut weight = 0.0;
        for (i, &w) in live.iter().enumerate() {
            let pw = params.state_prob(w);
            if mask & (1 << i) != 0 {
                base += pw * policy_loss(role, offpath, w, params);
                weight += pw;
            } else {
                base += pw * fallback[i];
            }
        }
        best = best.min(needed(base, weight));
    }
    best
}

/// D1 comparison of the two types' compensation thresholds. The type that
/// needs strictly more compensation is ruled out.
pub fn d1_from_thresholds(congruent: f64, noncongruent: f64, tol: f64) -> D1Assignment {
    if congruent == noncongruent {
        return D1Assignment::Unrestricted;
    }
    let diff = congruent - noncongruent;
    if diff.is_nan() {
        D1Assignment::Unrestricted
    } else if diff > tol {
        D1Assignment::Belief(0.0)
    } else if diff < -tol {
        D1Assignment::Belief(1.0)
    } else {
        D1Assignment::Unrestricted
    }
}

pub fn verify_sequential_rationality(
    profile: &StrategyProfile,
    beliefs: &BeliefMap,
    params: &ModelParams,
) -> Result<Vec<PbeViolation>, PbeError> {
    Verifier::default().sequential_rationality(profile, beliefs, params)
}

pub fn verify_belief_consistency(
    profile: &StrategyProfile,
    beliefs: &BeliefMap,
    params: &ModelParams,
) -> Vec<PbeViolation> {
    Verifier::default().belief_consistency(profile, beliefs, params)
}

pub fn d1_assign(
    profile: &StrategyProfile,
    params: &ModelParams,
    offpath: Action,
) -> Result<D1Assignment, PbeError> {
    Verifier::default().d1_assign(profile, params, offpath)
}

pub fn verify_pbe(profile: &StrategyProfile, params: &ModelParams) -> VerificationReport {
    Verifier::default().verify(profile, params)
}
