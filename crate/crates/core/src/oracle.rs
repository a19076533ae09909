//! Brute-force search for equilibria over a discretised strategy space.
//!
//! Every profile with per-type information choices, uninformed and informed
//! policies on a probability grid, and every deterministic retention rule
//! over the delegation set is run through the verifier. Profiles are
//! addressed by a dense index, which doubles as the canonical ordering of
//! results: the search is split across rayon workers and reassembled in
//! index order, so findings do not depend on the worker count.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::closed_form::{equilibrium, DelegationStrategy, EquilibriumOutcome};
use crate::model::{Action, DelegationSet, ExpertType, ModelParams, TAU_NUM};
use crate::pbe::{VerificationReport, Verifier};
use crate::strategy::{
    action_frequency, is_informative, principal_payoff, ActionDist, StrategyProfile,
};

/// Largest profile space searched at one parameter point.
pub const PROFILE_CAP: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("profile space of {count} exceeds the cap of {cap}")]
    CapExceeded { count: u128, cap: u64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    /// Mixing probabilities are multiples of `1 / divisions`.
    pub divisions: u32,
    pub delegation_sets: Vec<DelegationSet>,
    /// Best-response slack used by the verifier.
    pub epsilon_br: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::pure()
    }
}

impl GridSpec {
    /// Pure strategies on the three compared delegation sets.
    pub fn pure() -> Self {
        GridSpec {
            divisions: 1,
            delegation_sets: DelegationStrategy::ALL.iter().map(|s| s.delegation()).collect(),
            epsilon_br: TAU_NUM,
        }
    }

    pub fn with_divisions(divisions: u32) -> Result<Self, OracleError> {
        if divisions == 0 {
            return Err(OracleError::InvalidGrid("probability step must be positive".into()));
        }
        Ok(GridSpec { divisions, ..GridSpec::pure() })
    }

    pub fn prob_step(&self) -> f64 {
        1.0 / f64::from(self.divisions)
    }
}

/// A probability step written as `1`, `1/4` or `0.25`; its reciprocal must
/// be an integer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProbStep(pub u32);

impl FromStr for ProbStep {
    type Err = OracleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || OracleError::InvalidGrid(format!("probability step `{s}` is not 1/m"));
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num: u32 = num.trim().parse().map_err(|_| bad())?;
            let den: u32 = den.trim().parse().map_err(|_| bad())?;
            if num == 0 || den == 0 || !den.is_multiple_of(num) {
                return Err(bad());
            }
            return Ok(ProbStep(den / num));
        }
        let step: f64 = s.parse().map_err(|_| bad())?;
        if !(step > 0.0 && step <= 1.0) {
            return Err(bad());
        }
        let m = (1.0 / step).round();
        if ((1.0 / step) - m).abs() > 1e-9 {
            return Err(bad());
        }
        Ok(ProbStep(m as u32))
    }
}

fn simplex_points(members: &[Action], divisions: u32) -> Vec<ActionDist> {
    fn rec(
        members: &[Action],
        left: u32,
        divisions: u32,
        cur: &mut ActionDist,
        out: &mut Vec<ActionDist>,
    ) {
        match members {
            [] => {}
            [last] => {
                cur.set(*last, f64::from(left) / f64::from(divisions));
                out.push(*cur);
                cur.set(*last, 0.0);
            }
            [first, rest @ ..] => {
                for units in (0..=left).rev() {
                    cur.set(*first, f64::from(units) / f64::from(divisions));
                    rec(rest, left - units, divisions, cur, out);
                }
                cur.set(*first, 0.0);
            }
        }
    }
    let mut out = Vec::new();
    rec(members, divisions, divisions, &mut ActionDist::default(), &mut out);
    out
}

/// The enumerable strategy space for one delegation set. Per type there
/// are `s` uninformed strategies and `s^3` informed ones, `s` being the
/// number of grid points on the simplex over the delegation set.
#[derive(Clone, Debug)]
pub struct ProfileSpace {
    delegation: DelegationSet,
    members: Vec<Action>,
    simplex: Vec<ActionDist>,
    per_type: u64,
    retention_rules: u64,
    total: u64,
}

impl ProfileSpace {
    pub fn new(delegation: DelegationSet, divisions: u32) -> Result<Self, OracleError> {
        ProfileSpace::with_cap(delegation, divisions, PROFILE_CAP)
    }

    pub fn with_cap(delegation: DelegationSet, divisions: u32, cap: u64) -> Result<Self, OracleError> {
        if divisions == 0 {
            return Err(OracleError::InvalidGrid("probability step must be positive".into()));
        }
        let members: Vec<Action> = delegation.actions().collect();
        // grid points on the simplex: C(m + |D| - 1, |D| - 1)
        let s = (1..members.len() as u128)
            .fold(1u128, |acc, i| acc * (u128::from(divisions) + i) / i);
        let per_type = s + s * s * s;
        let retention_rules = 1u128 << members.len();
        let total = per_type * per_type * retention_rules;
        if total > u128::from(cap) {
            return Err(OracleError::CapExceeded { count: total, cap });
        }
        let simplex = simplex_points(&members, divisions);
        debug_assert_eq!(simplex.len() as u128, s);
        Ok(ProfileSpace {
            delegation,
            members,
            simplex,
            per_type: per_type as u64,
            retention_rules: retention_rules as u64,
            total: total as u64,
        })
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn delegation(&self) -> DelegationSet {
        self.delegation
    }

    /// Profile number `index`, for `index < len()`. The unused policy branch
    /// of each type is left at its default point mass.
    pub fn profile_at(&self, index: u64) -> StrategyProfile {
        assert!(index < self.total, "profile index out of range");
        let ret = index % self.retention_rules;
        let rest = index / self.retention_rules;
        let (c_idx, n_idx) = (rest / self.per_type, rest % self.per_type);
        let mut profile = StrategyProfile::new(self.delegation);
        for (t, idx) in [(ExpertType::Congruent, c_idx), (ExpertType::Noncongruent, n_idx)] {
            self.set_type_strategy(&mut profile, t, idx);
        }
        for (bit, &a) in self.members.iter().enumerate() {
            profile.retention.set(a, ret & (1 << bit) != 0);
        }
        profile
    }

    fn set_type_strategy(&self, profile: &mut StrategyProfile, t: ExpertType, idx: u64) {
        let s = self.simplex.len() as u64;
        if idx < s {
            profile.info.tau[t.index()] = false;
            profile.uninformed.q[t.index()] = self.simplex[idx as usize];
        } else {
            profile.info.tau[t.index()] = true;
            let mut code = idx - s;
            for w in Action::ALL {
                profile.informed.p[t.index()][w.index()] = self.simplex[(code % s) as usize];
                code /= s;
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = StrategyProfile> + '_ {
        (0..self.total).map(|i| self.profile_at(i))
    }
}

/// All profiles of `delegation` on the grid, in canonical order.
pub fn enumerate_profiles(delegation: DelegationSet, grid: &GridSpec) -> Result<ProfileSpace, OracleError> {
    ProfileSpace::new(delegation, grid.divisions)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileClass {
    Informative,
    /// Both types play the same action distribution without information;
    /// carries the action when that distribution is a point mass.
    Pooling(Option<Action>),
    Separating,
}

impl fmt::Display for ProfileClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileClass::Informative => f.write_str("informative"),
            ProfileClass::Pooling(Some(a)) => write!(f, "pooling on {a}"),
            ProfileClass::Pooling(None) => f.write_str("pooling (mixed)"),
            ProfileClass::Separating => f.write_str("uninformed separating"),
        }
    }
}

pub fn classify(profile: &StrategyProfile, params: &ModelParams) -> ProfileClass {
    if is_informative(profile, params) {
        return ProfileClass::Informative;
    }
    let freq = |t| {
        let mut dist = ActionDist::default();
        for a in profile.delegation.actions() {
            dist.set(a, action_frequency(profile, t, a, params).expect("member action"));
        }
        dist
    };
    let (c, n) = (freq(ExpertType::Congruent), freq(ExpertType::Noncongruent));
    if c.approx_eq(&n, TAU_NUM) {
        ProfileClass::Pooling(c.as_point())
    } else {
        ProfileClass::Separating
    }
}

/// Same information choices and same play on every state that can occur.
/// Retention is not compared.
pub fn same_outcome(a: &StrategyProfile, b: &StrategyProfile, params: &ModelParams) -> bool {
    a.delegation == b.delegation
        && ExpertType::ALL.iter().all(|&t| {
            a.info.acquires(t) == b.info.acquires(t)
                && Action::ALL
                    .iter()
                    .filter(|&&w| params.state_prob(w) > 0.0)
                    .all(|&w| a.play(t, w).approx_eq(b.play(t, w), TAU_NUM))
        })
}

/// [`same_outcome`] plus identical retention over the delegation set.
pub fn same_profile(a: &StrategyProfile, b: &StrategyProfile, params: &ModelParams) -> bool {
    same_outcome(a, b, params)
        && a.delegation.actions().all(|x| a.retention.retains(x) == b.retention.retains(x))
}

/// Structural properties every accepted equilibrium must have: the
/// noncongruent type never acquires information, and in an informative
/// equilibrium it plays the lowest permitted action and is removed.
pub fn structural_violations(profile: &StrategyProfile, params: &ModelParams) -> Vec<String> {
    let mut out = Vec::new();
    if profile.info.acquires(ExpertType::Noncongruent) {
        out.push("noncongruent expert acquires information".to_string());
    }
    if is_informative(profile, params) {
        let low = profile.delegation.lowest();
        let freq = action_frequency(profile, ExpertType::Noncongruent, low, params).expect("member");
        if (freq - 1.0).abs() > TAU_NUM {
            out.push(format!("noncongruent plays lowest action {low} with probability {freq}"));
        }
        if profile.retention.retains(low) {
            out.push(format!("noncongruent retained on lowest action {low}"));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct AcceptedProfile {
    /// Position in the canonical enumeration.
    pub index: u64,
    pub profile: StrategyProfile,
    pub report: VerificationReport,
    pub class: ProfileClass,
    pub principal_value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Match {
    Yes,
    No,
    ExtraEquilibria,
}

impl fmt::Display for Match {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Match::Yes => "matches closed form",
            Match::No => "MISMATCH with closed form",
            Match::ExtraEquilibria => "matches closed form, with extra equilibria",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleFinding {
    pub params: ModelParams,
    pub delegation: DelegationSet,
    pub searched: u64,
    pub profiles_found: Vec<AcceptedProfile>,
    /// Closed-form outcome for the three compared sets; `None` otherwise.
    pub predicted: Option<EquilibriumOutcome>,
    pub predicted_found: bool,
    pub matches_closed_form: Match,
    /// Human-readable reason when the match is not `Yes`.
    pub note: Option<String>,
}

impl OracleFinding {
    pub fn informative(&self) -> impl Iterator<Item = &AcceptedProfile> {
        self.profiles_found.iter().filter(|a| a.class == ProfileClass::Informative)
    }
}

impl fmt::Display for OracleFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "delegation {} ({}): {} profiles searched, {} accepted",
            self.delegation,
            self.delegation.name(),
            self.searched,
            self.profiles_found.len()
        )?;
        if let Some(pred) = &self.predicted {
            writeln!(
                f,
                "  closed form: {:?} ({}), predicted profile found: {}",
                pred.kind,
                pred.k_condition,
                if self.predicted_found { "yes" } else { "no" }
            )?;
        }
        writeln!(f, "  {}", self.matches_closed_form)?;
        if let Some(note) = &self.note {
            writeln!(f, "  note: {note}")?;
        }
        for acc in &self.profiles_found {
            writeln!(
                f,
                "  #{:<8} {:<22} V = {:.9}  {}",
                acc.index,
                acc.class.to_string(),
                acc.principal_value,
                describe(&acc.profile, &self.params)
            )?;
        }
        Ok(())
    }
}

/// One-line summary of a profile's on-path behaviour.
pub fn describe(profile: &StrategyProfile, params: &ModelParams) -> String {
    let dist = |d: &ActionDist| match d.as_point() {
        Some(a) => a.to_string(),
        None => {
            let parts: Vec<String> =
                d.support().map(|a| format!("{a}:{}", d.prob(a))).collect();
            format!("[{}]", parts.join(" "))
        }
    };
    let mut parts = Vec::new();
    for t in ExpertType::ALL {
        if profile.info.acquires(t) {
            let states: Vec<String> = Action::ALL
                .iter()
                .filter(|&&w| params.state_prob(w) > 0.0)
                .map(|&w| format!("{w}->{}", dist(profile.informed.of(t, w))))
                .collect();
            parts.push(format!("{t}: informed {}", states.join(",")));
        } else {
            parts.push(format!("{t}: uninformed {}", dist(profile.uninformed.of(t))));
        }
    }
    let kept: Vec<String> = profile
        .delegation
        .actions()
        .filter(|&a| profile.retention.retains(a))
        .map(|a| a.to_string())
        .collect();
    parts.push(format!("retain {{{}}}", kept.join(",")));
    parts.join("; ")
}

pub fn find_equilibria(
    params: &ModelParams,
    delegation: DelegationSet,
    grid: &GridSpec,
) -> Result<OracleFinding, OracleError> {
    let space = enumerate_profiles(delegation, grid)?;
    let verifier = Verifier::new(grid.epsilon_br);
    let profiles_found: Vec<AcceptedProfile> = (0..space.len())
        .into_par_iter()
        .filter_map(|index| {
            let profile = space.profile_at(index);
            let report = verifier.verify(&profile, params);
            report.is_pbe().then(|| AcceptedProfile {
                index,
                class: classify(&profile, params),
                principal_value: principal_payoff(&profile, params),
                profile,
                report,
            })
        })
        .collect();

    let predicted = DelegationStrategy::of(delegation).map(|s| equilibrium(s, params));
    let (predicted_found, matches, note) = compare(params, delegation, predicted.as_ref(), &profiles_found);
    Ok(OracleFinding {
        params: *params,
        delegation,
        searched: space.len(),
        profiles_found,
        predicted,
        predicted_found,
        matches_closed_form: matches,
        note,
    })
}

fn compare(
    params: &ModelParams,
    delegation: DelegationSet,
    predicted: Option<&EquilibriumOutcome>,
    found: &[AcceptedProfile],
) -> (bool, Match, Option<String>) {
    let informative = found.iter().filter(|a| a.class == ProfileClass::Informative).count();
    let Some(pred) = predicted else {
        // Outside the compared sets the only claim is that no informative
        // equilibrium exists.
        return if informative == 0 {
            (false, Match::Yes, None)
        } else {
            (false, Match::No, Some(format!("{informative} informative equilibria under {delegation}")))
        };
    };
    match &pred.profile {
        Some(profile) => {
            let hit = found.iter().any(|a| same_profile(&a.profile, profile, params));
            if !hit {
                return (false, Match::No, Some(format!("predicted {:?} profile not accepted", pred.kind)));
            }
            let extra = found.iter().filter(|a| !same_outcome(&a.profile, profile, params)).count();
            if extra == 0 {
                (true, Match::Yes, None)
            } else {
                (true, Match::ExtraEquilibria, Some(format!("{extra} accepted profiles with a different outcome")))
            }
        }
        None => {
            // Infeasible prediction: the oracle must not find an equilibrium of
            // the kind the closed form rules out.
            let contradicting = found
                .iter()
                .filter(|a| match pred.delegation {
                    DelegationSet::FULL_MENU => a.class == ProfileClass::Pooling(Some(Action::Moderate)),
                    _ => a.class == ProfileClass::Informative,
                })
                .count();
            if contradicting > 0 {
                (false, Match::No, Some(format!("{contradicting} equilibria of the ruled-out kind found")))
            } else if found.is_empty() {
                (false, Match::Yes, None)
            } else {
                (false, Match::ExtraEquilibria, Some(format!("{} other equilibria", found.len())))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub params: ModelParams,
    pub delegation: DelegationSet,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CrossCheckSummary {
    pub findings: Vec<OracleFinding>,
    pub mismatches: Vec<Mismatch>,
    /// Accepted profiles breaking the structural properties.
    pub structural_failures: Vec<Mismatch>,
}

impl CrossCheckSummary {
    pub fn is_clean(&self) -> bool {
        self.mismatches.is_empty() && self.structural_failures.is_empty()
    }
}

impl fmt::Display for CrossCheckSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} runs, {} mismatches, {} structural failures",
            self.findings.len(),
            self.mismatches.len(),
            self.structural_failures.len()
        )?;
        for m in self.mismatches.iter().chain(&self.structural_failures) {
            writeln!(
                f,
                "  p={} r={} R={} k={} pi={} {}: {}",
                m.params.p, m.params.r, m.params.rent, m.params.k, m.params.pi, m.delegation, m.reason
            )?;
        }
        Ok(())
    }
}

/// Runs [`find_equilibria`] at every point for every delegation set of the
/// grid and collects disagreements with the closed form.
pub fn cross_check(points: &[ModelParams], grid: &GridSpec) -> Result<CrossCheckSummary, OracleError> {
    let mut summary = CrossCheckSummary::default();
    for params in points {
        for &delegation in &grid.delegation_sets {
            let finding = find_equilibria(params, delegation, grid)?;
            if finding.matches_closed_form == Match::No {
                summary.mismatches.push(Mismatch {
                    params: *params,
                    delegation,
                    reason: finding.note.clone().unwrap_or_default(),
                });
            }
            for acc in &finding.profiles_found {
                for reason in structural_violations(&acc.profile, params) {
                    summary.structural_failures.push(Mismatch {
                        params: *params,
                        delegation,
                        reason: format!("profile #{}: {reason}", acc.index),
                    });
                }
            }
            summary.findings.push(finding);
        }
    }
    Ok(summary)
}
