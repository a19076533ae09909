//! Game primitives: actions, states, expert types, the common prior and
//! the quadratic policy payoffs.

use std::fmt;
use std::str::FromStr;

/// Absolute tolerance for equilibrium inequality checks.
pub const TAU_NUM: f64 = 1e-9;

/// One of the three reform decisions. The radical magnitude `r` lives in
/// [`ModelParams`], so numeric values need the parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    StatusQuo,
    Moderate,
    Radical,
}

/// States share the action scale: state `w` calls for action `w`.
pub type State = Action;

impl Action {
    pub const ALL: [Action; 3] = [Action::StatusQuo, Action::Moderate, Action::Radical];

    pub fn index(self) -> usize {
        match self {
            Action::StatusQuo => 0,
            Action::Moderate => 1,
            Action::Radical => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn value(self, r: f64) -> f64 {
        match self {
            Action::StatusQuo => 0.0,
            Action::Moderate => 1.0,
            Action::Radical => r,
        }
    }

    /// Short token used in the profile format and CLI: `0`, `1` or `r`.
    pub fn token(self) -> &'static str {
        match self {
            Action::StatusQuo => "0",
            Action::Moderate => "1",
            Action::Radical => "r",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Action {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "0" => Ok(Action::StatusQuo),
            "1" => Ok(Action::Moderate),
            "r" => Ok(Action::Radical),
            other => Err(format!("unknown action `{other}` (expected 0, 1 or r)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExpertType {
    Congruent,
    Noncongruent,
}

impl ExpertType {
    pub const ALL: [ExpertType; 2] = [ExpertType::Congruent, ExpertType::Noncongruent];

    pub fn index(self) -> usize {
        match self {
            ExpertType::Congruent => 0,
            ExpertType::Noncongruent => 1,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            ExpertType::Congruent => "c",
            ExpertType::Noncongruent => "n",
        }
    }
}

impl fmt::Display for ExpertType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for ExpertType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "c" => Ok(ExpertType::Congruent),
            "n" => Ok(ExpertType::Noncongruent),
            other => Err(format!("unknown expert type `{other}` (expected c or n)")),
        }
    }
}

/// Whose policy preference is evaluated. The principal shares the
/// congruent expert's state-matching loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Principal,
    Expert(ExpertType),
}

impl From<ExpertType> for Role {
    fn from(t: ExpertType) -> Self {
        Role::Expert(t)
    }
}

/// The five primitives of the game plus the small positive constant used
/// by the parameter-region sampler.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Prior weight of each extreme state.
    pub p: f64,
    /// Magnitude of the radical reform.
    pub r: f64,
    /// Office rent earned on retention.
    pub rent: f64,
    /// Information acquisition cost.
    pub k: f64,
    /// Prior probability that the expert is congruent.
    pub pi: f64,
    pub epsilon: f64,
}

impl ModelParams {
    pub fn new(p: f64, r: f64, rent: f64, k: f64, pi: f64) -> Self {
        ModelParams { p, r, rent, k, pi, epsilon: 1e-3 }
    }

    pub fn with_k(self, k: f64) -> Self {
        ModelParams { k, ..self }
    }

    pub fn with_pi(self, pi: f64) -> Self {
        ModelParams { pi, ..self }
    }

    /// Prior probability of state `w`: `(p, 1 - 2p, p)`.
    pub fn state_prob(&self, w: State) -> f64 {
        match w {
            Action::StatusQuo | Action::Radical => self.p,
            Action::Moderate => 1.0 - 2.0 * self.p,
        }
    }

    pub fn state_prior(&self) -> [f64; 3] {
        [self.p, 1.0 - 2.0 * self.p, self.p]
    }

    pub fn type_prob(&self, t: ExpertType) -> f64 {
        match t {
            ExpertType::Congruent => self.pi,
            ExpertType::Noncongruent => 1.0 - self.pi,
        }
    }

    pub fn validate(&self) -> Validation {
        validate_params(self)
    }
}

/// A violated modelling assumption, carrying the offending values.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    PNotPositive { p: f64 },
    PAboveHalf { p: f64 },
    RAtMostSqrt2 { r: f64 },
    RAboveTwo { r: f64 },
    RentBelowOne { rent: f64 },
    RentTooLarge { rent: f64, bound: f64 },
    KNotPositive { k: f64 },
    PiOutOfRange { pi: f64 },
    EpsilonNotPositive { epsilon: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::PNotPositive { p } => write!(f, "p ≤ 0 (p = {p})"),
            Violation::PAboveHalf { p } => write!(f, "p > 1/2 (p = {p})"),
            Violation::RAtMostSqrt2 { r } => write!(f, "r ≤ √2 (r = {r})"),
            Violation::RAboveTwo { r } => write!(f, "r > 2 (r = {r})"),
            Violation::RentBelowOne { rent } => write!(f, "R < 1 (R = {rent})"),
            Violation::RentTooLarge { rent, bound } => {
                write!(f, "R ≥ r²−1 (R = {rent}, r²−1 = {bound})")
            }
            Violation::KNotPositive { k } => write!(f, "k ≤ 0 (k = {k})"),
            Violation::PiOutOfRange { pi } => write!(f, "pi ∉ (0,1) (pi = {pi})"),
            Violation::EpsilonNotPositive { epsilon } => write!(f, "epsilon ≤ 0 (epsilon = {epsilon})"),
        }
    }
}

/// Result of checking the assumption region. Violations are data so that
/// sweeps can label points instead of aborting.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Validation {
    pub violations: Vec<Violation>,
    /// `p = 1/2`: the moderate state has zero probability.
    pub degenerate_moderate: bool,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn validate_params(params: &ModelParams) -> Validation {
    let ModelParams { p, r, rent, k, pi, epsilon } = *params;
    let mut violations = Vec::new();
    // Negated comparisons so that NaN is reported as a violation.
    if !(p > 0.0) {
        violations.push(Violation::PNotPositive { p });
    }
    if !(p <= 0.5) {
        violations.push(Violation::PAboveHalf { p });
    }
    if !(r > std::f64::consts::SQRT_2) {
        violations.push(Violation::RAtMostSqrt2 { r });
    }
    if !(r <= 2.0) {
        violations.push(Violation::RAboveTwo { r });
    }
    if !(rent >= 1.0) {
        violations.push(Violation::RentBelowOne { rent });
    }
    let bound = r * r - 1.0;
    if !(rent < bound) {
        violations.push(Violation::RentTooLarge { rent, bound });
    }
    if !(k > 0.0) {
        violations.push(Violation::KNotPositive { k });
    }
    if !(pi > 0.0 && pi < 1.0) {
        violations.push(Violation::PiOutOfRange { pi });
    }
    if !(epsilon > 0.0) {
        violations.push(Violation::EpsilonNotPositive { epsilon });
    }
    Validation { violations, degenerate_moderate: p == 0.5 }
}

/// Policy payoff (a non-positive quadratic loss) of `role` when action `x`
/// is taken in state `w`.
pub fn policy_loss(role: Role, x: Action, w: State, params: &ModelParams) -> f64 {
    let xv = x.value(params.r);
    match role {
        Role::Principal | Role::Expert(ExpertType::Congruent) => {
            let d = xv - w.value(params.r);
            -(d * d)
        }
        Role::Expert(ExpertType::Noncongruent) => -(xv * xv),
    }
}

/// Prior-weighted policy payoff of an uninformed choice of `x`.
pub fn expected_uninformed_loss(role: Role, x: Action, params: &ModelParams) -> f64 {
    Action::ALL
        .iter()
        .map(|&w| params.state_prob(w) * policy_loss(role, x, w, params))
        .sum()
}

/// Nonempty subset of the three actions the principal permits.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DelegationSet {
    mask: u8,
}

impl DelegationSet {
    pub const FULL_MENU: DelegationSet = DelegationSet { mask: 0b111 };
    pub const NO_COMPROMISE: DelegationSet = DelegationSet { mask: 0b101 };
    pub const CHANGE: DelegationSet = DelegationSet { mask: 0b110 };

    /// Returns `None` for the empty set.
    pub fn new(actions: &[Action]) -> Option<DelegationSet> {
        let mask = actions.iter().fold(0u8, |m, a| m | (1 << a.index()));
        (mask != 0).then_some(DelegationSet { mask })
    }

    pub fn contains(&self, a: Action) -> bool {
        self.mask & (1 << a.index()) != 0
    }

    /// Members in increasing order.
    pub fn actions(&self) -> impl Iterator<Item = Action> + '_ {
        Action::ALL.into_iter().filter(|a| self.contains(*a))
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn lowest(&self) -> Action {
        self.actions().next().expect("delegation sets are nonempty")
    }

    pub fn name(&self) -> String {
        match *self {
            DelegationSet::FULL_MENU => "FullMenu".to_string(),
            DelegationSet::NO_COMPROMISE => "NoCompromise".to_string(),
            DelegationSet::CHANGE => "Change".to_string(),
            other => format!("{other}"),
        }
    }
}

impl fmt::Display for DelegationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tokens: Vec<&str> = self.actions().map(Action::token).collect();
        write!(f, "{{{}}}", tokens.join(","))
    }
}

impl fmt::Debug for DelegationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DelegationSet{self}")
    }
}

impl FromStr for DelegationSet {
    type Err = String;

    /// Accepts `full`, `nc`, `change` (and the long names) or a comma list
    /// of action tokens such as `0,1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" | "fullmenu" | "full-menu" => return Ok(DelegationSet::FULL_MENU),
            "nc" | "nocompromise" | "no-compromise" => return Ok(DelegationSet::NO_COMPROMISE),
            "change" => return Ok(DelegationSet::CHANGE),
            _ => {}
        }
        let inner = s.trim().trim_start_matches('{').trim_end_matches('}');
        let actions = inner
            .split(',')
            .map(|t| t.trim().parse::<Action>())
            .collect::<Result<Vec<_>, _>>()?;
        DelegationSet::new(&actions).ok_or_else(|| "empty delegation set".to_string())
    }
}
