use proptest::prelude::*;

use delegation_core::closed_form::{delta, optimal_delegation, principal_value, DelegationStrategy};
use delegation_core::model::{expected_uninformed_loss, policy_loss, Role};
use delegation_core::pbe::{d1_from_thresholds, D1Assignment};
use delegation_core::strategy::{
    action_frequency, continuation_value_under, equilibrium_payoff, mimic_uninformed, posterior,
    total_frequency, ActionDist, Posterior, RetentionRule,
};
use delegation_core::{Action, DelegationSet, ExpertType, ModelParams, StrategyProfile};

const ALL_SETS: [DelegationSet; 3] =
    [DelegationSet::FULL_MENU, DelegationSet::NO_COMPROMISE, DelegationSet::CHANGE];

fn region() -> impl Strategy<Value = ModelParams> {
    (0.01f64..=0.5, 1.4143f64..=2.0, 0.0f64..1.0, 0.001f64..2.0, 0.01f64..0.99).prop_filter_map(
        "outside region",
        |(p, r, t, k, pi)| {
            let rent = 1.0 + t * (r * r - 2.0);
            let prm = ModelParams::new(p, r, rent, k, pi);
            prm.validate().is_ok().then_some(prm)
        },
    )
}

fn dist_on(d: DelegationSet, w: [f64; 3]) -> ActionDist {
    let mut out = ActionDist::default();
    let members: Vec<Action> = d.actions().collect();
    let total: f64 = members.iter().map(|a| w[a.index()]).sum();
    for a in &members {
        out.set(*a, w[a.index()] / total);
    }
    out
}

fn random_profile() -> impl Strategy<Value = StrategyProfile> {
    let weights = || prop::array::uniform3(0.01f64..1.0);
    (
        0usize..3,
        prop::array::uniform2(any::<bool>()),
        prop::array::uniform2(weights()),
        prop::array::uniform2(prop::array::uniform3(weights())),
        prop::array::uniform3(any::<bool>()),
    )
        .prop_map(|(set, tau, q, p, retain)| {
            let d = ALL_SETS[set];
            let mut prof = StrategyProfile::new(d);
            for t in ExpertType::ALL {
                let i = t.index();
                prof.info.tau[i] = tau[i];
                prof.uninformed.q[i] = dist_on(d, q[i]);
                for w in Action::ALL {
                    prof.informed.p[i][w.index()] = dist_on(d, p[i][w.index()]);
                }
            }
            for a in d.actions() {
                prof.retention.set(a, retain[a.index()]);
            }
            prof
        })
}

proptest! {
    #[test]
    fn prior_is_a_distribution(p in 0.0001f64..=0.5) {
        let prm = ModelParams::new(p, 2.0, 1.0, 0.1, 0.5);
        let prior = prm.state_prior();
        prop_assert!(prior.iter().all(|&x| x >= 0.0));
        prop_assert!((prior.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn losses_are_nonpositive_and_zero_only_at_the_ideal(prm in region()) {
        for x in Action::ALL {
            for w in Action::ALL {
                for role in [Role::Principal, Role::Expert(ExpertType::Congruent)] {
                    let l = policy_loss(role, x, w, &prm);
                    prop_assert!(l <= 0.0);
                    prop_assert_eq!(l == 0.0, x == w);
                    prop_assert_eq!(l, policy_loss(role, w, x, &prm));
                }
                let n = policy_loss(Role::Expert(ExpertType::Noncongruent), x, w, &prm);
                prop_assert!(n <= 0.0);
                prop_assert_eq!(n == 0.0, x == Action::StatusQuo);
            }
        }
    }

    #[test]
    fn information_is_weakly_valuable(prm in region(), set in 0usize..3, retain in prop::array::uniform3(any::<bool>())) {
        let d = ALL_SETS[set];
        let mut y = RetentionRule::default();
        for a in d.actions() {
            y.set(a, retain[a.index()]);
        }
        for t in ExpertType::ALL {
            let v1 = continuation_value_under(d, &y, t, true, &prm);
            let v0 = continuation_value_under(d, &y, t, false, &prm);
            prop_assert!(v1 >= v0 - 1e-12, "{t}: {v1} < {v0}");
        }
    }

    #[test]
    fn posteriors_recover_the_prior(prm in region(), prof in random_profile()) {
        let mut freq_sum = 0.0;
        let mut weighted = 0.0;
        for d in prof.delegation.actions() {
            let f = total_frequency(&prof, d, &prm).unwrap();
            freq_sum += f;
            if let Posterior::OnPath(mu) = posterior(&prof, d, &prm).unwrap() {
                weighted += mu * f;
            }
        }
        prop_assert!((freq_sum - 1.0).abs() < 1e-9);
        prop_assert!((weighted - prm.pi).abs() < 1e-9);
    }

    #[test]
    fn mimicry_preserves_frequencies_and_gross_payoff(prm in region(), prof in random_profile()) {
        let n = ExpertType::Noncongruent;
        let mut informed = prof;
        informed.info.tau[n.index()] = true;
        let mimic = mimic_uninformed(&informed, n, &prm);
        for d in informed.delegation.actions() {
            let a = action_frequency(&informed, n, d, &prm).unwrap();
            let b = action_frequency(&mimic, n, d, &prm).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
        let gross = equilibrium_payoff(&informed, n, &prm) + prm.k;
        prop_assert!((gross - equilibrium_payoff(&mimic, n, &prm)).abs() < 1e-12);
    }

    #[test]
    fn d1_assignment_does_not_depend_on_type_order(a in 0.0f64..5.0, b in 0.0f64..5.0) {
        let flip = |x: D1Assignment| match x {
            D1Assignment::Belief(mu) => D1Assignment::Belief(1.0 - mu),
            D1Assignment::Unrestricted => D1Assignment::Unrestricted,
        };
        prop_assert_eq!(d1_from_thresholds(a, b, 1e-9), flip(d1_from_thresholds(b, a, 1e-9)));
    }

    #[test]
    fn optimal_attains_the_feasible_maximum(prm in region()) {
        let rec = optimal_delegation(&prm);
        let best = DelegationStrategy::ALL
            .into_iter()
            .filter(|&s| rec.is_feasible(s))
            .map(|s| rec.value(s))
            .fold(f64::NEG_INFINITY, f64::max);
        for s in DelegationStrategy::ALL {
            if rec.optimal.includes(s) {
                prop_assert!(rec.is_feasible(s));
                prop_assert!(rec.value(s) >= best - 1e-9);
            }
        }
        prop_assert!(rec.v_change >= rec.v_full - 1e-12);
        if rec.feas_nc && rec.feas_change {
            prop_assert!((rec.delta - (rec.v_change - rec.v_nc)).abs() < 1e-9);
        }
    }
}

#[test]
fn moderate_radical_status_quo_ordering_on_grid() {
    let c = Role::Expert(ExpertType::Congruent);
    let mut checked = 0;
    for i in 1..=25 {
        for j in 0..=25 {
            for l in 0..=5 {
                let p = 0.5 * f64::from(i) / 25.0;
                let r = 2f64.sqrt() + (2.0 - 2f64.sqrt()) * f64::from(j.max(1)) / 25.0;
                let rent = 1.0 + (r * r - 2.0) * f64::from(l) / 6.0;
                let prm = ModelParams::new(p, r, rent, 0.1, 0.5);
                if !prm.validate().is_ok() {
                    continue;
                }
                let m = expected_uninformed_loss(c, Action::Moderate, &prm);
                let rad = expected_uninformed_loss(c, Action::Radical, &prm);
                let sq = expected_uninformed_loss(c, Action::StatusQuo, &prm);
                assert!(m >= rad && rad >= sq, "p={p} r={r}: {m} {rad} {sq}");
                checked += 1;
            }
        }
    }
    assert!(checked > 3000);
}

#[test]
fn delta_identity_at_reference_points() {
    for (p, r, pi) in [(0.25, 2.0, 0.5), (0.45, 1.6, 0.9), (0.1, 1.5, 0.3)] {
        let prm = ModelParams::new(p, r, 1.0, 0.01, pi);
        let diff = principal_value(DelegationStrategy::Change, &prm)
            - principal_value(DelegationStrategy::NoCompromise, &prm);
        assert!((delta(p, r, pi) - diff).abs() < 1e-12);
    }
}
