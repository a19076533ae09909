use delegation_core::closed_form::{omega_sample, Thresholds};
use delegation_core::oracle::{find_equilibria, structural_violations, GridSpec, Match, ProfileClass};
use delegation_core::strategy::{retain_given, Provenance};
use delegation_core::sweep::with_workers;
use delegation_core::{Action, DelegationSet, ModelParams};

fn omega(p: f64) -> ModelParams {
    omega_sample(p, 0.5, 1e-3).unwrap().params
}

#[test]
fn accepted_profiles_satisfy_structural_properties_and_retention_rule() {
    let banned_radical = DelegationSet::new(&[Action::StatusQuo, Action::Moderate]).unwrap();
    let mut sets = GridSpec::pure().delegation_sets;
    sets.push(banned_radical);
    for prm in [omega(0.15), omega(0.35), ModelParams::new(0.25, 2.0, 1.0, 0.5, 0.5)] {
        for &d in &sets {
            let f = find_equilibria(&prm, d, &GridSpec::pure()).unwrap();
            for acc in &f.profiles_found {
                assert!(structural_violations(&acc.profile, &prm).is_empty(), "{f}");
                for a in d.actions() {
                    let b = acc.report.beliefs.get(a).unwrap();
                    if b.provenance == Provenance::OnPathBayes {
                        assert_eq!(acc.profile.retention.retains(a), retain_given(b.mu, prm.pi));
                    }
                }
            }
        }
    }
}

#[test]
fn banning_radical_gives_no_informative_equilibrium_at_region_points() {
    let d = DelegationSet::new(&[Action::StatusQuo, Action::Moderate]).unwrap();
    for p in [0.1, 0.25, 0.4] {
        let f = find_equilibria(&omega(p), d, &GridSpec::pure()).unwrap();
        assert_eq!(f.matches_closed_form, Match::Yes, "{f}");
        assert_eq!(f.informative().count(), 0);
    }
}

#[test]
fn grid_refinement_keeps_pure_equilibria() {
    let sets = [DelegationSet::NO_COMPROMISE, DelegationSet::CHANGE];
    for prm in [omega(0.25), ModelParams::new(0.25, 2.0, 1.0, 0.3, 0.5)] {
        for d in sets {
            let coarse = find_equilibria(&prm, d, &GridSpec::pure()).unwrap();
            let fine = find_equilibria(&prm, d, &GridSpec::with_divisions(2).unwrap()).unwrap();
            assert!(fine.profiles_found.len() >= coarse.profiles_found.len());
            for acc in &coarse.profiles_found {
                assert!(
                    fine.profiles_found.iter().any(|f| f.profile == acc.profile),
                    "lost {} under {d}",
                    acc.index
                );
            }
        }
    }
}

#[test]
fn boundary_points_on_both_sides_of_each_threshold() {
    let base = ModelParams::new(0.25, 2.0, 1.0, 0.0, 0.5);
    let th = Thresholds::at(&base);
    let grid = GridSpec::pure();
    let eps = 1e-6;

    let pooled = |k: f64| {
        let f = find_equilibria(&base.with_k(k), DelegationSet::FULL_MENU, &grid).unwrap();
        assert_ne!(f.matches_closed_form, Match::No, "{f}");
        f.profiles_found
            .iter()
            .any(|a| a.class == ProfileClass::Pooling(Some(Action::Moderate)))
    };
    assert!(!pooled(th.pooling - eps));
    assert!(pooled(th.pooling + eps));

    for (d, bound) in [(DelegationSet::NO_COMPROMISE, th.no_compromise), (DelegationSet::CHANGE, th.change)] {
        let below = find_equilibria(&base.with_k(bound - eps), d, &grid).unwrap();
        let above = find_equilibria(&base.with_k(bound + eps), d, &grid).unwrap();
        assert!(below.predicted_found, "{below}");
        assert!(below.informative().count() > 0);
        assert_eq!(above.informative().count(), 0, "{above}");
        assert_ne!(above.matches_closed_form, Match::No, "{above}");
    }
}

#[test]
fn findings_do_not_depend_on_worker_count() {
    let prm = omega(0.3);
    let run = |n| with_workers(Some(n), || find_equilibria(&prm, DelegationSet::FULL_MENU, &GridSpec::pure()).unwrap());
    let (one, many) = (run(1), run(6));
    assert_eq!(one, many);
}
