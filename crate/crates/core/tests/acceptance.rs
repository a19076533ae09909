//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::{Duration, Instant};

use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::TestRunner;

use delegation_core::closed_form::{
    delta, k_threshold_change, k_threshold_no_compromise, k_threshold_pooling, omega_sample,
    optimal_delegation, value_change, value_full_menu, value_no_compromise, DelegationStrategy,
    Optimal,
};
use delegation_core::oracle::{describe, find_equilibria, structural_violations, GridSpec, ProfileClass};
use delegation_core::strategy::{action_frequency, mimic_uninformed, posterior, ActionDist, Posterior};
use delegation_core::sweep::{cmd_sweep, SweepConfig};
use delegation_core::{Action, DelegationSet, ExpertType, ModelParams, StrategyProfile};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Validated (p, r, pi) grid with R = 1, 20 values per axis.
fn grid_axes() -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let s2 = std::f64::consts::SQRT_2;
    let p = (1..=20).map(|i| 0.5 * f64::from(i) / 20.0).collect();
    let r = (1..=20).map(|j| s2 + (2.0 - s2) * f64::from(j) / 20.0).collect();
    let pi = (1..=20).map(|l| f64::from(l) / 21.0).collect();
    (p, r, pi)
}

fn thresholds() -> Outcome {
    let prm = ModelParams::new(0.25, 2.0, 1.0, 0.5, 0.5);
    let start = Instant::now();
    let got = [k_threshold_pooling(&prm), k_threshold_no_compromise(&prm), k_threshold_change(&prm)];
    let elapsed = start.elapsed();
    let want = [0.25, 0.75, 0.5];
    let err = got.iter().zip(want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
    outcome(
        err <= 1e-12 && elapsed < Duration::from_millis(1),
        format!("thresholds {got:?}, max error {err:e}, {elapsed:?}"),
    )
}

fn value_identity() -> Outcome {
    let (ps, rs, pis) = grid_axes();
    let mut worst = 0.0f64;
    let mut dominance_failures = 0;
    let mut points = 0;
    for &p in &ps {
        for &r in &rs {
            for &pi in &pis {
                let base = ModelParams::new(p, r, 1.0, 0.01, pi);
                if !base.validate().is_ok() {
                    continue;
                }
                points += 1;
                let identity = value_change(&base) - value_no_compromise(&base);
                worst = worst.max((delta(p, r, pi) - identity).abs());
                if value_change(&base) < value_full_menu(&base) {
                    dominance_failures += 1;
                }
                for k in [0.01, 0.3, 5.0] {
                    let rec = optimal_delegation(&base.with_k(k));
                    if rec.v_change < rec.v_full {
                        dominance_failures += 1;
                    }
                }
            }
        }
    }
    outcome(
        points == 8000 && worst < 1e-9 && dominance_failures == 0,
        format!("{points} points, max identity error {worst:e}, {dominance_failures} dominance failures"),
    )
}

fn monotonicity() -> Outcome {
    let start = Instant::now();
    let (ps, rs, pis) = grid_axes();
    let d = |i: usize, j: usize, l: usize| delta(ps[i], rs[j], pis[l]);
    let n = 20;
    let mut violations = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let here = d(i, j, l);
                if i + 1 < n && d(i + 1, j, l) > here {
                    violations.push(format!("p at ({i},{j},{l})"));
                }
                if j + 1 < n && d(i, j + 1, l) < here {
                    violations.push(format!("r at ({i},{j},{l})"));
                }
                if l + 1 < n && d(i, j, l + 1) > here {
                    violations.push(format!("pi at ({i},{j},{l})"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        violations.is_empty() && elapsed < Duration::from_secs(1),
        format!("{} violations {:?}, {elapsed:?}", violations.len(), violations.iter().take(3).collect::<Vec<_>>()),
    )
}

fn omega_nonempty() -> Outcome {
    let mut failures = Vec::new();
    for i in 1..=9 {
        let p = 0.05 * f64::from(i);
        match omega_sample(p, 0.5, 1e-3) {
            Ok(s) => {
                let th = s.thresholds;
                let k = s.params.k;
                if !(k > th.pooling && k <= th.no_compromise && k <= th.change
                    && th.pooling < th.no_compromise.min(th.change))
                {
                    failures.push(format!("p={p}: ordering"));
                }
            }
            Err(e) => failures.push(format!("p={p}: {e}")),
        }
    }
    outcome(failures.is_empty(), if failures.is_empty() { "9/9 points".to_string() } else { failures.join("; ") })
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let grid = GridSpec::pure();
    let mut missing = Vec::new();
    let mut informative_full = Vec::new();
    let mut structural = Vec::new();
    let mut found_instead = None;
    for i in 0..10 {
        let p = 0.04 + 0.045 * f64::from(i);
        let prm = match omega_sample(p, 0.5, 1e-3) {
            Ok(s) => s.params,
            Err(e) => {
                missing.push(format!("p={p}: no region point ({e})"));
                continue;
            }
        };
        for s in DelegationStrategy::ALL {
            let f = match find_equilibria(&prm, s.delegation(), &grid) {
                Ok(f) => f,
                Err(e) => {
                    missing.push(format!("p={p:.3} {s}: {e}"));
                    continue;
                }
            };
            let feasible = f.predicted.as_ref().is_some_and(|o| o.is_feasible());
            if feasible && !f.predicted_found {
                missing.push(format!("p={p:.3} {s}"));
                if found_instead.is_none() {
                    found_instead = f
                        .informative()
                        .next()
                        .map(|a| format!("{s} at p={p:.3}: {}", describe(&a.profile, &prm)));
                }
            }
            if s == DelegationStrategy::FullMenu
                && prm.k > k_threshold_pooling(&prm)
                && f.profiles_found.iter().any(|a| a.class == ProfileClass::Informative)
            {
                informative_full.push(format!("p={p:.3}"));
            }
            for acc in &f.profiles_found {
                for v in structural_violations(&acc.profile, &prm) {
                    structural.push(format!("p={p:.3} {s} #{}: {v}", acc.index));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = missing.is_empty() && informative_full.is_empty() && structural.is_empty()
        && elapsed < Duration::from_secs(120);
    outcome(
        pass,
        format!(
            "(a) predicted profile missing at {} runs [{}]; (b) informative full-menu equilibria at {} points; (c) {} structural violations; {elapsed:?}{}",
            missing.len(),
            missing.join(", "),
            informative_full.len(),
            structural.len(),
            found_instead.map_or(String::new(), |d| format!("; accepted informative profile instead, {d}"))
        ),
    )
}

fn random_dist(runner: &mut TestRunner, d: DelegationSet) -> ActionDist {
    let w = proptest::array::uniform3(0.0f64..1.0).new_tree(runner).unwrap().current();
    let members: Vec<Action> = d.actions().collect();
    let total: f64 = members.iter().map(|a| w[a.index()]).sum::<f64>() + 1e-12;
    let mut out = ActionDist::default();
    for a in &members {
        out.set(*a, w[a.index()] / total);
    }
    // put the rounding residue on the first member so the mass is exactly one
    let rest: f64 = members[1..].iter().map(|a| out.prob(*a)).sum();
    out.set(members[0], 1.0 - rest);
    out
}

fn mimicry() -> Outcome {
    let mut runner = TestRunner::deterministic();
    let sets = [DelegationSet::FULL_MENU, DelegationSet::NO_COMPROMISE, DelegationSet::CHANGE];
    let n = ExpertType::Noncongruent;
    let mut worst = 0.0f64;
    for trial in 0..1000 {
        let u = proptest::array::uniform4(0.0f64..1.0).new_tree(&mut runner).unwrap().current();
        let p = 0.01 + 0.49 * u[0];
        let r = std::f64::consts::SQRT_2 + 1e-3 + (2.0 - std::f64::consts::SQRT_2 - 1e-3) * u[1];
        let rent = 1.0 + (r * r - 2.0) * u[2] * 0.999;
        let prm = ModelParams::new(p, r, rent, 0.1, 0.02 + 0.96 * u[3]);
        let d = sets[trial % 3];
        let mut prof = StrategyProfile::new(d);
        prof.info.tau = [trial % 2 == 0, true];
        prof.uninformed.q[0] = random_dist(&mut runner, d);
        for w in Action::ALL {
            prof.informed.p[0][w.index()] = random_dist(&mut runner, d);
            prof.informed.p[1][w.index()] = random_dist(&mut runner, d);
        }
        let mimic = mimic_uninformed(&prof, n, &prm);
        for a in d.actions() {
            let fa = action_frequency(&prof, n, a, &prm).unwrap();
            let fb = action_frequency(&mimic, n, a, &prm).unwrap();
            worst = worst.max((fa - fb).abs());
            match (posterior(&prof, a, &prm).unwrap(), posterior(&mimic, a, &prm).unwrap()) {
                (Posterior::OnPath(x), Posterior::OnPath(y)) => worst = worst.max((x - y).abs()),
                (Posterior::OffPath, Posterior::OffPath) => {}
                _ => worst = f64::INFINITY,
            }
        }
    }
    outcome(worst < 1e-12, format!("1000 policies, max deviation {worst:e}"))
}

fn flip_config(workers: Option<usize>) -> SweepConfig {
    let mut cfg = SweepConfig::default();
    for s in ["p=0.45", "r=1.6", "R=1", "k=0.163", "pi=0:1:0.05", "strict=0"] {
        cfg.set(s).expect("override");
    }
    cfg.workers = workers;
    cfg
}

fn region_flip() -> Outcome {
    let rows = match cmd_sweep(&flip_config(None)) {
        Ok(o) => o.records,
        Err(e) => return outcome(false, e.to_string()),
    };
    let at = |pi: f64| rows.iter().find(|r| (r.params.pi - pi).abs() < 1e-12).map(|r| r.optimal.clone());
    let flips = rows.windows(2).filter(|w| w[0].optimal != w[1].optimal).count();
    let decreasing = rows.windows(2).all(|w| w[1].delta < w[0].delta);
    let start = at(0.0);
    let end = at(0.9);
    let pass = start == Some(Optimal::Unique(DelegationStrategy::Change))
        && end == Some(Optimal::Unique(DelegationStrategy::NoCompromise))
        && flips == 1
        && decreasing;
    let mut detail = format!(
        "{} rows, pi=0 -> {start:?}, pi=0.9 -> {end:?}, {flips} flip(s), delta strictly decreasing: {decreasing}",
        rows.len()
    );
    if !pass {
        let sequence: Vec<String> = rows.iter().map(|r| r.optimal.to_string()).collect();
        detail.push_str(&format!("; sequence {}", sequence.join(" ")));
    }
    outcome(pass, detail)
}

fn determinism() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return outcome(false, e.to_string()),
    };
    let mut files = Vec::new();
    for workers in [1, 8, 1] {
        let mut cfg = SweepConfig::default();
        for s in ["p=0.05:0.5:0.05", "r=1.45:2:0.05", "R=1", "k=0.17", "pi=0.1:0.9:0.1"] {
            cfg.set(s).expect("override");
        }
        cfg.workers = Some(workers);
        cfg.boundary_scan = true;
        let path = dir.path().join(format!("run{}.csv", files.len()));
        cfg.out = Some(path.clone());
        if let Err(e) = cmd_sweep(&cfg) {
            return outcome(false, e.to_string());
        }
        files.push(std::fs::read(&path).unwrap_or_default());
    }
    let same = files.windows(2).all(|w| w[0] == w[1]) && !files[0].is_empty();
    outcome(same, format!("3 runs (workers 1, 8, 1), {} bytes each, identical: {same}", files[0].len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("threshold reproduction", thresholds),
        ("value/delta identity and change dominance", value_identity),
        ("delta monotonicity", monotonicity),
        ("region sampler nonempty", omega_nonempty),
        ("oracle equivalence", oracle_equivalence),
        ("mimicry", mimicry),
        ("region flip in pi", region_flip),
        ("sweep determinism across workers", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let res = run();
        if !res.pass {
            failed += 1;
        }
        println!(
            "criterion {} {:<42} {}  {}",
            i + 1,
            name,
            if res.pass { "PASS" } else { "FAIL" },
            res.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
