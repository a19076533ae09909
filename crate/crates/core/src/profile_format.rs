//! Flat `key = value` text format for strategy profiles.
//!
//! ```text
//! # no-compromise informative profile
//! tau.c = 1
//! tau.n = 0
//! q.n.0 = 1
//! p.c.0.0 = 1
//! p.c.1.r = 1
//! p.c.r.r = 1
//! retain.0 = 0
//! retain.r = 1
//! ```
//!
//! The delegation set is the set of actions that carry a `retain.<action>`
//! key. A policy with no keys at all defaults to a point mass on the lowest
//! permitted action; a policy with some keys must sum to one.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{Action, DelegationSet, ExpertType};
use crate::strategy::{ActionDist, StrategyError, StrategyProfile};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileParseError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: key `{key}`: {reason}")]
    BadKey { line: usize, key: String, reason: String },
    #[error("line {line}: key `{key}`: cannot parse value `{value}`")]
    BadValue { line: usize, key: String, value: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("no `retain.<action>` keys: the delegation set is undefined")]
    NoDelegation,
    #[error("key `{key}`: action {action} is not in the delegation set {delegation}")]
    OutsideDelegation { key: String, action: Action, delegation: DelegationSet },
    #[error(transparent)]
    Invalid(#[from] StrategyError),
}

#[derive(Clone, Copy)]
enum Key {
    Tau(ExpertType),
    Q(ExpertType, Action),
    P(ExpertType, Action, Action),
    Retain(Action),
}

fn parse_key(key: &str) -> Result<Key, String> {
    let parts: Vec<&str> = key.split('.').collect();
    let ty = |s: &str| s.parse::<ExpertType>();
    let act = |s: &str| s.parse::<Action>();
    match parts.as_slice() {
        ["tau", t] => Ok(Key::Tau(ty(t)?)),
        ["q", t, a] => Ok(Key::Q(ty(t)?, act(a)?)),
        ["p", t, w, a] => Ok(Key::P(ty(t)?, act(w)?, act(a)?)),
        ["retain", a] => Ok(Key::Retain(act(a)?)),
        _ => Err("unknown key".to_string()),
    }
}

fn parse_flag(v: &str) -> Option<bool> {
    match v {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    }
}

pub fn parse_profile(text: &str) -> Result<StrategyProfile, ProfileParseError> {
    let mut entries: Vec<(usize, String, Key, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content
            .split_once('=')
            .ok_or_else(|| ProfileParseError::Syntax { line, text: content.to_string() })?;
        let (k, v) = (k.trim(), v.trim());
        let key = parse_key(k)
            .map_err(|reason| ProfileParseError::BadKey { line, key: k.to_string(), reason })?;
        if entries.iter().any(|(_, name, _, _)| name == k) {
            return Err(ProfileParseError::Duplicate { line, key: k.to_string() });
        }
        entries.push((line, k.to_string(), key, v.to_string()));
    }

    let members: Vec<Action> = entries
        .iter()
        .filter_map(|(_, _, key, _)| match key {
            Key::Retain(a) => Some(*a),
            _ => None,
        })
        .collect();
    let delegation = DelegationSet::new(&members).ok_or(ProfileParseError::NoDelegation)?;
    let mut profile = StrategyProfile::new(delegation);
    // Policies mentioned in the file start from zero instead of the default point mass.
    let mut touched_q = [false; 2];
    let mut touched_p = [[false; 3]; 2];

    for (line, name, key, value) in &entries {
        let bad_value = || ProfileParseError::BadValue {
            line: *line,
            key: name.clone(),
            value: value.clone(),
        };
        let outside = |a: Action| ProfileParseError::OutsideDelegation {
            key: name.clone(),
            action: a,
            delegation,
        };
        match *key {
            Key::Tau(t) => {
                profile.info.tau[t.index()] = parse_flag(value).ok_or_else(bad_value)?;
            }
            Key::Retain(a) => {
                profile.retention.set(a, parse_flag(value).ok_or_else(bad_value)?);
            }
            Key::Q(t, a) => {
                let v: f64 = value.parse().map_err(|_| bad_value())?;
                if !delegation.contains(a) {
                    return Err(outside(a));
                }
                if !touched_q[t.index()] {
                    touched_q[t.index()] = true;
                    profile.uninformed.q[t.index()] = ActionDist::default();
                }
                profile.uninformed.q[t.index()].set(a, v);
            }
            Key::P(t, w, a) => {
                let v: f64 = value.parse().map_err(|_| bad_value())?;
                if !delegation.contains(a) {
                    return Err(outside(a));
                }
                if !touched_p[t.index()][w.index()] {
                    touched_p[t.index()][w.index()] = true;
                    profile.informed.p[t.index()][w.index()] = ActionDist::default();
                }
                profile.informed.p[t.index()][w.index()].set(a, v);
            }
        }
    }
    profile.validate()?;
    Ok(profile)
}

/// Writes every key of the profile. Parsing the output yields the same
/// profile.
pub fn write_profile(profile: &StrategyProfile) -> String {
    let mut out = String::new();
    let d = profile.delegation;
    for t in ExpertType::ALL {
        let _ = writeln!(out, "tau.{t} = {}", u8::from(profile.info.acquires(t)));
    }
    for t in ExpertType::ALL {
        for a in d.actions() {
            let _ = writeln!(out, "q.{t}.{a} = {}", profile.uninformed.of(t).prob(a));
        }
    }
    for t in ExpertType::ALL {
        for w in Action::ALL {
            for a in d.actions() {
                let _ = writeln!(out, "p.{t}.{w}.{a} = {}", profile.informed.of(t, w).prob(a));
            }
        }
    }
    for a in d.actions() {
        let _ = writeln!(out, "retain.{a} = {}", u8::from(profile.retention.retains(a)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ExpertType::{Congruent as C, Noncongruent as N};

    const NC_FILE: &str = "\
# informative no-compromise profile
tau.c = 1
tau.n = 0
q.n.0 = 1
p.c.0.0 = 1
p.c.1.r = 1
p.c.r.r = 1
retain.0 = 0
retain.r = 1
";

    #[test]
    fn parses_sparse_file() {
        let prof = parse_profile(NC_FILE).unwrap();
        let expected = StrategyProfile::new(DelegationSet::NO_COMPROMISE)
            .uninformed_at(N, Action::StatusQuo)
            .informed_as(C, [Action::StatusQuo, Action::Radical, Action::Radical])
            .retaining(&[Action::Radical]);
        assert_eq!(prof, expected);
    }

    #[test]
    fn round_trip() {
        let prof = parse_profile(NC_FILE).unwrap();
        assert_eq!(parse_profile(&write_profile(&prof)).unwrap(), prof);
    }

    #[test]
    fn errors_name_the_key() {
        let err = parse_profile("tau.x = 1\nretain.0 = 1\n").unwrap_err();
        assert!(err.to_string().contains("`tau.x`"), "{err}");
        let err = parse_profile("q.c.0 = half\nretain.0 = 1\n").unwrap_err();
        assert!(err.to_string().contains("`q.c.0`"), "{err}");
        let err = parse_profile("q.c.1 = 1\nretain.0 = 1\nretain.r = 1\n").unwrap_err();
        assert!(matches!(err, ProfileParseError::OutsideDelegation { action: Action::Moderate, .. }));
        let err = parse_profile("tau.c = 1\ntau.c = 0\nretain.0 = 1\n").unwrap_err();
        assert!(matches!(err, ProfileParseError::Duplicate { line: 2, .. }));
        assert_eq!(parse_profile("tau.c = 1\n").unwrap_err(), ProfileParseError::NoDelegation);
        let err = parse_profile("retain.0 = 1\nretain.1 = 1\nq.c.0 = 0.5\n").unwrap_err();
        assert!(matches!(err, ProfileParseError::Invalid(StrategyError::NotADistribution { .. })));
        assert!(matches!(parse_profile("garbage\n"), Err(ProfileParseError::Syntax { line: 1, .. })));
    }
}
