use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scores closer than this are treated as tied.
pub const DEFAULT_COLLAPSE_EPSILON: f64 = 0.02;

/// Models from best to worst, grouped into ties. Names inside a group are
/// sorted, so two rankings are equal iff their group sequences are equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRanking {
    pub groups: Vec<Vec<String>>,
    pub collapse_epsilon: f64,
}

impl ModelRanking {
    pub fn same_order(&self, other: &ModelRanking) -> bool {
        self.groups == other.groups
    }

    pub fn models(&self) -> impl Iterator<Item = &str> {
        self.groups.iter().flatten().map(String::as_str)
    }
}

impl fmt::Display for ModelRanking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .groups
            .iter()
            .map(|g| {
                if g.len() == 1 {
                    g[0].clone()
                } else {
                    format!("{{{}}}", g.join(", "))
                }
            })
            .collect();
        f.write_str(&parts.join(" > "))
    }
}

/// Orders models by descending score (ties by name) and merges neighbours
/// whose scores differ by less than `collapse_epsilon`. Merging chains: a
/// group extends while each next score is within epsilon of the previous one.
pub fn rank_models(scores: &BTreeMap<String, f64>, collapse_epsilon: f64) -> Result<ModelRanking> {
    if scores.len() < 2 {
        return Err(Error::Contract("ranking needs at least two models".into()));
    }
    if scores.values().any(|s| !s.is_finite()) {
        return Err(Error::Domain("non-finite model score".into()));
    }
    let mut ordered: Vec<(&String, f64)> = scores.iter().map(|(m, &s)| (m, s)).collect();
    ordered.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut groups: Vec<Vec<String>> = Vec::new();
    let mut prev: Option<f64> = None;
    for (model, score) in ordered {
        match prev {
            Some(p) if p - score < collapse_epsilon => groups.last_mut().unwrap().push(model.clone()),
            _ => groups.push(vec![model.clone()]),
        }
        prev = Some(score);
    }
    for g in &mut groups {
        g.sort();
    }
    Ok(ModelRanking {
        groups,
        collapse_epsilon,
    })
}
