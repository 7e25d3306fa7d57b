use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One (cell, model) observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionRecord {
    pub language_tag: String,
    pub cell_id: String,
    pub model_arch: String,
    pub f1: f64,
    /// 1 when the residual data was split randomly.
    pub strategy: u8,
    /// 1 when the new test sample was carved randomly.
    pub new_test_gen: u8,
    pub morpheme_overlap: f64,
    pub word_count_ratio: f64,
    pub morph_per_word_ratio: f64,
    pub morph_type_per_word_ratio: f64,
}

const CONTROLS: [&str; 5] = [
    "new_test_gen",
    "morpheme_overlap",
    "word_count_ratio",
    "morph_per_word_ratio",
    "morph_type_per_word_ratio",
];

impl RegressionRecord {
    fn controls(&self) -> [f64; 5] {
        [
            self.new_test_gen as f64,
            self.morpheme_overlap,
            self.word_count_ratio,
            self.morph_per_word_ratio,
            self.morph_type_per_word_ratio,
        ]
    }
}

/// Regressors, response and column names.
///
/// Columns: `intercept`, `strategy`, `new_test_gen`, `morpheme_overlap`,
/// `word_count_ratio`, `morph_per_word_ratio`, `morph_type_per_word_ratio`,
/// one `arch[<name>]` dummy per non-reference architecture (the first in
/// sorted order is the reference), then `strategy:<control>` for each of the
/// five controls in the order above.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub terms: Vec<String>,
    /// Non-intercept columns that are constant.
    pub warnings: Vec<String>,
}

pub fn build_design_matrix(records: &[RegressionRecord]) -> Result<DesignMatrix> {
    if records.len() < 2 {
        return Err(Error::Contract(format!(
            "regression needs at least 2 records, got {}",
            records.len()
        )));
    }
    for r in records {
        if r.strategy > 1 || r.new_test_gen > 1 {
            return Err(Error::Contract(format!(
                "record {} has a non-binary indicator",
                r.cell_id
            )));
        }
        let ratios = [r.word_count_ratio, r.morph_per_word_ratio, r.morph_type_per_word_ratio];
        if !r.f1.is_finite() || !r.morpheme_overlap.is_finite() || ratios.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Contract(format!("record {} has an invalid value", r.cell_id)));
        }
    }
    if records.iter().all(|r| r.strategy == records[0].strategy) {
        return Err(Error::Contract("strategy takes a single value".into()));
    }

    let archs: BTreeSet<&str> = records.iter().map(|r| r.model_arch.as_str()).collect();
    let dummies: Vec<&str> = archs.into_iter().skip(1).collect();

    let mut terms: Vec<String> = vec!["intercept".into(), "strategy".into()];
    terms.extend(CONTROLS.iter().map(|c| c.to_string()));
    terms.extend(dummies.iter().map(|a| format!("arch[{a}]")));
    terms.extend(CONTROLS.iter().map(|c| format!("strategy:{c}")));

    let mut x = DMatrix::zeros(records.len(), terms.len());
    for (i, r) in records.iter().enumerate() {
        let s = r.strategy as f64;
        let controls = r.controls();
        let mut row = vec![1.0, s];
        row.extend(controls);
        row.extend(dummies.iter().map(|a| if r.model_arch == *a { 1.0 } else { 0.0 }));
        row.extend(controls.iter().map(|c| s * c));
        for (j, v) in row.into_iter().enumerate() {
            x[(i, j)] = v;
        }
    }
    let y = DVector::from_iterator(records.len(), records.iter().map(|r| r.f1));
    let warnings = (1..terms.len())
        .filter(|&j| is_constant(&x, j))
        .map(|j| format!("column `{}` is constant", terms[j]))
        .collect();
    Ok(DesignMatrix { x, y, terms, warnings })
}

fn is_constant(x: &DMatrix<f64>, j: usize) -> bool {
    let col = x.column(j);
    col.iter().all(|v| *v == col[0])
}

impl DesignMatrix {
    /// Drops constant main-effect columns along with their strategy
    /// interactions, which would otherwise duplicate the intercept or the
    /// strategy column.
    pub fn without_constant_columns(&self) -> DesignMatrix {
        let constant: Vec<String> = (1..self.terms.len())
            .filter(|&j| !self.terms[j].starts_with("strategy:") && is_constant(&self.x, j))
            .map(|j| self.terms[j].clone())
            .collect();
        let mut d = self.without_terms(&constant);
        d.warnings = constant
            .iter()
            .map(|t| format!("dropped constant column `{t}`"))
            .collect();
        d
    }

    /// Drops the named columns and, for main effects, their strategy
    /// interactions.
    pub fn without_terms(&self, terms: &[String]) -> DesignMatrix {
        let gone = |t: &str| {
            let main = t.strip_prefix("strategy:").unwrap_or(t);
            terms.iter().any(|d| d == t || d == main)
        };
        let keep: Vec<usize> = (0..self.terms.len()).filter(|&j| !gone(&self.terms[j])).collect();
        DesignMatrix {
            x: self.x.select_columns(&keep),
            y: self.y.clone(),
            terms: keep.iter().map(|&j| self.terms[j].clone()).collect(),
            warnings: self.warnings.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(arch: &str, strategy: u8, f1: f64) -> RegressionRecord {
        RegressionRecord {
            language_tag: "x".into(),
            cell_id: "c".into(),
            model_arch: arch.into(),
            f1,
            strategy,
            new_test_gen: 1,
            morpheme_overlap: 0.5 + f1 / 10.0,
            word_count_ratio: 9.0,
            morph_per_word_ratio: 1.0 + f1,
            morph_type_per_word_ratio: 1.1,
        }
    }

    #[test]
    fn one_record_rejected() {
        assert!(matches!(
            build_design_matrix(&[rec("a", 1, 0.5)]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn single_strategy_rejected() {
        assert!(build_design_matrix(&[rec("a", 1, 0.5), rec("a", 1, 0.6)]).is_err());
    }

    #[test]
    fn four_models_three_dummies() {
        let records: Vec<_> = ["d", "c", "b", "a"]
            .iter()
            .enumerate()
            .map(|(i, m)| rec(m, (i % 2) as u8, 0.1 * i as f64))
            .collect();
        let d = build_design_matrix(&records).unwrap();
        let dummies: Vec<_> = d.terms.iter().filter(|t| t.starts_with("arch[")).collect();
        assert_eq!(dummies, ["arch[b]", "arch[c]", "arch[d]"]);
        assert_eq!(d.x.ncols(), 1 + 1 + 5 + 3 + 5);
        assert!(d.warnings.iter().any(|w| w.contains("`new_test_gen`")));
    }

    #[test]
    fn hand_built_layout() {
        let records = vec![rec("a", 0, 0.2), rec("b", 1, 0.4)];
        let d = build_design_matrix(&records).unwrap();
        let r1 = records[1].clone();
        let expected = [
            1.0,
            1.0,
            1.0,
            r1.morpheme_overlap,
            9.0,
            1.4,
            1.1,
            1.0,
            1.0,
            r1.morpheme_overlap,
            9.0,
            1.4,
            1.1,
        ];
        assert_eq!(d.x.row(1).iter().copied().collect::<Vec<_>>(), expected);
        assert_eq!(d.x[(0, 1)], 0.0);
        assert_eq!(d.x[(0, 7)], 0.0);
        assert_eq!(d.x.row(0).iter().skip(8).copied().collect::<Vec<_>>(), [0.0; 5]);
        assert_eq!(d.y.as_slice(), &[0.2, 0.4]);
    }

    #[test]
    fn dropping_constants_removes_interactions() {
        let records = vec![rec("a", 0, 0.2), rec("b", 1, 0.4), rec("a", 1, 0.3)];
        let d = build_design_matrix(&records).unwrap().without_constant_columns();
        for gone in ["new_test_gen", "word_count_ratio", "morph_type_per_word_ratio"] {
            assert!(!d.terms.iter().any(|t| t == gone || *t == format!("strategy:{gone}")));
        }
        assert!(d.terms.contains(&"strategy:morph_per_word_ratio".to_string()));
        assert_eq!(d.x.ncols(), d.terms.len());
    }

    #[test]
    fn dropping_an_interaction_keeps_the_main_effect() {
        let records = vec![rec("a", 0, 0.2), rec("b", 1, 0.4), rec("a", 1, 0.3)];
        let full = build_design_matrix(&records).unwrap();
        let d = full.without_terms(&["strategy:morpheme_overlap".to_string()]);
        assert!(d.terms.contains(&"morpheme_overlap".to_string()));
        assert_eq!(d.terms.len(), full.terms.len() - 1);
    }
}
