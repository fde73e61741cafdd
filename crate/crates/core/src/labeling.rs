//! Per-state truth of strategic subformulas, filled innermost first.

use std::collections::HashMap;

use thiserror::Error;

use crate::cgm::{Cgm, StateId};
use crate::formula::StateFormula;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LabelError {
    #[error("no label for `{formula}` at state `{state}`")]
    Missing { formula: String, state: String },
    #[error("proposition `{0}` is not declared by the model")]
    UnknownProposition(String),
}

#[derive(Debug, Clone, Default)]
pub struct Labeling {
    table: HashMap<StateFormula, Vec<bool>>,
}

impl Labeling {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, formula: StateFormula, values: Vec<bool>) {
        self.table.insert(formula, values);
    }

    pub fn get(&self, formula: &StateFormula) -> Option<&[bool]> {
        self.table.get(formula).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Truth of `s` at `q`: Boolean structure and propositions are evaluated
    /// directly, strategic subformulas are looked up.
    pub fn eval(&self, m: &Cgm, s: &StateFormula, q: StateId) -> Result<bool, LabelError> {
        Ok(match s {
            StateFormula::True => true,
            StateFormula::Prop(p) => m
                .holds(p, q)
                .ok_or_else(|| LabelError::UnknownProposition(p.clone()))?,
            StateFormula::Not(a) => !self.eval(m, a, q)?,
            StateFormula::Or(a, b) => self.eval(m, a, q)? || self.eval(m, b, q)?,
            StateFormula::And(a, b) => self.eval(m, a, q)? && self.eval(m, b, q)?,
            StateFormula::Implies(a, b) => !self.eval(m, a, q)? || self.eval(m, b, q)?,
            StateFormula::Coalition(..) => {
                let row = self.table.get(s).ok_or_else(|| LabelError::Missing {
                    formula: s.to_string(),
                    state: m.state_name(q).to_string(),
                })?;
                row[q.index()]
            }
        })
    }

    pub fn eval_all(&self, m: &Cgm, s: &StateFormula) -> Result<Vec<bool>, LabelError> {
        m.state_ids().map(|q| self.eval(m, s, q)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_formula;

    #[test]
    fn evaluates_through_lookups() {
        let m = Cgm::fixture("m3").unwrap();
        let mut labels = Labeling::new();
        let inner = parse_formula("<<a2>> X p2").unwrap();
        let f = parse_formula("p1 | <<a2>> X p2").unwrap();
        assert!(matches!(
            labels.eval_all(&m, &f),
            Err(LabelError::Missing { .. })
        ));
        labels.insert(inner, vec![false, true, true]);
        assert_eq!(labels.eval_all(&m, &f).unwrap(), vec![true, true, true]);
        let g = parse_formula("p1 -> p9").unwrap();
        assert_eq!(
            labels.eval(&m, &g, StateId(0)),
            Err(LabelError::UnknownProposition("p9".into()))
        );
    }
}
