//! Score database: plain scores resolve on submission, group scores are
//! deferred until a flush re-evaluates every dirty label over all of its
//! targets.

use std::collections::BTreeMap;

use super::value::{Num, Value};
use crate::error::RuntimeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScoreHandle(pub usize);

#[derive(Debug, Default)]
struct Group {
    evaluator: String,
    members: Vec<(ScoreHandle, Value)>,
    dirty: bool,
}

/// Work for one evaluator call, detached from the database so the evaluator
/// can run without holding its lock.
#[derive(Debug)]
pub struct PendingGroup {
    pub evaluator: String,
    pub handles: Vec<ScoreHandle>,
    pub targets: Vec<Value>,
}

#[derive(Debug, Default)]
pub struct ScoreDb {
    values: Vec<Option<Num>>,
    /// Keyed by (evaluator, label as JSON).
    groups: BTreeMap<(String, String), Group>,
}

impl ScoreDb {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn submit(&mut self, score: Num) -> ScoreHandle {
        self.values.push(Some(score));
        ScoreHandle(self.values.len() - 1)
    }

    pub fn submit_group(&mut self, evaluator: &str, target: Value, label: &Value) -> ScoreHandle {
        self.values.push(None);
        let h = ScoreHandle(self.values.len() - 1);
        let g = self.groups.entry((evaluator.to_string(), label.to_json().to_string())).or_default();
        g.evaluator = evaluator.to_string();
        g.members.push((h, target));
        g.dirty = true;
        h
    }

    /// Withdraws group submissions made by a discarded attempt.
    pub fn retract(&mut self, handles: &[ScoreHandle]) {
        if handles.is_empty() {
            return;
        }
        for g in self.groups.values_mut() {
            let before = g.members.len();
            g.members.retain(|(h, _)| !handles.contains(h));
            g.dirty |= g.members.len() != before;
        }
    }

    pub fn get(&self, h: ScoreHandle) -> Option<Num> {
        self.values.get(h.0).copied().flatten()
    }

    pub fn has_pending(&self) -> bool {
        self.groups.values().any(|g| g.dirty)
    }

    pub fn take_dirty(&mut self) -> Vec<PendingGroup> {
        self.groups
            .values_mut()
            .filter_map(|g| std::mem::take(&mut g.dirty).then_some(&*g))
            .map(|g| PendingGroup {
                evaluator: g.evaluator.clone(),
                handles: g.members.iter().map(|(h, _)| *h).collect(),
                targets: g.members.iter().map(|(_, t)| t.clone()).collect(),
            })
            .collect()
    }

    /// Stores an evaluator's output positionally; returns the number of
    /// handles written.
    pub fn apply(&mut self, group: &PendingGroup, result: &Value) -> Result<usize, RuntimeError> {
        let scores = match result {
            Value::List(l) => l.read().clone(),
            other => {
                return Err(RuntimeError::type_error(format!(
                    "group evaluator `{}` returned {}, expected a list",
                    group.evaluator,
                    other.type_name()
                )))
            }
        };
        if scores.len() != group.handles.len() {
            return Err(RuntimeError::type_error(format!(
                "group evaluator `{}` returned {} scores for {} targets",
                group.evaluator,
                scores.len(),
                group.handles.len()
            )));
        }
        for (h, s) in group.handles.iter().zip(&scores) {
            let n = s.as_num().ok_or_else(|| {
                RuntimeError::type_error(format!("group evaluator `{}` returned a non-numeric score", group.evaluator))
            })?;
            self.values[h.0] = Some(n);
        }
        Ok(scores.len())
    }

    /// Re-evaluates every dirty label. Evaluator failures are re-tagged
    /// `GroupEvalError`.
    pub fn flush(
        &mut self,
        mut eval: impl FnMut(&str, Value) -> Result<Value, RuntimeError>,
    ) -> Result<usize, RuntimeError> {
        let mut n = 0;
        for g in self.take_dirty() {
            let out = eval(&g.evaluator, Value::list(g.targets.clone())).map_err(group_eval_error)?;
            n += self.apply(&g, &out)?;
        }
        Ok(n)
    }
}

pub fn group_eval_error(e: RuntimeError) -> RuntimeError {
    if e.tag == "GroupEvalError" {
        e
    } else {
        RuntimeError::new("GroupEvalError", format!("{}: {}", e.tag, e.message))
    }
}
