use std::collections::{BTreeMap, BTreeSet};

use super::scoredb::ScoreHandle;
use super::value::{Num, Value};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Score {
    /// Ranks below every recorded score.
    Unscored,
    Resolved(Num),
    Pending(ScoreHandle),
}

/// Per-branch search metadata. Copied by value on every step.
#[derive(Debug, Clone)]
pub struct Info {
    pub score: Score,
    pub nocopy: BTreeSet<String>,
    /// Set by `optional_return` since the last branchpoint.
    pub optional_rv: Option<Value>,
    /// Costs recorded during the current transition only.
    pub costs: BTreeMap<String, Num>,
    pub done_stepping: bool,
    pub killed: bool,
}

impl Default for Info {
    fn default() -> Self {
        Info {
            score: Score::Unscored,
            nocopy: BTreeSet::new(),
            optional_rv: None,
            costs: BTreeMap::new(),
            done_stepping: false,
            killed: false,
        }
    }
}

pub fn add_costs(into: &mut BTreeMap<String, Num>, from: &BTreeMap<String, Num>) {
    for (k, v) in from {
        let slot = into.entry(k.clone()).or_insert(Num::Int(0));
        *slot = *slot + *v;
    }
}
