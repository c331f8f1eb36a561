use std::collections::BTreeMap;
use std::fmt::Write;

use serde_json::json;

use crate::checkpoint::Checkpoint;
use crate::runtime::{Num, Score, ScoreDb};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub site: String,
    pub status: String,
    pub score: Option<Num>,
    pub costs: BTreeMap<String, Num>,
    /// Step id from the session clock; the root has 0.
    pub order: u64,
    score_state: Score,
}

/// One node per step call plus the root.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub nodes: Vec<TraceNode>,
}

impl Trace {
    pub(super) fn push_checkpoint(&mut self, parent: Option<usize>, cp: &Checkpoint) -> usize {
        self.push(TraceNode {
            id: 0,
            parent,
            site: cp.site_name(),
            status: cp.status().as_str().to_string(),
            score: cp.score(),
            costs: cp.costs().clone(),
            order: cp.step_id(),
            score_state: cp.score_state(),
        })
    }

    pub(super) fn push_exhausted(&mut self, parent: Option<usize>, cp: &Checkpoint) -> usize {
        self.push(TraceNode {
            id: 0,
            parent,
            site: cp.site_name(),
            status: "DONE_STEPPING".into(),
            score: None,
            costs: BTreeMap::new(),
            order: cp.step_id(),
            score_state: Score::Unscored,
        })
    }

    pub(super) fn push_failed(
        &mut self,
        parent: Option<usize>,
        site: String,
        costs: BTreeMap<String, Num>,
        order: u64,
    ) {
        self.push(TraceNode {
            id: 0,
            parent,
            site,
            status: "PROTECT_EXHAUSTED".into(),
            score: None,
            costs,
            order,
            score_state: Score::Unscored,
        });
    }

    fn push(&mut self, mut node: TraceNode) -> usize {
        node.id = self.nodes.len();
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    /// Reads final values of group scores.
    pub(super) fn resolve(&mut self, db: &ScoreDb) {
        for n in &mut self.nodes {
            if let Score::Pending(h) = n.score_state {
                n.score = db.get(h);
            }
        }
    }

    pub fn total_costs(&self) -> BTreeMap<String, Num> {
        let mut out = BTreeMap::new();
        for n in &self.nodes {
            crate::runtime::info::add_costs(&mut out, &n.costs);
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.nodes
                .iter()
                .map(|n| {
                    json!({
                        "id": n.id,
                        "parent": n.parent,
                        "site": n.site,
                        "status": n.status,
                        "score": n.score.map(Num::to_json),
                        "costs": n.costs.iter().map(|(k, v)| (k.clone(), v.to_json())).collect::<serde_json::Map<_, _>>(),
                        "order": n.order,
                    })
                })
                .collect(),
        )
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph search {\n    node [shape=box, fontname=monospace];\n");
        for n in &self.nodes {
            let score = n.score.map_or("-".to_string(), |s| s.to_string());
            let label = format!("#{} {}\\n{} score={}", n.id, n.site, n.status, score).replace('"', "\\\"");
            let _ = writeln!(out, "    n{} [label=\"{label}\"];", n.id);
        }
        for n in &self.nodes {
            if let Some(p) = n.parent {
                let _ = writeln!(out, "    n{p} -> n{};", n.id);
            }
        }
        out.push_str("}\n");
        out
    }
}
