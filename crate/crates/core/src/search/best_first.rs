use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashMap, HashSet};

use super::{
    param_branching, param_f64, param_opt_usize, param_usize, rank, Branching, Node, Registry, SearchAlgorithm,
    SearchCtx, SearchError, Stepped,
};
use crate::runtime::Value;

struct Entry {
    key: f64,
    seq: Reverse<u64>,
    node: Node,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key).then(self.seq.cmp(&other.seq))
    }
}

/// Closed-set key from a site's `identity` argument.
fn identity(node: &Node) -> Option<String> {
    node.cp.param("identity").map(|v| v.to_json().to_string())
}

fn done(ctx: &SearchCtx, max_results: Option<usize>) -> bool {
    ctx.stopped() || max_results.is_some_and(|m| ctx.num_results() >= m)
}

/// Classic best-first: pops up to `top_k_popped` best nodes, expands each
/// once by its branching factor. Returned nodes count as results when
/// popped, so with an admissible heuristic the first result is optimal.
struct BestFirst {
    top_k: usize,
    default: Branching,
    max_results: Option<usize>,
}

impl SearchAlgorithm for BestFirst {
    fn run(&mut self, root: Node, ctx: &mut SearchCtx) -> Result<(), SearchError> {
        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        let mut closed = HashSet::new();
        heap.push(Entry { key: rank(root.cp.score()), seq: Reverse(seq), node: root });
        while !heap.is_empty() && !done(ctx, self.max_results) {
            let mut popped = Vec::new();
            while popped.len() < self.top_k {
                let Some(Entry { node, .. }) = heap.pop() else { break };
                ctx.collect(&node);
                if done(ctx, self.max_results) {
                    return Ok(());
                }
                if !node.cp.is_running() {
                    continue;
                }
                if let Some(id) = identity(&node) {
                    if !closed.insert(id) {
                        continue;
                    }
                }
                popped.push(node);
            }
            for node in popped {
                if ctx.stopped() {
                    return Ok(());
                }
                let b = ctx.branching(&node, self.default)?;
                let children = ctx.expand(&node, b)?;
                if let Some(first) = children.first() {
                    ctx.flush(first)?;
                }
                for child in children {
                    seq += 1;
                    heap.push(Entry { key: rank(child.cp.score()), seq: Reverse(seq), node: child });
                }
            }
        }
        Ok(())
    }
}

/// A node whose steps exhaust protection this many times in a row leaves
/// the frontier.
const MAX_CONSECUTIVE_FAILURES: usize = 3;

/// Re-expanding best-first, optionally with an exploration bonus
/// `c * sqrt(ln(max(total, 1)) / (1 + expansions(node)))`. Each pop samples one
/// child and puts the parent back with its original position; a node leaves
/// the frontier once its branching budget or its candidates run out.
struct Reexpand {
    c: f64,
    default: Option<usize>,
    max_results: Option<usize>,
}

impl Reexpand {
    fn limit(&self, node: &Node) -> Result<Option<usize>, SearchError> {
        match node.cp.param("branching") {
            Some(Value::Int(n)) if n >= 1 => Ok(Some(n as usize)),
            Some(Value::Null) => Ok(None),
            None => Ok(self.default),
            Some(other) => Err(SearchError::BadParam(format!("site branching must be a positive int, not {other}"))),
        }
    }
}

impl SearchAlgorithm for Reexpand {
    fn run(&mut self, root: Node, ctx: &mut SearchCtx) -> Result<(), SearchError> {
        let mut frontier: Vec<(u64, Node)> = vec![(0, root)];
        let mut seq = 0u64;
        let mut expansions: HashMap<usize, usize> = HashMap::new();
        let mut failures: HashMap<usize, usize> = HashMap::new();
        let mut total = 0usize;
        while !frontier.is_empty() && !done(ctx, self.max_results) {
            let ln_total = (total.max(1) as f64).ln();
            let mut best = 0;
            let mut best_key = f64::NEG_INFINITY;
            for (i, (s, n)) in frontier.iter().enumerate() {
                let bonus = if self.c == 0.0 {
                    0.0
                } else {
                    let e = expansions.get(&n.id).copied().unwrap_or(0) as f64;
                    self.c * (ln_total / (1.0 + e)).sqrt()
                };
                let key = rank(n.cp.score()) + bonus;
                let earlier = *s < frontier[best].0;
                if i == 0 || key > best_key || (key == best_key && earlier) {
                    best = i;
                    best_key = key;
                }
            }
            let (s, node) = frontier.swap_remove(best);
            ctx.collect(&node);
            if !node.cp.is_running() {
                continue;
            }
            let Some(stepped) = ctx.step(&node)? else { break };
            total += 1;
            let count = expansions.entry(node.id).or_insert(0);
            *count += 1;
            let count = *count;
            let within_limit = self.limit(&node)?.is_none_or(|l| count < l);
            match stepped {
                Stepped::Child(child) => {
                    failures.remove(&node.id);
                    ctx.flush(&child)?;
                    seq += 1;
                    frontier.push((seq, child));
                    if within_limit {
                        frontier.push((s, node));
                    }
                }
                Stepped::Failed => {
                    let f = failures.entry(node.id).or_insert(0);
                    *f += 1;
                    if within_limit && *f < MAX_CONSECUTIVE_FAILURES {
                        frontier.push((s, node));
                    }
                }
                Stepped::Exhausted => {}
            }
        }
        Ok(())
    }
}

pub(super) fn register(r: &mut Registry) {
    r.register("best_first", &["top_k_popped", "default_branching", "max_num_results"], |p| {
        let top_k = param_usize(p, "top_k_popped", 1)?.max(1);
        let default = param_branching(p, Branching::Auto)?;
        let max_results = param_opt_usize(p, "max_num_results", None)?;
        Ok(Box::new(BestFirst { top_k, default, max_results }) as Box<dyn SearchAlgorithm>)
    })
    .expect("builtin names are distinct");
    for (name, explore) in [("reexpand_best_first", false), ("explorative_best_first", true)] {
        let mut params = vec!["default_branching", "max_num_results"];
        if explore {
            params.push("exploration_c");
        }
        r.register(name, &params, move |p| {
            let c = if explore { param_f64(p, "exploration_c", 1.0)? } else { 0.0 };
            let default = param_opt_usize(p, "default_branching", None)?;
            let max_results = param_opt_usize(p, "max_num_results", None)?;
            Ok(Box::new(Reexpand { c, default, max_results }) as Box<dyn SearchAlgorithm>)
        })
        .expect("builtin names are distinct");
    }
}
