//! Search algorithms over checkpoints, the algorithm registry, and the
//! `run_search` entry point.

mod beam;
mod best_first;
mod mcts;
pub mod trace;
mod traversal;

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;
use std::thread;

use serde_json::json;
use thiserror::Error;

use crate::checkpoint::{Checkpoint, Status, StepError};
use crate::cps::CompiledSpace;
use crate::runtime::eval::flush_scores;
use crate::runtime::{Num, Session, Value};
pub use trace::{Trace, TraceNode};

pub type Params = serde_json::Map<String, serde_json::Value>;

/// Parameters every algorithm accepts.
pub const COMMON_PARAMS: &[&str] = &["max_parallelism", "max_steps"];

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("UnknownAlgo: no search algorithm named `{0}`")]
    UnknownAlgo(String),
    #[error("DuplicateAlgo: `{0}` is already registered")]
    DuplicateAlgo(String),
    #[error("invalid search parameter: {0}")]
    BadParam(String),
    #[error("unbounded branching at non-choose site `{0}`; set `branching` or `default_branching`")]
    UnboundedBranching(String),
    #[error("NoSurvivingBranch: every branch was killed or exhausted")]
    NoSurvivingBranch(Box<Trace>),
    #[error("{0}")]
    Step(#[from] StepError),
}

impl SearchError {
    pub fn tag(&self) -> &str {
        match self {
            SearchError::UnknownAlgo(_) => "UnknownAlgo",
            SearchError::DuplicateAlgo(_) => "DuplicateAlgo",
            SearchError::BadParam(_) => "BadParam",
            SearchError::UnboundedBranching(_) => "UnboundedBranching",
            SearchError::NoSurvivingBranch(_) => "NoSurvivingBranch",
            SearchError::Step(e) => e.tag(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SearchConfig {
    pub algo: String,
    pub params: Params,
}

impl SearchConfig {
    pub fn new(algo: &str, params: serde_json::Value) -> Self {
        let params = match params {
            serde_json::Value::Object(m) => m,
            _ => Params::new(),
        };
        SearchConfig { algo: algo.to_string(), params }
    }
}

/// A checkpoint together with its trace node id.
#[derive(Debug, Clone)]
pub struct Node {
    pub cp: Checkpoint,
    pub id: usize,
}

/// Default branching factor of an algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branching {
    Fixed(usize),
    Unbounded,
    /// Every candidate at `choose` sites, one child elsewhere.
    Auto,
}

/// Reads `default_branching`: an int, or `null` for unbounded.
pub fn param_branching(p: &Params, fallback: Branching) -> Result<Branching, SearchError> {
    match p.get("default_branching") {
        None => Ok(fallback),
        Some(serde_json::Value::Null) => Ok(Branching::Unbounded),
        Some(v) => match v.as_u64() {
            Some(n) if n >= 1 => Ok(Branching::Fixed(n as usize)),
            _ => Err(bad("default_branching", "a positive integer or null")),
        },
    }
}

/// What one `step` call produced.
#[derive(Debug, Clone)]
pub enum Stepped {
    Child(Node),
    /// The parent is a `choose` site with no candidates left.
    Exhausted,
    /// Protect retries ran out; no child.
    Failed,
}

#[derive(Debug, Clone)]
pub struct SearchItem {
    pub value: Value,
    pub score: Option<Num>,
    pub node: usize,
}

impl SearchItem {
    pub fn to_json(&self) -> serde_json::Value {
        json!({"value": self.value.to_json(), "score": self.score.map(Num::to_json)})
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best: SearchItem,
    pub all: Vec<SearchItem>,
    pub trace: Trace,
    pub aggregate_costs: BTreeMap<String, Num>,
}

/// Ranking key: unscored sorts below every real score.
pub fn rank(score: Option<Num>) -> f64 {
    score.map_or(f64::NEG_INFINITY, Num::as_f64)
}

pub trait SearchAlgorithm: Send {
    fn run(&mut self, root: Node, ctx: &mut SearchCtx) -> Result<(), SearchError>;
}

pub type Factory = Arc<dyn Fn(&Params) -> Result<Box<dyn SearchAlgorithm>, SearchError> + Send + Sync>;

struct Entry {
    factory: Factory,
    params: Vec<String>,
    parallelism: usize,
}

pub struct Registry {
    algos: BTreeMap<String, Entry>,
}

impl Default for Registry {
    fn default() -> Self {
        Registry::with_builtins()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Registry { algos: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut r = Registry::empty();
        traversal::register(&mut r);
        beam::register(&mut r);
        best_first::register(&mut r);
        mcts::register(&mut r);
        r
    }

    pub fn register(
        &mut self,
        name: &str,
        param_names: &[&str],
        factory: impl Fn(&Params) -> Result<Box<dyn SearchAlgorithm>, SearchError> + Send + Sync + 'static,
    ) -> Result<(), SearchError> {
        if self.algos.contains_key(name) {
            return Err(SearchError::DuplicateAlgo(name.to_string()));
        }
        let params = param_names.iter().map(|s| s.to_string()).collect();
        self.algos.insert(name.to_string(), Entry { factory: Arc::new(factory), params, parallelism: 1 });
        Ok(())
    }

    /// Registers `name` as `base` with a different default `max_parallelism`.
    pub fn register_alias(&mut self, name: &str, base: &str, parallelism: usize) -> Result<(), SearchError> {
        if self.algos.contains_key(name) {
            return Err(SearchError::DuplicateAlgo(name.to_string()));
        }
        let b = self.algos.get(base).ok_or_else(|| SearchError::UnknownAlgo(base.to_string()))?;
        let entry = Entry { factory: b.factory.clone(), params: b.params.clone(), parallelism };
        self.algos.insert(name.to_string(), entry);
        Ok(())
    }

    pub fn names(&self) -> Vec<&str> {
        self.algos.keys().map(String::as_str).collect()
    }

    pub fn param_names(&self, algo: &str) -> Option<&[String]> {
        self.algos.get(algo).map(|e| e.params.as_slice())
    }

    /// Checks parameter names and builds the algorithm, returning it with its
    /// default `max_parallelism`.
    pub fn instantiate(&self, config: &SearchConfig) -> Result<(Box<dyn SearchAlgorithm>, usize), SearchError> {
        let entry = self.algos.get(&config.algo).ok_or_else(|| SearchError::UnknownAlgo(config.algo.clone()))?;
        for key in config.params.keys() {
            if !COMMON_PARAMS.contains(&key.as_str()) && !entry.params.contains(key) {
                return Err(SearchError::BadParam(format!("`{key}` is not a parameter of `{}`", config.algo)));
            }
        }
        Ok(((entry.factory)(&config.params)?, entry.parallelism))
    }
}

fn bad(name: &str, want: &str) -> SearchError {
    SearchError::BadParam(format!("`{name}` must be {want}"))
}

pub fn param_usize(p: &Params, name: &str, default: usize) -> Result<usize, SearchError> {
    match p.get(name) {
        None => Ok(default),
        Some(v) => v.as_u64().map(|n| n as usize).ok_or_else(|| bad(name, "a non-negative integer")),
    }
}

/// `null` means unbounded.
pub fn param_opt_usize(p: &Params, name: &str, default: Option<usize>) -> Result<Option<usize>, SearchError> {
    match p.get(name) {
        None => Ok(default),
        Some(serde_json::Value::Null) => Ok(None),
        Some(v) => match v.as_u64() {
            Some(n) if n >= 1 => Ok(Some(n as usize)),
            _ => Err(bad(name, "a positive integer or null")),
        },
    }
}

pub fn param_f64(p: &Params, name: &str, default: f64) -> Result<f64, SearchError> {
    match p.get(name) {
        None => Ok(default),
        Some(v) => v.as_f64().ok_or_else(|| bad(name, "a number")),
    }
}

pub fn param_bool(p: &Params, name: &str, default: bool) -> Result<bool, SearchError> {
    match p.get(name) {
        None => Ok(default),
        Some(v) => v.as_bool().ok_or_else(|| bad(name, "a boolean")),
    }
}

pub fn param_str<'a>(p: &'a Params, name: &str, default: &'a str) -> Result<&'a str, SearchError> {
    match p.get(name) {
        None => Ok(default),
        Some(v) => v.as_str().ok_or_else(|| bad(name, "a string")),
    }
}

/// Scheduling state shared with the running algorithm: steps are issued
/// only through here so every one of them lands in the trace and the
/// early-stop flag is checked before each.
pub struct SearchCtx {
    session: Arc<Session>,
    pub max_parallelism: usize,
    max_steps: Option<u64>,
    steps: u64,
    trace: Trace,
    results: Vec<Node>,
    result_ids: HashSet<usize>,
    /// Stepped nodes carrying a return value, in step order.
    returning: Vec<Node>,
}

impl SearchCtx {
    fn new(session: Arc<Session>, params: &Params, parallelism: usize) -> Result<Self, SearchError> {
        Ok(SearchCtx {
            session,
            max_parallelism: param_usize(params, "max_parallelism", parallelism)?.max(1),
            max_steps: params
                .get("max_steps")
                .map(|_| param_usize(params, "max_steps", 0))
                .transpose()?
                .map(|n| n as u64),
            steps: 0,
            trace: Trace::default(),
            results: Vec::new(),
            result_ids: HashSet::new(),
            returning: Vec::new(),
        })
    }

    /// True once no further steps may be scheduled.
    pub fn stopped(&self) -> bool {
        self.session.early_stop() || self.max_steps.is_some_and(|m| self.steps >= m)
    }

    pub fn session(&self) -> &Arc<Session> {
        &self.session
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn record(&mut self, parent: Option<&Node>, r: Result<Checkpoint, StepError>) -> Result<Stepped, SearchError> {
        let parent_id = parent.map(|p| p.id);
        match r {
            Ok(cp) if cp.is_exhaustion() => {
                self.trace.push_exhausted(parent_id, &cp);
                Ok(Stepped::Exhausted)
            }
            Ok(cp) => {
                let id = self.trace.push_checkpoint(parent_id, &cp);
                let node = Node { cp, id };
                if node.cp.has_return_value() {
                    self.returning.push(node.clone());
                }
                Ok(Stepped::Child(node))
            }
            Err(StepError::ProtectExhausted { costs, step_id, .. }) => {
                let site = parent.map(|p| p.cp.site_name()).unwrap_or_default();
                self.trace.push_failed(parent_id, site, costs, step_id);
                Ok(Stepped::Failed)
            }
            Err(e) => Err(e.into()),
        }
    }

    /// Steps `parent` once. `None` when scheduling has stopped.
    pub fn step(&mut self, parent: &Node) -> Result<Option<Stepped>, SearchError> {
        self.step_with(parent, None)
    }

    pub fn step_with(&mut self, parent: &Node, message: Option<Value>) -> Result<Option<Stepped>, SearchError> {
        if self.stopped() {
            return Ok(None);
        }
        self.steps += 1;
        let r = parent.cp.step(message);
        self.record(Some(parent), r).map(Some)
    }

    /// Steps each node once, in parallel batches of `max_parallelism`.
    /// Entries are `None` for nodes not stepped because scheduling stopped.
    pub fn step_each(&mut self, nodes: &[Node]) -> Result<Vec<Option<Stepped>>, SearchError> {
        let mut out = Vec::with_capacity(nodes.len());
        for chunk in nodes.chunks(self.max_parallelism) {
            if self.stopped() {
                break;
            }
            let budget = self.max_steps.map_or(u64::MAX, |m| m - self.steps) as usize;
            let chunk = &chunk[..chunk.len().min(budget)];
            let results: Vec<_> = if chunk.len() <= 1 {
                chunk.iter().map(|n| n.cp.step(None)).collect()
            } else {
                thread::scope(|s| {
                    let hs: Vec<_> = chunk.iter().map(|n| s.spawn(|| n.cp.step(None))).collect();
                    hs.into_iter().map(|h| h.join().expect("step worker panicked")).collect()
                })
            };
            self.steps += chunk.len() as u64;
            for (n, r) in chunk.iter().zip(results) {
                out.push(Some(self.record(Some(n), r)?));
            }
        }
        out.resize_with(nodes.len(), || None);
        Ok(out)
    }

    /// Steps `parent` up to `n` times (`None`: until its candidates run out)
    /// and returns the children in sampling order. Steps run on up to
    /// `max_parallelism` threads in batches; the early-stop flag is checked
    /// before each batch.
    pub fn expand(&mut self, parent: &Node, n: Option<usize>) -> Result<Vec<Node>, SearchError> {
        let mut out = Vec::new();
        let mut remaining = n;
        while remaining != Some(0) && !self.stopped() {
            let budget = self.max_steps.map_or(u64::MAX, |m| m - self.steps) as usize;
            let width = match parent.cp.param("max_workers") {
                Some(Value::Int(w)) if w >= 1 => self.max_parallelism.min(w as usize),
                _ => self.max_parallelism,
            };
            let batch = remaining.unwrap_or(usize::MAX).min(width).min(budget);
            if batch == 0 {
                break;
            }
            let results = step_batch(&parent.cp, batch, width);
            self.steps += batch as u64;
            let mut exhausted = false;
            for r in results {
                match self.record(Some(parent), r)? {
                    Stepped::Child(c) => out.push(c),
                    Stepped::Exhausted => exhausted = true,
                    Stepped::Failed => {}
                }
            }
            if let Some(r) = &mut remaining {
                *r -= batch;
            }
            if exhausted {
                break;
            }
        }
        Ok(out)
    }

    /// Branching factor at `node`: the site's `branching` argument, else the
    /// algorithm default. `None` is unbounded, which only `choose` sites allow.
    pub fn branching(&self, node: &Node, default: Branching) -> Result<Option<usize>, SearchError> {
        let is_choose = node.cp.num_choices().is_some();
        let b = match node.cp.param("branching") {
            Some(Value::Int(n)) if n >= 1 => Some(n as usize),
            Some(Value::Null) => None,
            Some(other) => {
                return Err(SearchError::BadParam(format!("site branching must be a positive int, not {other}")))
            }
            None => match default {
                Branching::Fixed(n) => Some(n),
                Branching::Unbounded => None,
                Branching::Auto => (!is_choose).then_some(1),
            },
        };
        if b.is_none() && !is_choose {
            return Err(SearchError::UnboundedBranching(node.cp.site_name()));
        }
        Ok(b)
    }

    /// Records `node` as a result if it carries a return value.
    pub fn collect(&mut self, node: &Node) -> bool {
        if node.cp.has_return_value() && self.result_ids.insert(node.id) {
            self.results.push(node.clone());
            true
        } else {
            false
        }
    }

    /// Evaluates pending group scores so rankings see current values.
    pub fn flush(&self, any: &Node) -> Result<(), SearchError> {
        if self.session.scores().has_pending() {
            flush_scores(any.cp.space(), &self.session).map_err(StepError::Flush)?;
        }
        Ok(())
    }

    pub fn num_results(&self) -> usize {
        self.results.len()
    }
}

fn step_batch(cp: &Checkpoint, n: usize, width: usize) -> Vec<Result<Checkpoint, StepError>> {
    if n <= 1 || width <= 1 {
        return (0..n).map(|_| cp.step(None)).collect();
    }
    thread::scope(|s| {
        let handles: Vec<_> = (0..n).map(|_| s.spawn(|| cp.step(None))).collect();
        handles.into_iter().map(|h| h.join().expect("step worker panicked")).collect()
    })
}

/// Starts `entry` and runs the configured algorithm to completion.
pub fn run_search(
    space: Arc<CompiledSpace>,
    entry: &str,
    args: Vec<Value>,
    config: &SearchConfig,
    session: Arc<Session>,
    registry: &Registry,
) -> Result<SearchResult, SearchError> {
    let (mut algo, parallelism) = registry.instantiate(config)?;
    let mut ctx = SearchCtx::new(session.clone(), &config.params, parallelism)?;
    let root_cp = Checkpoint::start(space.clone(), entry, args, session.clone())?;
    let root = match ctx.record(None, Ok(root_cp))? {
        Stepped::Child(n) => n,
        _ => unreachable!("start never yields an exhaustion marker"),
    };
    algo.run(root, &mut ctx)?;
    if session.early_stop() {
        // Branches that finished before the stop are results even if the
        // algorithm never got to visit them.
        for node in std::mem::take(&mut ctx.returning) {
            ctx.collect(&node);
        }
    }
    flush_scores(&space, &session).map_err(StepError::Flush)?;
    let scores = session.scores();
    ctx.trace.resolve(&scores);
    drop(scores);
    let all: Vec<SearchItem> = ctx
        .results
        .iter()
        .filter(|n| n.cp.status() != Status::Killed)
        .filter_map(|n| Some(SearchItem { value: n.cp.return_value().ok()?, score: n.cp.score(), node: n.id }))
        .collect();
    let mut best: Option<&SearchItem> = None;
    for item in &all {
        if best.is_none_or(|b| rank(item.score) > rank(b.score)) {
            best = Some(item);
        }
    }
    match best.cloned() {
        None => Err(SearchError::NoSurvivingBranch(Box::new(ctx.trace))),
        Some(best) => Ok(SearchResult { best, all, trace: ctx.trace, aggregate_costs: session.aggregate_costs() }),
    }
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::*;
    use crate::cps::compile_source;
    use crate::runtime::Provider;

    fn search(src: &str, algo: &str, params: serde_json::Value) -> Result<SearchResult, SearchError> {
        search_with(src, algo, params, Provider::new(0))
    }

    fn search_with(src: &str, algo: &str, params: serde_json::Value, p: Provider) -> Result<SearchResult, SearchError> {
        let space = Arc::new(compile_source("t.pan", src, Some("main")).unwrap());
        let config = SearchConfig::new(algo, params);
        run_search(space, "main", vec![], &config, Session::new(p), &Registry::with_builtins())
    }

    fn values(r: &SearchResult) -> Vec<serde_json::Value> {
        r.all.iter().map(|i| i.value.to_json()).collect()
    }

    fn assert_tree(t: &Trace) {
        assert!(t.nodes[0].parent.is_none());
        for n in &t.nodes[1..] {
            assert!(n.parent.unwrap() < n.id);
        }
    }

    const TWO_CHOICES: &str =
        "fn main() { a = choose([1, 2, 3]); b = choose([10, 20]); record_score(a + b); return a + b }";

    #[test]
    fn dfs_enumerates_choose_product() {
        let r = search(TWO_CHOICES, "dfs", json!({})).unwrap();
        assert_eq!(values(&r), [11, 21, 12, 22, 13, 23].map(|v| json!(v)));
        assert_eq!(r.best.value.to_json(), json!(23));
        // root + 3 children + 1 exhausted marker + 3 * (2 + 1 marker) children
        assert_eq!(r.trace.nodes.len(), 1 + 4 + 9);
        assert_tree(&r.trace);
    }

    #[test]
    fn bfs_orders_by_level() {
        let r = search(TWO_CHOICES, "bfs", json!({})).unwrap();
        assert_eq!(values(&r), [11, 21, 12, 22, 13, 23].map(|v| json!(v)));
        let depth2 = r.trace.nodes.iter().position(|n| n.parent == Some(1)).unwrap();
        assert!(r.trace.nodes[..depth2].iter().all(|n| n.parent.is_none_or(|p| p == 0)));
    }

    #[test]
    fn per_site_branching_multiplies() {
        let src = "fn main() { branchpoint(branching=8); branchpoint(branching=8); return 1 }";
        let r = search(src, "bfs", json!({})).unwrap();
        assert_eq!(r.all.len(), 64);
        let r = search(src, "parallel_bfs", json!({})).unwrap();
        assert_eq!(r.all.len(), 64);
    }

    #[test]
    fn depth_zero_program_has_one_leaf() {
        let r = search("fn main() { return 5 }", "dfs", json!({})).unwrap();
        assert_eq!(values(&r), [json!(5)]);
        assert_eq!(r.trace.nodes.len(), 1);
    }

    #[test]
    fn sampling_picks_argmax_of_rollouts() {
        let src = r#"fn main() { branchpoint(); x = perform("llm"); record_score(x); return x }"#;
        let p = Provider::new(0).scripted("llm", (1..=10).map(|i| Value::Int((i * 7) % 11)).collect());
        let r = search_with(src, "sampling", json!({"num_rollouts": 10}), p).unwrap();
        assert_eq!(r.all.len(), 10);
        assert_eq!(r.best.value.to_json(), json!(10));
    }

    #[test]
    fn unbounded_branching_needs_choose() {
        let err =
            search("fn main() { branchpoint(); return 1 }", "dfs", json!({"default_branching": null})).unwrap_err();
        assert!(matches!(err, SearchError::UnboundedBranching(_)));
    }

    #[test]
    fn registry_errors() {
        let err = search("fn main() { return 1 }", "nope", json!({})).unwrap_err();
        assert_eq!(err.tag(), "UnknownAlgo");
        let err = search("fn main() { return 1 }", "beam", json!({"num_rollouts": 3})).unwrap_err();
        assert_eq!(err.tag(), "BadParam");
        let mut reg = Registry::with_builtins();
        let err = reg.register("dfs", &[], |_| unreachable!()).unwrap_err();
        assert_eq!(err.tag(), "DuplicateAlgo");
    }

    struct FirstChild;

    impl SearchAlgorithm for FirstChild {
        fn run(&mut self, mut node: Node, ctx: &mut SearchCtx) -> Result<(), SearchError> {
            while node.cp.is_running() {
                match ctx.step(&node)? {
                    Some(Stepped::Child(c)) => node = c,
                    _ => return Ok(()),
                }
            }
            ctx.collect(&node);
            Ok(())
        }
    }

    #[test]
    fn custom_algorithm_dispatches() {
        let mut reg = Registry::with_builtins();
        reg.register("my_search", &[], |_| Ok(Box::new(FirstChild) as Box<dyn SearchAlgorithm>)).unwrap();
        let space = Arc::new(compile_source("t.pan", TWO_CHOICES, Some("main")).unwrap());
        let r = run_search(
            space,
            "main",
            vec![],
            &SearchConfig::new("my_search", json!({})),
            Session::new(Provider::new(0)),
            &reg,
        )
        .unwrap();
        assert_eq!(r.best.value.to_json(), json!(11));
    }

    #[test]
    fn all_killed_is_no_surviving_branch() {
        let err = search("fn main() { x = choose([1, 2]); kill_branch(x) }", "dfs", json!({})).unwrap_err();
        assert_eq!(err.tag(), "NoSurvivingBranch");
    }

    #[test]
    fn beam_width_one_is_greedy() {
        let src = r#"fn main() {
            a = 0
            for k in range(3) {
                branchpoint()
                x = perform("llm")
                a = a + x
                record_score(a)
            }
            return a
        }"#;
        // Level 1 sees 1,5,3; level 2 sees 2,0,9; level 3 sees 4,4,1.
        let script = [1, 5, 3, 2, 0, 9, 4, 4, 1].map(Value::Int).to_vec();
        let p = Provider::new(0).scripted("llm", script);
        let r = search_with(src, "beam", json!({"beam_width": 1, "default_branching": 3}), p).unwrap();
        assert_eq!(values(&r), [18, 18, 15].map(|v| json!(v)));
        assert_eq!(r.best.value.to_json(), json!(5 + 9 + 4));
    }

    #[test]
    fn beam_collects_early_returns() {
        let src = "fn main() { x = choose([0, 1, 2]); record_score(x); if x == 0 { return 0 } branchpoint(branching=1); return x * 10 }";
        let r = search(src, "beam", json!({"beam_width": 2, "default_branching": null})).unwrap();
        let mut v: Vec<_> = values(&r).into_iter().map(|v| v.as_i64().unwrap()).collect();
        v.sort();
        assert_eq!(v, [0, 10, 20]);
    }

    const GRAPH: &str = r#"fn main(graph, weights, start, goal, h) {
        path = [start]
        cur = start
        cost = 0
        while cur != goal {
            nxt = choose(graph[cur], identity=cur)
            cost = cost + weights[cur][nxt]
            cur = nxt
            path = path + [cur]
            record_score(0 - cost - h[cur])
        }
        return {"path": path, "cost": cost}
    }"#;

    #[test]
    fn best_first_finds_shortest_path() {
        let space = Arc::new(compile_source("g.pan", GRAPH, Some("main")).unwrap());
        let graph = json!({"a": ["b", "c"], "b": ["d"], "c": ["d"], "d": []});
        let weights = json!({"a": {"b": 1, "c": 5}, "b": {"d": 10}, "c": {"d": 1}});
        let h = json!({"a": 0, "b": 0, "c": 0, "d": 0});
        let args = [graph, weights, json!("a"), json!("d"), h].iter().map(Value::from_json).collect();
        let config = SearchConfig::new("best_first", json!({"max_num_results": 1}));
        let r = run_search(space, "main", args, &config, Session::new(Provider::new(0)), &Registry::with_builtins())
            .unwrap();
        assert_eq!(r.best.value.to_json(), json!({"path": ["a", "c", "d"], "cost": 6}));
    }

    #[test]
    fn explorative_with_zero_c_matches_reexpand() {
        let src = r#"fn main() { branchpoint(branching=3); x = perform("llm"); record_score(x); branchpoint(branching=2); y = perform("llm"); record_score(x + y); return x + y }"#;
        let script: Vec<Value> = [3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5].map(Value::Int).to_vec();
        let a = search_with(src, "reexpand_best_first", json!({}), Provider::new(0).scripted("llm", script.clone()))
            .unwrap();
        let b = search_with(
            src,
            "explorative_best_first",
            json!({"exploration_c": 0.0}),
            Provider::new(0).scripted("llm", script),
        )
        .unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(values(&a), values(&b));
    }

    #[test]
    fn reexpand_respects_max_num_results() {
        let src = r#"fn main() { x = perform("llm"); branchpoint(branching=10); record_score(x); return x }"#;
        let p = Provider::new(0).seeded("llm", (0..5).map(Value::Int).collect());
        let r = search_with(src, "reexpand_best_first", json!({"max_num_results": 5}), p).unwrap();
        assert!(r.all.len() <= 5);
    }

    #[test]
    fn mcts_single_iteration_samples_one_child() {
        let r = search(TWO_CHOICES, "mcts", json!({"num_iterations": 1, "value_fn": "returned"}));
        assert_eq!(r.unwrap_err().tag(), "NoSurvivingBranch");
        let src = "fn main() { x = choose([1, 2]); return x }";
        let r = search(src, "mcts", json!({"num_iterations": 1})).unwrap();
        assert_eq!(r.trace.nodes.len(), 2);
    }

    #[test]
    fn mcts_prefers_better_arm() {
        let src = r#"fn main() { arm = choose(["A", "B"]); branchpoint(branching=50); if arm == "A" { record_score(1.0) } else { record_score(0.0) } return arm }"#;
        let r = search(src, "mcts", json!({"num_iterations": 50})).unwrap();
        let count = |v: &str| r.all.iter().filter(|i| i.value.to_json() == json!(v)).count();
        assert!(count("A") > count("B"), "A={} B={}", count("A"), count("B"));
    }

    #[test]
    fn early_stop_halts_scheduling() {
        let src = "fn main() { x = choose(range(20)); if x == 3 { early_stop() } record_score(x); return x }";
        let r = search(src, "dfs", json!({})).unwrap();
        let stop = r
            .trace
            .nodes
            .iter()
            .find(|n| n.site == "return" && r.all.iter().any(|i| i.node == n.id && i.value.to_json() == json!(3)));
        let stop = stop.unwrap().order;
        assert!(r.trace.nodes.iter().all(|n| n.order <= stop));
        assert_eq!(r.all.len(), 4);
    }

    #[test]
    fn max_steps_caps_trace() {
        let r = search(TWO_CHOICES, "dfs", json!({"max_steps": 5})).unwrap();
        assert_eq!(r.trace.nodes.len(), 6);
        assert_eq!(values(&r), [json!(11)]);
    }

    #[test]
    fn parallel_dfs_matches_serial_multiset() {
        let mut a: Vec<_> =
            values(&search(TWO_CHOICES, "dfs", json!({})).unwrap()).into_iter().map(|v| v.as_i64()).collect();
        let mut b: Vec<_> =
            values(&search(TWO_CHOICES, "parallel_dfs", json!({})).unwrap()).into_iter().map(|v| v.as_i64()).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }
}
