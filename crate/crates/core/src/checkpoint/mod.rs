//! Checkpoints: immutable program states at a branchpoint or terminal, and
//! the `step` transition that samples a child state.

pub mod machine;
mod sampler;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::cps::{BlockId, CompiledSpace, Site, SiteId};
use crate::error::RuntimeError;
use crate::lang::TempKey;
use crate::runtime::eval::{flush_scores, Exec, Fault};
use crate::runtime::frame::{deep_clone, Frame};
use crate::runtime::info::{add_costs, Info, Score};
use crate::runtime::{Num, Session, Value};
use machine::Outcome;

pub use sampler::{parallel_sample, step_sampler, StepSampler};

/// Upper bound on protect retries within one transition, whatever the
/// per-site limits say.
pub const PROTECT_HARD_CAP: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Running,
    DoneStepping,
    Returned,
    Killed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Running => "RUNNING",
            Status::DoneStepping => "DONE_STEPPING",
            Status::Returned => "RETURNED",
            Status::Killed => "KILLED",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Error)]
pub enum StepError {
    #[error("step called on a {0} checkpoint")]
    NotRunning(Status),
    #[error("ProtectExhausted: `{tag}` still failing after {attempts} attempts")]
    ProtectExhausted { tag: String, attempts: u64, costs: BTreeMap<String, Num>, step_id: u64 },
    #[error("{0}")]
    Runtime(RuntimeError),
    #[error("score flush failed: {0}")]
    Flush(RuntimeError),
    #[error("{0}")]
    BadEntry(String),
}

impl StepError {
    pub fn tag(&self) -> &str {
        match self {
            StepError::NotRunning(_) => "NotRunning",
            StepError::ProtectExhausted { .. } => "ProtectExhausted",
            StepError::Runtime(e) | StepError::Flush(e) => &e.tag,
            StepError::BadEntry(_) => "BadEntry",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StepOptions {
    pub flush_scores: bool,
    /// Total protect retries allowed for this step across all protect sites.
    pub max_protection: Option<u64>,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions { flush_scores: true, max_protection: None }
    }
}

#[derive(Debug)]
enum State {
    Suspended {
        site: SiteId,
        slot: TempKey,
        rest: BlockId,
        params: BTreeMap<String, Value>,
        choices: Option<(TempKey, usize)>,
    },
    Returned(Value),
    Killed {
        value: Option<Value>,
        error: Option<RuntimeError>,
    },
}

#[derive(Debug)]
struct Inner {
    space: Arc<CompiledSpace>,
    session: Arc<Session>,
    frame: Frame,
    info: Info,
    state: State,
    status: Status,
    cursor: AtomicUsize,
    step_id: u64,
    protect_retries: u64,
    /// Produced by stepping a `choose` site whose candidates were used up.
    exhaustion: bool,
}

/// Cheap to clone; all clones refer to the same immutable state.
#[derive(Debug, Clone)]
pub struct Checkpoint(Arc<Inner>);

enum Binding {
    Message(Value),
    Choice(TempKey, usize),
}

struct Attempt {
    result: Result<Outcome, RuntimeError>,
    frame: Frame,
    info: Info,
    retries: u64,
}

/// Runs one transition, replaying the whole segment whenever a protected
/// expression fails with its tag.
#[allow(clippy::too_many_arguments)]
fn drive(
    space: &CompiledSpace,
    session: &Session,
    make_frame: &dyn Fn() -> Frame,
    base_info: &Info,
    bind: Option<(TempKey, Binding)>,
    start: BlockId,
    step_id: u64,
    max_protection: Option<u64>,
) -> Result<Attempt, StepError> {
    let mut per_site: BTreeMap<usize, u64> = BTreeMap::new();
    let mut total = 0u64;
    let mut costs = BTreeMap::new();
    loop {
        let mut frame = make_frame();
        let mut info = base_info.clone();
        info.optional_rv = None;
        info.costs.clear();
        info.done_stepping = false;
        match &bind {
            None => {}
            Some((slot, Binding::Message(v))) => {
                frame.tmp.insert(*slot, deep_clone(v));
            }
            Some((slot, Binding::Choice(key, idx))) => {
                let item = match frame.tmp.get(key) {
                    Some(Value::List(l)) => l.read()[*idx].clone(),
                    _ => Value::Null,
                };
                frame.tmp.insert(*slot, item);
            }
        }
        let mut exec = Exec::new(space, session, &mut info, step_id);
        let result = machine::run(&mut exec, &mut frame, start);
        let handles = std::mem::take(&mut exec.group_handles);
        add_costs(&mut costs, &info.costs);
        let result = match result {
            Ok(o) => Ok(o),
            Err(Fault::Error(e)) => Err(e),
            Err(Fault::Retry { site, tag, max_retries }) => {
                session.scores().retract(&handles);
                let n = per_site.entry(site).or_insert(0);
                *n += 1;
                total += 1;
                if *n > max_retries || max_protection.is_some_and(|m| total > m) || total > PROTECT_HARD_CAP {
                    session.add_costs(&costs);
                    return Err(StepError::ProtectExhausted { tag, attempts: total, costs, step_id });
                }
                continue;
            }
        };
        session.add_costs(&costs);
        info.costs = costs;
        return Ok(Attempt { result, frame, info, retries: total });
    }
}

impl Checkpoint {
    fn from_attempt(space: &Arc<CompiledSpace>, session: &Arc<Session>, a: Attempt, step_id: u64) -> Checkpoint {
        let Attempt { result, frame, mut info, retries } = a;
        let (state, status) = match result {
            Ok(Outcome::Yield { site, slot, rest, params, choices }) => {
                let status = if choices.is_some_and(|(_, n)| n == 0) {
                    info.done_stepping = true;
                    Status::DoneStepping
                } else {
                    Status::Running
                };
                (State::Suspended { site, slot, rest, params, choices }, status)
            }
            Ok(Outcome::Done { value, killed: false }) => (State::Returned(value), Status::Returned),
            Ok(Outcome::Done { value, killed: true }) => {
                (State::Killed { value: Some(value), error: None }, Status::Killed)
            }
            Err(e) => (State::Killed { value: None, error: Some(e) }, Status::Killed),
        };
        if status == Status::Killed {
            info.killed = true;
            info.optional_rv = None;
        }
        Checkpoint(Arc::new(Inner {
            space: space.clone(),
            session: session.clone(),
            frame,
            info,
            state,
            status,
            cursor: AtomicUsize::new(0),
            step_id,
            protect_retries: retries,
            exhaustion: false,
        }))
    }

    /// Binds `args` to the parameters of `entry` and runs to the first
    /// branchpoint. Errors raised before it propagate.
    pub fn start(
        space: Arc<CompiledSpace>,
        entry: &str,
        args: Vec<Value>,
        session: Arc<Session>,
    ) -> Result<Checkpoint, StepError> {
        let f = space.function(entry).ok_or_else(|| StepError::BadEntry(format!("no function named `{entry}`")))?;
        if f.params.len() != args.len() {
            return Err(StepError::BadEntry(format!(
                "`{entry}` takes {} arguments, got {}",
                f.params.len(),
                args.len()
            )));
        }
        let start = space.entry_block(entry).expect("function has an entry block");
        let step_id = session.next_step_id();
        let make = || Frame::new(entry, f.params.iter().cloned().zip(args.iter().map(deep_clone)).collect());
        let attempt = drive(&space, &session, &make, &Info::default(), None, start, step_id, None)?;
        if let Err(e) = attempt.result {
            return Err(StepError::Runtime(e));
        }
        flush_scores(&space, &session).map_err(StepError::Flush)?;
        Ok(Checkpoint::from_attempt(&space, &session, attempt, step_id))
    }

    pub fn step(&self, message: Option<Value>) -> Result<Checkpoint, StepError> {
        self.step_with(message, StepOptions::default())
    }

    /// Samples one child. The parent is never modified, so stepping the same
    /// checkpoint repeatedly (or concurrently) is allowed.
    pub fn step_with(&self, message: Option<Value>, opts: StepOptions) -> Result<Checkpoint, StepError> {
        let me = &*self.0;
        let State::Suspended { site, slot, rest, choices, params } = &me.state else {
            return Err(StepError::NotRunning(me.status));
        };
        if me.status != Status::Running {
            return Err(StepError::NotRunning(me.status));
        }
        let step_id = me.session.next_step_id();
        let count_key = match params.get("name") {
            Some(Value::Str(s)) => s.to_string(),
            _ => me.space.sites[*site].label(),
        };
        me.session.count_step(&count_key);
        let bind = match choices {
            Some((key, n)) => {
                let idx = me.cursor.fetch_add(1, Ordering::SeqCst);
                if idx >= *n {
                    return Ok(self.exhausted(step_id));
                }
                Binding::Choice(*key, idx)
            }
            None => Binding::Message(message.unwrap_or(Value::Null)),
        };
        let make = || me.frame.clone_branch(&me.info.nocopy);
        let attempt =
            drive(&me.space, &me.session, &make, &me.info, Some((*slot, bind)), *rest, step_id, opts.max_protection)?;
        let child = Checkpoint::from_attempt(&me.space, &me.session, attempt, step_id);
        if opts.flush_scores {
            flush_scores(&me.space, &me.session).map_err(StepError::Flush)?;
        }
        Ok(child)
    }

    fn exhausted(&self, step_id: u64) -> Checkpoint {
        let me = &*self.0;
        let mut info = me.info.clone();
        info.done_stepping = true;
        info.optional_rv = None;
        info.costs.clear();
        let state = match &me.state {
            State::Suspended { site, slot, rest, params, choices } => {
                State::Suspended { site: *site, slot: *slot, rest: *rest, params: params.clone(), choices: *choices }
            }
            _ => unreachable!("only suspended checkpoints are stepped"),
        };
        Checkpoint(Arc::new(Inner {
            space: me.space.clone(),
            session: me.session.clone(),
            frame: me.frame.clone_branch(&me.info.nocopy),
            info,
            state,
            status: Status::DoneStepping,
            cursor: AtomicUsize::new(usize::MAX),
            step_id,
            protect_retries: 0,
            exhaustion: true,
        }))
    }

    pub fn status(&self) -> Status {
        self.0.status
    }

    pub fn is_running(&self) -> bool {
        self.0.status == Status::Running
    }

    /// Latest recorded score; `None` while unscored or while a group score
    /// awaits its first flush. Group scores are live views of the score
    /// database.
    pub fn score(&self) -> Option<Num> {
        match self.0.info.score {
            Score::Unscored => None,
            Score::Resolved(n) => Some(n),
            Score::Pending(h) => self.0.session.scores().get(h),
        }
    }

    pub fn score_state(&self) -> Score {
        self.0.info.score
    }

    pub fn has_return_value(&self) -> bool {
        match &self.0.state {
            State::Returned(_) => true,
            State::Killed { .. } => false,
            State::Suspended { .. } => self.0.info.optional_rv.is_some(),
        }
    }

    pub fn return_value(&self) -> Result<Value, RuntimeError> {
        match &self.0.state {
            State::Returned(v) => Ok(v.clone()),
            State::Suspended { .. } if self.0.status != Status::Killed => {
                self.0.info.optional_rv.clone().ok_or_else(no_return_value)
            }
            _ => Err(no_return_value()),
        }
    }

    pub fn early_stopped_search(&self) -> bool {
        self.0.session.early_stop()
    }

    /// Evaluated branchpoint arguments, minus `message_to_controller`.
    pub fn branchpoint_params(&self) -> BTreeMap<String, Value> {
        match &self.0.state {
            State::Suspended { params, .. } => params
                .iter()
                .filter(|(k, _)| *k != "message_to_controller")
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            _ => BTreeMap::new(),
        }
    }

    pub fn param(&self, name: &str) -> Option<Value> {
        match &self.0.state {
            State::Suspended { params, .. } => params.get(name).cloned(),
            _ => None,
        }
    }

    /// The `message_to_controller` argument of the current site.
    pub fn message_from_agent(&self) -> Option<Value> {
        self.param("message_to_controller")
    }

    pub fn site_id(&self) -> Option<SiteId> {
        match &self.0.state {
            State::Suspended { site, .. } => Some(*site),
            _ => None,
        }
    }

    pub fn site(&self) -> Option<&Site> {
        self.site_id().map(|s| &self.0.space.sites[s])
    }

    /// Display name: the site's `name` parameter, its static label, or the
    /// terminal status.
    pub fn site_name(&self) -> String {
        match (&self.0.state, self.param("name")) {
            (State::Suspended { .. }, Some(Value::Str(s))) => s.to_string(),
            (State::Suspended { site, .. }, _) => self.0.space.sites[*site].label(),
            (State::Returned(_), _) => "return".into(),
            (State::Killed { .. }, _) => "killed".into(),
        }
    }

    /// Number of candidates at a `choose` site.
    pub fn num_choices(&self) -> Option<usize> {
        match &self.0.state {
            State::Suspended { choices, .. } => choices.map(|(_, n)| n),
            _ => None,
        }
    }

    pub fn error(&self) -> Option<&RuntimeError> {
        match &self.0.state {
            State::Killed { error, .. } => error.as_ref(),
            _ => None,
        }
    }

    pub fn killed_value(&self) -> Option<&Value> {
        match &self.0.state {
            State::Killed { value, .. } => value.as_ref(),
            _ => None,
        }
    }

    /// Costs recorded by the transition that produced this checkpoint,
    /// discarded protect attempts included.
    pub fn costs(&self) -> &BTreeMap<String, Num> {
        &self.0.info.costs
    }

    /// True for the marker child returned when a `choose` site has no
    /// candidates left, as opposed to a state that reached an empty `choose`.
    pub fn is_exhaustion(&self) -> bool {
        self.0.exhaustion
    }

    pub fn step_id(&self) -> u64 {
        self.0.step_id
    }

    pub fn protect_retries(&self) -> u64 {
        self.0.protect_retries
    }

    pub fn frame(&self) -> &Frame {
        &self.0.frame
    }

    pub fn info(&self) -> &Info {
        &self.0.info
    }

    pub fn session(&self) -> &Arc<Session> {
        &self.0.session
    }

    pub fn space(&self) -> &Arc<CompiledSpace> {
        &self.0.space
    }

    pub fn ptr_eq(&self, other: &Checkpoint) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

fn no_return_value() -> RuntimeError {
    RuntimeError::new("NoReturnValue", "checkpoint has no return value")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cps::compile_source;
    use crate::runtime::Provider;

    fn start(src: &str, args: Vec<Value>, provider: Provider) -> Checkpoint {
        let space = Arc::new(compile_source("t.pan", src, Some("main")).unwrap());
        Checkpoint::start(space, "main", args, Session::new(provider)).unwrap()
    }

    fn get(cp: &Checkpoint, name: &str) -> Value {
        cp.frame().locals[name].clone()
    }

    #[test]
    fn first_statement_branchpoint() {
        let cp = start("fn main() { branchpoint(); return 1 }", vec![], Provider::new(0));
        assert_eq!(cp.status(), Status::Running);
        assert_eq!(cp.site_id(), Some(0));
        assert_eq!(cp.score(), None);
    }

    #[test]
    fn no_branchpoints_returns_at_start() {
        let cp = start("fn main(x) { return x * 2 }", vec![Value::Int(4)], Provider::new(0));
        assert_eq!(cp.status(), Status::Returned);
        assert_eq!(cp.return_value().unwrap(), Value::Int(8));
    }

    #[test]
    fn prelude_effects_happen_at_start() {
        let p = Provider::new(0).scripted("op", vec!["x".into()]);
        let cp = start("fn main() { y = perform(\"op\"); branchpoint(); return y }", vec![], p);
        assert_eq!(cp.session().call_log().len(), 1);
    }

    #[test]
    fn branches_are_isolated() {
        let src = r#"fn main() { x = 0; m = branchpoint(); x = m; branchpoint() }"#;
        let cp = start(src, vec![], Provider::new(0));
        let a = cp.step(Some(Value::Int(1))).unwrap();
        let b = cp.step(Some(Value::Int(2))).unwrap();
        assert_eq!(get(&a, "x"), Value::Int(1));
        assert_eq!(get(&b, "x"), Value::Int(2));
        assert_eq!(get(&cp, "x"), Value::Int(0));
    }

    #[test]
    fn message_binds_and_defaults_to_null() {
        let src = r#"fn main(t) { r = branchpoint(message_to_controller=[t, 1]); return r }"#;
        let cp = start(src, vec!["task".into()], Provider::new(0));
        assert_eq!(cp.message_from_agent().unwrap(), Value::list(vec!["task".into(), 1.into()]));
        assert!(cp.branchpoint_params().is_empty());
        assert_eq!(cp.step(Some("ok".into())).unwrap().return_value().unwrap(), Value::str("ok"));
        assert_eq!(cp.step(None).unwrap().return_value().unwrap(), Value::Null);
    }

    #[test]
    fn choose_exhausts_into_done_stepping() {
        let cp = start("fn main() { return choose([10, 20]) }", vec![], Provider::new(0));
        let kids: Vec<_> = (0..3).map(|_| cp.step(None).unwrap()).collect();
        assert_eq!(kids[0].return_value().unwrap(), Value::Int(10));
        assert_eq!(kids[1].return_value().unwrap(), Value::Int(20));
        assert_eq!(kids[2].status(), Status::DoneStepping);
    }

    #[test]
    fn empty_choose_is_done_stepping_immediately() {
        let cp = start("fn main() { return choose([]) }", vec![], Provider::new(0));
        assert_eq!(cp.status(), Status::DoneStepping);
        assert!(cp.info().done_stepping);
    }

    #[test]
    fn protect_retries_then_succeeds() {
        let p = Provider::new(0).scripted("f", vec!["ok".into()]).fail_first("f", 2, "ProviderError");
        let cp = start(r#"fn main() { branchpoint(); return protect(perform("f"), "ProviderError", 3) }"#, vec![], p);
        let child = cp.step(None).unwrap();
        assert_eq!(child.return_value().unwrap(), Value::str("ok"));
        assert_eq!(child.protect_retries(), 2);
        assert_eq!(cp.session().call_log().len(), 3);
    }

    #[test]
    fn protect_exhaustion() {
        let p = Provider::new(0).scripted("f", vec!["ok".into()]).fail_first("f", 2, "ProviderError");
        let cp = start(
            r#"fn main() { branchpoint(); return protect(perform("f"), "ProviderError", max_retries=1) }"#,
            vec![],
            p,
        );
        let err = cp.step(None).unwrap_err();
        assert!(matches!(err, StepError::ProtectExhausted { attempts: 2, .. }), "{err:?}");
        assert_eq!(cp.session().call_log().len(), 2);
    }

    #[test]
    fn unprotected_error_kills_branch() {
        let cp = start("fn main(xs) { branchpoint(); return xs[5] }", vec![Value::list(vec![])], Provider::new(0));
        let child = cp.step(None).unwrap();
        assert_eq!(child.status(), Status::Killed);
        assert_eq!(child.error().unwrap().tag, "IndexError");
    }

    #[test]
    fn optional_return_lasts_one_transition() {
        let src = "fn main() { optional_return(3); branchpoint(); branchpoint(); return 0 }";
        let cp = start(src, vec![], Provider::new(0));
        assert!(cp.has_return_value());
        let next = cp.step(None).unwrap();
        assert!(!next.has_return_value());
        assert!(next.return_value().is_err());
    }

    #[test]
    fn score_and_params() {
        let cp =
            start("fn main() { record_score(0.5); branchpoint(name=\"foo\", branching=3) }", vec![], Provider::new(0));
        assert_eq!(cp.score(), Some(Num::Float(0.5)));
        let params = cp.branchpoint_params();
        assert_eq!(params["name"], Value::str("foo"));
        assert_eq!(params["branching"], Value::Int(3));
    }

    #[test]
    fn early_stop_is_shared_across_branches() {
        let cp =
            start("fn main() { x = branchpoint(); if x { early_stop() }; branchpoint() }", vec![], Provider::new(0));
        let quiet = cp.step(Some(Value::Bool(false))).unwrap();
        assert!(!quiet.early_stopped_search());
        let loud = cp.step(Some(Value::Bool(true))).unwrap();
        assert!(loud.early_stopped_search() && quiet.early_stopped_search() && cp.early_stopped_search());
        assert_eq!(cp.session().early_stop_step(), Some(loud.step_id()));
    }

    #[test]
    fn site_step_counts() {
        let cp = start("fn main() { branchpoint(name=\"s\"); return 1 }", vec![], Provider::new(0));
        for _ in 0..4 {
            cp.step(None).unwrap();
        }
        assert_eq!(cp.session().step_counts()["s"], 4);
        cp.session().zero_step_counts();
        assert!(cp.session().step_counts().is_empty());
    }

    #[test]
    fn nested_for_loops_stack_iterators() {
        let src = "fn main() { for i in [1, 2] { for j in [3] { branchpoint() } } }";
        let cp = start(src, vec![], Provider::new(0));
        assert_eq!(cp.frame().iterables.len(), 2);
        let empty = start("fn main() { for i in [] { branchpoint() }; branchpoint() }", vec![], Provider::new(0));
        assert_eq!(empty.frame().iterables.len(), 0);
    }

    #[test]
    fn searchover_yields_through_callee() {
        let src =
            "fn helper(x) { branchpoint(name=\"in\"); return x + 1 } fn main() { r = searchover(helper(1)); return r }";
        let cp = start(src, vec![], Provider::new(0));
        assert_eq!(cp.site_name(), "in");
        assert_eq!(cp.frame().depth(), 2);
        assert_eq!(cp.step(None).unwrap().return_value().unwrap(), Value::Int(2));
    }

    #[test]
    fn recursive_searchover_nests() {
        let src = "fn rec(n) { if n == 0 { return 0 }; branchpoint(); r = searchover(rec(n - 1)); return r + 1 }
                   fn main() { return searchover(rec(3)) }";
        let mut cp = start(src, vec![], Provider::new(0));
        let mut yields = 0;
        while cp.is_running() {
            yields += 1;
            cp = cp.step(None).unwrap();
        }
        assert_eq!(yields, 3);
        assert_eq!(cp.return_value().unwrap(), Value::Int(3));
    }

    #[test]
    fn return_inside_loop_unwinds_iterators() {
        let src = "fn h() { for i in [1, 2, 3] { branchpoint(); if i == 2 { return i } } } fn main() { x = searchover(h()); branchpoint(); return x }";
        let mut cp = start(src, vec![], Provider::new(0));
        for _ in 0..2 {
            cp = cp.step(None).unwrap();
        }
        assert_eq!(cp.frame().depth(), 1);
        assert!(cp.frame().iterables.is_empty());
        assert_eq!(cp.step(None).unwrap().return_value().unwrap(), Value::Int(2));
    }

    #[test]
    fn nocopy_memory_is_shared_across_siblings() {
        let src = "fn main() { nocopy fb; fb = []; branchpoint(); n = len(fb); push(fb, 1); branchpoint(); return n }";
        let cp = start(src, vec![], Provider::new(0));
        let seen: Vec<_> = (0..3).map(|_| get(&cp.step(None).unwrap(), "n")).collect();
        assert_eq!(seen, vec![Value::Int(0), Value::Int(1), Value::Int(2)]);
    }
}
