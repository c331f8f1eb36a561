//! Direct evaluation of branchpoint-free code: expressions, plain statements,
//! and plain function calls.

use std::collections::BTreeMap;

use super::builtins;
use super::info::{Info, Score};
use super::scoredb::ScoreHandle;
use super::session::Session;
use super::stack;
use super::value::{self, Value};
use crate::cps::CompiledSpace;
use crate::error::RuntimeError;
use crate::lang::{
    is_builtin, BinOp, Callback, Expr, ExprKind, InfoOp, Kwarg, LValue, Lifted, Literal, Primitive, Stmt, StmtKind,
    UnOp,
};

use super::frame::Frame;

/// Retries allowed by a `protect` that does not name its own limit.
pub const DEFAULT_MAX_RETRIES: u64 = 3;
const MAX_CALL_DEPTH: usize = 200;

/// Why evaluation stopped early.
#[derive(Debug, Clone, PartialEq)]
pub enum Fault {
    Error(RuntimeError),
    /// A protected expression raised its tag; the step must be replayed.
    Retry {
        site: usize,
        tag: String,
        max_retries: u64,
    },
}

impl From<RuntimeError> for Fault {
    fn from(e: RuntimeError) -> Self {
        Fault::Error(e)
    }
}

/// How a statement sequence finished.
#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    Normal,
    Break,
    Continue,
    Return(Value),
    Finish { value: Value, killed: bool },
}

pub type Res<T> = Result<T, Fault>;

/// Evaluation context for one attempt of one transition.
pub struct Exec<'a> {
    pub space: &'a CompiledSpace,
    pub session: &'a Session,
    pub info: &'a mut Info,
    pub step_id: u64,
    /// Group-score submissions made by this attempt.
    pub group_handles: Vec<ScoreHandle>,
    depth: usize,
}

fn err<T>(tag: &str, msg: impl Into<String>) -> Res<T> {
    Err(Fault::Error(RuntimeError::new(tag, msg)))
}

impl<'a> Exec<'a> {
    pub fn new(space: &'a CompiledSpace, session: &'a Session, info: &'a mut Info, step_id: u64) -> Self {
        Exec { space, session, info, step_id, group_handles: Vec::new(), depth: 0 }
    }

    pub fn eval(&mut self, e: &Expr, frame: &mut Frame) -> Res<Value> {
        stack::probe();
        Ok(match &e.kind {
            ExprKind::Literal(l) => match l {
                Literal::Null => Value::Null,
                Literal::Bool(b) => Value::Bool(*b),
                Literal::Int(i) => Value::Int(*i),
                Literal::Float(x) => Value::Float(*x),
                Literal::Str(s) => Value::str(s),
            },
            ExprKind::Name(n) => self.lookup(n, frame)?,
            ExprKind::Temp(k) => match frame.tmp.get(k) {
                Some(v) => v.clone(),
                None => return err("InternalError", format!("{k} read before assignment")),
            },
            ExprKind::Binary { op: BinOp::And, lhs, rhs } => {
                Value::Bool(self.eval(lhs, frame)?.truthy() && self.eval(rhs, frame)?.truthy())
            }
            ExprKind::Binary { op: BinOp::Or, lhs, rhs } => {
                Value::Bool(self.eval(lhs, frame)?.truthy() || self.eval(rhs, frame)?.truthy())
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let a = self.eval(lhs, frame)?;
                let b = self.eval(rhs, frame)?;
                binary(*op, &a, &b)?
            }
            ExprKind::Unary { op: UnOp::Neg, operand } => value::neg(&self.eval(operand, frame)?)?,
            ExprKind::Unary { op: UnOp::Not, operand } => Value::Bool(!self.eval(operand, frame)?.truthy()),
            ExprKind::Call { callee, args } => {
                let args = self.eval_list(args, frame)?;
                self.call(callee, args, frame)?
            }
            ExprKind::Index { base, index } => {
                let b = self.eval(base, frame)?;
                let i = self.eval(index, frame)?;
                value::index(&b, &i)?
            }
            ExprKind::List(items) => Value::list(self.eval_list(items, frame)?),
            ExprKind::Map(entries) => {
                let mut m = BTreeMap::new();
                for (k, v) in entries {
                    let key = match self.eval(k, frame)? {
                        Value::Str(s) => s.to_string(),
                        other => return err("TypeError", format!("map key must be str, not {}", other.type_name())),
                    };
                    let val = self.eval(v, frame)?;
                    m.insert(key, val);
                }
                Value::map(m)
            }
            ExprKind::Prim(Primitive::Perform { op, args, kwargs }) => {
                let mut args = self.eval_list(args, frame)?;
                if !kwargs.is_empty() {
                    args.push(Value::map(self.eval_kwargs(kwargs, frame)?));
                }
                self.session.provider().call(op, args, e.span.start)?
            }
            ExprKind::Prim(p) => {
                return err("InternalError", format!("{} evaluated outside its normalized position", p.name()))
            }
        })
    }

    pub fn eval_list(&mut self, items: &[Expr], frame: &mut Frame) -> Res<Vec<Value>> {
        items.iter().map(|e| self.eval(e, frame)).collect()
    }

    pub fn eval_kwargs(&mut self, kwargs: &[Kwarg], frame: &mut Frame) -> Res<BTreeMap<String, Value>> {
        let mut out = BTreeMap::new();
        for k in kwargs {
            let v = self.eval(&k.value, frame)?;
            out.insert(k.name.clone(), v);
        }
        Ok(out)
    }

    fn lookup(&self, name: &str, frame: &Frame) -> Res<Value> {
        if let Some(v) = frame.locals.get(name) {
            return Ok(v.clone());
        }
        if self.space.function(name).is_some() {
            return Ok(Value::FnRef(name.into()));
        }
        err("NameError", format!("name `{name}` is not defined"))
    }

    fn call(&mut self, callee: &str, args: Vec<Value>, frame: &Frame) -> Res<Value> {
        if is_builtin(callee) {
            return Ok(builtins::call(callee, args)?);
        }
        let target = match frame.locals.get(callee) {
            Some(Value::FnRef(f)) => f.to_string(),
            _ => callee.to_string(),
        };
        self.call_function(&target, args)
    }

    /// Runs a branchpoint-free function to completion.
    pub fn call_function(&mut self, name: &str, args: Vec<Value>) -> Res<Value> {
        let Some(f) = self.space.function(name) else {
            return err("NameError", format!("function `{name}` is not defined"));
        };
        if f.params.len() != args.len() {
            return err("TypeError", format!("{name}() takes {} arguments, got {}", f.params.len(), args.len()));
        }
        if self.depth >= MAX_CALL_DEPTH {
            return err("RecursionError", format!("call depth exceeded {MAX_CALL_DEPTH}"));
        }
        let mut frame = Frame::new(name, f.params.iter().cloned().zip(args).collect());
        self.depth += 1;
        let out = self.exec_block(&f.body, &mut frame);
        self.depth -= 1;
        match out? {
            Signal::Return(v) | Signal::Finish { value: v, killed: false } => Ok(v),
            Signal::Normal => Ok(Value::Null),
            other => err("InternalError", format!("unexpected {other:?} leaving `{name}`")),
        }
    }

    pub fn exec_block(&mut self, body: &[Stmt], frame: &mut Frame) -> Res<Signal> {
        for s in body {
            match self.exec(s, frame)? {
                Signal::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Signal::Normal)
    }

    pub fn assign(&mut self, target: &LValue, value: Value, path: Vec<Value>, frame: &mut Frame) -> Res<()> {
        let Some((last, init)) = path.split_last() else {
            frame.locals.insert(target.name.clone(), value);
            return Ok(());
        };
        let mut base = match frame.locals.get(&target.name) {
            Some(v) => v.clone(),
            None => return err("NameError", format!("name `{}` is not defined", target.name)),
        };
        for idx in init {
            base = value::index(&base, idx)?;
        }
        Ok(value::set_index(&base, last, value)?)
    }

    /// Executes one statement that contains no branchpoint or searchover.
    pub fn exec(&mut self, s: &Stmt, frame: &mut Frame) -> Res<Signal> {
        stack::probe();
        match &s.kind {
            StmtKind::Assign { target, value } => {
                let path = self.eval_list(&target.path, frame)?;
                let v = self.eval(value, frame)?;
                self.assign(target, v, path, frame)?;
            }
            StmtKind::NoCopy(n) => {
                self.info.nocopy.insert(n.clone());
            }
            StmtKind::NeedsCopy(n) => {
                self.info.nocopy.remove(n);
            }
            StmtKind::If { cond, then_body, else_body } => {
                if self.eval(cond, frame)?.truthy() {
                    return self.exec_arm(then_body, frame);
                } else if let Some(e) = else_body {
                    return self.exec_arm(e, frame);
                }
            }
            StmtKind::While { cond, body } => {
                while self.eval(cond, frame)?.truthy() {
                    match self.exec_block(body, frame)? {
                        Signal::Break => break,
                        Signal::Normal | Signal::Continue => {}
                        other => return Ok(other),
                    }
                }
            }
            StmtKind::For { var, iter, body } => {
                let items = self.eval(iter, frame)?.iter_items()?;
                for item in items {
                    frame.locals.insert(var.clone(), item);
                    match self.exec_block(body, frame)? {
                        Signal::Break => break,
                        Signal::Normal | Signal::Continue => {}
                        other => return Ok(other),
                    }
                }
            }
            StmtKind::Break | StmtKind::Callback(Callback::Break) => return Ok(Signal::Break),
            StmtKind::Continue | StmtKind::Callback(Callback::Continue) => return Ok(Signal::Continue),
            StmtKind::Return(e) | StmtKind::Callback(Callback::Return(e)) => {
                let v = self.eval_opt(e.as_ref(), frame)?;
                return Ok(Signal::Return(v));
            }
            StmtKind::Callback(Callback::IfElse) => {}
            StmtKind::Callback(Callback::Finish { value, killed }) => {
                let v = self.eval_opt(value.as_ref(), frame)?;
                return Ok(Signal::Finish { value: v, killed: *killed });
            }
            StmtKind::Expr(e) => {
                self.eval(e, frame)?;
            }
            StmtKind::Info(op) => self.info_op(op, frame)?,
            StmtKind::Lift { slot, prim } => {
                let v = match prim {
                    Lifted::Choices(e) => Value::list(self.eval(e, frame)?.iter_items()?),
                    Lifted::Protect { expr, tag, max_retries } => {
                        let max_retries = match max_retries {
                            None => DEFAULT_MAX_RETRIES,
                            Some(m) => match self.eval(m, frame)? {
                                Value::Int(n) if n >= 0 => n as u64,
                                other => {
                                    return err(
                                        "TypeError",
                                        format!("max_retries must be a non-negative int, not {other}"),
                                    )
                                }
                            },
                        };
                        match self.eval(expr, frame) {
                            Err(Fault::Error(e)) if e.tag == *tag => {
                                return Err(Fault::Retry { site: s.span.start, tag: tag.clone(), max_retries })
                            }
                            other => other?,
                        }
                    }
                    Lifted::Branchpoint { .. } | Lifted::Searchover { .. } => {
                        return err("InternalError", "branchpoint reached the direct evaluator")
                    }
                };
                frame.tmp.insert(*slot, v);
            }
            StmtKind::ClearTemps => frame.tmp.clear(),
        }
        Ok(Signal::Normal)
    }

    fn exec_arm(&mut self, body: &[Stmt], frame: &mut Frame) -> Res<Signal> {
        self.exec_block(body, frame)
    }

    fn eval_opt(&mut self, e: Option<&Expr>, frame: &mut Frame) -> Res<Value> {
        match e {
            Some(e) => self.eval(e, frame),
            None => Ok(Value::Null),
        }
    }

    fn info_op(&mut self, op: &InfoOp, frame: &mut Frame) -> Res<()> {
        match op {
            InfoOp::EarlyStop => self.session.set_early_stop(self.step_id),
            InfoOp::NoCopyAdd(n) => {
                self.info.nocopy.insert(n.clone());
            }
            InfoOp::NoCopyRemove(n) => {
                self.info.nocopy.remove(n);
            }
            InfoOp::OptionalReturn(e) => self.info.optional_rv = Some(self.eval(e, frame)?),
            InfoOp::Costs(kw) => {
                for k in kw {
                    let v = self.eval(&k.value, frame)?;
                    let Some(n) = v.as_num() else {
                        return err("TypeError", format!("cost `{}` must be a number, not {}", k.name, v.type_name()));
                    };
                    let slot = self.info.costs.entry(k.name.clone()).or_insert(value::Num::Int(0));
                    *slot = *slot + n;
                }
            }
            InfoOp::Score(e) => {
                let v = self.eval(e, frame)?;
                let Some(n) = v.as_num() else {
                    return err("TypeError", format!("score must be a number, not {}", v.type_name()));
                };
                self.info.score = Score::Resolved(n);
            }
            InfoOp::ScoreGroup { evaluator, target, label } => {
                let t = self.eval(target, frame)?;
                let l = self.eval(label, frame)?;
                let h = self.session.scores().submit_group(evaluator, t, &l);
                self.group_handles.push(h);
                self.info.score = Score::Pending(h);
            }
        }
        Ok(())
    }
}

pub fn binary(op: BinOp, a: &Value, b: &Value) -> Result<Value, RuntimeError> {
    use std::cmp::Ordering::*;
    Ok(match op {
        BinOp::Add => value::add(a, b)?,
        BinOp::Sub => value::sub(a, b)?,
        BinOp::Mul => value::mul(a, b)?,
        BinOp::Div => value::div(a, b)?,
        BinOp::Rem => value::rem(a, b)?,
        BinOp::Eq => Value::Bool(a == b),
        BinOp::Ne => Value::Bool(a != b),
        BinOp::Lt => Value::Bool(value::order("<", a, b)? == Less),
        BinOp::Le => Value::Bool(value::order("<=", a, b)? != Greater),
        BinOp::Gt => Value::Bool(value::order(">", a, b)? == Greater),
        BinOp::Ge => Value::Bool(value::order(">=", a, b)? != Less),
        BinOp::And => Value::Bool(a.truthy() && b.truthy()),
        BinOp::Or => Value::Bool(a.truthy() || b.truthy()),
    })
}

/// Resolves every dirty group score by calling its evaluator function.
pub fn flush_scores(space: &CompiledSpace, session: &Session) -> Result<usize, RuntimeError> {
    let pending = session.scores().take_dirty();
    let mut n = 0;
    for g in pending {
        let mut info = Info::default();
        let mut exec = Exec::new(space, session, &mut info, session.steps_issued());
        let out = match exec.call_function(&g.evaluator, vec![Value::list(g.targets.clone())]) {
            Ok(v) => v,
            Err(Fault::Error(e)) => return Err(super::scoredb::group_eval_error(e)),
            Err(Fault::Retry { tag, .. }) => {
                return Err(RuntimeError::new("GroupEvalError", format!("unhandled {tag}")))
            }
        };
        n += session.scores().apply(&g, &out)?;
    }
    Ok(n)
}
