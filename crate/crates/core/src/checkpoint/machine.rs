//! Trampoline driving the block graph. Each block hands back the next block
//! id instead of calling it, so stack depth stays constant across loop
//! iterations and call/return transitions.

use std::collections::BTreeMap;

use crate::cps::{BlockId, Op, SiteId, Term};
use crate::error::RuntimeError;
use crate::lang::TempKey;
use crate::runtime::eval::{Exec, Fault, Res, Signal};
use crate::runtime::frame::{Frame, IterState};
use crate::runtime::{stack, Value};

#[derive(Debug, Clone)]
pub enum Outcome {
    Yield {
        site: SiteId,
        slot: TempKey,
        rest: BlockId,
        params: BTreeMap<String, Value>,
        /// Temp slot holding the materialized candidates of a `choose` site.
        choices: Option<(TempKey, usize)>,
    },
    Done {
        value: Value,
        killed: bool,
    },
}

fn internal(msg: impl Into<String>) -> Fault {
    Fault::Error(RuntimeError::new("InternalError", msg))
}

/// Pops the current frame into its caller, delivering `v` into the caller's
/// temp slot. Returns the block to resume, or `None` at the outermost frame.
fn return_to_caller(frame: &mut Frame, v: Value) -> Option<BlockId> {
    let (resume, slot) = frame.ret?;
    let caller = frame.caller.take()?;
    *frame = *caller;
    frame.tmp.insert(slot, v);
    Some(resume)
}

enum Next {
    Jump(BlockId),
    Stop(Outcome),
}

fn finish(frame: &mut Frame, value: Value, killed: bool) -> Next {
    if !killed {
        if let Some(b) = return_to_caller(frame, value.clone()) {
            return Next::Jump(b);
        }
    }
    frame.iterables.clear();
    frame.tmp.clear();
    Next::Stop(Outcome::Done { value, killed })
}

/// Runs from `start` until the next branchpoint or the end of the program.
pub fn run(exec: &mut Exec<'_>, frame: &mut Frame, start: BlockId) -> Res<Outcome> {
    let space = exec.space;
    let mut cur = start;
    loop {
        stack::probe();
        let block = space.block(cur);
        let mut next = None;
        for op in &block.ops {
            match op {
                Op::Exec(s) => match exec.exec(s, frame)? {
                    Signal::Normal => {}
                    Signal::Break => {
                        next = Some(Next::Jump(block.on_break.ok_or_else(|| internal("break without a target"))?));
                        break;
                    }
                    Signal::Continue => {
                        next =
                            Some(Next::Jump(block.on_continue.ok_or_else(|| internal("continue without a target"))?));
                        break;
                    }
                    Signal::Return(v) => {
                        next = Some(finish(frame, v, false));
                        break;
                    }
                    Signal::Finish { value, killed } => {
                        next = Some(finish(frame, value, killed));
                        break;
                    }
                },
                Op::IterPush(e) => {
                    let items = exec.eval(e, frame)?.iter_items()?;
                    frame.iterables.push(IterState { items, pos: 0 });
                }
                Op::IterPop => {
                    frame.iterables.pop();
                }
            }
        }
        let next = match next {
            Some(n) => n,
            None => match &block.term {
                Term::Tail(b) => Next::Jump(*b),
                Term::Branch { cond, then, els } => {
                    Next::Jump(if exec.eval(cond, frame)?.truthy() { *then } else { *els })
                }
                Term::IterNext { var, body, exit } => {
                    let it = frame.iterables.last_mut().ok_or_else(|| internal("iterator stack is empty"))?;
                    if it.pos < it.items.len() {
                        let item = it.items[it.pos].clone();
                        it.pos += 1;
                        frame.locals.insert(var.clone(), item);
                        Next::Jump(*body)
                    } else {
                        frame.iterables.pop();
                        Next::Jump(*exit)
                    }
                }
                Term::Yield { site, slot, kwargs, choices, rest } => {
                    let params = exec.eval_kwargs(kwargs, frame)?;
                    let choices = match choices {
                        None => None,
                        Some(key) => match frame.tmp.get(key) {
                            Some(Value::List(l)) => Some((*key, l.read().len())),
                            _ => return Err(internal("choices were not materialized")),
                        },
                    };
                    Next::Stop(Outcome::Yield { site: *site, slot: *slot, rest: *rest, params, choices })
                }
                Term::Call { callee, args, slot, resume } => {
                    let args = exec.eval_list(args, frame)?;
                    let f = space.function(callee).ok_or_else(|| internal(format!("unknown function {callee}")))?;
                    let entry = space.entry_block(callee).expect("function has an entry block");
                    let mut callee_frame = Frame::new(callee, f.params.iter().cloned().zip(args).collect());
                    callee_frame.ret = Some((*resume, *slot));
                    let caller = std::mem::replace(frame, callee_frame);
                    frame.caller = Some(Box::new(caller));
                    Next::Jump(entry)
                }
                Term::Return(e) => {
                    let v = match e {
                        Some(e) => exec.eval(e, frame)?,
                        None => Value::Null,
                    };
                    finish(frame, v, false)
                }
                Term::Finish { value, killed } => {
                    let v = match value {
                        Some(e) => exec.eval(e, frame)?,
                        None => Value::Null,
                    };
                    finish(frame, v, *killed)
                }
            },
        };
        match next {
            Next::Jump(b) => cur = b,
            Next::Stop(o) => return Ok(o),
        }
    }
}
