use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use parking_lot::RwLock;

use super::value::Value;
use crate::cps::BlockId;
use crate::lang::TempKey;

/// A `for` loop's materialized sequence and the index of the next element.
#[derive(Debug, Clone)]
pub struct IterState {
    pub items: Vec<Value>,
    pub pos: usize,
}

/// Activation record of one workflow-function call.
#[derive(Debug, Clone)]
pub struct Frame {
    pub func: Arc<str>,
    pub locals: BTreeMap<String, Value>,
    pub tmp: BTreeMap<TempKey, Value>,
    pub iterables: Vec<IterState>,
    /// Where the caller resumes and which of its temp slots receives the
    /// return value.
    pub ret: Option<(BlockId, TempKey)>,
    pub caller: Option<Box<Frame>>,
}

/// Cell identity -> copied value, so aliasing survives a deep copy.
type Memo = HashMap<usize, Value>;

fn cell_addr(v: &Value) -> Option<usize> {
    match v {
        Value::List(l) => Some(Arc::as_ptr(l) as *const () as usize),
        Value::Map(m) => Some(Arc::as_ptr(m) as *const () as usize),
        _ => None,
    }
}

fn deep_copy(v: &Value, memo: &mut Memo) -> Value {
    let Some(addr) = cell_addr(v) else { return v.clone() };
    if let Some(done) = memo.get(&addr) {
        return done.clone();
    }
    match v {
        Value::List(l) => {
            let cell = Arc::new(RwLock::new(Vec::new()));
            memo.insert(addr, Value::List(cell.clone()));
            let items: Vec<Value> = l.read().iter().map(|x| deep_copy(x, memo)).collect();
            *cell.write() = items;
            Value::List(cell)
        }
        Value::Map(m) => {
            let cell = Arc::new(RwLock::new(BTreeMap::new()));
            memo.insert(addr, Value::Map(cell.clone()));
            let entries: BTreeMap<_, _> = m.read().iter().map(|(k, x)| (k.clone(), deep_copy(x, memo))).collect();
            *cell.write() = entries;
            Value::Map(cell)
        }
        _ => unreachable!(),
    }
}

/// Deep copy of a single value with its internal aliasing preserved.
pub fn deep_clone(v: &Value) -> Value {
    deep_copy(v, &mut Memo::new())
}

impl Frame {
    pub fn new(func: &str, locals: BTreeMap<String, Value>) -> Frame {
        Frame { func: Arc::from(func), locals, tmp: BTreeMap::new(), iterables: Vec::new(), ret: None, caller: None }
    }

    /// Number of frames in the caller chain, this one included.
    pub fn depth(&self) -> usize {
        1 + self.caller.as_ref().map_or(0, |c| c.depth())
    }

    /// Deep copy of the whole frame chain. Cells bound to a `nocopy` name in
    /// any frame of the chain are shared with the original, as is every other
    /// reference to those cells.
    pub fn clone_branch(&self, nocopy: &BTreeSet<String>) -> Frame {
        let mut memo = Memo::new();
        if !nocopy.is_empty() {
            let mut f = Some(self);
            while let Some(frame) = f {
                for name in nocopy {
                    if let Some(v) = frame.locals.get(name) {
                        if let Some(addr) = cell_addr(v) {
                            memo.insert(addr, v.clone());
                        }
                    }
                }
                f = frame.caller.as_deref();
            }
        }
        self.copy_with(&mut memo)
    }

    fn copy_with(&self, memo: &mut Memo) -> Frame {
        Frame {
            func: self.func.clone(),
            locals: self.locals.iter().map(|(k, v)| (k.clone(), deep_copy(v, memo))).collect(),
            tmp: self.tmp.iter().map(|(k, v)| (*k, deep_copy(v, memo))).collect(),
            iterables: self
                .iterables
                .iter()
                .map(|it| IterState { items: it.items.iter().map(|v| deep_copy(v, memo)).collect(), pos: it.pos })
                .collect(),
            ret: self.ret,
            caller: self.caller.as_ref().map(|c| Box::new(c.copy_with(memo))),
        }
    }
}
