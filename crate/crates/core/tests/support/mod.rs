//! Shared test helpers: a seeded PanScript program generator, a direct
//! AST interpreter used as an oracle, and small search oracles.

#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::Arc;

use pan::checkpoint::{Checkpoint, StepError};
use pan::cps::compile_source;
use pan::lang::{
    is_builtin, parse_source, BinOp, Expr, ExprKind, FunctionDef, Kwarg, Literal, Primitive, SourceProgram, Stmt,
    StmtKind, UnOp,
};
use pan::runtime::eval::binary;
use pan::runtime::info::add_costs;
use pan::runtime::{builtins, value, CallRecord, Num, Provider, Session, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Program generator

/// Emits random well-formed programs over int variables `a b c`, a list `xs`,
/// a plain helper and a branching helper. Primitives that the compiler
/// hoists only appear as the whole right-hand side of an assignment.
pub struct Gen {
    rng: ChaCha8Rng,
    out: String,
    indent: usize,
    loops: usize,
    depth: usize,
    fresh: usize,
    pub max_stmts: usize,
}

pub const HELPERS: &str = r#"fn helper(x) {
    if x > 5 {
        return x - 5
    }
    return x * 2
}

fn wf(x) {
    branchpoint(name="inner")
    y = perform("llm", x)
    return x + y
}
"#;

impl Gen {
    pub fn new(seed: u64) -> Self {
        Gen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            out: String::new(),
            indent: 0,
            loops: 0,
            depth: 0,
            fresh: 0,
            max_stmts: 6,
        }
    }

    pub fn program(mut self) -> String {
        self.out.push_str(HELPERS);
        self.out.push_str("\nfn main() {\n");
        self.indent = 1;
        for v in ["a", "b", "c"] {
            let n = self.rng.gen_range(0..10);
            self.line(&format!("{v} = {n}"));
        }
        self.line("xs = []");
        let n = self.rng.gen_range(2..=self.max_stmts);
        for _ in 0..n {
            self.stmt();
        }
        self.line("return [a, b, c, xs]");
        self.out.push_str("}\n");
        self.out
    }

    fn line(&mut self, s: &str) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn var(&mut self) -> &'static str {
        ["a", "b", "c"][self.rng.gen_range(0..3)]
    }

    fn int(&mut self, d: usize) -> String {
        let pick = if d == 0 { self.rng.gen_range(0..3) } else { self.rng.gen_range(0..9) };
        match pick {
            0 => self.rng.gen_range(0..10).to_string(),
            1 => self.var().to_string(),
            2 => "len(xs)".into(),
            3 => format!("({} + {})", self.int(d - 1), self.int(d - 1)),
            4 => format!("({} - {})", self.int(d - 1), self.int(d - 1)),
            5 => format!("({} * {})", self.int(d - 1), self.rng.gen_range(0..4)),
            6 => format!("({} % {})", self.int(d - 1), self.rng.gen_range(1..8)),
            7 => format!("max({}, {})", self.int(d - 1), self.int(d - 1)),
            _ => format!("helper({})", self.int(d - 1)),
        }
    }

    fn cond(&mut self, d: usize) -> String {
        match self.rng.gen_range(0..if d == 0 { 3 } else { 6 }) {
            0 => format!("{} < {}", self.int(1), self.int(1)),
            1 => format!("{} == {}", self.int(1), self.int(1)),
            2 => format!("{} != {}", self.int(1), self.int(1)),
            3 => format!("({} && {})", self.cond(d - 1), self.cond(d - 1)),
            4 => format!("({} || {})", self.cond(d - 1), self.cond(d - 1)),
            _ => format!("!({})", self.cond(d - 1)),
        }
    }

    fn block(&mut self, head: &str, n: usize) {
        self.line(&format!("{head} {{"));
        self.indent += 1;
        self.depth += 1;
        for _ in 0..n {
            self.stmt();
        }
        self.depth -= 1;
        self.indent -= 1;
        self.line("}");
    }

    fn stmt(&mut self) {
        let nested = self.depth < 2;
        let kinds = if nested { 17 } else { 13 };
        match self.rng.gen_range(0..kinds) {
            0 | 1 => {
                let (v, e) = (self.var(), self.int(2));
                self.line(&format!("{v} = {e}"));
            }
            2 => {
                let e = self.int(1);
                self.line(&format!("xs = append(xs, {e})"));
            }
            3 => {
                let (v, e) = (self.var(), self.int(0));
                self.line(&format!("{v} = perform(\"llm\", {e})"));
            }
            4 => {
                let (v, e) = (self.var(), self.int(0));
                self.line(&format!("{v} = perform(\"tool\", {e}, mode=\"fast\")"));
            }
            5 => {
                let name = ["", "name=\"s\"", "branching=2"][self.rng.gen_range(0..3)];
                self.line(&format!("branchpoint({name})"));
            }
            6 => {
                let v = self.var();
                let items: Vec<String> = (0..self.rng.gen_range(1..4)).map(|_| self.int(1)).collect();
                self.line(&format!("{v} = choose([{}])", items.join(", ")));
            }
            7 => {
                let e = self.int(2);
                self.line(&format!("record_score({e})"));
            }
            8 => {
                let n = self.rng.gen_range(1..5);
                self.line(&format!("record_costs(tokens={n}, calls=1)"));
            }
            9 => {
                let (v, e) = (self.var(), self.int(1));
                self.line(&format!("{v} = searchover(wf({e}))"));
            }
            10 => {
                let (v, e) = (self.var(), self.int(0));
                self.line(&format!("{v} = protect(perform(\"llm\", {e}), \"ValueError\", 2)"));
            }
            11 => {
                let e = self.int(1);
                self.line(&format!("optional_return({e})"));
            }
            12 if self.loops > 0 => {
                let c = self.cond(1);
                let kw = if self.rng.gen_bool(0.5) { "break" } else { "continue" };
                self.line(&format!("if {c} {{"));
                self.indent += 1;
                self.line(kw);
                self.indent -= 1;
                self.line("}");
            }
            12 => self.line("xs = append(xs, len(xs))"),
            13 => {
                let c = self.cond(1);
                let n = self.rng.gen_range(1..3);
                self.block(&format!("if {c}"), n);
                if self.rng.gen_bool(0.5) {
                    self.indent_back_else();
                }
            }
            14 => {
                self.fresh += 1;
                let k = format!("k{}", self.fresh);
                let n = self.rng.gen_range(0..4);
                self.loops += 1;
                let body = self.rng.gen_range(1..3);
                self.block(&format!("for {k} in range({n})"), body);
                self.loops -= 1;
            }
            15 => {
                self.fresh += 1;
                let w = format!("w{}", self.fresh);
                let n = self.rng.gen_range(0..4);
                self.line(&format!("{w} = 0"));
                self.loops += 1;
                self.line(&format!("while {w} < {n} {{"));
                self.indent += 1;
                self.depth += 1;
                self.line(&format!("{w} = {w} + 1"));
                for _ in 0..self.rng.gen_range(1..3) {
                    self.stmt();
                }
                self.depth -= 1;
                self.indent -= 1;
                self.line("}");
                self.loops -= 1;
            }
            _ => {
                let c = self.cond(0);
                self.line(&format!("if {c} {{"));
                self.indent += 1;
                self.line("kill_branch(a)");
                self.indent -= 1;
                self.line("}");
            }
        }
    }

    /// Turns the `}` just written into `} else {` and emits an else body.
    fn indent_back_else(&mut self) {
        let trimmed = self.out.trim_end_matches('\n').len();
        self.out.truncate(trimmed);
        self.out.push_str(" else {\n");
        self.indent += 1;
        self.depth += 1;
        self.stmt();
        self.depth -= 1;
        self.indent -= 1;
        self.line("}");
    }
}

/// The provider every generated program runs against.
pub fn gen_provider(seed: u64) -> Provider {
    Provider::new(seed)
        .seeded("llm", (0..10).map(Value::Int).collect())
        .seeded("tool", (1..4).map(Value::Int).collect())
}

// ---------------------------------------------------------------------------
// Reference interpreter

#[derive(Debug, Clone, PartialEq)]
pub enum Ending {
    Returned(Value),
    Killed(Value),
    Error(String),
}

#[derive(Debug, Clone)]
pub struct Run {
    pub ending: Ending,
    pub locals: BTreeMap<String, Value>,
    pub score: Option<Num>,
    pub costs: BTreeMap<String, Num>,
    pub log: Vec<CallRecord>,
}

enum Flow {
    Normal,
    Break,
    Continue,
    Return(Value),
    Kill(Value),
}

type R<T> = Result<T, String>;

/// Walks the parsed program directly: branchpoints do nothing, `choose`
/// takes its first candidate, `searchover` is an ordinary call and
/// `protect` only evaluates its expression.
pub struct Reference<'p> {
    program: &'p SourceProgram,
    provider: Provider,
    score: Option<Num>,
    costs: BTreeMap<String, Num>,
    depth: usize,
}

impl<'p> Reference<'p> {
    pub fn run(program: &'p SourceProgram, entry: &str, args: Vec<Value>, provider: Provider) -> Run {
        let mut me = Reference { program, provider, score: None, costs: BTreeMap::new(), depth: 0 };
        let f = program.function(entry).expect("entry exists");
        let mut locals: BTreeMap<String, Value> = f.params.iter().cloned().zip(args).collect();
        let ending = match me.block(&f.body, &mut locals) {
            Ok(Flow::Return(v)) => Ending::Returned(v),
            Ok(Flow::Normal) => Ending::Returned(Value::Null),
            Ok(Flow::Kill(v)) => Ending::Killed(v),
            Ok(_) => Ending::Error("stray loop control".into()),
            Err(tag) => Ending::Error(tag),
        };
        Run { ending, locals, score: me.score, costs: me.costs, log: me.provider.log().to_vec() }
    }

    fn call(&mut self, f: &FunctionDef, args: Vec<Value>) -> R<Value> {
        if f.params.len() != args.len() {
            return Err("TypeError".into());
        }
        if self.depth >= 200 {
            return Err("RecursionError".into());
        }
        self.depth += 1;
        let mut locals = f.params.iter().cloned().zip(args).collect();
        let out = self.block(&f.body, &mut locals);
        self.depth -= 1;
        match out? {
            Flow::Return(v) => Ok(v),
            Flow::Normal => Ok(Value::Null),
            _ => Err("InternalError".into()),
        }
    }

    fn block(&mut self, body: &[Stmt], env: &mut BTreeMap<String, Value>) -> R<Flow> {
        for s in body {
            match self.stmt(s, env)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn stmt(&mut self, s: &Stmt, env: &mut BTreeMap<String, Value>) -> R<Flow> {
        match &s.kind {
            StmtKind::Assign { target, value } => {
                let mut path = Vec::new();
                for p in &target.path {
                    path.push(self.expr(p, env)?);
                }
                let v = self.expr(value, env)?;
                match path.split_last() {
                    None => {
                        env.insert(target.name.clone(), v);
                    }
                    Some((last, init)) => {
                        let mut base = env.get(&target.name).cloned().ok_or("NameError")?;
                        for i in init {
                            base = value::index(&base, i).map_err(|e| e.tag)?;
                        }
                        value::set_index(&base, last, v).map_err(|e| e.tag)?;
                    }
                }
            }
            StmtKind::NoCopy(_) | StmtKind::NeedsCopy(_) => {}
            StmtKind::If { cond, then_body, else_body } => {
                if self.expr(cond, env)?.truthy() {
                    return self.block(then_body, env);
                } else if let Some(e) = else_body {
                    return self.block(e, env);
                }
            }
            StmtKind::While { cond, body } => {
                while self.expr(cond, env)?.truthy() {
                    match self.block(body, env)? {
                        Flow::Break => break,
                        Flow::Normal | Flow::Continue => {}
                        other => return Ok(other),
                    }
                }
            }
            StmtKind::For { var, iter, body } => {
                for item in self.expr(iter, env)?.iter_items().map_err(|e| e.tag)? {
                    env.insert(var.clone(), item);
                    match self.block(body, env)? {
                        Flow::Break => break,
                        Flow::Normal | Flow::Continue => {}
                        other => return Ok(other),
                    }
                }
            }
            StmtKind::Break => return Ok(Flow::Break),
            StmtKind::Continue => return Ok(Flow::Continue),
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.expr(e, env)?,
                    None => Value::Null,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Expr(Expr { kind: ExprKind::Prim(p), .. }) if p.is_statement_only() => {
                return self.effect(p, env)
            }
            StmtKind::Expr(e) => {
                self.expr(e, env)?;
            }
            other => panic!("normalized-only statement in source program: {other:?}"),
        }
        Ok(Flow::Normal)
    }

    fn effect(&mut self, p: &Primitive, env: &mut BTreeMap<String, Value>) -> R<Flow> {
        match p {
            Primitive::RecordScore(e) => {
                let v = self.expr(e, env)?;
                self.score = Some(v.as_num().ok_or("TypeError")?);
            }
            Primitive::RecordCosts(kw) => {
                let mut add = BTreeMap::new();
                for Kwarg { name, value } in kw {
                    let v = self.expr(value, env)?;
                    add.insert(name.clone(), v.as_num().ok_or("TypeError")?);
                }
                add_costs(&mut self.costs, &add);
            }
            Primitive::OptionalReturn(e) => {
                self.expr(e, env)?;
            }
            Primitive::EarlyStop => {}
            Primitive::KillBranch(e) => {
                let v = match e {
                    Some(e) => self.expr(e, env)?,
                    None => Value::Null,
                };
                return Ok(Flow::Kill(v));
            }
            other => panic!("unsupported statement primitive {}", other.name()),
        }
        Ok(Flow::Normal)
    }

    fn expr(&mut self, e: &Expr, env: &mut BTreeMap<String, Value>) -> R<Value> {
        Ok(match &e.kind {
            ExprKind::Literal(l) => match l {
                Literal::Null => Value::Null,
                Literal::Bool(b) => Value::Bool(*b),
                Literal::Int(i) => Value::Int(*i),
                Literal::Float(x) => Value::Float(*x),
                Literal::Str(s) => Value::str(s),
            },
            ExprKind::Name(n) => match env.get(n) {
                Some(v) => v.clone(),
                None if self.program.function(n).is_some() => Value::FnRef(n.as_str().into()),
                None => return Err("NameError".into()),
            },
            ExprKind::Binary { op: BinOp::And, lhs, rhs } => {
                Value::Bool(self.expr(lhs, env)?.truthy() && self.expr(rhs, env)?.truthy())
            }
            ExprKind::Binary { op: BinOp::Or, lhs, rhs } => {
                Value::Bool(self.expr(lhs, env)?.truthy() || self.expr(rhs, env)?.truthy())
            }
            ExprKind::Binary { op, lhs, rhs } => {
                let a = self.expr(lhs, env)?;
                let b = self.expr(rhs, env)?;
                binary(*op, &a, &b).map_err(|e| e.tag)?
            }
            ExprKind::Unary { op: UnOp::Neg, operand } => value::neg(&self.expr(operand, env)?).map_err(|e| e.tag)?,
            ExprKind::Unary { op: UnOp::Not, operand } => Value::Bool(!self.expr(operand, env)?.truthy()),
            ExprKind::Call { callee, args } => {
                let mut vals = Vec::new();
                for a in args {
                    vals.push(self.expr(a, env)?);
                }
                if is_builtin(callee) {
                    builtins::call(callee, vals).map_err(|e| e.tag)?
                } else {
                    let name = match env.get(callee.as_str()) {
                        Some(Value::FnRef(f)) => f.to_string(),
                        _ => callee.clone(),
                    };
                    let f = self.program.function(&name).ok_or("NameError")?;
                    self.call(f, vals)?
                }
            }
            ExprKind::Index { base, index } => {
                let b = self.expr(base, env)?;
                let i = self.expr(index, env)?;
                value::index(&b, &i).map_err(|e| e.tag)?
            }
            ExprKind::List(items) => {
                let mut vals = Vec::new();
                for a in items {
                    vals.push(self.expr(a, env)?);
                }
                Value::list(vals)
            }
            ExprKind::Map(entries) => {
                let mut m = BTreeMap::new();
                for (k, v) in entries {
                    let Value::Str(k) = self.expr(k, env)? else { return Err("TypeError".into()) };
                    let v = self.expr(v, env)?;
                    m.insert(k.to_string(), v);
                }
                Value::map(m)
            }
            ExprKind::Temp(_) => panic!("temp in source program"),
            ExprKind::Prim(p) => match p {
                Primitive::Branchpoint { kwargs } => {
                    for k in kwargs {
                        self.expr(&k.value, env)?;
                    }
                    Value::Null
                }
                Primitive::Choose { choices, kwargs } => {
                    let items = self.expr(choices, env)?.iter_items().map_err(|e| e.tag)?;
                    for k in kwargs {
                        self.expr(&k.value, env)?;
                    }
                    items.into_iter().next().ok_or("NoChoices")?
                }
                Primitive::Searchover { callee, args } => {
                    let mut vals = Vec::new();
                    for a in args {
                        vals.push(self.expr(a, env)?);
                    }
                    let f = self.program.function(callee).ok_or("NameError")?;
                    self.call(f, vals)?
                }
                Primitive::Protect { expr, max_retries, .. } => {
                    if let Some(m) = max_retries {
                        self.expr(m, env)?;
                    }
                    self.expr(expr, env)?
                }
                Primitive::Perform { op, args, kwargs } => {
                    let mut vals = Vec::new();
                    for a in args {
                        vals.push(self.expr(a, env)?);
                    }
                    if !kwargs.is_empty() {
                        let mut m = BTreeMap::new();
                        for k in kwargs {
                            let v = self.expr(&k.value, env)?;
                            m.insert(k.name.clone(), v);
                        }
                        vals.push(Value::map(m));
                    }
                    self.provider.call(op, vals, e.span.start).map_err(|e| e.tag)?
                }
                other => panic!("{} used as a value", other.name()),
            },
        })
    }
}

/// Runs `entry` through the compiled engine, stepping each branchpoint once.
pub fn run_engine(text: &str, entry: &str, args: Vec<Value>, provider: Provider) -> Run {
    let space = Arc::new(compile_source("gen.pan", text, Some(entry)).expect("program compiles"));
    let session = Session::new(provider);
    let finish = |ending, cp: Option<&Checkpoint>| Run {
        ending,
        locals: cp.map(|c| c.frame().locals.clone()).unwrap_or_default(),
        score: cp.and_then(Checkpoint::score),
        costs: session.aggregate_costs(),
        log: session.call_log(),
    };
    let mut cp = match Checkpoint::start(space, entry, args, session.clone()) {
        Ok(cp) => cp,
        Err(StepError::Runtime(e)) => return finish(Ending::Error(e.tag), None),
        Err(e) => panic!("start failed: {e}"),
    };
    while cp.is_running() {
        cp = match cp.step(None) {
            Ok(c) => c,
            Err(StepError::Runtime(e)) => return finish(Ending::Error(e.tag), None),
            Err(e) => panic!("step failed: {e}"),
        };
    }
    let ending = if let Some(e) = cp.error() {
        Ending::Error(e.tag.clone())
    } else if let Some(v) = cp.killed_value() {
        Ending::Killed(v.clone())
    } else {
        Ending::Returned(cp.return_value().expect("finished branch has a value"))
    };
    finish(ending, Some(&cp))
}

pub fn parse(text: &str) -> SourceProgram {
    parse_source("gen.pan", text).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

// ---------------------------------------------------------------------------
// Search oracles

/// Single-source shortest path costs from `start` (None when unreachable).
pub fn dijkstra(n: usize, edges: &[(usize, usize, i64)], start: usize) -> Vec<Option<i64>> {
    let mut dist = vec![None; n];
    let mut heap = BinaryHeap::from([Reverse((0i64, start))]);
    while let Some(Reverse((d, u))) = heap.pop() {
        if dist[u].is_some() {
            continue;
        }
        dist[u] = Some(d);
        for &(a, b, w) in edges {
            if a == u && dist[b].is_none() {
                heap.push(Reverse((d + w, b)));
            }
        }
    }
    dist
}

/// Every assignment of one element from each list, in lexicographic order.
pub fn cartesian(lists: &[Vec<i64>]) -> Vec<Vec<i64>> {
    lists.iter().fold(vec![vec![]], |acc, l| {
        acc.iter().flat_map(|p| l.iter().map(move |x| [p.clone(), vec![*x]].concat())).collect()
    })
}
