//! CPS conversion of normalized functions into a defunctionalized graph of
//! continuation blocks. Every transition between blocks is a tail position;
//! the trampoline in `checkpoint::machine` drives them with constant stack.

mod emit;

use std::collections::HashMap;

use crate::error::{CompileError, FrontendError};
use crate::lang::{
    parse_source, stmt_has_prim, walk_stmts, Callback, Expr, ExprKind, FunctionDef, Kwarg, Lifted, Literal, Span, Stmt,
    StmtKind, TempKey,
};
use crate::preprocess::{preprocess, NormalizedAst};

pub use emit::emit;

pub type BlockId = usize;
pub type SiteId = usize;

#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    /// A branchpoint-free statement run by the direct evaluator.
    Exec(Stmt),
    IterPush(Expr),
    IterPop,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Tail(BlockId),
    Branch {
        cond: Expr,
        then: BlockId,
        els: BlockId,
    },
    /// Binds the next element of the innermost iterator, or pops it and
    /// continues at `exit` when exhausted.
    IterNext {
        var: String,
        body: BlockId,
        exit: BlockId,
    },
    Yield {
        site: SiteId,
        slot: TempKey,
        kwargs: Vec<Kwarg>,
        choices: Option<TempKey>,
        rest: BlockId,
    },
    Call {
        callee: String,
        args: Vec<Expr>,
        slot: TempKey,
        resume: BlockId,
    },
    Return(Option<Expr>),
    Finish {
        value: Option<Expr>,
        killed: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub label: String,
    pub ops: Vec<Op>,
    pub term: Term,
    /// Targets for break/continue signals raised by `Exec` ops.
    pub on_break: Option<BlockId>,
    pub on_continue: Option<BlockId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub id: SiteId,
    pub func: String,
    /// Literal `name=` argument, if any.
    pub name: Option<String>,
    pub span: Span,
    pub is_choose: bool,
}

impl Site {
    /// Key under which session step counts are recorded.
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("bp#{}", self.id))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledSpace {
    pub functions: Vec<FunctionDef>,
    pub entries: Vec<BlockId>,
    pub blocks: Vec<Block>,
    pub sites: Vec<Site>,
    pub entry: Option<String>,
    fn_index: HashMap<String, usize>,
}

impl CompiledSpace {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.fn_index.get(name).map(|&i| &self.functions[i])
    }

    pub fn entry_block(&self, name: &str) -> Option<BlockId> {
        self.fn_index.get(name).map(|&i| self.entries[i])
    }

    pub fn block(&self, id: BlockId) -> &Block {
        &self.blocks[id]
    }
}

/// Parses, validates, normalizes and compiles `text`.
pub fn compile_source(path: &str, text: &str, entry: Option<&str>) -> Result<CompiledSpace, FrontendError> {
    let program = parse_source(path, text)?;
    Ok(compile(&preprocess(&program, entry))?)
}

/// Contains a site that suspends execution: a branchpoint or a searchover call.
pub fn is_bearing(stmt: &Stmt) -> bool {
    let mut found = false;
    walk_stmts(std::slice::from_ref(stmt), &mut |s| {
        found |= matches!(s.kind, StmtKind::Lift { prim: Lifted::Branchpoint { .. } | Lifted::Searchover { .. }, .. });
    });
    found
}

#[derive(Clone, Copy, Default)]
struct Ctx {
    brk: Option<BlockId>,
    cont: Option<BlockId>,
    join: Option<BlockId>,
}

struct Compiler<'a> {
    blocks: Vec<Block>,
    sites: Vec<Site>,
    site_of: HashMap<*const Stmt, SiteId>,
    fn_index: &'a HashMap<String, usize>,
    functions: &'a [FunctionDef],
    func: String,
    counter: usize,
}

pub fn compile(ast: &NormalizedAst) -> Result<CompiledSpace, CompileError> {
    let fn_index: HashMap<String, usize> = ast.functions.iter().enumerate().map(|(i, f)| (f.name.clone(), i)).collect();
    let mut c = Compiler {
        blocks: Vec::new(),
        sites: Vec::new(),
        site_of: HashMap::new(),
        fn_index: &fn_index,
        functions: &ast.functions,
        func: String::new(),
        counter: 0,
    };
    for f in &ast.functions {
        walk_stmts(&f.body, &mut |s| {
            if let StmtKind::Lift { prim: Lifted::Branchpoint { kwargs, choices }, .. } = &s.kind {
                let name = kwargs.iter().find(|k| k.name == "name").and_then(|k| match &k.value.kind {
                    ExprKind::Literal(Literal::Str(s)) => Some(s.clone()),
                    _ => None,
                });
                let id = c.sites.len();
                c.site_of.insert(s as *const Stmt, id);
                c.sites.push(Site { id, func: f.name.clone(), name, span: s.span, is_choose: choices.is_some() });
            }
        });
    }
    let mut entries = Vec::new();
    for f in &ast.functions {
        c.func = f.name.clone();
        c.counter = 0;
        entries.push(c.seq(&f.body, Ctx::default(), None)?);
    }
    Ok(CompiledSpace {
        functions: ast.functions.clone(),
        entries,
        blocks: c.blocks,
        sites: c.sites,
        entry: ast.entry.clone(),
        fn_index,
    })
}

impl<'a> Compiler<'a> {
    fn label(&mut self, kind: Option<&str>) -> String {
        match kind {
            None => self.func.clone(),
            Some(k) if k.starts_with("bp#") => format!("{}:{k}", self.func),
            Some(k) => {
                self.counter += 1;
                format!("{}:{k}{}", self.func, self.counter)
            }
        }
    }

    fn new_block(&mut self, label: String, ctx: Ctx) -> BlockId {
        self.blocks.push(Block {
            label,
            ops: Vec::new(),
            term: Term::Return(None),
            on_break: ctx.brk,
            on_continue: ctx.cont,
        });
        self.blocks.len() - 1
    }

    fn missing(span: Span, what: &str) -> CompileError {
        CompileError { span, message: format!("{what} has no enclosing target") }
    }

    /// A suffix consisting of a single jump marker compiles to its target.
    fn direct_target(stmts: &[Stmt], ctx: Ctx) -> Option<BlockId> {
        match stmts {
            [Stmt { kind: StmtKind::Callback(cb), .. }] => match cb {
                Callback::Continue => ctx.cont,
                Callback::Break => ctx.brk,
                Callback::IfElse => ctx.join,
                _ => None,
            },
            _ => None,
        }
    }

    fn seq(&mut self, stmts: &'a [Stmt], ctx: Ctx, kind: Option<&str>) -> Result<BlockId, CompileError> {
        if let Some(target) = Self::direct_target(stmts, ctx) {
            return Ok(target);
        }
        let label = self.label(kind);
        let id = self.new_block(label, ctx);
        let mut ops = Vec::new();
        let mut term = Term::Return(None);
        for (i, s) in stmts.iter().enumerate() {
            let rest = &stmts[i + 1..];
            match &s.kind {
                StmtKind::Callback(cb) => {
                    term = match cb {
                        Callback::Continue => Term::Tail(ctx.cont.ok_or_else(|| Self::missing(s.span, "continue"))?),
                        Callback::Break => Term::Tail(ctx.brk.ok_or_else(|| Self::missing(s.span, "break"))?),
                        Callback::IfElse => Term::Tail(ctx.join.ok_or_else(|| Self::missing(s.span, "if/else join"))?),
                        Callback::Return(e) => Term::Return(e.clone()),
                        Callback::Finish { value, killed } => Term::Finish { value: value.clone(), killed: *killed },
                    };
                    break;
                }
                _ if !is_bearing(s) => {
                    let mut unlifted = false;
                    walk_stmts(std::slice::from_ref(s), &mut |t| unlifted |= stmt_has_prim(t, &|p| p.is_liftable()));
                    if unlifted {
                        return Err(CompileError {
                            span: s.span,
                            message: "branchpoint in an unsupported position (expected a lifted temp slot)".into(),
                        });
                    }
                    ops.push(Op::Exec(s.clone()));
                }
                StmtKind::Lift { slot, prim: Lifted::Branchpoint { kwargs, choices } } => {
                    let site = self.site_of[&(s as *const Stmt)];
                    let rest = self.seq(rest, ctx, Some(&format!("bp#{site}")))?;
                    term = Term::Yield { site, slot: *slot, kwargs: kwargs.clone(), choices: *choices, rest };
                    break;
                }
                StmtKind::Lift { slot, prim: Lifted::Searchover { callee, args } } => {
                    if !self.fn_index.contains_key(callee) {
                        return Err(CompileError {
                            span: s.span,
                            message: format!("searchover target `{callee}` is not a defined function"),
                        });
                    }
                    let f = &self.functions[self.fn_index[callee]];
                    if f.params.len() != args.len() {
                        return Err(CompileError {
                            span: s.span,
                            message: format!("`{callee}` takes {} arguments", f.params.len()),
                        });
                    }
                    let resume = self.seq(rest, ctx, Some("ret"))?;
                    term = Term::Call { callee: callee.clone(), args: args.clone(), slot: *slot, resume };
                    break;
                }
                StmtKind::If { cond, then_body, else_body } => {
                    let join = self.seq(rest, ctx, Some("join"))?;
                    let arm = Ctx { join: Some(join), ..ctx };
                    let then = self.seq(then_body, arm, Some("then"))?;
                    let els = match else_body {
                        Some(e) => self.seq(e, arm, Some("else"))?,
                        None => join,
                    };
                    term = Term::Branch { cond: cond.clone(), then, els };
                    break;
                }
                StmtKind::While { cond, body } => {
                    let exit = self.seq(rest, ctx, Some("next"))?;
                    let label = self.label(Some("while"));
                    let header = self.new_block(label, ctx);
                    let body = self.seq(body, Ctx { brk: Some(exit), cont: Some(header), join: None }, Some("body"))?;
                    self.blocks[header].term = Term::Branch { cond: cond.clone(), then: body, els: exit };
                    term = Term::Tail(header);
                    break;
                }
                StmtKind::For { var, iter, body } => {
                    let exit = self.seq(rest, ctx, Some("next"))?;
                    let label = self.label(Some("pop"));
                    let pop = self.new_block(label, ctx);
                    self.blocks[pop].ops.push(Op::IterPop);
                    self.blocks[pop].term = Term::Tail(exit);
                    let label = self.label(Some("for"));
                    let header = self.new_block(label, ctx);
                    let body = self.seq(body, Ctx { brk: Some(pop), cont: Some(header), join: None }, Some("body"))?;
                    self.blocks[header].term = Term::IterNext { var: var.clone(), body, exit };
                    ops.push(Op::IterPush(iter.clone()));
                    term = Term::Tail(header);
                    break;
                }
                _ => {
                    return Err(CompileError {
                        span: s.span,
                        message: "branchpoint inside a construct that cannot suspend".into(),
                    })
                }
            }
        }
        self.blocks[id].ops = ops;
        self.blocks[id].term = term;
        Ok(id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(src: &str) -> CompiledSpace {
        compile_source("t.pan", src, Some("main")).unwrap()
    }

    #[test]
    fn branchpoint_free_entry_is_one_block() {
        let s = space("fn main() { x = 1; y = x + 1 }");
        assert_eq!(s.blocks.len(), 1);
        assert_eq!(s.blocks[0].ops.len(), 2);
        assert!(matches!(s.blocks[0].term, Term::Finish { value: None, killed: false }));
    }

    #[test]
    fn concat_yields_then_rest() {
        let s = space("fn main() { x = 1; branchpoint(); y = x + 1 }");
        let entry = &s.blocks[s.entry_block("main").unwrap()];
        let Term::Yield { site, rest, .. } = &entry.term else { panic!("{:?}", entry.term) };
        assert_eq!(*site, 0);
        assert_eq!(s.blocks[*rest].label, "main:bp#0");
        assert!(matches!(s.blocks[*rest].term, Term::Finish { .. }));
    }

    #[test]
    fn site_table_is_in_source_order() {
        let s = space("fn h() { branchpoint(name=\"inner\") } fn main() { branchpoint(name=\"a\"); x = choose([1, 2]); searchover(h()) }");
        let names: Vec<_> = s.sites.iter().map(|x| (x.func.as_str(), x.label(), x.is_choose)).collect();
        assert_eq!(
            names,
            vec![("h", "inner".to_string(), false), ("main", "a".into(), false), ("main", "bp#2".into(), true)]
        );
    }

    #[test]
    fn compile_is_deterministic() {
        let src = "fn main(n) { for i in range(n) { if i % 2 == 0 { branchpoint() } else { continue } } }";
        assert_eq!(space(src), space(src));
    }

    #[test]
    fn unlifted_branchpoint_is_rejected() {
        let p = crate::lang::parse_source("t.pan", "fn main() { x = branchpoint() }").unwrap();
        let raw = NormalizedAst { functions: p.functions, entry: None };
        assert!(compile(&raw).is_err());
    }
}
