//! Syntax tree shared by the parser and the preprocessing passes.
//!
//! One tree type covers both surface programs and their normalized form: the
//! `Callback`, `Info`, `Lift` and `ClearTemps` statement kinds and the `Temp`
//! expression are never produced by the parser, only by `preprocess`.

use std::fmt;

use super::Span;

#[derive(Debug, Clone, PartialEq)]
pub struct SourceProgram {
    pub path: String,
    pub text: String,
    pub functions: Vec<FunctionDef>,
}

impl SourceProgram {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

impl Stmt {
    pub fn new(kind: StmtKind, span: Span) -> Self {
        Stmt { kind, span }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Assign {
        target: LValue,
        value: Expr,
    },
    NoCopy(String),
    NeedsCopy(String),
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Option<Vec<Stmt>>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    For {
        var: String,
        iter: Expr,
        body: Vec<Stmt>,
    },
    Break,
    Continue,
    Return(Option<Expr>),
    Expr(Expr),
    Callback(Callback),
    Info(InfoOp),
    /// `tmp[slot] = <primitive>`; the only place a lifted primitive may live.
    Lift {
        slot: TempKey,
        prim: Lifted,
    },
    ClearTemps,
}

/// Terminal markers appended to every body during preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub enum Callback {
    Continue,
    Break,
    IfElse,
    Return(Option<Expr>),
    Finish { value: Option<Expr>, killed: bool },
}

/// Keyword primitives rewritten into updates of the per-branch info record.
#[derive(Debug, Clone, PartialEq)]
pub enum InfoOp {
    EarlyStop,
    NoCopyAdd(String),
    NoCopyRemove(String),
    OptionalReturn(Expr),
    Costs(Vec<Kwarg>),
    Score(Expr),
    ScoreGroup { evaluator: String, target: Expr, label: Expr },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Lifted {
    /// A branchpoint site. `choices` is set for desugared `choose`.
    Branchpoint {
        kwargs: Vec<Kwarg>,
        choices: Option<TempKey>,
    },
    /// Materializes the candidate list of a `choose` before its site.
    Choices(Expr),
    Searchover {
        callee: String,
        args: Vec<Expr>,
    },
    Protect {
        expr: Expr,
        tag: String,
        max_retries: Option<Expr>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TempKey {
    Slot(u32),
    Choices(u32),
}

impl fmt::Display for TempKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TempKey::Slot(i) => write!(f, "tmp[{i}]"),
            TempKey::Choices(i) => write!(f, "tmp[choices{i}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LValue {
    pub name: String,
    pub path: Vec<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Kwarg {
    pub name: String,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    pub fn lit(lit: Literal, span: Span) -> Self {
        Expr::new(ExprKind::Literal(lit), span)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Literal(Literal),
    Name(String),
    Temp(TempKey),
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Unary { op: UnOp, operand: Box<Expr> },
    Call { callee: String, args: Vec<Expr> },
    Index { base: Box<Expr>, index: Box<Expr> },
    List(Vec<Expr>),
    Map(Vec<(Expr, Expr)>),
    Prim(Primitive),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Primitive {
    Branchpoint { kwargs: Vec<Kwarg> },
    Choose { choices: Box<Expr>, kwargs: Vec<Kwarg> },
    RecordScore(Box<Expr>),
    RecordScoreGroup { evaluator: String, target: Box<Expr>, label: Box<Expr> },
    RecordCosts(Vec<Kwarg>),
    EarlyStop,
    KillBranch(Option<Box<Expr>>),
    OptionalReturn(Box<Expr>),
    Protect { expr: Box<Expr>, tag: String, max_retries: Option<Box<Expr>> },
    Searchover { callee: String, args: Vec<Expr> },
    Perform { op: String, args: Vec<Expr>, kwargs: Vec<Kwarg> },
}

impl Primitive {
    pub fn name(&self) -> &'static str {
        match self {
            Primitive::Branchpoint { .. } => "branchpoint",
            Primitive::Choose { .. } => "choose",
            Primitive::RecordScore(_) | Primitive::RecordScoreGroup { .. } => "record_score",
            Primitive::RecordCosts(_) => "record_costs",
            Primitive::EarlyStop => "early_stop",
            Primitive::KillBranch(_) => "kill_branch",
            Primitive::OptionalReturn(_) => "optional_return",
            Primitive::Protect { .. } => "protect",
            Primitive::Searchover { .. } => "searchover",
            Primitive::Perform { .. } => "perform",
        }
    }

    /// Primitives that must be hoisted into a temp slot before CPS conversion.
    pub fn is_liftable(&self) -> bool {
        matches!(
            self,
            Primitive::Branchpoint { .. }
                | Primitive::Choose { .. }
                | Primitive::Protect { .. }
                | Primitive::Searchover { .. }
        )
    }

    /// Primitives that are only legal as a whole expression statement.
    pub fn is_statement_only(&self) -> bool {
        matches!(
            self,
            Primitive::RecordScore(_)
                | Primitive::RecordScoreGroup { .. }
                | Primitive::RecordCosts(_)
                | Primitive::EarlyStop
                | Primitive::KillBranch(_)
                | Primitive::OptionalReturn(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl BinOp {
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 5,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "||",
            BinOp::And => "&&",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
}

/// Visits every expression nested in `expr`, including `expr` itself, in
/// pre-order.
pub fn walk_expr<'a>(expr: &'a Expr, f: &mut dyn FnMut(&'a Expr)) {
    f(expr);
    match &expr.kind {
        ExprKind::Literal(_) | ExprKind::Name(_) | ExprKind::Temp(_) => {}
        ExprKind::Binary { lhs, rhs, .. } => {
            walk_expr(lhs, f);
            walk_expr(rhs, f);
        }
        ExprKind::Unary { operand, .. } => walk_expr(operand, f),
        ExprKind::Call { args, .. } | ExprKind::List(args) => {
            args.iter().for_each(|a| walk_expr(a, f));
        }
        ExprKind::Index { base, index } => {
            walk_expr(base, f);
            walk_expr(index, f);
        }
        ExprKind::Map(entries) => {
            for (k, v) in entries {
                walk_expr(k, f);
                walk_expr(v, f);
            }
        }
        ExprKind::Prim(p) => match p {
            Primitive::Branchpoint { kwargs } | Primitive::RecordCosts(kwargs) => {
                kwargs.iter().for_each(|k| walk_expr(&k.value, f));
            }
            Primitive::Choose { choices, kwargs } => {
                walk_expr(choices, f);
                kwargs.iter().for_each(|k| walk_expr(&k.value, f));
            }
            Primitive::RecordScore(e) | Primitive::OptionalReturn(e) => walk_expr(e, f),
            Primitive::RecordScoreGroup { target, label, .. } => {
                walk_expr(target, f);
                walk_expr(label, f);
            }
            Primitive::EarlyStop => {}
            Primitive::KillBranch(e) => {
                if let Some(e) = e {
                    walk_expr(e, f);
                }
            }
            Primitive::Protect { expr, max_retries, .. } => {
                walk_expr(expr, f);
                if let Some(m) = max_retries {
                    walk_expr(m, f);
                }
            }
            Primitive::Searchover { args, .. } => args.iter().for_each(|a| walk_expr(a, f)),
            Primitive::Perform { args, kwargs, .. } => {
                args.iter().for_each(|a| walk_expr(a, f));
                kwargs.iter().for_each(|k| walk_expr(&k.value, f));
            }
        },
    }
}

/// Visits every statement in `body`, recursing into nested bodies.
pub fn walk_stmts<'a>(body: &'a [Stmt], f: &mut dyn FnMut(&'a Stmt)) {
    for stmt in body {
        f(stmt);
        match &stmt.kind {
            StmtKind::If { then_body, else_body, .. } => {
                walk_stmts(then_body, f);
                if let Some(e) = else_body {
                    walk_stmts(e, f);
                }
            }
            StmtKind::While { body, .. } | StmtKind::For { body, .. } => walk_stmts(body, f),
            _ => {}
        }
    }
}

/// The expressions directly owned by a statement (not those of nested bodies).
pub fn stmt_exprs(stmt: &Stmt) -> Vec<&Expr> {
    let mut out = Vec::new();
    match &stmt.kind {
        StmtKind::Assign { target, value } => {
            out.extend(target.path.iter());
            out.push(value);
        }
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => out.push(cond),
        StmtKind::For { iter, .. } => out.push(iter),
        StmtKind::Return(Some(e)) | StmtKind::Expr(e) => out.push(e),
        StmtKind::Callback(Callback::Return(Some(e))) => out.push(e),
        StmtKind::Callback(Callback::Finish { value: Some(e), .. }) => out.push(e),
        StmtKind::Info(op) => match op {
            InfoOp::OptionalReturn(e) | InfoOp::Score(e) => out.push(e),
            InfoOp::Costs(kw) => out.extend(kw.iter().map(|k| &k.value)),
            InfoOp::ScoreGroup { target, label, .. } => {
                out.push(target);
                out.push(label);
            }
            _ => {}
        },
        StmtKind::Lift { prim, .. } => match prim {
            Lifted::Branchpoint { kwargs, .. } => out.extend(kwargs.iter().map(|k| &k.value)),
            Lifted::Choices(e) => out.push(e),
            Lifted::Searchover { args, .. } => out.extend(args.iter()),
            Lifted::Protect { expr, max_retries, .. } => {
                out.push(expr);
                out.extend(max_retries.iter());
            }
        },
        _ => {}
    }
    out
}

/// True when any expression directly owned by `stmt` contains a primitive
/// matching `pred`.
pub fn stmt_has_prim(stmt: &Stmt, pred: &dyn Fn(&Primitive) -> bool) -> bool {
    stmt_exprs(stmt).into_iter().any(|e| expr_has_prim(e, pred))
}

pub fn expr_has_prim(expr: &Expr, pred: &dyn Fn(&Primitive) -> bool) -> bool {
    let mut found = false;
    walk_expr(expr, &mut |e| {
        if let ExprKind::Prim(p) = &e.kind {
            found |= pred(p);
        }
    });
    found
}

/// Direct subexpressions of `expr`, left to right.
pub fn expr_children_mut(expr: &mut Expr) -> Vec<&mut Expr> {
    let mut out: Vec<&mut Expr> = Vec::new();
    match &mut expr.kind {
        ExprKind::Literal(_) | ExprKind::Name(_) | ExprKind::Temp(_) => {}
        ExprKind::Binary { lhs, rhs, .. } => {
            out.push(lhs);
            out.push(rhs);
        }
        ExprKind::Unary { operand, .. } => out.push(operand),
        ExprKind::Call { args, .. } | ExprKind::List(args) => out.extend(args.iter_mut()),
        ExprKind::Index { base, index } => {
            out.push(base);
            out.push(index);
        }
        ExprKind::Map(entries) => {
            for (k, v) in entries {
                out.push(k);
                out.push(v);
            }
        }
        ExprKind::Prim(p) => match p {
            Primitive::Branchpoint { kwargs } | Primitive::RecordCosts(kwargs) => {
                out.extend(kwargs.iter_mut().map(|k| &mut k.value));
            }
            Primitive::Choose { choices, kwargs } => {
                out.push(choices);
                out.extend(kwargs.iter_mut().map(|k| &mut k.value));
            }
            Primitive::RecordScore(e) | Primitive::OptionalReturn(e) => out.push(e),
            Primitive::RecordScoreGroup { target, label, .. } => {
                out.push(target);
                out.push(label);
            }
            Primitive::EarlyStop => {}
            Primitive::KillBranch(e) => out.extend(e.iter_mut().map(|b| &mut **b)),
            Primitive::Protect { expr, max_retries, .. } => {
                out.push(expr);
                out.extend(max_retries.iter_mut().map(|b| &mut **b));
            }
            Primitive::Searchover { args, .. } => out.extend(args.iter_mut()),
            Primitive::Perform { args, kwargs, .. } => {
                out.extend(args.iter_mut());
                out.extend(kwargs.iter_mut().map(|k| &mut k.value));
            }
        },
    }
    out
}

/// Mutable counterpart of [`stmt_exprs`], in evaluation order.
pub fn stmt_exprs_mut(stmt: &mut Stmt) -> Vec<&mut Expr> {
    let mut out: Vec<&mut Expr> = Vec::new();
    match &mut stmt.kind {
        StmtKind::Assign { target, value } => {
            out.extend(target.path.iter_mut());
            out.push(value);
        }
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => out.push(cond),
        StmtKind::For { iter, .. } => out.push(iter),
        StmtKind::Return(Some(e)) | StmtKind::Expr(e) => out.push(e),
        StmtKind::Callback(Callback::Return(Some(e))) => out.push(e),
        StmtKind::Callback(Callback::Finish { value: Some(e), .. }) => out.push(e),
        StmtKind::Info(op) => match op {
            InfoOp::OptionalReturn(e) | InfoOp::Score(e) => out.push(e),
            InfoOp::Costs(kw) => out.extend(kw.iter_mut().map(|k| &mut k.value)),
            InfoOp::ScoreGroup { target, label, .. } => {
                out.push(target);
                out.push(label);
            }
            _ => {}
        },
        StmtKind::Lift { prim, .. } => match prim {
            Lifted::Branchpoint { kwargs, .. } => out.extend(kwargs.iter_mut().map(|k| &mut k.value)),
            Lifted::Choices(e) => out.push(e),
            Lifted::Searchover { args, .. } => out.extend(args.iter_mut()),
            Lifted::Protect { expr, max_retries, .. } => {
                out.push(expr);
                out.extend(max_retries.iter_mut());
            }
        },
        _ => {}
    }
    out
}
