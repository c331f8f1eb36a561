use crate::lang::{Callback, Expr, ExprKind, FunctionDef, InfoOp, Primitive, Stmt, StmtKind};

/// Rewrites keyword primitives and copy declarations into updates of the
/// per-branch info record (or the session, for `early_stop`).
pub fn desugar_keywords(mut functions: Vec<FunctionDef>) -> Vec<FunctionDef> {
    for f in &mut functions {
        body(&mut f.body);
    }
    functions
}

fn body(stmts: &mut [Stmt]) {
    for stmt in stmts {
        match &mut stmt.kind {
            StmtKind::If { then_body, else_body, .. } => {
                body(then_body);
                if let Some(e) = else_body {
                    body(e);
                }
            }
            StmtKind::While { body: b, .. } | StmtKind::For { body: b, .. } => body(b),
            StmtKind::NoCopy(n) => stmt.kind = StmtKind::Info(InfoOp::NoCopyAdd(std::mem::take(n))),
            StmtKind::NeedsCopy(n) => stmt.kind = StmtKind::Info(InfoOp::NoCopyRemove(std::mem::take(n))),
            StmtKind::Expr(Expr { kind: ExprKind::Prim(p), .. }) if p.is_statement_only() => {
                let p = std::mem::replace(p, Primitive::EarlyStop);
                stmt.kind = match p {
                    Primitive::EarlyStop => StmtKind::Info(InfoOp::EarlyStop),
                    Primitive::KillBranch(e) => {
                        StmtKind::Callback(Callback::Finish { value: e.map(|b| *b), killed: true })
                    }
                    Primitive::OptionalReturn(e) => StmtKind::Info(InfoOp::OptionalReturn(*e)),
                    Primitive::RecordCosts(kw) => StmtKind::Info(InfoOp::Costs(kw)),
                    Primitive::RecordScore(e) => StmtKind::Info(InfoOp::Score(*e)),
                    Primitive::RecordScoreGroup { evaluator, target, label } => {
                        StmtKind::Info(InfoOp::ScoreGroup { evaluator, target: *target, label: *label })
                    }
                    other => unreachable!("{} is not statement-only", other.name()),
                };
            }
            _ => {}
        }
    }
}
