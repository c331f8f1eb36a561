use crate::lang::{
    expr_children_mut, stmt_exprs_mut, Expr, ExprKind, FunctionDef, Lifted, Primitive, Stmt, StmtKind, TempKey,
};

/// Hoists every branchpoint, choose, protect and searchover into its own
/// `tmp[i] = prim(...)` statement ahead of the statement that uses it.
/// Lifting is innermost first, left to right; indices restart per statement
/// and a `clear_temps()` follows the rewritten statement.
pub fn anf_lift_primitives(mut functions: Vec<FunctionDef>) -> Vec<FunctionDef> {
    for f in &mut functions {
        f.body = body(std::mem::take(&mut f.body));
    }
    functions
}

fn body(stmts: Vec<Stmt>) -> Vec<Stmt> {
    let mut out = Vec::with_capacity(stmts.len());
    for mut stmt in stmts {
        match &mut stmt.kind {
            StmtKind::If { then_body, else_body, .. } => {
                *then_body = body(std::mem::take(then_body));
                if let Some(e) = else_body {
                    *e = body(std::mem::take(e));
                }
            }
            StmtKind::While { body: b, .. } | StmtKind::For { body: b, .. } => *b = body(std::mem::take(b)),
            _ => {}
        }
        let mut lifter = Lifter { next: 0, lifted: Vec::new() };
        for e in stmt_exprs_mut(&mut stmt) {
            lifter.expr(e);
        }
        if lifter.lifted.is_empty() {
            out.push(stmt);
            continue;
        }
        let span = stmt.span;
        out.append(&mut lifter.lifted);
        let terminal = matches!(stmt.kind, StmtKind::Callback(_));
        if !matches!(stmt.kind, StmtKind::Expr(Expr { kind: ExprKind::Temp(_), .. })) {
            out.push(stmt);
        }
        if !terminal {
            out.push(Stmt::new(StmtKind::ClearTemps, span));
        }
    }
    out
}

struct Lifter {
    next: u32,
    lifted: Vec<Stmt>,
}

impl Lifter {
    fn expr(&mut self, e: &mut Expr) {
        for child in expr_children_mut(e) {
            self.expr(child);
        }
        let ExprKind::Prim(p) = &mut e.kind else { return };
        if !p.is_liftable() {
            return;
        }
        let i = self.next;
        self.next += 1;
        let slot = TempKey::Slot(i);
        let prim = match std::mem::replace(p, Primitive::EarlyStop) {
            Primitive::Branchpoint { kwargs } => Lifted::Branchpoint { kwargs, choices: None },
            Primitive::Choose { choices, kwargs } => {
                let key = TempKey::Choices(i);
                self.lifted.push(Stmt::new(StmtKind::Lift { slot: key, prim: Lifted::Choices(*choices) }, e.span));
                Lifted::Branchpoint { kwargs, choices: Some(key) }
            }
            Primitive::Protect { expr, tag, max_retries } => {
                Lifted::Protect { expr: *expr, tag, max_retries: max_retries.map(|b| *b) }
            }
            Primitive::Searchover { callee, args } => Lifted::Searchover { callee, args },
            other => unreachable!("{} is not liftable", other.name()),
        };
        self.lifted.push(Stmt::new(StmtKind::Lift { slot, prim }, e.span));
        e.kind = ExprKind::Temp(slot);
    }
}
