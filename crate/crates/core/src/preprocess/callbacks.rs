use crate::lang::{Callback, FunctionDef, Stmt, StmtKind};

/// Ends every body with an explicit terminal marker and turns `break`,
/// `continue` and `return` into their marker forms.
pub fn append_terminal_callbacks(functions: Vec<FunctionDef>, entry: Option<&str>) -> Vec<FunctionDef> {
    functions
        .into_iter()
        .map(|mut f| {
            let end = if Some(f.name.as_str()) == entry {
                Callback::Finish { value: None, killed: false }
            } else {
                Callback::Return(None)
            };
            rewrite_body(&mut f.body, end, f.span);
            f
        })
        .collect()
}

fn ends_in_marker(body: &[Stmt]) -> bool {
    matches!(body.last(), Some(Stmt { kind: StmtKind::Callback(_), .. }))
}

fn rewrite_body(body: &mut Vec<Stmt>, end: Callback, span: crate::lang::Span) {
    for stmt in body.iter_mut() {
        rewrite_stmt(stmt);
    }
    if !ends_in_marker(body) {
        let span = body.last().map_or(span, |s| s.span);
        body.push(Stmt::new(StmtKind::Callback(end), span));
    }
}

fn rewrite_stmt(stmt: &mut Stmt) {
    let span = stmt.span;
    match &mut stmt.kind {
        StmtKind::Break => stmt.kind = StmtKind::Callback(Callback::Break),
        StmtKind::Continue => stmt.kind = StmtKind::Callback(Callback::Continue),
        StmtKind::Return(e) => stmt.kind = StmtKind::Callback(Callback::Return(e.take())),
        StmtKind::If { then_body, else_body, .. } => {
            rewrite_body(then_body, Callback::IfElse, span);
            rewrite_body(else_body.get_or_insert_with(Vec::new), Callback::IfElse, span);
        }
        StmtKind::While { body, .. } | StmtKind::For { body, .. } => {
            rewrite_body(body, Callback::Continue, span);
        }
        _ => {}
    }
}
