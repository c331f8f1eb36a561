//! Canonical pretty-printer. Output of surface programs re-parses to a
//! structurally equal tree; normalized programs print their internal forms
//! (`tmp[..]`, callbacks, `info.*`) in a stable, human-readable notation.

use std::fmt::Write;

use super::ast::*;

pub fn program(p: &SourceProgram) -> String {
    functions(&p.functions)
}

pub fn functions(fns: &[FunctionDef]) -> String {
    let mut out = String::new();
    for (i, f) in fns.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        function(&mut out, f);
    }
    out
}

fn function(out: &mut String, f: &FunctionDef) {
    let _ = write!(out, "fn {}({}) ", f.name, f.params.join(", "));
    block(out, &f.body, 0);
    out.push('\n');
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn block(out: &mut String, body: &[Stmt], level: usize) {
    out.push_str("{\n");
    for s in body {
        stmt(out, s, level + 1);
    }
    indent(out, level);
    out.push('}');
}

pub fn stmt_to_string(s: &Stmt) -> String {
    let mut out = String::new();
    stmt(&mut out, s, 0);
    out.trim_end().to_string()
}

fn stmt(out: &mut String, s: &Stmt, level: usize) {
    indent(out, level);
    match &s.kind {
        StmtKind::Assign { target, value } => {
            lvalue(out, target);
            out.push_str(" = ");
            expr(out, value);
        }
        StmtKind::NoCopy(n) => {
            let _ = write!(out, "nocopy {n}");
        }
        StmtKind::NeedsCopy(n) => {
            let _ = write!(out, "needscopy {n}");
        }
        StmtKind::If { cond, then_body, else_body } => {
            out.push_str("if ");
            expr(out, cond);
            out.push(' ');
            block(out, then_body, level);
            if let Some(e) = else_body {
                out.push_str(" else ");
                block(out, e, level);
            }
        }
        StmtKind::While { cond, body } => {
            out.push_str("while ");
            expr(out, cond);
            out.push(' ');
            block(out, body, level);
        }
        StmtKind::For { var, iter, body } => {
            let _ = write!(out, "for {var} in ");
            expr(out, iter);
            out.push(' ');
            block(out, body, level);
        }
        StmtKind::Break => out.push_str("break"),
        StmtKind::Continue => out.push_str("continue"),
        StmtKind::Return(None) => out.push_str("return"),
        StmtKind::Return(Some(e)) => {
            out.push_str("return ");
            expr(out, e);
        }
        StmtKind::Expr(e) => expr(out, e),
        StmtKind::Callback(cb) => callback(out, cb),
        StmtKind::Info(op) => info_op(out, op),
        StmtKind::Lift { slot, prim } => {
            let _ = write!(out, "{slot} = ");
            lifted(out, prim);
        }
        StmtKind::ClearTemps => out.push_str("clear_temps()"),
    }
    out.push('\n');
}

fn callback(out: &mut String, cb: &Callback) {
    match cb {
        Callback::Continue => out.push_str("continue_callback()"),
        Callback::Break => out.push_str("break_callback()"),
        Callback::IfElse => out.push_str("if_else_callback()"),
        Callback::Return(None) => out.push_str("return_callback()"),
        Callback::Return(Some(e)) => {
            out.push_str("return_callback(");
            expr(out, e);
            out.push(')');
        }
        Callback::Finish { value, killed } => {
            out.push_str("finish_callback(");
            if let Some(v) = value {
                expr(out, v);
            }
            if *killed {
                out.push_str(if value.is_some() { ", killed=true" } else { "killed=true" });
            }
            out.push(')');
        }
    }
}

fn info_op(out: &mut String, op: &InfoOp) {
    match op {
        InfoOp::EarlyStop => out.push_str("session.early_stop_search = true"),
        InfoOp::NoCopyAdd(n) => {
            let _ = write!(out, "info.nocopy.add({n:?})");
        }
        InfoOp::NoCopyRemove(n) => {
            let _ = write!(out, "info.nocopy.remove({n:?})");
        }
        InfoOp::OptionalReturn(e) => {
            out.push_str("info.optional_rv = ");
            expr(out, e);
        }
        InfoOp::Costs(kw) => {
            out.push_str("info.costs += {");
            kwargs(out, kw, false);
            out.push('}');
        }
        InfoOp::Score(e) => {
            out.push_str("info.score = score_db.submit(");
            expr(out, e);
            out.push(')');
        }
        InfoOp::ScoreGroup { evaluator, target, label } => {
            let _ = write!(out, "info.score = score_db.submit_group({evaluator}, ");
            expr(out, target);
            out.push_str(", label=");
            expr(out, label);
            out.push(')');
        }
    }
}

fn lifted(out: &mut String, prim: &Lifted) {
    match prim {
        Lifted::Branchpoint { kwargs: kw, choices } => {
            out.push_str("branchpoint(");
            kwargs(out, kw, false);
            if let Some(c) = choices {
                let _ = write!(out, "{}choices={c}", if kw.is_empty() { "" } else { ", " });
            }
            out.push(')');
        }
        Lifted::Choices(e) => {
            out.push_str("materialize_choices(");
            expr(out, e);
            out.push(')');
        }
        Lifted::Searchover { callee, args } => {
            let _ = write!(out, "searchover({callee}(");
            list(out, args);
            out.push_str("))");
        }
        Lifted::Protect { expr: e, tag, max_retries } => {
            out.push_str("protect(");
            expr(out, e);
            let _ = write!(out, ", {}", quote(tag));
            if let Some(m) = max_retries {
                out.push_str(", ");
                expr(out, m);
            }
            out.push(')');
        }
    }
}

fn lvalue(out: &mut String, lv: &LValue) {
    out.push_str(&lv.name);
    for idx in &lv.path {
        out.push('[');
        expr(out, idx);
        out.push(']');
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    expr(&mut out, e);
    out
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            '\0' => out.push_str("\\0"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{{{:x}}}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Float literal text that lexes back to the same value.
pub fn float_literal(x: f64) -> String {
    let s = format!("{x:?}");
    if s.contains(['.', 'e', 'E']) || !x.is_finite() {
        s
    } else {
        format!("{s}.0")
    }
}

fn list(out: &mut String, items: &[Expr]) {
    for (i, e) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        expr(out, e);
    }
}

fn kwargs(out: &mut String, kw: &[Kwarg], leading_comma: bool) {
    for (i, k) in kw.iter().enumerate() {
        if i > 0 || leading_comma {
            out.push_str(", ");
        }
        let _ = write!(out, "{}=", k.name);
        expr(out, &k.value);
    }
}

const UNARY_PREC: u8 = 6;

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Binary { op, .. } => op.precedence(),
        ExprKind::Unary { .. } => UNARY_PREC,
        _ => 7,
    }
}

fn sub(out: &mut String, e: &Expr, paren: bool) {
    if paren {
        out.push('(');
        expr(out, e);
        out.push(')');
    } else {
        expr(out, e);
    }
}

fn expr(out: &mut String, e: &Expr) {
    match &e.kind {
        ExprKind::Literal(l) => match l {
            Literal::Null => out.push_str("null"),
            Literal::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Literal::Int(i) => {
                let _ = write!(out, "{i}");
            }
            Literal::Float(x) => out.push_str(&float_literal(*x)),
            Literal::Str(s) => out.push_str(&quote(s)),
        },
        ExprKind::Name(n) => out.push_str(n),
        ExprKind::Temp(t) => {
            let _ = write!(out, "{t}");
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            // left-associative; comparisons never chain
            let lp = if op.is_comparison() { prec(lhs) <= p } else { prec(lhs) < p };
            sub(out, lhs, lp);
            let _ = write!(out, " {} ", op.symbol());
            sub(out, rhs, prec(rhs) <= p);
        }
        ExprKind::Unary { op, operand } => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            sub(out, operand, prec(operand) < UNARY_PREC);
        }
        ExprKind::Call { callee, args } => {
            let _ = write!(out, "{callee}(");
            list(out, args);
            out.push(')');
        }
        ExprKind::Index { base, index } => {
            sub(out, base, prec(base) < 7);
            out.push('[');
            expr(out, index);
            out.push(']');
        }
        ExprKind::List(items) => {
            out.push('[');
            list(out, items);
            out.push(']');
        }
        ExprKind::Map(entries) => {
            out.push('{');
            for (i, (k, v)) in entries.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr(out, k);
                out.push_str(": ");
                expr(out, v);
            }
            out.push('}');
        }
        ExprKind::Prim(p) => primitive(out, p),
    }
}

fn primitive(out: &mut String, p: &Primitive) {
    let _ = write!(out, "{}(", p.name());
    match p {
        Primitive::Branchpoint { kwargs: kw } | Primitive::RecordCosts(kw) => kwargs(out, kw, false),
        Primitive::Choose { choices, kwargs: kw } => {
            expr(out, choices);
            kwargs(out, kw, true);
        }
        Primitive::RecordScore(e) | Primitive::OptionalReturn(e) => expr(out, e),
        Primitive::RecordScoreGroup { evaluator, target, label } => {
            let _ = write!(out, "{evaluator}, ");
            expr(out, target);
            out.push_str(", label=");
            expr(out, label);
        }
        Primitive::EarlyStop => {}
        Primitive::KillBranch(e) => {
            if let Some(e) = e {
                expr(out, e);
            }
        }
        Primitive::Protect { expr: e, tag, max_retries } => {
            expr(out, e);
            let _ = write!(out, ", {}", quote(tag));
            if let Some(m) = max_retries {
                out.push_str(", ");
                expr(out, m);
            }
        }
        Primitive::Searchover { callee, args } => {
            let _ = write!(out, "{callee}(");
            list(out, args);
            out.push(')');
        }
        Primitive::Perform { op, args, kwargs: kw } => {
            out.push_str(&quote(op));
            for a in args {
                out.push_str(", ");
                expr(out, a);
            }
            kwargs(out, kw, true);
        }
    }
    out.push(')');
}
