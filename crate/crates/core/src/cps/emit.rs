use std::fmt::Write;

use super::{BlockId, CompiledSpace, Op, Term};
use crate::lang::pretty::{expr_to_string, stmt_to_string};

fn successors(term: &Term) -> Vec<BlockId> {
    match term {
        Term::Tail(b) => vec![*b],
        Term::Branch { then, els, .. } => vec![*then, *els],
        Term::IterNext { body, exit, .. } => vec![*body, *exit],
        Term::Yield { rest, .. } => vec![*rest],
        Term::Call { resume, .. } => vec![*resume],
        Term::Return(_) | Term::Finish { .. } => vec![],
    }
}

/// Blocks in depth-first order from each function entry.
fn order(space: &CompiledSpace) -> Vec<BlockId> {
    let mut seen = vec![false; space.blocks.len()];
    let mut out = Vec::new();
    for &entry in &space.entries {
        let mut stack = vec![entry];
        while let Some(b) = stack.pop() {
            if std::mem::replace(&mut seen[b], true) {
                continue;
            }
            out.push(b);
            stack.extend(successors(&space.blocks[b].term).into_iter().rev());
        }
    }
    out.extend((0..space.blocks.len()).filter(|b| !seen[*b]));
    out
}

fn opt_expr(e: &Option<crate::lang::Expr>) -> String {
    e.as_ref().map(|e| format!(" {}", expr_to_string(e))).unwrap_or_default()
}

/// Stable textual form of the block graph.
pub fn emit(space: &CompiledSpace) -> String {
    let label = |b: BlockId| space.blocks[b].label.as_str();
    let mut out = String::new();
    for (n, id) in order(space).into_iter().enumerate() {
        let b = &space.blocks[id];
        if n > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "{}:", b.label);
        for op in &b.ops {
            let line = match op {
                Op::Exec(s) => stmt_to_string(s),
                Op::IterPush(e) => format!("iter_push {}", expr_to_string(e)),
                Op::IterPop => "iter_pop".into(),
            };
            for l in line.lines() {
                let _ = writeln!(out, "    {l}");
            }
        }
        let has_exec = b.ops.iter().any(|o| matches!(o, Op::Exec(_)));
        if has_exec {
            if let Some(t) = b.on_break {
                let _ = writeln!(out, "    on break -> {}", label(t));
            }
            if let Some(t) = b.on_continue {
                let _ = writeln!(out, "    on continue -> {}", label(t));
            }
        }
        let term = match &b.term {
            Term::Tail(t) => format!("tail {}", label(*t)),
            Term::Branch { cond, then, els } => {
                format!("branch {} ? {} : {}", expr_to_string(cond), label(*then), label(*els))
            }
            Term::IterNext { var, body, exit } => format!("iter_next {var} ? {} : {}", label(*body), label(*exit)),
            Term::Yield { site, slot, kwargs, choices, rest } => {
                let mut args: Vec<String> =
                    kwargs.iter().map(|k| format!("{}={}", k.name, expr_to_string(&k.value))).collect();
                if let Some(c) = choices {
                    args.push(format!("choices={c}"));
                }
                format!("yield bp#{site}({}) -> {slot} then {}", args.join(", "), label(*rest))
            }
            Term::Call { callee, args, slot, resume } => {
                let args: Vec<String> = args.iter().map(expr_to_string).collect();
                format!("call {callee}({}) -> {slot} then {}", args.join(", "), label(*resume))
            }
            Term::Return(e) => format!("return{}", opt_expr(e)),
            Term::Finish { value, killed: false } => format!("finish{}", opt_expr(value)),
            Term::Finish { value, killed: true } => format!("killed{}", opt_expr(value)),
        };
        let _ = writeln!(out, "    {term}");
    }
    out
}
