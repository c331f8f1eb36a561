//! Normalization passes run between validation and CPS conversion:
//! terminal-callback insertion, keyword desugaring, and ANF lifting.
//!
//! Every pass is idempotent on its own output, so `normalize` applied to an
//! already normalized program is the identity.

mod anf;
mod callbacks;
mod desugar;

pub use anf::anf_lift_primitives;
pub use callbacks::append_terminal_callbacks;
pub use desugar::desugar_keywords;

use crate::lang::{FunctionDef, SourceProgram, Stmt, StmtKind};

/// Program after all preprocessing passes.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAst {
    pub functions: Vec<FunctionDef>,
    /// Function whose body ends in a finish marker instead of a return marker.
    pub entry: Option<String>,
}

impl NormalizedAst {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }
}

pub fn preprocess(program: &SourceProgram, entry: Option<&str>) -> NormalizedAst {
    normalize(program.functions.clone(), entry)
}

pub fn normalize(functions: Vec<FunctionDef>, entry: Option<&str>) -> NormalizedAst {
    let functions = append_terminal_callbacks(functions, entry);
    let functions = desugar_keywords(functions);
    let functions = anf_lift_primitives(functions);
    NormalizedAst { functions, entry: entry.map(str::to_string) }
}

/// True when the last statement of every body (function, loop, if arm) is a
/// terminal marker.
pub fn bodies_terminated(ast: &NormalizedAst) -> bool {
    fn ok(body: &[Stmt]) -> bool {
        matches!(body.last(), Some(Stmt { kind: StmtKind::Callback(_), .. }))
            && body.iter().all(|s| match &s.kind {
                StmtKind::If { then_body, else_body, .. } => ok(then_body) && else_body.as_deref().is_some_and(ok),
                StmtKind::While { body, .. } | StmtKind::For { body, .. } => ok(body),
                _ => true,
            })
    }
    ast.functions.iter().all(|f| ok(&f.body))
}
