use std::collections::{BTreeSet, HashMap};

use super::ast::*;
use super::{Diagnostic, Span};

/// Builtin functions callable with plain call syntax.
pub const BUILTINS: &[&str] = &[
    "abs", "append", "contains", "float", "get", "has", "int", "join", "keys", "len", "max", "min", "pop", "push",
    "range", "sorted", "split", "str", "sum", "values",
];

pub fn is_builtin(name: &str) -> bool {
    BUILTINS.contains(&name)
}

/// Checks the structural rules the parser does not enforce. Returns an empty
/// list iff the program is well formed.
pub fn validate(program: &SourceProgram) -> Vec<Diagnostic> {
    let mut v = Validator { program, diags: Vec::new(), fn_index: HashMap::new() };
    v.run();
    v.diags
}

struct Validator<'a> {
    program: &'a SourceProgram,
    diags: Vec<Diagnostic>,
    fn_index: HashMap<&'a str, &'a FunctionDef>,
}

/// True when `f` uses anything other than `perform` among the primitives, i.e.
/// it can only run under the search runtime.
fn uses_search_primitives(f: &FunctionDef) -> bool {
    let mut found = false;
    walk_stmts(&f.body, &mut |s| {
        found |= matches!(s.kind, StmtKind::NoCopy(_) | StmtKind::NeedsCopy(_))
            || stmt_has_prim(s, &|p| !matches!(p, Primitive::Perform { .. }));
    });
    found
}

impl<'a> Validator<'a> {
    fn error(&mut self, span: Span, msg: impl Into<String>) {
        let len = self.program.text.len();
        // Programs built without source text (tests, generators) keep raw spans.
        let span = if len > 0 && span.end > len { Span::new(span.start.min(len), len) } else { span };
        self.diags.push(Diagnostic::error(span, msg));
    }

    fn run(&mut self) {
        for f in &self.program.functions {
            if let Some(prev) = self.fn_index.insert(&f.name, f) {
                let _ = prev;
                self.error(f.span, format!("function `{}` is defined more than once", f.name));
            }
            if is_builtin(&f.name) {
                self.error(f.span, format!("function `{}` shadows a builtin", f.name));
            }
            let mut seen = BTreeSet::new();
            for p in &f.params {
                if !seen.insert(p) {
                    self.error(f.span, format!("duplicate parameter `{p}` in `{}`", f.name));
                }
            }
        }
        for f in &self.program.functions {
            let mut locals: BTreeSet<&str> = f.params.iter().map(String::as_str).collect();
            walk_stmts(&f.body, &mut |s| match &s.kind {
                StmtKind::Assign { target, .. } => {
                    locals.insert(&target.name);
                }
                StmtKind::For { var, .. } => {
                    locals.insert(var);
                }
                _ => {}
            });
            self.body(&f.body, 0, &locals);
        }
    }

    fn body(&mut self, body: &'a [Stmt], loop_depth: usize, locals: &BTreeSet<&str>) {
        for stmt in body {
            match &stmt.kind {
                StmtKind::Break | StmtKind::Continue if loop_depth == 0 => {
                    let kw = if matches!(stmt.kind, StmtKind::Break) { "break" } else { "continue" };
                    self.error(stmt.span, format!("{kw} outside loop"));
                }
                StmtKind::Expr(Expr { kind: ExprKind::Prim(p), .. }) if p.is_statement_only() => {
                    self.statement_primitive(p, locals);
                    continue;
                }
                StmtKind::While { cond, .. } => {
                    if expr_has_prim(cond, &|p| p.is_liftable()) {
                        self.error(
                            cond.span,
                            "loop conditions cannot contain branchpoints, choose, protect or searchover",
                        );
                    }
                }
                StmtKind::Callback(_) | StmtKind::Info(_) | StmtKind::Lift { .. } | StmtKind::ClearTemps => {
                    self.error(stmt.span, "internal statement form in source program");
                }
                _ => {}
            }
            for e in stmt_exprs(stmt) {
                self.expr(e, locals);
            }
            match &stmt.kind {
                StmtKind::If { then_body, else_body, .. } => {
                    self.body(then_body, loop_depth, locals);
                    if let Some(e) = else_body {
                        self.body(e, loop_depth, locals);
                    }
                }
                StmtKind::While { body, .. } | StmtKind::For { body, .. } => self.body(body, loop_depth + 1, locals),
                _ => {}
            }
        }
    }

    fn statement_primitive(&mut self, p: &'a Primitive, locals: &BTreeSet<&str>) {
        let mut sub = Vec::new();
        match p {
            Primitive::RecordScore(e) | Primitive::OptionalReturn(e) => sub.push(&**e),
            Primitive::RecordScoreGroup { evaluator, target, label } => {
                match self.fn_index.get(evaluator.as_str()).copied() {
                    None => self.error(target.span, format!("unknown function {evaluator}")),
                    Some(f) => {
                        if f.params.len() != 1 {
                            self.error(
                                target.span,
                                format!("group evaluator `{evaluator}` must take exactly one argument"),
                            );
                        }
                        if uses_search_primitives(f) {
                            self.error(
                                target.span,
                                format!("group evaluator `{evaluator}` cannot use search primitives"),
                            );
                        }
                    }
                }
                sub.push(&**target);
                sub.push(&**label);
            }
            Primitive::RecordCosts(kw) => sub.extend(kw.iter().map(|k| &k.value)),
            Primitive::KillBranch(Some(e)) => sub.push(&**e),
            _ => {}
        }
        for e in sub {
            self.expr(e, locals);
        }
    }

    fn expr(&mut self, expr: &'a Expr, locals: &BTreeSet<&str>) {
        let mut found = Vec::new();
        walk_expr(expr, &mut |e| found.push(e));
        for e in found {
            match &e.kind {
                ExprKind::Prim(p) if p.is_statement_only() => {
                    self.error(e.span, format!("`{}` can only be used as a statement", p.name()));
                }
                ExprKind::Prim(Primitive::Searchover { callee, args }) => match self.fn_index.get(callee.as_str()) {
                    None => self.error(e.span, format!("unknown function {callee}")),
                    Some(f) if f.params.len() != args.len() => {
                        let n = f.params.len();
                        self.error(e.span, format!("`{callee}` takes {n} argument(s), got {}", args.len()))
                    }
                    Some(_) => {}
                },
                ExprKind::Call { callee, args } => {
                    if is_builtin(callee) || locals.contains(callee.as_str()) {
                        continue;
                    }
                    match self.fn_index.get(callee.as_str()).copied() {
                        None => self.error(e.span, format!("unknown function {callee}")),
                        Some(f) => {
                            if f.params.len() != args.len() {
                                let n = f.params.len();
                                self.error(e.span, format!("`{callee}` takes {n} argument(s), got {}", args.len()));
                            }
                            if uses_search_primitives(f) {
                                self.error(
                                    e.span,
                                    format!(
                                        "`{callee}` uses search primitives; call it with searchover({callee}(...))"
                                    ),
                                );
                            }
                        }
                    }
                }
                ExprKind::Temp(_) => self.error(e.span, "internal temp slot in source program"),
                _ => {}
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::lang::{parse_program, tokenize, validate, Diagnostic};

    fn diags(src: &str) -> Vec<Diagnostic> {
        let mut p = parse_program(&tokenize(src).unwrap()).unwrap();
        p.text = src.to_string();
        validate(&p)
    }

    #[test]
    fn searchover_known_function() {
        assert!(diags("fn helper(x) { branchpoint() return x } fn main(x) { y = searchover(helper(x)) }").is_empty());
    }

    #[test]
    fn searchover_unknown_function() {
        let d = diags("fn main(x) { y = searchover(missing(x)) }");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].message, "unknown function missing");
    }

    #[test]
    fn nested_continue_is_legal() {
        assert!(diags("fn main() { i = 0 while i < 3 { i = i + 1 if i == 2 { continue } } }").is_empty());
    }

    #[test]
    fn break_outside_loop() {
        let d = diags("fn main() { break }");
        assert_eq!(d[0].message, "break outside loop");
        let d = diags("fn main() { if true { continue } }");
        assert_eq!(d[0].message, "continue outside loop");
    }

    #[test]
    fn statement_only_primitives() {
        let d = diags("fn main() { x = record_score(1) }");
        assert!(d[0].message.contains("only be used as a statement"));
    }

    #[test]
    fn plain_call_to_workflow_function() {
        let d = diags("fn w() { branchpoint() return 1 } fn main() { x = w() }");
        assert!(d[0].message.contains("searchover"));
    }

    #[test]
    fn group_evaluator_must_exist() {
        let d = diags(r#"fn main() { record_score(vote, 1, label="a") }"#);
        assert_eq!(d[0].message, "unknown function vote");
        assert!(diags(r#"fn vote(xs) { return xs } fn main() { record_score(vote, 1, label="a") }"#).is_empty());
    }

    #[test]
    fn branchpoint_in_loop_condition() {
        let d = diags("fn main() { while choose([true, false]) { x = 1 } }");
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn duplicate_function_and_arity() {
        let d = diags("fn f(a) { return a } fn f(a) { return a } fn main() { x = f(1, 2) }");
        assert!(d.iter().any(|d| d.message.contains("more than once")));
        assert!(d.iter().any(|d| d.message.contains("takes 1")));
    }

    #[test]
    fn spans_lie_within_source() {
        let src = "fn main() { y = missing(1) break }";
        for d in diags(src) {
            assert!(d.span.end <= src.len() && d.span.start <= d.span.end);
        }
    }
}
