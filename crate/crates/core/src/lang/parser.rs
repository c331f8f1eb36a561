use super::ast::*;
use super::token::{Keyword, Prim, Token, TokenKind};
use super::Span;
use crate::error::ParseError;

/// Parses a token stream (as produced by [`tokenize`](super::tokenize)) into a
/// program. `path` and `text` are left empty; [`parse_source`](super::parse_source)
/// fills them in.
pub fn parse_program(tokens: &[Token]) -> Result<SourceProgram, ParseError> {
    let mut p = Parser { tokens, pos: 0, no_map: false };
    let mut functions = Vec::new();
    while !p.at(&TokenKind::Eof) {
        functions.push(p.function()?);
    }
    Ok(SourceProgram { path: String::new(), text: String::new(), functions })
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    /// Set while parsing `if`/`while`/`for` headers, where `{` opens the body
    /// rather than a map literal.
    no_map: bool,
}

type PResult<T> = Result<T, ParseError>;

enum Arg {
    Pos(Expr),
    Kw(Kwarg, Span),
}

impl<'t> Parser<'t> {
    fn peek(&self) -> &'t Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_kind_at(&self, off: usize) -> &'t TokenKind {
        &self.tokens[(self.pos + off).min(self.tokens.len() - 1)].kind
    }

    fn at(&self, kind: &TokenKind) -> bool {
        &self.peek().kind == kind
    }

    fn at_kw(&self, kw: Keyword) -> bool {
        self.peek().kind == TokenKind::Kw(kw)
    }

    fn bump(&mut self) -> &'t Token {
        let tok = self.peek();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        tok
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let tok = self.peek();
        let expected: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
        ParseError {
            span: tok.span,
            message: format!("expected {}, found {}", expected.join(" or "), tok.kind),
            expected,
        }
    }

    fn error_at(&self, span: Span, message: impl Into<String>) -> ParseError {
        ParseError { span, message: message.into(), expected: Vec::new() }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> PResult<Span> {
        if self.at(&kind) {
            Ok(self.bump().span)
        } else {
            Err(self.error(&[what]))
        }
    }

    fn name(&mut self) -> PResult<(String, Span)> {
        match &self.peek().kind {
            TokenKind::Name(n) => {
                let span = self.bump().span;
                Ok((n.clone(), span))
            }
            _ => Err(self.error(&["name"])),
        }
    }

    fn function(&mut self) -> PResult<FunctionDef> {
        let start = self.expect(TokenKind::Kw(Keyword::Fn), "`fn`")?;
        let (name, _) = self.name()?;
        self.expect(TokenKind::LParen, "`(`")?;
        let mut params = Vec::new();
        if !self.at(&TokenKind::RParen) {
            loop {
                params.push(self.name()?.0);
                if !self.eat(&TokenKind::Comma) || self.at(&TokenKind::RParen) {
                    break;
                }
            }
        }
        self.expect(TokenKind::RParen, "`)`")?;
        let (body, end) = self.block()?;
        Ok(FunctionDef { name, params, body, span: start.to(end) })
    }

    fn block(&mut self) -> PResult<(Vec<Stmt>, Span)> {
        self.expect(TokenKind::LBrace, "`{`")?;
        let saved = std::mem::replace(&mut self.no_map, false);
        let mut body = Vec::new();
        loop {
            while self.eat(&TokenKind::Semi) {}
            if self.at(&TokenKind::RBrace) {
                break;
            }
            if self.at(&TokenKind::Eof) {
                return Err(self.error(&["statement", "`}`"]));
            }
            body.push(self.stmt()?);
        }
        self.no_map = saved;
        let end = self.bump().span;
        Ok((body, end))
    }

    fn header_expr(&mut self) -> PResult<Expr> {
        let saved = std::mem::replace(&mut self.no_map, true);
        let e = self.expr();
        self.no_map = saved;
        e
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let start = self.peek().span;
        match &self.peek().kind {
            TokenKind::Kw(Keyword::NoCopy) => {
                self.bump();
                let (n, end) = self.name()?;
                Ok(Stmt::new(StmtKind::NoCopy(n), start.to(end)))
            }
            TokenKind::Kw(Keyword::NeedsCopy) => {
                self.bump();
                let (n, end) = self.name()?;
                Ok(Stmt::new(StmtKind::NeedsCopy(n), start.to(end)))
            }
            TokenKind::Kw(Keyword::If) => self.if_stmt(),
            TokenKind::Kw(Keyword::While) => {
                self.bump();
                let cond = self.header_expr()?;
                let (body, end) = self.block()?;
                Ok(Stmt::new(StmtKind::While { cond, body }, start.to(end)))
            }
            TokenKind::Kw(Keyword::For) => {
                self.bump();
                let (var, _) = self.name()?;
                self.expect(TokenKind::Kw(Keyword::In), "`in`")?;
                let iter = self.header_expr()?;
                let (body, end) = self.block()?;
                Ok(Stmt::new(StmtKind::For { var, iter, body }, start.to(end)))
            }
            TokenKind::Kw(Keyword::Break) => {
                self.bump();
                Ok(Stmt::new(StmtKind::Break, start))
            }
            TokenKind::Kw(Keyword::Continue) => {
                self.bump();
                Ok(Stmt::new(StmtKind::Continue, start))
            }
            TokenKind::Kw(Keyword::Return) => {
                self.bump();
                if matches!(self.peek().kind, TokenKind::RBrace | TokenKind::Semi) {
                    Ok(Stmt::new(StmtKind::Return(None), start))
                } else {
                    let e = self.expr()?;
                    let span = start.to(e.span);
                    Ok(Stmt::new(StmtKind::Return(Some(e)), span))
                }
            }
            _ => self.expr_or_assign(),
        }
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let start = self.expect(TokenKind::Kw(Keyword::If), "`if`")?;
        let cond = self.header_expr()?;
        let (then_body, mut end) = self.block()?;
        let else_body = if self.eat(&TokenKind::Kw(Keyword::Else)) {
            if self.at_kw(Keyword::If) {
                let nested = self.if_stmt()?;
                end = nested.span;
                Some(vec![nested])
            } else {
                let (b, e) = self.block()?;
                end = e;
                Some(b)
            }
        } else {
            None
        };
        Ok(Stmt::new(StmtKind::If { cond, then_body, else_body }, start.to(end)))
    }

    fn expr_or_assign(&mut self) -> PResult<Stmt> {
        let lhs = self.expr()?;
        let compound = match self.peek().kind {
            TokenKind::Eq => None,
            TokenKind::PlusEq => Some(BinOp::Add),
            TokenKind::MinusEq => Some(BinOp::Sub),
            _ => {
                let span = lhs.span;
                return Ok(Stmt::new(StmtKind::Expr(lhs), span));
            }
        };
        let op_span = self.bump().span;
        let target = to_lvalue(&lhs).ok_or_else(|| self.error_at(lhs.span, "invalid assignment target"))?;
        let rhs = self.expr()?;
        let span = lhs.span.to(rhs.span);
        let value = match compound {
            None => rhs,
            Some(op) => {
                if !target.path.is_empty() {
                    return Err(self.error_at(op_span, "compound assignment needs a plain variable"));
                }
                Expr::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span)
            }
        };
        Ok(Stmt::new(StmtKind::Assign { target, value }, span))
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek().kind {
            TokenKind::OrOr => BinOp::Or,
            TokenKind::AndAnd => BinOp::And,
            TokenKind::EqEq => BinOp::Eq,
            TokenKind::NotEq => BinOp::Ne,
            TokenKind::Lt => BinOp::Lt,
            TokenKind::Le => BinOp::Le,
            TokenKind::Gt => BinOp::Gt,
            TokenKind::Ge => BinOp::Ge,
            TokenKind::Plus => BinOp::Add,
            TokenKind::Minus => BinOp::Sub,
            TokenKind::Star => BinOp::Mul,
            TokenKind::Slash => BinOp::Div,
            TokenKind::Percent => BinOp::Rem,
            _ => return None,
        })
    }

    /// Precedence climbing; comparisons do not chain.
    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let op_span = self.bump().span;
            let rhs = self.binary(prec + 1)?;
            if op.is_comparison() {
                if let Some(next) = self.binop() {
                    if next.is_comparison() {
                        return Err(self.error_at(op_span, "comparison operators cannot be chained"));
                    }
                }
            }
            let span = lhs.span.to(rhs.span);
            lhs = Expr::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, span);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let op = match self.peek().kind {
            TokenKind::Minus => UnOp::Neg,
            TokenKind::Bang => UnOp::Not,
            _ => return self.postfix(),
        };
        let start = self.bump().span;
        let operand = self.unary()?;
        let span = start.to(operand.span);
        Ok(Expr::new(ExprKind::Unary { op, operand: Box::new(operand) }, span))
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.at(&TokenKind::LBracket) {
            self.bump();
            let saved = std::mem::replace(&mut self.no_map, false);
            let index = self.expr()?;
            self.no_map = saved;
            let end = self.expect(TokenKind::RBracket, "`]`")?;
            let span = e.span.to(end);
            e = Expr::new(ExprKind::Index { base: Box::new(e), index: Box::new(index) }, span);
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let tok = self.peek();
        let span = tok.span;
        let lit = |l| Ok(Expr::lit(l, span));
        match &tok.kind {
            TokenKind::Int(i) => {
                self.bump();
                lit(Literal::Int(*i))
            }
            TokenKind::Float(x) => {
                self.bump();
                lit(Literal::Float(*x))
            }
            TokenKind::Str(s) => {
                self.bump();
                lit(Literal::Str(s.clone()))
            }
            TokenKind::Kw(Keyword::True) => {
                self.bump();
                lit(Literal::Bool(true))
            }
            TokenKind::Kw(Keyword::False) => {
                self.bump();
                lit(Literal::Bool(false))
            }
            TokenKind::Kw(Keyword::Null) => {
                self.bump();
                lit(Literal::Null)
            }
            TokenKind::Name(n) => {
                self.bump();
                if self.at(&TokenKind::LParen) {
                    let (args, end) = self.args()?;
                    let mut pos = Vec::with_capacity(args.len());
                    for a in args {
                        match a {
                            Arg::Pos(e) => pos.push(e),
                            Arg::Kw(_, s) => {
                                return Err(self.error_at(s, "keyword arguments are only accepted by primitives"))
                            }
                        }
                    }
                    Ok(Expr::new(ExprKind::Call { callee: n.clone(), args: pos }, span.to(end)))
                } else {
                    Ok(Expr::new(ExprKind::Name(n.clone()), span))
                }
            }
            TokenKind::LParen => {
                self.bump();
                let saved = std::mem::replace(&mut self.no_map, false);
                let e = self.expr()?;
                self.no_map = saved;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(e)
            }
            TokenKind::LBracket => {
                self.bump();
                let saved = std::mem::replace(&mut self.no_map, false);
                let mut items = Vec::new();
                while !self.at(&TokenKind::RBracket) {
                    items.push(self.expr()?);
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
                self.no_map = saved;
                let end = self.expect(TokenKind::RBracket, "`]`")?;
                Ok(Expr::new(ExprKind::List(items), span.to(end)))
            }
            TokenKind::LBrace if !self.no_map => {
                self.bump();
                let mut entries = Vec::new();
                while !self.at(&TokenKind::RBrace) {
                    let k = self.expr()?;
                    self.expect(TokenKind::Colon, "`:`")?;
                    let v = self.expr()?;
                    entries.push((k, v));
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
                let end = self.expect(TokenKind::RBrace, "`}`")?;
                Ok(Expr::new(ExprKind::Map(entries), span.to(end)))
            }
            TokenKind::Prim(p) => {
                let p = *p;
                self.bump();
                self.primitive(p, span)
            }
            _ => Err(self.error(&["expression"])),
        }
    }

    /// Parses `( arg, ... )` where each arg is positional or `name = expr`.
    fn args(&mut self) -> PResult<(Vec<Arg>, Span)> {
        self.expect(TokenKind::LParen, "`(`")?;
        let saved = std::mem::replace(&mut self.no_map, false);
        let mut args = Vec::new();
        let mut seen_kw = false;
        while !self.at(&TokenKind::RParen) {
            let is_kw = matches!(self.peek().kind, TokenKind::Name(_)) && *self.peek_kind_at(1) == TokenKind::Eq;
            if is_kw {
                let (name, nspan) = self.name()?;
                self.bump();
                let value = self.expr()?;
                let span = nspan.to(value.span);
                if args.iter().any(|a| matches!(a, Arg::Kw(k, _) if k.name == name)) {
                    return Err(self.error_at(nspan, format!("duplicate keyword argument `{name}`")));
                }
                args.push(Arg::Kw(Kwarg { name, value }, span));
                seen_kw = true;
            } else {
                let e = self.expr()?;
                if seen_kw {
                    return Err(self.error_at(e.span, "positional argument after keyword argument"));
                }
                args.push(Arg::Pos(e));
            }
            if !self.eat(&TokenKind::Comma) {
                break;
            }
        }
        self.no_map = saved;
        let end = self.expect(TokenKind::RParen, "`)`")?;
        Ok((args, end))
    }

    fn primitive(&mut self, prim: Prim, start: Span) -> PResult<Expr> {
        let (args, end) = self.args()?;
        let span = start.to(end);
        let mut pos = Vec::new();
        let mut kwargs = Vec::new();
        for a in args {
            match a {
                Arg::Pos(e) => pos.push(e),
                Arg::Kw(k, _) => kwargs.push(k),
            }
        }
        let name = prim.as_str();
        let arity = |lo: usize, hi: usize, pos: &Vec<Expr>| -> PResult<()> {
            if pos.len() < lo || pos.len() > hi {
                let want = if lo == hi { format!("{lo}") } else { format!("{lo} to {hi}") };
                Err(ParseError {
                    span,
                    message: format!("`{name}` takes {want} positional argument(s), got {}", pos.len()),
                    expected: Vec::new(),
                })
            } else {
                Ok(())
            }
        };
        let no_kwargs = |kwargs: &Vec<Kwarg>| -> PResult<()> {
            match kwargs.first() {
                Some(k) => Err(ParseError {
                    span: k.value.span,
                    message: format!("`{name}` does not accept keyword argument `{}`", k.name),
                    expected: Vec::new(),
                }),
                None => Ok(()),
            }
        };
        let pos_iter = |pos: Vec<Expr>| pos.into_iter();
        let primitive = match prim {
            Prim::Branchpoint => {
                arity(0, 0, &pos)?;
                Primitive::Branchpoint { kwargs }
            }
            Prim::Choose => {
                arity(1, 1, &pos)?;
                let choices = Box::new(pos_iter(pos).next().unwrap());
                Primitive::Choose { choices, kwargs }
            }
            Prim::RecordScore => {
                if pos.len() == 1 {
                    no_kwargs(&kwargs)?;
                    Primitive::RecordScore(Box::new(pos_iter(pos).next().unwrap()))
                } else {
                    arity(2, 2, &pos)?;
                    let mut it = pos_iter(pos);
                    let evaluator = match it.next().unwrap() {
                        Expr { kind: ExprKind::Name(n), .. } => n,
                        other => return Err(self.error_at(other.span, "group evaluator must be a function name")),
                    };
                    let target = Box::new(it.next().unwrap());
                    let mut label = None;
                    for k in kwargs {
                        if k.name == "label" {
                            label = Some(Box::new(k.value));
                        } else {
                            return Err(self.error_at(k.value.span, format!("unknown keyword `{}`", k.name)));
                        }
                    }
                    let label = label.ok_or_else(|| self.error_at(span, "group `record_score` needs `label=`"))?;
                    Primitive::RecordScoreGroup { evaluator, target, label }
                }
            }
            Prim::RecordCosts => {
                arity(0, 0, &pos)?;
                Primitive::RecordCosts(kwargs)
            }
            Prim::EarlyStop => {
                arity(0, 0, &pos)?;
                no_kwargs(&kwargs)?;
                Primitive::EarlyStop
            }
            Prim::KillBranch => {
                arity(0, 1, &pos)?;
                no_kwargs(&kwargs)?;
                Primitive::KillBranch(pos_iter(pos).next().map(Box::new))
            }
            Prim::OptionalReturn => {
                arity(1, 1, &pos)?;
                no_kwargs(&kwargs)?;
                Primitive::OptionalReturn(Box::new(pos_iter(pos).next().unwrap()))
            }
            Prim::Protect => {
                arity(2, 3, &pos)?;
                let mut it = pos_iter(pos);
                let expr = Box::new(it.next().unwrap());
                let tag = match it.next().unwrap() {
                    Expr { kind: ExprKind::Literal(Literal::Str(s)), .. } => s,
                    other => return Err(self.error_at(other.span, "protect tag must be a string literal")),
                };
                let mut max_retries = it.next().map(Box::new);
                for k in kwargs {
                    if k.name == "max_retries" && max_retries.is_none() {
                        max_retries = Some(Box::new(k.value));
                    } else {
                        return Err(self.error_at(k.value.span, format!("unexpected keyword `{}`", k.name)));
                    }
                }
                Primitive::Protect { expr, tag, max_retries }
            }
            Prim::Searchover => {
                arity(1, 1, &pos)?;
                no_kwargs(&kwargs)?;
                match pos_iter(pos).next().unwrap() {
                    Expr { kind: ExprKind::Call { callee, args }, .. } => Primitive::Searchover { callee, args },
                    other => return Err(self.error_at(other.span, "`searchover` expects a function call `f(...)`")),
                }
            }
            Prim::Perform => {
                if pos.is_empty() {
                    return Err(self.error_at(span, "`perform` needs an operation name"));
                }
                let mut it = pos_iter(pos);
                let op = match it.next().unwrap() {
                    Expr { kind: ExprKind::Literal(Literal::Str(s)), .. } => s,
                    other => return Err(self.error_at(other.span, "operation name must be a string literal")),
                };
                Primitive::Perform { op, args: it.collect(), kwargs }
            }
        };
        Ok(Expr::new(ExprKind::Prim(primitive), span))
    }
}

fn to_lvalue(e: &Expr) -> Option<LValue> {
    let mut path = Vec::new();
    let mut cur = e;
    loop {
        match &cur.kind {
            ExprKind::Name(n) => {
                path.reverse();
                return Some(LValue { name: n.clone(), path, span: e.span });
            }
            ExprKind::Index { base, index } => {
                path.push((**index).clone());
                cur = base;
            }
            _ => return None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::tokenize;

    fn parse(src: &str) -> SourceProgram {
        parse_program(&tokenize(src).unwrap()).unwrap()
    }

    fn parse_err(src: &str) -> ParseError {
        parse_program(&tokenize(src).unwrap()).unwrap_err()
    }

    fn name(n: &str) -> Expr {
        Expr::new(ExprKind::Name(n.into()), Span::default())
    }

    #[test]
    fn one_statement_function() {
        let p = parse("fn main() { x = 1 }");
        assert_eq!(p.functions.len(), 1);
        let f = &p.functions[0];
        assert_eq!(f.name, "main");
        assert_eq!(
            f.body,
            vec![Stmt::new(
                StmtKind::Assign {
                    target: LValue { name: "x".into(), path: vec![], span: Span::default() },
                    value: Expr::lit(Literal::Int(1), Span::default()),
                },
                Span::default()
            )]
        );
    }

    #[test]
    fn choose_with_identity_kwarg() {
        let p = parse("fn g(graph, cur) { r = choose(graph[cur], identity=cur) }");
        let StmtKind::Assign { target, value } = &p.functions[0].body[0].kind else { panic!() };
        assert_eq!(target.name, "r");
        let expected = Expr::new(
            ExprKind::Prim(Primitive::Choose {
                choices: Box::new(Expr::new(
                    ExprKind::Index { base: Box::new(name("graph")), index: Box::new(name("cur")) },
                    Span::default(),
                )),
                kwargs: vec![Kwarg { name: "identity".into(), value: name("cur") }],
            }),
            Span::default(),
        );
        assert_eq!(value, &expected);
    }

    #[test]
    fn precedence() {
        let p = parse("fn f() { x = 1 + 2 * -3 < 4 && !a || b }");
        let StmtKind::Assign { value, .. } = &p.functions[0].body[0].kind else { panic!() };
        // ((((1 + (2 * (-3))) < 4) && (!a)) || b)
        let ExprKind::Binary { op: BinOp::Or, lhs, .. } = &value.kind else { panic!("{value:?}") };
        let ExprKind::Binary { op: BinOp::And, lhs: cmp, rhs: not_a } = &lhs.kind else { panic!() };
        assert!(matches!(not_a.kind, ExprKind::Unary { op: UnOp::Not, .. }));
        let ExprKind::Binary { op: BinOp::Lt, lhs: sum, .. } = &cmp.kind else { panic!() };
        let ExprKind::Binary { op: BinOp::Add, rhs: prod, .. } = &sum.kind else { panic!() };
        assert!(matches!(prod.kind, ExprKind::Binary { op: BinOp::Mul, .. }));
    }

    #[test]
    fn map_literal_versus_block() {
        let p = parse(r#"fn f(m) { if m == 1 { x = {"a": 1, "b": [2]} } }"#);
        let StmtKind::If { then_body, .. } = &p.functions[0].body[0].kind else { panic!() };
        let StmtKind::Assign { value, .. } = &then_body[0].kind else { panic!() };
        assert!(matches!(&value.kind, ExprKind::Map(e) if e.len() == 2));
    }

    #[test]
    fn primitives_parse_to_dedicated_nodes() {
        let src = r#"fn f(t, s) {
            branchpoint(name="x", branching=3)
            r = branchpoint(message_to_controller=[t, s])
            record_score(majority_vote, r, label="q")
            record_costs(llm=1, calls=2)
            v = protect(perform("llm.flaky", t), "ProviderError", 3)
            h = searchover(helper(t))
            kill_branch()
            early_stop()
            optional_return(v)
        }"#;
        let body = &parse(src).functions[0].body;
        let names: Vec<&str> = body
            .iter()
            .map(|s| match &s.kind {
                StmtKind::Expr(Expr { kind: ExprKind::Prim(p), .. }) => p.name(),
                StmtKind::Assign { value: Expr { kind: ExprKind::Prim(p), .. }, .. } => p.name(),
                other => panic!("{other:?}"),
            })
            .collect();
        assert_eq!(
            names,
            [
                "branchpoint",
                "branchpoint",
                "record_score",
                "record_costs",
                "protect",
                "searchover",
                "kill_branch",
                "early_stop",
                "optional_return"
            ]
        );
    }

    #[test]
    fn compound_assignment_desugars() {
        let p = parse("fn f() { c += 2 }");
        let StmtKind::Assign { value, .. } = &p.functions[0].body[0].kind else { panic!() };
        assert!(matches!(value.kind, ExprKind::Binary { op: BinOp::Add, .. }));
    }

    #[test]
    fn errors_carry_spans_and_expectations() {
        let e = parse_err("fn f( { }");
        assert_eq!(e.expected, vec!["name".to_string()]);
        assert_eq!(e.span.start, 6);
        assert!(parse_err("fn f() { searchover(1) }").message.contains("function call"));
        assert!(parse_err("fn f() { choose() }").message.contains("positional"));
        assert!(parse_err("fn f() { x = a < b < c }").message.contains("chained"));
        assert!(parse_err("fn f() { 1 = 2 }").message.contains("assignment target"));
    }

    #[test]
    fn else_if_chains() {
        let p = parse("fn f(a) { if a { x = 1 } else if !a { x = 2 } else { x = 3 } }");
        let StmtKind::If { else_body: Some(e), .. } = &p.functions[0].body[0].kind else { panic!() };
        assert!(matches!(e[0].kind, StmtKind::If { else_body: Some(_), .. }));
    }
}
