//! Lexer for PanScript source.

use std::fmt;

use super::Span;
use crate::error::LexError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Fn,
    If,
    Else,
    While,
    For,
    In,
    Break,
    Continue,
    Return,
    NoCopy,
    NeedsCopy,
    True,
    False,
    Null,
}

impl Keyword {
    fn from_ident(s: &str) -> Option<Self> {
        Some(match s {
            "fn" => Keyword::Fn,
            "if" => Keyword::If,
            "else" => Keyword::Else,
            "while" => Keyword::While,
            "for" => Keyword::For,
            "in" => Keyword::In,
            "break" => Keyword::Break,
            "continue" => Keyword::Continue,
            "return" => Keyword::Return,
            "nocopy" => Keyword::NoCopy,
            "needscopy" => Keyword::NeedsCopy,
            "true" => Keyword::True,
            "false" => Keyword::False,
            "null" => Keyword::Null,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Fn => "fn",
            Keyword::If => "if",
            Keyword::Else => "else",
            Keyword::While => "while",
            Keyword::For => "for",
            Keyword::In => "in",
            Keyword::Break => "break",
            Keyword::Continue => "continue",
            Keyword::Return => "return",
            Keyword::NoCopy => "nocopy",
            Keyword::NeedsCopy => "needscopy",
            Keyword::True => "true",
            Keyword::False => "false",
            Keyword::Null => "null",
        }
    }
}

/// The search primitives, lexed as their own token kind so they can never be
/// shadowed or parsed as plain calls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Prim {
    Branchpoint,
    Choose,
    RecordScore,
    RecordCosts,
    EarlyStop,
    KillBranch,
    OptionalReturn,
    Protect,
    Searchover,
    Perform,
}

impl Prim {
    pub const ALL: [Prim; 10] = [
        Prim::Branchpoint,
        Prim::Choose,
        Prim::RecordScore,
        Prim::RecordCosts,
        Prim::EarlyStop,
        Prim::KillBranch,
        Prim::OptionalReturn,
        Prim::Protect,
        Prim::Searchover,
        Prim::Perform,
    ];

    fn from_ident(s: &str) -> Option<Self> {
        Prim::ALL.into_iter().find(|p| p.as_str() == s)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Prim::Branchpoint => "branchpoint",
            Prim::Choose => "choose",
            Prim::RecordScore => "record_score",
            Prim::RecordCosts => "record_costs",
            Prim::EarlyStop => "early_stop",
            Prim::KillBranch => "kill_branch",
            Prim::OptionalReturn => "optional_return",
            Prim::Protect => "protect",
            Prim::Searchover => "searchover",
            Prim::Perform => "perform",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Name(String),
    Int(i64),
    Float(f64),
    Str(String),
    Kw(Keyword),
    Prim(Prim),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Semi,
    Eq,
    PlusEq,
    MinusEq,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Bang,
    AndAnd,
    OrOr,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Name(n) => write!(f, "name `{n}`"),
            TokenKind::Int(i) => write!(f, "integer {i}"),
            TokenKind::Float(x) => write!(f, "float {x}"),
            TokenKind::Str(s) => write!(f, "string {s:?}"),
            TokenKind::Kw(k) => write!(f, "`{}`", k.as_str()),
            TokenKind::Prim(p) => write!(f, "`{}`", p.as_str()),
            TokenKind::Eof => f.write_str("end of file"),
            other => write!(f, "`{}`", punct_str(other)),
        }
    }
}

fn punct_str(kind: &TokenKind) -> &'static str {
    match kind {
        TokenKind::LParen => "(",
        TokenKind::RParen => ")",
        TokenKind::LBracket => "[",
        TokenKind::RBracket => "]",
        TokenKind::LBrace => "{",
        TokenKind::RBrace => "}",
        TokenKind::Comma => ",",
        TokenKind::Colon => ":",
        TokenKind::Semi => ";",
        TokenKind::Eq => "=",
        TokenKind::PlusEq => "+=",
        TokenKind::MinusEq => "-=",
        TokenKind::EqEq => "==",
        TokenKind::NotEq => "!=",
        TokenKind::Lt => "<",
        TokenKind::Le => "<=",
        TokenKind::Gt => ">",
        TokenKind::Ge => ">=",
        TokenKind::Plus => "+",
        TokenKind::Minus => "-",
        TokenKind::Star => "*",
        TokenKind::Slash => "/",
        TokenKind::Percent => "%",
        TokenKind::Bang => "!",
        TokenKind::AndAnd => "&&",
        TokenKind::OrOr => "||",
        _ => "?",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

/// Splits `source` into tokens. Whitespace and comments (`#` or `//` to end
/// of line) are dropped. The returned stream always ends with `Eof`.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    Lexer { src: source, bytes: source.as_bytes(), pos: 0 }.run()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl Lexer<'_> {
    fn run(mut self) -> Result<Vec<Token>, LexError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            let start = self.pos;
            let Some(&b) = self.bytes.get(self.pos) else {
                out.push(Token { kind: TokenKind::Eof, span: Span::new(start, start) });
                return Ok(out);
            };
            let kind = match b {
                b'a'..=b'z' | b'A'..=b'Z' | b'_' => self.ident(),
                b'0'..=b'9' => self.number()?,
                b'"' => self.string()?,
                _ => self.punct()?,
            };
            out.push(Token { kind, span: Span::new(start, self.pos) });
        }
    }

    fn peek_at(&self, off: usize) -> Option<u8> {
        self.bytes.get(self.pos + off).copied()
    }

    fn skip_trivia(&mut self) {
        while let Some(b) = self.peek_at(0) {
            match b {
                b' ' | b'\t' | b'\r' | b'\n' => self.pos += 1,
                b'#' => self.skip_line(),
                b'/' if self.peek_at(1) == Some(b'/') => self.skip_line(),
                _ => break,
            }
        }
    }

    fn skip_line(&mut self) {
        while let Some(b) = self.peek_at(0) {
            if b == b'\n' {
                break;
            }
            self.pos += 1;
        }
    }

    fn ident(&mut self) -> TokenKind {
        let start = self.pos;
        while matches!(self.peek_at(0), Some(b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9' | b'_')) {
            self.pos += 1;
        }
        let text = &self.src[start..self.pos];
        if let Some(k) = Keyword::from_ident(text) {
            TokenKind::Kw(k)
        } else if let Some(p) = Prim::from_ident(text) {
            TokenKind::Prim(p)
        } else {
            TokenKind::Name(text.to_string())
        }
    }

    fn number(&mut self) -> Result<TokenKind, LexError> {
        let start = self.pos;
        let mut is_float = false;
        while matches!(self.peek_at(0), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.peek_at(0) == Some(b'.') && matches!(self.peek_at(1), Some(b'0'..=b'9')) {
            is_float = true;
            self.pos += 1;
            while matches!(self.peek_at(0), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
        }
        if matches!(self.peek_at(0), Some(b'e' | b'E')) {
            let sign = usize::from(matches!(self.peek_at(1), Some(b'+' | b'-')));
            if matches!(self.peek_at(1 + sign), Some(b'0'..=b'9')) {
                is_float = true;
                self.pos += 1 + sign;
                while matches!(self.peek_at(0), Some(b'0'..=b'9')) {
                    self.pos += 1;
                }
            }
        }
        let text = &self.src[start..self.pos];
        let span = Span::new(start, self.pos);
        if is_float {
            text.parse::<f64>()
                .map(TokenKind::Float)
                .map_err(|_| LexError::new(span, format!("invalid float literal `{text}`")))
        } else {
            text.parse::<i64>()
                .map(TokenKind::Int)
                .map_err(|_| LexError::new(span, format!("integer literal `{text}` out of range")))
        }
    }

    fn string(&mut self) -> Result<TokenKind, LexError> {
        let start = self.pos;
        self.pos += 1;
        let mut out = String::new();
        loop {
            let rest = &self.src[self.pos..];
            let Some(c) = rest.chars().next() else {
                return Err(LexError::new(Span::new(start, self.pos), "unterminated string"));
            };
            self.pos += c.len_utf8();
            match c {
                '"' => return Ok(TokenKind::Str(out)),
                '\\' => {
                    let esc_start = self.pos - 1;
                    let Some(e) = self.src[self.pos..].chars().next() else {
                        return Err(LexError::new(Span::new(start, self.pos), "unterminated string"));
                    };
                    self.pos += e.len_utf8();
                    match e {
                        'n' => out.push('\n'),
                        't' => out.push('\t'),
                        'r' => out.push('\r'),
                        '0' => out.push('\0'),
                        '"' => out.push('"'),
                        '\\' => out.push('\\'),
                        'u' => out.push(self.unicode_escape(esc_start)?),
                        other => {
                            return Err(LexError::new(
                                Span::new(esc_start, self.pos),
                                format!("unknown escape `\\{other}`"),
                            ))
                        }
                    }
                }
                c => out.push(c),
            }
        }
    }

    fn unicode_escape(&mut self, esc_start: usize) -> Result<char, LexError> {
        let bad = |pos| LexError::new(Span::new(esc_start, pos), "malformed unicode escape");
        if self.peek_at(0) != Some(b'{') {
            return Err(bad(self.pos));
        }
        let hex_start = self.pos + 1;
        let Some(close) = self.src[hex_start..].find('}') else {
            return Err(bad(self.pos));
        };
        let hex = &self.src[hex_start..hex_start + close];
        self.pos = hex_start + close + 1;
        u32::from_str_radix(hex, 16).ok().and_then(char::from_u32).ok_or_else(|| bad(self.pos))
    }

    fn punct(&mut self) -> Result<TokenKind, LexError> {
        let b = self.bytes[self.pos];
        let next = self.peek_at(1);
        let (kind, len) = match (b, next) {
            (b'=', Some(b'=')) => (TokenKind::EqEq, 2),
            (b'!', Some(b'=')) => (TokenKind::NotEq, 2),
            (b'<', Some(b'=')) => (TokenKind::Le, 2),
            (b'>', Some(b'=')) => (TokenKind::Ge, 2),
            (b'+', Some(b'=')) => (TokenKind::PlusEq, 2),
            (b'-', Some(b'=')) => (TokenKind::MinusEq, 2),
            (b'&', Some(b'&')) => (TokenKind::AndAnd, 2),
            (b'|', Some(b'|')) => (TokenKind::OrOr, 2),
            (b'(', _) => (TokenKind::LParen, 1),
            (b')', _) => (TokenKind::RParen, 1),
            (b'[', _) => (TokenKind::LBracket, 1),
            (b']', _) => (TokenKind::RBracket, 1),
            (b'{', _) => (TokenKind::LBrace, 1),
            (b'}', _) => (TokenKind::RBrace, 1),
            (b',', _) => (TokenKind::Comma, 1),
            (b':', _) => (TokenKind::Colon, 1),
            (b';', _) => (TokenKind::Semi, 1),
            (b'=', _) => (TokenKind::Eq, 1),
            (b'<', _) => (TokenKind::Lt, 1),
            (b'>', _) => (TokenKind::Gt, 1),
            (b'+', _) => (TokenKind::Plus, 1),
            (b'-', _) => (TokenKind::Minus, 1),
            (b'*', _) => (TokenKind::Star, 1),
            (b'/', _) => (TokenKind::Slash, 1),
            (b'%', _) => (TokenKind::Percent, 1),
            (b'!', _) => (TokenKind::Bang, 1),
            _ => {
                let c = self.src[self.pos..].chars().next().unwrap_or('\u{fffd}');
                return Err(LexError::new(
                    Span::new(self.pos, self.pos + c.len_utf8()),
                    format!("unexpected character `{c}`"),
                ));
            }
        };
        self.pos += len;
        Ok(kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).filter(|k| *k != TokenKind::Eof).collect()
    }

    #[test]
    fn minimal_assignment() {
        assert_eq!(kinds("x = 1"), vec![TokenKind::Name("x".into()), TokenKind::Eq, TokenKind::Int(1)]);
    }

    #[test]
    fn branchpoint_with_name() {
        assert_eq!(
            kinds(r#"branchpoint(name="foo")"#),
            vec![
                TokenKind::Prim(Prim::Branchpoint),
                TokenKind::LParen,
                TokenKind::Name("name".into()),
                TokenKind::Eq,
                TokenKind::Str("foo".into()),
                TokenKind::RParen,
            ]
        );
    }

    #[test]
    fn invalid_character_reports_offset() {
        let err = tokenize("x = @").unwrap_err();
        assert_eq!(err.span.start, 4);
    }

    #[test]
    fn unterminated_string() {
        let err = tokenize("x = \"abc").unwrap_err();
        assert!(err.message.contains("unterminated"));
        assert_eq!(err.span.start, 4);
    }

    #[test]
    fn keywords_comments_and_crlf() {
        let toks = kinds("# comment\r\nwhile true { break } // trailing\r\nnocopy xs");
        assert_eq!(
            toks,
            vec![
                TokenKind::Kw(Keyword::While),
                TokenKind::Kw(Keyword::True),
                TokenKind::LBrace,
                TokenKind::Kw(Keyword::Break),
                TokenKind::RBrace,
                TokenKind::Kw(Keyword::NoCopy),
                TokenKind::Name("xs".into()),
            ]
        );
    }

    #[test]
    fn numbers_and_escapes() {
        assert_eq!(
            kinds(r#"1.5 2e3 7 "a\n\u{41}""#),
            vec![TokenKind::Float(1.5), TokenKind::Float(2000.0), TokenKind::Int(7), TokenKind::Str("a\nA".into()),]
        );
    }

    #[test]
    fn tokens_cover_source() {
        let src = "fn f(a) { return a + 1 }";
        let toks = tokenize(src).unwrap();
        assert!(toks.iter().all(|t| t.span.end <= src.len()));
        assert_eq!(toks.last().unwrap().span.start, src.len());
    }
}
