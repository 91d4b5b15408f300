//! Recursive-descent parser.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 't' | 'pi' | 'e' | func '(' expr ')' | '(' expr ')'
//! ```

use super::{BinaryOp, Expr, ExprError, NamedConst, UnaryOp};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Number(x) => format!("number {x}"),
            Token::Ident(s) => format!("identifier `{s}`"),
            Token::Op(c) => format!("`{c}`"),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
            Token::End => "end of input".into(),
        }
    }
}

const ATOM_START: &[&str] = &["number", "`t`", "identifier", "`(`", "`-`"];

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    /// Returns the next token and its byte offset.
    fn next(&mut self) -> Result<(Token, usize), ExprError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let Some(c) = rest.chars().next() else {
            return Ok((Token::End, start));
        };
        let bytes = rest.as_bytes();
        if c.is_ascii_digit() || (c == '.' && bytes.get(1).is_some_and(u8::is_ascii_digit)) {
            let mut end = 0;
            while end < bytes.len() && bytes[end].is_ascii_digit() {
                end += 1;
            }
            if end < bytes.len() && bytes[end] == b'.' {
                end += 1;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &rest[..end];
            let value: f64 = text.parse().map_err(|_| ExprError::Syntax {
                offset: start,
                expected: vec!["number"],
                found: format!("`{text}`"),
            })?;
            self.pos += end;
            return Ok((Token::Number(value), start));
        }
        if c.is_alphabetic() || c == '_' {
            let end = rest
                .char_indices()
                .find(|&(_, ch)| !(ch.is_alphanumeric() || ch == '_'))
                .map_or(rest.len(), |(i, _)| i);
            self.pos += end;
            return Ok((Token::Ident(rest[..end].to_string()), start));
        }
        self.pos += c.len_utf8();
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Token::Op(c),
            '(' => Token::LParen,
            ')' => Token::RParen,
            other => {
                return Err(ExprError::Syntax {
                    offset: start,
                    expected: vec!["operator", "operand"],
                    found: format!("`{other}`"),
                })
            }
        };
        Ok((tok, start))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Token,
    offset: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ExprError> {
        let mut lexer = Lexer { src, pos: 0 };
        let (tok, offset) = lexer.next()?;
        Ok(Parser { lexer, tok, offset })
    }

    fn bump(&mut self) -> Result<(), ExprError> {
        let (tok, offset) = self.lexer.next()?;
        self.tok = tok;
        self.offset = offset;
        Ok(())
    }

    fn unexpected(&self, expected: &[&'static str]) -> ExprError {
        ExprError::Syntax {
            offset: self.offset,
            expected: expected.to_vec(),
            found: self.tok.describe(),
        }
    }

    fn expect(&mut self, tok: Token, name: &'static str) -> Result<(), ExprError> {
        if self.tok == tok {
            self.bump()
        } else {
            Err(self.unexpected(&[name]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Token::Op('+') => BinaryOp::Add,
                Token::Op('-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Token::Op('*') => BinaryOp::Mul,
                Token::Op('/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.tok == Token::Op('-') {
            self.bump()?;
            let arg = self.unary()?;
            return Ok(Expr::unary(UnaryOp::Neg, arg));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.tok == Token::Op('^') {
            self.bump()?;
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.tok.clone() {
            Token::Number(x) => {
                self.bump()?;
                Ok(Expr::Const(x))
            }
            Token::LParen => {
                self.bump()?;
                let inner = self.expr()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner)
            }
            Token::Ident(name) => {
                let offset = self.offset;
                self.bump()?;
                match name.as_str() {
                    "t" => Ok(Expr::Time),
                    "pi" => Ok(Expr::Named(NamedConst::Pi)),
                    "e" => Ok(Expr::Named(NamedConst::E)),
                    _ => {
                        let op = UnaryOp::from_name(&name)
                            .ok_or(ExprError::UnknownIdentifier { name, offset })?;
                        self.expect(Token::LParen, "`(`")?;
                        let arg = self.expr()?;
                        self.expect(Token::RParen, "`)`")?;
                        Ok(Expr::unary(op, arg))
                    }
                }
            }
            _ => Err(self.unexpected(ATOM_START)),
        }
    }
}

/// Parses expression text into an [`Expr`].
pub fn parse(source: &str) -> Result<Expr, ExprError> {
    let mut parser = Parser::new(source)?;
    let expr = parser.expr()?;
    if parser.tok != Token::End {
        return Err(parser.unexpected(&["operator", "end of input"]));
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Expr {
        Expr::Const(x)
    }

    #[test]
    fn grammar_cases() {
        assert_eq!(
            parse("2*t+1").unwrap(),
            Expr::binary(
                BinaryOp::Add,
                Expr::binary(BinaryOp::Mul, c(2.0), Expr::Time),
                c(1.0)
            )
        );
        assert_eq!(
            parse("cos(2*pi*t)").unwrap(),
            Expr::unary(
                UnaryOp::Cos,
                Expr::binary(
                    BinaryOp::Mul,
                    Expr::binary(BinaryOp::Mul, c(2.0), Expr::Named(NamedConst::Pi)),
                    Expr::Time
                )
            )
        );
    }

    #[test]
    fn unbalanced_paren_reports_offset() {
        match parse("sin(").unwrap_err() {
            ExprError::Syntax { offset, expected, .. } => {
                assert_eq!(offset, 4);
                assert!(expected.contains(&"number"));
            }
            other => panic!("unexpected {other:?}"),
        }
        match parse("(t+1").unwrap_err() {
            ExprError::Syntax { offset, expected, .. } => {
                assert_eq!(offset, 4);
                assert_eq!(expected, vec!["`)`"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier() {
        assert_eq!(
            parse("1 + foo(t)").unwrap_err(),
            ExprError::UnknownIdentifier {
                name: "foo".into(),
                offset: 4
            }
        );
    }

    #[test]
    fn trailing_garbage_and_bad_chars() {
        assert!(matches!(parse("t t"), Err(ExprError::Syntax { offset: 2, .. })));
        assert!(matches!(parse("t $ 2"), Err(ExprError::Syntax { offset: 2, .. })));
        assert!(matches!(parse(""), Err(ExprError::Syntax { offset: 0, .. })));
        assert!(matches!(parse("sin t"), Err(ExprError::Syntax { offset: 4, .. })));
    }

    #[test]
    fn precedence_and_associativity() {
        // unary minus binds looser than ^
        assert_eq!(parse("-t^2").unwrap().eval(3.0).unwrap(), -9.0);
        // ^ is right-associative
        assert_eq!(parse("2^3^2").unwrap().eval(0.0).unwrap(), 512.0);
        assert_eq!(parse("2^-1").unwrap().eval(0.0).unwrap(), 0.5);
        assert_eq!(parse("8/4/2").unwrap().eval(0.0).unwrap(), 1.0);
        assert_eq!(parse("1-2-3").unwrap().eval(0.0).unwrap(), -4.0);
        assert_eq!(parse("2*-t").unwrap().eval(1.5).unwrap(), -3.0);
    }

    #[test]
    fn numbers() {
        assert_eq!(parse("1e-3").unwrap(), c(1e-3));
        assert_eq!(parse(".5").unwrap(), c(0.5));
        assert_eq!(parse("2.5E+2").unwrap(), c(250.0));
        assert_eq!(parse("e").unwrap(), Expr::Named(NamedConst::E));
        // `2e` is a number followed by a stray identifier
        assert!(parse("2e").is_err());
    }
}
