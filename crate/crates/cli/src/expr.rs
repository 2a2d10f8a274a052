//! Closed-form expressions: numbers, named variables, `pi`, `e`,
//! `+ - * / ^`, unary minus, parentheses, `sin(..)` and `log(..)`.
//!
//! `^` is right-associative and binds tighter than unary minus, so
//! `-n^2 = -(n^2)`.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    /// Byte offset into the source.
    pub position: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at position {}: {}", self.position, self.message)
    }
}

impl std::error::Error for ParseError {}

impl ParseError {
    /// Source line with a caret under the offending position.
    pub fn render(&self, source: &str) -> String {
        format!(
            "{source}\n{}^\n{}",
            " ".repeat(source[..self.position.min(source.len())].chars().count()),
            self
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Sin(Box<Node>),
    Log(Box<Node>),
}

impl Node {
    fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::Var(i) => vars[*i],
            Node::Neg(a) => -a.eval(vars),
            Node::Add(a, b) => a.eval(vars) + b.eval(vars),
            Node::Sub(a, b) => a.eval(vars) - b.eval(vars),
            Node::Mul(a, b) => a.eval(vars) * b.eval(vars),
            Node::Div(a, b) => a.eval(vars) / b.eval(vars),
            Node::Pow(a, b) => a.eval(vars).powf(b.eval(vars)),
            Node::Sin(a) => a.eval(vars).sin(),
            Node::Log(a) => a.eval(vars).ln(),
        }
    }
}

/// A parsed expression over a fixed list of variable names.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
}

impl Expr {
    pub fn parse(source: &str, variables: &[&str]) -> Result<Expr, ParseError> {
        let tokens = tokenize(source)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            variables,
            end: source.len(),
        };
        let root = p.expr()?;
        if let Some(t) = p.peek() {
            return Err(ParseError {
                position: t.position,
                message: format!("unexpected {}", t.kind),
            });
        }
        Ok(Expr { root })
    }

    /// `values` in the order of the variable list given to `parse`.
    pub fn eval(&self, values: &[f64]) -> f64 {
        self.root.eval(values)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Num(v) => write!(f, "number {v}"),
            Kind::Ident(s) => write!(f, "name '{s}'"),
            Kind::Op(c) => write!(f, "'{c}'"),
            Kind::LParen => write!(f, "'('"),
            Kind::RParen => write!(f, "')'"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: Kind,
    position: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent part, only when followed by digits
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let value = text.parse::<f64>().map_err(|_| ParseError {
                position: start,
                message: format!("malformed number '{text}'"),
            })?;
            Kind::Num(value)
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            Kind::Ident(src[start..i].to_string())
        } else {
            i += 1;
            match c {
                '+' | '-' | '*' | '/' | '^' => Kind::Op(c),
                '(' => Kind::LParen,
                ')' => Kind::RParen,
                _ => {
                    let ch = src[start..].chars().next().unwrap_or(c);
                    return Err(ParseError {
                        position: start,
                        message: format!("unexpected character '{ch}'"),
                    });
                }
            }
        };
        tokens.push(Token { kind, position: start });
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    variables: &'a [&'a str],
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.end, |t| t.position)
    }

    fn eat_op(&mut self, op: char) -> bool {
        if matches!(self.peek(), Some(Token { kind: Kind::Op(c), .. }) if *c == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_rparen(&mut self, open: usize) -> Result<(), ParseError> {
        match self.peek() {
            Some(Token { kind: Kind::RParen, .. }) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(ParseError {
                position: self.here(),
                message: format!("expected ')' to close '(' at position {open}"),
            }),
        }
    }

    // expr := term (('+' | '-') term)*
    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut node = self.term()?;
        loop {
            if self.eat_op('+') {
                node = Node::Add(Box::new(node), Box::new(self.term()?));
            } else if self.eat_op('-') {
                node = Node::Sub(Box::new(node), Box::new(self.term()?));
            } else {
                return Ok(node);
            }
        }
    }

    // term := unary (('*' | '/') unary)*
    fn term(&mut self) -> Result<Node, ParseError> {
        let mut node = self.unary()?;
        loop {
            if self.eat_op('*') {
                node = Node::Mul(Box::new(node), Box::new(self.unary()?));
            } else if self.eat_op('/') {
                node = Node::Div(Box::new(node), Box::new(self.unary()?));
            } else {
                return Ok(node);
            }
        }
    }

    // unary := ('-' | '+') unary | power
    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.eat_op('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat_op('+') {
            return self.unary();
        }
        self.power()
    }

    // power := atom ('^' unary)?
    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.eat_op('^') {
            return Ok(Node::Pow(Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let Some(token) = self.peek().cloned() else {
            return Err(ParseError {
                position: self.end,
                message: "unexpected end of expression".into(),
            });
        };
        self.pos += 1;
        match token.kind {
            Kind::Num(v) => Ok(Node::Num(v)),
            Kind::LParen => {
                let inner = self.expr()?;
                self.expect_rparen(token.position)?;
                Ok(inner)
            }
            Kind::Ident(name) => {
                if let Some(i) = self.variables.iter().position(|v| *v == name) {
                    return Ok(Node::Var(i));
                }
                match name.as_str() {
                    "pi" => Ok(Node::Num(std::f64::consts::PI)),
                    "e" => Ok(Node::Num(std::f64::consts::E)),
                    "sin" | "log" => {
                        let open = self.here();
                        match self.peek() {
                            Some(Token { kind: Kind::LParen, .. }) => self.pos += 1,
                            _ => {
                                return Err(ParseError {
                                    position: open,
                                    message: format!("expected '(' after {name}"),
                                })
                            }
                        }
                        let arg = Box::new(self.expr()?);
                        self.expect_rparen(open)?;
                        Ok(if name == "sin" { Node::Sin(arg) } else { Node::Log(arg) })
                    }
                    _ => Err(ParseError {
                        position: token.position,
                        message: format!(
                            "unknown name '{name}' (variables: {}; functions: sin, log; constants: pi, e)",
                            if self.variables.is_empty() {
                                "none".to_string()
                            } else {
                                self.variables.join(", ")
                            }
                        ),
                    }),
                }
            }
            other => Err(ParseError {
                position: token.position,
                message: format!("unexpected {other}"),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(src: &str, n: f64) -> f64 {
        Expr::parse(src, &["n"]).unwrap().eval(&[n])
    }

    #[test]
    fn arithmetic_and_precedence() {
        assert_eq!(eval("1 + 2*3", 0.0), 7.0);
        assert_eq!(eval("(1 + 2)*3", 0.0), 9.0);
        assert_eq!(eval("2^3^2", 0.0), 512.0);
        assert_eq!(eval("-2^2", 0.0), -4.0);
        assert_eq!(eval("2^-1", 0.0), 0.5);
        assert_eq!(eval("n^(-2.5)", 4.0), 4f64.powf(-2.5));
        assert_eq!(eval("1.5e2 / n", 3.0), 50.0);
        assert!((eval("sin(pi/2) + log(e)", 0.0) - 2.0).abs() < 1e-15);
        assert_eq!(
            eval("n^(-(1+sin(pi*n)))", 2.0),
            2f64.powf(-(1.0 + (std::f64::consts::PI * 2.0).sin()))
        );
    }

    #[test]
    fn errors_carry_positions() {
        let err = Expr::parse("n^(-2.5", &["n"]).unwrap_err();
        assert_eq!(err.position, 7);
        let err = Expr::parse("n + x", &["n"]).unwrap_err();
        assert_eq!(err.position, 4);
        assert!(err.message.contains("unknown name 'x'"));
        let err = Expr::parse("n $ 2", &["n"]).unwrap_err();
        assert_eq!(err.position, 2);
        let err = Expr::parse("sin n", &["n"]).unwrap_err();
        assert_eq!(err.position, 4);
        let err = Expr::parse("2 3", &["n"]).unwrap_err();
        assert_eq!(err.position, 2);
        assert!(Expr::parse("", &[]).is_err());
        assert!(err.render("2 3").contains("  ^"));
    }

    #[test]
    fn several_variables() {
        let e = Expr::parse("ux*uy - ux", &["ux", "uy"]).unwrap();
        assert_eq!(e.eval(&[2.0, 5.0]), 8.0);
    }
}
