//! Arithmetic expressions in the time variable `t`.
//!
//! Every time-dependent coefficient of a model is written as a small
//! expression such as `"1 + 0.3*cos(2*pi*t)"`. Expressions are parsed once
//! into an immutable [`Expr`] tree and then evaluated either as plain reals
//! ([`Expr::eval`]) or as dual numbers carrying the exact time derivative
//! ([`Expr::eval_dual`]).
//!
//! Evaluation never returns NaN or infinity: any node whose value leaves the
//! finite reals is reported as an [`ExprError::Domain`] naming that node.

mod dual;
mod parser;

use std::fmt;

pub use dual::Dual;
pub use parser::parse;

/// Elementary functions of one argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Atan,
}

impl UnaryOp {
    /// All named functions, in the spelling accepted by the parser.
    pub const FUNCTIONS: [UnaryOp; 10] = [
        UnaryOp::Sin,
        UnaryOp::Cos,
        UnaryOp::Tan,
        UnaryOp::Sinh,
        UnaryOp::Cosh,
        UnaryOp::Tanh,
        UnaryOp::Exp,
        UnaryOp::Log,
        UnaryOp::Sqrt,
        UnaryOp::Atan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Tan => "tan",
            UnaryOp::Sinh => "sinh",
            UnaryOp::Cosh => "cosh",
            UnaryOp::Tanh => "tanh",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Atan => "atan",
        }
    }

    fn from_name(name: &str) -> Option<UnaryOp> {
        Self::FUNCTIONS.iter().copied().find(|op| op.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NamedConst {
    Pi,
    E,
}

impl NamedConst {
    pub fn value(self) -> f64 {
        match self {
            NamedConst::Pi => std::f64::consts::PI,
            NamedConst::E => std::f64::consts::E,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NamedConst::Pi => "pi",
            NamedConst::E => "e",
        }
    }
}

/// Expression tree.
///
/// Trees produced by [`parse`] only contain finite, non-negative literals;
/// a leading minus is always a [`UnaryOp::Neg`] node. For such trees
/// `parse(&expr.to_string()) == Ok(expr)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Time,
    Named(NamedConst),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("{message} in `{node}`")]
    Domain { message: String, node: String },
}

impl ExprError {
    fn domain(message: impl Into<String>, node: &Expr) -> Self {
        ExprError::Domain {
            message: message.into(),
            node: node.to_string(),
        }
    }
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn unary(op: UnaryOp, arg: Expr) -> Expr {
        Expr::Unary(op, Box::new(arg))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// True when the tree does not mention `t`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Named(_) => true,
            Expr::Time => false,
            Expr::Unary(_, a) => a.is_constant(),
            Expr::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Time | Expr::Named(_) => 1,
            Expr::Unary(_, a) => 1 + a.depth(),
            Expr::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64, ExprError> {
        let value = match self {
            Expr::Const(c) => *c,
            Expr::Time => t,
            Expr::Named(c) => c.value(),
            Expr::Unary(op, a) => {
                let x = a.eval(t)?;
                match op {
                    UnaryOp::Neg => -x,
                    UnaryOp::Sin => x.sin(),
                    UnaryOp::Cos => x.cos(),
                    UnaryOp::Tan => x.tan(),
                    UnaryOp::Sinh => x.sinh(),
                    UnaryOp::Cosh => x.cosh(),
                    UnaryOp::Tanh => x.tanh(),
                    UnaryOp::Exp => x.exp(),
                    UnaryOp::Atan => x.atan(),
                    UnaryOp::Log => {
                        if x <= 0.0 {
                            return Err(ExprError::domain(
                                format!("log of non-positive value {x}"),
                                self,
                            ));
                        }
                        x.ln()
                    }
                    UnaryOp::Sqrt => {
                        if x < 0.0 {
                            return Err(ExprError::domain(
                                format!("sqrt of negative value {x}"),
                                self,
                            ));
                        }
                        x.sqrt()
                    }
                }
            }
            Expr::Binary(op, a, b) => {
                let x = a.eval(t)?;
                let y = b.eval(t)?;
                match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                    BinaryOp::Div => {
                        if y == 0.0 {
                            return Err(ExprError::domain("division by zero", self));
                        }
                        x / y
                    }
                    BinaryOp::Pow => x.powf(y),
                }
            }
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(ExprError::domain(format!("non-finite value {value}"), self))
        }
    }

    /// Value and exact time derivative by forward-mode differentiation.
    pub fn eval_dual(&self, t: f64) -> Result<Dual, ExprError> {
        let value = match self {
            Expr::Const(c) => Dual::constant(*c),
            Expr::Time => Dual::variable(t),
            Expr::Named(c) => Dual::constant(c.value()),
            Expr::Unary(op, a) => {
                let x = a.eval_dual(t)?;
                match op {
                    UnaryOp::Neg => -x,
                    UnaryOp::Sin => x.sin(),
                    UnaryOp::Cos => x.cos(),
                    UnaryOp::Tan => x.tan(),
                    UnaryOp::Sinh => x.sinh(),
                    UnaryOp::Cosh => x.cosh(),
                    UnaryOp::Tanh => x.tanh(),
                    UnaryOp::Exp => x.exp(),
                    UnaryOp::Atan => x.atan(),
                    UnaryOp::Log => {
                        if x.value <= 0.0 {
                            return Err(ExprError::domain(
                                format!("log of non-positive value {}", x.value),
                                self,
                            ));
                        }
                        x.ln()
                    }
                    UnaryOp::Sqrt => {
                        // sqrt has no finite derivative at 0
                        if x.value < 0.0 || (x.value == 0.0 && x.deriv != 0.0) {
                            return Err(ExprError::domain(
                                format!("sqrt not differentiable at {}", x.value),
                                self,
                            ));
                        }
                        x.sqrt()
                    }
                }
            }
            Expr::Binary(op, a, b) => {
                let x = a.eval_dual(t)?;
                let y = b.eval_dual(t)?;
                match op {
                    BinaryOp::Add => x + y,
                    BinaryOp::Sub => x - y,
                    BinaryOp::Mul => x * y,
                    BinaryOp::Div => {
                        if y.value == 0.0 {
                            return Err(ExprError::domain("division by zero", self));
                        }
                        x / y
                    }
                    BinaryOp::Pow => {
                        if y.deriv != 0.0 && x.value <= 0.0 {
                            return Err(ExprError::domain(
                                format!("variable exponent on non-positive base {}", x.value),
                                self,
                            ));
                        }
                        x.pow(y)
                    }
                }
            }
        };
        if value.value.is_finite() && value.deriv.is_finite() {
            Ok(value)
        } else {
            Err(ExprError::domain(
                format!("non-finite value ({}, {})", value.value, value.deriv),
                self,
            ))
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
            Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
            Expr::Unary(UnaryOp::Neg, _) => 3,
            Expr::Binary(BinaryOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

impl From<f64> for Expr {
    fn from(value: f64) -> Self {
        Expr::Const(value)
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Debug gives the shortest representation that reads back exactly.
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Time => f.write_str("t"),
            Expr::Named(c) => f.write_str(c.name()),
            Expr::Unary(UnaryOp::Neg, a) => {
                f.write_str("-")?;
                write_operand(f, a, a.precedence() < 3)
            }
            Expr::Unary(op, a) => write!(f, "{}({a})", op.name()),
            Expr::Binary(op, a, b) => {
                let p = self.precedence();
                let (left_parens, right_parens) = match op {
                    BinaryOp::Pow => (a.precedence() <= p, b.precedence() < 3),
                    _ => (a.precedence() < p, b.precedence() <= p),
                };
                write_operand(f, a, left_parens)?;
                write!(f, "{}", op.symbol())?;
                write_operand(f, b, right_parens)
            }
        }
    }
}
