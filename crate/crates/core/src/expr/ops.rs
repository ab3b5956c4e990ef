use std::fmt;
use std::sync::Arc;

use crate::error::{FexError, Result};
use crate::transnet::TnOperator;

/// Scalar unary operator with derivatives up to third order.
#[derive(Debug, Clone)]
pub enum UnaryOp {
    Zero,
    One,
    Id,
    Square,
    Cube,
    Quartic,
    Exp,
    Sin,
    Cos,
    Tn(Arc<TnOperator>),
}

impl UnaryOp {
    pub fn builtin(name: &str) -> Option<Self> {
        Some(match name {
            "0" => UnaryOp::Zero,
            "1" => UnaryOp::One,
            "id" | "Id" => UnaryOp::Id,
            "x^2" => UnaryOp::Square,
            "x^3" => UnaryOp::Cube,
            "x^4" => UnaryOp::Quartic,
            "exp" => UnaryOp::Exp,
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            _ => return None,
        })
    }

    pub fn name(&self) -> String {
        match self {
            UnaryOp::Zero => "0".into(),
            UnaryOp::One => "1".into(),
            UnaryOp::Id => "id".into(),
            UnaryOp::Square => "x^2".into(),
            UnaryOp::Cube => "x^3".into(),
            UnaryOp::Quartic => "x^4".into(),
            UnaryOp::Exp => "exp".into(),
            UnaryOp::Sin => "sin".into(),
            UnaryOp::Cos => "cos".into(),
            UnaryOp::Tn(tn) => tn.name(),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            UnaryOp::Zero => 0.0,
            UnaryOp::One => 1.0,
            UnaryOp::Id => x,
            UnaryOp::Square => x * x,
            UnaryOp::Cube => x * x * x,
            UnaryOp::Quartic => (x * x) * (x * x),
            UnaryOp::Exp => x.exp(),
            UnaryOp::Sin => x.sin(),
            UnaryOp::Cos => x.cos(),
            UnaryOp::Tn(tn) => tn.value(x),
        }
    }

    /// `[f, f', f'', f''']` at `x`.
    pub fn derivs(&self, x: f64) -> [f64; 4] {
        match self {
            UnaryOp::Zero => [0.0; 4],
            UnaryOp::One => [1.0, 0.0, 0.0, 0.0],
            UnaryOp::Id => [x, 1.0, 0.0, 0.0],
            UnaryOp::Square => [x * x, 2.0 * x, 2.0, 0.0],
            UnaryOp::Cube => [x * x * x, 3.0 * x * x, 6.0 * x, 6.0],
            UnaryOp::Quartic => [(x * x) * (x * x), 4.0 * x * x * x, 12.0 * x * x, 24.0 * x],
            UnaryOp::Exp => {
                let e = x.exp();
                [e; 4]
            }
            UnaryOp::Sin => {
                let (s, c) = x.sin_cos();
                [s, c, -s, -c]
            }
            UnaryOp::Cos => {
                let (s, c) = x.sin_cos();
                [c, -s, -c, s]
            }
            UnaryOp::Tn(tn) => tn.derivs(x),
        }
    }

    /// Infix rendering of this operator applied to `arg`.
    pub(crate) fn apply_str(&self, arg: &str) -> String {
        match self {
            UnaryOp::Zero => "0".into(),
            UnaryOp::One => "1".into(),
            UnaryOp::Id => arg.into(),
            UnaryOp::Square => format!("({arg})^2"),
            UnaryOp::Cube => format!("({arg})^3"),
            UnaryOp::Quartic => format!("({arg})^4"),
            other => format!("{}({arg})", other.name()),
        }
    }
}

impl fmt::Display for UnaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" | "×" => BinaryOp::Mul,
            "/" | "÷" => BinaryOp::Div,
            _ => return None,
        })
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
        }
    }
}

impl fmt::Display for BinaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Operators admissible at unary and binary nodes.
#[derive(Debug, Clone)]
pub struct OperatorPool {
    pub unary: Vec<UnaryOp>,
    pub binary: Vec<BinaryOp>,
}

impl OperatorPool {
    pub fn new(unary: Vec<UnaryOp>, binary: Vec<BinaryOp>) -> Result<Self> {
        if unary.is_empty() {
            return Err(FexError::Config("unary operator set is empty".into()));
        }
        if binary.is_empty() {
            return Err(FexError::Config("binary operator set is empty".into()));
        }
        Ok(Self { unary, binary })
    }

    /// Builtin-only pool from operator names.
    pub fn from_names(unary: &[&str], binary: &[&str]) -> Result<Self> {
        let u = unary
            .iter()
            .map(|n| UnaryOp::builtin(n).ok_or_else(|| FexError::UnknownOperator(n.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let b = binary
            .iter()
            .map(|n| BinaryOp::parse(n).ok_or_else(|| FexError::UnknownOperator(n.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(u, b)
    }

    pub fn unary_index(&self, name: &str) -> Option<usize> {
        self.unary.iter().position(|u| u.name() == name)
    }

    pub fn binary_index(&self, name: &str) -> Option<usize> {
        self.binary.iter().position(|b| b.symbol() == name || BinaryOp::parse(name) == Some(*b))
    }

    pub fn unary_names(&self) -> Vec<String> {
        self.unary.iter().map(UnaryOp::name).collect()
    }

    pub fn binary_names(&self) -> Vec<String> {
        self.binary.iter().map(|b| b.symbol().to_string()).collect()
    }
}
