//! Closed-form fields `f(x, y)` parsed from strings.
//!
//! meval's own `Context` is not thread-safe, so evaluation goes through a
//! small provider with the usual elementary functions plus the built-in
//! initial data `triangle(x)` and `gaussian(x)`.

use anyhow::{anyhow, Context as _, Result};
use kss_core::problems::{gaussian, triangle};
use meval::{ContextProvider, Expr, FuncEvalError};

struct Scope {
    x: f64,
    y: f64,
}

impl ContextProvider for Scope {
    fn get_var(&self, name: &str) -> Option<f64> {
        match name {
            "x" => Some(self.x),
            "y" => Some(self.y),
            "pi" => Some(std::f64::consts::PI),
            "e" => Some(std::f64::consts::E),
            _ => None,
        }
    }

    fn eval_func(&self, name: &str, args: &[f64]) -> std::result::Result<f64, FuncEvalError> {
        let one = |f: fn(f64) -> f64| match args {
            [a] => Ok(f(*a)),
            _ => Err(FuncEvalError::NumberArgs(1)),
        };
        let two = |f: fn(f64, f64) -> f64| match args {
            [a, b] => Ok(f(*a, *b)),
            _ => Err(FuncEvalError::NumberArgs(2)),
        };
        match name {
            "sin" => one(f64::sin),
            "cos" => one(f64::cos),
            "tan" => one(f64::tan),
            "asin" => one(f64::asin),
            "acos" => one(f64::acos),
            "atan" => one(f64::atan),
            "sinh" => one(f64::sinh),
            "cosh" => one(f64::cosh),
            "tanh" => one(f64::tanh),
            "exp" => one(f64::exp),
            "ln" => one(f64::ln),
            "sqrt" => one(f64::sqrt),
            "abs" => one(f64::abs),
            "floor" => one(f64::floor),
            "ceil" => one(f64::ceil),
            "signum" => one(f64::signum),
            "atan2" => two(f64::atan2),
            "min" => two(f64::min),
            "max" => two(f64::max),
            "triangle" => one(triangle),
            "gaussian" => one(gaussian),
            _ => Err(FuncEvalError::UnknownFunction),
        }
    }
}

/// A parsed expression in `x`, `y`, `pi` and `e`.
#[derive(Debug, Clone)]
pub struct Field {
    expr: Expr,
}

impl Field {
    /// Parses `src` and evaluates it once so unknown names fail here, not mid-run.
    pub fn parse(src: &str) -> Result<Self> {
        let expr: Expr = src.parse().map_err(|e| anyhow!("cannot parse '{src}': {e}"))?;
        let field = Self { expr };
        field.try_eval(1.0, 1.0).with_context(|| format!("cannot evaluate '{src}'"))?;
        Ok(field)
    }

    fn try_eval(&self, x: f64, y: f64) -> Result<f64> {
        self.expr.eval_with_context(Scope { x, y }).map_err(|e| anyhow!("{e}"))
    }

    /// Value at `(x, y)`; NaN if evaluation fails (it was checked at parse time).
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.try_eval(x, y).unwrap_or(f64::NAN)
    }
}

/// Evaluates a constant expression such as `pi/128`.
pub fn constant(src: &str) -> Result<f64> {
    let v = Field::parse(src)?;
    let (a, b) = (v.eval(0.3, 0.7), v.eval(1.9, 2.3));
    if a != b {
        return Err(anyhow!("'{src}' must not depend on x or y"));
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn evaluates_builtin_and_custom_functions() {
        let f = Field::parse("1 + 0.5*sin(x) + 0.25*cos(2*y) + triangle(x)").unwrap();
        let want = 1.0 + 0.5 * 0.7f64.sin() + 0.25 * (2.6f64).cos() + triangle(0.7);
        assert!((f.eval(0.7, 1.3) - want).abs() < 1e-15);
        assert_eq!(constant("pi/128").unwrap(), PI / 128.0);
        assert_eq!(Field::parse("gaussian(x)").unwrap().eval(2.0, 0.0), gaussian(2.0));
    }

    #[test]
    fn rejects_unknown_names() {
        assert!(Field::parse("foo(x)").is_err());
        assert!(Field::parse("z + 1").is_err());
        assert!(Field::parse("sin(").is_err());
        assert!(constant("x + 1").is_err());
    }
}
