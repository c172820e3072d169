//! ODE problem instances: order, coefficient formulas, interval, and the
//! line-oriented problem file format.
//!
//! A problem represents
//!
//! ```text
//! y^(n) + a_{n-1}(x) y^(n-1) + ... + a_0(x) y = 0    on (-a, a)
//! ```
//!
//! with coefficients that may be singular at x = 0. Problems are immutable
//! after loading; analyses never mutate them.

use crate::expr::{self, EvalError, Expr, ParseError, Precision};
use thiserror::Error;

/// One coefficient `a_k`, as a formula in `x`, with an optional user
/// assertion about its pole order at 0.
#[derive(Debug, Clone)]
pub struct CoefficientSpec {
    pub formula: Expr,
    pub declared_pole_order: Option<u32>,
}

/// An ODE problem instance. `coefficients[k]` multiplies `y^(k)`.
#[derive(Debug, Clone)]
pub struct OdeProblem {
    order: usize,
    coefficients: Vec<CoefficientSpec>,
    interval_radius: f64,
    label: String,
}

/// Values of `y, y', ..., y^(n-1)` at a starting point.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub x0: f64,
    pub values: Vec<f64>,
}

impl InitialData {
    pub fn new(x0: f64, values: Vec<f64>) -> Self {
        InitialData { x0, values }
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("expected {expected} coefficients a0..a{}, found {found}", expected - 1)]
    CoefficientCount { expected: usize, found: usize },
    #[error("line {line}: in `{key}`: {source}")]
    Expr {
        line: usize,
        key: String,
        source: ParseError,
    },
    #[error("order must be at least 2, got {0}")]
    OrderTooSmall(usize),
    #[error("interval radius must be positive, got {0}")]
    NonPositiveInterval(f64),
    #[error("pole_order_a{k} = {declared} exceeds n - k = {max} for order {n}")]
    PoleOrderTooLarge {
        k: usize,
        declared: u32,
        max: u32,
        n: usize,
    },
    #[error("coefficient index {k} out of range for order {n}")]
    IndexOutOfRange { k: usize, n: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl OdeProblem {
    /// Build a problem directly from parts, running the same validation as
    /// the file loader.
    pub fn new(
        order: usize,
        coefficients: Vec<CoefficientSpec>,
        interval_radius: f64,
        label: impl Into<String>,
    ) -> Result<Self, ModelError> {
        if order < 2 {
            return Err(ModelError::OrderTooSmall(order));
        }
        if !(interval_radius > 0.0) {
            return Err(ModelError::NonPositiveInterval(interval_radius));
        }
        if coefficients.len() != order {
            return Err(ModelError::CoefficientCount {
                expected: order,
                found: coefficients.len(),
            });
        }
        for (k, c) in coefficients.iter().enumerate() {
            if let Some(p) = c.declared_pole_order {
                let max = (order - k) as u32;
                if p > max {
                    return Err(ModelError::PoleOrderTooLarge {
                        k,
                        declared: p,
                        max,
                        n: order,
                    });
                }
            }
        }
        Ok(OdeProblem {
            order,
            coefficients,
            interval_radius,
            label: label.into(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &[CoefficientSpec] {
        &self.coefficients
    }

    pub fn interval_radius(&self) -> f64 {
        self.interval_radius
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Value of `a_k` at a nonzero `x`, at the given working precision.
    pub fn coefficient_at(&self, k: usize, x: f64, precision: Precision) -> Result<f64, ModelError> {
        if k >= self.order {
            return Err(ModelError::IndexOutOfRange { k, n: self.order });
        }
        Ok(expr::evaluate(&self.coefficients[k].formula, x, precision)?)
    }

    /// The equivalent first-order system `Y' = F(x, Y)` with `Y_i = y^(i)`.
    pub fn first_order_system(&self, precision: Precision) -> FirstOrderSystem<'_> {
        FirstOrderSystem {
            problem: self,
            precision,
        }
    }
}

/// Standard reduction of the scalar equation to a first-order system.
/// The last component is `-(a_{n-1} Y_{n-1} + ... + a_0 Y_0)`.
pub struct FirstOrderSystem<'a> {
    problem: &'a OdeProblem,
    precision: Precision,
}

impl FirstOrderSystem<'_> {
    pub fn dim(&self) -> usize {
        self.problem.order
    }

    pub fn eval(&self, x: f64, y: &[f64], dy: &mut [f64]) -> Result<(), ModelError> {
        let n = self.problem.order;
        debug_assert_eq!(y.len(), n);
        debug_assert_eq!(dy.len(), n);
        for i in 0..n - 1 {
            dy[i] = y[i + 1];
        }
        let mut acc = 0.0;
        for k in 0..n {
            let a = self.problem.coefficient_at(k, x, self.precision)?;
            acc += a * y[k];
        }
        dy[n - 1] = -acc;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Problem file format
// ---------------------------------------------------------------------------

/// Parse the line-oriented problem format:
///
/// ```text
/// order = 2
/// interval = 2.0
/// label = Bessel m=2
/// a0 = "1 - 4/x^2"
/// a1 = "1/x"
/// pole_order_a1 = 1
/// ```
///
/// Blank lines and lines starting with `#` are ignored. Any other key is
/// an error.
pub fn load_problem(spec: &str) -> Result<OdeProblem, ModelError> {
    let mut order: Option<usize> = None;
    let mut interval: Option<f64> = None;
    let mut label: Option<String> = None;
    let mut formulas: Vec<(usize, usize, String)> = Vec::new(); // (k, line, source)
    let mut pole_orders: Vec<(usize, usize, u32)> = Vec::new();

    for (idx, raw) in spec.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ModelError::Format {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "order" => {
                if order.is_some() {
                    return Err(ModelError::DuplicateKey {
                        line: line_no,
                        key: key.into(),
                    });
                }
                order = Some(value.parse().map_err(|_| ModelError::Format {
                    line: line_no,
                    message: format!("order must be an integer, got `{value}`"),
                })?);
            }
            "interval" => {
                if interval.is_some() {
                    return Err(ModelError::DuplicateKey {
                        line: line_no,
                        key: key.into(),
                    });
                }
                let v: f64 = value.parse().map_err(|_| ModelError::Format {
                    line: line_no,
                    message: format!("interval must be a real number, got `{value}`"),
                })?;
                interval = Some(v);
            }
            "label" => {
                if label.is_some() {
                    return Err(ModelError::DuplicateKey {
                        line: line_no,
                        key: key.into(),
                    });
                }
                label = Some(value.to_string());
            }
            _ => {
                if let Some(k_str) = key.strip_prefix("pole_order_a") {
                    let k: usize = k_str.parse().map_err(|_| ModelError::UnknownKey {
                        line: line_no,
                        key: key.into(),
                    })?;
                    if pole_orders.iter().any(|(k2, _, _)| *k2 == k) {
                        return Err(ModelError::DuplicateKey {
                            line: line_no,
                            key: key.into(),
                        });
                    }
                    let p: u32 = value.parse().map_err(|_| ModelError::Format {
                        line: line_no,
                        message: format!("pole order must be a nonnegative integer, got `{value}`"),
                    })?;
                    pole_orders.push((k, line_no, p));
                } else if let Some(k_str) = key.strip_prefix('a') {
                    let Ok(k) = k_str.parse::<usize>() else {
                        return Err(ModelError::UnknownKey {
                            line: line_no,
                            key: key.into(),
                        });
                    };
                    if formulas.iter().any(|(k2, _, _)| *k2 == k) {
                        return Err(ModelError::DuplicateKey {
                            line: line_no,
                            key: key.into(),
                        });
                    }
                    let inner = value
                        .strip_prefix('"')
                        .and_then(|v| v.strip_suffix('"'))
                        .ok_or_else(|| ModelError::Format {
                            line: line_no,
                            message: format!("coefficient formula must be quoted, got `{value}`"),
                        })?;
                    formulas.push((k, line_no, inner.to_string()));
                } else {
                    return Err(ModelError::UnknownKey {
                        line: line_no,
                        key: key.into(),
                    });
                }
            }
        }
    }

    let order = order.ok_or_else(|| ModelError::MissingKey("order".into()))?;
    if order < 2 {
        return Err(ModelError::OrderTooSmall(order));
    }
    let interval = interval.ok_or_else(|| ModelError::MissingKey("interval".into()))?;
    let label = label.ok_or_else(|| ModelError::MissingKey("label".into()))?;

    if formulas.len() != order {
        return Err(ModelError::CoefficientCount {
            expected: order,
            found: formulas.len(),
        });
    }
    for (k, line, _) in &formulas {
        if *k >= order {
            return Err(ModelError::Format {
                line: *line,
                message: format!("coefficient index a{k} out of range for order {order}"),
            });
        }
    }
    for (k, line, _) in &pole_orders {
        if *k >= order {
            return Err(ModelError::Format {
                line: *line,
                message: format!("pole_order_a{k} out of range for order {order}"),
            });
        }
    }

    let mut coefficients = Vec::with_capacity(order);
    for k in 0..order {
        let (_, line, source) = formulas
            .iter()
            .find(|(k2, _, _)| *k2 == k)
            .ok_or(ModelError::CoefficientCount {
                expected: order,
                found: formulas.len(),
            })?;
        let formula = expr::parse(source).map_err(|e| ModelError::Expr {
            line: *line,
            key: format!("a{k}"),
            source: e,
        })?;
        let declared_pole_order = pole_orders
            .iter()
            .find(|(k2, _, _)| *k2 == k)
            .map(|(_, _, p)| *p);
        coefficients.push(CoefficientSpec {
            formula,
            declared_pole_order,
        });
    }

    OdeProblem::new(order, coefficients, interval, label)
}

// ---------------------------------------------------------------------------
// Built-in problems for the bundled example families
// ---------------------------------------------------------------------------

/// Bessel equation of integer order m: `y'' + (1/x) y' + (1 - m^2/x^2) y = 0`.
pub fn bessel_problem(m: u32) -> OdeProblem {
    let spec = format!(
        "order = 2\ninterval = 2.0\nlabel = Bessel equation, m = {m}\n\
         a1 = \"1/x\"\na0 = \"1 - {}/x^2\"\npole_order_a1 = 1\npole_order_a0 = 2\n",
        (m as u64) * (m as u64)
    );
    load_problem(&spec).expect("built-in Bessel problem is well-formed")
}

/// The equation `y'' - (2a/x) y' + (1 + (a^2+a)/x^2) y = 0`, whose
/// nonzero solution `|x|^a sin|x| * sign-reflection` is flat at 0 but not
/// smooth. `alpha` is rendered as a 17-significant-digit decimal.
pub fn alpha_sine_problem(alpha: f64) -> OdeProblem {
    let a = format!("{alpha:.17}");
    let spec = format!(
        "order = 2\ninterval = 2.0\nlabel = x^alpha sin(x) family, alpha = {a}\n\
         a1 = \"-(2*{a})/x\"\na0 = \"1 + ({a}^2 + {a})/x^2\"\n"
    );
    load_problem(&spec).expect("built-in alpha-sine problem is well-formed")
}

/// Second-order Cauchy-Euler equation in normalized form:
/// `y'' + (a1/x) y' + (a0/x^2) y = 0` with constant `a0`, `a1`.
pub fn cauchy_euler_problem(a0: f64, a1: f64) -> OdeProblem {
    let spec = format!(
        "order = 2\ninterval = 2.0\nlabel = Cauchy-Euler, a0 = {a0}, a1 = {a1}\n\
         a1 = \"{a1}/x\"\na0 = \"{a0}/x^2\"\n"
    );
    load_problem(&spec).expect("built-in Cauchy-Euler problem is well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    const BESSEL_SPEC: &str = "order = 2\ninterval = 2.0\nlabel = bessel\n\
                               a1 = \"1/x\"\na0 = \"1 - 4/x^2\"\n";

    #[test]
    fn load_bessel_problem() {
        let p = load_problem(BESSEL_SPEC).unwrap();
        assert_eq!(p.order(), 2);
        assert_eq!(p.interval_radius(), 2.0);
        assert_eq!(p.label(), "bessel");
    }

    #[test]
    fn load_alpha_sine_problem() {
        let p = alpha_sine_problem(0.18394);
        assert_eq!(p.order(), 2);
        let a1 = p.coefficient_at(1, 1.0, Precision::Double).unwrap();
        assert!((a1 + 2.0 * 0.18394).abs() < 1e-15);
    }

    #[test]
    fn coefficient_count_mismatch() {
        let spec = "order = 2\ninterval = 1.0\nlabel = broken\na0 = \"1/x\"\n";
        match load_problem(spec).unwrap_err() {
            ModelError::CoefficientCount { expected, found } => {
                assert_eq!((expected, found), (2, 1));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let spec = "order = 2\ninterval = 1.0\nlabel = t\na0 = \"1\"\na1 = \"1\"\nordr = 3\n";
        match load_problem(spec).unwrap_err() {
            ModelError::UnknownKey { line, key } => {
                assert_eq!(line, 6);
                assert_eq!(key, "ordr");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn order_one_rejected() {
        let spec = "order = 1\ninterval = 1.0\nlabel = t\na0 = \"1\"\n";
        assert!(matches!(
            load_problem(spec).unwrap_err(),
            ModelError::OrderTooSmall(1)
        ));
    }

    #[test]
    fn pole_order_bound_enforced() {
        let spec = "order = 2\ninterval = 1.0\nlabel = t\na0 = \"1/x\"\na1 = \"1/x\"\n\
                    pole_order_a1 = 3\n";
        assert!(matches!(
            load_problem(spec).unwrap_err(),
            ModelError::PoleOrderTooLarge { k: 1, declared: 3, .. }
        ));
    }

    #[test]
    fn parse_error_carries_line() {
        let spec = "order = 2\ninterval = 1.0\nlabel = t\na0 = \"1 -\"\na1 = \"1\"\n";
        match load_problem(spec).unwrap_err() {
            ModelError::Expr { line, key, .. } => {
                assert_eq!(line, 4);
                assert_eq!(key, "a0");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn coefficient_values() {
        let p = load_problem(BESSEL_SPEC).unwrap();
        let prec = Precision::Double;
        assert_eq!(p.coefficient_at(1, 0.5, prec).unwrap(), 2.0);
        assert_eq!(p.coefficient_at(0, 2.0, prec).unwrap(), 0.0);
        let ce = cauchy_euler_problem(0.3, 0.3);
        let v = ce.coefficient_at(1, 0.1, prec).unwrap();
        assert!((v - 3.0).abs() < 1e-14);
    }

    #[test]
    fn first_order_system_matches_equation() {
        let p = load_problem(BESSEL_SPEC).unwrap();
        let sys = p.first_order_system(Precision::Double);
        let y = [0.7, -0.3];
        let mut dy = [0.0; 2];
        sys.eval(1.0, &y, &mut dy).unwrap();
        assert_eq!(dy[0], y[1]);
        // last component is -(a1(1) y' + a0(1) y) = -(1*(-0.3) + (1-4)*0.7)
        let expected = -(1.0 * -0.3 + (1.0 - 4.0) * 0.7);
        assert!((dy[1] - expected).abs() < 1e-15);
    }

    #[test]
    fn system_is_linear_in_y() {
        let p = load_problem(BESSEL_SPEC).unwrap();
        let sys = p.first_order_system(Precision::Double);
        let y = [0.4, 1.1];
        let scaled: Vec<f64> = y.iter().map(|v| v * 8.0).collect();
        let mut dy = [0.0; 2];
        let mut dy_scaled = [0.0; 2];
        sys.eval(0.37, &y, &mut dy).unwrap();
        sys.eval(0.37, &scaled, &mut dy_scaled).unwrap();
        for i in 0..2 {
            assert!((dy_scaled[i] - 8.0 * dy[i]).abs() <= 1e-12 * dy[i].abs().max(1.0));
        }
        // zero in, zero out
        sys.eval(0.37, &[0.0, 0.0], &mut dy).unwrap();
        assert_eq!(dy, [0.0, 0.0]);
    }
}
