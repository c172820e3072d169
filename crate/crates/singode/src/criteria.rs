//! Uniqueness criteria for flat solutions of ODEs with coefficients
//! singular at the origin.
//!
//! For the equation `y^(n) + a_{n-1}(x) y^(n-1) + ... + a_0(x) y = 0`,
//! the decisive quantities are the singularity weights
//! `c_k = limsup_{x->0} |x|^{n-k} |a_k(x)|`, their maximum `C_n`, and the
//! partial exponential sum `B_n = sum_{k<n} 1/k!`. Flat initial data
//! forces the zero solution when every `c_k <= 1/e` (or, for fixed n,
//! strictly below `1/B_n`); otherwise flatness up to order
//! `floor(B_n C_n + n - 1)` is required.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::expr::Precision;
use crate::model::{ModelError, OdeProblem};
use crate::numerics::{vanishing_slope, SampleGrid};
use crate::series::factorial;

#[derive(Debug, Error)]
pub enum CriteriaError {
    #[error("coefficient a{k}: every grid point failed to evaluate")]
    AllSamplesFailed { k: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

// ---------------------------------------------------------------------------
// Constants
// ---------------------------------------------------------------------------

/// `B_n = sum_{k=0}^{n-1} 1/k!` as an exact rational.
pub fn b_constant_exact(n: usize) -> BigRational {
    assert!(n >= 1, "B_n needs n >= 1");
    let mut acc = BigRational::zero();
    for k in 0..n as u64 {
        acc += BigRational::new(BigInt::one(), factorial(k));
    }
    acc
}

/// `B_n` rounded to double precision.
pub fn b_constant(n: usize) -> f64 {
    b_constant_exact(n).to_f64().expect("B_n fits in f64")
}

/// A rational enclosure `(lo, hi)` of Euler's number with
/// `hi - lo = 2/220!` (far below 1e-50). The tail of the exponential
/// series past `m` terms lies strictly between `1/m!` and `2/m!`, so
/// `B_m < e < B_m + 2/m!`; the lower end also strictly dominates every
/// `B_n` with `n < m`.
pub fn euler_enclosure() -> (BigRational, BigRational) {
    const M: usize = 220;
    let lo = b_constant_exact(M);
    let hi = &lo + BigRational::new(BigInt::from(2), factorial(M as u64));
    (lo, hi)
}

/// Absolute slack applied before taking the floor in the flatness bound;
/// absorbs the downward bias of sampled weight estimates at integer
/// boundaries (e.g. a tail maximum of `4 - x^2` just below 4).
pub const FLOOR_NUDGE: f64 = 1e-6;

/// Largest derivative order whose vanishing the flatness condition
/// requires: `floor(B_n * C + n - 1)`.
pub fn vanishing_order_bound(c: f64, n: usize) -> u64 {
    assert!(c >= 0.0, "weight must be nonnegative");
    assert!(n >= 2, "order must be at least 2");
    let v = b_constant(n) * c + (n as f64 - 1.0);
    (v + FLOOR_NUDGE).floor() as u64
}

/// Exact-rational flatness bound `floor(B_n * C + n - 1)`.
pub fn flatness_bound_exact(c: &BigRational, n: usize) -> BigInt {
    let v = b_constant_exact(n) * c + BigRational::from(BigInt::from(n as i64 - 1));
    v.floor().to_integer()
}

// ---------------------------------------------------------------------------
// Weight estimation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct Tolerances {
    /// Slack on the `<= 1/e` and `< 1/B_n` comparisons.
    pub boundary: f64,
    /// Relative variation of successive tail maxima accepted as converged.
    pub tail_variation: f64,
    /// Estimates at or below this count as zero weight.
    pub zero_weight: f64,
    /// A log-log tail slope beyond this magnitude classifies the weight
    /// as decaying (to 0) or diverging.
    pub decay_slope: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            boundary: 1e-9,
            tail_variation: 1e-6,
            zero_weight: 1e-9,
            decay_slope: 0.05,
        }
    }
}

/// Sampled estimate of `c_k = limsup_{x->0} |x|^{n-k} |a_k(x)|` with
/// convergence diagnostics.
#[derive(Debug, Clone)]
pub struct SingularityWeight {
    pub k: usize,
    /// Exponent actually used when weighting samples (the declared pole
    /// order when one was given, otherwise n - k).
    pub weight_exponent: u32,
    /// Every evaluated point `(x, |x|^exponent * |a_k(x)|)`, both signs,
    /// magnitudes decreasing.
    pub samples: Vec<(f64, f64)>,
    /// The limsup estimate for the criteria weight `|x|^{n-k} |a_k|`.
    pub estimate: f64,
    /// Maximum over the tail half of the criteria-weighted samples.
    pub tail_max: f64,
    pub converged: bool,
    /// The tail decays geometrically; the limit was taken as exactly 0.
    pub decayed: bool,
    /// The tail grows toward 0; the weight appears divergent.
    pub diverging: bool,
    /// Whether `|a_k|` itself stays bounded as x -> 0.
    pub coefficient_bounded: bool,
    /// Points skipped because evaluation failed or overflowed.
    pub skipped: Vec<f64>,
    pub note: Option<String>,
}

struct TailAnalysis {
    estimate: f64,
    tail_max: f64,
    converged: bool,
    decayed: bool,
    diverging: bool,
    note: Option<String>,
}

/// Classify the tail of `(magnitude, value)` pairs ordered by decreasing
/// magnitude: constant (estimate = tail max), geometric decay (limit 0),
/// growth (divergent), or oscillation (limsup convention, flagged
/// non-converged).
fn analyze_tail(pairs: &[(f64, f64)], tol: &Tolerances) -> TailAnalysis {
    let tail = &pairs[pairs.len() / 2..];
    let tail_max = tail.iter().map(|p| p.1).fold(0.0f64, f64::max);
    if tail_max <= 1e-250 {
        return TailAnalysis {
            estimate: 0.0,
            tail_max,
            converged: true,
            decayed: false,
            diverging: false,
            note: None,
        };
    }
    let positive: Vec<(f64, f64)> = tail.iter().filter(|p| p.1 > 1e-300).cloned().collect();
    if positive.len() < 8 || positive.len() < tail.len() / 2 {
        return TailAnalysis {
            estimate: tail_max,
            tail_max,
            converged: false,
            decayed: false,
            diverging: false,
            note: Some("tail contains exact zeros; limsup taken as the tail maximum".into()),
        };
    }
    let slope = match vanishing_slope(&positive) {
        Ok(est) => est.slope,
        Err(_) => 0.0,
    };
    if slope >= tol.decay_slope {
        return TailAnalysis {
            estimate: 0.0,
            tail_max,
            converged: true,
            decayed: true,
            diverging: false,
            note: Some(format!(
                "tail decays (log-log slope {slope:.3}); limit taken as 0"
            )),
        };
    }
    if slope <= -tol.decay_slope {
        return TailAnalysis {
            estimate: tail_max,
            tail_max,
            converged: false,
            decayed: false,
            diverging: true,
            note: Some(format!(
                "tail grows toward 0 (log-log slope {slope:.3}); weight appears divergent"
            )),
        };
    }
    let half = tail.len() / 2;
    let m1 = tail[..half].iter().map(|p| p.1).fold(0.0f64, f64::max);
    let m2 = tail[half..].iter().map(|p| p.1).fold(0.0f64, f64::max);
    let variation = (m2 - m1).abs();
    let converged = variation <= tol.tail_variation * m1.max(m2).max(1e-300);
    TailAnalysis {
        estimate: tail_max,
        tail_max,
        converged,
        decayed: false,
        diverging: false,
        note: if converged {
            None
        } else {
            Some(format!(
                "tail maxima vary by {variation:.3e}; oscillation suspected (limsup convention)"
            ))
        },
    }
}

/// Estimate `c_k` by sampling `|x|^{n-k} |a_k(x)|` over the grid (both
/// signs; the larger side is kept at each magnitude). When a declared
/// pole order `p < n - k` is present, samples are weighted with `|x|^p`
/// and a finite limsup at that exponent certifies `c_k = 0`.
pub fn estimate_weight(
    problem: &OdeProblem,
    k: usize,
    grid: &SampleGrid,
    tolerances: &Tolerances,
    precision: Precision,
) -> Result<SingularityWeight, CriteriaError> {
    let n = problem.order();
    if k >= n {
        return Err(CriteriaError::Model(ModelError::IndexOutOfRange { k, n }));
    }
    let critical = (n - k) as u32;
    let declared = problem.coefficients()[k].declared_pole_order;
    let exponent = declared.unwrap_or(critical);

    let mut samples = Vec::with_capacity(grid.len());
    let mut skipped = Vec::new();
    // (magnitude, max over signs) pairs at both weightings
    let mut pairs_declared: Vec<(f64, f64)> = Vec::new();
    let mut pairs_critical: Vec<(f64, f64)> = Vec::new();
    let mut pairs_coeff: Vec<(f64, f64)> = Vec::new();

    for &m in grid.magnitudes() {
        let mut a_best: Option<f64> = None;
        for sign in [1.0f64, -1.0] {
            let x = sign * m;
            match problem.coefficient_at(k, x, precision) {
                Ok(a) if a.is_finite() => {
                    let w = m.powi(exponent as i32) * a.abs();
                    samples.push((x, w));
                    a_best = Some(a_best.map_or(a.abs(), |b: f64| b.max(a.abs())));
                }
                _ => skipped.push(x),
            }
        }
        if let Some(a) = a_best {
            pairs_declared.push((m, m.powi(exponent as i32) * a));
            pairs_critical.push((m, m.powi(critical as i32) * a));
            pairs_coeff.push((m, a));
        }
    }
    if pairs_critical.is_empty() {
        return Err(CriteriaError::AllSamplesFailed { k });
    }

    let analysis = analyze_tail(&pairs_critical, tolerances);
    let coeff_analysis = analyze_tail(&pairs_coeff, tolerances);
    let coefficient_bounded = !coeff_analysis.diverging;

    let mut note = analysis.note;
    let mut estimate = analysis.estimate;
    let mut converged = analysis.converged;
    let mut decayed = analysis.decayed;
    if exponent < critical {
        // The declared pole order undershoots the critical one; a finite
        // limsup at the declared exponent already forces c_k = 0.
        let declared_analysis = analyze_tail(&pairs_declared, tolerances);
        if !declared_analysis.diverging {
            estimate = 0.0;
            converged = true;
            decayed = true;
            note = Some(format!(
                "declared pole order {exponent} < {critical}; finite limsup at the declared \
                 exponent certifies a zero criteria weight"
            ));
        }
    }

    Ok(SingularityWeight {
        k,
        weight_exponent: exponent,
        samples,
        estimate,
        tail_max: analysis.tail_max,
        converged,
        decayed,
        diverging: analysis.diverging,
        coefficient_bounded,
        skipped,
        note,
    })
}

/// `C_n`: the maximum weight estimate.
pub fn c_constant(weights: &[SingularityWeight]) -> f64 {
    weights.iter().map(|w| w.estimate).fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Report and verdict
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Every weight is within the 1/e bound: flat initial data of order
    /// n - 1 already forces the zero solution.
    UniqueNearZero,
    /// Weights are finite but exceed 1/e: the zero solution is forced
    /// only for solutions flat to the contained order.
    ConditionalOnFlatness(u64),
    /// Some weight estimate failed to converge along the grid.
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::UniqueNearZero => "UNIQUE_NEAR_ZERO",
            Verdict::ConditionalOnFlatness(_) => "CONDITIONAL_ON_FLATNESS",
            Verdict::Inconclusive => "INCONCLUSIVE",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::UniqueNearZero => 0,
            Verdict::ConditionalOnFlatness(_) => 10,
            Verdict::Inconclusive => 20,
        }
    }
}

/// Full per-criterion verdicts for one problem.
#[derive(Debug, Clone)]
pub struct CriteriaReport {
    pub label: String,
    pub order: usize,
    pub b_n: f64,
    pub c_n: f64,
    pub e_criterion_threshold: f64,
    pub relaxed_criterion_threshold: f64,
    /// All weights `<= 1/e` (+ boundary tolerance).
    pub e_criterion_satisfied: bool,
    /// All weights `< 1/B_n` (- boundary tolerance); for fixed n this
    /// relaxes the 1/e bound since `B_n < e`.
    pub relaxed_criterion_satisfied: bool,
    /// All weights vanish: `a_k = o(|x|^{k-n})`.
    pub zero_weight_criterion_satisfied: bool,
    /// Every coefficient itself stays bounded near 0.
    pub bounded_coefficients_satisfied: bool,
    pub weights: Vec<SingularityWeight>,
    pub flatness_bound_m: u64,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

/// Evaluate every criterion and produce the combined verdict.
pub fn check_uniqueness(
    problem: &OdeProblem,
    grid: &SampleGrid,
    tolerances: &Tolerances,
    precision: Precision,
) -> Result<CriteriaReport, CriteriaError> {
    let n = problem.order();
    let mut weights = Vec::with_capacity(n);
    for k in 0..n {
        weights.push(estimate_weight(problem, k, grid, tolerances, precision)?);
    }
    let c_n = c_constant(&weights);
    let b_n = b_constant(n);
    let inv_e = 1.0 / std::f64::consts::E;
    let inv_bn = 1.0 / b_n;

    let all_converged = weights.iter().all(|w| w.converged);
    let e_criterion = weights.iter().all(|w| w.estimate <= inv_e + tolerances.boundary);
    let relaxed = weights
        .iter()
        .all(|w| w.estimate < inv_bn - tolerances.boundary);
    let zero_weight = weights
        .iter()
        .all(|w| w.estimate <= tolerances.zero_weight);
    let bounded = weights.iter().all(|w| w.coefficient_bounded);
    let m = vanishing_order_bound(c_n, n);

    let verdict = if !all_converged {
        Verdict::Inconclusive
    } else if e_criterion {
        Verdict::UniqueNearZero
    } else {
        Verdict::ConditionalOnFlatness(m)
    };

    let notes = weights
        .iter()
        .filter_map(|w| w.note.as_ref().map(|n| format!("a{}: {n}", w.k)))
        .collect();

    Ok(CriteriaReport {
        label: problem.label().to_string(),
        order: n,
        b_n,
        c_n,
        e_criterion_threshold: inv_e,
        relaxed_criterion_threshold: inv_bn,
        e_criterion_satisfied: e_criterion,
        relaxed_criterion_satisfied: relaxed,
        zero_weight_criterion_satisfied: zero_weight,
        bounded_coefficients_satisfied: bounded,
        weights,
        flatness_bound_m: m,
        verdict,
        notes,
    })
}

// ---------------------------------------------------------------------------
// JSON serialization (deterministic, 17 significant digits)
// ---------------------------------------------------------------------------

/// Render a float with 17 significant digits; this uniquely identifies
/// the f64, so artifacts round-trip exactly.
pub fn format_g17(v: f64) -> String {
    format!("{v:.16e}")
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

impl CriteriaReport {
    /// Single JSON document mirroring the report. Field order is fixed
    /// and numeric fields carry 17 significant digits, so identical
    /// inputs serialize to identical bytes.
    pub fn to_json(&self) -> String {
        let mut s = String::new();
        s.push_str("{\n");
        s.push_str(&format!("  \"label\": \"{}\",\n", json_escape(&self.label)));
        s.push_str(&format!("  \"order\": {},\n", self.order));
        s.push_str(&format!("  \"b_n\": {},\n", format_g17(self.b_n)));
        s.push_str(&format!("  \"c_n\": {},\n", format_g17(self.c_n)));
        s.push_str(&format!(
            "  \"e_criterion_threshold\": {},\n",
            format_g17(self.e_criterion_threshold)
        ));
        s.push_str(&format!(
            "  \"relaxed_criterion_threshold\": {},\n",
            format_g17(self.relaxed_criterion_threshold)
        ));
        s.push_str(&format!(
            "  \"e_criterion_satisfied\": {},\n",
            self.e_criterion_satisfied
        ));
        s.push_str(&format!(
            "  \"relaxed_criterion_satisfied\": {},\n",
            self.relaxed_criterion_satisfied
        ));
        s.push_str(&format!(
            "  \"zero_weight_criterion_satisfied\": {},\n",
            self.zero_weight_criterion_satisfied
        ));
        s.push_str(&format!(
            "  \"bounded_coefficients_satisfied\": {},\n",
            self.bounded_coefficients_satisfied
        ));
        s.push_str(&format!("  \"flatness_bound_m\": {},\n", self.flatness_bound_m));
        s.push_str(&format!("  \"verdict\": \"{}\",\n", self.verdict.as_str()));
        s.push_str("  \"weights\": [\n");
        for (i, w) in self.weights.iter().enumerate() {
            s.push_str("    {\n");
            s.push_str(&format!("      \"k\": {},\n", w.k));
            s.push_str(&format!("      \"weight_exponent\": {},\n", w.weight_exponent));
            s.push_str(&format!("      \"estimate\": {},\n", format_g17(w.estimate)));
            s.push_str(&format!("      \"tail_max\": {},\n", format_g17(w.tail_max)));
            s.push_str(&format!("      \"converged\": {},\n", w.converged));
            s.push_str(&format!("      \"decayed\": {},\n", w.decayed));
            s.push_str(&format!("      \"diverging\": {},\n", w.diverging));
            s.push_str(&format!(
                "      \"coefficient_bounded\": {},\n",
                w.coefficient_bounded
            ));
            match &w.note {
                Some(note) => {
                    s.push_str(&format!("      \"note\": \"{}\",\n", json_escape(note)))
                }
                None => s.push_str("      \"note\": null,\n"),
            }
            s.push_str("      \"skipped\": [");
            for (j, x) in w.skipped.iter().enumerate() {
                if j > 0 {
                    s.push_str(", ");
                }
                s.push_str(&format_g17(*x));
            }
            s.push_str("],\n");
            s.push_str("      \"samples\": [");
            for (j, (x, v)) in w.samples.iter().enumerate() {
                if j > 0 {
                    s.push_str(", ");
                }
                s.push_str(&format!("[{}, {}]", format_g17(*x), format_g17(*v)));
            }
            s.push_str("]\n");
            s.push_str(if i + 1 < self.weights.len() {
                "    },\n"
            } else {
                "    }\n"
            });
        }
        s.push_str("  ],\n");
        s.push_str("  \"notes\": [");
        for (i, note) in self.notes.iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            s.push_str(&format!("\"{}\"", json_escape(note)));
        }
        s.push_str("]\n");
        s.push_str("}\n");
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{alpha_sine_problem, bessel_problem, cauchy_euler_problem, load_problem};
    use crate::numerics::default_grid;

    const INV_E: f64 = 0.36787944117144233;

    #[test]
    fn b_constant_small_values() {
        assert_eq!(b_constant(2), 2.0);
        let b4 = b_constant_exact(4);
        assert_eq!(b4, BigRational::new(BigInt::from(8), BigInt::from(3)));
        assert!((b_constant(4) - 8.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn b_constant_increasing_and_below_e() {
        let (lo, _) = euler_enclosure();
        let mut prev = BigRational::zero();
        for n in 1..=60 {
            let b = b_constant_exact(n);
            assert!(b > prev, "B_n not increasing at n = {n}");
            assert!(b < lo, "B_n not below e at n = {n}");
            prev = b;
        }
        assert!(b_constant(30) > 2.7182818);
        // in exact arithmetic B_30 < e strictly; in f64 the two round to
        // the same value
        assert!(b_constant(30) <= std::f64::consts::E);
        assert!(b_constant_exact(30) < lo);
    }

    #[test]
    fn enclosure_is_tight() {
        let (lo, hi) = euler_enclosure();
        let width = &hi - &lo;
        let bound = BigRational::new(BigInt::one(), BigInt::from(10u8).pow(50));
        assert!(width < bound);
        let e_f64 = lo.to_f64().unwrap();
        assert!((e_f64 - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn vanishing_order_bound_examples() {
        assert_eq!(vanishing_order_bound(1.0 / std::f64::consts::E, 2), 1);
        assert_eq!(vanishing_order_bound(0.0, 5), 4);
        assert_eq!(vanishing_order_bound(4.0, 2), 9);
    }

    #[test]
    fn flatness_bound_exact_matches() {
        let four = BigRational::from(BigInt::from(4));
        assert_eq!(flatness_bound_exact(&four, 2), BigInt::from(9));
        assert_eq!(flatness_bound_exact(&BigRational::zero(), 5), BigInt::from(4));
    }

    #[test]
    fn bessel_weight_is_m_squared() {
        let p = bessel_problem(2);
        let grid = default_grid();
        let w = estimate_weight(&p, 0, &grid, &Tolerances::default(), Precision::Double).unwrap();
        assert!((w.estimate - 4.0).abs() <= 1e-3, "estimate {}", w.estimate);
        assert!(w.converged);
        assert!(!w.coefficient_bounded);
        let w1 = estimate_weight(&p, 1, &grid, &Tolerances::default(), Precision::Double).unwrap();
        assert!((w1.estimate - 1.0).abs() <= 1e-3);
    }

    #[test]
    fn alpha_sine_weights() {
        let alpha = 1.0 / (2.0 * std::f64::consts::E);
        let p = alpha_sine_problem(alpha);
        let grid = default_grid();
        let tol = Tolerances::default();
        let w1 = estimate_weight(&p, 1, &grid, &tol, Precision::Double).unwrap();
        assert!((w1.estimate - INV_E).abs() <= 1e-3, "c1 = {}", w1.estimate);
        let w0 = estimate_weight(&p, 0, &grid, &tol, Precision::Double).unwrap();
        let expected = alpha * (1.0 + alpha);
        assert!((w0.estimate - expected).abs() <= 1e-3, "c0 = {}", w0.estimate);
    }

    #[test]
    fn bounded_coefficient_weight_decays_to_zero() {
        let spec = "order = 2\ninterval = 1.0\nlabel = bounded\n\
                    a0 = \"sin(x)\"\na1 = \"0\"\n";
        let p = load_problem(spec).unwrap();
        let grid = default_grid();
        let w = estimate_weight(&p, 0, &grid, &Tolerances::default(), Precision::Double).unwrap();
        assert_eq!(w.estimate, 0.0);
        assert!(w.converged);
        assert!(w.decayed);
        assert!(w.coefficient_bounded);
    }

    #[test]
    fn c_constant_examples() {
        let p = bessel_problem(2);
        let grid = default_grid();
        let tol = Tolerances::default();
        let weights: Vec<_> = (0..2)
            .map(|k| estimate_weight(&p, k, &grid, &tol, Precision::Double).unwrap())
            .collect();
        let c = c_constant(&weights);
        assert!((c - 4.0).abs() <= 1e-3);
        assert_eq!(c_constant(&[]), 0.0);
    }

    #[test]
    fn laurent_exact_exponent_converges_to_coefficient() {
        // |c|/x^p with p = n-k: weight is exactly |c| at every sample
        let spec = "order = 2\ninterval = 1.0\nlabel = laurent\n\
                    a0 = \"0.3/x^2\"\na1 = \"0.3/x\"\n";
        let p = load_problem(spec).unwrap();
        let grid = default_grid();
        let tol = Tolerances::default();
        for k in 0..2 {
            let w = estimate_weight(&p, k, &grid, &tol, Precision::Double).unwrap();
            assert!((w.estimate - 0.3).abs() <= 1e-9, "c{k} = {}", w.estimate);
            assert!(w.converged);
        }
    }

    #[test]
    fn laurent_subcritical_exponent_converges_to_zero() {
        // p < n-k: the weight decays; the estimate must be 0 within 1e-9
        let spec = "order = 2\ninterval = 1.0\nlabel = laurent\n\
                    a0 = \"2/x\"\na1 = \"5\"\n";
        let p = load_problem(spec).unwrap();
        let grid = default_grid();
        let tol = Tolerances::default();
        for k in 0..2 {
            let w = estimate_weight(&p, k, &grid, &tol, Precision::Double).unwrap();
            assert!(w.estimate <= 1e-9, "c{k} = {}", w.estimate);
            assert!(w.converged);
        }
    }

    #[test]
    fn declared_pole_order_certifies_zero_weight() {
        let spec = "order = 2\ninterval = 1.0\nlabel = declared\n\
                    a0 = \"2/x\"\na1 = \"1\"\npole_order_a0 = 1\n";
        let p = load_problem(spec).unwrap();
        let grid = default_grid();
        let w = estimate_weight(&p, 0, &grid, &Tolerances::default(), Precision::Double).unwrap();
        assert_eq!(w.weight_exponent, 1);
        assert_eq!(w.estimate, 0.0);
        assert!(w.converged && w.decayed);
    }

    #[test]
    fn check_uniqueness_cauchy_euler() {
        let p = cauchy_euler_problem(0.3, 0.3);
        let report = check_uniqueness(
            &p,
            &default_grid(),
            &Tolerances::default(),
            Precision::Double,
        )
        .unwrap();
        assert!(report.e_criterion_satisfied);
        assert!(report.relaxed_criterion_satisfied);
        assert_eq!(report.verdict, Verdict::UniqueNearZero);
    }

    #[test]
    fn check_uniqueness_bessel() {
        let p = bessel_problem(2);
        let report = check_uniqueness(
            &p,
            &default_grid(),
            &Tolerances::default(),
            Precision::Double,
        )
        .unwrap();
        assert!(!report.e_criterion_satisfied);
        assert!((report.c_n - 4.0).abs() <= 1e-3);
        assert_eq!(report.flatness_bound_m, 9);
        assert_eq!(report.verdict, Verdict::ConditionalOnFlatness(9));
        assert_eq!(report.verdict.exit_code(), 10);
    }

    #[test]
    fn check_uniqueness_alpha_sine_boundary() {
        let alpha = 1.0 / (2.0 * std::f64::consts::E);
        let p = alpha_sine_problem(alpha);
        let report = check_uniqueness(
            &p,
            &default_grid(),
            &Tolerances::default(),
            Precision::Double,
        )
        .unwrap();
        // c1 sits exactly on the 1/e boundary; the tolerance admits it
        assert!(report.e_criterion_satisfied);
        assert_eq!(report.verdict, Verdict::UniqueNearZero);
    }

    #[test]
    fn oscillating_weight_is_inconclusive() {
        let spec = "order = 2\ninterval = 1.0\nlabel = osc\n\
                    a0 = \"(2 + sin(1/x))/x^2\"\na1 = \"0\"\n";
        let p = load_problem(spec).unwrap();
        let report = check_uniqueness(
            &p,
            &default_grid(),
            &Tolerances::default(),
            Precision::Double,
        )
        .unwrap();
        assert_eq!(report.verdict, Verdict::Inconclusive);
        assert_eq!(report.verdict.exit_code(), 20);
        assert!(!report.weights[0].converged);
    }

    #[test]
    fn json_report_is_deterministic_and_well_formed() {
        let p = bessel_problem(2);
        let r1 = check_uniqueness(
            &p,
            &default_grid(),
            &Tolerances::default(),
            Precision::Double,
        )
        .unwrap();
        let r2 = check_uniqueness(
            &p,
            &default_grid(),
            &Tolerances::default(),
            Precision::Double,
        )
        .unwrap();
        assert_eq!(r1.to_json(), r2.to_json());
        assert!(r1.to_json().contains("\"verdict\": \"CONDITIONAL_ON_FLATNESS\""));
    }

    #[test]
    fn format_g17_round_trips() {
        for v in [0.0, 0.3, -4.0, 1.0 / 3.0, 2.225e-308, 1.7976931348623157e308] {
            let s = format_g17(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "{v} -> {s} -> {back}");
        }
    }
}
