//! Sampling grids, adaptive integration toward the singularity, log-log
//! slope estimation, and the minimal-constant scan for the derivative
//! inequality `|f^(n)(x)| <= C sum_k |f^(k)(x)| / |x|^{n-k}`.

use num::rational::BigRational;
use num::{Signed, Zero};
use thiserror::Error;

use crate::expr::Precision;
use crate::model::{InitialData, ModelError, OdeProblem};
use crate::series::{bessel_series, RationalSeries, SeriesScalar};

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("grid parameters must satisfy 0 < x_min < x_max, got x_min = {x_min}, x_max = {x_max}")]
    BadGridParams { x_min: f64, x_max: f64 },
    #[error("grid needs at least {min} points per sign, got {got}")]
    GridTooSmall { min: usize, got: usize },
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("sample at x = {0} is not strictly positive")]
    NonPositiveSample(f64),
    #[error("sample f({0}) = 0; log-log regression needs nonzero values")]
    ZeroFunctionValue(f64),
    #[error("degenerate regression: all sample abscissae coincide")]
    DegenerateRegression,
    #[error("parameter out of range: {0}")]
    ParameterRange(String),
    #[error("integration start and target must be nonzero and on the same side of 0 (got {from} -> {to})")]
    CrossesSingularity { from: f64, to: f64 },
    #[error("point {x} lies outside the problem interval (-{radius}, {radius})")]
    OutsideInterval { x: f64, radius: f64 },
    #[error("initial data has {got} values but the problem has order {expected}")]
    InitialDataDimension { expected: usize, got: usize },
    #[error("step budget exhausted after {0} steps")]
    TooManySteps(usize),
    #[error("tolerances must be positive (rel_tol = {rel}, abs_tol = {abs} >= 0)")]
    BadTolerance { rel: f64, abs: f64 },
    #[error("coefficient evaluation failed at x = {x}: {source}")]
    CoefficientEval { x: f64, source: ModelError },
    #[error("exact scan requires an integer leading exponent")]
    NonIntegerExponent,
    #[error(transparent)]
    Model(#[from] ModelError),
}

// ---------------------------------------------------------------------------
// Sampling grids
// ---------------------------------------------------------------------------

/// Geometrically spaced sample magnitudes, probed on both signs of x.
#[derive(Debug, Clone)]
pub struct SampleGrid {
    magnitudes: Vec<f64>,
    ratio: f64,
}

pub const MIN_GRID_POINTS: usize = 16;

impl SampleGrid {
    /// Strictly decreasing magnitudes, one per level.
    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    /// All sample points: `+m, -m` for each magnitude, largest first.
    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        self.magnitudes.iter().flat_map(|&m| [m, -m])
    }

    pub fn len(&self) -> usize {
        self.magnitudes.len() * 2
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }
}

/// `count` magnitudes per sign: `x_max * (x_min/x_max)^(j/(count-1))`.
pub fn geometric_grid(x_max: f64, x_min: f64, count: usize) -> Result<SampleGrid, NumericsError> {
    if !(x_min > 0.0 && x_min < x_max) {
        return Err(NumericsError::BadGridParams { x_min, x_max });
    }
    if count < MIN_GRID_POINTS {
        return Err(NumericsError::GridTooSmall {
            min: MIN_GRID_POINTS,
            got: count,
        });
    }
    let q = x_min / x_max;
    let denom = (count - 1) as f64;
    let magnitudes: Vec<f64> = (0..count)
        .map(|j| x_max * q.powf(j as f64 / denom))
        .collect();
    Ok(SampleGrid {
        magnitudes,
        ratio: q.powf(1.0 / denom),
    })
}

/// The default grid: 64 magnitudes per sign spanning 1e-1 down to 1e-8.
pub fn default_grid() -> SampleGrid {
    geometric_grid(1e-1, 1e-8, 64).expect("default grid parameters are valid")
}

// ---------------------------------------------------------------------------
// Adaptive integration (Dormand-Prince 5(4) embedded pair)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryStatus {
    Completed,
    Blowup,
    StepUnderflow,
}

#[derive(Debug, Clone)]
pub struct TrajectoryNode {
    pub x: f64,
    pub y: Vec<f64>,
    /// Max-norm of the embedded error estimate for the step ending here.
    pub local_error: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub nodes: Vec<TrajectoryNode>,
    pub status: TrajectoryStatus,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryNode {
        self.nodes.last().expect("trajectory has at least the start node")
    }
}

/// Solution magnitude treated as numerical blowup.
pub const BLOWUP_CEILING: f64 = 1e12;
const MAX_STEPS: usize = 2_000_000;

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate the problem from `from.x0` to `to_x` on one side of the
/// singularity, with per-step local error controlled by
/// `abs_tol + rel_tol * |y|`. The trajectory never steps across x = 0;
/// the step floor is relative to |x| because the coefficients scale like
/// powers of x.
pub fn integrate(
    problem: &OdeProblem,
    from: &InitialData,
    to_x: f64,
    rel_tol: f64,
    abs_tol: f64,
    precision: Precision,
) -> Result<Trajectory, NumericsError> {
    let n = problem.order();
    if from.values.len() != n {
        return Err(NumericsError::InitialDataDimension {
            expected: n,
            got: from.values.len(),
        });
    }
    if from.x0 == 0.0 || to_x == 0.0 || from.x0.signum() != to_x.signum() {
        return Err(NumericsError::CrossesSingularity {
            from: from.x0,
            to: to_x,
        });
    }
    let radius = problem.interval_radius();
    for &x in &[from.x0, to_x] {
        if x.abs() >= radius {
            return Err(NumericsError::OutsideInterval { x, radius });
        }
    }
    if !(rel_tol > 0.0) || !(abs_tol >= 0.0) {
        return Err(NumericsError::BadTolerance {
            rel: rel_tol,
            abs: abs_tol,
        });
    }

    let system = problem.first_order_system(precision);
    let eval = |x: f64, y: &[f64], dy: &mut [f64]| -> Result<(), NumericsError> {
        system
            .eval(x, y, dy)
            .map_err(|source| NumericsError::CoefficientEval { x, source })
    };

    let mut x = from.x0;
    let mut y = from.values.clone();
    let mut nodes = vec![TrajectoryNode {
        x,
        y: y.clone(),
        local_error: 0.0,
    }];

    if to_x == from.x0 {
        return Ok(Trajectory {
            nodes,
            status: TrajectoryStatus::Completed,
        });
    }

    let direction = (to_x - from.x0).signum();
    let mut h = direction * ((to_x - from.x0).abs() / 64.0).min(x.abs() * 0.1);
    let mut k = vec![vec![0.0f64; n]; 7];
    let mut y_stage = vec![0.0f64; n];
    let mut steps = 0usize;

    loop {
        if (x - to_x).abs() == 0.0 || (direction > 0.0 && x >= to_x) || (direction < 0.0 && x <= to_x)
        {
            return Ok(Trajectory {
                nodes,
                status: TrajectoryStatus::Completed,
            });
        }
        steps += 1;
        if steps > MAX_STEPS {
            return Err(NumericsError::TooManySteps(MAX_STEPS));
        }
        // Clamp to the target; never step past it (and never across 0).
        if (direction > 0.0 && x + h > to_x) || (direction < 0.0 && x + h < to_x) {
            h = to_x - x;
        }
        if h.abs() < 1e3 * f64::EPSILON * x.abs() {
            return Ok(Trajectory {
                nodes,
                status: TrajectoryStatus::StepUnderflow,
            });
        }

        for stage in 0..7 {
            for i in 0..n {
                let mut acc = y[i];
                for s in 0..stage {
                    acc += h * DP_A[stage][s] * k[s][i];
                }
                y_stage[i] = acc;
            }
            let xs = x + DP_C[stage] * h;
            let (_, tail) = k.split_at_mut(stage);
            eval(xs, &y_stage, &mut tail[0])?;
        }

        let mut err_norm_sq = 0.0;
        let mut err_max = 0.0f64;
        let mut y_new = vec![0.0f64; n];
        for i in 0..n {
            let mut y5 = y[i];
            let mut e = 0.0;
            for s in 0..7 {
                y5 += h * DP_B5[s] * k[s][i];
                e += h * (DP_B5[s] - DP_B4[s]) * k[s][i];
            }
            y_new[i] = y5;
            err_max = err_max.max(e.abs());
            let scale = abs_tol + rel_tol * y[i].abs().max(y5.abs());
            if e != 0.0 {
                let w = e / scale;
                err_norm_sq += w * w;
            }
        }
        let err_norm = (err_norm_sq / n as f64).sqrt();

        if err_norm <= 1.0 {
            x += h;
            y = y_new;
            nodes.push(TrajectoryNode {
                x,
                y: y.clone(),
                local_error: err_max,
            });
            if y.iter().any(|v| v.abs() > BLOWUP_CEILING) {
                return Ok(Trajectory {
                    nodes,
                    status: TrajectoryStatus::Blowup,
                });
            }
        }
        let factor = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
}

// ---------------------------------------------------------------------------
// Log-log slope estimation
// ---------------------------------------------------------------------------

/// Least-squares fit of `ln|f|` against `ln x`; the slope estimates the
/// vanishing order of `f` at 0 (possibly non-integer).
#[derive(Debug, Clone)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// Default decade for slope estimation: close enough to 0 for the leading
/// term to dominate, far enough to keep f64 significance.
pub const SLOPE_WINDOW: (f64, f64) = (1e-4, 1e-2);

pub fn vanishing_slope(samples: &[(f64, f64)]) -> Result<SlopeEstimate, NumericsError> {
    if samples.len() < 8 {
        return Err(NumericsError::TooFewSamples {
            min: 8,
            got: samples.len(),
        });
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut pts = Vec::with_capacity(samples.len());
    for &(x, f) in samples {
        if !(x > 0.0) {
            return Err(NumericsError::NonPositiveSample(x));
        }
        if f == 0.0 {
            return Err(NumericsError::ZeroFunctionValue(x));
        }
        lo = lo.min(x);
        hi = hi.max(x);
        pts.push((x.ln(), f.abs().ln()));
    }
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    if sxx == 0.0 {
        return Err(NumericsError::DegenerateRegression);
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean_y) * (p.1 - mean_y)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(SlopeEstimate {
        slope,
        intercept,
        r_squared,
        window: (lo, hi),
    })
}

/// Sample `f` at `count` geometric points inside `window` (positive side,
/// decreasing toward 0).
pub fn sample_positive(
    mut f: impl FnMut(f64) -> f64,
    window: (f64, f64),
    count: usize,
) -> Vec<(f64, f64)> {
    let (lo, hi) = window;
    let q: f64 = lo / hi;
    let denom = (count - 1) as f64;
    (0..count)
        .map(|j| {
            let x = hi * q.powf(j as f64 / denom);
            (x, f(x))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Minimal-C scan
// ---------------------------------------------------------------------------

/// Supplies `f, f', ..., f^(order)` at a point.
pub trait DerivativeEvaluator {
    fn derivatives(&self, x: f64, order: usize) -> Vec<f64>;
}

/// Per-sample ratios `|f^(n)(x)| / sum_k |f^(k)(x)|/|x|^{n-k}` and their
/// supremum: the least constant making the derivative inequality hold on
/// the sampled set.
#[derive(Debug, Clone)]
pub struct MinimalCScan {
    pub samples: Vec<(f64, f64)>,
    pub c_min: f64,
    /// Points where every derivative vanished (ratio undefined, skipped).
    pub skipped: Vec<f64>,
}

pub fn minimal_c_scan(
    f: &dyn DerivativeEvaluator,
    n: usize,
    grid: &SampleGrid,
) -> MinimalCScan {
    let mut samples = Vec::with_capacity(grid.len());
    let mut skipped = Vec::new();
    let mut c_min = 0.0f64;
    for x in grid.points() {
        let d = f.derivatives(x, n);
        let mut denom = 0.0;
        for (k, dk) in d.iter().take(n).enumerate() {
            denom += dk.abs() / x.abs().powi((n - k) as i32);
        }
        if denom == 0.0 {
            skipped.push(x);
            continue;
        }
        let ratio = d[n].abs() / denom;
        c_min = c_min.max(ratio);
        samples.push((x, ratio));
    }
    MinimalCScan {
        samples,
        c_min,
        skipped,
    }
}

/// Exact-rational variant for series with integer exponents (monomials
/// and polynomials); the ratios and supremum are exact.
#[derive(Debug, Clone)]
pub struct ExactMinimalCScan {
    pub samples: Vec<(BigRational, BigRational)>,
    pub c_min: BigRational,
    pub skipped: Vec<BigRational>,
}

impl ExactMinimalCScan {
    pub fn to_f64_scan(&self) -> MinimalCScan {
        MinimalCScan {
            samples: self
                .samples
                .iter()
                .map(|(x, r)| (SeriesScalar::to_f64(x), SeriesScalar::to_f64(r)))
                .collect(),
            c_min: SeriesScalar::to_f64(&self.c_min),
            skipped: self.skipped.iter().map(SeriesScalar::to_f64).collect(),
        }
    }
}

pub fn minimal_c_scan_series(
    s: &RationalSeries,
    n: usize,
    points: &[BigRational],
) -> Result<ExactMinimalCScan, NumericsError> {
    let mut derivs = Vec::with_capacity(n + 1);
    derivs.push(s.clone());
    for _ in 0..n {
        derivs.push(derivs.last().unwrap().derivative());
    }
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    let mut c_min = BigRational::zero();
    for x in points {
        let mut denom = BigRational::zero();
        let mut ok = true;
        for (k, dk) in derivs.iter().take(n).enumerate() {
            let Some(v) = dk.eval_rational(x) else {
                ok = false;
                break;
            };
            let weight = x.abs().pow((n - k) as i32);
            denom += v.abs() / weight;
        }
        if !ok {
            return Err(NumericsError::NonIntegerExponent);
        }
        if denom.is_zero() {
            skipped.push(x.clone());
            continue;
        }
        let num = derivs[n]
            .eval_rational(x)
            .ok_or(NumericsError::NonIntegerExponent)?
            .abs();
        let ratio = num / denom;
        if ratio > c_min {
            c_min = ratio.clone();
        }
        samples.push((x.clone(), ratio));
    }
    Ok(ExactMinimalCScan {
        samples,
        c_min,
        skipped,
    })
}

/// Positive rational sample points `x_max * ratio^j`, exact.
pub fn rational_geometric_points(
    x_max: BigRational,
    ratio: BigRational,
    count: usize,
) -> Vec<BigRational> {
    let mut pts = Vec::with_capacity(count);
    let mut x = x_max;
    for _ in 0..count {
        pts.push(x.clone());
        x *= &ratio;
    }
    pts
}

// ---------------------------------------------------------------------------
// Reference solutions
// ---------------------------------------------------------------------------

/// Closed-form or series-backed reference solutions with derivatives,
/// defined on both signs of x.
pub enum ReferenceSolution {
    /// `|x|^alpha sin|x|` extended evenly: a flat-at-0 solution of the
    /// `y'' - (2a/x) y' + (1 + (a^2+a)/x^2) y = 0` family. Smooth away
    /// from 0, only C^{1,alpha} at 0.
    AlphaSine { alpha: f64 },
    /// First-kind Bessel solution of integer order m >= 2, series-backed.
    Bessel {
        m: u32,
        derivs: Vec<RationalSeries>,
    },
}

pub const BESSEL_REFERENCE_TRUNCATION: usize = 40;

impl ReferenceSolution {
    pub fn alpha_sine(alpha: f64) -> Result<Self, NumericsError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(NumericsError::ParameterRange(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(ReferenceSolution::AlphaSine { alpha })
    }

    pub fn bessel(m: u32) -> Result<Self, NumericsError> {
        if m < 2 {
            return Err(NumericsError::ParameterRange(format!(
                "Bessel order must be an integer >= 2, got {m}"
            )));
        }
        let s = bessel_series(m, BESSEL_REFERENCE_TRUNCATION)
            .expect("reference truncation is >= 1");
        let d1 = s.derivative();
        let d2 = d1.derivative();
        Ok(ReferenceSolution::Bessel {
            m,
            derivs: vec![s, d1, d2],
        })
    }

    /// f(x); defined for all x, even under reflection.
    pub fn value(&self, x: f64) -> f64 {
        self.derivatives(x, 0)[0]
    }
}

impl DerivativeEvaluator for ReferenceSolution {
    /// `f, f', ..., f^(order)` at `x != 0` (order <= 2).
    fn derivatives(&self, x: f64, order: usize) -> Vec<f64> {
        assert!(order <= 2, "reference solutions carry derivatives up to 2");
        match self {
            ReferenceSolution::AlphaSine { alpha } => {
                let a = *alpha;
                let u = x.abs();
                let (s, c) = (u.sin(), u.cos());
                let f = u.powf(a) * s;
                let f1 = a * u.powf(a - 1.0) * s + u.powf(a) * c;
                let f2 = a * (a - 1.0) * u.powf(a - 2.0) * s + 2.0 * a * u.powf(a - 1.0) * c
                    - u.powf(a) * s;
                let mut out = vec![f];
                if order >= 1 {
                    // even function: odd derivatives flip sign on x < 0
                    out.push(if x < 0.0 { -f1 } else { f1 });
                }
                if order >= 2 {
                    out.push(f2);
                }
                out
            }
            ReferenceSolution::Bessel { derivs, .. } => (0..=order)
                .map(|k| derivs[k].eval_f64(x))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{bessel_problem, cauchy_euler_problem};
    use num::bigint::BigInt;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn grid_construction() {
        let g = geometric_grid(1e-1, 1e-8, 64).unwrap();
        assert_eq!(g.len(), 128);
        assert_eq!(g.magnitudes().len(), 64);
        // constant magnitude ratio
        let m = g.magnitudes();
        let r0 = m[1] / m[0];
        for w in m.windows(2) {
            assert!((w[1] / w[0] - r0).abs() < 1e-12);
        }
        // closed form for the 8th point (j = 7)
        let expected = 1e-1 * (1e-7f64).powf(7.0 / 63.0);
        assert!((m[7] - expected).abs() <= 1e-18 * expected.abs().max(1.0));
        assert!((m[0] - 1e-1).abs() < 1e-16);
        assert!((m[63] - 1e-8).abs() < 1e-22);
    }

    #[test]
    fn grid_rejects_bad_params() {
        assert!(matches!(
            geometric_grid(1.0, 1.0, 16).unwrap_err(),
            NumericsError::BadGridParams { .. }
        ));
        assert!(matches!(
            geometric_grid(1.0, 1e-4, 8).unwrap_err(),
            NumericsError::GridTooSmall { .. }
        ));
    }

    #[test]
    fn integrate_zero_initial_data_stays_zero() {
        let p = bessel_problem(2);
        let from = InitialData::new(1.0, vec![0.0, 0.0]);
        let t = integrate(&p, &from, 0.05, 1e-9, 0.0, Precision::Double).unwrap();
        assert_eq!(t.status, TrajectoryStatus::Completed);
        for node in &t.nodes {
            assert_eq!(node.y, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn integrate_rejects_crossing_zero() {
        let p = bessel_problem(2);
        let from = InitialData::new(1.0, vec![0.1, 0.0]);
        assert!(matches!(
            integrate(&p, &from, -0.5, 1e-9, 1e-12, Precision::Double).unwrap_err(),
            NumericsError::CrossesSingularity { .. }
        ));
    }

    #[test]
    fn integrate_matches_bessel_series() {
        let p = bessel_problem(2);
        let reference = ReferenceSolution::bessel(2).unwrap();
        let d0 = reference.derivatives(1.0, 1);
        let from = InitialData::new(1.0, d0);
        let t = integrate(&p, &from, 0.05, 1e-12, 0.0, Precision::Double).unwrap();
        assert_eq!(t.status, TrajectoryStatus::Completed);
        for node in &t.nodes {
            let want = reference.value(node.x);
            let got = node.y[0];
            assert!(
                (got - want).abs() <= 1e-6 * want.abs(),
                "x = {}: got {got}, series {want}",
                node.x
            );
        }
    }

    #[test]
    fn integrate_matches_alpha_sine_closed_form() {
        let alpha = 1.0 / (2.0 * std::f64::consts::E);
        let p = crate::model::alpha_sine_problem(alpha);
        let reference = ReferenceSolution::alpha_sine(alpha).unwrap();
        let from = InitialData::new(1.0, reference.derivatives(1.0, 1));
        let t = integrate(&p, &from, 0.01, 1e-12, 0.0, Precision::Double).unwrap();
        assert_eq!(t.status, TrajectoryStatus::Completed);
        for node in &t.nodes {
            let want = reference.value(node.x);
            assert!(
                (node.y[0] - want).abs() <= 1e-6 * want.abs().max(1e-30),
                "x = {}: got {}, closed form {want}",
                node.x,
                node.y[0]
            );
        }
    }

    #[test]
    fn integrate_is_scale_equivariant() {
        let p = bessel_problem(2);
        let reference = ReferenceSolution::bessel(2).unwrap();
        let base = reference.derivatives(1.0, 1);
        let doubled: Vec<f64> = base.iter().map(|v| 2.0 * v).collect();
        let t1 = integrate(
            &p,
            &InitialData::new(1.0, base),
            0.05,
            1e-9,
            0.0,
            Precision::Double,
        )
        .unwrap();
        let t2 = integrate(
            &p,
            &InitialData::new(1.0, doubled),
            0.05,
            1e-9,
            0.0,
            Precision::Double,
        )
        .unwrap();
        assert_eq!(t1.nodes.len(), t2.nodes.len());
        for (a, b) in t1.nodes.iter().zip(&t2.nodes) {
            assert_eq!(a.x, b.x);
            for i in 0..a.y.len() {
                let rel = (b.y[i] - 2.0 * a.y[i]).abs() / a.y[i].abs().max(1e-300);
                assert!(rel <= 1e-10, "x = {}: {} vs {}", a.x, b.y[i], 2.0 * a.y[i]);
            }
        }
    }

    #[test]
    fn slope_of_cubic() {
        let samples = sample_positive(|x| x * x * x, SLOPE_WINDOW, 32);
        let est = vanishing_slope(&samples).unwrap();
        assert!((est.slope - 3.0).abs() < 1e-6, "slope {}", est.slope);
        assert!(est.r_squared > 0.999999);
    }

    #[test]
    fn slope_of_alpha_sine() {
        let alpha = 1.0 / (2.0 * std::f64::consts::E);
        let f = ReferenceSolution::alpha_sine(alpha).unwrap();
        let samples = sample_positive(|x| f.value(x), SLOPE_WINDOW, 32);
        let est = vanishing_slope(&samples).unwrap();
        assert!(
            (est.slope - (1.0 + alpha)).abs() < 0.01,
            "slope {} vs {}",
            est.slope,
            1.0 + alpha
        );
    }

    #[test]
    fn slope_of_bessel_solution() {
        let f = ReferenceSolution::bessel(2).unwrap();
        let samples = sample_positive(|x| f.value(x), SLOPE_WINDOW, 32);
        let est = vanishing_slope(&samples).unwrap();
        assert!((est.slope - 2.0).abs() < 0.01, "slope {}", est.slope);
    }

    #[test]
    fn slope_error_paths() {
        let too_few = vec![(0.1, 1.0); 4];
        assert!(matches!(
            vanishing_slope(&too_few).unwrap_err(),
            NumericsError::TooFewSamples { .. }
        ));
        let degenerate = vec![(0.5, 1.0); 9];
        assert!(matches!(
            vanishing_slope(&degenerate).unwrap_err(),
            NumericsError::DegenerateRegression
        ));
        let with_zero = [(0.1, 1.0), (0.2, 0.0)]
            .iter()
            .cycle()
            .take(8)
            .cloned()
            .collect::<Vec<_>>();
        assert!(matches!(
            vanishing_slope(&with_zero).unwrap_err(),
            NumericsError::ZeroFunctionValue(_)
        ));
    }

    #[test]
    fn minimal_c_of_cubic_is_three_halves() {
        let e = crate::expr::parse("x^3").unwrap();
        let s = crate::series::series_from_polynomial_expr(&e, 16).unwrap();
        let points = rational_geometric_points(rat(1, 2), rat(1, 2), 24);
        let scan = minimal_c_scan_series(&s, 2, &points).unwrap();
        // ratio N(N-1)/(N+1) = 6/4 = 3/2, constant at every sample
        for (_, r) in &scan.samples {
            assert_eq!(r, &rat(3, 2));
        }
        assert_eq!(scan.c_min, rat(3, 2));
    }

    #[test]
    fn minimal_c_of_equality_case_is_zero() {
        // f = x^(n-1): f^(n) vanishes identically
        let e = crate::expr::parse("x^1").unwrap();
        let s = crate::series::series_from_polynomial_expr(&e, 16).unwrap();
        let points = rational_geometric_points(rat(1, 2), rat(1, 2), 24);
        let scan = minimal_c_scan_series(&s, 2, &points).unwrap();
        assert!(scan.c_min.is_zero());
        assert!(scan.skipped.is_empty());
    }

    #[test]
    fn minimal_c_of_bessel_solution_is_bounded() {
        let f = ReferenceSolution::bessel(2).unwrap();
        let grid = geometric_grid(0.5, 1e-4, 32).unwrap();
        let scan = minimal_c_scan(&f, 2, &grid);
        assert!(scan.c_min <= 5.0, "c_min = {}", scan.c_min);
        assert!(scan.c_min > 0.0);
    }

    #[test]
    fn alpha_sine_reference_values() {
        let alpha = 1.0 / (2.0 * std::f64::consts::E);
        let f = ReferenceSolution::alpha_sine(alpha).unwrap();
        // f(pi) = pi^alpha sin(pi) = 0 up to the sin rounding
        assert!(f.value(std::f64::consts::PI).abs() < 1e-15);
        // even reflection
        assert!((f.value(-0.7) - f.value(0.7)).abs() < 1e-15);
        let d_pos = f.derivatives(0.7, 1)[1];
        let d_neg = f.derivatives(-0.7, 1)[1];
        assert!((d_pos + d_neg).abs() < 1e-15);
    }

    #[test]
    fn alpha_sine_satisfies_its_equation() {
        let alpha = 1.0 / (2.0 * std::f64::consts::E);
        let f = ReferenceSolution::alpha_sine(alpha).unwrap();
        for i in 1..=200 {
            let x = i as f64 / 201.0;
            let d = f.derivatives(x, 2);
            let residual = d[2] - (2.0 * alpha / x) * d[1]
                + (1.0 + (alpha * alpha + alpha) / (x * x)) * d[0];
            assert!(residual.abs() <= 1e-10, "x = {x}: residual {residual}");
        }
    }

    #[test]
    fn bessel_reference_matches_series() {
        let f = ReferenceSolution::bessel(2).unwrap();
        let series = bessel_series(2, 16).unwrap();
        let direct = series.eval_f64(0.3);
        assert!((f.value(0.3) - direct).abs() <= 1e-12 * direct.abs().max(1.0));
    }

    #[test]
    fn reference_parameter_ranges() {
        assert!(ReferenceSolution::alpha_sine(1.5).is_err());
        assert!(ReferenceSolution::alpha_sine(0.0).is_err());
        assert!(ReferenceSolution::bessel(1).is_err());
    }

    #[test]
    fn finite_difference_cross_check() {
        // 4th-order central differences of f agree with the analytic f'
        let alpha = 1.0 / (2.0 * std::f64::consts::E);
        let f = ReferenceSolution::alpha_sine(alpha).unwrap();
        let h = 1e-4;
        for i in 0..32 {
            let x = 0.1 + 0.9 * i as f64 / 31.0;
            let fd = (-f.value(x + 2.0 * h) + 8.0 * f.value(x + h) - 8.0 * f.value(x - h)
                + f.value(x - 2.0 * h))
                / (12.0 * h);
            let analytic = f.derivatives(x, 1)[1];
            assert!(
                (fd - analytic).abs() <= 1e-8,
                "x = {x}: fd {fd} vs analytic {analytic}"
            );
        }
    }

    #[test]
    fn cauchy_euler_weights_are_constant() {
        // sanity: the normalized Cauchy-Euler problem evaluates as intended
        let p = cauchy_euler_problem(0.3, 0.3);
        let v = p.coefficient_at(0, 0.01, Precision::Double).unwrap();
        assert!((v - 3000.0).abs() < 1e-9);
    }
}
