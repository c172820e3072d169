//! Generalized power series `x^nu * (c_0 + c_1 x + c_2 x^2 + ...)` with
//! exact rational coefficients (or high-precision reals for irrational
//! leading exponents), plus the ODE residual machinery built on them.
//!
//! Truncation bookkeeping: a series stores coefficients for the exponents
//! `nu .. nu + K`; anything beyond is unknown. Products are certified
//! through the minimum of the operand truncations, sums through the
//! smaller certified end. A normalized series has a non-negligible
//! leading coefficient; the empty coefficient list is the zero series.

use std::fmt;

use astro_float::{BigFloat, Radix, RoundingMode};
use num::bigint::BigInt;
use num::complex::Complex64;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::expr::{BinOp, Expr};

#[derive(Debug, Error, PartialEq)]
pub enum SeriesError {
    #[error("series is identically zero through its truncation; vanishing order cannot be certified")]
    AllZeroThroughTruncation,
    #[error("exponent lattices are offset by a non-integer ({0} vs {1})")]
    IncompatibleLattice(String, String),
    #[error("unsupported expression for series conversion: {0}")]
    UnsupportedExpression(String),
    #[error("truncation order must be at least 1")]
    TruncationTooSmall,
}

// ---------------------------------------------------------------------------
// Coefficient scalars
// ---------------------------------------------------------------------------

/// Scalar field for series coefficients and exponents.
pub trait SeriesScalar: Clone + PartialEq + fmt::Display {
    fn zero_s() -> Self;
    fn one_s() -> Self;
    fn from_int(v: i64) -> Self;
    fn add_s(&self, other: &Self) -> Self;
    fn sub_s(&self, other: &Self) -> Self;
    fn mul_s(&self, other: &Self) -> Self;
    fn neg_s(&self) -> Self;
    /// Counts as zero for normalization and vanishing-order purposes.
    fn is_negligible(&self) -> bool;
    fn to_f64(&self) -> f64;
    /// `self - other` when it is an exact integer (exponent lattice gap).
    fn integer_gap(&self, other: &Self) -> Option<i64>;
    /// Exact integer value, when the scalar is an integer.
    fn as_integer(&self) -> Option<i64>;
}

impl SeriesScalar for BigRational {
    fn zero_s() -> Self {
        Zero::zero()
    }
    fn one_s() -> Self {
        One::one()
    }
    fn from_int(v: i64) -> Self {
        BigRational::from(BigInt::from(v))
    }
    fn add_s(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_s(&self, other: &Self) -> Self {
        self - other
    }
    fn mul_s(&self, other: &Self) -> Self {
        self * other
    }
    fn neg_s(&self) -> Self {
        -self
    }
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn integer_gap(&self, other: &Self) -> Option<i64> {
        let d = self - other;
        if d.is_integer() {
            d.to_integer().to_i64()
        } else {
            None
        }
    }
    fn as_integer(&self) -> Option<i64> {
        if self.is_integer() {
            self.to_integer().to_i64()
        } else {
            None
        }
    }
}

/// High-precision real scalar (256-bit significand) for series whose
/// leading exponent is irrational. A coefficient below `1e-30` in
/// magnitude counts as zero.
#[derive(Debug, Clone)]
pub struct Mpf(BigFloat);

const MPF_BITS: usize = 256;
const MPF_RM: RoundingMode = RoundingMode::ToEven;

impl Mpf {
    pub fn from_f64(v: f64) -> Self {
        Mpf(BigFloat::from_f64(v, MPF_BITS))
    }

    fn zero_tolerance() -> BigFloat {
        let mut cc = astro_float::Consts::new().expect("constants cache");
        BigFloat::parse("1e-30", Radix::Dec, MPF_BITS, MPF_RM, &mut cc)
    }
}

impl fmt::Display for Mpf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", SeriesScalar::to_f64(self))
    }
}

impl PartialEq for Mpf {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl SeriesScalar for Mpf {
    fn zero_s() -> Self {
        Mpf(BigFloat::from_i8(0, MPF_BITS))
    }
    fn one_s() -> Self {
        Mpf(BigFloat::from_i8(1, MPF_BITS))
    }
    fn from_int(v: i64) -> Self {
        Mpf(BigFloat::from_i64(v, MPF_BITS))
    }
    fn add_s(&self, other: &Self) -> Self {
        Mpf(self.0.add(&other.0, MPF_BITS, MPF_RM))
    }
    fn sub_s(&self, other: &Self) -> Self {
        Mpf(self.0.sub(&other.0, MPF_BITS, MPF_RM))
    }
    fn mul_s(&self, other: &Self) -> Self {
        Mpf(self.0.mul(&other.0, MPF_BITS, MPF_RM))
    }
    fn neg_s(&self) -> Self {
        Mpf(self.0.neg())
    }
    fn is_negligible(&self) -> bool {
        let tol = Self::zero_tolerance();
        let cmp = self.0.abs().cmp(&tol);
        matches!(cmp, Some(o) if o <= 0)
    }
    fn to_f64(&self) -> f64 {
        format!("{}", self.0).parse::<f64>().unwrap_or(f64::NAN)
    }
    fn integer_gap(&self, other: &Self) -> Option<i64> {
        let d = SeriesScalar::to_f64(&self.sub_s(other));
        let nearest = d.round();
        if (d - nearest).abs() <= 1e-9 {
            Some(nearest as i64)
        } else {
            None
        }
    }
    fn as_integer(&self) -> Option<i64> {
        self.integer_gap(&<Self as SeriesScalar>::zero_s())
    }
}

// ---------------------------------------------------------------------------
// The series type
// ---------------------------------------------------------------------------

/// `x^nu * (coeffs[0] + coeffs[1] x + ...)`, certified through exponent
/// `nu + coeffs.len() - 1`. Normalized: `coeffs[0]` is non-negligible
/// unless the series is identically zero (empty list, with `nu` holding
/// one past the last certified exponent).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedPowerSeries<S: SeriesScalar> {
    nu: S,
    coeffs: Vec<S>,
}

pub type RationalSeries = GeneralizedPowerSeries<BigRational>;
pub type RealSeries = GeneralizedPowerSeries<Mpf>;

impl<S: SeriesScalar> GeneralizedPowerSeries<S> {
    pub fn new(nu: S, coeffs: Vec<S>) -> Self {
        let mut s = GeneralizedPowerSeries { nu, coeffs };
        s.normalize();
        s
    }

    pub fn zero() -> Self {
        GeneralizedPowerSeries {
            nu: S::zero_s(),
            coeffs: Vec::new(),
        }
    }

    fn normalize(&mut self) {
        let lead = self
            .coeffs
            .iter()
            .position(|c| !c.is_negligible())
            .unwrap_or(self.coeffs.len());
        if lead > 0 {
            self.nu = self.nu.add_s(&S::from_int(lead as i64));
            self.coeffs.drain(..lead);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Leading exponent. Meaningless for the zero series.
    pub fn leading_exponent(&self) -> &S {
        &self.nu
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn truncation_order(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Highest exponent whose coefficient is certified (`nu + len - 1`;
    /// for the zero series this is one below the stored `nu`).
    pub fn certified_end(&self) -> S {
        self.nu
            .add_s(&S::from_int(self.coeffs.len() as i64 - 1))
    }

    /// Vanishing order: the leading exponent and coefficient, i.e. the
    /// `N` and `a_N` of `f(x) = a_N x^N + O(x^{N+1})`.
    pub fn vanishing_order(&self) -> Result<(S, S), SeriesError> {
        if self.is_zero() {
            return Err(SeriesError::AllZeroThroughTruncation);
        }
        Ok((self.nu.clone(), self.coeffs[0].clone()))
    }

    /// Term-wise derivative: exponents drop by one, coefficient `i`
    /// becomes `(nu + i) * c_i`. Exponent bookkeeping is exact.
    pub fn derivative(&self) -> Self {
        if self.is_zero() {
            return GeneralizedPowerSeries {
                nu: self.nu.sub_s(&S::one_s()),
                coeffs: Vec::new(),
            };
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| self.nu.add_s(&S::from_int(i as i64)).mul_s(c))
            .collect();
        GeneralizedPowerSeries::new(self.nu.sub_s(&S::one_s()), coeffs)
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        let mut s = self.clone();
        for _ in 0..n {
            s = s.derivative();
        }
        s
    }

    /// Cauchy product, certified through the smaller truncation.
    pub fn product(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let len = self.coeffs.len().min(other.coeffs.len());
        let mut coeffs = vec![S::zero_s(); len];
        for (j, slot) in coeffs.iter_mut().enumerate() {
            let mut acc = S::zero_s();
            for i in 0..=j {
                acc = acc.add_s(&self.coeffs[i].mul_s(&other.coeffs[j - i]));
            }
            *slot = acc;
        }
        GeneralizedPowerSeries::new(self.nu.add_s(&other.nu), coeffs)
    }

    pub fn scale(&self, factor: &S) -> Self {
        if factor.is_negligible() {
            return Self::zero();
        }
        GeneralizedPowerSeries::new(
            self.nu.clone(),
            self.coeffs.iter().map(|c| c.mul_s(factor)).collect(),
        )
    }

    /// Multiply by `x^delta`.
    pub fn shift(&self, delta: &S) -> Self {
        GeneralizedPowerSeries {
            nu: self.nu.add_s(delta),
            coeffs: self.coeffs.clone(),
        }
    }

    pub fn neg(&self) -> Self {
        GeneralizedPowerSeries {
            nu: self.nu.clone(),
            coeffs: self.coeffs.iter().map(|c| c.neg_s()).collect(),
        }
    }

    /// Sum of two series on compatible exponent lattices. The result is
    /// certified through the smaller certified end.
    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        if self.is_zero() {
            return Ok(other.clone());
        }
        if other.is_zero() {
            return Ok(self.clone());
        }
        let gap = other.nu.integer_gap(&self.nu).ok_or_else(|| {
            SeriesError::IncompatibleLattice(self.nu.to_string(), other.nu.to_string())
        })?;
        // Align both series to the smaller leading exponent.
        let (base_nu, off_a, off_b) = if gap >= 0 {
            (self.nu.clone(), 0i64, gap)
        } else {
            (other.nu.clone(), -gap, 0i64)
        };
        let end_a = off_a + self.coeffs.len() as i64 - 1;
        let end_b = off_b + other.coeffs.len() as i64 - 1;
        let end = end_a.min(end_b);
        if end < 0 {
            return Ok(Self::zero());
        }
        let mut coeffs = vec![S::zero_s(); (end + 1) as usize];
        for (j, slot) in coeffs.iter_mut().enumerate() {
            let j = j as i64;
            let mut acc = S::zero_s();
            if j >= off_a && j - off_a < self.coeffs.len() as i64 {
                acc = acc.add_s(&self.coeffs[(j - off_a) as usize]);
            }
            if j >= off_b && j - off_b < other.coeffs.len() as i64 {
                acc = acc.add_s(&other.coeffs[(j - off_b) as usize]);
            }
            *slot = acc;
        }
        Ok(GeneralizedPowerSeries::new(base_nu, coeffs))
    }

    /// Evaluate at `x` in double precision. Non-integer leading exponents
    /// use `|x|^nu` (the even-reflection convention).
    pub fn eval_f64(&self, x: f64) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c.to_f64();
        }
        let nu = &self.nu;
        let head = match nu.as_integer() {
            Some(k) if k.abs() <= i32::MAX as i64 => x.powi(k as i32),
            _ => x.abs().powf(nu.to_f64()),
        };
        head * acc
    }
}

impl GeneralizedPowerSeries<BigRational> {
    /// Exact evaluation at a nonzero rational point. Requires an integer
    /// leading exponent.
    pub fn eval_rational(&self, x: &BigRational) -> Option<BigRational> {
        if self.is_zero() {
            return Some(BigRational::zero());
        }
        let k = SeriesScalar::as_integer(&self.nu)?;
        let k: i32 = k.try_into().ok()?;
        if x.is_zero() && k < 0 {
            return None;
        }
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        Some(x.pow(k) * acc)
    }
}

// ---------------------------------------------------------------------------
// Display
// ---------------------------------------------------------------------------

fn coeff_strings<S: SeriesScalar>(c: &S) -> (bool, String) {
    // (is_negative, magnitude string)
    let s = c.to_string();
    match s.strip_prefix('-') {
        Some(rest) => (true, rest.to_string()),
        None => (false, s),
    }
}

impl<S: SeriesScalar> fmt::Display for GeneralizedPowerSeries<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut inner = String::new();
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_negligible() {
                continue;
            }
            let (neg, mag) = coeff_strings(c);
            if first {
                if neg {
                    inner.push('-');
                }
                first = false;
            } else if neg {
                inner.push_str(" - ");
            } else {
                inner.push_str(" + ");
            }
            let var = match i {
                0 => String::new(),
                1 => "x".to_string(),
                _ => format!("x^{i}"),
            };
            let is_one = mag == "1";
            if var.is_empty() {
                inner.push_str(&mag);
            } else if is_one {
                inner.push_str(&var);
            } else {
                inner.push_str(&mag);
                inner.push('*');
                inner.push_str(&var);
            }
        }
        if self.nu.is_negligible() {
            write!(f, "{inner}")
        } else {
            let nu_str = match SeriesScalar::as_integer(&self.nu) {
                Some(k) if k >= 0 => format!("x^{k}"),
                _ => format!("x^({})", self.nu),
            };
            write!(f, "{nu_str} * ({inner})")
        }
    }
}

// ---------------------------------------------------------------------------
// Laurent coefficients and ODE residuals
// ---------------------------------------------------------------------------

/// A finite, exact Laurent expansion `sum_t coeffs[t] x^{lo + t}` used as
/// an ODE coefficient in residual checks.
#[derive(Debug, Clone)]
pub struct LaurentPolynomial<S: SeriesScalar> {
    lo: i64,
    coeffs: Vec<S>,
}

impl<S: SeriesScalar> LaurentPolynomial<S> {
    pub fn new(lo: i64, coeffs: Vec<S>) -> Self {
        LaurentPolynomial { lo, coeffs }
    }

    /// Multiply an exact Laurent polynomial into a truncated series. The
    /// certification of each shifted copy is tracked by the series sum.
    pub fn mul_series(
        &self,
        s: &GeneralizedPowerSeries<S>,
    ) -> Result<GeneralizedPowerSeries<S>, SeriesError> {
        let mut acc = GeneralizedPowerSeries::zero();
        let mut first = true;
        for (t, c) in self.coeffs.iter().enumerate() {
            if c.is_negligible() {
                continue;
            }
            let shifted = s
                .scale(c)
                .shift(&S::from_int(self.lo + t as i64));
            if first {
                acc = shifted;
                first = false;
            } else {
                acc = acc.add(&shifted)?;
            }
        }
        Ok(acc)
    }
}

/// An ODE `y^(n) + a_{n-1} y^(n-1) + ... + a_0 y = 0` whose coefficients
/// are exact Laurent expansions, for exact residual checks.
#[derive(Debug, Clone)]
pub struct LaurentOde<S: SeriesScalar> {
    coefficients: Vec<LaurentPolynomial<S>>,
}

impl<S: SeriesScalar> LaurentOde<S> {
    /// `coefficients[k]` multiplies `y^(k)`; the order is the length.
    pub fn new(coefficients: Vec<LaurentPolynomial<S>>) -> Self {
        LaurentOde { coefficients }
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }
}

/// The Bessel equation `y'' + (1/x) y' + (1 - m^2/x^2) y = 0` as exact
/// Laurent coefficients.
pub fn bessel_laurent_ode(m: u32) -> LaurentOde<BigRational> {
    let m2 = BigRational::from(BigInt::from(m) * BigInt::from(m));
    let a0 = LaurentPolynomial::new(-2, vec![-m2, BigRational::zero(), BigRational::one()]);
    let a1 = LaurentPolynomial::new(-1, vec![BigRational::one()]);
    LaurentOde::new(vec![a0, a1])
}

#[derive(Debug, Clone)]
pub struct ResidualReport<S: SeriesScalar> {
    /// Normalized residual series; empty when identically zero through
    /// the certified range.
    pub residual: GeneralizedPowerSeries<S>,
    /// Lowest exponent slot the residual covers.
    pub first_exponent: S,
    /// Highest exponent certified by the truncation bookkeeping.
    pub certified_end: S,
    /// Number of representable residual coefficients.
    pub representable_terms: i64,
}

impl<S: SeriesScalar> ResidualReport<S> {
    pub fn is_identically_zero(&self) -> bool {
        self.residual.is_zero()
    }

    /// Fewer than 3 representable coefficients means the truncation was
    /// too small for the check to say much.
    pub fn truncation_insufficient(&self) -> bool {
        self.representable_terms < 3
    }
}

/// Residual `s^(n) + sum_k a_k s^(k)` of a candidate series solution,
/// with exact arithmetic and explicit certification bookkeeping.
pub fn ode_residual<S: SeriesScalar>(
    ode: &LaurentOde<S>,
    s: &GeneralizedPowerSeries<S>,
) -> Result<ResidualReport<S>, SeriesError> {
    let n = ode.order();
    let mut derivatives = Vec::with_capacity(n + 1);
    derivatives.push(s.clone());
    for _ in 0..n {
        let next = derivatives.last().unwrap().derivative();
        derivatives.push(next);
    }

    let mut acc = derivatives[n].clone();
    let mut first_exp: Option<S> = if acc.is_zero() {
        None
    } else {
        Some(acc.leading_exponent().clone())
    };
    for (k, a_k) in ode.coefficients.iter().enumerate() {
        let term = a_k.mul_series(&derivatives[k])?;
        if !term.is_zero() {
            let te = term.leading_exponent().clone();
            first_exp = Some(match first_exp {
                None => te,
                Some(cur) => match te.integer_gap(&cur) {
                    Some(g) if g < 0 => te,
                    _ => cur,
                },
            });
        }
        acc = acc.add(&term)?;
    }

    let certified_end = acc.certified_end();
    let first_exponent = match first_exp {
        Some(e) => {
            // The residual may have cancelled below its structural start;
            // certification still begins at the lowest contributing slot.
            e
        }
        None => certified_end.clone(),
    };
    let representable = certified_end
        .integer_gap(&first_exponent)
        .map(|g| g + 1)
        .unwrap_or(0);
    Ok(ResidualReport {
        residual: acc,
        first_exponent,
        certified_end,
        representable_terms: representable,
    })
}

// ---------------------------------------------------------------------------
// Bessel series
// ---------------------------------------------------------------------------

pub fn factorial(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    acc
}

/// First-kind Bessel series of integer order `m`, truncated at order `K`:
/// coefficients for exponents `m .. m + K`, where the term `k`
/// contributes `(-1)^k / (k! (k+m)! 2^{2k+m})` at exponent `2k + m`.
pub fn bessel_series(m: u32, truncation: usize) -> Result<RationalSeries, SeriesError> {
    if truncation < 1 {
        return Err(SeriesError::TruncationTooSmall);
    }
    let mut coeffs = vec![BigRational::zero(); truncation + 1];
    let mut k = 0u64;
    while 2 * k as usize <= truncation {
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let denom = factorial(k)
            * factorial(k + m as u64)
            * BigInt::from(2u32).pow(2 * k as u32 + m);
        coeffs[2 * k as usize] = BigRational::new(BigInt::from(sign), denom);
        k += 1;
    }
    Ok(GeneralizedPowerSeries::new(
        BigRational::from(BigInt::from(m)),
        coeffs,
    ))
}

// ---------------------------------------------------------------------------
// Indicial polynomial and roots
// ---------------------------------------------------------------------------

/// Roots of the indicial polynomial of an equi-dimensional equation,
/// together with the polynomial itself (ascending coefficients, monic).
#[derive(Debug, Clone)]
pub struct IndicialRoots {
    pub roots: Vec<Complex64>,
    pub polynomial_coeffs: Vec<f64>,
}

impl IndicialRoots {
    /// Largest residual `|p(r)|` over the computed roots, for diagnostics.
    pub fn max_residual(&self) -> f64 {
        self.roots
            .iter()
            .map(|r| eval_poly(&self.polynomial_coeffs, *r).norm())
            .fold(0.0, f64::max)
    }
}

fn eval_poly(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// Indicial polynomial of `x^n y^(n) + a_{n-1} x^{n-1} y^(n-1) + ... +
/// a_0 y·(x^0 slot) = 0`: substituting `y = x^r` gives
/// `sum_k a_k r(r-1)...(r-k+1)` with `a_n = 1`. For n = 2 this is
/// `r(r-1) + a_1 r + a_0`.
pub fn indicial_roots(n: usize, a: &[f64]) -> IndicialRoots {
    assert!(n >= 2, "indicial analysis needs order >= 2");
    assert_eq!(a.len(), n, "need one constant per coefficient slot");

    // falling factorial r(r-1)...(r-k+1) built iteratively
    let mut poly = vec![0.0; n + 1];
    let mut falling = vec![1.0]; // ff_0 = 1
    for k in 0..=n {
        let a_k = if k == n { 1.0 } else { a[k] };
        for (i, c) in falling.iter().enumerate() {
            poly[i] += a_k * c;
        }
        if k < n {
            // ff_{k+1} = ff_k * (r - k)
            let mut next = vec![0.0; falling.len() + 1];
            for (i, c) in falling.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= c * k as f64;
            }
            falling = next;
        }
    }

    let roots = durand_kerner(&poly);
    IndicialRoots {
        roots,
        polynomial_coeffs: poly,
    }
}

/// Durand-Kerner simultaneous root iteration on a monic-normalized
/// polynomial. Deterministic: fixed starting configuration, fixed
/// iteration cap.
fn durand_kerner(coeffs: &[f64]) -> Vec<Complex64> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    if deg == 0 {
        return Vec::new();
    }
    let radius = 1.0
        + monic[..deg]
            .iter()
            .fold(0.0f64, |m, c| m.max(c.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|j| seed.powu(j as u32 + 1) * radius)
        .collect();
    for _ in 0..1000 {
        let mut max_step = 0.0f64;
        for j in 0..deg {
            let mut denom = Complex64::new(1.0, 0.0);
            for k in 0..deg {
                if k != j {
                    denom *= z[j] - z[k];
                }
            }
            if denom.norm() == 0.0 {
                continue;
            }
            let step = eval_poly(&monic, z[j]) / denom;
            z[j] -= step;
            max_step = max_step.max(step.norm() / (1.0 + z[j].norm()));
        }
        if max_step < 1e-15 {
            break;
        }
    }
    // Canonical order: by real part, then imaginary part.
    z.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    z
}

// ---------------------------------------------------------------------------
// Polynomial expressions -> exact series
// ---------------------------------------------------------------------------

/// Convert an expression built from decimals, `x`, `+`, `-`, `*`,
/// division by a monomial, and nonnegative integer powers into an exact
/// rational series padded to the given truncation order. Anything else
/// (transcendental functions, irrational constants) is unsupported.
pub fn series_from_polynomial_expr(
    expr: &Expr,
    truncation: usize,
) -> Result<RationalSeries, SeriesError> {
    let unsupported = || SeriesError::UnsupportedExpression(expr.to_string());
    match expr {
        Expr::Number(n) => {
            let mut coeffs = vec![BigRational::zero(); truncation + 1];
            coeffs[0] = n.to_rational();
            Ok(GeneralizedPowerSeries::new(BigRational::zero(), coeffs))
        }
        Expr::Var => {
            let mut coeffs = vec![BigRational::zero(); truncation + 1];
            coeffs[0] = BigRational::one();
            Ok(GeneralizedPowerSeries::new(BigRational::one(), coeffs))
        }
        Expr::Neg(a) => Ok(series_from_polynomial_expr(a, truncation)?.neg()),
        Expr::Bin(op, l, r) => {
            match op {
                BinOp::Add | BinOp::Sub => {
                    let a = series_from_polynomial_expr(l, truncation)?;
                    let b = series_from_polynomial_expr(r, truncation)?;
                    let b = if *op == BinOp::Sub { b.neg() } else { b };
                    a.add(&b)
                }
                BinOp::Mul => {
                    let a = series_from_polynomial_expr(l, truncation)?;
                    let b = series_from_polynomial_expr(r, truncation)?;
                    Ok(a.product(&b))
                }
                BinOp::Div => {
                    let a = series_from_polynomial_expr(l, truncation)?;
                    let b = series_from_polynomial_expr(r, truncation)?;
                    // division only by a monomial c * x^m
                    if b.is_zero() || b.coeffs().iter().skip(1).any(|c| !c.is_negligible()) {
                        return Err(unsupported());
                    }
                    let c = &b.coeffs()[0];
                    let inv = BigRational::one() / c.clone();
                    Ok(a.scale(&inv).shift(&(-b.leading_exponent().clone())))
                }
                BinOp::Pow => {
                    let a = series_from_polynomial_expr(l, truncation)?;
                    let p = crate::expr::evaluate_rational(r).ok_or_else(unsupported)?;
                    if !p.is_integer() {
                        return Err(unsupported());
                    }
                    let p: i64 = p.to_integer().to_i64().ok_or_else(unsupported)?;
                    if !(0..=64).contains(&p) {
                        return Err(unsupported());
                    }
                    let mut acc = {
                        let mut coeffs = vec![BigRational::zero(); truncation + 1];
                        coeffs[0] = BigRational::one();
                        GeneralizedPowerSeries::new(BigRational::zero(), coeffs)
                    };
                    for _ in 0..p {
                        acc = acc.product(&a);
                    }
                    Ok(acc)
                }
            }
        }
        Expr::Const(_) | Expr::Func(..) => Err(unsupported()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn int(n: i64) -> BigRational {
        BigRational::from(BigInt::from(n))
    }

    #[test]
    fn derivative_of_monomial() {
        // d/dx x^2 = 2x
        let s = RationalSeries::new(int(2), vec![int(1)]);
        let d = s.derivative();
        assert_eq!(d.leading_exponent(), &int(1));
        assert_eq!(d.coeffs(), &[int(2)]);
    }

    #[test]
    fn derivative_of_half_power() {
        // d/dx x^(1/2) = (1/2) x^(-1/2)
        let s = RationalSeries::new(rat(1, 2), vec![int(1)]);
        let d = s.derivative();
        assert_eq!(d.leading_exponent(), &rat(-1, 2));
        assert_eq!(d.coeffs(), &[rat(1, 2)]);
    }

    #[test]
    fn derivative_of_bessel_leading_term() {
        let y2 = bessel_series(2, 8).unwrap();
        let d = y2.derivative();
        assert_eq!(d.leading_exponent(), &int(1));
        assert_eq!(d.coeffs()[0], rat(1, 4));
    }

    #[test]
    fn product_of_monomials() {
        let a = RationalSeries::new(int(1), vec![int(1)]);
        let b = RationalSeries::new(int(2), vec![int(1)]);
        let p = a.product(&b);
        assert_eq!(p.leading_exponent(), &int(3));
        assert_eq!(p.coeffs(), &[int(1)]);
    }

    #[test]
    fn product_difference_of_squares() {
        let a = RationalSeries::new(int(0), vec![int(1), int(1), int(0)]);
        let b = RationalSeries::new(int(0), vec![int(1), int(-1), int(0)]);
        let p = a.product(&b);
        assert_eq!(p.coeffs(), &[int(1), int(0), int(-1)]);
    }

    #[test]
    fn product_with_negative_shift() {
        let x_minus2 = RationalSeries::new(int(-2), vec![int(1)]);
        let y2 = bessel_series(2, 8).unwrap();
        let p = x_minus2.product(&y2);
        assert_eq!(p.leading_exponent(), &int(0));
        assert_eq!(p.coeffs()[0], rat(1, 8));
    }

    #[test]
    fn bessel_series_terms() {
        let y2 = bessel_series(2, 6).unwrap();
        assert_eq!(y2.leading_exponent(), &int(2));
        assert_eq!(y2.coeffs()[0], rat(1, 8));
        assert_eq!(y2.coeffs()[2], rat(-1, 96));
        assert_eq!(y2.coeffs()[4], rat(1, 3072));
        let y0 = bessel_series(0, 2).unwrap();
        assert_eq!(y0.leading_exponent(), &int(0));
        assert_eq!(y0.coeffs()[0], int(1));
    }

    #[test]
    fn bessel_truncation_guard() {
        assert_eq!(
            bessel_series(2, 0).unwrap_err(),
            SeriesError::TruncationTooSmall
        );
    }

    #[test]
    fn bessel_residual_identically_zero() {
        let ode = bessel_laurent_ode(2);
        let y2 = bessel_series(2, 10).unwrap();
        let report = ode_residual(&ode, &y2).unwrap();
        assert!(report.is_identically_zero(), "residual = {}", report.residual);
        // certified at least through x^8
        let end = SeriesScalar::as_integer(&report.certified_end).unwrap();
        assert!(end >= 8, "certified end {end}");
        assert!(!report.truncation_insufficient());
    }

    #[test]
    fn non_solution_has_nonzero_residual() {
        let ode = bessel_laurent_ode(2);
        let s = RationalSeries::new(int(2), vec![int(1), int(0), int(0), int(0)]);
        let report = ode_residual(&ode, &s).unwrap();
        assert!(!report.is_identically_zero());
    }

    #[test]
    fn zero_series_residual_is_zero() {
        let ode = bessel_laurent_ode(2);
        let report = ode_residual(&ode, &RationalSeries::zero()).unwrap();
        assert!(report.is_identically_zero());
    }

    #[test]
    fn truncation_insufficient_flagged() {
        let ode = bessel_laurent_ode(2);
        let y2 = bessel_series(2, 1).unwrap();
        let report = ode_residual(&ode, &y2).unwrap();
        assert!(report.representable_terms < 3);
        assert!(report.truncation_insufficient());
    }

    #[test]
    fn vanishing_order_examples() {
        let y2 = bessel_series(2, 8).unwrap();
        let (order, coeff) = y2.vanishing_order().unwrap();
        assert_eq!(order, int(2));
        assert_eq!(coeff, rat(1, 8));

        let s = RationalSeries::new(int(3), vec![int(1), int(0), int(-1)]);
        let (order, coeff) = s.vanishing_order().unwrap();
        assert_eq!(order, int(3));
        assert_eq!(coeff, int(1));

        assert_eq!(
            RationalSeries::zero().vanishing_order().unwrap_err(),
            SeriesError::AllZeroThroughTruncation
        );
    }

    #[test]
    fn indicial_roots_factorable() {
        // r(r-1) - 6 = r^2 - r - 6 = (r-3)(r+2)
        let r = indicial_roots(2, &[-6.0, 0.0]);
        let mut reals: Vec<f64> = r.roots.iter().map(|z| z.re).collect();
        reals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((reals[0] + 2.0).abs() < 1e-10);
        assert!((reals[1] - 3.0).abs() < 1e-10);
        assert!(r.roots.iter().all(|z| z.im.abs() < 1e-10));
        assert!(r.max_residual() < 1e-12);
    }

    #[test]
    fn indicial_double_root() {
        // r(r-1) + r + 0 = r^2: double root at 0
        let r = indicial_roots(2, &[0.0, 1.0]);
        for z in &r.roots {
            assert!(z.norm() < 1e-6, "root {z}");
        }
        assert!(r.max_residual() < 1e-12);
    }

    #[test]
    fn indicial_complex_pair() {
        let r = indicial_roots(2, &[0.3, 0.3]);
        for z in &r.roots {
            assert!((z.re - 0.35).abs() < 1e-10);
            assert!((z.im.abs() - 0.421307488658817).abs() < 1e-10);
            assert!(z.re < 2.0);
        }
        assert!(r.max_residual() < 1e-12);
    }

    #[test]
    fn series_display_format() {
        let y2 = bessel_series(2, 4).unwrap();
        assert_eq!(y2.to_string(), "x^2 * (1/8 - 1/96*x^2 + 1/3072*x^4)");
        let y0 = bessel_series(0, 1).unwrap();
        assert_eq!(y0.to_string(), "1 - 1/4*x^2".split(" - ").next().unwrap());
        let zero = RationalSeries::zero();
        assert_eq!(zero.to_string(), "0");
    }

    #[test]
    fn polynomial_expr_to_series() {
        let e = crate::expr::parse("x^3 - x^5").unwrap();
        let s = series_from_polynomial_expr(&e, 16).unwrap();
        let (order, coeff) = s.vanishing_order().unwrap();
        assert_eq!(order, int(3));
        assert_eq!(coeff, int(1));

        let e = crate::expr::parse("2*x^4/x").unwrap();
        let s = series_from_polynomial_expr(&e, 16).unwrap();
        assert_eq!(s.leading_exponent(), &int(3));
        assert_eq!(s.coeffs()[0], int(2));

        let e = crate::expr::parse("sin(x)").unwrap();
        assert!(matches!(
            series_from_polynomial_expr(&e, 16),
            Err(SeriesError::UnsupportedExpression(_))
        ));
    }

    #[test]
    fn real_scalar_series() {
        // derivative of x^a for irrational-ish a, in the real mode
        let a = 0.18393972058572117;
        let s = RealSeries::new(Mpf::from_f64(a), vec![Mpf::from_f64(1.0)]);
        let d = s.derivative();
        assert!((SeriesScalar::to_f64(d.leading_exponent()) - (a - 1.0)).abs() < 1e-15);
        assert!((SeriesScalar::to_f64(&d.coeffs()[0]) - a).abs() < 1e-15);
        // negligible threshold kills tiny coefficients
        let tiny = RealSeries::new(
            Mpf::from_f64(0.0),
            vec![Mpf::from_f64(1e-31), Mpf::from_f64(1.0)],
        );
        assert_eq!(SeriesScalar::to_f64(tiny.leading_exponent()), 1.0);
    }

    #[test]
    fn eval_rational_exact() {
        let s = RationalSeries::new(int(-1), vec![int(1), int(2)]); // x^-1 + 2
        let v = s.eval_rational(&rat(1, 3)).unwrap();
        assert_eq!(v, int(5)); // 3 + 2
    }
}
