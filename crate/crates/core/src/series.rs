//! Truncated power series in the pgf variable `z`.

use std::ops::{Add, Mul, Neg, Sub};

use crate::dist::DiscreteLaw;
use crate::error::{domain, usage, Result};

/// Coefficients `c_0 ..= c_N` of a power series truncated at order `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<f64>,
}

impl TruncatedSeries {
    /// Series with the given coefficients; the order is `coeffs.len() − 1`.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(usage("a truncated series needs at least one coefficient"));
        }
        Ok(Self { coeffs })
    }

    pub fn zero(order: usize) -> Self {
        Self { coeffs: vec![0.0; order + 1] }
    }

    pub fn constant(c: f64, order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = c;
        s
    }

    /// `c · z^k`, or zero when `k` exceeds the order.
    pub fn monomial(c: f64, k: usize, order: usize) -> Self {
        let mut s = Self::zero(order);
        if k <= order {
            s.coeffs[k] = c;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, n: usize) -> f64 {
        self.coeffs.get(n).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    fn check_order(&self, other: &Self) -> Result<()> {
        if self.order() == other.order() {
            Ok(())
        } else {
            Err(usage(format!("series orders differ: {} vs {}", self.order(), other.order())))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(Self { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(Self { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect() })
    }

    /// Cauchy product truncated at the common order.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let n = self.order();
        let mut out = vec![0.0; n + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            for (o, b) in out[i..].iter_mut().zip(&other.coeffs) {
                *o += a * b;
            }
        }
        Ok(Self { coeffs: out })
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|a| a * c).collect() }
    }

    /// Horner evaluation of the truncated polynomial.
    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
    }

    /// `exp(a)` through `n b_n = Σ_{k=1}^{n} k a_k b_{n−k}`.
    pub fn exp_series(&self) -> Self {
        let n = self.order();
        let a = &self.coeffs;
        let mut b = vec![0.0; n + 1];
        b[0] = a[0].exp();
        let ka: Vec<f64> = a.iter().enumerate().map(|(k, c)| k as f64 * c).collect();
        for m in 1..=n {
            let mut acc = 0.0;
            for k in 1..=m {
                acc += ka[k] * b[m - k];
            }
            b[m] = acc / m as f64;
        }
        Self { coeffs: b }
    }

    /// `log(a)` for `a_0 > 0`, inverting [`exp_series`](Self::exp_series).
    pub fn log_series(&self) -> Result<Self> {
        let a = &self.coeffs;
        if !(a[0] > 0.0) {
            return Err(domain(format!("log of a series needs a positive constant term, got {}", a[0])));
        }
        let n = self.order();
        let mut l = vec![0.0; n + 1];
        l[0] = a[0].ln();
        // n a_0 l_n = n a_n − Σ_{k=1}^{n−1} k l_k a_{n−k}
        for m in 1..=n {
            let mut acc = m as f64 * a[m];
            for k in 1..m {
                acc -= k as f64 * l[k] * a[m - k];
            }
            l[m] = acc / (m as f64 * a[0]);
        }
        Ok(Self { coeffs: l })
    }
}

impl Neg for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn neg(self) -> TruncatedSeries {
        self.scale(-1.0)
    }
}

impl Add for &TruncatedSeries {
    type Output = TruncatedSeries;
    /// Panics on mismatched orders; use [`TruncatedSeries::add`] to get an error instead.
    fn add(self, rhs: Self) -> TruncatedSeries {
        TruncatedSeries::add(self, rhs).expect("series orders differ")
    }
}

impl Sub for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn sub(self, rhs: Self) -> TruncatedSeries {
        TruncatedSeries::sub(self, rhs).expect("series orders differ")
    }
}

impl Mul for &TruncatedSeries {
    type Output = TruncatedSeries;
    fn mul(self, rhs: Self) -> TruncatedSeries {
        TruncatedSeries::mul(self, rhs).expect("series orders differ")
    }
}

/// Output of [`affine_compose`].
#[derive(Debug, Clone)]
pub struct Composed {
    pub series: TruncatedSeries,
    /// Bound on what any single coefficient lost to truncating the sum over `k`.
    pub tail_mass: f64,
    /// Number of pmf terms that were expanded.
    pub terms: u64,
}

const COMPOSE_MAX_TERMS: u64 = 50_000_000;

/// Series of `z ↦ φ(a z + b)` for the pgf `φ` of `law`, expanded term by term
/// as `Σ_k P(X = k) (a z + b)^k`.
///
/// The binomial rows `C(k, n) aⁿ b^{k−n}` are advanced with Pascal's rule. The
/// sum over `k` stops once every row entry is past its peak and the remaining
/// probability times the largest entry is below `1e-17`.
pub fn affine_compose<L: DiscreteLaw + ?Sized>(law: &L, a: f64, b: f64, order: usize) -> Result<Composed> {
    if a < 0.0 || b < 0.0 || !(a.is_finite() && b.is_finite()) {
        return Err(domain(format!("composition coefficients must be nonnegative, got a={a}, b={b}")));
    }
    if a + b > 1.0 + 1e-15 {
        return Err(domain(format!("a + b must not exceed 1, got {}", a + b)));
    }
    let mut out = vec![0.0; order + 1];
    if a == 0.0 && b >= 1.0 {
        // φ(1) of a proper law
        out[0] = 1.0;
        return Ok(Composed { series: TruncatedSeries { coeffs: out }, tail_mass: 0.0, terms: 0 });
    }
    let mut row = vec![0.0; order + 1];
    row[0] = 1.0;
    let mut k = 0u64;
    let mut tail_mass;
    loop {
        let pk = law.pmf_of(k);
        if pk != 0.0 {
            for (o, r) in out.iter_mut().zip(&row) {
                *o += pk * r;
            }
        }
        // advance the row to k + 1
        let top = (k as usize + 1).min(order);
        for n in (1..=top).rev() {
            row[n] = b * row[n] + a * row[n - 1];
        }
        row[0] *= b;
        k += 1;
        let peak = row.iter().fold(0.0f64, |m, r| m.max(*r));
        tail_mass = law.survival_of(k) * peak;
        let past_mode = a == 0.0 || (k as f64) * a >= order as f64 + 1.0;
        if (past_mode && tail_mass < 1e-17) || peak == 0.0 || k >= COMPOSE_MAX_TERMS {
            break;
        }
    }
    Ok(Composed { series: TruncatedSeries { coeffs: out }, tail_mass, terms: k })
}
