//! The discrete fractional power-law family used for batch sizes and discrete
//! sojourn times, plus the exponential sojourn law.
//!
//! A `FracPowerLaw` of order `p` puts mass
//!
//! ```text
//! P(X = k) = (1 − k/(p+k)) · Π_{i=1}^{k−1} i/(p+i),   k = 1, 2, …
//! ```
//!
//! with survival `P(X ≥ k) = Γ(p+1)Γ(k)/Γ(p+k) ~ Γ(p+1) k^{−p}`. Survival is
//! the primitive: it is evaluated through a log-gamma difference so that it
//! stays accurate far beyond the point where the telescoping product
//! underflows. The pmf is derived from it as `survival(k) · p/(p+k)`.

use std::f64::consts::PI;

use crate::error::{domain, Result};
use crate::numerics::{self, GaussLegendre};

/// Default cap on sampled values.
pub const DEFAULT_K_MAX: u64 = 1 << 62;

/// Discrete fractional power law of order `p > 0` on `{1, 2, …}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracPowerLaw {
    p: f64,
    ln_gamma_p1: f64,
}

/// Exponential sojourn law with rate `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpSojourn {
    mu: f64,
}

/// Order `r > 0` of a moment `E[X^r]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentQuery {
    r: f64,
}

/// A sampled value together with whether it hit the cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Draw {
    pub value: u64,
    pub capped: bool,
}

/// Distribution of the number of survivors when each of `X` items is kept
/// independently with probability `s`.
#[derive(Debug, Clone)]
pub struct Thinned {
    /// `P(M = n)` for `n = 0..=order`.
    pub probs: Vec<f64>,
    /// `P(M ≥ 1)`, computed without cancellation.
    pub at_least_one: f64,
}

/// Any law on the nonnegative integers that `series::affine_compose` can expand.
pub trait DiscreteLaw {
    fn pmf_of(&self, k: u64) -> f64;
    /// `P(X ≥ k)`.
    fn survival_of(&self, k: u64) -> f64;
}

impl MomentQuery {
    pub fn new(r: f64) -> Result<Self> {
        if r > 0.0 && r.is_finite() {
            Ok(Self { r })
        } else {
            Err(domain(format!("moment order must be positive, got {r}")))
        }
    }

    pub fn order(&self) -> f64 {
        self.r
    }
}

impl ExpSojourn {
    pub fn new(mu: f64) -> Result<Self> {
        if mu > 0.0 && mu.is_finite() {
            Ok(Self { mu })
        } else {
            Err(domain(format!("exponential rate must be positive, got {mu}")))
        }
    }

    pub fn rate(&self) -> f64 {
        self.mu
    }

    pub fn mean(&self) -> f64 {
        1.0 / self.mu
    }

    /// `P(S > t)`.
    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            1.0
        } else {
            (-self.mu * t).exp()
        }
    }

    /// `E[S^r] = Γ(r+1) / μ^r`.
    pub fn moment(&self, r: f64) -> f64 {
        (numerics::ln_gamma1p(r) - r * self.mu.ln()).exp()
    }
}

impl FracPowerLaw {
    pub fn new(p: f64) -> Result<Self> {
        if p > 0.0 && p.is_finite() {
            Ok(Self { p, ln_gamma_p1: numerics::ln_gamma1p(p) })
        } else {
            Err(domain(format!("power-law order must be positive, got {p}")))
        }
    }

    pub fn order(&self) -> f64 {
        self.p
    }

    /// `ln P(X ≥ x)` for real `x ≥ 1`.
    pub fn ln_survival_at(&self, x: f64) -> f64 {
        self.ln_gamma_p1 - numerics::ln_gamma_ratio(x, self.p)
    }

    /// Continuous extension of `P(X ≥ x)` for real `x ≥ 1`.
    pub fn survival_at(&self, x: f64) -> f64 {
        if x <= 1.0 {
            return 1.0;
        }
        self.ln_survival_at(x).exp()
    }

    /// Continuous extension of the pmf for real `x ≥ 1`.
    pub fn pmf_at(&self, x: f64) -> f64 {
        self.survival_at(x) * self.p / (self.p + x)
    }

    pub fn pmf(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return Err(domain("the power law is supported on k ≥ 1"));
        }
        Ok(self.pmf_at(k as f64))
    }

    /// `P(X ≥ k)`.
    pub fn survival(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return Err(domain("survival is defined for k ≥ 1"));
        }
        Ok(self.survival_at(k as f64))
    }

    /// Inverse-CDF draw with the default cap of `2^62`.
    pub fn sample(&self, u: f64) -> Draw {
        self.sample_capped(u, DEFAULT_K_MAX)
    }

    /// Smallest `k` with `P(X ≥ k + 1) ≤ u`, or `cap` flagged as capped when
    /// that `k` exceeds `cap`. `u` must lie in `(0, 1]`.
    pub fn sample_capped(&self, u: f64, cap: u64) -> Draw {
        debug_assert!(u > 0.0 && u <= 1.0, "u = {u}");
        let cap = cap.max(1);
        let ln_u = u.ln();
        let above = |k: u64| self.ln_survival_at((k + 1) as f64) > ln_u;
        if !above(1) {
            return Draw { value: 1, capped: false };
        }
        if above(cap) {
            return Draw { value: cap, capped: true };
        }
        // above(lo) holds, above(hi) fails
        let mut lo = 1u64;
        let mut hi = 2u64.min(cap);
        while above(hi) {
            lo = hi;
            hi = hi.saturating_mul(2).min(cap);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if above(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Draw { value: hi, capped: false }
    }

    /// `E[X^r] < ∞` exactly when `r < p`.
    pub fn moment_finite(&self, q: MomentQuery) -> bool {
        q.r < self.p
    }

    /// `E[X^r]`, or `None` when it is infinite.
    pub fn moment(&self, r: f64) -> Option<f64> {
        if r >= self.p {
            return None;
        }
        let (v, _) = numerics::lattice_sum_scalar(1, None, |x| self.pmf_at(x) * x.powf(r));
        Some(v)
    }

    /// `E[ln X]`, finite for every order.
    pub fn mean_log(&self) -> f64 {
        numerics::lattice_sum_scalar(1, None, |x| self.pmf_at(x) * x.ln()).0
    }

    /// `E[H_X] = Σ_{n≥1} P(X ≥ n)/n`, the expected maximum of `X` unit-rate
    /// exponentials.
    pub fn mean_harmonic(&self) -> f64 {
        numerics::lattice_sum_scalar(1, None, |x| self.survival_at(x) / x).0
    }

    /// Probability generating function `E[z^X]` for `0 ≤ z < 1`.
    ///
    /// Orders 1/2, 1 and 2 use closed forms; other orders sum the pmf until the
    /// remainder bound `P(X ≥ K+1) z^{K+1} / (1 − z)` drops below `1e-16`.
    pub fn pgf(&self, z: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&z) {
            return Err(domain(format!("pgf argument must lie in [0, 1), got {z}")));
        }
        if self.has_closed_form() {
            return Ok(1.0 - self.pgf_complement(z));
        }
        Ok(self.pgf_by_summation(z))
    }

    fn has_closed_form(&self) -> bool {
        self.p == 0.5 || self.p == 1.0 || self.p == 2.0
    }

    pub(crate) fn pgf_by_summation(&self, z: f64) -> f64 {
        let mut acc = 0.0;
        let mut zk = 1.0;
        let mut k = 1u64;
        loop {
            zk *= z;
            let sk = self.survival_at(k as f64);
            acc += sk * self.p / (self.p + k as f64) * zk;
            let rest = sk * k as f64 / (self.p + k as f64) * zk * z / (1.0 - z);
            if rest < 1e-16 || zk == 0.0 {
                break;
            }
            k += 1;
        }
        acc
    }

    /// `1 − E[w^X]` for `w ∈ [0, 1]`.
    pub fn pgf_complement(&self, w: f64) -> f64 {
        self.complement_gap(1.0 - w.clamp(0.0, 1.0))
    }

    /// `1 − E[(1 − y)^X]` for `y ∈ [0, 1]`. Taking the gap `y` directly keeps
    /// full relative precision when `y` is tiny.
    pub fn complement_gap(&self, y: f64) -> f64 {
        let y = y.clamp(0.0, 1.0);
        if y == 1.0 {
            return 1.0;
        }
        if y == 0.0 {
            return 0.0;
        }
        let w = 1.0 - y;
        if self.p == 0.5 {
            (y / w).sqrt() * w.sqrt().asin()
        } else if self.p == 1.0 {
            -(y / w) * y.ln()
        } else if self.p == 2.0 {
            if w < 0.1 {
                // w + y ln y = Σ_{k≥2} w^k / (k(k−1))
                let mut acc = 0.0;
                let mut wk = 1.0;
                for k in 2..40 {
                    acc += wk / (k * (k - 1)) as f64;
                    wk *= w;
                }
                2.0 * y * acc
            } else {
                2.0 * y * (w + y * y.ln()) / (w * w)
            }
        } else {
            self.at_least_one(y)
        }
    }

    /// `P(M ≥ 1)` for `M` the `s`-thinning of `X`, i.e. `1 − E[(1−s)^X]`.
    pub fn at_least_one(&self, s: f64) -> f64 {
        self.thinned_tail(s, 0)
    }

    /// `P(M > n)` for `M` the `s`-thinning of `X`:
    /// `p aᵖ ∫₀¹ wⁿ (1−w)^{p−1} (a + b w)^{−p} dw` with `a = s`, `b = 1 − s`.
    pub fn thinned_tail(&self, s: f64, n: u64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return self.survival_at(n as f64 + 1.0);
        }
        let (p, a, b) = (self.p, s, 1.0 - s);
        let nf = n as f64;
        let pow_n = |w: f64| if n == 0 { 1.0 } else { (nf * w.ln()).exp() };
        let rule = GaussLegendre::ten();
        let mut acc = 0.0;
        if a >= 0.1 {
            rule.visit_panels(0.0, 0.5, 5, |w, gw| {
                acc += gw * p * pow_n(w) * (p * a.ln() + (p - 1.0) * (-w).ln_1p() - p * (a + b * w).ln()).exp();
            });
        } else {
            let ymax = (b / (2.0 * a)).ln_1p();
            let panels = (ymax / 0.5).ceil().max(1.0) as usize;
            rule.visit_panels(0.0, ymax, panels, |y, gw| {
                let w = a / b * y.exp_m1();
                acc += gw * p * a / b * pow_n(w) * ((p - 1.0) * (-w).ln_1p() + (1.0 - p) * y).exp();
            });
        }
        let ymax = 42.0 / p + (nf + 1.0).ln();
        let panels = (ymax / 0.5).ceil() as usize;
        rule.visit_panels(0.0, ymax, panels, |y, gw| {
            let v = 0.5 * (-y).exp();
            let ln_f = p * a.ln() + p * v.ln() - p * (-b * v).ln_1p() + nf * (-v).ln_1p();
            acc += gw * p * ln_f.exp();
        });
        acc
    }

    /// Distribution of the `s`-thinning of `X` up to `order`.
    ///
    /// Conditioned on `U = u` with `U ~ Beta(1, p)`, `X − 1` is geometric with
    /// ratio `u`, and thinning a geometric gives a geometric. Integrating the
    /// mixing variable out after the substitution `w = ρ(u)` leaves
    ///
    /// ```text
    /// P(M = n) = ∫₀¹ κ(w) (b wⁿ + a wⁿ⁻¹) dw,   κ(w) = p aᵖ (1−w)ᵖ (a + b w)^{−1−p}
    /// ```
    ///
    /// with `a = s`, `b = 1 − s`. The integral is split at `w = ½` and each half
    /// is mapped to a logarithmic scale, which resolves both the knee at
    /// `w ≈ a` and the concentration of `wⁿ` near `w = 1`.
    pub fn thinned(&self, s: f64, order: usize) -> Thinned {
        let mut probs = vec![0.0; order + 1];
        if s <= 0.0 {
            probs[0] = 1.0;
            return Thinned { probs, at_least_one: 0.0 };
        }
        if s >= 1.0 {
            for (n, pr) in probs.iter_mut().enumerate().skip(1) {
                *pr = self.pmf_at(n as f64);
            }
            return Thinned { probs, at_least_one: 1.0 };
        }
        let (p, a, b) = (self.p, s, 1.0 - s);
        let mut moments = vec![0.0; order + 1];
        let mut accumulate = |w: f64, weight: f64| {
            let floor = weight * 1e-22;
            let mut pw = weight;
            for m in moments.iter_mut() {
                *m += pw;
                pw *= w;
                if pw <= floor {
                    break;
                }
            }
        };
        let rule = GaussLegendre::ten();
        if a >= 0.1 {
            rule.visit_panels(0.0, 0.5, 5, |w, gw| {
                let kappa = p * (p * a.ln() + p * (-w).ln_1p() - (1.0 + p) * (a + b * w).ln()).exp();
                accumulate(w, gw * kappa);
            });
        } else {
            let ymax = (b / (2.0 * a)).ln_1p();
            let panels = (ymax / 0.5).ceil().max(1.0) as usize;
            rule.visit_panels(0.0, ymax, panels, |y, gw| {
                let w = a / b * y.exp_m1();
                accumulate(w, gw * p / b * (p * (-w).ln_1p() - p * y).exp());
            });
        }
        let ymax = 42.0 / (p + 1.0);
        let panels = (ymax / 0.5).ceil() as usize;
        rule.visit_panels(0.0, ymax, panels, |y, gw| {
            let v = 0.5 * (-y).exp();
            let ln_kappa = p.ln() + p * a.ln() + (p + 1.0) * v.ln() - (1.0 + p) * (-b * v).ln_1p();
            accumulate(1.0 - v, gw * ln_kappa.exp());
        });
        probs[0] = b * moments[0];
        for n in 1..=order {
            probs[n] = b * moments[n] + a * moments[n - 1];
        }
        Thinned { probs, at_least_one: self.at_least_one(s) }
    }
}

impl DiscreteLaw for FracPowerLaw {
    fn pmf_of(&self, k: u64) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.pmf_at(k as f64)
        }
    }

    fn survival_of(&self, k: u64) -> f64 {
        self.survival_at(k.max(1) as f64)
    }
}

/// Law of the batch size `X`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BatchLaw {
    PowerLaw(FracPowerLaw),
    /// Every batch has exactly this many customers.
    Constant(u64),
}

impl BatchLaw {
    pub fn power_law(p: f64) -> Result<Self> {
        FracPowerLaw::new(p).map(BatchLaw::PowerLaw)
    }

    pub fn constant(m: u64) -> Result<Self> {
        if m == 0 {
            return Err(domain("constant batch size must be at least 1"));
        }
        Ok(BatchLaw::Constant(m))
    }

    pub fn sample_capped(&self, u: f64, cap: u64) -> Draw {
        match self {
            BatchLaw::PowerLaw(d) => d.sample_capped(u, cap),
            BatchLaw::Constant(m) if *m > cap => Draw { value: cap, capped: true },
            BatchLaw::Constant(m) => Draw { value: *m, capped: false },
        }
    }

    /// `1 − E[w^X]`.
    pub fn pgf_complement(&self, w: f64) -> f64 {
        self.complement_gap(1.0 - w.clamp(0.0, 1.0))
    }

    /// `1 − E[(1 − y)^X]`.
    pub fn complement_gap(&self, y: f64) -> f64 {
        match self {
            BatchLaw::PowerLaw(d) => d.complement_gap(y),
            BatchLaw::Constant(m) => -(*m as f64 * (-y.clamp(0.0, 1.0)).ln_1p()).exp_m1(),
        }
    }

    pub fn pgf(&self, z: f64) -> Result<f64> {
        match self {
            BatchLaw::PowerLaw(d) => d.pgf(z),
            BatchLaw::Constant(m) if (0.0..=1.0).contains(&z) => Ok(z.powf(*m as f64)),
            BatchLaw::Constant(_) => Err(domain(format!("pgf argument must lie in [0, 1], got {z}"))),
        }
    }

    pub fn thinned(&self, s: f64, order: usize) -> Thinned {
        match self {
            BatchLaw::PowerLaw(d) => d.thinned(s, order),
            BatchLaw::Constant(m) => binomial_row(*m, s, order),
        }
    }

    /// `E[X^r]` or `None` when infinite.
    pub fn moment(&self, r: f64) -> Option<f64> {
        match self {
            BatchLaw::PowerLaw(d) => d.moment(r),
            BatchLaw::Constant(m) => Some((*m as f64).powf(r)),
        }
    }

    pub fn moment_finite(&self, r: f64) -> bool {
        match self {
            BatchLaw::PowerLaw(d) => r < d.order(),
            BatchLaw::Constant(_) => true,
        }
    }

    pub fn mean_log(&self) -> f64 {
        match self {
            BatchLaw::PowerLaw(d) => d.mean_log(),
            BatchLaw::Constant(m) => (*m as f64).ln(),
        }
    }

    pub fn mean_harmonic(&self) -> f64 {
        match self {
            BatchLaw::PowerLaw(d) => d.mean_harmonic(),
            BatchLaw::Constant(m) => numerics::harmonic(*m),
        }
    }
}

impl DiscreteLaw for BatchLaw {
    fn pmf_of(&self, k: u64) -> f64 {
        match self {
            BatchLaw::PowerLaw(d) => d.pmf_of(k),
            BatchLaw::Constant(m) => f64::from(u8::from(k == *m)),
        }
    }

    fn survival_of(&self, k: u64) -> f64 {
        match self {
            BatchLaw::PowerLaw(d) => d.survival_of(k),
            BatchLaw::Constant(m) => f64::from(u8::from(k <= *m)),
        }
    }
}

fn binomial_row(m: u64, s: f64, order: usize) -> Thinned {
    let mut probs = vec![0.0; order + 1];
    let s = s.clamp(0.0, 1.0);
    if s == 0.0 {
        probs[0] = 1.0;
        return Thinned { probs, at_least_one: 0.0 };
    }
    if s == 1.0 {
        if (m as usize) <= order {
            probs[m as usize] = 1.0;
        }
        return Thinned { probs, at_least_one: 1.0 };
    }
    let log_odds = s.ln() - (-s).ln_1p();
    let mut ln_p = m as f64 * (-s).ln_1p();
    for (n, pr) in probs.iter_mut().enumerate() {
        if n as u64 > m {
            break;
        }
        *pr = ln_p.exp();
        ln_p += ((m - n as u64) as f64 / (n + 1) as f64).ln() + log_odds;
    }
    Thinned { probs, at_least_one: -(m as f64 * (-s).ln_1p()).exp_m1() }
}

/// Geometric law on `{1, 2, …}` with success probability `q`, kept as a
/// light-tailed reference for tail plots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometric {
    q: f64,
}

impl Geometric {
    pub fn new(q: f64) -> Result<Self> {
        if q > 0.0 && q <= 1.0 {
            Ok(Self { q })
        } else {
            Err(domain(format!("geometric parameter must lie in (0, 1], got {q}")))
        }
    }

    pub fn pmf(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        ((k - 1) as f64 * (-self.q).ln_1p()).exp() * self.q
    }
}

/// `π² / 6`.
pub const ZETA2: f64 = PI * PI / 6.0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::affine_compose;

    fn law(p: f64) -> FracPowerLaw {
        FracPowerLaw::new(p).unwrap()
    }

    /// Telescoping product straight from the definition.
    fn product_pmf(p: f64, k: u64) -> f64 {
        let mut prod = 1.0;
        for i in 1..k {
            prod *= i as f64 / (p + i as f64);
        }
        (1.0 - k as f64 / (p + k as f64)) * prod
    }

    #[test]
    fn pmf_examples() {
        assert!((law(1.0).pmf(1).unwrap() - 0.5).abs() < 1e-15);
        assert!((law(2.0).pmf(1).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((law(0.5).pmf(2).unwrap() - 2.0 / 15.0).abs() < 1e-15);
        assert!((product_pmf(0.5, 2) - 2.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn pmf_rejects_zero() {
        assert!(matches!(law(1.0).pmf(0), Err(crate::Error::Domain(_))));
        assert!(matches!(law(1.0).survival(0), Err(crate::Error::Domain(_))));
        assert!(FracPowerLaw::new(0.0).is_err());
        assert!(FracPowerLaw::new(-1.0).is_err());
    }

    #[test]
    fn survival_examples() {
        assert!((law(2.0).survival(3).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((law(3.0).survival(2).unwrap() - 0.25).abs() < 1e-15);
        for p in [0.1, 0.5, 1.0, 7.0] {
            assert_eq!(law(p).survival(1).unwrap(), 1.0);
        }
    }

    #[test]
    fn survival_differences_are_the_pmf() {
        for p in [0.5, 1.0, 2.0, 3.0, 0.3] {
            let d = law(p);
            for k in 1..=200u64 {
                let diff = d.survival(k).unwrap() - d.survival(k + 1).unwrap();
                let pmf = d.pmf(k).unwrap();
                assert!((diff - pmf).abs() <= 1e-12 * pmf, "p={p} k={k}");
            }
        }
    }

    #[test]
    fn product_form_matches_log_gamma_form() {
        for p in [0.5, 1.0, 2.0, 3.0, 1.7] {
            for k in [1u64, 2, 5, 30, 300, 1000] {
                let want = product_pmf(p, k);
                let got = law(p).pmf(k).unwrap();
                assert!((got - want).abs() <= 1e-12 * want, "p={p} k={k}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn survival_stays_finite_for_huge_k() {
        let d = law(0.5);
        let s = d.survival(1 << 60).unwrap();
        let asym = (numerics::ln_gamma1p(0.5) - 0.5 * ((1u64 << 60) as f64).ln()).exp();
        assert!((s - asym).abs() < 1e-9 * asym);
    }

    #[test]
    fn sample_examples() {
        let d = law(1.0);
        assert_eq!(d.sample(0.6).value, 1);
        assert_eq!(d.sample(0.4).value, 2);
        assert_eq!(d.sample(1.0 - 1e-12).value, 1);
        // survival(k+1) = 1/(k+1) ≤ u
        assert_eq!(d.sample(0.01).value, 99);
    }

    #[test]
    fn sample_is_capped_and_flagged() {
        let d = law(0.5);
        let draw = d.sample_capped(1e-12, 1000);
        assert_eq!(draw, Draw { value: 1000, capped: true });
        let draw = d.sample(1e-300);
        assert!(draw.capped && draw.value == DEFAULT_K_MAX);
        // Γ(1.5)² / u² is about 1.6e10 for u = 1e-5
        let draw = d.sample(1e-5);
        assert!(!draw.capped && draw.value > 1_000_000_000);
    }

    #[test]
    fn moment_finiteness() {
        let q = |r| MomentQuery::new(r).unwrap();
        assert!(!law(1.0).moment_finite(q(1.0)));
        assert!(law(2.0).moment_finite(q(1.0)));
        assert!(!law(0.5).moment_finite(q(0.5)));
        assert!(MomentQuery::new(0.0).is_err());
    }

    #[test]
    fn moments_match_closed_forms() {
        // E[X] = p/(p−1) for p > 1
        assert!((law(3.0).moment(1.0).unwrap() - 1.5).abs() < 1e-10);
        assert!((law(2.0).moment(1.0).unwrap() - 2.0).abs() < 1e-9);
        assert!(law(1.0).moment(1.0).is_none());
        // E[H_X] = π²/6 for p = 1
        assert!((law(1.0).mean_harmonic() - ZETA2).abs() < 1e-11);
    }

    #[test]
    fn pgf_closed_forms_match_summation() {
        for p in [0.5, 1.0, 2.0] {
            let d = law(p);
            for i in 1..10 {
                let z = i as f64 / 10.0;
                let closed = d.pgf(z).unwrap();
                let summed = d.pgf_by_summation(z);
                assert!((closed - summed).abs() < 1e-12, "p={p} z={z}: {closed} vs {summed}");
            }
        }
        assert!((law(1.0).pgf(0.5).unwrap() - (1.0 - 2f64.ln())).abs() < 1e-15);
        assert_eq!(law(0.5).pgf(0.0).unwrap(), 0.0);
        assert!(law(1.0).pgf(1.0).is_err());
        assert!(law(1.0).pgf(-0.1).is_err());
    }

    #[test]
    fn pgf_complement_near_one() {
        // for a tiny gap the complement of order 1/2 behaves like (π/2)·√gap
        let eps = 1e-14;
        let got = law(0.5).complement_gap(eps);
        assert!((got / (0.5 * PI * eps.sqrt()) - 1.0).abs() < 1e-6);
        // the quadrature route agrees with the closed forms
        for p in [0.5, 1.0, 2.0] {
            for s in [0.9, 0.3, 1e-3, 1e-9] {
                let closed = law(p).complement_gap(s);
                let quad = law(p).at_least_one(s);
                assert!((closed - quad).abs() < 1e-12 * closed, "p={p} s={s}: {closed} vs {quad}");
            }
        }
    }

    #[test]
    fn thinned_matches_direct_expansion() {
        for p in [0.5, 1.0, 2.0, 3.0, 0.8] {
            let d = law(p);
            for s in [0.999, 0.6, 0.2, 0.05] {
                let fast = d.thinned(s, 64);
                let slow = affine_compose(&d, s, 1.0 - s, 64).unwrap();
                for n in 0..=64 {
                    let (x, y) = (fast.probs[n], slow.series.coeff(n));
                    assert!((x - y).abs() < 1e-12, "p={p} s={s} n={n}: {x} vs {y}");
                }
                assert!((fast.at_least_one - (1.0 - slow.series.coeff(0))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn thinned_total_mass_is_one() {
        for p in [0.5, 2.0] {
            for s in [0.5, 1e-4, 1e-12] {
                let t = law(p).thinned(s, 4000);
                let total: f64 = t.probs.iter().sum();
                // the mass beyond 4000 is tiny for these cases
                assert!(total <= 1.0 + 1e-12);
                assert!(1.0 - total < 2e-2 * s.powf(p.min(1.0)) + 1e-12, "p={p} s={s} total={total}");
                assert!((1.0 - t.probs[0] - t.at_least_one).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn thinned_small_s_asymptotics() {
        // P(M = n) ≈ p Γ(p+1) Γ(n−p)/n! · s^p for s → 0 and n > p
        let p = 0.5;
        let s = 1e-10;
        let t = law(p).thinned(s, 5);
        for n in 1..=5u32 {
            let lg = statrs::function::gamma::ln_gamma;
            let c = p * (lg(p + 1.0) + lg(n as f64 - p) - lg(n as f64 + 1.0)).exp();
            let want = c * s.powf(p);
            assert!((t.probs[n as usize] / want - 1.0).abs() < 1e-4, "n={n}");
        }
    }

    #[test]
    fn binomial_thinning_of_constant_batches() {
        let t = BatchLaw::Constant(3).thinned(0.5, 5);
        let want = [0.125, 0.375, 0.375, 0.125, 0.0, 0.0];
        for (g, w) in t.probs.iter().zip(want) {
            assert!((g - w).abs() < 1e-15);
        }
        assert!((t.at_least_one - 0.875).abs() < 1e-15);
    }

    #[test]
    fn geometric_reference() {
        let g = Geometric::new(0.1).unwrap();
        assert!((g.pmf(1) - 0.1).abs() < 1e-16);
        assert!((g.pmf(3) - 0.081).abs() < 1e-15);
    }
}
