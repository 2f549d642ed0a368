//! Special functions, quadrature and lattice-sum machinery shared by the
//! distribution, series and stability code.

use std::sync::OnceLock;

/// Below this argument the log-gamma difference is shifted upward by recurrence
/// before the Stirling series is applied.
const STIRLING_MIN: f64 = 16.0;

/// `ln Γ(x + p) − ln Γ(x)` for `x > 0`, `p ≥ 0`.
///
/// The difference is formed directly from the Stirling expansion so that it
/// keeps full relative precision for `x` as large as `1e18`, where subtracting
/// two separately computed log-gamma values would cancel catastrophically.
pub fn ln_gamma_ratio(x: f64, p: f64) -> f64 {
    debug_assert!(x > 0.0 && p >= 0.0);
    if p == 0.0 {
        return 0.0;
    }
    let mut x = x;
    let mut shift = 0.0;
    while x < STIRLING_MIN {
        // D(x) = D(x + 1) − ln(1 + p/x)
        shift -= (p / x).ln_1p();
        x += 1.0;
    }
    let y = x + p;
    (x - 0.5) * (p / x).ln_1p() + p * y.ln() - p + stirling_tail(y) - stirling_tail(x) + shift
}

/// `ln Γ(1 + p)`.
pub fn ln_gamma1p(p: f64) -> f64 {
    ln_gamma_ratio(1.0, p)
}

/// Correction term of the Stirling series, valid for `x ≥ 16`.
fn stirling_tail(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0
        + r2 * (-1.0 / 360.0
            + r2 * (1.0 / 1260.0 + r2 * (-1.0 / 1680.0 + r2 * (1.0 / 1188.0 + r2 * (-691.0 / 360360.0))))))
}

/// The harmonic number `H_n = Σ_{i=1}^{n} 1/i`.
pub fn harmonic(n: u64) -> f64 {
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    if n < 64 {
        return (1..=n).rev().map(|i| 1.0 / i as f64).sum();
    }
    let x = n as f64;
    let r2 = 1.0 / (x * x);
    x.ln() + EULER_GAMMA + 0.5 / x - r2 * (1.0 / 12.0 - r2 * (1.0 / 120.0 - r2 / 252.0))
}

/// Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut deriv = 0.0;
            for _ in 0..100 {
                let (p, dp) = legendre(n, x);
                deriv = dp;
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            if dp != 0.0 {
                deriv = dp;
            }
            let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// The 10-point rule used throughout the crate.
    pub fn ten() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(10))
    }

    /// Calls `visit(x, w)` for every node of `panels` equal panels covering `[a, b]`.
    pub fn visit_panels(&self, a: f64, b: f64, panels: usize, mut visit: impl FnMut(f64, f64)) {
        let width = (b - a) / panels as f64;
        for k in 0..panels {
            let lo = a + width * k as f64;
            let mid = lo + 0.5 * width;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                visit(mid + 0.5 * width * x, 0.5 * width * w);
            }
        }
    }

    pub fn integrate(&self, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        self.visit_panels(a, b, panels, |x, w| acc += w * f(x));
        acc
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let j = j as f64;
        let p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Number of lattice points summed explicitly before the remainder is
/// replaced by its midpoint Euler-Maclaurin integral.
pub const DIRECT_TERMS: u64 = 128;

/// Width (in `ln x`) of the quadrature panels used for lattice remainders.
const TAIL_PANEL: f64 = 1.0;
/// Largest `ln(x / x0)` reached before the remainder is extrapolated.
const TAIL_SPAN: f64 = 80.0;

/// Result of summing a smooth function over an integer lattice.
#[derive(Debug, Clone)]
pub struct LatticeSum {
    pub value: Vec<f64>,
    /// Terms that were added one by one (the rest came from the integral).
    pub direct_terms: u64,
    /// True when the infinite remainder had to be extrapolated geometrically
    /// past the quadrature span.
    pub extrapolated: bool,
    /// True when the remainder did not decay at all over the quadrature span.
    pub divergent: bool,
}

/// Sums `f(j)` over `j = first ..= last` (or to infinity when `last` is `None`).
///
/// `f` must be smooth in `x` for `x ≥ first + DIRECT_TERMS`, where the sum is
/// continued by the midpoint Euler-Maclaurin formula: the integral over
/// `[K+½, L+½]` plus `f'/24 − 7f'''/5760` differenced between the two ends. The
/// integral runs on `ln x` so power-law remainders become exponentials.
pub fn lattice_sum<F>(dim: usize, first: u64, last: Option<u64>, f: F) -> LatticeSum
where
    F: Fn(f64) -> Vec<f64>,
{
    let mut value = vec![0.0; dim];
    let k_end = first + DIRECT_TERMS - 1;
    let direct_end = match last {
        Some(l) if l <= k_end => l,
        _ => k_end,
    };
    if let Some(l) = last {
        if l < first {
            return LatticeSum { value, direct_terms: 0, extrapolated: false, divergent: false };
        }
    }
    for j in (first..=direct_end).rev() {
        for (v, t) in value.iter_mut().zip(&f(j as f64)) {
            *v += t;
        }
    }
    let direct_terms = direct_end - first + 1;
    if last == Some(direct_end) {
        return LatticeSum { value, direct_terms, extrapolated: false, divergent: false };
    }

    let x0 = k_end as f64 + 0.5;
    let (d1, d3) = end_derivatives(&f, x0);
    for i in 0..dim {
        value[i] += d1[i] / 24.0 - 7.0 * d3[i] / 5760.0;
    }

    let rule = GaussLegendre::ten();
    let mut extrapolated = false;
    let mut divergent = false;
    match last {
        Some(l) => {
            let x1 = l as f64 + 0.5;
            let span = (x1 / x0).ln();
            let panels = (span / TAIL_PANEL).ceil().max(1.0) as usize;
            rule.visit_panels(0.0, span, panels, |tau, w| {
                let x = x0 * tau.exp();
                let fx = f(x);
                for (v, t) in value.iter_mut().zip(&fx) {
                    *v += w * x * t;
                }
            });
            let (d1, d3) = end_derivatives(&f, x1);
            for i in 0..dim {
                value[i] -= d1[i] / 24.0 - 7.0 * d3[i] / 5760.0;
            }
        }
        None => {
            let mut integral = vec![0.0; dim];
            let mut prev: Option<Vec<f64>> = None;
            let mut quiet = 0;
            let mut tau = 0.0;
            loop {
                let mut panel = vec![0.0; dim];
                rule.visit_panels(tau, tau + TAIL_PANEL, 1, |t, w| {
                    let x = x0 * t.exp();
                    for (p, v) in panel.iter_mut().zip(&f(x)) {
                        *p += w * x * v;
                    }
                });
                tau += TAIL_PANEL;
                for (acc, p) in integral.iter_mut().zip(&panel) {
                    *acc += p;
                }
                let scale = value
                    .iter()
                    .zip(&integral)
                    .map(|(a, b)| (a + b).abs())
                    .fold(0.0, f64::max)
                    .max(1e-300);
                let size = panel.iter().map(|p| p.abs()).fold(0.0, f64::max);
                if size <= 1e-17 * scale {
                    quiet += 1;
                    if quiet >= 2 {
                        break;
                    }
                } else {
                    quiet = 0;
                }
                if tau >= TAIL_SPAN {
                    // geometric continuation of the equal-width panel sequence
                    let before = prev.unwrap_or_else(|| vec![0.0; dim]);
                    for i in 0..dim {
                        let r = panel[i] / before[i];
                        if r.is_finite() && r > 0.0 && r < 0.98 {
                            integral[i] += panel[i] * r / (1.0 - r);
                            extrapolated = true;
                        } else if panel[i].abs() > 1e-12 * scale {
                            divergent = true;
                        }
                    }
                    break;
                }
                prev = Some(panel);
            }
            for (v, i) in value.iter_mut().zip(&integral) {
                *v += i;
            }
        }
    }
    LatticeSum { value, direct_terms, extrapolated, divergent }
}

/// First and third derivatives at `x` from the values at `x ± ½` and `x ± 3/2`.
fn end_derivatives<F>(f: &F, x: f64) -> (Vec<f64>, Vec<f64>)
where
    F: Fn(f64) -> Vec<f64>,
{
    let (a, b, c, d) = (f(x - 1.5), f(x - 0.5), f(x + 0.5), f(x + 1.5));
    let d1 = (0..a.len()).map(|i| (a[i] - 27.0 * b[i] + 27.0 * c[i] - d[i]) / 24.0).collect();
    let d3 = (0..a.len()).map(|i| d[i] - 3.0 * c[i] + 3.0 * b[i] - a[i]).collect();
    (d1, d3)
}

/// Scalar convenience wrapper around [`lattice_sum`].
pub fn lattice_sum_scalar(first: u64, last: Option<u64>, f: impl Fn(f64) -> f64) -> (f64, LatticeSum) {
    let s = lattice_sum(1, first, last, |x| vec![f(x)]);
    (s.value[0], s)
}

/// Least-squares fit of `y = a + b x`; returns `(a, b, rms residual)`.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rms = (points.iter().map(|p| (p.1 - a - b * p.0).powi(2)).sum::<f64>() / n).sqrt();
    (a, b, rms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn ln_gamma_ratio_matches_known_values() {
        // Γ(1.5) = √π / 2
        assert!((ln_gamma1p(0.5) - (PI.sqrt() / 2.0).ln()).abs() < 1e-15);
        // Γ(4) = 6
        assert!((ln_gamma1p(3.0) - 6f64.ln()).abs() < 1e-14);
        // Γ(k + 1) / Γ(k) = k
        for k in [1.0, 7.5, 16.0, 1e3, 1e9, 1e17] {
            let got = ln_gamma_ratio(k, 1.0);
            assert!((got - f64::ln(k)).abs() <= 1e-15 * f64::ln(k).abs().max(1.0), "k={k}");
        }
    }

    #[test]
    fn ln_gamma_ratio_agrees_with_lanczos_oracle() {
        for &x in &[0.3, 1.0, 2.5, 15.9, 16.0, 40.0, 900.0] {
            for &p in &[0.5, 1.0, 2.0, 3.3] {
                let oracle = statrs::function::gamma::ln_gamma(x + p) - statrs::function::gamma::ln_gamma(x);
                let got = ln_gamma_ratio(x, p);
                assert!((got - oracle).abs() < 1e-12 * oracle.abs().max(1.0), "x={x} p={p}: {got} vs {oracle}");
            }
        }
    }

    #[test]
    fn harmonic_numbers() {
        assert_eq!(harmonic(0), 0.0);
        assert!((harmonic(4) - 25.0 / 12.0).abs() < 1e-15);
        let direct: f64 = (1..=1000u64).rev().map(|i| 1.0 / i as f64).sum();
        assert!((harmonic(1000) - direct).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussLegendre::ten();
        let got = rule.integrate(0.0, 2.0, 1, |x| x.powi(19));
        assert!((got - 2f64.powi(20) / 20.0).abs() < 1e-9);
        let got = rule.integrate(0.0, PI, 4, f64::sin);
        assert!((got - 2.0).abs() < 1e-14);
    }

    #[test]
    fn lattice_sum_recovers_zeta_values() {
        let (z2, _) = lattice_sum_scalar(1, None, |x| 1.0 / (x * x));
        assert!((z2 - PI * PI / 6.0).abs() < 1e-12, "{z2}");
        // ζ(3/2) converges slowly: the remainder at K = 128 is still ~0.18
        let (z32, info) = lattice_sum_scalar(1, None, |x| x.powf(-1.5));
        assert!((z32 - 2.612_375_348_685_488).abs() < 1e-10, "{z32}");
        assert!(!info.divergent);
    }

    #[test]
    fn finite_lattice_sum_matches_brute_force() {
        let f = |x: f64| (x.ln() + 1.0) / (x * x);
        let brute: f64 = (1..=10_000u64).rev().map(|j| f(j as f64)).sum();
        let (got, _) = lattice_sum_scalar(1, Some(10_000), f);
        assert!((got - brute).abs() < 1e-11, "{got} vs {brute}");
        let short: f64 = (3..=50u64).map(|j| f(j as f64)).sum();
        assert!((lattice_sum_scalar(3, Some(50), f).0 - short).abs() < 1e-15);
    }

    #[test]
    fn harmonic_series_is_flagged_divergent() {
        let (_, info) = lattice_sum_scalar(1, None, |x| 1.0 / x);
        assert!(info.divergent);
    }

    #[test]
    fn linear_fit_exact_line() {
        let pts: Vec<_> = (0..5).map(|i| (i as f64, 2.0 + 0.5 * i as f64)).collect();
        let (a, b, r) = linear_fit(&pts);
        assert!((a - 2.0).abs() < 1e-14 && (b - 0.5).abs() < 1e-14 && r < 1e-14);
    }
}
