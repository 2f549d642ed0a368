//! Stationary and transient queue-length distributions of the M^X/G/∞ queue.
//!
//! Every pgf here has the form `E[z^L] = exp(−λ I(z))` with
//!
//! ```text
//! I(z) = ∫₀ᵗ (1 − E[z^{M(σ)}]) dσ,
//! ```
//!
//! where `M(σ)` counts the customers of one batch still present `σ` after its
//! arrival (`t = ∞` for the stationary law). With independent sojourns `M(σ)`
//! is the thinning of `X` with keep probability `P(S > σ)`, so the whole
//! computation reduces to the thinning kernel of [`crate::dist`] plus
//! [`TruncatedSeries::exp_series`].
//!
//! Discrete sojourns use `P(S > σ) = P(S ≥ ⌊σ⌋ + 1)`, which turns the integral
//! into a sum over `j ≥ 1` of the terms at keep probability `P(S ≥ j)`.

use std::f64::consts::PI;

use crate::dist::{BatchLaw, ExpSojourn, FracPowerLaw, ZETA2};
use crate::error::{domain, Error, Result};
use crate::numerics::{self, GaussLegendre};
use crate::series::TruncatedSeries;
use crate::stability;

/// Default truncation order of queue-length series.
pub const DEFAULT_ORDER: usize = 512;

/// Coefficients below this are treated as an error rather than round-off.
const NEGATIVE_SLACK: f64 = 1e-8;

/// Sojourn-time law of a single customer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SojournModel {
    Exponential(ExpSojourn),
    /// Integer-valued sojourn with fractional power-law order `q`.
    PowerLaw(FracPowerLaw),
    /// Every customer stays exactly this long.
    Deterministic(f64),
}

impl SojournModel {
    pub fn exponential(mu: f64) -> Result<Self> {
        ExpSojourn::new(mu).map(SojournModel::Exponential)
    }

    pub fn power_law(q: f64) -> Result<Self> {
        FracPowerLaw::new(q).map(SojournModel::PowerLaw)
    }

    pub fn deterministic(d: f64) -> Result<Self> {
        if d > 0.0 && d.is_finite() {
            Ok(SojournModel::Deterministic(d))
        } else {
            Err(domain(format!("deterministic sojourn must be positive, got {d}")))
        }
    }

    /// `P(S > t)`.
    pub fn survival(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 1.0;
        }
        match self {
            SojournModel::Exponential(e) => e.survival(t),
            SojournModel::PowerLaw(q) => q.survival_at(t.floor() + 1.0),
            SojournModel::Deterministic(d) => f64::from(u8::from(t < *d)),
        }
    }

    /// `E[S^r]`, or `None` when infinite.
    pub fn moment(&self, r: f64) -> Option<f64> {
        match self {
            SojournModel::Exponential(e) => Some(e.moment(r)),
            SojournModel::PowerLaw(q) => q.moment(r),
            SojournModel::Deterministic(d) => Some(d.powf(r)),
        }
    }

    pub fn moment_finite(&self, r: f64) -> bool {
        match self {
            SojournModel::PowerLaw(q) => r < q.order(),
            _ => true,
        }
    }

    /// Inverse-CDF draw: the smallest `t` with `P(S > t) ≤ u`, for `u ∈ (0, 1]`.
    pub fn quantile_upper(&self, u: f64) -> f64 {
        match self {
            SojournModel::Exponential(e) => -u.ln() / e.rate(),
            SojournModel::PowerLaw(q) => q.sample(u).value as f64,
            SojournModel::Deterministic(d) => *d,
        }
    }
}

/// Poisson batch arrivals with rate `lambda`, i.i.d. batch sizes and i.i.d.
/// sojourn times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalSpec {
    pub lambda: f64,
    pub batch: BatchLaw,
    pub sojourn: SojournModel,
}

impl ArrivalSpec {
    /// `lambda = 0` is accepted and describes an empty system.
    pub fn new(lambda: f64, batch: BatchLaw, sojourn: SojournModel) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(domain(format!("arrival rate must be nonnegative, got {lambda}")));
        }
        Ok(Self { lambda, batch, sojourn })
    }

    /// Power-law batches of order `p` with power-law sojourns of order `q`.
    pub fn pq(lambda: f64, p: f64, q: f64) -> Result<Self> {
        Self::new(lambda, BatchLaw::power_law(p)?, SojournModel::power_law(q)?)
    }
}

/// Queue-length distribution truncated at `probs.len() − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueDistribution {
    /// `P(L = n)`.
    pub probs: Vec<f64>,
    /// Mass beyond the last index.
    pub deficit: f64,
    /// `None` for the stationary law.
    pub time: Option<f64>,
    /// Standard errors for empirical distributions.
    pub se: Option<Vec<f64>>,
}

impl QueueDistribution {
    pub fn prob(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    /// `P(L ≤ m)`.
    pub fn cdf(&self, m: usize) -> f64 {
        self.probs.iter().take(m + 1).sum()
    }

    /// Total variation distance after lumping everything above `n_max` into
    /// one cell.
    pub fn tv_distance(&self, other: &QueueDistribution, n_max: usize) -> f64 {
        let mut head = 0.0;
        for n in 0..=n_max {
            head += (self.prob(n) - other.prob(n)).abs();
        }
        let tail = (1.0 - self.cdf(n_max)) - (1.0 - other.cdf(n_max));
        0.5 * (head + tail.abs())
    }
}

/// Reinterprets pgf coefficients as probabilities.
pub fn extract_distribution(pgf: &TruncatedSeries) -> Result<QueueDistribution> {
    let coeffs = pgf.coeffs();
    if let Some((n, c)) = coeffs.iter().enumerate().find(|(_, c)| **c < -NEGATIVE_SLACK) {
        return Err(Error::Numerical(format!(
            "coefficient {n} is {c:e}; the truncation order is too low or the spec is unstable"
        )));
    }
    if coeffs.iter().all(|c| *c == 0.0) {
        return Err(Error::Numerical("all coefficients vanish; not the pgf of a proper distribution".into()));
    }
    let probs: Vec<f64> = coeffs.iter().map(|c| c.max(0.0)).collect();
    let deficit = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    Ok(QueueDistribution { probs, deficit, time: None, se: None })
}

/// Series of `I(z)` over `[0, t]`, or over `[0, ∞)` when `horizon` is `None`.
pub fn exponent_series(spec: &ArrivalSpec, horizon: Option<f64>, order: usize) -> Result<TruncatedSeries> {
    let batch = spec.batch;
    let coeffs = match spec.sojourn {
        SojournModel::Deterministic(d) => {
            let span = horizon.map_or(d, |t| t.min(d));
            let mut c = batch.thinned(1.0, order).probs;
            c[0] = -1.0;
            c.iter().map(|x| -x * span).collect()
        }
        SojournModel::Exponential(e) => match horizon {
            None => exponential_stationary(&batch, e.rate(), order),
            Some(t) => exponential_transient(&batch, e.rate(), t, order),
        },
        SojournModel::PowerLaw(q) => {
            let term = |x: f64| thinned_term(&batch, q.survival_at(x), order);
            match horizon {
                None => {
                    let sum = numerics::lattice_sum(order + 1, 1, None, term);
                    if sum.divergent {
                        return Err(Error::Numerical("the sum over sojourn lengths does not converge".into()));
                    }
                    sum.value
                }
                Some(t) => {
                    let whole = t.floor();
                    let mut acc = if whole >= 1.0 {
                        numerics::lattice_sum(order + 1, 1, Some(whole as u64), term).value
                    } else {
                        vec![0.0; order + 1]
                    };
                    let frac = t - whole;
                    if frac > 0.0 {
                        for (a, v) in acc.iter_mut().zip(term(whole + 1.0)) {
                            *a += frac * v;
                        }
                    }
                    acc
                }
            }
        }
    };
    TruncatedSeries::new(coeffs)
}

/// `[P(M ≥ 1), −P(M = 1), …, −P(M = N)]` for keep probability `s`.
fn thinned_term(batch: &BatchLaw, s: f64, order: usize) -> Vec<f64> {
    let t = batch.thinned(s, order);
    let mut out: Vec<f64> = t.probs.iter().map(|p| -p).collect();
    out[0] = t.at_least_one;
    out
}

/// `(1/μ) Σ_{n≥1} P(X ≥ n)(1 − zⁿ)/n`.
fn exponential_stationary(batch: &BatchLaw, mu: f64, order: usize) -> Vec<f64> {
    let mut c = vec![0.0; order + 1];
    c[0] = batch.mean_harmonic() / mu;
    for (n, cn) in c.iter_mut().enumerate().skip(1) {
        *cn = -batch_survival(batch, n as u64) / (n as f64 * mu);
    }
    c
}

fn batch_survival(batch: &BatchLaw, n: u64) -> f64 {
    use crate::dist::DiscreteLaw;
    batch.survival_of(n)
}

/// Gauss-Legendre nodes on `σ ∈ [0, min(t, cap)]` for the exponential
/// transient integral. Beyond `cap` the keep probability `e^{−μσ}` is so small
/// that the integrand is below `1e-19`.
fn exponential_nodes(batch: &BatchLaw, mu: f64, t: f64) -> Vec<(f64, f64)> {
    let tail_order = match batch {
        BatchLaw::PowerLaw(d) => d.order().min(1.0),
        BatchLaw::Constant(_) => 1.0,
    };
    let end = t.min(45.0 / (mu * tail_order));
    let rule = GaussLegendre::ten();
    let scalar = |panels: usize| rule.integrate(0.0, end, panels, |x| batch.complement_gap((-mu * x).exp()));
    let mut panels = ((end * mu) / 0.5).ceil().max(1.0) as usize;
    let mut prev = scalar(panels);
    for _ in 0..6 {
        let next = scalar(2 * panels);
        if (next - prev).abs() <= 1e-13 * next.abs().max(1e-300) {
            break;
        }
        panels *= 2;
        prev = next;
    }
    let mut nodes = Vec::with_capacity(panels * 10);
    rule.visit_panels(0.0, end, panels, |x, w| nodes.push((x, w)));
    nodes
}

fn exponential_transient(batch: &BatchLaw, mu: f64, t: f64, order: usize) -> Vec<f64> {
    let mut acc = vec![0.0; order + 1];
    for (x, w) in exponential_nodes(batch, mu, t) {
        for (a, v) in acc.iter_mut().zip(thinned_term(batch, (-mu * x).exp(), order)) {
            *a += w * v;
        }
    }
    acc
}

/// Series of `E[z^L]` for the stationary queue length.
///
/// Refuses with [`Error::Diverges`] when the expected maximum sojourn of a
/// batch is infinite, which for Poisson batch arrivals is exactly when no
/// stationary distribution exists.
pub fn stationary_pgf(spec: &ArrivalSpec, order: usize) -> Result<TruncatedSeries> {
    if spec.lambda == 0.0 {
        return Ok(TruncatedSeries::constant(1.0, order));
    }
    let esx = stability::esx_estimate(&spec.batch, &spec.sojourn);
    if let Some(evidence) = esx.evidence {
        return Err(Error::Diverges(Box::new(evidence)));
    }
    let exponent = exponent_series(spec, None, order)?;
    Ok(exponent.scale(-spec.lambda).exp_series())
}

/// Series of `E[z^{L(t)}]` for a system that starts empty at time 0.
pub fn transient_pgf(spec: &ArrivalSpec, t: f64, order: usize) -> Result<TruncatedSeries> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(domain(format!("time must be nonnegative and finite, got {t}")));
    }
    if spec.lambda == 0.0 || t == 0.0 {
        return Ok(TruncatedSeries::constant(1.0, order));
    }
    let exponent = exponent_series(spec, Some(t), order)?;
    Ok(exponent.scale(-spec.lambda).exp_series())
}

pub fn stationary_distribution(spec: &ArrivalSpec, order: usize) -> Result<QueueDistribution> {
    extract_distribution(&stationary_pgf(spec, order)?)
}

pub fn transient_distribution(spec: &ArrivalSpec, t: f64, order: usize) -> Result<QueueDistribution> {
    let mut d = extract_distribution(&transient_pgf(spec, t, order)?)?;
    d.time = Some(t);
    Ok(d)
}

/// Scalar `I(z)` from the closed-form batch pgf complements, independent of
/// the series kernel.
fn exponent_scalar(spec: &ArrivalSpec, horizon: Option<f64>, z: f64) -> f64 {
    let batch = spec.batch;
    let gap = 1.0 - z;
    match spec.sojourn {
        SojournModel::Deterministic(d) => horizon.map_or(d, |t| t.min(d)) * batch.complement_gap(gap),
        SojournModel::Exponential(e) => {
            let mu = e.rate();
            match horizon {
                None => match batch {
                    BatchLaw::PowerLaw(x) => {
                        numerics::lattice_sum_scalar(1, None, |n| x.survival_at(n) * -(n * z.ln()).exp_m1() / n).0 / mu
                    }
                    BatchLaw::Constant(m) => (1..=m).map(|n| (1.0 - z.powi(n as i32)) / n as f64).sum::<f64>() / mu,
                },
                Some(t) => exponential_nodes(&batch, mu, t)
                    .into_iter()
                    .map(|(x, w)| w * batch.complement_gap(gap * (-mu * x).exp()))
                    .sum(),
            }
        }
        SojournModel::PowerLaw(q) => {
            let f = |x: f64| batch.complement_gap(gap * q.survival_at(x));
            match horizon {
                None => numerics::lattice_sum_scalar(1, None, f).0,
                Some(t) => {
                    let whole = t.floor();
                    let head = if whole >= 1.0 { numerics::lattice_sum_scalar(1, Some(whole as u64), f).0 } else { 0.0 };
                    head + (t - whole) * f(whole + 1.0)
                }
            }
        }
    }
}

/// `E[z^L]` at a single point, through scalar sums and closed forms.
pub fn stationary_pgf_at(spec: &ArrivalSpec, z: f64) -> Result<f64> {
    check_unit(z)?;
    if spec.lambda == 0.0 || z == 1.0 {
        return Ok(1.0);
    }
    let esx = stability::esx_estimate(&spec.batch, &spec.sojourn);
    if let Some(evidence) = esx.evidence {
        return Err(Error::Diverges(Box::new(evidence)));
    }
    Ok((-spec.lambda * exponent_scalar(spec, None, z)).exp())
}

/// `E[z^{L(t)}]` at a single point.
pub fn transient_pgf_at(spec: &ArrivalSpec, t: f64, z: f64) -> Result<f64> {
    check_unit(z)?;
    if spec.lambda == 0.0 || z == 1.0 || t <= 0.0 {
        return Ok(1.0);
    }
    Ok((-spec.lambda * exponent_scalar(spec, Some(t), z)).exp())
}

fn check_unit(z: f64) -> Result<()> {
    if (0.0..=1.0).contains(&z) {
        Ok(())
    } else {
        Err(domain(format!("pgf argument must lie in [0, 1], got {z}")))
    }
}

/// The dilogarithm `Li₂(z) = Σ zⁿ/n²` on `[0, 1]`.
pub fn dilog(z: f64) -> f64 {
    if z <= 0.0 {
        return 0.0;
    }
    if z >= 1.0 {
        return ZETA2;
    }
    if z > 0.5 {
        return ZETA2 - z.ln() * (-z).ln_1p() - dilog(1.0 - z);
    }
    let mut acc = 0.0f64;
    let mut zn = z;
    let mut n = 1.0;
    while zn > 1e-18 * acc.max(1e-300) {
        acc += zn / (n * n);
        n += 1.0;
        zn *= z;
    }
    acc
}

/// Exponential sojourns with batch order 1: `exp(−ρ Σ (1 − zⁿ)/n²)`.
pub fn battle1_pgf_scalar(z: f64, rho: f64) -> f64 {
    (-rho * (ZETA2 - dilog(z))).exp()
}

const BRUTE_TERMS: u64 = 1 << 20;

/// Batch order 1, sojourn order 2:
/// `exp(−λ Σ_k ((1 − α_k)/α_k) (−ln(1 − α_k)))` with `α_k = 1 − 2(1−z)/(k(k+1))`.
///
/// Summed term by term up to `2^20` plus the leading asymptotic remainder.
pub fn battle2_pgf_scalar(z: f64, lambda: f64) -> f64 {
    if lambda == 0.0 || z >= 1.0 {
        return 1.0;
    }
    let w = 1.0 - z;
    let mut acc = 0.0;
    for k in (1..=BRUTE_TERMS).rev() {
        let kf = k as f64;
        let y = 2.0 * w / (kf * (kf + 1.0));
        let alpha = 1.0 - y;
        acc += if alpha <= 0.0 { 1.0 } else { y / alpha * -y.ln() };
    }
    let x = BRUTE_TERMS as f64 + 0.5;
    acc += 2.0 * w * (2.0 * x.ln() + 2.0 - (2.0 * w).ln()) / x;
    (-lambda * acc).exp()
}

/// Batch order 1/2, sojourn order 3:
/// `exp(−λ Σ_k ((1 − α_k)/α_k)^{1/2} arcsin √α_k)` with
/// `α_k = 1 − 6(1−z)/(k(k+1)(k+2))`.
pub fn battle4_pgf_scalar(z: f64, lambda: f64) -> f64 {
    if lambda == 0.0 || z >= 1.0 {
        return 1.0;
    }
    let w = 1.0 - z;
    let mut acc = 0.0;
    for k in (1..=BRUTE_TERMS).rev() {
        let kf = k as f64;
        let y = 6.0 * w / (kf * (kf + 1.0) * (kf + 2.0));
        let alpha = 1.0 - y;
        acc += if alpha <= 0.0 { 1.0 } else { (y / alpha).sqrt() * alpha.sqrt().asin() };
    }
    let x = BRUTE_TERMS as f64 + 0.5;
    acc += 0.5 * PI * (6.0 * w).sqrt() * (2.0 / x.sqrt() - x.powf(-1.5));
    (-lambda * acc).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn battle1() -> ArrivalSpec {
        ArrivalSpec::new(1.0, BatchLaw::power_law(1.0).unwrap(), SojournModel::exponential(1.0).unwrap()).unwrap()
    }

    #[test]
    fn dilog_values() {
        assert!((dilog(0.5) - (PI * PI / 12.0 - 0.5 * 2f64.ln().powi(2))).abs() < 1e-15);
        assert!((dilog(1.0) - ZETA2).abs() < 1e-16);
        let direct: f64 = (1..200_000).map(|n| 0.9f64.powi(n) / (n as f64).powi(2)).sum();
        assert!((dilog(0.9) - direct).abs() < 1e-14);
    }

    #[test]
    fn battle1_constant_and_first_terms() {
        let pgf = stationary_pgf(&battle1(), 64).unwrap();
        let c0 = (-ZETA2).exp();
        assert!((pgf.coeff(0) - c0).abs() < 1e-12);
        // P(L = 1) = ρ P(X ≥ 1) c₀
        assert!((pgf.coeff(1) - c0).abs() < 1e-12);
        // P(L = 2) = c₀ (ρ/4 + ρ²/2)
        assert!((pgf.coeff(2) - c0 * 0.75).abs() < 1e-12);
    }

    #[test]
    fn series_and_scalar_routes_agree() {
        let specs = [
            battle1(),
            ArrivalSpec::pq(1.0, 1.0, 2.0).unwrap(),
            ArrivalSpec::pq(0.7, 0.5, 3.0).unwrap(),
            ArrivalSpec::pq(1.3, 2.0, 1.5).unwrap(),
        ];
        for spec in specs {
            let pgf = stationary_pgf(&spec, 512).unwrap();
            for z in [0.2, 0.5, 0.8] {
                let a = pgf.eval(z);
                let b = stationary_pgf_at(&spec, z).unwrap();
                assert!((a - b).abs() < 1e-7, "{spec:?} z={z}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn scalar_oracles_match_series() {
        let b2 = stationary_pgf(&ArrivalSpec::pq(1.0, 1.0, 2.0).unwrap(), 512).unwrap();
        let b4 = stationary_pgf(&ArrivalSpec::pq(1.0, 0.5, 3.0).unwrap(), 512).unwrap();
        for z in [0.2, 0.5, 0.8] {
            assert!((b2.eval(z) - battle2_pgf_scalar(z, 1.0)).abs() < 1e-6);
            assert!((b4.eval(z) - battle4_pgf_scalar(z, 1.0)).abs() < 1e-6);
            assert!((stationary_pgf(&battle1(), 512).unwrap().eval(z) - battle1_pgf_scalar(z, 1.0)).abs() < 1e-9);
        }
        assert_eq!(battle4_pgf_scalar(0.3, 0.0), 1.0);
        assert!((battle4_pgf_scalar(1.0 - 1e-12, 1.0) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn transient_converges_to_stationary_for_exponential_sojourns() {
        let spec = battle1();
        let stat = stationary_pgf(&spec, 128).unwrap();
        let tr = transient_pgf(&spec, 50.0, 128).unwrap();
        let gap = stat.coeffs().iter().zip(tr.coeffs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-12, "{gap}");
        // transient scalar route
        for z in [0.2, 0.8] {
            assert!((tr.eval(z) - transient_pgf_at(&spec, 50.0, z).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn heavy_tailed_sojourns_converge_slowly() {
        // Max coefficient gap to the stationary law; reaches 1e-3 only well past t = 50.
        for (p, q, settled) in [(1.0, 2.0, 5_000.0), (0.5, 3.0, 50_000.0)] {
            let spec = ArrivalSpec::pq(1.0, p, q).unwrap();
            let stat = stationary_pgf(&spec, 128).unwrap();
            let gap = |t: f64| {
                let tr = transient_pgf(&spec, t, 128).unwrap();
                stat.coeffs().iter().zip(tr.coeffs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            };
            let (early, late) = (gap(50.0), gap(settled));
            assert!(early > 1e-2 && late < 1e-3, "({p},{q}): {early:e} at t=50, {late:e} at t={settled}");
        }
    }

    #[test]
    fn transient_zero_occupancy_decreases() {
        let spec = ArrivalSpec::pq(1.0, 1.0, 2.0).unwrap();
        let stat = stationary_pgf(&spec, 64).unwrap().coeff(0);
        let mut prev = 1.0;
        for t in [0.5, 1.0, 2.5, 5.0, 20.0, 50.0, 500.0] {
            let c0 = transient_pgf(&spec, t, 64).unwrap().coeff(0);
            assert!(c0 < prev && c0 > stat, "t={t}");
            prev = c0;
        }
        assert_eq!(transient_pgf(&spec, 0.0, 8).unwrap(), TruncatedSeries::constant(1.0, 8));
    }

    #[test]
    fn transient_discrete_matches_scalar() {
        let spec = ArrivalSpec::pq(1.0, 0.5, 2.0).unwrap();
        for t in [3.0, 7.5, 300.0] {
            let s = transient_pgf(&spec, t, 512).unwrap();
            for z in [0.2, 0.5] {
                let want = transient_pgf_at(&spec, t, z).unwrap();
                assert!((s.eval(z) - want).abs() < 1e-7, "t={t} z={z}");
            }
        }
    }

    #[test]
    fn deterministic_sojourn_with_unit_batches_is_poisson() {
        let spec =
            ArrivalSpec::new(2.0, BatchLaw::constant(1).unwrap(), SojournModel::deterministic(1.5).unwrap()).unwrap();
        let d = stationary_distribution(&spec, 40).unwrap();
        let mean = 3.0f64;
        let mut pn = (-mean).exp();
        for n in 0..40 {
            assert!((d.prob(n) - pn).abs() < 1e-14);
            pn *= mean / (n + 1) as f64;
        }
    }

    #[test]
    fn unstable_spec_is_refused() {
        let spec = ArrivalSpec::pq(1.0, 0.5, 2.0).unwrap();
        assert!(matches!(stationary_pgf(&spec, 32), Err(Error::Diverges(_))));
        assert!(matches!(stationary_pgf_at(&spec, 0.5), Err(Error::Diverges(_))));
    }

    #[test]
    fn extraction_examples() {
        let one = extract_distribution(&TruncatedSeries::constant(1.0, 4)).unwrap();
        assert_eq!(one.prob(0), 1.0);
        assert_eq!(one.deficit, 0.0);
        assert!(matches!(extract_distribution(&TruncatedSeries::zero(4)), Err(Error::Numerical(_))));
        let bad = TruncatedSeries::new(vec![0.5, -1e-6]).unwrap();
        assert!(matches!(extract_distribution(&bad), Err(Error::Numerical(_))));
        let b1 = stationary_distribution(&battle1(), 512).unwrap();
        assert!(b1.deficit > 0.0 && b1.probs.iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn no_arrivals_means_empty_system() {
        let spec = ArrivalSpec::pq(0.0, 0.5, 2.0).unwrap();
        assert_eq!(stationary_pgf(&spec, 4).unwrap(), TruncatedSeries::constant(1.0, 4));
        assert!(ArrivalSpec::pq(-1.0, 1.0, 2.0).is_err());
    }
}
