//! Stability verdicts for batch-arrival infinite-server queues.
//!
//! The queue is stable whenever the expected maximum sojourn `E[S₍X₎]` of a
//! batch is finite, and for Poisson batch arrivals only then. Three routes to
//! a verdict are implemented:
//!
//! - the Hölder bound `E[S₍X₎] ≤ E[S^r]^{1/r} E[X^{1/r}]` for some `r ≥ 1`;
//! - for exponential sojourns, `E[S₍X₎] = E[H_X]/μ`, finite iff `E[ln X] < ∞`;
//! - direct evaluation of `E[S₍X₎] = Σ_{t≥0} (1 − φ(P(S ≤ t)))`, with a
//!   growth-rate test on the partial sums when the series diverges.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::{ArrivalSpec, SojournModel};
use crate::dist::{BatchLaw, FracPowerLaw};
use crate::error::{domain, usage, DivergenceEvidence, Error, Result};
use crate::numerics::{self, linear_fit};
use crate::sim::{self, SimOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
    Indeterminate,
}

/// The rule that produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Holder,
    LogCriterion,
    EsxDivergence,
    EsxConvergence,
    NoArrivals,
    /// No implemented rule settled the case.
    None,
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::Holder => "holder",
            Criterion::LogCriterion => "log-criterion",
            Criterion::EsxDivergence => "esx-divergence",
            Criterion::EsxConvergence => "esx-convergence",
            Criterion::NoArrivals => "no-arrivals",
            Criterion::None => "none",
        }
    }
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Indeterminate => "indeterminate",
        }
    }
}

/// Numbers backing a verdict.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Evidence {
    /// Finite upper bound on `E[S₍X₎]` (Hölder) or its computed value.
    pub bound_value: Option<f64>,
    pub holder_exponent: Option<f64>,
    /// `E[ln X]` for the log criterion.
    pub mean_log: Option<f64>,
    pub divergence: Option<DivergenceEvidence>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub verdict: Verdict,
    pub criterion: Criterion,
    pub evidence: Evidence,
}

impl StabilityVerdict {
    pub fn growth_rate(&self) -> Option<f64> {
        self.evidence.divergence.as_ref().map(|d| d.growth_rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsxMethod {
    ClosedFormSeries,
    PartialSumDivergence,
    MonteCarlo,
}

/// Estimate of `E[S₍X₎]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxSojournEstimate {
    /// `f64::INFINITY` when the series diverges.
    pub value: f64,
    /// Standard error of a Monte Carlo estimate.
    pub se: Option<f64>,
    pub method: EsxMethod,
    /// Lattice terms summed one by one, or Monte Carlo samples.
    pub terms: u64,
    /// Batch draws that hit the cap (Monte Carlo only).
    pub capped: u64,
    pub evidence: Option<DivergenceEvidence>,
}

impl MaxSojournEstimate {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// Start of the partial-sum window used by the divergence test.
pub const DIVERGENCE_T0: f64 = 1e4;
/// Points per decade in that window.
const FIT_POINTS_PER_DECADE: usize = 4;
const MIN_GROWTH: f64 = 0.01;
const MAX_RELATIVE_RESIDUAL: f64 = 0.05;
/// Increments over the two decades must be nearly equal for log growth;
/// convergent sums shrink them geometrically.
const MIN_DECADE_RATIO: f64 = 0.8;

/// `E[S^r]^{1/r} E[X^{1/r}]`, or `+∞` when either factor is infinite.
pub fn holder_bound(r: f64, batch: &FracPowerLaw, sojourn: &SojournModel) -> Result<f64> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(domain(format!("the Hölder exponent must be at least 1, got {r}")));
    }
    holder_bound_law(r, &BatchLaw::PowerLaw(*batch), sojourn)
}

fn holder_bound_law(r: f64, batch: &BatchLaw, sojourn: &SojournModel) -> Result<f64> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(domain(format!("the Hölder exponent must be at least 1, got {r}")));
    }
    if !sojourn.moment_finite(r) || !batch.moment_finite(1.0 / r) {
        return Ok(f64::INFINITY);
    }
    match (sojourn.moment(r), batch.moment(1.0 / r)) {
        (Some(s), Some(x)) => Ok(s.powf(1.0 / r) * x),
        _ => Ok(f64::INFINITY),
    }
}

/// Best finite Hölder bound over `r ∈ {1, 1.1, …, 8}` and the midpoint of the
/// admissible interval, as `(r, bound)`.
pub fn holder_search(batch: &BatchLaw, sojourn: &SojournModel) -> Option<(f64, f64)> {
    let mut grid: Vec<f64> = (0..=70).map(|i| 1.0 + 0.1 * i as f64).collect();
    if let (BatchLaw::PowerLaw(p), SojournModel::PowerLaw(q)) = (batch, sojourn) {
        // finite iff 1/p < r < q
        let lo = (1.0 / p.order()).max(1.0);
        let hi = q.order();
        if lo < hi {
            grid.push(0.5 * (lo + hi));
        }
        if lo == 1.0 && hi > 1.0 && p.order() > 1.0 {
            grid.push(1.0);
        }
    }
    grid.into_iter()
        .filter_map(|r| holder_bound_law(r, batch, sojourn).ok().map(|b| (r, b)))
        .filter(|(_, b)| b.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// `E[S₍X₎]` for independent sojourns.
pub fn esx_estimate(batch: &BatchLaw, sojourn: &SojournModel) -> MaxSojournEstimate {
    let closed = |value: f64, terms: u64| MaxSojournEstimate {
        value,
        se: None,
        method: EsxMethod::ClosedFormSeries,
        terms,
        capped: 0,
        evidence: None,
    };
    match sojourn {
        SojournModel::Deterministic(d) => closed(*d, 0),
        // E[max of X unit exponentials] = E[H_X]
        SojournModel::Exponential(e) => closed(batch.mean_harmonic() / e.rate(), numerics::DIRECT_TERMS),
        SojournModel::PowerLaw(q) => {
            let term = |x: f64| batch.complement_gap(q.survival_at(x));
            let (value, info) = numerics::lattice_sum_scalar(1, None, term);
            let evidence = partial_sum_evidence(&term);
            let log_growth = evidence.growth_rate > MIN_GROWTH
                && evidence.relative_residual < MAX_RELATIVE_RESIDUAL
                && evidence.decade_ratio > MIN_DECADE_RATIO;
            if log_growth || info.divergent {
                MaxSojournEstimate {
                    value: f64::INFINITY,
                    se: None,
                    method: EsxMethod::PartialSumDivergence,
                    terms: info.direct_terms,
                    capped: 0,
                    evidence: Some(evidence),
                }
            } else {
                closed(value, info.direct_terms)
            }
        }
    }
}

/// Partial sums of `Σ_{t≥0} (1 − φ(P(S ≤ t)))` over `T ∈ [T0, 100 T0]` and
/// their fit against `a + b ln T`.
fn partial_sum_evidence(term: &impl Fn(f64) -> f64) -> DivergenceEvidence {
    let n = 2 * FIT_POINTS_PER_DECADE;
    let partial_sums: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let t = (DIVERGENCE_T0 * 10f64.powf(i as f64 / FIT_POINTS_PER_DECADE as f64)).round();
            (t, numerics::lattice_sum_scalar(1, Some(t as u64), term).0)
        })
        .collect();
    let pts: Vec<(f64, f64)> = partial_sums.iter().map(|(t, s)| (t.ln(), *s)).collect();
    let (_, b, rms) = linear_fit(&pts);
    let first = partial_sums[0].1;
    let mid = partial_sums[FIT_POINTS_PER_DECADE].1;
    let last = partial_sums[n].1;
    let rise = (last - first).abs().max(1e-300);
    let decade_ratio = if mid > first { (last - mid) / (mid - first) } else { 0.0 };
    DivergenceEvidence { growth_rate: b, relative_residual: rms / rise, decade_ratio, partial_sums }
}

/// Verdict for power-law batches of order `p` and power-law sojourns of
/// order `q` under Poisson batch arrivals.
pub fn classify_pq(p: f64, q: f64) -> Result<StabilityVerdict> {
    let batch = BatchLaw::power_law(p)?;
    let sojourn = SojournModel::power_law(q)?;
    if p * q > 1.0 && q > 1.0 {
        if let Some((r, bound)) = holder_search(&batch, &sojourn) {
            return Ok(StabilityVerdict {
                verdict: Verdict::Stable,
                criterion: Criterion::Holder,
                evidence: Evidence { bound_value: Some(bound), holder_exponent: Some(r), ..Evidence::default() },
            });
        }
    }
    Ok(from_esx(esx_estimate(&batch, &sojourn)))
}

fn from_esx(esx: MaxSojournEstimate) -> StabilityVerdict {
    match esx.evidence {
        Some(d) => StabilityVerdict {
            verdict: Verdict::Unstable,
            criterion: Criterion::EsxDivergence,
            evidence: Evidence {
                divergence: Some(d),
                note: "E[S_(X)] = ∞; instability follows for Poisson batch arrivals only".into(),
                ..Evidence::default()
            },
        },
        None if esx.value.is_finite() => StabilityVerdict {
            verdict: Verdict::Stable,
            criterion: Criterion::EsxConvergence,
            evidence: Evidence { bound_value: Some(esx.value), ..Evidence::default() },
        },
        None => StabilityVerdict {
            verdict: Verdict::Indeterminate,
            criterion: Criterion::None,
            evidence: Evidence::default(),
        },
    }
}

/// Verdict for an arbitrary spec.
pub fn classify(spec: &ArrivalSpec) -> Result<StabilityVerdict> {
    if spec.lambda == 0.0 {
        return Ok(StabilityVerdict {
            verdict: Verdict::Stable,
            criterion: Criterion::NoArrivals,
            evidence: Evidence { bound_value: Some(0.0), ..Evidence::default() },
        });
    }
    match (&spec.batch, &spec.sojourn) {
        (BatchLaw::PowerLaw(p), SojournModel::PowerLaw(q)) => classify_pq(p.order(), q.order()),
        (batch, SojournModel::Exponential(e)) => {
            let mean_log = batch.mean_log();
            Ok(StabilityVerdict {
                verdict: Verdict::Stable,
                criterion: Criterion::LogCriterion,
                evidence: Evidence {
                    // ln X ≤ H_X ≤ 1 + ln X
                    bound_value: Some((1.0 + mean_log) / e.rate()),
                    mean_log: Some(mean_log),
                    ..Evidence::default()
                },
            })
        }
        (batch, sojourn) => {
            if let Some((r, bound)) = holder_search(batch, sojourn) {
                return Ok(StabilityVerdict {
                    verdict: Verdict::Stable,
                    criterion: Criterion::Holder,
                    evidence: Evidence { bound_value: Some(bound), holder_exponent: Some(r), ..Evidence::default() },
                });
            }
            Ok(from_esx(esx_estimate(batch, sojourn)))
        }
    }
}

/// Monte Carlo estimate of `E[S₍X₎]` drawing the batch maximum directly:
/// `P(S₍X₎ > t | X) = 1 − (1 − P(S > t))^X`.
pub fn esx_monte_carlo(
    batch: &BatchLaw,
    sojourn: &SojournModel,
    samples: u64,
    seed: u64,
    cap: u64,
) -> MaxSojournEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut capped = 0;
    let mut acc = Welford::default();
    for _ in 0..samples {
        let draw = batch.sample_capped(1.0 - rng.random::<f64>(), cap);
        capped += u64::from(draw.capped);
        acc.push(max_of(draw.value, sojourn, &mut rng));
    }
    MaxSojournEstimate {
        value: acc.mean,
        se: Some(acc.se()),
        method: EsxMethod::MonteCarlo,
        terms: samples,
        capped,
        evidence: None,
    }
}

/// One draw of the maximum of `n` i.i.d. sojourns.
fn max_of(n: u64, sojourn: &SojournModel, rng: &mut impl Rng) -> f64 {
    let u = 1.0 - rng.random::<f64>();
    // P(max > t) ≤ 1 − u^{1/n}
    let upper = -(u.ln() / n as f64).exp_m1();
    if upper <= 0.0 {
        return 0.0;
    }
    sojourn.quantile_upper(upper.min(1.0))
}

/// Running mean and variance.
#[derive(Debug, Clone, Default)]
pub(crate) struct Welford {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn se(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

/// `{n E[S^r]}^{1/r}`, the bound on the mean maximum of `n` i.i.d. copies.
pub fn max_of_n_bound(n: u64, r: f64, sojourn: &SojournModel) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(domain(format!("the exponent must be at least 1, got {r}")));
    }
    Ok(sojourn.moment(r).map_or(f64::INFINITY, |m| (n as f64 * m).powf(1.0 / r)))
}

/// Monte Carlo mean of the maximum of `n` i.i.d. sojourns, as `(mean, se)`.
pub fn max_of_n_monte_carlo(n: u64, sojourn: &SojournModel, samples: u64, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Welford::default();
    for _ in 0..samples {
        let m = (0..n).map(|_| sojourn.quantile_upper(1.0 - rng.random::<f64>())).fold(0.0, f64::max);
        acc.push(m);
    }
    (acc.mean, acc.se())
}

/// Monte Carlo check of the Hölder product bound with capped batches.
#[derive(Debug, Clone)]
pub struct HolderCheck {
    pub exponent: f64,
    pub esx: f64,
    pub esx_se: f64,
    /// `E[S^r]^{1/r} · Ê[min(X, cap)^{1/r}]`.
    pub bound: f64,
    pub capped: u64,
}

pub fn holder_monte_carlo(
    batch: &BatchLaw,
    sojourn: &SojournModel,
    r: f64,
    samples: u64,
    seed: u64,
    cap: u64,
) -> Result<HolderCheck> {
    let s_norm = max_of_n_bound(1, r, sojourn)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut esx = Welford::default();
    let mut xr = Welford::default();
    let mut capped = 0;
    for _ in 0..samples {
        let draw = batch.sample_capped(1.0 - rng.random::<f64>(), cap);
        capped += u64::from(draw.capped);
        xr.push((draw.value as f64).powf(1.0 / r));
        esx.push(max_of(draw.value, sojourn, &mut rng));
    }
    Ok(HolderCheck { exponent: r, esx: esx.mean, esx_se: esx.se(), bound: s_norm * xr.mean, capped })
}

/// Little's law check `E[K] = λ E[S₍X₎]` on simulated super-customer counts.
#[derive(Debug, Clone)]
pub struct LittleReport {
    pub k_bar: f64,
    pub se: f64,
    pub expected: f64,
    /// `(k_bar − expected) / se`.
    pub z_score: f64,
    pub pass: bool,
}

pub fn verify_little(output: &SimOutput, spec: &ArrivalSpec) -> Result<LittleReport> {
    let verdict = classify(spec)?;
    if verdict.verdict != Verdict::Stable {
        return match verdict.evidence.divergence {
            Some(d) => Err(Error::Diverges(Box::new(d))),
            None => Err(usage("Little's law needs a stable spec; stability could not be established")),
        };
    }
    let expected = spec.lambda * esx_estimate(&spec.batch, &spec.sojourn).value;
    let trace = sim::supercustomer_trace(output);
    let z_score = if trace.se > 0.0 {
        (trace.mean - expected) / trace.se
    } else if trace.mean == expected {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(LittleReport { k_bar: trace.mean, se: trace.se, expected, z_score, pass: z_score.abs() <= 3.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::ZETA2;
    use proptest::prelude::{prop_assert_eq, proptest, ProptestConfig};

    fn pl(p: f64) -> FracPowerLaw {
        FracPowerLaw::new(p).unwrap()
    }

    #[test]
    fn holder_examples() {
        let s3 = SojournModel::power_law(3.0).unwrap();
        let s2 = SojournModel::power_law(2.0).unwrap();
        assert!(holder_bound(2.5, &pl(0.5), &s3).unwrap().is_finite());
        for r in [1.0, 1.5, 2.0, 2.5, 4.0] {
            assert!(holder_bound(r, &pl(0.5), &s2).unwrap().is_infinite());
        }
        assert!(holder_bound(1.5, &pl(1.0), &s2).unwrap().is_finite());
        assert!(matches!(holder_bound(0.9, &pl(1.0), &s2), Err(Error::Domain(_))));
    }

    #[test]
    fn classify_battles() {
        assert_eq!(classify_pq(1.0, 2.0).unwrap().verdict, Verdict::Stable);
        assert_eq!(classify_pq(0.5, 3.0).unwrap().verdict, Verdict::Stable);
        let b3 = classify_pq(0.5, 2.0).unwrap();
        assert_eq!(b3.verdict, Verdict::Unstable);
        assert_eq!(b3.criterion, Criterion::EsxDivergence);
        assert!(classify_pq(0.0, 2.0).is_err());
        // E[S] = ∞ already
        assert_eq!(classify_pq(3.0, 0.8).unwrap().verdict, Verdict::Unstable);
    }

    #[test]
    fn esx_examples() {
        let exp1 = SojournModel::exponential(1.0).unwrap();
        let e = esx_estimate(&BatchLaw::power_law(1.0).unwrap(), &exp1);
        assert!((e.value - ZETA2).abs() < 1e-11);
        let b3 = esx_estimate(&BatchLaw::power_law(0.5).unwrap(), &SojournModel::power_law(2.0).unwrap());
        assert!(b3.value.is_infinite());
        let ev = b3.evidence.unwrap();
        assert!(ev.relative_residual < 0.05 && ev.decade_ratio > 0.95);
        let b4 = esx_estimate(&BatchLaw::power_law(0.5).unwrap(), &SojournModel::power_law(3.0).unwrap());
        assert!(b4.value.is_finite() && b4.value > 1.0);
    }

    #[test]
    fn esx_matches_monte_carlo() {
        let batch = BatchLaw::power_law(1.0).unwrap();
        let sojourn = SojournModel::power_law(2.0).unwrap();
        let exact = esx_estimate(&batch, &sojourn).value;
        let mc = esx_monte_carlo(&batch, &sojourn, 400_000, 7, 1 << 40);
        assert!((mc.value - exact).abs() < 4.0 * mc.se.unwrap(), "{} ± {} vs {exact}", mc.value, mc.se.unwrap());
    }

    #[test]
    fn harmonic_sandwich() {
        let d = pl(0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let x = d.sample_capped(1.0 - rng.random::<f64>(), 1 << 40).value;
            let h = numerics::harmonic(x);
            let l = (x as f64).ln();
            assert!(l <= h && h <= 1.0 + l, "x={x}");
        }
    }

    #[test]
    fn max_of_n_bound_holds_for_a_small_case() {
        let s = SojournModel::power_law(3.0).unwrap();
        let (m, se) = max_of_n_monte_carlo(5, &s, 100_000, 11);
        assert!(m <= max_of_n_bound(5, 2.0, &s).unwrap() + 2.0 * se);
    }

    #[test]
    fn no_arrivals_is_stable() {
        let spec = ArrivalSpec::pq(0.0, 0.5, 2.0).unwrap();
        let v = classify(&spec).unwrap();
        assert_eq!((v.verdict, v.criterion), (Verdict::Stable, Criterion::NoArrivals));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn classify_is_monotone(p in 0.3f64..3.0, q in 1.05f64..4.0, dp in 0.0f64..1.0, dq in 0.0f64..1.0) {
            let base = classify_pq(p, q).unwrap().verdict;
            let up = classify_pq(p + dp, q + dq).unwrap().verdict;
            if base == Verdict::Stable {
                prop_assert_eq!(up, Verdict::Stable);
            }
        }
    }
}
