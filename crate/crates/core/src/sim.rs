//! Monte Carlo of the batch-arrival infinite-server queue.
//!
//! Each replication draws Poisson batch epochs on `[0, horizon]`. A batch is
//! never stored: the number of its customers still present is pushed through
//! the sorted sample times with conditional binomial thinning, using
//! `P(S > a₂) / P(S > a₁)` between consecutive ages `a₁ < a₂`, and stops as soon
//! as the batch has emptied. Memory stays proportional to the sample grid.
//!
//! Replication `r` uses the ChaCha8 stream `r` under the configured seed, so
//! results do not depend on how rayon schedules replications.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp};
use rayon::prelude::*;

use crate::analytic::{ArrivalSpec, QueueDistribution, DEFAULT_ORDER};
use crate::error::{domain, usage, Result};

/// Default cap on a single batch size.
pub const DEFAULT_BATCH_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub spec: ArrivalSpec,
    pub horizon: f64,
    pub replications: u32,
    pub seed: u64,
    /// Sorted, within `[0, horizon]`.
    pub sample_times: Vec<f64>,
    pub batch_cap: u64,
}

impl SimConfig {
    pub fn new(spec: ArrivalSpec, horizon: f64, sample_times: Vec<f64>) -> Self {
        Self { spec, horizon, replications: 1, seed: 0, sample_times, batch_cap: DEFAULT_BATCH_CAP }
    }

    pub fn replications(mut self, n: u32) -> Self {
        self.replications = n;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn batch_cap(mut self, cap: u64) -> Self {
        self.batch_cap = cap;
        self
    }

    /// `n` equally spaced sample times on `[from, horizon]`.
    pub fn grid(from: f64, horizon: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![horizon];
        }
        (0..n).map(|i| from + (horizon - from) * i as f64 / (n - 1) as f64).collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(domain(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.replications == 0 {
            return Err(domain("at least one replication is needed"));
        }
        if self.batch_cap == 0 {
            return Err(domain("batch cap must be positive"));
        }
        if self.sample_times.is_empty() {
            return Err(domain("no sample times"));
        }
        if self.sample_times.windows(2).any(|w| w[0] > w[1]) {
            return Err(domain("sample times must be sorted"));
        }
        let (first, last) = (self.sample_times[0], self.sample_times[self.sample_times.len() - 1]);
        if first < 0.0 || last > self.horizon {
            return Err(domain("sample times must lie within [0, horizon]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub sample_times: Vec<f64>,
    pub horizon: f64,
    pub seed: u64,
    /// `counts[r][i]` is `L` at `sample_times[i]` in replication `r`.
    pub counts: Vec<Vec<u64>>,
    /// Live batches (super-customers) at each sample time.
    pub k_counts: Vec<Vec<u64>>,
    /// Capped batch draws per replication.
    pub overflow_events: Vec<u64>,
    /// Epoch of the first capped draw per replication.
    pub first_overflow: Vec<Option<f64>>,
    /// Batches that arrived in `[0, horizon]` per replication.
    pub batch_arrivals: Vec<u64>,
    /// Stream identifier used by each replication.
    pub seed_trail: Vec<u64>,
}

struct Replication {
    counts: Vec<u64>,
    k_counts: Vec<u64>,
    overflow: u64,
    first_overflow: Option<f64>,
    batches: u64,
}

pub fn run(config: &SimConfig) -> Result<SimOutput> {
    config.validate()?;
    let reps: Vec<Replication> =
        (0..config.replications).into_par_iter().map(|r| run_replication(config, u64::from(r))).collect();
    let mut out = SimOutput {
        sample_times: config.sample_times.clone(),
        horizon: config.horizon,
        seed: config.seed,
        counts: Vec::with_capacity(reps.len()),
        k_counts: Vec::with_capacity(reps.len()),
        overflow_events: Vec::with_capacity(reps.len()),
        first_overflow: Vec::with_capacity(reps.len()),
        batch_arrivals: Vec::with_capacity(reps.len()),
        seed_trail: (0..u64::from(config.replications)).collect(),
    };
    for rep in reps {
        out.counts.push(rep.counts);
        out.k_counts.push(rep.k_counts);
        out.overflow_events.push(rep.overflow);
        out.first_overflow.push(rep.first_overflow);
        out.batch_arrivals.push(rep.batches);
    }
    Ok(out)
}

fn run_replication(config: &SimConfig, stream: u64) -> Replication {
    let times = &config.sample_times;
    let spec = &config.spec;
    let mut rep = Replication {
        counts: vec![0; times.len()],
        k_counts: vec![0; times.len()],
        overflow: 0,
        first_overflow: None,
        batches: 0,
    };
    if spec.lambda == 0.0 {
        return rep;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);
    let gaps = Exp::new(spec.lambda).expect("positive rate");
    let mut epoch = 0.0;
    loop {
        epoch += gaps.sample(&mut rng);
        if epoch > config.horizon {
            break;
        }
        rep.batches += 1;
        let draw = spec.batch.sample_capped(1.0 - rng.random::<f64>(), config.batch_cap);
        if draw.capped {
            rep.overflow += 1;
            rep.first_overflow.get_or_insert(epoch);
        }
        let mut alive = draw.value;
        let mut prev_survival = 1.0;
        let start = times.partition_point(|t| *t < epoch);
        for i in start..times.len() {
            let survival = spec.sojourn.survival(times[i] - epoch);
            let keep = if prev_survival > 0.0 { (survival / prev_survival).min(1.0) } else { 0.0 };
            alive = thin(alive, keep, &mut rng);
            prev_survival = survival;
            if alive == 0 {
                break;
            }
            rep.counts[i] += alive;
            rep.k_counts[i] += 1;
        }
    }
    rep
}

fn thin(n: u64, keep: f64, rng: &mut ChaCha8Rng) -> u64 {
    if keep >= 1.0 {
        n
    } else if keep <= 0.0 {
        0
    } else {
        Binomial::new(n, keep).expect("valid binomial").sample(rng)
    }
}

fn time_index(output: &SimOutput, t: f64) -> Result<usize> {
    output
        .sample_times
        .iter()
        .position(|s| *s == t)
        .ok_or_else(|| usage(format!("time {t} is not one of the sample times")))
}

/// Histogram of `L(t)` across replications, truncated at [`DEFAULT_ORDER`].
///
/// Standard errors are the half-widths of one-sigma Wilson intervals.
pub fn empirical_distribution(output: &SimOutput, t: f64) -> Result<QueueDistribution> {
    let i = time_index(output, t)?;
    let values: Vec<u64> = output.counts.iter().map(|c| c[i]).collect();
    let top = values.iter().copied().max().unwrap_or(0).min(DEFAULT_ORDER as u64) as usize;
    let mut hist = vec![0u64; top + 1];
    for v in &values {
        if (*v as usize) <= top && *v <= DEFAULT_ORDER as u64 {
            hist[*v as usize] += 1;
        }
    }
    let n = values.len() as f64;
    let probs: Vec<f64> = hist.iter().map(|h| *h as f64 / n).collect();
    let se = probs.iter().map(|p| wilson_half_width(*p, n)).collect();
    let deficit = 1.0 - probs.iter().sum::<f64>();
    Ok(QueueDistribution { probs, deficit: deficit.max(0.0), time: Some(t), se: Some(se) })
}

fn wilson_half_width(p: f64, n: f64) -> f64 {
    (p * (1.0 - p) / n + 1.0 / (4.0 * n * n)).sqrt() / (1.0 + 1.0 / n)
}

/// Median of `L(t)` across replications (the lower median for even counts).
pub fn median_at(output: &SimOutput, t: f64) -> Result<u64> {
    let i = time_index(output, t)?;
    let mut values: Vec<u64> = output.counts.iter().map(|c| c[i]).collect();
    values.sort_unstable();
    Ok(values[(values.len() - 1) / 2])
}

/// Time-averaged super-customer count over the second half of the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupercustomerTrace {
    pub mean: f64,
    pub se: f64,
    /// Sample times that fell in the window.
    pub samples: usize,
}

/// Averages `K` over the sample times in `[horizon/2, horizon]`. The standard
/// error comes from the spread of replication means, or from ten batch means
/// when there is a single replication.
pub fn supercustomer_trace(output: &SimOutput) -> SupercustomerTrace {
    let lo = output.sample_times.partition_point(|t| *t < 0.5 * output.horizon);
    let window = output.sample_times.len() - lo;
    if window == 0 {
        return SupercustomerTrace { mean: f64::NAN, se: f64::NAN, samples: 0 };
    }
    let means: Vec<f64> = if output.k_counts.len() >= 2 {
        output.k_counts.iter().map(|k| k[lo..].iter().sum::<u64>() as f64 / window as f64).collect()
    } else {
        let k = &output.k_counts[0][lo..];
        let blocks = 10.min(window);
        let size = window / blocks;
        (0..blocks).map(|b| k[b * size..(b + 1) * size].iter().sum::<u64>() as f64 / size as f64).collect()
    };
    let m = means.len() as f64;
    let mean = means.iter().sum::<f64>() / m;
    let var = if means.len() > 1 { means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
    SupercustomerTrace { mean, se: (var / m).sqrt(), samples: window }
}

/// Writes `replication,time,L,K,overflow_flag` rows.
pub fn write_csv<W: Write>(output: &SimOutput, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["replication", "time", "L", "K", "overflow_flag"])?;
    for (r, (counts, ks)) in output.counts.iter().zip(&output.k_counts).enumerate() {
        for (i, t) in output.sample_times.iter().enumerate() {
            let flag = output.first_overflow[r].is_some_and(|e| e <= *t);
            w.write_record([
                output.seed_trail[r].to_string(),
                t.to_string(),
                counts[i].to_string(),
                ks[i].to_string(),
                u8::from(flag).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::SojournModel;
    use crate::dist::BatchLaw;

    fn md1() -> ArrivalSpec {
        ArrivalSpec::new(1.0, BatchLaw::constant(1).unwrap(), SojournModel::deterministic(1.0).unwrap()).unwrap()
    }

    #[test]
    fn deterministic_unit_batches_have_mean_one() {
        let cfg = SimConfig::new(md1(), 10.0, vec![0.5, 2.0, 10.0]).replications(20_000).seed(1);
        let out = run(&cfg).unwrap();
        for (i, want) in [0.5, 1.0, 1.0].into_iter().enumerate() {
            let xs: Vec<f64> = out.counts.iter().map(|c| c[i] as f64).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt();
            assert!((mean - want).abs() < 3.0 * sd / (xs.len() as f64).sqrt(), "i={i} mean={mean}");
        }
        // singleton batches: K = L pathwise
        assert_eq!(out.counts, out.k_counts);
    }

    #[test]
    fn no_arrivals_gives_empty_paths() {
        let spec = ArrivalSpec::pq(0.0, 1.0, 2.0).unwrap();
        let out = run(&SimConfig::new(spec, 5.0, vec![1.0, 5.0]).replications(10)).unwrap();
        assert!(out.counts.iter().flatten().all(|c| *c == 0));
        let d = empirical_distribution(&out, 5.0).unwrap();
        assert_eq!(d.probs, vec![1.0]);
        assert_eq!(supercustomer_trace(&out).mean, 0.0);
    }

    #[test]
    fn k_never_exceeds_l() {
        let spec = ArrivalSpec::pq(1.0, 0.5, 2.0).unwrap();
        let cfg = SimConfig::new(spec, 30.0, SimConfig::grid(0.0, 30.0, 31)).replications(500).seed(4);
        let out = run(&cfg).unwrap();
        for (l, k) in out.counts.iter().zip(&out.k_counts) {
            assert!(l.iter().zip(k).all(|(l, k)| k <= l));
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let spec = ArrivalSpec::pq(1.0, 1.0, 2.0).unwrap();
        let cfg = SimConfig::new(spec, 20.0, vec![5.0, 20.0]).replications(64).seed(99);
        assert_eq!(run(&cfg).unwrap(), run(&cfg).unwrap());
        let other = run(&cfg.clone().seed(100)).unwrap();
        assert_ne!(run(&cfg).unwrap().counts, other.counts);
    }

    #[test]
    fn bad_configs_are_rejected() {
        let spec = md1();
        assert!(run(&SimConfig::new(spec, 0.0, vec![0.0])).is_err());
        assert!(run(&SimConfig::new(spec, 1.0, vec![2.0])).is_err());
        assert!(run(&SimConfig::new(spec, 1.0, vec![0.5, 0.2])).is_err());
        assert!(run(&SimConfig::new(spec, 1.0, vec![0.5]).replications(0)).is_err());
    }

    #[test]
    fn unsampled_time_is_a_usage_error() {
        let out = run(&SimConfig::new(md1(), 2.0, vec![1.0]).replications(3)).unwrap();
        assert!(matches!(empirical_distribution(&out, 1.5), Err(crate::Error::Usage(_))));
    }

    #[test]
    fn csv_has_one_row_per_replication_and_time() {
        let out = run(&SimConfig::new(md1(), 2.0, vec![1.0, 2.0]).replications(3)).unwrap();
        let mut buf = Vec::new();
        write_csv(&out, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.starts_with("replication,time,L,K,overflow_flag\n"));
    }
}
