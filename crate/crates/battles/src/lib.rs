//! Scenario runner behind the `battles` binary.
//!
//! Each scenario is classified, solved analytically where the model allows it
//! and simulated at its sample times. Results land in CSV files, and every plot
//! is drawn from the rows that were written, so re-plotting a CSV read back from
//! disk reproduces the SVG byte for byte.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use heavyq::analytic::{stationary_distribution, transient_distribution, DEFAULT_ORDER};
use heavyq::dist::Geometric;
use heavyq::numerics::linear_fit;
use heavyq::sim::{self, SimConfig};
use heavyq::stability::{classify, StabilityVerdict, Verdict};
use heavyq::{FracPowerLaw, QueueDistribution};

pub mod scenario;
pub mod svg;

pub use scenario::{Output, Scenario};

use svg::{Plot, Series, Style};

/// Exit status for a verdict that contradicts the scenario's expectation.
pub const EXIT_CONTRADICTION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_USAGE: i32 = 4;
pub const EXIT_IO: i32 = 1;

/// Largest `n` drawn in distribution plots.
pub const PLOT_MAX_N: u64 = 40;

#[derive(Debug, thiserror::Error)]
pub enum BattleError {
    #[error(transparent)]
    Model(#[from] heavyq::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("configuration: {0}")]
    Config(String),
    #[error("usage: {0}")]
    Usage(String),
}

impl BattleError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BattleError::Model(heavyq::Error::Domain(_) | heavyq::Error::Usage(_)) => EXIT_USAGE,
            BattleError::Model(_) => EXIT_NUMERICAL,
            BattleError::Config(_) | BattleError::Usage(_) => EXIT_USAGE,
            BattleError::Io { .. } | BattleError::Csv { .. } => EXIT_IO,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        BattleError::Io { path: path.to_path_buf(), source }
    }

    fn csv(path: &Path, source: csv::Error) -> Self {
        BattleError::Csv { path: path.to_path_buf(), source }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    pub replications: u32,
    pub order: usize,
    pub out_dir: PathBuf,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { seed: 1, replications: 10_000, order: DEFAULT_ORDER, out_dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Analytic,
    Sim,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistRow {
    pub n: u64,
    pub prob: f64,
    pub se: Option<f64>,
    pub source: Source,
    /// Empty for stationary rows.
    pub time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRow {
    pub criterion: String,
    pub bound_value: Option<f64>,
    pub growth_rate: Option<f64>,
    pub verdict: String,
}

impl VerdictRow {
    pub fn from_verdict(v: &StabilityVerdict) -> Self {
        Self {
            criterion: v.criterion.name().to_string(),
            bound_value: v.evidence.bound_value,
            growth_rate: v.growth_rate(),
            verdict: v.verdict.name().to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BattleOutcome {
    pub name: String,
    pub verdict: StabilityVerdict,
    pub expected: Verdict,
    pub files: Vec<PathBuf>,
}

impl BattleOutcome {
    pub fn contradiction(&self) -> bool {
        self.verdict.verdict != self.expected
    }

    pub fn exit_code(&self) -> i32 {
        if self.contradiction() {
            EXIT_CONTRADICTION
        } else {
            0
        }
    }
}

fn rows_of(dist: &QueueDistribution, source: Source) -> impl Iterator<Item = DistRow> + '_ {
    dist.probs.iter().enumerate().map(move |(n, p)| DistRow {
        n: n as u64,
        prob: *p,
        se: dist.se.as_ref().map(|se| se[n]),
        source,
        time: dist.time,
    })
}

pub fn run_battle(scenario: &Scenario, opts: &RunOptions) -> Result<BattleOutcome, BattleError> {
    let spec = scenario.spec()?;
    let verdict = classify(&spec)?;
    fs::create_dir_all(&opts.out_dir).map_err(|e| BattleError::io(&opts.out_dir, e))?;
    let path = |suffix: &str| opts.out_dir.join(format!("{}-{suffix}", scenario.name));
    let mut files = Vec::new();

    let verdict_path = path("verdict.csv");
    write_rows(&verdict_path, &[VerdictRow::from_verdict(&verdict)])?;
    files.push(verdict_path);

    let mut rows = Vec::new();
    let mut stationary = None;
    if verdict.verdict == Verdict::Stable
        && (scenario.wants(Output::Stationary) || scenario.wants(Output::Loglog))
    {
        let dist = stationary_distribution(&spec, opts.order)?;
        if scenario.wants(Output::Stationary) {
            rows.extend(rows_of(&dist, Source::Analytic));
        }
        stationary = Some(dist);
    }
    if scenario.wants(Output::Transient) {
        for t in &scenario.times {
            rows.extend(rows_of(&transient_distribution(&spec, *t, opts.order)?, Source::Analytic));
        }
    }
    if !scenario.times.is_empty() {
        let mut times = scenario.times.clone();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let horizon = times[times.len() - 1];
        let config =
            SimConfig::new(spec, horizon, times.clone()).replications(opts.replications).seed(opts.seed);
        let output = sim::run(&config)?;
        let sim_path = path("sim.csv");
        let file = fs::File::create(&sim_path).map_err(|e| BattleError::io(&sim_path, e))?;
        sim::write_csv(&output, io::BufWriter::new(file)).map_err(|e| BattleError::csv(&sim_path, e))?;
        files.push(sim_path);
        for t in &times {
            rows.extend(rows_of(&sim::empirical_distribution(&output, *t)?, Source::Sim));
        }
    }

    let dist_path = path("distribution.csv");
    write_rows(&dist_path, &rows)?;
    files.push(dist_path);
    let title = if scenario.title.is_empty() { scenario.name.as_str() } else { scenario.title.as_str() };
    let svg_path = path("distribution.svg");
    write_text(&svg_path, &distribution_plot(&rows, title).render())?;
    files.push(svg_path);

    if let (true, Some(dist)) = (scenario.wants(Output::Loglog), stationary) {
        let tail: Vec<(f64, f64)> =
            (1..dist.probs.len()).map(|m| (m as f64, 1.0 - dist.cdf(m - 1))).filter(|(_, s)| *s > 0.0).collect();
        let plot = Plot {
            title: format!("{title}: stationary tail"),
            x_label: "n".into(),
            y_label: "P(L ≥ n)".into(),
            log_x: true,
            log_y: true,
            series: vec![Series { name: "analytic".into(), points: tail, style: Style::Line, colour: 0 }],
        };
        let loglog_path = path("loglog.svg");
        write_text(&loglog_path, &plot.render())?;
        files.push(loglog_path);
    }

    Ok(BattleOutcome { name: scenario.name.clone(), verdict, expected: scenario.expected.verdict(), files })
}

/// `P(L = n)` against `n`, one series per source and time.
pub fn distribution_plot(rows: &[DistRow], title: &str) -> Plot {
    let mut series: Vec<Series> = Vec::new();
    let mut keys: Vec<(Source, Option<f64>)> = Vec::new();
    let mut times: Vec<Option<u64>> = Vec::new();
    for row in rows.iter().filter(|r| r.n <= PLOT_MAX_N) {
        let key = (row.source, row.time);
        let i = match keys.iter().position(|k| k.0 == key.0 && k.1.map(f64::to_bits) == key.1.map(f64::to_bits)) {
            Some(i) => i,
            None => {
                keys.push(key);
                let when = key.1.map_or("stationary".to_string(), |t| format!("t={t}"));
                let (label, style) = match key.0 {
                    Source::Analytic => ("analytic", Style::Line),
                    Source::Sim => ("sim", Style::Markers),
                };
                let time = key.1.map(f64::to_bits);
                let colour = times.iter().position(|t| *t == time).unwrap_or_else(|| {
                    times.push(time);
                    times.len() - 1
                });
                series.push(Series { name: format!("{label} {when}"), points: Vec::new(), style, colour });
                keys.len() - 1
            }
        };
        series[i].points.push((row.n as f64, row.prob));
    }
    Plot {
        title: title.to_string(),
        x_label: "n".into(),
        y_label: "P(L = n)".into(),
        log_x: false,
        log_y: true,
        series,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub curve: String,
    pub k: u64,
    pub pmf: f64,
    pub survival: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub p: f64,
    pub pmf_slope: f64,
    pub survival_slope: f64,
}

/// About forty points per decade on `[1, 10⁴]`.
fn log_grid() -> Vec<u64> {
    let mut ks: Vec<u64> = (0..=160).map(|i| 10f64.powf(i as f64 / 40.0).round() as u64).collect();
    ks.dedup();
    ks
}

fn fit_slope(points: impl Iterator<Item = (u64, f64)>) -> f64 {
    let pts: Vec<(f64, f64)> = points.map(|(k, v)| ((k as f64).ln(), v.ln())).collect();
    linear_fit(&pts).1
}

pub fn figure1_rows(p_values: &[f64]) -> Result<(Vec<CurveRow>, Vec<SlopeRow>), BattleError> {
    if p_values.is_empty() {
        return Err(BattleError::Usage("figure1 needs at least one p".into()));
    }
    let grid = log_grid();
    let mut curves = Vec::new();
    let mut slopes = Vec::new();
    for p in p_values {
        let law = FracPowerLaw::new(*p)?;
        let rows: Vec<CurveRow> = grid
            .iter()
            .map(|k| CurveRow { curve: format!("p={p}"), k: *k, pmf: law.pmf_at(*k as f64), survival: law.survival_at(*k as f64) })
            .collect();
        let window = || rows.iter().filter(|r| (100..=10_000).contains(&r.k));
        slopes.push(SlopeRow {
            p: *p,
            pmf_slope: fit_slope(window().map(|r| (r.k, r.pmf))),
            survival_slope: fit_slope(window().map(|r| (r.k, r.survival))),
        });
        curves.extend(rows);
    }
    let geometric = Geometric::new(0.1)?;
    for k in &grid {
        let pmf = geometric.pmf(*k);
        if pmf < 1e-12 {
            break;
        }
        curves.push(CurveRow { curve: "geometric(0.1)".into(), k: *k, pmf, survival: 0.9f64.powf((*k - 1) as f64) });
    }
    Ok((curves, slopes))
}

/// Log-log pmf curves, one series per distinct `curve` label.
pub fn figure1_plot(rows: &[CurveRow]) -> Plot {
    let mut series: Vec<Series> = Vec::new();
    for row in rows {
        if series.last().is_none_or(|s| s.name != row.curve) {
            let style = if row.curve.starts_with("geometric") { Style::Dashed } else { Style::Line };
            series.push(Series { name: row.curve.clone(), points: Vec::new(), style, colour: series.len() });
        }
        if let Some(s) = series.last_mut() {
            s.points.push((row.k as f64, row.pmf));
        }
    }
    Plot {
        title: "Power-law pmf against geometric(0.1)".into(),
        x_label: "k".into(),
        y_label: "P(X = k)".into(),
        log_x: true,
        log_y: true,
        series,
    }
}

pub fn run_figure1(p_values: &[f64], out_dir: &Path) -> Result<Vec<PathBuf>, BattleError> {
    let (curves, slopes) = figure1_rows(p_values)?;
    fs::create_dir_all(out_dir).map_err(|e| BattleError::io(out_dir, e))?;
    let files = vec![out_dir.join("figure1.csv"), out_dir.join("figure1-slopes.csv"), out_dir.join("figure1.svg")];
    write_rows(&files[0], &curves)?;
    write_rows(&files[1], &slopes)?;
    write_text(&files[2], &figure1_plot(&curves).render())?;
    Ok(files)
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), BattleError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| BattleError::csv(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| BattleError::csv(path, e))?;
    }
    w.flush().map_err(|e| BattleError::io(path, e))
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, BattleError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| BattleError::csv(path, e))?;
    r.deserialize().collect::<Result<_, _>>().map_err(|e| BattleError::csv(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), BattleError> {
    fs::write(path, text).map_err(|e| BattleError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("battles-{name}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        dir
    }

    #[test]
    fn empty_figure1_is_a_usage_error() {
        let err = figure1_rows(&[]).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_USAGE);
    }

    #[test]
    fn figure1_slopes() {
        let (curves, slopes) = figure1_rows(&[0.5, 1.0, 2.0]).unwrap();
        for s in &slopes {
            assert!((s.pmf_slope + s.p + 1.0).abs() < 0.05, "{s:?}");
            assert!((s.survival_slope + s.p).abs() < 0.05, "{s:?}");
        }
        assert_eq!(figure1_plot(&curves).series.len(), 4);
    }

    #[test]
    fn idle_scenario_is_a_point_mass() {
        let scenario = scenario::builtin().into_iter().find(|s| s.lambda == 0.0).unwrap();
        let out = tmp("idle");
        let opts = RunOptions { replications: 50, order: 32, out_dir: out.clone(), ..RunOptions::default() };
        let outcome = run_battle(&scenario, &opts).unwrap();
        assert_eq!(outcome.exit_code(), 0);
        let rows: Vec<DistRow> = read_rows(&out.join(format!("{}-distribution.csv", scenario.name))).unwrap();
        for row in &rows {
            let expect = if row.n == 0 { 1.0 } else { 0.0 };
            assert_eq!(row.prob, expect, "{row:?}");
        }
        fs::remove_dir_all(out).unwrap();
    }

    #[test]
    fn csv_round_trip_replots_identically() {
        let scenario = &scenario::builtin()[0];
        let out = tmp("roundtrip");
        let opts = RunOptions { replications: 200, order: 64, out_dir: out.clone(), ..RunOptions::default() };
        run_battle(scenario, &opts).unwrap();
        let rows: Vec<DistRow> = read_rows(&out.join("battle-1-distribution.csv")).unwrap();
        let svg = fs::read_to_string(out.join("battle-1-distribution.svg")).unwrap();
        assert_eq!(distribution_plot(&rows, &scenario.title).render(), svg);
        fs::remove_dir_all(out).unwrap();
    }
}
