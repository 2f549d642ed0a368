//! WebAssembly bindings for the static page in `www/`.
//!
//! Sojourn laws are written as `exp:MU`, `pl:Q` or `det:D`.

use wasm_bindgen::prelude::*;

use heavyq::analytic::stationary_distribution;
use heavyq::stability::classify;
use heavyq::{ArrivalSpec, BatchLaw, FracPowerLaw, SojournModel};

const MAX_K: u32 = 1_000_000;
const MAX_ORDER: u32 = 2048;

fn sojourn(text: &str) -> Result<SojournModel, String> {
    let (kind, value) = text.split_once(':').ok_or_else(|| format!("bad sojourn {text:?}"))?;
    let value: f64 = value.trim().parse().map_err(|_| format!("bad sojourn parameter {value:?}"))?;
    let model = match kind.trim() {
        "exp" => SojournModel::exponential(value),
        "pl" => SojournModel::power_law(value),
        "det" => SojournModel::deterministic(value),
        other => return Err(format!("unknown sojourn kind {other:?}")),
    };
    model.map_err(|e| e.to_string())
}

fn spec(lambda: f64, batch_p: f64, sojourn_law: &str) -> Result<ArrivalSpec, String> {
    let batch = BatchLaw::power_law(batch_p).map_err(|e| e.to_string())?;
    ArrivalSpec::new(lambda, batch, sojourn(sojourn_law)?).map_err(|e| e.to_string())
}

/// `P(X = k)` for `k = 1..=k_max`.
#[wasm_bindgen]
pub fn pmf_curve(p: f64, k_max: u32) -> Result<Vec<f64>, String> {
    if k_max == 0 || k_max > MAX_K {
        return Err(format!("k_max must lie in 1..={MAX_K}"));
    }
    let law = FracPowerLaw::new(p).map_err(|e| e.to_string())?;
    Ok((1..=u64::from(k_max)).map(|k| law.pmf_at(k as f64)).collect())
}

/// Stationary `P(L = n)` for `n = 0..=order`.
#[wasm_bindgen]
pub fn stationary(lambda: f64, batch_p: f64, sojourn_law: &str, order: u32) -> Result<Vec<f64>, String> {
    if order == 0 || order > MAX_ORDER {
        return Err(format!("order must lie in 1..={MAX_ORDER}"));
    }
    let dist = stationary_distribution(&spec(lambda, batch_p, sojourn_law)?, order as usize).map_err(|e| e.to_string())?;
    Ok(dist.probs)
}

/// One-line stability verdict with the deciding criterion.
#[wasm_bindgen]
pub fn verdict(lambda: f64, batch_p: f64, sojourn_law: &str) -> Result<String, String> {
    let v = classify(&spec(lambda, batch_p, sojourn_law)?).map_err(|e| e.to_string())?;
    let mut line = format!("{} ({})", v.verdict.name(), v.criterion.name());
    if let Some(b) = v.evidence.bound_value {
        line.push_str(&format!(", bound {b:.6}"));
    }
    if let Some(g) = v.growth_rate() {
        line.push_str(&format!(", partial sums grow {g:.4} per e-fold"));
    }
    Ok(line)
}
