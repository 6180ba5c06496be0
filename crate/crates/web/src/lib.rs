//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported function takes plain numbers and strings and returns a JSON
//! document, so the page needs no generated TypeScript types. The `*_json`
//! functions are ordinary Rust and are what the tests exercise.

use hpdcov::coverage::{coverage_curve, coverage_exact, coverage_mc, CoveragePoint};
use hpdcov::{
    family_constants, legacy_lower_bound, min_coverage_bracket, Alpha, Family, FamilyConstants,
    Hpd, LocationFamily,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest Monte Carlo sample the page may request; keeps the tab responsive.
pub const MAX_MC_SAMPLES: u64 = 2_000_000;

#[derive(Serialize)]
struct CurveView {
    family: String,
    alpha: f64,
    constants: FamilyConstants,
    bracket: (f64, f64),
    legacy_lower_bound: f64,
    nominal: f64,
    min: CoveragePoint,
    points: Vec<CoveragePoint>,
}

#[derive(Serialize)]
struct IntervalView {
    x: f64,
    lower: f64,
    upper: f64,
    posterior_mass: f64,
}

#[derive(Serialize)]
struct McView {
    theta: f64,
    estimate: f64,
    std_error: f64,
    n: u64,
    exact: f64,
    deviation_se: f64,
}

fn parse(family: &str, alpha: f64) -> Result<(Family, Alpha), String> {
    let family: Family = family.parse().map_err(|e: hpdcov::Error| e.to_string())?;
    let alpha = Alpha::new(alpha).map_err(|e| e.to_string())?;
    Ok((family, alpha))
}

fn json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// Coverage curve on `[0, theta_max]`; a non-positive `theta_max` selects
/// `4 max(d1, 2 d0)`.
pub fn curve_json(
    family: &str,
    alpha: f64,
    theta_max: f64,
    points: usize,
) -> Result<String, String> {
    let (family, alpha) = parse(family, alpha)?;
    if !family.is_logconcave() {
        return Err(hpdcov::Error::NonLogconcaveFamily(family.name().to_string()).to_string());
    }
    let constants = family_constants(&family, alpha).map_err(|e| e.to_string())?;
    let theta_max = if theta_max > 0.0 {
        theta_max
    } else {
        4.0 * constants.d1.max(constants.two_d0)
    };
    let curve = coverage_curve(&family, alpha, theta_max, points).map_err(|e| e.to_string())?;
    let min = *curve.min_point().ok_or("empty curve")?;
    json(&CurveView {
        family: curve.family.clone(),
        alpha: alpha.value(),
        constants,
        bracket: min_coverage_bracket(alpha),
        legacy_lower_bound: legacy_lower_bound(alpha),
        nominal: 1.0 - alpha.value(),
        min,
        points: curve.points,
    })
}

/// HPD interval and its posterior mass for the observation `x`.
pub fn interval_json(family: &str, alpha: f64, x: f64) -> Result<String, String> {
    let (family, alpha) = parse(family, alpha)?;
    let hpd = Hpd::new(&family, alpha).map_err(|e| e.to_string())?;
    let ci = hpd.interval(x).map_err(|e| e.to_string())?;
    let mass = hpd.posterior_mass(x).map_err(|e| e.to_string())?;
    json(&IntervalView {
        x,
        lower: ci.lower,
        upper: ci.upper,
        posterior_mass: mass,
    })
}

/// Simulated coverage at `theta` next to the exact value.
pub fn monte_carlo_json(
    family: &str,
    alpha: f64,
    theta: f64,
    n: u64,
    seed: u64,
) -> Result<String, String> {
    if n > MAX_MC_SAMPLES {
        return Err(format!(
            "n = {n} exceeds the demo limit of {MAX_MC_SAMPLES}"
        ));
    }
    let (family, alpha) = parse(family, alpha)?;
    let est = coverage_mc(&family, alpha, theta, n, seed).map_err(|e| e.to_string())?;
    let exact = coverage_exact(&family, alpha, theta)
        .map_err(|e| e.to_string())?
        .coverage;
    let deviation_se = if est.std_error > 0.0 {
        (est.mean - exact) / est.std_error
    } else {
        0.0
    };
    json(&McView {
        theta,
        estimate: est.mean,
        std_error: est.std_error,
        n,
        exact,
        deviation_se,
    })
}

#[wasm_bindgen(js_name = coverageCurve)]
pub fn coverage_curve_js(
    family: &str,
    alpha: f64,
    theta_max: f64,
    points: usize,
) -> Result<String, JsError> {
    curve_json(family, alpha, theta_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = credibleInterval)]
pub fn credible_interval_js(family: &str, alpha: f64, x: f64) -> Result<String, JsError> {
    interval_json(family, alpha, x).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = monteCarlo)]
pub fn monte_carlo_js(
    family: &str,
    alpha: f64,
    theta: f64,
    n: u32,
    seed: u32,
) -> Result<String, JsError> {
    monte_carlo_json(family, alpha, theta, u64::from(n), u64::from(seed))
        .map_err(|e| JsError::new(&e))
}
