//! Symmetric location families and the numeric utilities built on them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::roots::{bisect, expand_down};

/// Largest `|z|` the quantile bracket may reach; `exp(-745)` is the smallest
/// subnormal double, so nothing beyond it is resolvable on the cdf scale.
pub const QUANTILE_BRACKET_LIMIT: f64 = 745.0;

/// A density `g` symmetric about 0 and unimodal, used as `X - theta ~ g`.
///
/// Implementors must provide `pdf` and `cdf`; the remaining methods have
/// generic defaults that may be overridden with closed forms or with
/// tail-accurate evaluations.
pub trait LocationFamily: Send + Sync {
    fn name(&self) -> &str;

    fn pdf(&self, z: f64) -> f64;

    fn cdf(&self, z: f64) -> f64;

    fn log_pdf(&self, z: f64) -> f64 {
        self.pdf(z).ln()
    }

    /// `1 - G(z)`, evaluated as `G(-z)` so that the right tail keeps full
    /// relative precision.
    fn survival(&self, z: f64) -> f64 {
        self.cdf(-z)
    }

    fn log_cdf(&self, z: f64) -> f64 {
        if z > 0.0 {
            (-self.survival(z)).ln_1p()
        } else {
            self.cdf(z).ln()
        }
    }

    /// `ln G(z - delta) - ln G(z)` for `delta >= 0`.
    ///
    /// Far in the left tail both logarithms are huge and nearly equal; families
    /// with an analytic tail override this to avoid the cancellation.
    fn log_cdf_drop(&self, z: f64, delta: f64) -> f64 {
        self.log_cdf(z - delta) - self.log_cdf(z)
    }

    fn inv_cdf(&self, p: f64) -> Result<f64> {
        inv_cdf_numeric(self, p)
    }

    /// Solves `ln G(z) = log_p` for `log_p < 0`.
    fn inv_log_cdf(&self, log_p: f64) -> Result<f64> {
        inv_log_cdf_numeric(self, log_p)
    }

    fn is_logconcave(&self) -> bool;

    /// Closed-form value of `lim_{x -> -inf} u(x)` at credibility `1 - alpha`,
    /// when one is known.
    fn tail_limit_a(&self, alpha: f64) -> Option<f64>;
}

/// Quantile by exponential bracket expansion from `[-1, 1]` followed by
/// bisection. Upper-half probabilities are reflected onto the lower tail,
/// where the cdf carries full relative precision.
pub fn inv_cdf_numeric<F: LocationFamily + ?Sized>(family: &F, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    if p > 0.5 {
        return inv_cdf_numeric(family, 1.0 - p).map(|z| -z);
    }
    let lo = expand_down(0.0, |z| family.cdf(z) <= p, QUANTILE_BRACKET_LIMIT).ok_or(
        Error::BracketFailure {
            p,
            limit: QUANTILE_BRACKET_LIMIT,
        },
    )?;
    let hi = if lo < -1.0 { 0.5 * lo } else { 0.0 };
    bisect(|z| family.cdf(z) - p, lo, hi)
}

/// Log-scale counterpart of [`inv_cdf_numeric`], for probabilities far below
/// the smallest representable double.
pub fn inv_log_cdf_numeric<F: LocationFamily + ?Sized>(family: &F, log_p: f64) -> Result<f64> {
    if !(log_p < 0.0) {
        return Err(Error::InvalidProbability(log_p.exp()));
    }
    if log_p > -0.5 {
        return family.inv_cdf(log_p.exp());
    }
    const LIMIT: f64 = 1e15;
    let lo =
        expand_down(0.0, |z| family.log_cdf(z) <= log_p, LIMIT).ok_or(Error::BracketFailure {
            p: log_p.exp(),
            limit: LIMIT,
        })?;
    let hi = if lo < -1.0 { 0.5 * lo } else { 0.0 };
    bisect(|z| family.log_cdf(z) - log_p, lo, hi)
}

/// Hazard rate `g(z) / (1 - G(z))`.
pub fn hazard<F: LocationFamily + ?Sized>(family: &F, z: f64) -> Result<f64> {
    let tail = family.survival(z);
    if tail <= 0.0 {
        return Err(Error::DegenerateTail(z));
    }
    Ok(family.pdf(z) / tail)
}

/// Smallest `z` with `1 - G(z) < 1e-9`, capped at 40.
pub fn probe_range<F: LocationFamily + ?Sized>(family: &F) -> f64 {
    const TAIL: f64 = 1e-9;
    const CAP: f64 = 40.0;
    if family.survival(CAP) >= TAIL {
        return CAP;
    }
    // survival is decreasing, so the residual changes sign exactly once
    bisect(|z| TAIL - family.survival(z), 0.0, CAP).unwrap_or(CAP)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticCheck {
    pub name: &'static str,
    /// Worst violation seen on the grid; 0 means none.
    pub violation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeGrid {
    pub z_max: f64,
    pub n_grid: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticReport {
    pub family: String,
    pub checks: Vec<DiagnosticCheck>,
    pub grid: ProbeGrid,
}

impl DiagnosticReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&DiagnosticCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn record(name: &'static str, violation: f64, tolerance: f64) -> DiagnosticCheck {
    let violation = if violation.is_finite() {
        violation.max(0.0)
    } else {
        f64::MAX
    };
    DiagnosticCheck {
        name,
        violation,
        tolerance,
        passed: violation <= tolerance,
    }
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Largest positive second difference of `f` over the grid; 0 when `f` is
/// discretely concave.
fn worst_convexity(values: &[f64]) -> f64 {
    values
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .filter(|d| !d.is_nan())
        .fold(0.0, f64::max)
}

/// Runs shape and consistency checks on a family over `[-z_max, z_max]`.
///
/// Symmetry, cdf monotonicity, quantile round trips, normalization and
/// unimodality are always checked. Families declared logconcave are further
/// checked for concave `ln g`, nondecreasing hazard, and concave `ln G`,
/// `ln(1 - G)` on the positive half-line. Failures are reported, never thrown.
pub fn diagnose_family<F: LocationFamily + ?Sized>(
    family: &F,
    n_grid: usize,
) -> Result<DiagnosticReport> {
    if n_grid < 64 {
        return Err(Error::InvalidArgument(format!(
            "n_grid = {n_grid} must be at least 64"
        )));
    }
    let z_max = probe_range(family);
    // odd point count keeps z = 0 (the kink of Laplace-type densities) on the grid
    let half = n_grid / 2;
    let step = z_max / half as f64;
    let full: Vec<f64> = (0..=2 * half).map(|i| -z_max + i as f64 * step).collect();
    let positive: Vec<f64> = (0..=half).map(|i| i as f64 * step).collect();

    let mut checks = Vec::new();

    let symmetry = full
        .iter()
        .map(|&z| (family.cdf(z) + family.cdf(-z) - 1.0).abs())
        .fold(0.0, f64::max);
    checks.push(record("symmetry", symmetry, 1e-12));

    let cdf: Vec<f64> = full.iter().map(|&z| family.cdf(z)).collect();
    let monotone = cdf.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    checks.push(record("cdf_monotone", monotone, 0.0));

    let inverse = (0..n_grid)
        .flat_map(|i| {
            // log-spaced in the lower half, mirrored into the upper half
            let t = i as f64 / (n_grid - 1) as f64;
            let lower = 1e-8f64.powf(1.0 - t) * 0.5f64.powf(t);
            [lower, 1.0 - lower]
        })
        .map(|p| match family.inv_cdf(p) {
            Ok(z) => (family.cdf(z) - p).abs(),
            Err(_) => 1.0,
        })
        .fold(0.0, f64::max);
    checks.push(record("inverse_consistency", inverse, 1e-10));

    let mass = simpson(|z| family.pdf(z), -z_max, 0.0, 8192)
        + simpson(|z| family.pdf(z), 0.0, z_max, 8192);
    let normalization = if family.survival(z_max) < 1e-9 {
        (1.0 - 1e-6 - mass).max(mass - 1.0 - 1e-9).max(0.0)
    } else {
        // truncated probe range: compare against the mass the cdf assigns to it
        (mass - (family.cdf(z_max) - family.cdf(-z_max))).abs()
    };
    checks.push(record("normalization", normalization, 1e-6));

    let pdf: Vec<f64> = positive.iter().map(|&z| family.pdf(z)).collect();
    let unimodal = pdf.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    checks.push(record("unimodality", unimodal, 1e-14));

    if family.is_logconcave() {
        let log_pdf: Vec<f64> = full.iter().map(|&z| family.log_pdf(z)).collect();
        checks.push(record("log_pdf_concavity", worst_convexity(&log_pdf), 1e-9));

        let hazards: Vec<f64> = full
            .iter()
            .map(|&z| hazard(family, z).unwrap_or(f64::NAN))
            .collect();
        let hazard_drop = hazards
            .windows(2)
            .map(|w| {
                if w[0].is_nan() || w[1].is_nan() {
                    f64::INFINITY
                } else {
                    (w[0] - w[1]) / w[0].abs().max(1.0)
                }
            })
            .fold(0.0, f64::max);
        checks.push(record("hazard_monotone", hazard_drop, 1e-9));

        let log_cdf: Vec<f64> = positive.iter().map(|&z| family.log_cdf(z)).collect();
        checks.push(record("log_cdf_concavity", worst_convexity(&log_cdf), 1e-9));

        let log_surv: Vec<f64> = positive.iter().map(|&z| family.survival(z).ln()).collect();
        checks.push(record(
            "log_survival_concavity",
            worst_convexity(&log_surv),
            1e-9,
        ));
    }

    Ok(DiagnosticReport {
        family: family.name().to_string(),
        checks,
        grid: ProbeGrid { z_max, n_grid },
    })
}
