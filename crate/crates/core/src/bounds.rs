//! Analytic coverage bounds and the audit of a computed curve against them.

use std::fmt::Write as _;

use serde::Serialize;

use crate::coverage::{CoverageCurve, CoverageEngine, Side};
use crate::density::{diagnose_family, DiagnosticReport, LocationFamily};
use crate::error::{Error, Result};
use crate::hpd::Alpha;

/// Tolerance on analytic inequalities.
pub const BOUND_TOL: f64 = 1e-9;
/// Allowed violation per adjacent pair in the monotonicity audits.
pub const MONOTONE_SLACK: f64 = 1e-10;

/// `(1 - 3 alpha / 2, 1 - 3 alpha / 2 + alpha^2 / (1 + alpha))`, the interval
/// known to contain the minimum coverage.
pub fn min_coverage_bracket(alpha: Alpha) -> (f64, f64) {
    let al = alpha.value();
    let lower = 1.0 - 1.5 * al;
    (lower, lower + al * al / (1.0 + al))
}

/// The older strict lower bound `(1 - alpha) / (1 + alpha)`.
pub fn legacy_lower_bound(alpha: Alpha) -> f64 {
    let al = alpha.value();
    (1.0 - al) / (1.0 + al)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst signed slack over the audited points; negative means violated.
    pub margin: f64,
}

impl AuditResult {
    fn new(name: &'static str, margin: f64, allowed: f64) -> Self {
        AuditResult {
            name,
            passed: margin >= -allowed,
            margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub family: String,
    pub alpha: f64,
    pub new_lower_bound: f64,
    pub bracket_upper: f64,
    pub legacy_lower_bound: f64,
    pub sup_upper: f64,
    pub sup_lower: f64,
    pub min_location: f64,
    pub audited_min: f64,
    pub audited_argmin: f64,
    pub observed_sup: f64,
    pub grid_step: f64,
    pub audit_results: Vec<AuditResult>,
}

impl BoundsReport {
    pub fn all_passed(&self) -> bool {
        self.audit_results.iter().all(|a| a.passed)
    }

    pub fn audit(&self, name: &str) -> Option<&AuditResult> {
        self.audit_results.iter().find(|a| a.name == name)
    }

    /// One `key=value` pair per line; audits appear as
    /// `audit.<name>.passed` and `audit.<name>.margin`.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(out, "{k}={v}");
        };
        kv("family", &self.family);
        kv("alpha", &self.alpha);
        kv("new_lower_bound", &self.new_lower_bound);
        kv("bracket_upper", &self.bracket_upper);
        kv("legacy_lower_bound", &self.legacy_lower_bound);
        kv("sup_upper", &self.sup_upper);
        kv("sup_lower", &self.sup_lower);
        kv("min_location", &self.min_location);
        kv("audited_min", &self.audited_min);
        kv("audited_argmin", &self.audited_argmin);
        kv("observed_sup", &self.observed_sup);
        kv("grid_step", &self.grid_step);
        for a in &self.audit_results {
            kv(&format!("audit.{}.passed", a.name), &a.passed);
            kv(&format!("audit.{}.margin", a.name), &a.margin);
        }
        kv("all_passed", &self.all_passed());
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }
}

fn min_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::INFINITY, f64::min)
}

/// Audits `curve` against every analytic property of the coverage function.
///
/// Audits (margins are positive when satisfied):
/// - `coverage_at_zero`: `C(0) = 1 / (1 + alpha)`;
/// - `legacy_strict`: `C > (1 - alpha) / (1 + alpha)` everywhere;
/// - `sup_upper`: `C <= 1 - alpha / 2` everywhere;
/// - `plateau_lower`: `C >= 1 / (1 + alpha)` on `[0, a]`;
/// - `nominal_until_d2`: `C >= 1 - alpha` on `[0, d2]`;
/// - `subnominal_from_d1`: `C <= 1 - alpha` on `[d1, inf)`;
/// - `nonincreasing_d1_to_two_d0`, `nondecreasing_after_two_d0`: shape;
/// - `min_bracket`: `C(2 d0)` lies in [`min_coverage_bracket`];
/// - `dominates_min_until_d1`: `C >= C(2 d0)` on `[0, d1]`;
/// - `argmin_at_two_d0`: the curve minimum sits at `2 d0` within one step;
/// - `sup_lower`: `C(d2) >= G(x1(d2)) - alpha^2 / (1 + alpha)`.
///
/// At the jump `theta = a` the left value counts for properties stated on
/// closed intervals ending at `a` or `d1`, the right value for those starting
/// there.
pub fn bound_report<F: LocationFamily + ?Sized>(
    family: &F,
    alpha: Alpha,
    curve: &CoverageCurve,
) -> Result<BoundsReport> {
    if curve.family != family.name() || curve.alpha != alpha {
        return Err(Error::InvalidArgument(format!(
            "curve was built for ({}, {}), not ({}, {})",
            curve.family,
            curve.alpha,
            family.name(),
            alpha
        )));
    }
    if curve.points.is_empty() {
        return Err(Error::InvalidArgument("curve has no points".into()));
    }
    let engine = CoverageEngine::new(family, alpha)?;
    let c = *engine.constants();
    let al = alpha.value();
    let (new_lower, bracket_upper) = min_coverage_bracket(alpha);
    let legacy = legacy_lower_bound(alpha);
    let sup_upper = 1.0 - al / 2.0;
    let nominal = 1.0 - al;
    let near = |t: f64, m: f64| (t - m).abs() <= 1e-12 * m.abs().max(1.0);
    let le = |t: f64, m: f64| t <= m || near(t, m);
    let ge = |t: f64, m: f64| t >= m || near(t, m);

    let x1_d2 = engine.solve(crate::coverage::Branch::X1, c.d2)?;
    let sup_lower = family.cdf(x1_d2) - al * al / (1.0 + al);
    let c_d2 = match curve.point_at(c.d2) {
        Some(p) => p.coverage,
        None => engine.coverage(c.d2)?.coverage,
    };
    let c_min_loc = match curve.point_at(c.two_d0) {
        Some(p) => p.coverage,
        None => engine.coverage(c.two_d0)?.coverage,
    };

    let pts = &curve.points;
    let min = curve.min_point().expect("nonempty");
    let max = curve.max_point().expect("nonempty");
    let grid_step = curve.max_step();

    let mut audits = Vec::new();

    if let Some(p0) = curve.point_at(0.0) {
        let target = 1.0 / (1.0 + al);
        audits.push(AuditResult::new(
            "coverage_at_zero",
            -(p0.coverage - target).abs(),
            BOUND_TOL,
        ));
    }
    audits.push(AuditResult::new(
        "legacy_strict",
        min_of(pts.iter().map(|p| p.coverage - legacy)),
        0.0,
    ));
    // strict inequality: a zero margin is a failure
    if let Some(last) = audits.last_mut() {
        last.passed = last.margin > 0.0;
    }
    audits.push(AuditResult::new(
        "sup_upper",
        min_of(pts.iter().map(|p| sup_upper - p.coverage)),
        BOUND_TOL,
    ));
    audits.push(AuditResult::new(
        "plateau_lower",
        min_of(
            pts.iter()
                .filter(|p| le(p.theta, c.a) && p.side != Side::Right)
                .map(|p| p.coverage - 1.0 / (1.0 + al)),
        ),
        BOUND_TOL,
    ));
    audits.push(AuditResult::new(
        "nominal_until_d2",
        min_of(
            pts.iter()
                .filter(|p| le(p.theta, c.d2) && p.side != Side::Right)
                .map(|p| p.coverage - nominal),
        ),
        BOUND_TOL,
    ));
    audits.push(AuditResult::new(
        "subnominal_from_d1",
        min_of(
            pts.iter()
                .filter(|p| ge(p.theta, c.d1) && p.side != Side::Left)
                .map(|p| nominal - p.coverage),
        ),
        BOUND_TOL,
    ));

    let between: Vec<f64> = pts
        .iter()
        .filter(|p| p.theta > c.d1 && le(p.theta, c.two_d0) && p.side != Side::Left)
        .map(|p| p.coverage)
        .collect();
    audits.push(AuditResult::new(
        "nonincreasing_d1_to_two_d0",
        min_of(between.windows(2).map(|w| w[0] - w[1])).min(f64::MAX),
        MONOTONE_SLACK,
    ));
    let after: Vec<f64> = pts
        .iter()
        .filter(|p| ge(p.theta, c.two_d0) && p.side != Side::Left)
        .map(|p| p.coverage)
        .collect();
    audits.push(AuditResult::new(
        "nondecreasing_after_two_d0",
        min_of(after.windows(2).map(|w| w[1] - w[0])).min(f64::MAX),
        MONOTONE_SLACK,
    ));

    audits.push(AuditResult::new(
        "min_bracket",
        (c_min_loc - new_lower).min(bracket_upper - c_min_loc),
        BOUND_TOL,
    ));
    audits.push(AuditResult::new(
        "curve_min_in_bracket",
        (min.coverage - new_lower).min(bracket_upper - min.coverage),
        BOUND_TOL,
    ));
    audits.push(AuditResult::new(
        "dominates_min_until_d1",
        min_of(
            pts.iter()
                .filter(|p| le(p.theta, c.d1) && p.side != Side::Right)
                .map(|p| p.coverage - c_min_loc),
        ),
        BOUND_TOL,
    ));
    audits.push(AuditResult::new(
        "argmin_at_two_d0",
        grid_step - (min.theta - c.two_d0).abs(),
        0.0,
    ));
    audits.push(AuditResult::new("sup_lower", c_d2 - sup_lower, BOUND_TOL));
    audits.push(AuditResult::new(
        "sup_upper_at_sup_lower",
        max.coverage - c_d2,
        BOUND_TOL,
    ));

    Ok(BoundsReport {
        family: family.name().to_string(),
        alpha: al,
        new_lower_bound: new_lower,
        bracket_upper,
        legacy_lower_bound: legacy,
        sup_upper,
        sup_lower,
        min_location: c.two_d0,
        audited_min: min.coverage,
        audited_argmin: min.theta,
        observed_sup: max.coverage,
        grid_step,
        audit_results: audits,
    })
}

/// Minimum slack of the two doubling-ratio inequalities satisfied by every
/// symmetric logconcave density, on a grid over `[0, z_max]`:
///
/// `g(z) / g(2z) >= 1 / (2 (1 - G(z))) - 1` and
/// `(1 - G(z)) / (1 - G(2z)) >= 1 / (2 (1 - G(z))) - 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingRatioAudit {
    pub z_max: f64,
    pub n_grid: usize,
    pub density_slack: f64,
    pub density_worst_z: f64,
    pub survival_slack: f64,
    pub survival_worst_z: f64,
    pub passed: bool,
}

pub fn check_doubling_ratios<F: LocationFamily + ?Sized>(
    family: &F,
    z_max: f64,
    n_grid: usize,
) -> Result<DoublingRatioAudit> {
    if !(z_max > 0.0) || n_grid < 2 {
        return Err(Error::InvalidArgument(format!(
            "need z_max > 0 and n_grid >= 2, got {z_max} and {n_grid}"
        )));
    }
    let mut density = (f64::INFINITY, 0.0);
    let mut survival = (f64::INFINITY, 0.0);
    for i in 0..n_grid {
        let z = z_max * i as f64 / (n_grid - 1) as f64;
        let tail = family.survival(z);
        let rhs = 0.5 / tail - 1.0;
        let d = (family.log_pdf(z) - family.log_pdf(2.0 * z)).exp() - rhs;
        let s = tail / family.survival(2.0 * z) - rhs;
        if d < density.0 || d.is_nan() {
            density = (d, z);
        }
        if s < survival.0 || s.is_nan() {
            survival = (s, z);
        }
    }
    Ok(DoublingRatioAudit {
        z_max,
        n_grid,
        density_slack: density.0,
        density_worst_z: density.1,
        survival_slack: survival.0,
        survival_worst_z: survival.1,
        passed: density.0 >= 0.0 && survival.0 >= 0.0,
    })
}

/// Everything the `audit` command checks for one `(family, alpha)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullAudit {
    pub diagnostics: DiagnosticReport,
    pub doubling_ratios: DoublingRatioAudit,
    pub bounds: BoundsReport,
}

impl FullAudit {
    pub fn passed(&self) -> bool {
        self.diagnostics.all_passed() && self.doubling_ratios.passed && self.bounds.all_passed()
    }

    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for c in &self.diagnostics.checks {
            let _ = writeln!(out, "diagnostic.{}.passed={}", c.name, c.passed);
            let _ = writeln!(out, "diagnostic.{}.violation={}", c.name, c.violation);
        }
        let d = &self.doubling_ratios;
        let _ = writeln!(out, "doubling.density_slack={}", d.density_slack);
        let _ = writeln!(out, "doubling.survival_slack={}", d.survival_slack);
        let _ = writeln!(out, "doubling.passed={}", d.passed);
        out.push_str(&self.bounds.to_key_value());
        let _ = writeln!(out, "passed={}", self.passed());
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Runs family diagnostics (256-point grid), the doubling-ratio check (512
/// points on `[0, 8]`) and [`bound_report`] on `curve`.
pub fn full_audit<F: LocationFamily + ?Sized>(
    family: &F,
    alpha: Alpha,
    curve: &CoverageCurve,
) -> Result<FullAudit> {
    Ok(FullAudit {
        diagnostics: diagnose_family(family, 256)?,
        doubling_ratios: check_doubling_ratios(family, 8.0, 512)?,
        bounds: bound_report(family, alpha, curve)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::coverage_curve;
    use crate::families::{Laplace, Normal, PolyExp, StudentT};

    #[test]
    fn brackets() {
        let (lo, hi) = min_coverage_bracket(Alpha::new(0.1).unwrap());
        assert!((lo - 0.85).abs() < 1e-15);
        assert!((hi - 0.859_090_909_090_909).abs() < 1e-12);
        let third = Alpha::new(1.0 / 3.0).unwrap();
        let (lo, hi) = min_coverage_bracket(third);
        assert!((lo - 0.5).abs() < 1e-15 && (hi - 7.0 / 12.0).abs() < 1e-15);
        assert!((legacy_lower_bound(third) - 0.5).abs() < 1e-15);
        for v in [0.01, 0.05, 0.1, 0.2, 0.32] {
            let a = Alpha::new(v).unwrap();
            assert!(min_coverage_bracket(a).0 > legacy_lower_bound(a));
        }
    }

    #[test]
    fn doubling_ratios_laplace_slack_is_one() {
        let r = check_doubling_ratios(&Laplace, 8.0, 512).unwrap();
        assert!(r.passed);
        assert!((r.density_slack - 1.0).abs() < 1e-9, "{}", r.density_slack);
        for f in [&Normal as &dyn LocationFamily, &PolyExp] {
            assert!(check_doubling_ratios(f, 8.0, 512).unwrap().passed);
        }
    }

    #[test]
    fn normal_report() {
        let al = Alpha::new(0.1).unwrap();
        let curve = coverage_curve(&Normal, al, 10.0, 400).unwrap();
        let r = bound_report(&Normal, al, &curve).unwrap();
        for a in &r.audit_results {
            assert!(a.passed, "{a:?}");
        }
        assert!((r.sup_lower - 0.939).abs() < 1e-3, "{}", r.sup_lower);
        assert_eq!(r.sup_upper, 0.95);
        let kv = r.to_key_value();
        assert!(kv.contains("audit.min_bracket.passed=true"));
        assert!(r.to_json().unwrap().contains("\"audited_min\""));
    }

    #[test]
    fn rejects_mismatch_and_non_logconcave() {
        let al = Alpha::new(0.1).unwrap();
        let curve = coverage_curve(&Normal, al, 10.0, 64).unwrap();
        assert!(bound_report(&Laplace, al, &curve).is_err());
        let mut fake = curve.clone();
        fake.family = "student:3".into();
        let t3 = StudentT::new(3.0).unwrap();
        assert!(matches!(
            bound_report(&t3, al, &fake),
            Err(Error::NonLogconcaveFamily(_))
        ));
    }
}
