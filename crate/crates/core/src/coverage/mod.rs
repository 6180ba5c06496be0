//! Exact frequentist coverage `C(theta) = P_theta(l(X) <= theta <= u(X))`.
//!
//! Because `l` and `u` are nondecreasing for logconcave families, the coverage
//! event is `u^{-1}(theta) <= X <= l^{-1}(theta)`, and the two inverse
//! endpoints (shifted by `theta`) solve one-dimensional equations:
//!
//! | boundary | equation                                   | domain            |
//! |----------|--------------------------------------------|-------------------|
//! | `x0`     | `G(x) = alpha G(x + theta)`                | `(a, 2 d0]`       |
//! | `x1`     | `2 G(x) - 1 = (1 - alpha) G(x + theta)`    | `[0, inf)`        |
//! | `x2`     | `1 - 2 G(x) = (1 - alpha) G(x + theta)`    | `[2 d0, inf)`     |
//!
//! giving `C = G(x1)` on `[0, a]`, `G(x1) - G(x0)` on `(a, 2 d0]` and
//! `G(x1) - G(x2)` beyond. [`CoverageEngine::via_inversion`] computes the same
//! quantity by numerically inverting `l` and `u` instead, and the
//! [`mc`] module estimates it by simulation.

mod curve;
pub mod mc;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::density::LocationFamily;
use crate::error::{Error, Result};
use crate::hpd::{family_constants, Alpha, FamilyConstants, Hpd};
use crate::roots::{bisect, bisect_predicate, expand_down, expand_up};

pub use curve::{coverage_curve, CoverageCurve};
pub use mc::{coverage_mc, coverage_mc_grid, McEstimate};

/// Roots further out than this are treated as `-inf` (their cdf is 0 in
/// double precision anyway).
const ROOT_SEARCH_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    X0,
    X1,
    X2,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Branch {
    fn label(self) -> &'static str {
        match self {
            Branch::X0 => "x0",
            Branch::X1 => "x1",
            Branch::X2 => "x2",
        }
    }
}

/// Which piece of the coverage formula applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    /// `theta in [0, a]`: `C = G(x1)`.
    BelowA,
    /// `theta in (a, 2 d0]`: `C = G(x1) - G(x0)`.
    Mid,
    /// `theta > 2 d0`: `C = G(x1) - G(x2)`.
    AboveTwoD0,
}

/// At the jump `theta = a` a curve carries both one-sided values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Both,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveragePoint {
    pub theta: f64,
    pub coverage: f64,
    pub region: Region,
    pub side: Side,
    /// Size of the downward jump when `theta` sits on the discontinuity at
    /// `a > 0`; the coverage just right of `a` is `coverage - drop`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop: Option<f64>,
}

/// Coverage machinery for one `(family, alpha)` pair.
#[derive(Debug, Clone)]
pub struct CoverageEngine<'a, F: LocationFamily + ?Sized> {
    hpd: Hpd<'a, F>,
    constants: FamilyConstants,
    ln_alpha: f64,
}

impl<'a, F: LocationFamily + ?Sized> CoverageEngine<'a, F> {
    pub fn new(family: &'a F, alpha: Alpha) -> Result<Self> {
        let hpd = Hpd::new(family, alpha)?;
        let constants = family_constants(family, alpha)?;
        Ok(CoverageEngine {
            hpd,
            constants,
            ln_alpha: alpha.value().ln(),
        })
    }

    pub fn constants(&self) -> &FamilyConstants {
        &self.constants
    }

    pub fn family(&self) -> &'a F {
        self.hpd.family()
    }

    pub fn hpd(&self) -> &Hpd<'a, F> {
        &self.hpd
    }

    fn alpha(&self) -> f64 {
        self.constants.alpha.value()
    }

    /// Landmark comparisons allow a relative `1e-12`: `a` and `d1` coincide
    /// analytically for the Laplace but come from different formulas.
    fn snap(&self, at: f64) -> f64 {
        1e-12 * at.abs().max(1.0)
    }

    fn at_or_below_a(&self, theta: f64) -> bool {
        theta <= self.constants.a + self.snap(self.constants.a)
    }

    fn check_region(&self, branch: Branch, theta: f64) -> Result<()> {
        let c = &self.constants;
        let ok = theta >= 0.0
            && match branch {
                Branch::X0 => !self.at_or_below_a(theta) && theta <= c.two_d0 + self.snap(c.two_d0),
                Branch::X1 => true,
                Branch::X2 => theta >= c.two_d0 - self.snap(c.two_d0),
            };
        if ok {
            Ok(())
        } else {
            Err(Error::OutOfRegion {
                branch: branch.label(),
                theta,
            })
        }
    }

    /// `ln G(x) - ln G(x + theta) - ln alpha`; increasing in `x`.
    fn x0_residual(&self, theta: f64, x: f64) -> f64 {
        self.family().log_cdf_drop(x + theta, theta) - self.ln_alpha
    }

    /// Root of the `x0` equation, or `None` when it lies below
    /// `-ROOT_SEARCH_LIMIT` (only happens as `theta -> a+`).
    fn x0_unchecked(&self, theta: f64) -> Result<Option<f64>> {
        let r = |x: f64| self.x0_residual(theta, x);
        let mut anchor = 0.0;
        if r(anchor) < 0.0 {
            anchor = expand_up(0.0, |x| r(x) >= 0.0, ROOT_SEARCH_LIMIT).ok_or(
                Error::RootNotBracketed {
                    lo: 0.0,
                    hi: ROOT_SEARCH_LIMIT,
                },
            )?;
        }
        let Some(lo) = expand_down(anchor, |x| r(x) < 0.0, ROOT_SEARCH_LIMIT) else {
            return Ok(None);
        };
        let hi = if lo < anchor - 1.0 {
            0.5 * (lo + anchor)
        } else {
            anchor
        };
        bisect(r, lo, hi).map(Some)
    }

    /// Root of `alpha - 2 (1 - G(x)) + (1 - alpha)(1 - G(x + theta)) = 0`,
    /// the `x1` equation written in survival terms.
    fn x1_unchecked(&self, theta: f64) -> Result<f64> {
        let f = self.family();
        let al = self.alpha();
        let c = &self.constants;
        let margin = 1e-6 * (1.0 + c.d1);
        bisect(
            |x| al - 2.0 * f.survival(x) + (1.0 - al) * f.survival(x + theta),
            c.d0 - margin,
            c.d1 + margin,
        )
    }

    /// Root of `alpha - 2 G(x) + (1 - alpha)(1 - G(x + theta)) = 0`.
    fn x2_unchecked(&self, theta: f64) -> Result<f64> {
        let f = self.family();
        let al = self.alpha();
        let c = &self.constants;
        let margin = 1e-6 * (1.0 + c.d1);
        bisect(
            |x| al - 2.0 * f.cdf(x) + (1.0 - al) * f.survival(x + theta),
            -c.d1 - margin,
            -c.d0 + margin,
        )
    }

    /// Solves the equation defining `branch` at `theta`.
    pub fn solve(&self, branch: Branch, theta: f64) -> Result<f64> {
        self.check_region(branch, theta)?;
        match branch {
            Branch::X0 => self.x0_unchecked(theta)?.ok_or(Error::RootNotBracketed {
                lo: -ROOT_SEARCH_LIMIT,
                hi: 0.0,
            }),
            Branch::X1 => self.x1_unchecked(theta),
            Branch::X2 => self.x2_unchecked(theta),
        }
    }

    /// Downward jump of the coverage at `theta = a`: `G(x0(a+))`, where
    /// `x0(a+) = sup{x : G(x) <= alpha G(x + a)}` is the right limit of `x0`.
    /// Zero when `a = 0` or when `u` only approaches `a` asymptotically.
    pub fn drop_at_a(&self) -> Result<f64> {
        let a = self.constants.a;
        if a <= 0.0 {
            return Ok(0.0);
        }
        let holds = |x: f64| self.x0_residual(a, x) <= 0.0;
        if holds(0.0) {
            let hi = expand_up(0.0, |x| !holds(x), ROOT_SEARCH_LIMIT).ok_or(
                Error::RootNotBracketed {
                    lo: 0.0,
                    hi: ROOT_SEARCH_LIMIT,
                },
            )?;
            let lo = if hi > 1.0 { 0.5 * hi } else { 0.0 };
            return Ok(self.family().cdf(bisect_predicate(holds, lo, hi)));
        }
        let Some(lo) = expand_down(0.0, holds, ROOT_SEARCH_LIMIT) else {
            return Ok(0.0);
        };
        let hi = if lo < -1.0 { 0.5 * lo } else { 0.0 };
        Ok(self.family().cdf(bisect_predicate(holds, lo, hi)))
    }

    /// `C(theta)` from the boundary equations. At `theta = a > 0` this is the
    /// left limit, and the jump is attached as [`CoveragePoint::drop`].
    pub fn coverage(&self, theta: f64) -> Result<CoveragePoint> {
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "theta = {theta} must be finite and >= 0"
            )));
        }
        let f = self.family();
        let c = &self.constants;
        let upper_part = f.cdf(self.x1_unchecked(theta)?);
        let point = |coverage, region, drop| CoveragePoint {
            theta,
            coverage,
            region,
            side: Side::Both,
            drop,
        };
        if self.at_or_below_a(theta) {
            let drop = if c.a > 0.0 && (theta - c.a).abs() <= self.snap(c.a) {
                Some(self.drop_at_a()?)
            } else {
                None
            };
            Ok(point(upper_part, Region::BelowA, drop))
        } else if theta <= c.two_d0 {
            let lower_part = self.x0_unchecked(theta)?.map_or(0.0, |x| f.cdf(x));
            Ok(point(upper_part - lower_part, Region::Mid, None))
        } else {
            let lower_part = f.cdf(self.x2_unchecked(theta)?);
            Ok(point(upper_part - lower_part, Region::AboveTwoD0, None))
        }
    }

    /// `C(theta) = G(l^{-1}(theta) - theta) - G(u^{-1}(theta) - theta)` with
    /// both generalized inverses found by bisection on the interval endpoints
    /// themselves. Shares no code with the boundary equations.
    pub fn via_inversion(&self, theta: f64) -> Result<f64> {
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "theta = {theta} must be finite and >= 0"
            )));
        }
        let hpd = &self.hpd;
        let f = self.family();
        let c = &self.constants;

        // l^{-1}(theta) = sup{x : l(x) <= theta}; l vanishes on (-inf, d0]
        let l_inv = if theta == 0.0 {
            hpd.d0()
        } else {
            bisect(
                |x| hpd.lower(x).unwrap_or(f64::NAN) - theta,
                hpd.d0(),
                theta + c.d1 + 1.0,
            )?
        };

        // u^{-1}(theta) = inf{x : u(x) >= theta}; -inf when u >= theta everywhere
        let u_inv = if self.at_or_below_a(theta) {
            None
        } else {
            let resid = |x: f64| hpd.upper(x).unwrap_or(f64::NAN) - theta;
            if resid(0.0) < 0.0 {
                Some(bisect(resid, 0.0, theta)?)
            } else {
                match expand_down(0.0, |x| resid(x) < 0.0, ROOT_SEARCH_LIMIT) {
                    None => None,
                    Some(lo) => {
                        let hi = if lo < -1.0 { 0.5 * lo } else { 0.0 };
                        Some(bisect(resid, lo, hi)?)
                    }
                }
            }
        };

        let upper_part = f.cdf(l_inv - theta);
        let lower_part = u_inv.map_or(0.0, |x| f.cdf(x - theta));
        Ok(upper_part - lower_part)
    }

    /// Closed-form slope of `x1` or `x0` on `[d1, 2 d0]`, by implicit
    /// differentiation of their defining equations.
    pub fn derivative(&self, branch: Branch, theta: f64) -> Result<f64> {
        let c = &self.constants;
        let inside = theta >= c.d1 - self.snap(c.d1) && theta <= c.two_d0 + self.snap(c.two_d0);
        if !inside || branch == Branch::X2 {
            return Err(Error::OutOfRegion {
                branch: branch.label(),
                theta,
            });
        }
        let f = self.family();
        let al = self.alpha();
        let x = self.solve(branch, theta)?;
        let shifted = f.pdf(x + theta);
        Ok(match branch {
            Branch::X1 => (1.0 - al) * shifted / (2.0 * f.pdf(x) - (1.0 - al) * shifted),
            Branch::X0 => al * shifted / (f.pdf(x) - al * shifted),
            Branch::X2 => unreachable!(),
        })
    }
}

pub fn solve_boundary<F: LocationFamily + ?Sized>(
    family: &F,
    alpha: Alpha,
    branch: Branch,
    theta: f64,
) -> Result<f64> {
    CoverageEngine::new(family, alpha)?.solve(branch, theta)
}

pub fn coverage_exact<F: LocationFamily + ?Sized>(
    family: &F,
    alpha: Alpha,
    theta: f64,
) -> Result<CoveragePoint> {
    CoverageEngine::new(family, alpha)?.coverage(theta)
}

pub fn coverage_via_inversion<F: LocationFamily + ?Sized>(
    family: &F,
    alpha: Alpha,
    theta: f64,
) -> Result<f64> {
    CoverageEngine::new(family, alpha)?.via_inversion(theta)
}

pub fn boundary_derivative<F: LocationFamily + ?Sized>(
    family: &F,
    alpha: Alpha,
    branch: Branch,
    theta: f64,
) -> Result<f64> {
    CoverageEngine::new(family, alpha)?.derivative(branch, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{Laplace, Normal, PolyExp, StudentT};

    fn alpha(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    fn families() -> [&'static dyn LocationFamily; 3] {
        [&Normal, &Laplace, &PolyExp]
    }

    #[test]
    fn boundary_landmarks() {
        for f in families() {
            for al in [0.05, 0.1, 0.2] {
                let e = CoverageEngine::new(f, alpha(al)).unwrap();
                let c = *e.constants();
                let name = f.name();
                assert!(
                    (e.solve(Branch::X1, 0.0).unwrap() - c.d0).abs() < 1e-12,
                    "{name}"
                );
                assert!(
                    (e.solve(Branch::X1, 1e-9).unwrap() - c.d0).abs() < 1e-8,
                    "{name}"
                );
                assert!(
                    (e.solve(Branch::X0, c.two_d0).unwrap() + c.d0).abs() < 1e-10,
                    "{name}"
                );
                assert!(
                    (e.solve(Branch::X2, c.two_d0).unwrap() + c.d0).abs() < 1e-10,
                    "{name}"
                );
                if c.a < c.d1 - 1e-9 {
                    assert!(
                        (e.solve(Branch::X0, c.d1).unwrap() + c.d1).abs() < 1e-10,
                        "{name}"
                    );
                }
            }
        }
        let x1 = solve_boundary(&Normal, alpha(0.1), Branch::X1, 10.0).unwrap();
        assert!((x1 - 1.6449).abs() < 1e-3);
    }

    #[test]
    fn out_of_region() {
        let e = CoverageEngine::new(&Laplace, alpha(0.05)).unwrap();
        let c = *e.constants();
        assert!(matches!(
            e.solve(Branch::X0, c.a),
            Err(Error::OutOfRegion { .. })
        ));
        assert!(matches!(
            e.solve(Branch::X0, c.two_d0 + 0.1),
            Err(Error::OutOfRegion { .. })
        ));
        assert!(matches!(
            e.solve(Branch::X2, 1.0),
            Err(Error::OutOfRegion { .. })
        ));
        assert!(matches!(
            e.derivative(Branch::X1, 0.5),
            Err(Error::OutOfRegion { .. })
        ));
        assert!(matches!(
            e.derivative(Branch::X2, c.two_d0),
            Err(Error::OutOfRegion { .. })
        ));
        assert!(e.coverage(-1.0).is_err());
    }

    #[test]
    fn refuses_student() {
        let t3 = StudentT::new(3.0).unwrap();
        assert!(matches!(
            CoverageEngine::new(&t3, alpha(0.1)),
            Err(Error::NonLogconcaveFamily(_))
        ));
    }

    #[test]
    fn coverage_at_zero_and_infinity() {
        for f in families() {
            for al in [0.05, 0.1] {
                let e = CoverageEngine::new(f, alpha(al)).unwrap();
                let p = e.coverage(0.0).unwrap();
                assert_eq!(p.region, Region::BelowA);
                assert!((p.coverage - 1.0 / (1.0 + al)).abs() < 1e-12);
                let far = e.coverage(50.0).unwrap();
                assert_eq!(far.region, Region::AboveTwoD0);
                assert!((far.coverage - (1.0 - al)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn normal_minimum_value() {
        let e = CoverageEngine::new(&Normal, alpha(0.1)).unwrap();
        let c = e.constants().two_d0;
        let p = e.coverage(c).unwrap();
        assert_eq!(p.region, Region::Mid);
        assert!((p.coverage - 0.859).abs() < 1e-3, "{}", p.coverage);
    }

    #[test]
    fn laplace_drop() {
        let e = CoverageEngine::new(&Laplace, alpha(0.05)).unwrap();
        let a = e.constants().a;
        let left = e.coverage(a).unwrap();
        assert_eq!(left.region, Region::BelowA);
        let drop = left.drop.unwrap();
        assert!((drop - 0.025).abs() < 1e-9, "{drop}");
        let right = e.coverage(a + 1e-7).unwrap();
        assert!((left.coverage - right.coverage - 0.025).abs() < 1e-3);
        // exponential-tail family whose upper endpoint only tends to a: no jump
        let e = CoverageEngine::new(&PolyExp, alpha(0.1)).unwrap();
        assert_eq!(e.drop_at_a().unwrap(), 0.0);
    }

    #[test]
    fn inversion_agrees() {
        for (f, al, theta) in [
            (&Normal as &dyn LocationFamily, 0.1, 1.0),
            (&Laplace, 0.05, 2.0),
            (&PolyExp, 0.1, 5.0),
            (&PolyExp, 0.1, 2.4),
            (&Normal, 0.1, 0.01),
        ] {
            let e = CoverageEngine::new(f, alpha(al)).unwrap();
            let exact = e.coverage(theta).unwrap().coverage;
            let inv = e.via_inversion(theta).unwrap();
            assert!(
                (exact - inv).abs() < 1e-9,
                "{} {theta}: {exact} vs {inv}",
                f.name()
            );
        }
    }

    #[test]
    fn derivative_at_two_d0() {
        for f in families() {
            let e = CoverageEngine::new(f, alpha(0.1)).unwrap();
            let c = *e.constants();
            let d = e.derivative(Branch::X0, c.two_d0).unwrap();
            assert!((d - 0.1 / 0.9).abs() < 1e-8, "{}: {d}", f.name());
        }
    }
}
