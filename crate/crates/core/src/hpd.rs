//! The HPD credible interval `[l(x), u(x)]` under the flat prior on
//! `[0, inf)`, and the constants `d0`, `d1`, `d2`, `2 d0`, `a` that organize
//! its coverage.
//!
//! With posterior density `g(theta - x) / G(x)` on `theta >= 0`:
//!
//! * for `x <= d0` the interval is one-sided, `[0, x - G^{-1}(alpha G(x))]`;
//! * for `x > d0` it is symmetric about `x` with half-width
//!   `q = G^{-1}(1/2 + (1 - alpha) G(x) / 2)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::LocationFamily;
use crate::error::{Error, Result};
use crate::roots::{bisect, expand_up};

/// Miscoverage level; the interval has posterior probability `1 - alpha`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub const MIN: f64 = 1e-6;
    pub const MAX: f64 = 1.0 - 1e-6;

    pub fn new(value: f64) -> Result<Self> {
        if (Self::MIN..=Self::MAX).contains(&value) {
            Ok(Alpha(value))
        } else {
            Err(Error::InvalidAlpha(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Alpha::new(v)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

impl FromStr for Alpha {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("alpha `{s}` is not a number")))?;
        Alpha::new(v)
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CredibleInterval {
    pub lower: f64,
    pub upper: f64,
}

impl CredibleInterval {
    pub fn contains(&self, theta: f64) -> bool {
        self.lower <= theta && theta <= self.upper
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyConstants {
    /// `G^{-1}(1/(1+alpha))`, where the interval switches from one-sided to
    /// symmetric.
    pub d0: f64,
    /// `G^{-1}(1 - alpha/2)`.
    pub d1: f64,
    /// `G^{-1}(1 - alpha^2/(1+alpha)) - d0`; coverage is at least nominal up to here.
    pub d2: f64,
    /// Location of the minimum coverage.
    pub two_d0: f64,
    /// `lim_{x -> -inf} u(x)`.
    pub a: f64,
    pub alpha: Alpha,
}

/// Observations below this use the log-scale path for the one-sided upper
/// endpoint; `G(x)` underflows for the Normal near `x = -38`.
const LOG_PATH_BELOW: f64 = -40.0;

/// Interval builder for one `(family, alpha)` pair; caches `d0`.
#[derive(Debug, Clone)]
pub struct Hpd<'a, F: LocationFamily + ?Sized> {
    family: &'a F,
    alpha: f64,
    ln_alpha: f64,
    d0: f64,
}

impl<'a, F: LocationFamily + ?Sized> Hpd<'a, F> {
    /// Fails with [`Error::NonLogconcaveFamily`] for families without the
    /// monotone upper endpoint the coverage analysis depends on.
    pub fn new(family: &'a F, alpha: Alpha) -> Result<Self> {
        if !family.is_logconcave() {
            return Err(Error::NonLogconcaveFamily(family.name().to_string()));
        }
        Self::new_unchecked(family, alpha)
    }

    /// Builds intervals for any family, logconcave or not. Intended for
    /// counterexample exploration.
    pub fn new_unchecked(family: &'a F, alpha: Alpha) -> Result<Self> {
        let alpha = alpha.value();
        let d0 = -family.inv_cdf(alpha / (1.0 + alpha))?;
        Ok(Hpd {
            family,
            alpha,
            ln_alpha: alpha.ln(),
            d0,
        })
    }

    pub fn family(&self) -> &'a F {
        self.family
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    fn half_width(&self, x: f64) -> Result<f64> {
        self.family
            .inv_cdf(0.5 + 0.5 * (1.0 - self.alpha) * self.family.cdf(x))
    }

    /// `x - G^{-1}(alpha G(x))`, i.e. the `delta > 0` with
    /// `G(x - delta) = alpha G(x)`.
    fn one_sided_upper(&self, x: f64) -> Result<f64> {
        if x >= LOG_PATH_BELOW {
            let p = self.alpha * self.family.cdf(x);
            if p > 1e-290 {
                return Ok(x - self.family.inv_cdf(p)?);
            }
        }
        let f = |d: f64| self.family.log_cdf_drop(x, d) - self.ln_alpha;
        let hi = expand_up(0.0, |d| f(d) <= 0.0, 1e15)
            .ok_or(Error::RootNotBracketed { lo: 0.0, hi: 1e15 })?;
        let lo = if hi > 1.0 { 0.5 * hi } else { 0.0 };
        bisect(f, lo, hi)
    }

    pub fn lower(&self, x: f64) -> Result<f64> {
        if x <= self.d0 {
            Ok(0.0)
        } else {
            Ok((x - self.half_width(x)?).max(0.0))
        }
    }

    pub fn upper(&self, x: f64) -> Result<f64> {
        if x <= self.d0 {
            self.one_sided_upper(x)
        } else {
            Ok(x + self.half_width(x)?)
        }
    }

    pub fn interval(&self, x: f64) -> Result<CredibleInterval> {
        if x <= self.d0 {
            Ok(CredibleInterval {
                lower: 0.0,
                upper: self.one_sided_upper(x)?,
            })
        } else {
            let q = self.half_width(x)?;
            Ok(CredibleInterval {
                lower: (x - q).max(0.0),
                upper: x + q,
            })
        }
    }

    /// Posterior probability of `[l(x), u(x)]`,
    /// `(G(u - x) - G(l - x)) / G(x)`, evaluated through reflected log-cdf
    /// drops so it stays accurate when `G(x)` underflows.
    pub fn posterior_mass(&self, x: f64) -> Result<f64> {
        let iv = self.interval(x)?;
        let f = self.family;
        Ok(f.log_cdf_drop(x, iv.lower).exp() - f.log_cdf_drop(x, iv.upper).exp())
    }
}

pub fn credible_interval<F: LocationFamily + ?Sized>(
    family: &F,
    alpha: Alpha,
    x: f64,
) -> Result<CredibleInterval> {
    Hpd::new(family, alpha)?.interval(x)
}

/// [`credible_interval`] without the logconcavity gate.
pub fn credible_interval_unchecked<F: LocationFamily + ?Sized>(
    family: &F,
    alpha: Alpha,
    x: f64,
) -> Result<CredibleInterval> {
    Hpd::new_unchecked(family, alpha)?.interval(x)
}

pub fn posterior_mass<F: LocationFamily + ?Sized>(family: &F, alpha: Alpha, x: f64) -> Result<f64> {
    Hpd::new_unchecked(family, alpha)?.posterior_mass(x)
}

/// `lim_{x -> -inf} u(x)`: the family's closed form when it has one,
/// otherwise [`limit_a_numeric`].
pub fn limit_a<F: LocationFamily + ?Sized>(family: &F, alpha: Alpha) -> Result<f64> {
    match family.tail_limit_a(alpha.value()) {
        Some(a) => Ok(a),
        None => limit_a_numeric(family, alpha),
    }
}

const LIMIT_TOL: f64 = 1e-9;
const LIMIT_DOUBLINGS: usize = 24;

/// Probes `u` at `x = -10, -20, -40, ...`.
///
/// Returns the first probe that moves by less than `1e-9`. For exponential
/// tails the approach is only `O(1/|x|)`, so the probes are also combined as
/// `2 u(2x) - u(x)`, which cancels the leading term, and a settled
/// extrapolate is accepted as well. Results below `1e-9` are reported as 0.
/// An upper endpoint that grows along the probes means the family is not
/// logconcave and the limit does not exist.
pub fn limit_a_numeric<F: LocationFamily + ?Sized>(family: &F, alpha: Alpha) -> Result<f64> {
    let hpd = Hpd::new_unchecked(family, alpha)?;
    let clamp = |v: f64| if v < LIMIT_TOL { 0.0 } else { v };
    let mut x = -10.0;
    let mut prev = hpd.upper(x)?;
    let mut prev_extrapolated: Option<f64> = None;
    for _ in 0..LIMIT_DOUBLINGS {
        x *= 2.0;
        let u = hpd.upper(x)?;
        if u > prev + LIMIT_TOL * prev.abs().max(1.0) {
            return Err(Error::LimitDiverged { x, last: u });
        }
        if (u - prev).abs() < LIMIT_TOL {
            return Ok(clamp(u));
        }
        let extrapolated = 2.0 * u - prev;
        if let Some(p) = prev_extrapolated {
            if (extrapolated - p).abs() < LIMIT_TOL {
                return Ok(clamp(extrapolated));
            }
        }
        prev_extrapolated = Some(extrapolated);
        prev = u;
    }
    Err(Error::LimitNotConverged {
        last: prev_extrapolated.unwrap_or(prev),
    })
}

pub fn family_constants<F: LocationFamily + ?Sized>(
    family: &F,
    alpha: Alpha,
) -> Result<FamilyConstants> {
    let al = alpha.value();
    // lower-tail quantiles reflected, for full precision at small alpha
    let d0 = -family.inv_cdf(al / (1.0 + al))?;
    let d1 = -family.inv_cdf(0.5 * al)?;
    let d2 = -family.inv_cdf(al * al / (1.0 + al))? - d0;
    let a = limit_a(family, alpha)?;
    if a > d1 + 1e-9 * d1.max(1.0) {
        return Err(Error::TailLimitExceedsD1 { a, d1 });
    }
    Ok(FamilyConstants {
        d0,
        d1,
        d2,
        two_d0: 2.0 * d0,
        a,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{Laplace, Normal, PolyExp, StudentT};

    fn alpha(v: f64) -> Alpha {
        Alpha::new(v).unwrap()
    }

    #[test]
    fn alpha_range() {
        assert!(Alpha::new(0.0).is_err());
        assert!(Alpha::new(1e-7).is_err());
        assert!(Alpha::new(1.0).is_err());
        assert!(Alpha::new(1e-6).is_ok());
        assert!("0.1".parse::<Alpha>().is_ok());
        assert!("x".parse::<Alpha>().is_err());
    }

    #[test]
    fn landmark_observations() {
        for al in [0.05, 0.1, 0.3] {
            for fam in [&Normal as &dyn LocationFamily, &Laplace, &PolyExp] {
                let c = family_constants(fam, alpha(al)).unwrap();
                let at_d0 = credible_interval(fam, alpha(al), c.d0).unwrap();
                assert_eq!(at_d0.lower, 0.0);
                assert!((at_d0.upper - c.two_d0).abs() < 1e-12);
                let at_zero = credible_interval(fam, alpha(al), 0.0).unwrap();
                assert_eq!(at_zero.lower, 0.0);
                assert!((at_zero.upper - c.d1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn laplace_is_constant_for_negative_x() {
        let a = -(0.05f64).ln();
        for x in [-0.5, -3.0, -39.0, -45.0, -1e4] {
            let iv = credible_interval(&Laplace, alpha(0.05), x).unwrap();
            assert_eq!(iv.lower, 0.0);
            assert!((iv.upper - a).abs() < 1e-12, "x = {x}: {}", iv.upper);
            assert!((iv.upper - 2.9957).abs() < 1e-4);
        }
        let m = posterior_mass(&Laplace, alpha(0.05), -5.0).unwrap();
        assert!((m - 0.95).abs() < 1e-12);
    }

    #[test]
    fn normal_interval_above_d0() {
        // independent route: quantile by bisection on the erfc cdf
        let q = crate::density::inv_cdf_numeric(&Normal, 0.5 + 0.45 * Normal.cdf(3.0)).unwrap();
        let iv = credible_interval(&Normal, alpha(0.1), 3.0).unwrap();
        assert!((iv.lower - (3.0 - q)).abs() < 1e-10);
        assert!((iv.upper - (3.0 + q)).abs() < 1e-10);
        let m = posterior_mass(&Normal, alpha(0.1), 3.0).unwrap();
        assert!((m - 0.9).abs() < 1e-8);
    }

    #[test]
    fn posterior_mass_examples() {
        assert!((posterior_mass(&Normal, alpha(0.1), 0.0).unwrap() - 0.9).abs() < 1e-8);
        assert!((posterior_mass(&PolyExp, alpha(0.1), 1.7).unwrap() - 0.9).abs() < 1e-8);
        // deep left tail, where G(x) itself underflows
        assert!((posterior_mass(&Normal, alpha(0.1), -60.0).unwrap() - 0.9).abs() < 1e-8);
    }

    #[test]
    fn constants_normal() {
        let c = family_constants(&Normal, alpha(0.1)).unwrap();
        assert!((c.d1 - 1.645).abs() < 1e-3);
        assert!((c.two_d0 - 2.6704).abs() < 1e-3);
        assert!((c.d2 - 1.03).abs() < 1e-2);
        assert_eq!(c.a, 0.0);
        assert!(c.d1 >= c.d0 && c.d1 <= c.two_d0);
    }

    #[test]
    fn constants_laplace() {
        let c = family_constants(&Laplace, alpha(0.05)).unwrap();
        assert!((c.d0 - (1.05f64 / 0.1).ln()).abs() < 1e-14);
        assert!((c.two_d0 - 4.70).abs() < 5e-3);
        assert!((c.d1 - 2.996).abs() < 1e-3);
        assert!((c.a - c.d1).abs() < 1e-14);
    }

    #[test]
    fn numeric_tail_limits() {
        let a = limit_a_numeric(&PolyExp, alpha(0.1)).unwrap();
        assert!((a - 10f64.ln()).abs() < 1e-6, "{a}");
        let a = limit_a_numeric(&Laplace, alpha(0.05)).unwrap();
        assert!((a - 20f64.ln()).abs() < 1e-9);
        let a = limit_a_numeric(&Normal, alpha(0.1)).unwrap();
        assert!(a < 1e-6, "{a}");
        let t3 = StudentT::new(3.0).unwrap();
        assert!(matches!(
            limit_a(&t3, alpha(0.1)),
            Err(Error::LimitDiverged { .. })
        ));
    }

    #[test]
    fn student_needs_override() {
        let t3 = StudentT::new(3.0).unwrap();
        assert!(matches!(
            credible_interval(&t3, alpha(0.1), 0.0),
            Err(Error::NonLogconcaveFamily(_))
        ));
        let hpd = Hpd::new_unchecked(&t3, alpha(0.1)).unwrap();
        let (u5, u10, u20) = (
            hpd.upper(-5.0).unwrap(),
            hpd.upper(-10.0).unwrap(),
            hpd.upper(-20.0).unwrap(),
        );
        assert!(u20 > u10 && u10 > u5, "{u5} {u10} {u20}");
    }
}
