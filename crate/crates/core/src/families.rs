//! Concrete location families: standard Normal, standard Laplace, the
//! polynomial-exponential density `(|z| + 1) e^{-|z|} / 4`, and Student-t
//! (not logconcave, kept as a counterexample).

use std::f64::consts::{LN_2, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use statrs::function::beta::beta_reg;
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::ln_gamma;

use crate::density::{inv_cdf_numeric, LocationFamily};
use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Below this point the Normal log-cdf switches from `erfc` to the
/// asymptotic Mills-ratio expansion.
const NORMAL_TAIL_SWITCH: f64 = -30.0;

fn reflect_quantile(p: f64, lower: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    if p == 0.5 {
        Ok(0.0)
    } else if p > 0.5 {
        lower(1.0 - p).map(|z| -z)
    } else {
        lower(p)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Normal;

impl Normal {
    /// `ln` of `1 - 1/z^2 + 3/z^4 - ...`, the correction factor in
    /// `G(z) ~ g(z) / |z|` for large negative `z`.
    fn ln_mills_series(z: f64) -> f64 {
        let w = 1.0 / (z * z);
        let s = 1.0 - w * (1.0 - 3.0 * w * (1.0 - 5.0 * w * (1.0 - 7.0 * w * (1.0 - 9.0 * w))));
        s.ln()
    }

    fn lower_quantile(&self, p: f64) -> Result<f64> {
        let mut z = -SQRT_2 * erfc_inv(2.0 * p);
        let density = self.pdf(z);
        if density > 0.0 {
            z -= (self.cdf(z) - p) / density;
        }
        Ok(z)
    }
}

impl LocationFamily for Normal {
    fn name(&self) -> &str {
        "normal"
    }

    fn pdf(&self, z: f64) -> f64 {
        (-0.5 * z * z - LN_SQRT_2PI).exp()
    }

    fn log_pdf(&self, z: f64) -> f64 {
        -0.5 * z * z - LN_SQRT_2PI
    }

    fn cdf(&self, z: f64) -> f64 {
        0.5 * erfc(-z / SQRT_2)
    }

    fn log_cdf(&self, z: f64) -> f64 {
        if z > 0.0 {
            (-self.survival(z)).ln_1p()
        } else if z > NORMAL_TAIL_SWITCH {
            self.cdf(z).ln()
        } else {
            -0.5 * z * z - (-z).ln() - LN_SQRT_2PI + Self::ln_mills_series(z)
        }
    }

    fn log_cdf_drop(&self, z: f64, delta: f64) -> f64 {
        if z > NORMAL_TAIL_SWITCH {
            return self.log_cdf(z - delta) - self.log_cdf(z);
        }
        delta * (z - 0.5 * delta) - (delta / -z).ln_1p() + Self::ln_mills_series(z - delta)
            - Self::ln_mills_series(z)
    }

    fn inv_cdf(&self, p: f64) -> Result<f64> {
        reflect_quantile(p, |q| self.lower_quantile(q))
    }

    fn inv_log_cdf(&self, log_p: f64) -> Result<f64> {
        if log_p > -690.0 {
            self.inv_cdf(log_p.exp())
        } else {
            crate::density::inv_log_cdf_numeric(self, log_p)
        }
    }

    fn is_logconcave(&self) -> bool {
        true
    }

    fn tail_limit_a(&self, _alpha: f64) -> Option<f64> {
        Some(0.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Laplace;

impl LocationFamily for Laplace {
    fn name(&self) -> &str {
        "laplace"
    }

    fn pdf(&self, z: f64) -> f64 {
        0.5 * (-z.abs()).exp()
    }

    fn log_pdf(&self, z: f64) -> f64 {
        -LN_2 - z.abs()
    }

    fn cdf(&self, z: f64) -> f64 {
        if z < 0.0 {
            0.5 * z.exp()
        } else {
            1.0 - 0.5 * (-z).exp()
        }
    }

    fn log_cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            z - LN_2
        } else {
            (-0.5 * (-z).exp()).ln_1p()
        }
    }

    fn log_cdf_drop(&self, z: f64, delta: f64) -> f64 {
        if z <= 0.0 {
            -delta
        } else {
            self.log_cdf(z - delta) - self.log_cdf(z)
        }
    }

    fn inv_cdf(&self, p: f64) -> Result<f64> {
        reflect_quantile(p, |q| Ok((2.0 * q).ln()))
    }

    fn inv_log_cdf(&self, log_p: f64) -> Result<f64> {
        if log_p <= -LN_2 {
            Ok(log_p + LN_2)
        } else {
            self.inv_cdf(log_p.exp())
        }
    }

    fn is_logconcave(&self) -> bool {
        true
    }

    fn tail_limit_a(&self, alpha: f64) -> Option<f64> {
        Some(-alpha.ln())
    }
}

/// `g(z) = (|z| + 1) e^{-|z|} / 4`, with `G(z) = (2 - z) e^{z} / 4` for
/// `z <= 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PolyExp;

impl PolyExp {
    /// Newton iteration on `ln((2 - z)/4) + z = log_p` for `log_p <= ln(1/2)`.
    /// The map is increasing and concave in `z`, so after the first step the
    /// iterates approach the root monotonically from the left.
    fn lower_log_quantile(log_p: f64) -> f64 {
        let mut z = log_p + LN_2;
        for _ in 0..100 {
            let h = (0.25 * (2.0 - z)).ln() + z - log_p;
            let slope = 1.0 - 1.0 / (2.0 - z);
            let step = h / slope;
            z -= step;
            if step.abs() <= 4.0 * f64::EPSILON * z.abs().max(1.0) {
                break;
            }
        }
        z.min(0.0)
    }
}

impl LocationFamily for PolyExp {
    fn name(&self) -> &str {
        "polyexp"
    }

    fn pdf(&self, z: f64) -> f64 {
        let t = z.abs();
        0.25 * (t + 1.0) * (-t).exp()
    }

    fn log_pdf(&self, z: f64) -> f64 {
        let t = z.abs();
        (0.25 * (t + 1.0)).ln() - t
    }

    fn cdf(&self, z: f64) -> f64 {
        if z < 0.0 {
            0.25 * (2.0 - z) * z.exp()
        } else {
            1.0 - 0.25 * (z + 2.0) * (-z).exp()
        }
    }

    fn log_cdf(&self, z: f64) -> f64 {
        if z <= 0.0 {
            (0.25 * (2.0 - z)).ln() + z
        } else {
            (-self.survival(z)).ln_1p()
        }
    }

    fn log_cdf_drop(&self, z: f64, delta: f64) -> f64 {
        if z <= 0.0 {
            (delta / (2.0 - z)).ln_1p() - delta
        } else {
            self.log_cdf(z - delta) - self.log_cdf(z)
        }
    }

    fn inv_cdf(&self, p: f64) -> Result<f64> {
        reflect_quantile(p, |q| Ok(Self::lower_log_quantile(q.ln())))
    }

    fn inv_log_cdf(&self, log_p: f64) -> Result<f64> {
        if log_p <= -LN_2 {
            Ok(Self::lower_log_quantile(log_p))
        } else {
            self.inv_cdf(log_p.exp())
        }
    }

    fn is_logconcave(&self) -> bool {
        true
    }

    fn tail_limit_a(&self, alpha: f64) -> Option<f64> {
        Some(-alpha.ln())
    }
}

/// Student-t with `dof` degrees of freedom. Heavy tailed, hence not
/// logconcave; the upper credible endpoint diverges as `x -> -inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentT {
    dof: f64,
    log_norm: f64,
    name: String,
}

impl StudentT {
    pub fn new(dof: f64) -> Result<Self> {
        if !(dof >= 1.0) || !dof.is_finite() {
            return Err(Error::UnsupportedSpec(format!("student:{dof}")));
        }
        let log_norm = ln_gamma(0.5 * (dof + 1.0)) - ln_gamma(0.5 * dof) - 0.5 * (dof * PI).ln();
        Ok(Self {
            dof,
            log_norm,
            name: format!("student:{dof}"),
        })
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }
}

impl LocationFamily for StudentT {
    fn name(&self) -> &str {
        &self.name
    }

    fn pdf(&self, z: f64) -> f64 {
        self.log_pdf(z).exp()
    }

    fn log_pdf(&self, z: f64) -> f64 {
        self.log_norm - 0.5 * (self.dof + 1.0) * (z * z / self.dof).ln_1p()
    }

    fn cdf(&self, z: f64) -> f64 {
        let lower = 0.5 * beta_reg(0.5 * self.dof, 0.5, self.dof / (self.dof + z * z));
        if z <= 0.0 {
            lower
        } else {
            1.0 - lower
        }
    }

    fn inv_cdf(&self, p: f64) -> Result<f64> {
        inv_cdf_numeric(self, p)
    }

    fn is_logconcave(&self) -> bool {
        false
    }

    fn tail_limit_a(&self, _alpha: f64) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Normal,
    Laplace,
    PolyExp,
    StudentT,
}

/// Parsed family selector. Accepts `normal`, `laplace`, `polyexp` and
/// `student:<dof>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub dof: Option<f64>,
}

impl FamilySpec {
    pub const NORMAL: FamilySpec = FamilySpec {
        kind: FamilyKind::Normal,
        dof: None,
    };
    pub const LAPLACE: FamilySpec = FamilySpec {
        kind: FamilyKind::Laplace,
        dof: None,
    };
    pub const POLYEXP: FamilySpec = FamilySpec {
        kind: FamilyKind::PolyExp,
        dof: None,
    };

    pub fn student(dof: f64) -> Self {
        FamilySpec {
            kind: FamilyKind::StudentT,
            dof: Some(dof),
        }
    }

    fn validate(&self) -> Result<()> {
        match (self.kind, self.dof) {
            (FamilyKind::StudentT, Some(d)) if d >= 1.0 && d.is_finite() => Ok(()),
            (FamilyKind::StudentT, _) => Err(Error::UnsupportedSpec(self.to_string())),
            (_, None) => Ok(()),
            (_, Some(_)) => Err(Error::UnsupportedSpec(self.to_string())),
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.dof) {
            (FamilyKind::Normal, _) => f.write_str("normal"),
            (FamilyKind::Laplace, _) => f.write_str("laplace"),
            (FamilyKind::PolyExp, _) => f.write_str("polyexp"),
            (FamilyKind::StudentT, Some(d)) => write!(f, "student:{d}"),
            (FamilyKind::StudentT, None) => f.write_str("student"),
        }
    }
}

impl FromStr for FamilySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let spec = match s.to_ascii_lowercase().as_str() {
            "normal" => Self::NORMAL,
            "laplace" => Self::LAPLACE,
            "polyexp" => Self::POLYEXP,
            other => {
                let dof = other
                    .strip_prefix("student:")
                    .and_then(|d| d.parse::<f64>().ok())
                    .ok_or_else(|| Error::UnsupportedSpec(s.to_string()))?;
                Self::student(dof)
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Any of the shipped families, dispatching to the concrete type.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Normal(Normal),
    Laplace(Laplace),
    PolyExp(PolyExp),
    StudentT(StudentT),
}

pub fn make_family(spec: &FamilySpec) -> Result<Family> {
    spec.validate()?;
    Ok(match spec.kind {
        FamilyKind::Normal => Family::Normal(Normal),
        FamilyKind::Laplace => Family::Laplace(Laplace),
        FamilyKind::PolyExp => Family::PolyExp(PolyExp),
        FamilyKind::StudentT => {
            Family::StudentT(StudentT::new(spec.dof.expect("validated above"))?)
        }
    })
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        make_family(&s.parse()?)
    }
}

macro_rules! dispatch {
    ($self:ident, $f:ident => $body:expr) => {
        match $self {
            Family::Normal($f) => $body,
            Family::Laplace($f) => $body,
            Family::PolyExp($f) => $body,
            Family::StudentT($f) => $body,
        }
    };
}

impl LocationFamily for Family {
    fn name(&self) -> &str {
        dispatch!(self, f => f.name())
    }
    fn pdf(&self, z: f64) -> f64 {
        dispatch!(self, f => f.pdf(z))
    }
    fn cdf(&self, z: f64) -> f64 {
        dispatch!(self, f => f.cdf(z))
    }
    fn log_pdf(&self, z: f64) -> f64 {
        dispatch!(self, f => f.log_pdf(z))
    }
    fn survival(&self, z: f64) -> f64 {
        dispatch!(self, f => f.survival(z))
    }
    fn log_cdf(&self, z: f64) -> f64 {
        dispatch!(self, f => f.log_cdf(z))
    }
    fn log_cdf_drop(&self, z: f64, delta: f64) -> f64 {
        dispatch!(self, f => f.log_cdf_drop(z, delta))
    }
    fn inv_cdf(&self, p: f64) -> Result<f64> {
        dispatch!(self, f => f.inv_cdf(p))
    }
    fn inv_log_cdf(&self, log_p: f64) -> Result<f64> {
        dispatch!(self, f => f.inv_log_cdf(log_p))
    }
    fn is_logconcave(&self) -> bool {
        dispatch!(self, f => f.is_logconcave())
    }
    fn tail_limit_a(&self, alpha: f64) -> Option<f64> {
        dispatch!(self, f => f.tail_limit_a(alpha))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{hazard, inv_cdf_numeric};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn laplace_closed_forms() {
        assert_eq!(Laplace.cdf(0.0), 0.5);
        assert_eq!(Laplace.pdf(0.0), 0.5);
        assert!(close(
            Laplace.inv_cdf(0.975).unwrap(),
            -(0.05f64).ln(),
            1e-14
        ));
        for &z in &[-30.0, -3.2, -1e-3, 0.0, 0.7, 2.0] {
            let p = Laplace.cdf(z);
            assert!(
                close(Laplace.inv_cdf(p).unwrap(), z, 1e-14 * z.abs().max(1.0)),
                "z = {z}"
            );
        }
    }

    #[test]
    fn polyexp_cdf_at_one() {
        // 1 - 3 e^{-1} / 4, and the same value by quadrature of the density
        let exact = 1.0 - 0.75 * (-1.0f64).exp();
        assert!(close(PolyExp.cdf(1.0), exact, 1e-15));
        assert!(close(exact, 0.724_090_42, 1e-8));
        let n = 41_000;
        let h = 41.0 / n as f64;
        let quad: f64 = (0..n)
            .map(|i| {
                let a = -40.0 + i as f64 * h;
                let m = a + 0.5 * h;
                h / 6.0 * (PolyExp.pdf(a) + 4.0 * PolyExp.pdf(m) + PolyExp.pdf(a + h))
            })
            .sum();
        assert!(close(quad, exact, 1e-10), "{quad}");
    }

    #[test]
    fn normal_quantiles() {
        assert!(close(Normal.cdf(1.645), 0.95, 1e-4));
        // 1.335178... is the 1/1.1 quantile of the standard normal
        let z = Normal.inv_cdf(1.0 / 1.1).unwrap();
        assert!(close(z, 1.335_177_736, 1e-8), "{z}");
        let numeric = inv_cdf_numeric(&Normal, 1.0 / 1.1).unwrap();
        assert!(close(z, numeric, 1e-10));
        assert!((Normal.cdf(numeric) - 1.0 / 1.1).abs() <= 1e-12);
    }

    #[test]
    fn median_is_zero() {
        let families: [Family; 4] = [
            Family::Normal(Normal),
            Family::Laplace(Laplace),
            Family::PolyExp(PolyExp),
            Family::StudentT(StudentT::new(3.0).unwrap()),
        ];
        for f in &families {
            assert_eq!(f.inv_cdf(0.5).unwrap(), 0.0);
            assert_eq!(inv_cdf_numeric(f, 0.5).unwrap(), 0.0);
        }
    }

    #[test]
    fn closed_quantiles_match_bisection() {
        let families: [Family; 3] = [
            Family::Normal(Normal),
            Family::Laplace(Laplace),
            Family::PolyExp(PolyExp),
        ];
        for f in &families {
            for &p in &[1e-8, 1e-4, 0.025, 0.3, 0.5, 0.77, 0.975, 1.0 - 1e-6] {
                let closed = f.inv_cdf(p).unwrap();
                let numeric = inv_cdf_numeric(f, p).unwrap();
                assert!(
                    close(closed, numeric, 1e-10),
                    "{} p={p}: {closed} vs {numeric}",
                    f.name()
                );
                assert!((f.cdf(numeric) - p).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn log_tail_quantiles() {
        let families: [Family; 3] = [
            Family::Normal(Normal),
            Family::Laplace(Laplace),
            Family::PolyExp(PolyExp),
        ];
        for f in &families {
            for &lp in &[-2.0, -50.0, -700.0, -5000.0] {
                let z = f.inv_log_cdf(lp).unwrap();
                assert!(
                    close(f.log_cdf(z), lp, 1e-9 * lp.abs()),
                    "{} lp={lp}",
                    f.name()
                );
            }
        }
    }

    #[test]
    fn normal_tail_expansion_joins_erfc() {
        let below = Normal.log_cdf(NORMAL_TAIL_SWITCH - 1e-9);
        let above = Normal.log_cdf(NORMAL_TAIL_SWITCH + 1e-9);
        assert!(close(below, above, 1e-9 * above.abs()));
        let direct = Normal.log_cdf(-31.0 - 0.2) - Normal.log_cdf(-31.0);
        assert!(close(Normal.log_cdf_drop(-31.0, 0.2), direct, 1e-10));
    }

    #[test]
    fn hazards() {
        assert!(close(hazard(&Laplace, 1.0).unwrap(), 1.0, 1e-15));
        let e = (-1.0f64).exp();
        assert!(close(
            hazard(&Laplace, -1.0).unwrap(),
            0.5 * e / (1.0 - 0.5 * e),
            1e-15
        ));
        assert!(close(hazard(&Laplace, -1.0).unwrap(), 0.2254, 1e-4));
        let h0 = hazard(&Normal, 0.0).unwrap();
        assert!(close(h0, 2.0 / (2.0 * PI).sqrt(), 1e-15));
        assert!(close(h0, 0.7979, 1e-4));
        assert!(matches!(
            hazard(&Laplace, 800.0),
            Err(Error::DegenerateTail(_))
        ));
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("normal".parse::<FamilySpec>().unwrap(), FamilySpec::NORMAL);
        assert_eq!(
            "Laplace".parse::<FamilySpec>().unwrap(),
            FamilySpec::LAPLACE
        );
        assert_eq!(
            "student:3".parse::<FamilySpec>().unwrap(),
            FamilySpec::student(3.0)
        );
        assert!(matches!(
            "student:0.5".parse::<FamilySpec>(),
            Err(Error::UnsupportedSpec(_))
        ));
        assert!(matches!(
            "cauchy".parse::<FamilySpec>(),
            Err(Error::UnsupportedSpec(_))
        ));
        let bad = FamilySpec {
            kind: FamilyKind::Normal,
            dof: Some(2.0),
        };
        assert!(make_family(&bad).is_err());
        assert_eq!(FamilySpec::student(3.0).to_string(), "student:3");
    }

    #[test]
    fn student_cdf_reference() {
        // t_3 cdf at 1: 1/2 + (atan(1/sqrt3) + sqrt3/4) / pi
        let t = StudentT::new(3.0).unwrap();
        let s3 = 3f64.sqrt();
        let exact = 0.5 + ((1.0 / s3).atan() + s3 / 4.0) / PI;
        assert!(close(t.cdf(1.0), exact, 1e-12));
        assert!(close(t.cdf(-1.0), 1.0 - exact, 1e-12));
    }
}
