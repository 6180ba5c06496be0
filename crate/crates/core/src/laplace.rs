//! Closed-form coverage for the Laplace family `g(z) = exp(-|z|) / 2`.
//!
//! Everything here is evaluated directly from elementary functions, so it
//! serves as an independent check on the general root-solving engine.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hpd::Alpha;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceConstants {
    /// `-ln alpha`, the floor the upper endpoint reaches for `x <= 0`.
    pub a: f64,
    /// `ln((1 + alpha) / (2 alpha))`.
    pub d0: f64,
    /// `-ln alpha`; coincides with `a`.
    pub d1: f64,
    pub two_d0: f64,
}

impl LaplaceConstants {
    pub fn new(alpha: Alpha) -> Self {
        let al = alpha.value();
        let d0 = ((1.0 + al) / (2.0 * al)).ln();
        LaplaceConstants {
            a: -al.ln(),
            d0,
            d1: -al.ln(),
            two_d0: 2.0 * d0,
        }
    }
}

/// `C(theta)` on the closed first piece `[0, a]`; the later pieces subtract
/// one further term from it.
fn first_piece(al: f64, theta: f64) -> f64 {
    if theta < 700.0 {
        let e = theta.exp();
        1.0 - al * e / (2.0 * e - (1.0 - al))
    } else {
        // same expression divided through by e^theta
        1.0 - al / (2.0 - (1.0 - al) * (-theta).exp())
    }
}

fn second_piece(al: f64, theta: f64) -> Result<f64> {
    let e = (-theta).exp();
    let mut disc = al * al - al * e;
    if disc < 0.0 {
        // rounding at theta = a itself
        if disc > -1e-14 * al * al {
            disc = 0.0;
        } else {
            return Err(Error::NegativeDiscriminant(disc));
        }
    }
    Ok(first_piece(al, theta) - al * e / (2.0 * (al - disc.sqrt())))
}

fn third_piece(al: f64, theta: f64) -> f64 {
    let e = (-theta).exp();
    let t = 2.0 * (1.0 - al) * e;
    let s = (al * al + t).sqrt();
    let term = if t > 1e-3 * al * al {
        (1.0 - al) * e / (2.0 * (s - al))
    } else {
        // s - alpha cancels for large theta; multiply through by s + alpha
        (s + al) / 4.0
    };
    first_piece(al, theta) - term
}

/// Exact coverage of the HPD interval for the Laplace family.
///
/// Pieces: `[0, -ln alpha]`, `(-ln alpha, 2 d0]`, `(2 d0, inf)`. At
/// `theta = -ln alpha` the left value is returned.
pub fn laplace_coverage_closed(alpha: Alpha, theta: f64) -> Result<f64> {
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "theta = {theta} must be finite and >= 0"
        )));
    }
    let al = alpha.value();
    let k = LaplaceConstants::new(alpha);
    if theta <= k.a {
        Ok(first_piece(al, theta))
    } else if theta <= k.two_d0 {
        second_piece(al, theta)
    } else {
        Ok(third_piece(al, theta))
    }
}

/// Coverage immediately to the right of `a`, i.e. the second piece's limit.
pub fn laplace_coverage_right_of_a(alpha: Alpha) -> Result<f64> {
    let a = LaplaceConstants::new(alpha).a;
    second_piece(alpha.value(), a)
}

/// Size of the downward jump at `theta = a`.
pub fn laplace_drop_at_a(alpha: Alpha) -> Result<f64> {
    let a = LaplaceConstants::new(alpha).a;
    Ok(first_piece(alpha.value(), a) - laplace_coverage_right_of_a(alpha)?)
}
