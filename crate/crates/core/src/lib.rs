//! HPD credible intervals for a location parameter restricted to `[0, inf)`
//! under a flat prior, and the exact frequentist coverage of those intervals
//! for symmetric logconcave location families.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod coverage;
pub mod density;
pub mod error;
pub mod families;
pub mod hpd;
pub mod laplace;
pub mod roots;

pub use bounds::{
    bound_report, check_doubling_ratios, full_audit, legacy_lower_bound, min_coverage_bracket,
    AuditResult, BoundsReport, DoublingRatioAudit, FullAudit,
};
pub use coverage::{
    boundary_derivative, coverage_curve, coverage_exact, coverage_mc, coverage_mc_grid,
    coverage_via_inversion, solve_boundary, Branch, CoverageCurve, CoverageEngine, CoveragePoint,
    McEstimate, Region, Side,
};
pub use density::{diagnose_family, hazard, inv_cdf_numeric, DiagnosticReport, LocationFamily};
pub use error::{Error, Result};
pub use families::{
    make_family, Family, FamilyKind, FamilySpec, Laplace, Normal, PolyExp, StudentT,
};
pub use hpd::{
    credible_interval, credible_interval_unchecked, family_constants, limit_a, limit_a_numeric,
    posterior_mass, Alpha, CredibleInterval, FamilyConstants, Hpd,
};
pub use laplace::{laplace_coverage_closed, laplace_drop_at_a, LaplaceConstants};
