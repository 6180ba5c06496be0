use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{CoverageEngine, CoveragePoint, Region, Side};
use crate::density::LocationFamily;
use crate::error::{Error, Result};
use crate::hpd::{family_constants, Alpha, FamilyConstants};

/// Coverage sampled on a grid, plus the landmark constants it was built with.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageCurve {
    pub family: String,
    pub alpha: Alpha,
    pub constants: FamilyConstants,
    /// Sorted by `theta`. At a jump the left value precedes the right one.
    pub points: Vec<CoveragePoint>,
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    theta: f64,
    coverage: f64,
    region: Region,
    side: Side,
}

impl CoverageCurve {
    /// Point with the smallest coverage; ties go to the smallest `theta`.
    pub fn min_point(&self) -> Option<&CoveragePoint> {
        self.points
            .iter()
            .fold(None, |best: Option<&CoveragePoint>, p| match best {
                Some(b) if b.coverage <= p.coverage => Some(b),
                _ => Some(p),
            })
    }

    pub fn max_point(&self) -> Option<&CoveragePoint> {
        self.points
            .iter()
            .fold(None, |best: Option<&CoveragePoint>, p| match best {
                Some(b) if b.coverage >= p.coverage => Some(b),
                _ => Some(p),
            })
    }

    /// Looks up the point at `theta` (within `1e-12` relative), preferring the
    /// left value at a jump.
    pub fn point_at(&self, theta: f64) -> Option<&CoveragePoint> {
        let tol = 1e-12 * theta.abs().max(1.0);
        self.points
            .iter()
            .find(|p| (p.theta - theta).abs() <= tol && p.side != Side::Right)
    }

    /// Largest gap between consecutive distinct grid abscissae.
    pub fn max_step(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1].theta - w[0].theta)
            .fold(0.0, f64::max)
    }

    /// Writes `theta,coverage,region,side` rows with round-trip float formatting.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for p in &self.points {
            w.serialize(CsvRow {
                theta: p.theta,
                coverage: p.coverage,
                region: p.region,
                side: p.side,
            })
            .map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }

    /// One JSON object per line, one line per point.
    pub fn write_jsonl<W: Write>(&self, mut writer: W) -> Result<()> {
        for p in &self.points {
            let line = serde_json::to_string(p).map_err(|e| Error::Format(e.to_string()))?;
            writeln!(writer, "{line}").map_err(|e| Error::Format(e.to_string()))?;
        }
        Ok(())
    }

    /// Reads a curve written by [`write_csv`](Self::write_csv). Constants are
    /// recomputed from `family`.
    pub fn read_csv<R: Read, F: LocationFamily + ?Sized>(
        reader: R,
        family: &F,
        alpha: Alpha,
    ) -> Result<CoverageCurve> {
        let mut points = Vec::new();
        for row in csv::Reader::from_reader(reader).deserialize::<CsvRow>() {
            let row = row.map_err(|e| Error::Format(e.to_string()))?;
            points.push(CoveragePoint {
                theta: row.theta,
                coverage: row.coverage,
                region: row.region,
                side: row.side,
                drop: None,
            });
        }
        // jump sizes are recoverable from adjacent left/right rows
        for i in 1..points.len() {
            if points[i - 1].side == Side::Left && points[i].side == Side::Right {
                points[i - 1].drop = Some(points[i - 1].coverage - points[i].coverage);
            }
        }
        Ok(CoverageCurve {
            family: family.name().to_string(),
            alpha,
            constants: family_constants(family, alpha)?,
            points,
        })
    }
}

/// Builds the coverage curve on `[0, theta_max]`.
///
/// The grid is `n_points` equispaced abscissae merged with the landmarks
/// `0, a, d1, d2, 2 d0` (landmarks are kept even past `theta_max`) and with
/// offsets `+-0.01 k`, `k = 1..5`, around `a`, `d1` and `2 d0`. When `a > 0`
/// the curve holds both one-sided values at `a`.
pub fn coverage_curve<F: LocationFamily + ?Sized>(
    family: &F,
    alpha: Alpha,
    theta_max: f64,
    n_points: usize,
) -> Result<CoverageCurve> {
    if n_points < 16 {
        return Err(Error::InvalidArgument(format!(
            "n_points = {n_points} must be at least 16"
        )));
    }
    if !(theta_max > 0.0) || !theta_max.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "theta_max = {theta_max} must be positive"
        )));
    }
    let engine = CoverageEngine::new(family, alpha)?;
    let c = *engine.constants();

    let mut grid: Vec<f64> = (0..n_points)
        .map(|i| theta_max * i as f64 / (n_points - 1) as f64)
        .collect();
    let landmarks = [0.0, c.a, c.d1, c.d2, c.two_d0];
    grid.extend(landmarks);
    for centre in [c.a, c.d1, c.two_d0] {
        for k in 1..=5 {
            let off = 0.01 * k as f64;
            grid.extend(
                [centre - off, centre + off]
                    .into_iter()
                    .filter(|&t| t >= 0.0 && t <= theta_max),
            );
        }
    }
    grid.sort_by(f64::total_cmp);
    // merge near-duplicates onto the landmark so the landmark value survives
    let mut thetas: Vec<f64> = Vec::with_capacity(grid.len());
    for t in grid {
        let snapped = landmarks
            .iter()
            .copied()
            .find(|&m| (t - m).abs() <= 1e-12 * m.abs().max(1.0))
            .unwrap_or(t);
        match thetas.last() {
            Some(&last) if (snapped - last).abs() <= 1e-12 * last.abs().max(1.0) => {}
            _ => thetas.push(snapped),
        }
    }

    let evaluated: Vec<CoveragePoint> = evaluate_all(&engine, &thetas)?;

    let mut points = Vec::with_capacity(evaluated.len() + 1);
    for p in evaluated {
        match p.drop {
            Some(drop) => {
                let right = p.coverage - drop;
                // stored as the rounded difference so it survives a CSV round trip
                points.push(CoveragePoint {
                    side: Side::Left,
                    drop: Some(p.coverage - right),
                    ..p
                });
                points.push(CoveragePoint {
                    coverage: right,
                    region: Region::Mid,
                    side: Side::Right,
                    drop: None,
                    ..p
                });
            }
            None => points.push(p),
        }
    }

    Ok(CoverageCurve {
        family: family.name().to_string(),
        alpha,
        constants: c,
        points,
    })
}

#[cfg(feature = "parallel")]
fn evaluate_all<F: LocationFamily + ?Sized>(
    engine: &CoverageEngine<'_, F>,
    thetas: &[f64],
) -> Result<Vec<CoveragePoint>> {
    use rayon::prelude::*;
    thetas.par_iter().map(|&t| engine.coverage(t)).collect()
}

#[cfg(not(feature = "parallel"))]
fn evaluate_all<F: LocationFamily + ?Sized>(
    engine: &CoverageEngine<'_, F>,
    thetas: &[f64],
) -> Result<Vec<CoveragePoint>> {
    thetas.iter().map(|&t| engine.coverage(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{Laplace, Normal};

    #[test]
    fn laplace_curve_has_jump_pair() {
        let al = Alpha::new(0.05).unwrap();
        let curve = coverage_curve(&Laplace, al, 12.0, 200).unwrap();
        let a = curve.constants.a;
        let pair: Vec<_> = curve
            .points
            .iter()
            .filter(|p| (p.theta - a).abs() < 1e-9)
            .collect();
        assert_eq!(pair.len(), 2);
        assert_eq!(pair[0].side, Side::Left);
        assert_eq!(pair[1].side, Side::Right);
        assert!((pair[0].coverage - pair[1].coverage - 0.025).abs() < 1e-9);
        assert!(curve.points.windows(2).all(|w| w[0].theta <= w[1].theta));
    }

    #[test]
    fn csv_round_trip() {
        let al = Alpha::new(0.05).unwrap();
        let curve = coverage_curve(&Laplace, al, 6.0, 40).unwrap();
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("theta,coverage,region,side\n"));
        let back = CoverageCurve::read_csv(buf.as_slice(), &Laplace, al).unwrap();
        assert_eq!(back, curve);
    }

    #[test]
    fn normal_curve_landmarks() {
        let al = Alpha::new(0.1).unwrap();
        let curve = coverage_curve(&Normal, al, 10.0, 64).unwrap();
        assert!(curve.points.iter().all(|p| p.side == Side::Both));
        let c = curve.constants;
        for m in [0.0, c.d1, c.d2, c.two_d0] {
            assert!(curve.point_at(m).is_some(), "{m}");
        }
        let min = curve.min_point().unwrap();
        assert!((min.theta - c.two_d0).abs() < 0.011);
        assert!(coverage_curve(&Normal, al, 10.0, 8).is_err());
    }
}
