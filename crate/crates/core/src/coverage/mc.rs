//! Monte Carlo coverage estimates.
//!
//! Draws are generated by inverse-cdf sampling from a ChaCha12 stream keyed
//! by `(seed, stream)`. Samples are split into fixed-size chunks, each of
//! which seeks to its own word offset, so the result is identical whether the
//! chunks run serially or in parallel.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::density::LocationFamily;
use crate::error::{Error, Result};
use crate::hpd::{Alpha, Hpd};

const CHUNK: u64 = 1 << 16;

/// Minimum sample size accepted by the estimators.
pub const MIN_SAMPLES: u64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub theta: f64,
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
    pub hits: u64,
    pub seed: u64,
}

/// Uniform on `(0, 1)` from the top 52 bits. The half-step offset keeps both
/// endpoints out of reach (with 53 bits the largest value would round to 1).
fn open_unit(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

fn count_chunk<F: LocationFamily + ?Sized>(
    hpd: &Hpd<'_, F>,
    theta: f64,
    seed: u64,
    stream: u64,
    chunk: u64,
    len: u64,
) -> Result<u64> {
    let family = hpd.family();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    // each draw consumes two 32-bit words
    rng.set_word_pos(u128::from(chunk * CHUNK) * 2);
    // u(X) is exactly a on a half-line for Laplace-type tails; a relative
    // 1e-12 keeps that flat part from flipping on rounding
    let eps = 1e-12 * theta.max(1.0);
    let mut hits = 0;
    for _ in 0..len {
        let x = theta + family.inv_cdf(open_unit(rng.next_u64()))?;
        let ci = hpd.interval(x)?;
        if ci.lower <= theta + eps && theta <= ci.upper + eps {
            hits += 1;
        }
    }
    Ok(hits)
}

fn count_hits<F: LocationFamily + ?Sized>(
    hpd: &Hpd<'_, F>,
    theta: f64,
    n: u64,
    seed: u64,
    stream: u64,
) -> Result<u64> {
    let chunks: Vec<(u64, u64)> = (0..n.div_ceil(CHUNK))
        .map(|c| (c, CHUNK.min(n - c * CHUNK)))
        .collect();
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        chunks
            .par_iter()
            .map(|&(c, len)| count_chunk(hpd, theta, seed, stream, c, len))
            .try_reduce(|| 0, |a, b| Ok(a + b))
    }
    #[cfg(not(feature = "parallel"))]
    {
        chunks
            .iter()
            .map(|&(c, len)| count_chunk(hpd, theta, seed, stream, c, len))
            .sum()
    }
}

/// Estimates coverage at one `theta` from stream `stream` of `seed`.
pub fn coverage_mc_stream<F: LocationFamily + ?Sized>(
    family: &F,
    alpha: Alpha,
    theta: f64,
    n: u64,
    seed: u64,
    stream: u64,
) -> Result<McEstimate> {
    if n < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "n = {n} must be at least {MIN_SAMPLES}"
        )));
    }
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "theta = {theta} must be finite and >= 0"
        )));
    }
    let hpd = Hpd::new(family, alpha)?;
    let hits = count_hits(&hpd, theta, n, seed, stream)?;
    let mean = hits as f64 / n as f64;
    Ok(McEstimate {
        theta,
        mean,
        std_error: (mean * (1.0 - mean) / n as f64).sqrt(),
        n,
        hits,
        seed,
    })
}

/// Estimates coverage at `theta` (stream 0).
pub fn coverage_mc<F: LocationFamily + ?Sized>(
    family: &F,
    alpha: Alpha,
    theta: f64,
    n: u64,
    seed: u64,
) -> Result<McEstimate> {
    coverage_mc_stream(family, alpha, theta, n, seed, 0)
}

/// Estimates coverage at each of `thetas`; the `i`-th value uses stream `i`,
/// so estimates at different abscissae are independent.
pub fn coverage_mc_grid<F: LocationFamily + ?Sized>(
    family: &F,
    alpha: Alpha,
    thetas: &[f64],
    n: u64,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    thetas
        .iter()
        .enumerate()
        .map(|(i, &t)| coverage_mc_stream(family, alpha, t, n, seed, i as u64))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{Laplace, Normal};

    #[test]
    fn deterministic_and_chunk_invariant() {
        let al = Alpha::new(0.1).unwrap();
        let a = coverage_mc(&Normal, al, 1.0, 150_000, 7).unwrap();
        let b = coverage_mc(&Normal, al, 1.0, 150_000, 7).unwrap();
        assert_eq!(a, b);
        let hpd = Hpd::new(&Normal, al).unwrap();
        let serial: u64 = (0..3)
            .map(|c| count_chunk(&hpd, 1.0, 7, 0, c, CHUNK.min(150_000 - c * CHUNK)).unwrap())
            .sum();
        assert_eq!(serial, a.hits);
        let other = coverage_mc(&Normal, al, 1.0, 150_000, 8).unwrap();
        assert_ne!(other.hits, a.hits);
    }

    #[test]
    fn plateau_estimate() {
        let al = Alpha::new(0.05).unwrap();
        let est = coverage_mc(&Laplace, al, 0.0, 200_000, 1).unwrap();
        assert!((est.mean - 1.0 / 1.05).abs() < 5.0 * est.std_error);
    }

    #[test]
    fn rejects_small_n() {
        let al = Alpha::new(0.05).unwrap();
        assert!(coverage_mc(&Laplace, al, 0.0, 999, 1).is_err());
    }

    #[test]
    fn unit_interval_is_open() {
        assert!(open_unit(0) > 0.0);
        assert!(open_unit(u64::MAX) < 1.0);
    }
}
