use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Samples per scheduling unit. Results never depend on it, only on the
/// sample index.
const CHUNK: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(count)`.
    pub std_error: f64,
    pub count: u64,
    pub seed: u64,
}

impl McEstimate {
    fn from_values(values: &[f64], seed: u64) -> Self {
        let count = values.len() as u64;
        let mean = values.iter().sum::<f64>() / count as f64;
        let var = if count > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / count as f64).sqrt(),
            count,
            seed,
        }
    }

    /// `std_error / mean`, or zero when the estimate is zero.
    pub fn relative_error(&self) -> f64 {
        if self.mean == 0.0 {
            0.0
        } else {
            self.std_error / self.mean.abs()
        }
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

/// The generator for sample `index`: stream `index` of the ChaCha8 key
/// derived from `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Estimates several statistics of the same samples at once. `draw` fills
/// one value per statistic for a single sample.
///
/// Sample `i` always uses [`sample_rng`]`(seed, i)` and values are reduced in
/// index order, so the result is bit-identical for any `workers >= 1`.
pub fn mc_estimate_vec<F>(
    stats: usize,
    count: u64,
    seed: u64,
    workers: usize,
    draw: F,
) -> Result<Vec<McEstimate>>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) -> Result<()> + Sync,
{
    if count == 0 {
        return Err(Error::InvalidArgument(
            "Monte Carlo count must be >= 1".into(),
        ));
    }
    if workers == 0 {
        return Err(Error::InvalidArgument("worker count must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let chunks = count.div_ceil(CHUNK);
    let blocks: Vec<Vec<f64>> = pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let (lo, hi) = (c * CHUNK, ((c + 1) * CHUNK).min(count));
                let mut out = vec![0.0; (hi - lo) as usize * stats];
                for (i, row) in (lo..hi).zip(out.chunks_mut(stats.max(1))) {
                    draw(&mut sample_rng(seed, i), row)?;
                }
                Ok(out)
            })
            .collect::<Result<_>>()
    })?;
    let all: Vec<f64> = blocks.concat();
    Ok((0..stats)
        .map(|s| {
            let column: Vec<f64> = all.iter().skip(s).step_by(stats).copied().collect();
            McEstimate::from_values(&column, seed)
        })
        .collect())
}

/// Estimate of `E[statistic(sample)]` over `count` independent samples.
pub fn mc_estimate<S, T, F>(
    sampler: S,
    statistic: F,
    count: u64,
    seed: u64,
    workers: usize,
) -> Result<McEstimate>
where
    S: Fn(&mut ChaCha8Rng) -> Result<T> + Sync,
    F: Fn(&T) -> f64 + Sync,
{
    let v = mc_estimate_vec(1, count, seed, workers, |rng, out| {
        out[0] = statistic(&sampler(rng)?);
        Ok(())
    })?;
    Ok(v[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_core::RngCore;

    #[test]
    fn constant_statistic_has_no_error() {
        let e = mc_estimate(|_| Ok(()), |_| 3.5, 2500, 1, 2).unwrap();
        assert_eq!((e.mean, e.std_error, e.count, e.seed), (3.5, 0.0, 2500, 1));
        assert!(mc_estimate(|_| Ok(()), |_| 1.0, 0, 1, 1).is_err());
        assert!(mc_estimate(|_| Ok(()), |_| 1.0, 1, 1, 0).is_err());
    }

    #[test]
    fn bernoulli_calibration() {
        let q = 0.3;
        let cut = (q * 2f64.powi(64)) as u64;
        let count = 40_000;
        let e = mc_estimate(
            |rng| Ok(rng.next_u64() < cut),
            |&hit| f64::from(u8::from(hit)),
            count,
            99,
            3,
        )
        .unwrap();
        assert!((e.mean - q).abs() <= 4.0 * (q * (1.0 - q) / count as f64).sqrt());
    }

    #[test]
    fn independent_of_worker_count() {
        let f = |rng: &mut ChaCha8Rng| Ok(rng.next_u64() as f64 / 2f64.powi(64));
        let one = mc_estimate(f, |&x| x, 5000, 42, 1).unwrap();
        for w in [2, 4, 16] {
            assert_eq!(one, mc_estimate(f, |&x| x, 5000, 42, w).unwrap());
        }
        assert_ne!(one, mc_estimate(f, |&x| x, 5000, 43, 1).unwrap());
    }
}
