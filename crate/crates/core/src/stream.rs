//! Reproducible per-trajectory random streams and the frequency-noise
//! sources that consume them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Random stream owned by one trajectory.
pub type TrajectoryStream = ChaCha8Rng;

/// Stream for trajectory `index` under `master_seed`. ChaCha keys on the
/// seed and selects one of 2⁶⁴ independent streams by index, so the result
/// depends only on (master_seed, index).
pub fn derive_stream(master_seed: u64, index: u64) -> TrajectoryStream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseKind {
    /// δ-correlated Gaussian fluctuations of the site frequencies.
    #[default]
    GaussianWhite,
}

/// Random phase accumulated by each site over one step:
/// Δφ_n = ∫ w_n(t) dt over [t, t + dt].
pub trait PhaseNoise {
    fn increments(&mut self, dt: f64, out: &mut [f64]);
}

/// Independent white Gaussian frequency noise per site with
/// ⟨w_n(t) w_m(t')⟩ = γ_n δ_nm δ(t − t'), so Δφ_n ~ Normal(0, γ_n dt).
pub struct WhiteGaussianNoise<R> {
    rng: R,
    sqrt_gamma: Vec<f64>,
}

impl<R: Rng> WhiteGaussianNoise<R> {
    pub fn new(rng: R, gamma: &[f64]) -> Self {
        Self {
            rng,
            sqrt_gamma: gamma.iter().map(|g| g.sqrt()).collect(),
        }
    }

    pub fn rng_mut(&mut self) -> &mut R {
        &mut self.rng
    }
}

impl<R: Rng> PhaseNoise for WhiteGaussianNoise<R> {
    fn increments(&mut self, dt: f64, out: &mut [f64]) {
        let scale = dt.sqrt();
        for (o, sg) in out.iter_mut().zip(&self.sqrt_gamma) {
            // one draw per site per step, even where γ = 0, so streams stay aligned
            let xi: f64 = self.rng.sample(StandardNormal);
            *o = sg * scale * xi;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub gamma: Vec<f64>,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn white(gamma: &[f64], seed: u64) -> Self {
        Self {
            kind: NoiseKind::GaussianWhite,
            gamma: gamma.to_vec(),
            seed,
        }
    }

    /// Noise source for trajectory `index`.
    pub fn source(&self, index: u64) -> WhiteGaussianNoise<TrajectoryStream> {
        match self.kind {
            NoiseKind::GaussianWhite => WhiteGaussianNoise::new(derive_stream(self.seed, index), &self.gamma),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws(seed: u64, index: u64, n: usize) -> Vec<f64> {
        let mut rng = derive_stream(seed, index);
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }

    #[test]
    fn same_key_same_stream() {
        assert_eq!(draws(42, 0, 1000), draws(42, 0, 1000));
    }

    #[test]
    fn different_seed_or_index_differs() {
        assert_ne!(draws(42, 7, 16), draws(43, 7, 16));
        assert_ne!(draws(42, 0, 16), draws(42, 1, 16));
    }

    #[test]
    fn neighbouring_streams_are_uncorrelated() {
        let n = 100_000;
        let a = draws(42, 0, n);
        let b = draws(42, 1, n);
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (ma, mb) = (mean(&a), mean(&b));
        let cov: f64 = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n as f64;
        let var = |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
        let corr = cov / (var(&a, ma) * var(&b, mb)).sqrt();
        assert!(corr.abs() < 3.0 / (n as f64).sqrt(), "corr {corr}");
    }

    #[test]
    fn phase_increment_variance() {
        let mut noise = NoiseSpec::white(&[4.0, 0.0], 1).source(0);
        let dt = 0.01;
        let n = 50_000;
        let mut out = [0.0; 2];
        let mut sum_sq = 0.0;
        for _ in 0..n {
            noise.increments(dt, &mut out);
            sum_sq += out[0] * out[0];
            assert_eq!(out[1], 0.0);
        }
        let var = sum_sq / n as f64;
        // Var of the sample variance is 2σ⁴/n
        let sigma2 = 4.0 * dt;
        assert!((var - sigma2).abs() < 5.0 * sigma2 * (2.0 / n as f64).sqrt());
    }
}
