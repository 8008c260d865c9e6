//! Trajectory unravelings of the two master equations and their ensemble
//! averages.
//!
//! Both trajectory types use the same Strang splitting per step h: a
//! deterministic RK4 half-step, an exact per-site phase kick
//! c_n ← c_n e^{−iΔφ_n} with Δφ_n ~ Normal(0, γ_n h), and a second
//! deterministic half-step. The kick is the Stratonovich reading of white
//! frequency noise; its average reproduces the Itô drift −γ_n c_n/2, so no
//! separate drift term is added.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::classical::ClassicalStart;
use crate::density::{CMatrix, DensityMatrix};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::integrator::{Derivative, Rk4};
use crate::model::AggregateModel;
use crate::scenario::InitialState;
use crate::stream::{NoiseSpec, PhaseNoise};

/// Trajectories computed in parallel before being folded in index order.
const BATCH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unraveling {
    /// Stochastic Schrödinger equation: ċ = −i(ε + h(t))c − iVc.
    Quantum,
    /// Coupled Kubo oscillators: ż = −i(ω + w(t))z − i Σ 2V Re z.
    Classical,
}

/// Complex amplitudes sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudePath {
    pub grid: TimeGrid,
    pub amplitudes: Vec<Vec<Complex64>>,
}

impl AmplitudePath {
    pub fn dim(&self) -> usize {
        self.amplitudes.first().map_or(0, Vec::len)
    }
}

/// Amplitudes packed as [Re c | Im c].
struct SchrodingerRhs<'a>(&'a AggregateModel);

impl Derivative for SchrodingerRhs<'_> {
    fn dim(&self) -> usize {
        2 * self.0.n_sites()
    }

    fn eval(&self, y: &[f64], dy: &mut [f64]) {
        let n = self.0.n_sites();
        let (a, b) = y.split_at(n);
        let (da, db) = dy.split_at_mut(n);
        let w = self.0.omega();
        for k in 0..n {
            let mut hb = w[k] * b[k];
            let mut ha = w[k] * a[k];
            for &(l, v) in self.0.neighbors(k) {
                hb += v * b[l];
                ha += v * a[l];
            }
            da[k] = hb;
            db[k] = -ha;
        }
    }
}

/// Positions and momenta packed as [x | p], z = x + ip.
struct KuboRhs<'a>(&'a AggregateModel);

impl Derivative for KuboRhs<'_> {
    fn dim(&self) -> usize {
        2 * self.0.n_sites()
    }

    fn eval(&self, y: &[f64], dy: &mut [f64]) {
        let n = self.0.n_sites();
        let (x, p) = y.split_at(n);
        let (dx, dp) = dy.split_at_mut(n);
        let w = self.0.omega();
        for k in 0..n {
            dx[k] = w[k] * p[k];
            let mut force = w[k] * x[k];
            for &(l, v) in self.0.neighbors(k) {
                force += 2.0 * v * x[l];
            }
            dp[k] = -force;
        }
    }
}

fn pack(c: &[Complex64]) -> Vec<f64> {
    c.iter().map(|z| z.re).chain(c.iter().map(|z| z.im)).collect()
}

fn unpack(y: &[f64]) -> Vec<Complex64> {
    let n = y.len() / 2;
    (0..n).map(|k| Complex64::new(y[k], y[n + k])).collect()
}

fn kick(y: &mut [f64], phases: &[f64]) {
    let n = phases.len();
    for (k, &phi) in phases.iter().enumerate() {
        if phi == 0.0 {
            continue;
        }
        // multiply by e^{−iφ}
        let (s, c) = phi.sin_cos();
        let (re, im) = (y[k], y[n + k]);
        y[k] = c * re + s * im;
        y[n + k] = c * im - s * re;
    }
}

fn sample_path<F: Derivative, N: PhaseNoise>(
    rhs: &F,
    c0: &[Complex64],
    grid: &TimeGrid,
    noise: &mut N,
) -> AmplitudePath {
    let n = c0.len();
    let mut y = pack(c0);
    let mut rk = Rk4::new(y.len());
    let mut phases = vec![0.0; n];
    let steps = grid.steps_per_sample();
    let h = grid.effective_step();
    let mut amplitudes = Vec::with_capacity(grid.n_samples);
    amplitudes.push(c0.to_vec());
    for _ in 1..grid.n_samples {
        for _ in 0..steps {
            rk.step(rhs, &mut y, 0.5 * h);
            noise.increments(h, &mut phases);
            kick(&mut y, &phases);
            rk.step(rhs, &mut y, 0.5 * h);
        }
        amplitudes.push(unpack(&y));
    }
    AmplitudePath {
        grid: *grid,
        amplitudes,
    }
}

fn check_start(model: &AggregateModel, c0: &[Complex64], grid: &TimeGrid) -> Result<()> {
    grid.check_step(model)?;
    if c0.len() != model.n_sites() {
        return Err(Error::InvalidInitialState(format!(
            "{} amplitudes for {} sites",
            c0.len(),
            model.n_sites()
        )));
    }
    if !(c0.iter().map(|z| z.norm_sqr()).sum::<f64>() > 0.0) {
        return Err(Error::ZeroState);
    }
    Ok(())
}

/// One stochastic Schrödinger trajectory.
pub fn sample_sse_trajectory<N: PhaseNoise>(
    model: &AggregateModel,
    c0: &[Complex64],
    grid: &TimeGrid,
    noise: &mut N,
) -> Result<AmplitudePath> {
    check_start(model, c0, grid)?;
    Ok(sample_path(&SchrodingerRhs(model), c0, grid, noise))
}

/// One Kubo-oscillator trajectory.
pub fn sample_kubo_trajectory<N: PhaseNoise>(
    model: &AggregateModel,
    z0: &[Complex64],
    grid: &TimeGrid,
    noise: &mut N,
) -> Result<AmplitudePath> {
    check_start(model, z0, grid)?;
    Ok(sample_path(&KuboRhs(model), z0, grid, noise))
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Running first and second moments of the outer products c c† per sample.
#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    pub n_traj: usize,
    pub grid: TimeGrid,
    dim: usize,
    // per sample, per element (row-major): [Σ re, Σ im, Σ re², Σ im²]
    sums: Vec<[CompensatedSum; 4]>,
}

impl TrajectoryEnsemble {
    pub fn new(grid: TimeGrid, dim: usize) -> Self {
        Self {
            n_traj: 0,
            grid,
            dim,
            sums: vec![[CompensatedSum::default(); 4]; grid.n_samples * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn push(&mut self, path: &AmplitudePath) -> Result<()> {
        if path.grid != self.grid || path.amplitudes.len() != self.grid.n_samples {
            return Err(Error::GridMismatch("path grid differs from ensemble grid".into()));
        }
        if path.dim() != self.dim {
            return Err(Error::GridMismatch(format!(
                "path has {} sites, ensemble has {}",
                path.dim(),
                self.dim
            )));
        }
        self.push_weighted(path, 1.0);
        Ok(())
    }

    fn push_weighted(&mut self, path: &AmplitudePath, weight: f64) {
        let n = self.dim;
        for (k, c) in path.amplitudes.iter().enumerate() {
            for a in 0..n {
                for b in 0..n {
                    let z = c[a] * c[b].conj() * weight;
                    let acc = &mut self.sums[(k * n + a) * n + b];
                    acc[0].add(z.re);
                    acc[1].add(z.im);
                    acc[2].add(z.re * z.re);
                    acc[3].add(z.im * z.im);
                }
            }
        }
        self.n_traj += 1;
    }

    fn raw_mean(&self, k: usize) -> CMatrix {
        let n = self.dim;
        let count = self.n_traj.max(1) as f64;
        CMatrix::from_fn(n, n, |a, b| {
            let acc = &self.sums[(k * n + a) * n + b];
            Complex64::new(acc[0].value(), acc[1].value()) / count
        })
    }

    /// Hermitized ensemble mean (M + M†)/2 at sample `k`.
    pub fn mean(&self, k: usize) -> DensityMatrix {
        let m = self.raw_mean(k);
        let herm = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        DensityMatrix::from_matrix(herm).expect("square")
    }

    /// Standard error of each element of the mean, combining real and
    /// imaginary parts as sqrt(se_re² + se_im²). `None` for fewer than two
    /// trajectories.
    pub fn standard_error(&self, k: usize) -> Option<DMatrix<f64>> {
        if self.n_traj < 2 {
            return None;
        }
        let n = self.dim;
        let count = self.n_traj as f64;
        Some(DMatrix::from_fn(n, n, |a, b| {
            let acc = &self.sums[(k * n + a) * n + b];
            let var = |s: f64, s2: f64| ((s2 - s * s / count) / (count - 1.0)).max(0.0);
            let v = var(acc[0].value(), acc[2].value()) + var(acc[1].value(), acc[3].value());
            (v / count).sqrt()
        }))
    }
}

/// Folds paths, in the given order, into an ensemble.
pub fn accumulate_ensemble(paths: &[AmplitudePath]) -> Result<TrajectoryEnsemble> {
    let first = paths
        .first()
        .ok_or_else(|| Error::GridMismatch("no paths to accumulate".into()))?;
    let mut ens = TrajectoryEnsemble::new(first.grid, first.dim());
    for p in paths {
        ens.push(p)?;
    }
    Ok(ens)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleConfig {
    pub unraveling: Unraveling,
    pub n_traj: usize,
    pub seed: u64,
    /// Start convention for the classical unraveling; ignored by the
    /// quantum one, where a global phase has no effect.
    pub start: ClassicalStart,
}

impl EnsembleConfig {
    pub fn new(unraveling: Unraveling, n_traj: usize, seed: u64) -> Self {
        Self {
            unraveling,
            n_traj,
            seed,
            start: ClassicalStart::default(),
        }
    }
}

/// Samples `n_traj` trajectories in parallel and averages them. Trajectory
/// k draws from stream (seed, k); mixtures pick their component from the
/// first uniform draw of that stream. Phase-averaged classical starts then
/// draw a uniform global phase e^{2πiu}. The result is independent of thread
/// count and scheduling.
pub fn run_ensemble(
    model: &AggregateModel,
    initial: &InitialState,
    grid: &TimeGrid,
    config: &EnsembleConfig,
) -> Result<TrajectoryEnsemble> {
    if config.n_traj == 0 {
        return Err(Error::InvalidInitialState("ensemble needs at least one trajectory".into()));
    }
    let n = model.n_sites();
    let components = initial.components(n)?;
    for (_, c) in &components {
        check_start(model, c, grid)?;
    }
    let spec = NoiseSpec::white(model.gamma(), config.seed);
    let one = |index: usize| -> AmplitudePath {
        let mut noise = spec.source(index as u64);
        let c0 = if components.len() == 1 {
            &components[0].1
        } else {
            let u: f64 = noise.rng_mut().random();
            pick_component(&components, u)
        };
        match (config.unraveling, config.start) {
            (Unraveling::Quantum, _) => sample_path(&SchrodingerRhs(model), c0, grid, &mut noise),
            (Unraveling::Classical, ClassicalStart::Literal) => sample_path(&KuboRhs(model), c0, grid, &mut noise),
            (Unraveling::Classical, ClassicalStart::PhaseAveraged) => {
                let u: f64 = noise.rng_mut().random();
                let phase = Complex64::from_polar(1.0, std::f64::consts::TAU * u);
                let z0: Vec<Complex64> = c0.iter().map(|z| z * phase).collect();
                sample_path(&KuboRhs(model), &z0, grid, &mut noise)
            }
        }
    };
    let mut ens = TrajectoryEnsemble::new(*grid, n);
    let mut start = 0;
    while start < config.n_traj {
        let end = (start + BATCH).min(config.n_traj);
        let batch: Vec<AmplitudePath> = (start..end).into_par_iter().map(one).collect();
        for p in &batch {
            ens.push_weighted(p, 1.0);
        }
        start = end;
    }
    Ok(ens)
}

fn pick_component(components: &[(f64, Vec<Complex64>)], u: f64) -> &Vec<Complex64> {
    let mut acc = 0.0;
    for (w, c) in components {
        acc += w;
        if u < acc {
            return c;
        }
    }
    &components[components.len() - 1].1
}
