//! Fixed-step classical fourth-order Runge–Kutta on a flat real state
//! vector. Every deterministic engine packs its state into one `Vec<f64>`
//! and supplies a derivative callback.

use crate::grid::TimeGrid;

pub trait Derivative {
    fn dim(&self) -> usize;
    fn eval(&self, y: &[f64], dy: &mut [f64]);
}

pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Self {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    pub fn step<F: Derivative + ?Sized>(&mut self, f: &F, y: &mut [f64], h: f64) {
        let half = 0.5 * h;
        f.eval(y, &mut self.k1);
        for ((t, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k1) {
            *t = y + half * k;
        }
        f.eval(&self.tmp, &mut self.k2);
        for ((t, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k2) {
            *t = y + half * k;
        }
        f.eval(&self.tmp, &mut self.k3);
        for ((t, y), k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k3) {
            *t = y + h * k;
        }
        f.eval(&self.tmp, &mut self.k4);
        let sixth = h / 6.0;
        for i in 0..y.len() {
            y[i] += sixth * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
    }
}

/// Integrates `f` from `y0` over `grid`, calling `observe(k, y)` at every
/// output sample (including k = 0).
pub fn integrate<F, O>(f: &F, y0: &[f64], grid: &TimeGrid, mut observe: O)
where
    F: Derivative + ?Sized,
    O: FnMut(usize, &[f64]),
{
    let mut y = y0.to_vec();
    let mut rk = Rk4::new(y.len());
    let steps = grid.steps_per_sample();
    let h = grid.effective_step();
    observe(0, &y);
    for k in 1..grid.n_samples {
        for _ in 0..steps {
            rk.step(f, &mut y, h);
        }
        observe(k, &y);
    }
}

/// Collects every sample of an integration run.
pub fn integrate_all<F: Derivative + ?Sized>(f: &F, y0: &[f64], grid: &TimeGrid) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(grid.n_samples);
    integrate(f, y0, grid, |_, y| out.push(y.to_vec()));
    out
}

/// Step-halving self-check result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RichardsonReport {
    /// max |y_dt − y_dt/2| over all samples and components
    pub max_difference: f64,
    /// Richardson estimate of the error left in the dt/2 run (difference / 15)
    pub estimated_error: f64,
}

/// Runs at the grid step and at half of it and compares.
pub fn richardson_check<F: Derivative + ?Sized>(f: &F, y0: &[f64], grid: &TimeGrid) -> RichardsonReport {
    let coarse = integrate_all(f, y0, grid);
    let fine = integrate_all(f, y0, &grid.halved());
    let max_difference = coarse
        .iter()
        .zip(&fine)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    RichardsonReport {
        max_difference,
        estimated_error: max_difference / 15.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Harmonic(f64);

    impl Derivative for Harmonic {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, y: &[f64], dy: &mut [f64]) {
            dy[0] = self.0 * y[1];
            dy[1] = -self.0 * y[0];
        }
    }

    #[test]
    fn harmonic_oscillator_matches_closed_form() {
        let w = 3.0;
        let grid = TimeGrid::new(0.0, 2.0, 21, 1e-3).unwrap();
        let out = integrate_all(&Harmonic(w), &[1.0, 0.0], &grid);
        for (k, y) in out.iter().enumerate() {
            let t = grid.time(k);
            assert!((y[0] - (w * t).cos()).abs() < 1e-11);
            assert!((y[1] + (w * t).sin()).abs() < 1e-11);
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let w = 1.0;
        let err = |dt: f64| {
            let grid = TimeGrid::new(0.0, 1.0, 2, dt).unwrap();
            let out = integrate_all(&Harmonic(w), &[1.0, 0.0], &grid);
            (out[1][0] - 1f64.cos()).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn richardson_estimate_is_small_for_fine_steps() {
        let grid = TimeGrid::new(0.0, 1.0, 11, 0.01).unwrap();
        let r = richardson_check(&Harmonic(2.0), &[1.0, 0.0], &grid);
        assert!(r.max_difference < 1e-8 && r.estimated_error < r.max_difference, "{r:?}");
    }
}
