//! Deterministic propagation of the pure-dephasing quantum master equation
//! dρ/dt = −i[H, ρ] + L[ρ].

use num_complex::Complex64;

use crate::density::{CMatrix, DensityMatrix};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::integrator::{integrate, richardson_check, Derivative, RichardsonReport};
use crate::model::AggregateModel;

#[derive(Debug, Clone)]
pub struct QuantumTrajectory {
    pub grid: TimeGrid,
    pub states: Vec<DensityMatrix>,
}

impl QuantumTrajectory {
    pub fn populations(&self, site: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.get(site, site).re).collect()
    }
}

/// ρ packed as [Re ρ (row-major) | Im ρ (row-major)].
pub(crate) struct LindbladRhs<'a> {
    pub model: &'a AggregateModel,
}

impl Derivative for LindbladRhs<'_> {
    fn dim(&self) -> usize {
        2 * self.model.n_sites().pow(2)
    }

    fn eval(&self, y: &[f64], dy: &mut [f64]) {
        let n = self.model.n_sites();
        let nn = n * n;
        let (re, im) = y.split_at(nn);
        let (dre, dim) = dy.split_at_mut(nn);
        let eps = self.model.epsilon();
        let rates = self.model.dephasing_rates();
        for a in 0..n {
            let row_a = self.model.neighbors(a);
            for b in 0..n {
                let idx = a * n + b;
                let de = eps[a] - eps[b];
                let mut acc_re = de * re[idx];
                let mut acc_im = de * im[idx];
                for &(l, v) in row_a {
                    acc_re += v * re[l * n + b];
                    acc_im += v * im[l * n + b];
                }
                for &(l, v) in self.model.neighbors(b) {
                    acc_re -= v * re[a * n + l];
                    acc_im -= v * im[a * n + l];
                }
                let g = rates[idx];
                // −i·acc
                dre[idx] = acc_im - g * re[idx];
                dim[idx] = -acc_re - g * im[idx];
            }
        }
    }
}

pub(crate) fn pack(rho: &CMatrix) -> Vec<f64> {
    let n = rho.nrows();
    let mut y = vec![0.0; 2 * n * n];
    for a in 0..n {
        for b in 0..n {
            y[a * n + b] = rho[(a, b)].re;
            y[n * n + a * n + b] = rho[(a, b)].im;
        }
    }
    y
}

pub(crate) fn unpack(y: &[f64], n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |a, b| Complex64::new(y[a * n + b], y[n * n + a * n + b]))
}

fn check_initial(model: &AggregateModel, rho0: &DensityMatrix) -> Result<()> {
    if rho0.dim() != model.n_sites() {
        return Err(Error::InvalidInitialState(format!(
            "initial state has dimension {}, model has {} sites",
            rho0.dim(),
            model.n_sites()
        )));
    }
    rho0.validate_state()
        .map_err(|e| Error::InvalidInitialState(e.to_string()))
}

pub fn propagate_lindblad(
    model: &AggregateModel,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<QuantumTrajectory> {
    grid.check_step(model)?;
    check_initial(model, rho0)?;
    let n = model.n_sites();
    let rhs = LindbladRhs { model };
    let mut states = Vec::with_capacity(grid.n_samples);
    integrate(&rhs, &pack(rho0.matrix()), grid, |_, y| {
        states.push(DensityMatrix::from_matrix(unpack(y, n)).expect("square"));
    });
    Ok(QuantumTrajectory { grid: *grid, states })
}

/// Step-halving self-check for a Lindblad run.
pub fn lindblad_richardson(
    model: &AggregateModel,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<RichardsonReport> {
    grid.check_step(model)?;
    check_initial(model, rho0)?;
    Ok(richardson_check(&LindbladRhs { model }, &pack(rho0.matrix()), grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{commutator_action, dephasing_action};
    use crate::units::UnitSystem;
    use nalgebra::DMatrix;

    fn dimer(eps: f64, v: f64, g: f64) -> AggregateModel {
        AggregateModel::build(
            vec![eps, eps],
            DMatrix::from_row_slice(2, 2, &[0.0, v, v, 0.0]),
            vec![g, g],
            UnitSystem::DimensionlessV,
        )
        .unwrap()
    }

    #[test]
    fn packed_rhs_matches_operator_form() {
        let model = AggregateModel::build(
            vec![0.3, -1.2, 2.0],
            DMatrix::from_row_slice(3, 3, &[0.0, 0.7, -0.2, 0.7, 0.0, 1.1, -0.2, 1.1, 0.0]),
            vec![0.5, 1.5, 0.0],
            UnitSystem::DimensionlessV,
        )
        .unwrap();
        let m = CMatrix::from_fn(3, 3, |a, b| Complex64::new((a + 2 * b) as f64 * 0.1, a as f64 - b as f64));
        let expected = commutator_action(&model, &m).unwrap() + dephasing_action(&model, &m).unwrap();
        let mut dy = vec![0.0; 18];
        LindbladRhs { model: &model }.eval(&pack(&m), &mut dy);
        let got = unpack(&dy, 3);
        assert!((got - expected).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn rabi_dimer() {
        let model = dimer(0.0, 1.0, 0.0);
        let grid = TimeGrid::for_model(&model, 0.0, std::f64::consts::FRAC_PI_2, 51).unwrap();
        let traj = propagate_lindblad(&model, &DensityMatrix::localized(2, 0).unwrap(), &grid).unwrap();
        for (k, s) in traj.states.iter().enumerate() {
            let t = grid.time(k);
            assert!((s.get(0, 0).re - t.cos().powi(2)).abs() < 1e-10);
        }
        assert!(traj.states.last().unwrap().get(0, 0).re.abs() < 1e-10);
    }

    #[test]
    fn pure_coherence_decay() {
        let model = dimer(0.0, 0.0, 1.0);
        let half = Complex64::new(0.5, 0.0);
        let rho0 = DensityMatrix::new_state(CMatrix::from_element(2, 2, half)).unwrap();
        let grid = TimeGrid::new(0.0, 3.0, 31, 0.01).unwrap();
        let traj = propagate_lindblad(&model, &rho0, &grid).unwrap();
        for (k, s) in traj.states.iter().enumerate() {
            let t = grid.time(k);
            assert!((s.get(0, 1).re - 0.5 * (-t).exp()).abs() < 1e-10);
            assert!((s.get(0, 0).re - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let model = dimer(0.0, 1.0, 0.0);
        let grid = TimeGrid::new(0.0, 10.0, 11, 1.0).unwrap();
        let rho0 = DensityMatrix::localized(2, 0).unwrap();
        assert!(matches!(propagate_lindblad(&model, &rho0, &grid), Err(Error::StepTooLarge { .. })));
        let grid = TimeGrid::new(0.0, 1.0, 11, 0.01).unwrap();
        let bad = DensityMatrix::localized(3, 0).unwrap();
        assert!(matches!(propagate_lindblad(&model, &bad, &grid), Err(Error::InvalidInitialState(_))));
    }

    #[test]
    fn self_check_is_tiny() {
        let model = dimer(0.0, 1.0, 0.5);
        let grid = TimeGrid::for_model(&model, 0.0, 5.0, 11).unwrap();
        let r = lindblad_richardson(&model, &DensityMatrix::localized(2, 0).unwrap(), &grid).unwrap();
        assert!(r.max_difference < 1e-9, "{r:?}");
    }

    #[test]
    fn dephasing_suppresses_coherence_monotonically_in_gamma() {
        let grid = TimeGrid::new(0.0, 5.0, 101, 0.001).unwrap();
        let rho0 = DensityMatrix::localized(2, 0).unwrap();
        let peak = |g: f64| {
            let traj = propagate_lindblad(&dimer(0.0, 1.0, g), &rho0, &grid).unwrap();
            traj.states.iter().map(|s| s.get(0, 1).norm()).fold(0.0, f64::max)
        };
        let peaks: Vec<f64> = [0.0, 1.0, 5.0, 20.0].iter().map(|&g| peak(g)).collect();
        assert!(peaks.windows(2).all(|w| w[1] < w[0]), "{peaks:?}");
    }
}
