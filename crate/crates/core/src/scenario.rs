//! Scenario builders and initial-state descriptions.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::density::{CMatrix, DensityMatrix};
use crate::error::{Error, Result};
use crate::model::AggregateModel;
use crate::classical::ClassicalStart;
use crate::rst::{initial_rst_pure, phase_average, RstState};
use crate::units::UnitSystem;

/// Tolerance on Σ w_β = 1 for mixtures.
pub const MIXTURE_WEIGHT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// Excitation localized on one site.
    Site(usize),
    /// Normalized pure-state amplitudes.
    Amplitudes(Vec<Complex64>),
    /// Weighted pure states (weights sum to one, amplitudes normalized).
    Mixture(Vec<(f64, Vec<Complex64>)>),
}

fn normalized(amplitudes: &[Complex64]) -> Result<Vec<Complex64>> {
    let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroState);
    }
    Ok(amplitudes.iter().map(|z| z / norm).collect())
}

impl InitialState {
    pub fn amplitudes(amplitudes: &[Complex64]) -> Result<Self> {
        Ok(Self::Amplitudes(normalized(amplitudes)?))
    }

    pub fn mixture(components: Vec<(f64, Vec<Complex64>)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInitialState("empty mixture".into()));
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if let Some((w, _)) = components.iter().find(|(w, _)| !(*w >= 0.0)) {
            return Err(Error::InvalidInitialState(format!("negative mixture weight {w}")));
        }
        if (total - 1.0).abs() > MIXTURE_WEIGHT_TOL {
            return Err(Error::InvalidInitialState(format!("mixture weights sum to {total}, not 1")));
        }
        let dim = components[0].1.len();
        let mut out = Vec::with_capacity(components.len());
        for (w, amps) in components {
            if amps.len() != dim {
                return Err(Error::InvalidInitialState("mixture components differ in dimension".into()));
            }
            out.push((w, normalized(&amps)?));
        }
        Ok(Self::Mixture(out))
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        let bad = |d: usize| Error::InvalidInitialState(format!("initial state has dimension {d}, model has {n} sites"));
        match self {
            InitialState::Site(s) if *s >= n => Err(Error::IndexOutOfRange { index: *s, len: n }),
            InitialState::Amplitudes(a) if a.len() != n => Err(bad(a.len())),
            InitialState::Mixture(c) if c[0].1.len() != n => Err(bad(c[0].1.len())),
            _ => Ok(()),
        }
    }

    /// Pure-state components with their weights.
    pub fn components(&self, n: usize) -> Result<Vec<(f64, Vec<Complex64>)>> {
        self.check_dim(n)?;
        Ok(match self {
            InitialState::Site(s) => {
                let mut c = vec![Complex64::new(0.0, 0.0); n];
                c[*s] = Complex64::new(1.0, 0.0);
                vec![(1.0, c)]
            }
            InitialState::Amplitudes(a) => vec![(1.0, a.clone())],
            InitialState::Mixture(c) => c.clone(),
        })
    }

    pub fn density(&self, n: usize) -> Result<DensityMatrix> {
        let mut data = CMatrix::zeros(n, n);
        for (w, c) in self.components(n)? {
            data += DensityMatrix::pure(&c)?.into_matrix() * Complex64::new(w, 0.0);
        }
        DensityMatrix::new_state(data)
    }

    /// Classical moments Σ_β w_β (R, S, T)[c_β], with z = c (α = 1).
    pub fn rst(&self, n: usize) -> Result<RstState> {
        let mut out = RstState::zeros(n);
        for (w, c) in self.components(n)? {
            let part = initial_rst_pure(&c)?;
            out.r += part.r * w;
            out.s += part.s * w;
            out.t += part.t * w;
        }
        Ok(out)
    }

    /// Classical moments under the chosen start convention.
    pub fn classical_rst(&self, n: usize, start: ClassicalStart) -> Result<RstState> {
        let rst = self.rst(n)?;
        Ok(match start {
            ClassicalStart::Literal => rst,
            ClassicalStart::PhaseAveraged => phase_average(&rst),
        })
    }
}

/// Homogeneous nearest-neighbour chain with uniform ε and γ, excitation
/// starting on `init_site`.
pub fn make_chain(
    n_sites: usize,
    v: f64,
    epsilon: f64,
    gamma: f64,
    init_site: usize,
) -> Result<(AggregateModel, InitialState)> {
    if n_sites == 0 {
        return Err(Error::DimensionMismatch("chain needs at least one site".into()));
    }
    if init_site >= n_sites {
        return Err(Error::IndexOutOfRange {
            index: init_site,
            len: n_sites,
        });
    }
    let coupling = DMatrix::from_fn(n_sites, n_sites, |i, j| if i.abs_diff(j) == 1 { v } else { 0.0 });
    let model = AggregateModel::build(
        vec![epsilon; n_sites],
        coupling,
        vec![gamma; n_sites],
        UnitSystem::DimensionlessV,
    )?;
    Ok((model, InitialState::Site(init_site)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rst::assemble_sigma;

    #[test]
    fn fig_chain() {
        let (m, init) = make_chain(29, 1.0, 40.0, 1.0, 14).unwrap();
        assert_eq!(m.n_sites(), 29);
        assert_eq!(m.coupling()[(13, 14)], 1.0);
        assert_eq!(m.coupling()[(13, 15)], 0.0);
        assert_eq!(init, InitialState::Site(14));
    }

    #[test]
    fn single_site_and_dimer() {
        let (m, _) = make_chain(1, 7.0, 3.0, 0.5, 0).unwrap();
        assert_eq!(m.max_abs_coupling(), 0.0);
        let (m, init) = make_chain(2, 1.0, 0.0, 0.0, 0).unwrap();
        assert_eq!(m.coupling()[(0, 1)], 1.0);
        assert_eq!(init.density(2).unwrap().get(0, 0).re, 1.0);
    }

    #[test]
    fn start_out_of_range() {
        assert!(matches!(make_chain(3, 1.0, 1.0, 0.0, 3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn chains_validate_for_all_sizes() {
        for n in 1..=64 {
            make_chain(n, 1.0, 10.0, 1.0, n / 2).unwrap();
        }
    }

    #[test]
    fn mixture_density_and_moments_agree() {
        let s = 0.5f64.sqrt();
        let c = |a: f64, b: f64| Complex64::new(a, b);
        let init = InitialState::mixture(vec![
            (0.7, vec![c(s, 0.0), c(0.0, s)]),
            (0.3, vec![c(1.0, 0.0), c(0.0, 0.0)]),
        ])
        .unwrap();
        let rho = init.density(2).unwrap();
        assert!(assemble_sigma(&init.rst(2).unwrap()).max_abs_diff(&rho) < 1e-15);
        assert!(InitialState::mixture(vec![(0.5, vec![c(1.0, 0.0)])]).is_err());
    }
}
