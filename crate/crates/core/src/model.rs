//! The aggregate model: site frequencies, couplings and dephasing rates,
//! plus the coherent and dephasing super-operator actions shared by every
//! engine.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::density::CMatrix;
use crate::error::{Error, Result};
use crate::units::UnitSystem;

/// Asymmetry that is silently averaged away; anything larger is a data error.
pub const COUPLING_SYMMETRY_TOL: f64 = 1e-12;

/// Site energies ε_n, couplings V_nm and pure-dephasing rates γ_n of a
/// molecular aggregate, all stored as angular frequencies (ħ = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateModel {
    epsilon: Vec<f64>,
    coupling: DMatrix<f64>,
    gamma: Vec<f64>,
    units: UnitSystem,
    // nonzero off-diagonal couplings per row: (column, value)
    neighbors: Vec<Vec<(usize, f64)>>,
    // ½(γ_n+γ_m) − √(γ_nγ_m)δ_nm, row-major
    dephasing_rates: Vec<f64>,
}

impl AggregateModel {
    /// Validates and builds a model. `coupling` is given row-major as an
    /// N×N matrix; its diagonal must be zero.
    pub fn build(
        epsilon: Vec<f64>,
        coupling: DMatrix<f64>,
        gamma: Vec<f64>,
        units: UnitSystem,
    ) -> Result<Self> {
        let n = epsilon.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("model needs at least one site".into()));
        }
        if coupling.nrows() != coupling.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "coupling must be square, got {}x{}",
                coupling.nrows(),
                coupling.ncols()
            )));
        }
        if coupling.nrows() != n || gamma.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} energies, {}x{} couplings, {} rates",
                n,
                coupling.nrows(),
                coupling.ncols(),
                gamma.len()
            )));
        }
        if epsilon.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite("site energies".into()));
        }
        if coupling.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("couplings".into()));
        }
        for (index, &value) in gamma.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite("dephasing rates".into()));
            }
            if value < 0.0 {
                return Err(Error::NegativeRate { index, value });
            }
        }
        for i in 0..n {
            if coupling[(i, i)] != 0.0 {
                return Err(Error::NonZeroDiagonal { index: i, value: coupling[(i, i)] });
            }
            for j in (i + 1)..n {
                let delta = (coupling[(i, j)] - coupling[(j, i)]).abs();
                if delta > COUPLING_SYMMETRY_TOL {
                    return Err(Error::AsymmetricCoupling { i, j, delta });
                }
            }
        }
        let coupling = (&coupling + coupling.transpose()) * 0.5;

        let neighbors = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| coupling[(i, j)] != 0.0)
                    .map(|j| (j, coupling[(i, j)]))
                    .collect()
            })
            .collect();
        let mut dephasing_rates = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dephasing_rates[i * n + j] = if i == j {
                    0.0
                } else {
                    0.5 * (gamma[i] + gamma[j])
                };
            }
        }

        Ok(Self {
            epsilon,
            coupling,
            gamma,
            units,
            neighbors,
            dephasing_rates,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.epsilon.len()
    }

    pub fn epsilon(&self) -> &[f64] {
        &self.epsilon
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.coupling
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn units(&self) -> UnitSystem {
        self.units
    }

    /// ω_n = ε_n/ħ; identical to ε_n with ħ = 1.
    pub fn omega(&self) -> &[f64] {
        &self.epsilon
    }

    pub(crate) fn neighbors(&self, n: usize) -> &[(usize, f64)] {
        &self.neighbors[n]
    }

    /// Pure-dephasing rate of element (n, m): ½(γ_n+γ_m) − √(γ_nγ_m)δ_nm.
    pub fn dephasing_rate(&self, n: usize, m: usize) -> f64 {
        self.dephasing_rates[n * self.n_sites() + m]
    }

    pub(crate) fn dephasing_rates(&self) -> &[f64] {
        &self.dephasing_rates
    }

    pub fn max_abs_coupling(&self) -> f64 {
        self.coupling.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Fastest rate in the problem, max(|ω|_max, γ_max, 2|V|_max); sets the
    /// fixed-step size rule.
    pub fn fastest_rate(&self) -> f64 {
        let w = self.epsilon.iter().fold(0.0f64, |a, e| a.max(e.abs()));
        let g = self.gamma.iter().fold(0.0f64, |a, e| a.max(*e));
        w.max(g).max(2.0 * self.max_abs_coupling())
    }

    /// Same model with every site energy shifted by `delta`.
    pub fn shifted(&self, delta: f64) -> Self {
        let mut out = self.clone();
        out.epsilon.iter_mut().for_each(|e| *e += delta);
        out
    }

    /// Same model with a different dephasing rate on every site.
    pub fn with_uniform_gamma(&self, gamma: f64) -> Result<Self> {
        Self::build(
            self.epsilon.clone(),
            self.coupling.clone(),
            vec![gamma; self.n_sites()],
            self.units,
        )
    }

    fn check_dim(&self, m: &CMatrix) -> Result<()> {
        let n = self.n_sites();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected {n}x{n} matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(())
    }
}

/// Coherent part −i[H, m] with H_nm = ε_n δ_nm + V_nm.
pub fn commutator_action(model: &AggregateModel, m: &CMatrix) -> Result<CMatrix> {
    model.check_dim(m)?;
    let n = model.n_sites();
    let eps = model.epsilon();
    let minus_i = Complex64::new(0.0, -1.0);
    Ok(CMatrix::from_fn(n, n, |a, b| {
        let mut acc = (eps[a] - eps[b]) * m[(a, b)];
        for &(l, v) in model.neighbors(a) {
            acc += v * m[(l, b)];
        }
        for &(l, v) in model.neighbors(b) {
            acc -= v * m[(a, l)];
        }
        minus_i * acc
    }))
}

/// Pure-dephasing functional L[m]_nm = −(½(γ_n+γ_m) − √(γ_nγ_m)δ_nm) m_nm.
pub fn dephasing_action(model: &AggregateModel, m: &CMatrix) -> Result<CMatrix> {
    model.check_dim(m)?;
    let n = model.n_sites();
    Ok(CMatrix::from_fn(n, n, |a, b| -model.dephasing_rate(a, b) * m[(a, b)]))
}
