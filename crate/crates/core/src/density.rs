//! Complex N×N matrices used both for quantum density matrices ρ and for
//! normalized classical second-moment matrices σ/𝒩.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance for the Hermiticity check.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Smallest eigenvalue accepted as positive semidefinite.
pub const PSD_TOL: f64 = -1e-9;
/// Trace tolerance for a physical initial state.
pub const TRACE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: CMatrix,
}

impl DensityMatrix {
    /// Wraps a square matrix without any physical checks.
    pub fn from_matrix(data: CMatrix) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self { data })
    }

    /// Builds a validated quantum state: Hermitian, unit trace, PSD.
    pub fn new_state(data: CMatrix) -> Result<Self> {
        let rho = Self::from_matrix(data)?;
        rho.validate_state()?;
        Ok(rho)
    }

    /// |ψ⟩⟨ψ| for a normalized amplitude vector.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if norm <= 0.0 {
            return Err(Error::ZeroState);
        }
        let n = amplitudes.len();
        let data = CMatrix::from_fn(n, n, |i, j| amplitudes[i] * amplitudes[j].conj() / norm);
        Ok(Self { data })
    }

    /// Localized excitation on a single site.
    pub fn localized(n: usize, site: usize) -> Result<Self> {
        if site >= n {
            return Err(Error::IndexOutOfRange { index: site, len: n });
        }
        let mut data = CMatrix::zeros(n, n);
        data[(site, site)] = Complex64::new(1.0, 0.0);
        Ok(Self { data })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.data[(n, m)]
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.data[(n, n)].re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// max |ρ - ρ†| divided by max |ρ| (absolute when ρ = 0).
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut err = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                err = err.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        let scale = self.max_abs();
        if scale > 0.0 {
            err / scale
        } else {
            err
        }
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = self.hermitian_part();
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Eigen-decomposition of the Hermitian part: (weight, eigenvector) pairs.
    pub fn eigen_decomposition(&self) -> Vec<(f64, Vec<Complex64>)> {
        let eig = self.hermitian_part().symmetric_eigen();
        eig.eigenvalues
            .iter()
            .enumerate()
            .map(|(k, &w)| (w, eig.eigenvectors.column(k).iter().copied().collect()))
            .collect()
    }

    fn hermitian_part(&self) -> CMatrix {
        (&self.data + self.data.adjoint()) * Complex64::new(0.5, 0.0)
    }

    pub fn validate_state(&self) -> Result<()> {
        if self.data.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidInitialState("non-finite entry".into()));
        }
        let herm = self.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidInitialState(format!(
                "not Hermitian (relative error {herm:e})"
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidInitialState(format!("trace {tr} is not 1")));
        }
        let min_ev = self.min_eigenvalue();
        if min_ev < PSD_TOL {
            return Err(Error::NotPositive(min_ev));
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        (&self.data - &other.data).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn pure_state_is_valid() {
        let s = 0.5f64.sqrt();
        let rho = DensityMatrix::pure(&[c(s, 0.0), c(0.0, s)]).unwrap();
        rho.validate_state().unwrap();
        assert!((rho.get(0, 1) - c(0.0, -0.5)).norm() < 1e-15);
        let ev = rho.eigenvalues();
        assert!(ev[0].abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian_and_bad_trace() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(DensityMatrix::new_state(m), Err(Error::InvalidInitialState(_))));
        let m = CMatrix::from_row_slice(2, 2, &[c(0.6, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.6, 0.0)]);
        assert!(matches!(DensityMatrix::new_state(m), Err(Error::InvalidInitialState(_))));
    }

    #[test]
    fn rejects_negative_eigenvalue() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!(matches!(DensityMatrix::new_state(m), Err(Error::NotPositive(_))));
    }

    #[test]
    fn zero_amplitudes() {
        assert!(matches!(DensityMatrix::pure(&[c(0.0, 0.0); 2]), Err(Error::ZeroState)));
    }
}
