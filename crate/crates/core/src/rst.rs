//! Real second-moment representation (R, S, T) of a complex amplitude
//! ensemble z = x + ip:
//!
//! R_nm = ⟨x_n x_m⟩, S_nm = ⟨p_n p_m⟩, T_nm = ⟨x_n p_m⟩,
//!
//! from which σ_nm = ⟨z_n z*_m⟩ = R_nm + S_nm + i(T_mn − T_nm).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::density::{CMatrix, DensityMatrix, PSD_TOL};
use crate::error::{Error, Result};

/// Eigenvalues below this are dropped when splitting a mixed state.
pub const MIXED_WEIGHT_CUTOFF: f64 = 1e-12;
/// Smallest trace accepted when normalizing σ.
pub const NORM_COLLAPSE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct RstState {
    pub r: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub t: DMatrix<f64>,
}

impl RstState {
    pub fn zeros(n: usize) -> Self {
        Self {
            r: DMatrix::zeros(n, n),
            s: DMatrix::zeros(n, n),
            t: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.r.nrows()
    }

    /// Flat layout shared with the integrator: R, then S, then T, each row-major.
    pub fn pack(&self) -> Vec<f64> {
        let n = self.dim();
        let mut y = Vec::with_capacity(3 * n * n);
        for m in [&self.r, &self.s, &self.t] {
            for a in 0..n {
                for b in 0..n {
                    y.push(m[(a, b)]);
                }
            }
        }
        y
    }

    pub fn unpack(y: &[f64], n: usize) -> Self {
        let nn = n * n;
        let block = |k: usize| DMatrix::from_row_slice(n, n, &y[k * nn..(k + 1) * nn]);
        Self {
            r: block(0),
            s: block(1),
            t: block(2),
        }
    }

    /// Largest asymmetry of R and S relative to their largest element.
    pub fn symmetry_error(&self) -> f64 {
        let rel = |m: &DMatrix<f64>| {
            let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let err = (m - m.transpose()).iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if scale > 0.0 {
                err / scale
            } else {
                err
            }
        };
        rel(&self.r).max(rel(&self.s))
    }

    fn add_scaled(&mut self, w: f64, other: &RstState) {
        self.r += &other.r * w;
        self.s += &other.s * w;
        self.t += &other.t * w;
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        for m in [&self.r, &self.s, &self.t] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::InvalidInitialState("R, S, T must share one square shape".into()));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInitialState("non-finite moment".into()));
            }
        }
        if self.symmetry_error() > 1e-12 {
            return Err(Error::InvalidInitialState("R or S is not symmetric".into()));
        }
        let sigma = assemble_sigma(self);
        if sigma.trace().re <= NORM_COLLAPSE_TOL {
            return Err(Error::InvalidInitialState("moment state has zero trace".into()));
        }
        let min_ev = sigma.min_eigenvalue();
        if min_ev < PSD_TOL * sigma.trace().re {
            return Err(Error::NotPositive(min_ev));
        }
        Ok(())
    }
}

/// Moments of a single amplitude vector z = c (normalisation α = 1).
pub fn initial_rst_pure(c: &[Complex64]) -> Result<RstState> {
    let norm: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    if !(norm > 0.0) {
        return Err(Error::ZeroState);
    }
    let n = c.len();
    Ok(RstState {
        r: DMatrix::from_fn(n, n, |a, b| c[a].re * c[b].re),
        s: DMatrix::from_fn(n, n, |a, b| c[a].im * c[b].im),
        t: DMatrix::from_fn(n, n, |a, b| c[a].re * c[b].im),
    })
}

/// Average of the moments over a uniformly distributed global phase of z.
pub fn phase_average(rst: &RstState) -> RstState {
    let sym = (&rst.r + &rst.s) * 0.5;
    RstState {
        r: sym.clone(),
        s: sym,
        t: (&rst.t - rst.t.transpose()) * 0.5,
    }
}

/// Weighted sum of pure-state moments over the eigen-decomposition of ρ.
/// Each eigenvector is phased so that its largest component is real and
/// positive, which makes the split deterministic.
pub fn initial_rst_mixed(rho0: &DensityMatrix) -> Result<RstState> {
    let n = rho0.dim();
    let pairs = rho0.eigen_decomposition();
    if let Some(&(w, _)) = pairs.iter().find(|(w, _)| *w < PSD_TOL) {
        return Err(Error::NotPositive(w));
    }
    let mut out = RstState::zeros(n);
    for (w, mut psi) in pairs {
        if w < MIXED_WEIGHT_CUTOFF {
            continue;
        }
        let pivot = psi
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(Complex64::new(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        psi.iter_mut().for_each(|z| *z *= phase);
        out.add_scaled(w, &initial_rst_pure(&psi)?);
    }
    Ok(out)
}

/// σ_nm = R_nm + S_nm + i(T_mn − T_nm); Hermitian by construction.
pub fn assemble_sigma(rst: &RstState) -> DensityMatrix {
    let n = rst.dim();
    let data = CMatrix::from_fn(n, n, |a, b| {
        Complex64::new(rst.r[(a, b)] + rst.s[(a, b)], rst.t[(b, a)] - rst.t[(a, b)])
    });
    DensityMatrix::from_matrix(data).expect("square")
}

/// (σ/𝒩, 𝒩) with 𝒩 = Σ_n σ_nn.
pub fn normalize_sigma(sigma: &DensityMatrix) -> Result<(DensityMatrix, f64)> {
    let norm = sigma.trace().re;
    if !(norm >= NORM_COLLAPSE_TOL) {
        return Err(Error::NormCollapse(norm));
    }
    let scaled = sigma.matrix() * Complex64::new(1.0 / norm, 0.0);
    Ok((DensityMatrix::from_matrix(scaled)?, norm))
}
