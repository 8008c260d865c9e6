//! Closed second-moment ("classical master") equation for coupled Kubo
//! oscillators ż_n = −iω_n(t) z_n − i Σ_m (V_nm/ħ) 2 Re z_m.
//!
//! The σ equation alone is not closed because of the Re-coupling; it is
//! solved through the real moments (R, S, T):
//!
//! Ṙ_nm = ω_n T_mn + ω_m T_nm + L[R]_nm
//! Ṡ_nm = −(ω_n T_nm + ω_m T_mn) + L[S]_nm − Σ_ℓ (2V_nℓ T_ℓm + 2V_mℓ T_ℓn)
//! Ṫ_nm = ω_n S_nm − ω_m R_nm + L[T]_nm − Σ_ℓ 2V_mℓ R_nℓ

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::integrator::{integrate, Derivative};
use crate::model::AggregateModel;
use crate::rst::{assemble_sigma, normalize_sigma, RstState};

/// How frequency noise acts on the diagonal moments R_nn, S_nn, T_nn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MomentClosure {
    /// The pure-dephasing functional L applied elementwise to R, S and T.
    /// It leaves every diagonal moment untouched.
    SharedFunctional,
    /// Exact moments of a phase-diffusing oscillator: off-diagonals as
    /// above, diagonals relax as Ṙ_nn = −γ_n(R_nn − S_nn),
    /// Ṡ_nn = +γ_n(R_nn − S_nn), Ṫ_nn = −2γ_n T_nn.
    /// Matches the stochastic oscillator ensemble.
    #[default]
    PhaseDiffusion,
}

/// How a wavefunction is mapped onto oscillator moments at t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClassicalStart {
    /// z = c exactly.
    Literal,
    /// z = e^{iφ} c with φ uniform on [0, 2π): R = S = (R₀ + S₀)/2,
    /// T = (T₀ − T₀ᵀ)/2. σ is unchanged and ⟨z z⟩ vanishes, so the
    /// result does not depend on the overall phase of c.
    #[default]
    PhaseAveraged,
}

#[derive(Debug, Clone)]
pub struct ClassicalTrajectory {
    pub grid: TimeGrid,
    pub states: Vec<RstState>,
    pub sigma_normalized: Vec<DensityMatrix>,
    pub norm_factor: Vec<f64>,
}

impl ClassicalTrajectory {
    pub fn populations(&self, site: usize) -> Vec<f64> {
        self.sigma_normalized.iter().map(|s| s.get(site, site).re).collect()
    }

    /// Un-normalized σ at every sample.
    pub fn sigma(&self) -> Vec<DensityMatrix> {
        self.states.iter().map(assemble_sigma).collect()
    }
}

pub(crate) struct ClassicalRhs<'a> {
    pub model: &'a AggregateModel,
    pub closure: MomentClosure,
}

impl Derivative for ClassicalRhs<'_> {
    fn dim(&self) -> usize {
        3 * self.model.n_sites().pow(2)
    }

    fn eval(&self, y: &[f64], dy: &mut [f64]) {
        let model = self.model;
        let n = model.n_sites();
        let nn = n * n;
        let (r, rest) = y.split_at(nn);
        let (s, t) = rest.split_at(nn);
        let (dr, rest) = dy.split_at_mut(nn);
        let (ds, dt) = rest.split_at_mut(nn);
        let w = model.omega();
        let rates = model.dephasing_rates();
        for a in 0..n {
            for b in 0..n {
                let ab = a * n + b;
                let ba = b * n + a;
                let g = rates[ab];
                dr[ab] = w[a] * t[ba] + w[b] * t[ab] - g * r[ab];

                let mut ds_ab = -(w[a] * t[ab] + w[b] * t[ba]) - g * s[ab];
                for &(l, v) in model.neighbors(a) {
                    ds_ab -= 2.0 * v * t[l * n + b];
                }
                for &(l, v) in model.neighbors(b) {
                    ds_ab -= 2.0 * v * t[l * n + a];
                }
                ds[ab] = ds_ab;

                let mut dt_ab = w[a] * s[ab] - w[b] * r[ab] - g * t[ab];
                for &(l, v) in model.neighbors(b) {
                    dt_ab -= 2.0 * v * r[a * n + l];
                }
                dt[ab] = dt_ab;
            }
        }
        if self.closure == MomentClosure::PhaseDiffusion {
            for (a, &g) in model.gamma().iter().enumerate() {
                let aa = a * n + a;
                let flow = g * (r[aa] - s[aa]);
                dr[aa] -= flow;
                ds[aa] += flow;
                dt[aa] -= 2.0 * g * t[aa];
            }
        }
    }
}

pub(crate) fn check_rst_initial(model: &AggregateModel, rst0: &RstState) -> Result<()> {
    if rst0.dim() != model.n_sites() {
        return Err(Error::InvalidInitialState(format!(
            "moment state has dimension {}, model has {} sites",
            rst0.dim(),
            model.n_sites()
        )));
    }
    rst0.validate().map_err(|e| match e {
        Error::InvalidInitialState(_) => e,
        other => Error::InvalidInitialState(other.to_string()),
    })
}

pub fn propagate_classical_rst(
    model: &AggregateModel,
    rst0: &RstState,
    grid: &TimeGrid,
) -> Result<ClassicalTrajectory> {
    propagate_classical_rst_with(model, rst0, grid, MomentClosure::default())
}

pub fn propagate_classical_rst_with(
    model: &AggregateModel,
    rst0: &RstState,
    grid: &TimeGrid,
    closure: MomentClosure,
) -> Result<ClassicalTrajectory> {
    grid.check_step(model)?;
    check_rst_initial(model, rst0)?;
    let n = model.n_sites();
    let rhs = ClassicalRhs { model, closure };
    let mut states = Vec::with_capacity(grid.n_samples);
    integrate(&rhs, &rst0.pack(), grid, |_, y| states.push(RstState::unpack(y, n)));

    let mut sigma_normalized = Vec::with_capacity(states.len());
    let mut norm_factor = Vec::with_capacity(states.len());
    for state in &states {
        let (sigma, norm) = normalize_sigma(&assemble_sigma(state))?;
        sigma_normalized.push(sigma);
        norm_factor.push(norm);
    }
    Ok(ClassicalTrajectory {
        grid: *grid,
        states,
        sigma_normalized,
        norm_factor,
    })
}
