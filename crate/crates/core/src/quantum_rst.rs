//! Quantum master equation rewritten in the real moments
//! R = Re c Re c, S = Im c Im c, T = Re c Im c. Used as an independent
//! cross-check of the Lindblad engine.
//!
//! Ṙ_nm = ω_n T_mn + ω_m T_nm + L[R]_nm + Σ_ℓ (V_nℓ T_mℓ + V_mℓ T_nℓ)
//! Ṡ_nm = −(ω_n T_nm + ω_m T_mn) + L[S]_nm − Σ_ℓ (V_nℓ T_ℓm + V_mℓ T_ℓn)
//! Ṫ_nm = ω_n S_nm − ω_m R_nm + L[T]_nm + Σ_ℓ (−V_mℓ R_nℓ + V_nℓ S_ℓm)
//!
//! ρ is assembled as ρ_nm = R_nm + S_nm + i(T_mn − T_nm), which follows
//! from c_n c*_m with the definitions above.

use crate::classical::check_rst_initial;
use crate::density::DensityMatrix;
use crate::error::Result;
use crate::grid::TimeGrid;
use crate::integrator::{integrate, Derivative};
use crate::model::AggregateModel;
use crate::rst::{assemble_sigma, RstState};

pub(crate) struct QuantumRstRhs<'a> {
    pub model: &'a AggregateModel,
}

impl Derivative for QuantumRstRhs<'_> {
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
            let row_a = model.neighbors(a);
            for b in 0..n {
                let row_b = model.neighbors(b);
                let ab = a * n + b;
                let ba = b * n + a;
                let g = rates[ab];

                let mut dr_ab = w[a] * t[ba] + w[b] * t[ab] - g * r[ab];
                for &(l, v) in row_a {
                    dr_ab += v * t[b * n + l];
                }
                for &(l, v) in row_b {
                    dr_ab += v * t[a * n + l];
                }
                dr[ab] = dr_ab;

                let mut ds_ab = -(w[a] * t[ab] + w[b] * t[ba]) - g * s[ab];
                for &(l, v) in row_a {
                    ds_ab -= v * t[l * n + b];
                }
                for &(l, v) in row_b {
                    ds_ab -= v * t[l * n + a];
                }
                ds[ab] = ds_ab;

                let mut dt_ab = w[a] * s[ab] - w[b] * r[ab] - g * t[ab];
                for &(l, v) in row_b {
                    dt_ab -= v * r[a * n + l];
                }
                for &(l, v) in row_a {
                    dt_ab += v * s[l * n + b];
                }
                dt[ab] = dt_ab;
            }
        }
    }
}

pub fn propagate_quantum_rst(
    model: &AggregateModel,
    rst0: &RstState,
    grid: &TimeGrid,
) -> Result<Vec<DensityMatrix>> {
    grid.check_step(model)?;
    check_rst_initial(model, rst0)?;
    let n = model.n_sites();
    let mut out = Vec::with_capacity(grid.n_samples);
    integrate(&QuantumRstRhs { model }, &rst0.pack(), grid, |_, y| {
        out.push(assemble_sigma(&RstState::unpack(y, n)));
    });
    Ok(out)
}
