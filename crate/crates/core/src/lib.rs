//! Excitonic energy transfer on molecular aggregates under pure dephasing,
//! propagated by four engines: the quantum master equation, its stochastic
//! Schrödinger unraveling, stochastic classical (Kubo) oscillators, and the
//! closed classical second-moment equation.

pub mod bessel;
pub mod classical;
pub mod density;
pub mod ensemble;
pub mod error;
pub mod grid;
pub mod integrator;
pub mod lindblad;
pub mod model;
pub mod modelfile;
pub mod quantum_rst;
pub mod rca;
pub mod rst;
pub mod scenario;
pub mod stream;
pub mod timeseries;
pub mod units;

pub use classical::{propagate_classical_rst, propagate_classical_rst_with, ClassicalStart, ClassicalTrajectory, MomentClosure};
pub use density::{CMatrix, DensityMatrix};
pub use ensemble::{
    accumulate_ensemble, run_ensemble, sample_kubo_trajectory, sample_sse_trajectory, AmplitudePath,
    EnsembleConfig, TrajectoryEnsemble, Unraveling,
};
pub use error::{Error, Result};
pub use grid::TimeGrid;
pub use lindblad::{propagate_lindblad, QuantumTrajectory};
pub use model::{commutator_action, dephasing_action, AggregateModel};
pub use quantum_rst::propagate_quantum_rst;
pub use rca::{rca_check, RcaReport, RcaThresholds, Verdict};
pub use rst::{assemble_sigma, initial_rst_mixed, initial_rst_pure, normalize_sigma, phase_average, RstState};
pub use scenario::{make_chain, InitialState};
pub use units::{convert_energy, UnitSystem};
