//! Simulation library for a pulsed electro-optomechanical transducer and
//! quantum memory: truncated Fock-space algebra, classical steady-state
//! linearization, stochastic trajectory unraveling, a dense master-equation
//! oracle, and fidelity metrics.

pub mod ensemble;
pub mod error;
pub mod fock;
pub mod lindblad;
pub mod metrics;
pub mod pulse;
pub mod qsd;
pub mod semiclassical;
pub mod states;

pub use ensemble::{run_ensemble, EnsembleResult, EnsembleSpec};
pub use error::{Result, SimError};
pub use fock::{
    acc_lower, acc_number, acc_raise, apply_ladder, embed_operator, expectation_number,
    expectation_quadrature, lower_matrix, partial_trace, partial_trace_density,
    tensor_product_state, BasisDescriptor, DensityMatrix, Ladder, Mode, StateVector,
};
pub use lindblad::{lindblad_evolve, lindblad_evolve_until, LINDBLAD_DIM_CAP};
pub use metrics::{
    analytic_coherent_fidelity, analytic_coherent_fidelity_pure, fidelity_with_pure,
    thermal_saturation_fidelity, trace_distance, uhlmann_fidelity, zeta, ScalingPoint,
};
pub use pulse::{
    memory_schedule, transduction_schedule, Channel, Pulse, PulseSchedule, TransductionKind,
};
pub use qsd::{
    integrate_trajectory, qsd_step, DriftForm, HamiltonianSpec, IntegratorOptions, NoiseChannel,
    PopulationSample, StepNoise, TrajectoryResult,
};
pub use semiclassical::{
    effective_coupling, linearize, shifted_detuning, solve_steady_state, LinearizedParams,
    PumpParams, SteadyState,
};
pub use states::{
    cat_state, coherent_state, fock_state, fock_superposition, sample_thermal_fock,
    squeezed_coherent_state, thermal_probability, InputStateSpec,
};
