//! Analysis toolkit for the SIS epidemic patch model with an asymmetric
//! connectivity matrix: basic reproduction number and its dispersal
//! thresholds, the unique endemic equilibrium, small-dispersal asymptotic
//! profiles, and time integration of the full patch system.
//!
//! Orientation convention throughout: the connectivity entry `L[j][k]` is
//! the movement degree from patch `k` into patch `j`, and diagonals are
//! minus the column sums (see [`patch_graph`]).
//!
//! All operations are pure functions of their inputs; results are plain
//! owned values, safe to share across parameter-sweep workers.

pub mod asymptotics;
pub mod equilibrium;
pub mod numerics;
pub mod patch_graph;
pub mod reproduction;
pub mod simulator;
pub mod star_example;

pub use asymptotics::{
    asymptotic_profile, classify_j, classify_j_numeric, di_to_zero_profiles, find_di_star_star,
    h_functions, h_limits, limiting_s_profile, symmetric_lower_bound, threshold_report,
    AsymptoticProfile, AsymptoticsError, Classification, ClassificationMethod, HLimits,
    RatioLimit, ThresholdReport,
};
pub use equilibrium::{
    endemic_equilibrium, recover_equilibrium, solve_auxiliary, solve_auxiliary_for,
    solve_auxiliary_from, solve_u_system, AuxiliarySolution, EndemicEquilibrium,
    EquilibriumError, USystemSolution,
};
pub use numerics::{
    bisect_monotone, integrate_ode, linear_solve, spectral_bound, DenseMatrix, Direction,
    NumericsError, OdeControls, SpectralResult,
};
pub use patch_graph::{
    build_connectivity, perron_vector, star_alpha, star_graph, ConnectivityMatrix, GraphError,
    PerronData,
};
pub use reproduction::{
    dispersal_spectral_bound, find_di_star, lambda1, r0, r0_limits, r0_power, risk_partition,
    sign_indicator, DispersalThreshold, EpidemicParameters, R0Limits, ReproductionError,
    RiskPartition,
};
pub use simulator::{
    disease_free_state, simulate, sis_field, steady_state_residual, SimulationError,
    SimulationState, Trajectory,
};
