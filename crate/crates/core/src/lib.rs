//! Large-deviation functions of linear spectral statistics of invariant
//! random-matrix ensembles, computed through the Coulomb-gas picture.

pub mod duality;
pub mod equilibrium;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod numerics;
pub mod transitions;

pub use duality::{
    build_curve, build_curve_with, cumulants, direct_excess_energy, integrate_j, integrate_psi,
    invert_curve, joint_build_surface, joint_integrate, legendre_check, mixed_partial_asymmetry,
    tilted_measure, BoundaryFlag, CumulantReport, CurveOptions, DualityCurve, JointSurface,
    JointTables, RateFunctionTable,
};
pub use equilibrium::{
    solve_continued, solve_one_cut, solve_one_cut_seeded, DensityValue, EdgeType,
    EquilibriumMeasure, Regime, SupportInterval,
};
pub use error::{Error, Result};
pub use model::{
    tilt, Bound, ConfinementPotential, GasParameters, LinearStatistic, Polynomial, Walls,
};
pub use montecarlo::{
    run_chain, tilted_mean_check, ChainConfig, ChainState, EmpiricalSummary, Histogram,
    TiltedMeanCheck,
};
pub use transitions::{
    apply_steepness, check_steepness, detect_transitions, CriticalPoint, SteepnessReport,
};
