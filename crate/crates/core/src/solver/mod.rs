//! Discrete critical points of the p-bending energy under length and boundary constraints.

pub mod banded;
pub mod flow;
pub mod model;
pub mod modes;
pub mod newton;
pub mod probe;

pub use flow::{gradient_flow, gradient_flow_angles, FlowOptions, FlowStop, FlowTrace};
pub use model::AngleModel;
pub use newton::{newton_kkt, NewtonOptions, NewtonOutcome};
pub use modes::{
    assemble_flatcore, classify_pelastica, make_closed, make_flatcore_loop, make_helix, make_pinned_mode, solve_critical, ClosedKind,
    CriticalPoint, FlatCore, FlatCoreDecomposition, FlatCoreLoop, ModeTag, PElasticaClass, PinnedKind, SolverOptions,
};
pub use probe::{random_perturbations, stability_probe, ProbeOptions, ProbeReport, RandomCheck, Verdict};
