//! Front tracking with operator splitting for scalar balance laws
//! `u_t + f(u)_x = g(t, x, u)`, together with the measure-theoretic
//! bookkeeping needed to study the fine structure of BV entropy solutions.

pub mod analysis;
pub mod bv;
pub mod error;
pub mod jumps;
pub mod measures;
pub mod riemann;
pub mod scenario;
pub mod splitting;
pub mod tracking;

pub use bv::{
    BVDecomposition, FunctionalReadings, IntervalUnion, Profile, SignedAtomicMeasure1D,
};
pub use error::{Error, Result};
pub use riemann::{FluxKind, FluxModel, Front, Wave, WaveFan, WaveKind};
pub use tracking::{
    evolve, init_from_datum, next_collision, resolve_collision, CollisionEvent, EventLog,
    EventRecord, FrontState, RecordKind, TrackingOptions, WaveHistory,
};
pub use splitting::{
    apply_source_step, discretize_datum, discretize_source, run, Forcing, RunArtifacts,
    SolverConfig, SourceModel,
};
pub use jumps::{trace_discontinuities, JumpFamily, PolygonalDiscontinuity};
pub use measures::{
    build_measures, cont_balance_measure, eta_xi_measures, jump_balance_measure,
    measure_bounds_report, source_measure, verify_measure_bounds, wave_balance_measure, Atom2D,
    AtomTag, AtomicMeasure2D, BoundsReport, RunMeasures,
};
pub use analysis::{
    exceptional_times, generalized_characteristic, oleinik_two_sided, oracle_burgers_riemann,
    oracle_damped_burgers_ramp, region_balance, BalanceReport, CharacteristicCurve,
    CharacteristicRegion, CharacteristicTracer, OleinikReport,
};
pub use scenario::{run_scenario, run_sweep, RunOptions, Scenario, SweepSchedule};
