//! Simulation of the nondeterministic nonlinear-sign gate on truncated
//! Fock spaces, with realistic photon-counting models (threshold detectors,
//! double detector arrays, detector cascades, and VLPC-style counters) and
//! a worst-case fidelity benchmark suite.
//!
//! The crate is organized bottom-up:
//! - [`fock`]: sparse multimode Fock states and density operators;
//! - [`optics`]: beamsplitter/phase-shift circuits on truncated spaces and
//!   the calibration of the three-splitter network convention;
//! - [`detectors`]: photon-counting POVMs, including exact rational
//!   polynomials for N-detector cascades;
//! - [`gate`]: the gate pipeline, closed-form and simulated conditional
//!   outputs;
//! - [`bench`]: fidelity, worst-case minimization, thresholds, and sweeps.

pub mod bench;
pub mod detectors;
pub mod error;
pub mod fock;
pub mod gate;
mod numeric;
pub mod optics;

pub use bench::{
    fidelity, gate_fidelity, lp_fidelity, lp_gate_fidelity, sweep, threshold_efficiency,
    GateFidelityResult, InputStateParam, SweepPoint,
};
pub use detectors::{DetectorModel, PovmElement};
pub use error::{Error, Result};
pub use fock::{DensityOperator, FockBasisState, PureState};
pub use gate::{
    closed_form_amplitudes, conditional_output_closed_form, conditional_output_simulated,
    ns_ideal, simulated_amplitudes, AmplitudeTable, ConditionalOutput, NsGateConfig, Scheme,
};
pub use optics::{design_reflectivities, BeamsplitterSpec, CircuitSpec, NetworkConvention};
