//! Desk-scale simulator and analysis toolkit for thermally tuned waveguide
//! interferometers carrying 1-, 2- and 4-photon states.
//!
//! The crate is organized along the experiment pipeline:
//!
//! * [`fock`] — occupation-number states and sparse complex superpositions;
//! * [`circuit`] — directional couplers, phase shifters, their composition
//!   into mode unitaries, and the permanent-based lift to Fock space;
//! * [`source`] — the photon-pair source with multi-pair contamination;
//! * [`detection`] — post-selection patterns, detector loss, splitter-tree
//!   cascades, photon distinguishability and Poissonian count sampling;
//! * [`analysis`] — phase–voltage calibration, fringe and dip fits,
//!   contrast/visibility extraction and the fidelity figures of merit;
//! * [`scenario`] — declarative end-to-end experiment configs, built-ins,
//!   deterministic runs and the plot-ready output formats.
//!
//! The `photonsim` binary exposes the scenario runner, the calibration
//! workflow, the contamination study and a self-test suite.

pub mod analysis;
pub mod circuit;
pub mod detection;
pub mod fock;
pub mod scenario;
pub mod selftest;
pub mod source;
