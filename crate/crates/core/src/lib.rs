//! Exact identification of minimum-state finite-state machines from test
//! scenarios and LTL properties.
//!
//! The crate is organised bottom-up: [`model`] holds FSMs, scenarios and the
//! trees built from them; [`ltl`] and [`verifier`] parse and check temporal
//! properties; [`sat`], [`encode`] and [`bmc`] produce and solve Boolean
//! encodings; [`synth`] runs the identification methods; [`harness`]
//! generates random instances and provides exhaustive oracles.

pub mod bmc;
pub mod encode;
pub mod harness;
pub mod ltl;
pub mod model;
pub mod par;
pub mod sat;
pub mod synth;
pub mod verifier;
