//! Deterministic simulation and verification workbench for online pull-based
//! broadcast scheduling in the sequential transmission model.
//!
//! One server holds a set of pages; requests for pages arrive over time. A
//! transmission of page p, received sequentially from its beginning,
//! simultaneously satisfies every outstanding request for p that arrived at
//! or before the transmission's start. The crate provides:
//!
//! * [`model`] — instances, transcripts, JSON formats, and a transcript
//!   validator;
//! * [`policies`] — the selection rules (FIFO, SSF, SSF-W, BWF, SRF-W, LF);
//! * [`engine`] — the deterministic simulator (non-preemptive and
//!   preemptive-with-restart), with speed augmentation and a compressed
//!   fast-forward mode for grouped unicast instances;
//! * [`metrics`] — maximum response time and delay factor, plain and
//!   weighted;
//! * [`oracle`] — exact offline optima on small instances via two
//!   independent searches;
//! * [`generators`] — the adversarial lower-bound family against the
//!   largest-wait-ratio policy and seeded random instances;
//! * [`verify`] — batch drivers comparing policies against the oracle.
//!
//! All times, ratios, and objectives are exact rationals ([`rat::Rat`]);
//! nothing is ever rounded, so simulations are bit-reproducible and
//! boundary cases (ties, crossings) are decided exactly.

pub mod engine;
pub mod generators;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod policies;
pub mod rat;
pub mod verify;
