//! Session-based workload extraction and simulation.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`ingest`] turns structured HTTP request logs into ordered per-session
//!    behavior traces, a behavior catalog and think-time samples.
//! 2. [`behavior`] groups traces with Ward clustering over flattened transition
//!    matrices and learns one invariant-respecting relational model per group.
//! 3. [`intensity`] produces the session-start intensity series (reproduction,
//!    expression fitting, LIMBO/TSAGen-style generation) and the think-time KDE.
//! 4. [`plan`] schedules sampled sessions into a [`plan::WorkloadPlan`], which can
//!    be dry-run into logs or executed by a driver.
//!
//! [`harness`] holds the request handling and log format of the reference target
//! service, [`dsl`] the `.lws` workload document, and [`eval`] the static and
//! shape-based similarity metrics used to compare workloads.

pub mod behavior;
pub mod dsl;
pub mod eval;
pub mod harness;
pub mod ids;
pub mod ingest;
pub mod intensity;
pub mod par;
pub mod plan;
pub mod rng;
