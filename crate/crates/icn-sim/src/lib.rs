//! Deterministic discrete-event NDN simulator: scale-free topologies,
//! content stores with LFRU replacement, the protected-content scheme and
//! its baselines, workload generation, and an adversary harness.

pub mod adversary;
pub mod attacks;
pub mod cache;
pub mod config;
pub mod metrics;
pub mod packet;
pub mod sim;
pub mod topology;
pub mod workload;

pub use config::{SchemeKind, SimConfig, Weaken};
pub use metrics::RunMetrics;
pub use sim::{run, RunOutput, Simulation};
