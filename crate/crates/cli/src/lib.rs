//! Scenario-driven experiment runner: declarative TOML scenarios, sweeps over
//! architectures and axes, reproducible CSV/JSON outputs, and a standalone
//! REF comparison command.

pub mod experiments;
pub mod refcmd;
pub mod runner;
pub mod scenario;
