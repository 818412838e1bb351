pub mod bdg;
pub mod chain;
pub mod disorder;
pub mod error;
pub mod experiment;
pub mod fmt;
pub mod mc;
pub mod modes;
pub mod ode;
pub mod samples;
pub mod shim;
pub mod schedule;
pub mod stats;
pub mod tebd;
pub mod theory;

pub use chain::ChainSpec;
pub use error::{Error, Result};
pub use ode::StepPolicy;
pub use schedule::{KzConstants, Schedule, ScheduleKind, SchedulePoint};
