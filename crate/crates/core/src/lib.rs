//! Day-ahead coordinated scheduling of utility-owned battery storage and a
//! microturbine on a radial distribution feeder with third-party solar and
//! wind generation under dynamic prices.

pub mod der_models;
pub mod dms;
pub mod economics;
pub mod error;
pub mod network;
pub mod optimizer;
pub mod scenario;
mod stats;
pub mod uncertainty;

pub use der_models::{Bess, DeviceParams, DeviceSet, MicroTurbine, RenewableKind, RenewableUnit, SocTrace};
pub use dms::{build_plan, DmsPlan, Mode, PriceSignal, Strategy};
pub use economics::{build_report, ConstraintLimits, DayReport, StateLedger, Violation};
pub use error::{Error, Result};
pub use optimizer::{optimize_day, optimize_state, DayOutcome, HerdOptimizer, Individual, OptimizerConfig, Schedule, SwarmConfig, SwarmKernel};
pub use network::{load_case, run_power_flow, BusPower, CaseData, PowerFlowResult};
pub use scenario::{DayProfiles, Dispatch, Scenario};
pub use uncertainty::{build_envelope, synthesize_day, HistoricalSeries, UncertaintyEnvelope};
