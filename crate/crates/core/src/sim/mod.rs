//! Scenario-driven simulation: load a script of timestamped actions, run it
//! against a fresh [`Market`](crate::Market), and audit the result.
//!
//! Runs are driven only by scenario timestamps, so the same scenario always
//! produces the same report, byte for byte.

pub mod report;
pub mod runner;
pub mod scenario;
pub mod verify;

pub use report::{FrameSummary, LedgerTotals, SimReport};
pub use runner::{run, run_with_observer, ActionOutcome, Applied, Outcome, Step};
pub use scenario::{load_scenario, Action, Scenario, ScenarioError, ScheduledAction};
pub use verify::{verify_report, Check, CheckSummary};
