//! Live safety-case engine: a typed argument model with its text format,
//! versioned evidence, statistically qualified safety performance
//! indicators, quantitative fault trees, a hazard log and change impact
//! analysis.

pub mod argument;
pub mod evidence;
pub mod exec;
pub mod fault_tree;
pub mod fixtures;
pub mod hazard;
pub mod impact;
pub mod report;
pub mod scdl;
pub mod spi;

pub use argument::SafetyCase;
pub use exec::Exec;
pub use report::{Finding, Severity, ValidationReport};
