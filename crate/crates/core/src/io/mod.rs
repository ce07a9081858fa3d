//! Instance files, solver dispatch, reports and random instances.

pub mod format;
pub mod generate;
pub mod report;

pub use format::{
    parse_document, parse_instance, parse_solution, serialize_instance, serialize_solution, Document, Instance,
    SolutionFile,
};
pub use generate::{generate_random, GenKind, Regime};
pub use report::{
    dispatch_solve, error_exit_code, verify_solution, Pathway, SolveOptions, SolveReport, SolveStatus, VerifyReport,
};
