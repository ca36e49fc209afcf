//! BenchScript: a small imperative scripting language.
//!
//! Scripts are lexed, parsed and resolved by [`compile`], then executed by
//! [`run`] under an [`ExecutionPolicy`](crate::sandbox::ExecutionPolicy).

pub mod ast;
pub mod builtins;
mod compile;
mod diagnostic;
mod interp;
pub mod lexer;
mod parser;
mod span;
mod value;

pub use compile::{compile, Compilation};
pub(crate) use diagnostic::sort_diagnostics;
pub use diagnostic::{has_errors, is_valid_code, Diagnostic, Severity};
pub use interp::{
    run, run_with_clock, Clock, Fault, FaultKind, NoClock, RunReport, MAX_CALL_DEPTH,
};
pub use lexer::{escape, unescape, EscapeError};
pub use parser::MAX_NESTING;
pub use span::{LineIndex, Span};
pub use value::{Value, CELL_BYTES};
