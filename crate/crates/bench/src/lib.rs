//! Service layer of the script workbench: configuration, the on-disk
//! version store, the request gateway and its HTTP and command-line fronts.

pub mod cli;
pub mod config;
pub mod disk;
pub mod gateway;
pub mod server;

pub use config::WorkbenchConfig;
pub use gateway::{Gateway, Response};
