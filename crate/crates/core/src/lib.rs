//! Engine for the script workbench: the BenchScript language and its
//! sandboxed interpreter, source augmentation, static analysis with code
//! fixes, and content-addressed script versioning.
//!
//! Everything here is `no_std` with `alloc`. Clocks, disks and network
//! front-ends live in the `bench` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analyze;
pub mod augment;
pub mod lang;
pub mod sandbox;
pub mod vcs;
