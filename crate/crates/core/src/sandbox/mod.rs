//! Capability and integrity based execution policies.
//!
//! A [`SandboxProfile`] is a named identity whose id is derived from the name
//! alone, a set of [`Capability`]s and an [`IntegrityLevel`]. Scripts touch
//! files only through a [`VirtualFs`] whose objects carry ACLs keyed by
//! profile id. [`ResourceLimits`] bound interpretation.

mod policy;
mod profile;
mod vfs;

use alloc::string::String;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use policy::{FsEntry, GrantEntry, PolicyDocument, ProfileSpec};
pub use profile::{
    check_capability, create_or_get_profile, Capability, Decision, IntegrityLevel, ProfileId,
    SandboxProfile,
};
pub use vfs::{
    check_fs_access, grant_access, normalize_path, Access, AccessMode, DenyReason, FsObject,
    Request, VirtualFs,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SandboxError {
    #[error("profile name must not be empty")]
    EmptyName,
    #[error("unknown capability `{0}`")]
    UnknownCapability(String),
    #[error("invalid profile id `{0}`")]
    InvalidProfileId(String),
    #[error("path not found: {0}")]
    PathNotFound(String),
    #[error("invalid path `{0}`: paths must be absolute")]
    InvalidPath(String),
    #[error("resource limit `{0}` must be positive")]
    NonPositiveLimit(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceLimits {
    /// Interpreter steps; one step is one statement or expression evaluation.
    pub max_steps: u64,
    /// Live value cells, see the interpreter for the accounting.
    pub max_heap_cells: u64,
    pub max_output_bytes: u64,
    /// Advisory: checked between steps.
    pub max_wall_ms: u64,
}

impl Default for ResourceLimits {
    fn default() -> Self {
        ResourceLimits {
            max_steps: 1_000_000,
            max_heap_cells: 100_000,
            max_output_bytes: 64 * 1024,
            max_wall_ms: 900,
        }
    }
}

impl ResourceLimits {
    pub fn validate(&self) -> Result<(), SandboxError> {
        for (name, v) in [
            ("max_steps", self.max_steps),
            ("max_heap_cells", self.max_heap_cells),
            ("max_output_bytes", self.max_output_bytes),
            ("max_wall_ms", self.max_wall_ms),
        ] {
            if v == 0 {
                return Err(SandboxError::NonPositiveLimit(name));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionPolicy {
    pub profile: SandboxProfile,
    pub limits: ResourceLimits,
}

impl ExecutionPolicy {
    pub fn new(profile: SandboxProfile, limits: ResourceLimits) -> Result<Self, SandboxError> {
        limits.validate()?;
        Ok(ExecutionPolicy { profile, limits })
    }

    /// Console and hashing only, medium integrity, default limits.
    pub fn standard() -> Self {
        let profile = create_or_get_profile(
            "default",
            [Capability::ConsoleWrite, Capability::Hashing],
            IntegrityLevel::Medium,
        )
        .expect("non-empty name");
        ExecutionPolicy {
            profile,
            limits: ResourceLimits::default(),
        }
    }

    pub fn with_limits(mut self, limits: ResourceLimits) -> Result<Self, SandboxError> {
        limits.validate()?;
        self.limits = limits;
        Ok(self)
    }
}
