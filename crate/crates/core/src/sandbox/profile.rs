use alloc::collections::BTreeSet;
use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::SandboxError;

/// A named permission gating builtin behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    ConsoleWrite,
    FileRead,
    FileWrite,
    Network,
    Hashing,
}

impl Capability {
    pub const ALL: [Capability; 5] = [
        Capability::ConsoleWrite,
        Capability::FileRead,
        Capability::FileWrite,
        Capability::Network,
        Capability::Hashing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Capability::ConsoleWrite => "console_write",
            Capability::FileRead => "file_read",
            Capability::FileWrite => "file_write",
            Capability::Network => "network",
            Capability::Hashing => "hashing",
        }
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Capability {
    type Err = SandboxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Capability::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| SandboxError::UnknownCapability(s.into()))
    }
}

/// Ordered trust label: `low < medium < high < system`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegrityLevel {
    Low,
    Medium,
    High,
    System,
}

impl fmt::Display for IntegrityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IntegrityLevel::Low => "low",
            IntegrityLevel::Medium => "medium",
            IntegrityLevel::High => "high",
            IntegrityLevel::System => "system",
        })
    }
}

/// `SB-` followed by the first 16 lowercase hex digits of SHA-256(name).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ProfileId(String);

impl ProfileId {
    pub const PREFIX: &'static str = "SB-";

    pub fn derive(name: &str) -> ProfileId {
        let digest = Sha256::digest(name.as_bytes());
        let mut id = String::with_capacity(19);
        id.push_str(Self::PREFIX);
        id.push_str(&hex::encode(&digest[..8]));
        ProfileId(id)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ProfileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl TryFrom<String> for ProfileId {
    type Error = SandboxError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        let valid = s.strip_prefix(Self::PREFIX).is_some_and(|h| {
            h.len() == 16 && h.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
        });
        if valid {
            Ok(ProfileId(s))
        } else {
            Err(SandboxError::InvalidProfileId(s))
        }
    }
}

impl FromStr for ProfileId {
    type Err = SandboxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProfileId::try_from(String::from(s))
    }
}

impl From<ProfileId> for String {
    fn from(id: ProfileId) -> String {
        id.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandboxProfile {
    pub name: String,
    pub id: ProfileId,
    pub capabilities: BTreeSet<Capability>,
    pub integrity: IntegrityLevel,
}

/// Creates the profile for `name`, or rebuilds it if it already exists: the id
/// depends only on the name, the capabilities and integrity are taken from
/// this call.
pub fn create_or_get_profile(
    name: &str,
    capabilities: impl IntoIterator<Item = Capability>,
    integrity: IntegrityLevel,
) -> Result<SandboxProfile, SandboxError> {
    if name.is_empty() {
        return Err(SandboxError::EmptyName);
    }
    Ok(SandboxProfile {
        name: name.into(),
        id: ProfileId::derive(name),
        capabilities: capabilities.into_iter().collect(),
        integrity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Allow,
    Deny,
}

pub fn check_capability(profile: &SandboxProfile, cap: Capability) -> Decision {
    if profile.capabilities.contains(&cap) {
        Decision::Allow
    } else {
        Decision::Deny
    }
}

impl SandboxProfile {
    pub fn has(&self, cap: Capability) -> bool {
        check_capability(self, cap) == Decision::Allow
    }
}
