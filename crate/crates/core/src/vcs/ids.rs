use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use uuid::Uuid;

use super::VcsError;

/// A script's identity: a UUID in canonical lowercase hyphenated form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ScriptId(Uuid);

impl ScriptId {
    pub fn from_u128(v: u128) -> Self {
        ScriptId(Uuid::from_u128(v))
    }

    pub fn from_bytes(bytes: [u8; 16]) -> Self {
        ScriptId(Uuid::from_bytes(bytes))
    }

    pub fn as_uuid(&self) -> &Uuid {
        &self.0
    }
}

impl FromStr for ScriptId {
    type Err = VcsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || VcsError::InvalidScriptId(s.into());
        let uuid = Uuid::try_parse(s).map_err(|_| invalid())?;
        let mut buf = Uuid::encode_buffer();
        if uuid.hyphenated().encode_lower(&mut buf) != s {
            return Err(invalid());
        }
        Ok(ScriptId(uuid))
    }
}

impl TryFrom<String> for ScriptId {
    type Error = VcsError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ScriptId> for String {
    fn from(id: ScriptId) -> String {
        id.to_string()
    }
}

impl fmt::Display for ScriptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0.hyphenated(), f)
    }
}

/// SHA-256 of a stored object, as 64 lowercase hex characters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ObjectId(String);

impl ObjectId {
    pub fn of(bytes: &[u8]) -> Self {
        ObjectId(hex::encode(Sha256::digest(bytes)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The first `n` hex characters.
    pub fn short(&self, n: usize) -> &str {
        &self.0[..n.min(self.0.len())]
    }
}

impl FromStr for ObjectId {
    type Err = VcsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let ok = s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'));
        if ok {
            Ok(ObjectId(s.into()))
        } else {
            Err(VcsError::InvalidHash(s.into()))
        }
    }
}

impl TryFrom<String> for ObjectId {
    type Error = VcsError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ObjectId> for String {
    fn from(id: ObjectId) -> String {
        id.0
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_id_format() {
        let id = ScriptId::from_u128(1);
        assert_eq!(id.to_string(), "00000000-0000-0000-0000-000000000001");
        assert_eq!(
            "00000000-0000-0000-0000-000000000001"
                .parse::<ScriptId>()
                .unwrap(),
            id
        );
        for bad in [
            "00000000-0000-0000-0000-00000000000A",
            "00000000000000000000000000000001",
            "{00000000-0000-0000-0000-000000000001}",
            "urn:uuid:00000000-0000-0000-0000-000000000001",
            "",
        ] {
            assert!(bad.parse::<ScriptId>().is_err(), "{bad}");
        }
    }

    #[test]
    fn object_id_format() {
        let empty = ObjectId::of(b"");
        assert_eq!(
            empty.as_str(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(empty.short(8), "e3b0c442");
        assert!(empty.as_str().parse::<ObjectId>().is_ok());
        assert!(empty.as_str().to_uppercase().parse::<ObjectId>().is_err());
        assert!("abc".parse::<ObjectId>().is_err());
    }
}
