use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::VcsError;

/// Raw key-value storage behind a [`Store`](super::Store).
///
/// Keys are passed through unvalidated so that consistency checks can see
/// whatever is actually stored. Writes of an object key that already exists
/// must leave the stored bytes unchanged.
pub trait Backend {
    fn read_object(&self, key: &str) -> Result<Option<Vec<u8>>, VcsError>;
    fn write_object(&mut self, key: &str, bytes: &[u8]) -> Result<(), VcsError>;
    fn object_keys(&self) -> Result<Vec<String>, VcsError>;
    fn read_head(&self, script: &str) -> Result<Option<String>, VcsError>;
    fn write_head(&mut self, script: &str, hash: &str) -> Result<(), VcsError>;
    fn head_keys(&self) -> Result<Vec<String>, VcsError>;
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MemoryBackend {
    pub objects: BTreeMap<String, Vec<u8>>,
    pub heads: BTreeMap<String, String>,
}

impl MemoryBackend {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Backend for MemoryBackend {
    fn read_object(&self, key: &str) -> Result<Option<Vec<u8>>, VcsError> {
        Ok(self.objects.get(key).cloned())
    }

    fn write_object(&mut self, key: &str, bytes: &[u8]) -> Result<(), VcsError> {
        self.objects
            .entry(key.into())
            .or_insert_with(|| bytes.to_vec());
        Ok(())
    }

    fn object_keys(&self) -> Result<Vec<String>, VcsError> {
        Ok(self.objects.keys().cloned().collect())
    }

    fn read_head(&self, script: &str) -> Result<Option<String>, VcsError> {
        Ok(self.heads.get(script).cloned())
    }

    fn write_head(&mut self, script: &str, hash: &str) -> Result<(), VcsError> {
        self.heads.insert(script.into(), hash.into());
        Ok(())
    }

    fn head_keys(&self) -> Result<Vec<String>, VcsError> {
        Ok(self.heads.keys().cloned().collect())
    }
}
