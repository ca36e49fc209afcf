//! Filesystem backend: `objects/<first 2 hex>/<remaining hex>` and
//! `heads/<script id>`. Every write goes to a temporary file first and is
//! renamed into place.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use bench_core::vcs::{Backend, VcsError};
use tempfile::NamedTempFile;

#[derive(Debug, Clone)]
pub struct DiskBackend {
    root: PathBuf,
}

fn storage(e: io::Error) -> VcsError {
    VcsError::Backend(e.to_string())
}

fn is_object_key(key: &str) -> bool {
    key.len() > 2 && key.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

fn is_head_name(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with('.')
        && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-')
}

fn read_optional(path: &Path) -> Result<Option<Vec<u8>>, VcsError> {
    match fs::read(path) {
        Ok(bytes) => Ok(Some(bytes)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(storage(e)),
    }
}

fn list_dir(path: &Path) -> Result<Vec<String>, VcsError> {
    let entries = match fs::read_dir(path) {
        Ok(entries) => entries,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(storage(e)),
    };
    let mut names = Vec::new();
    for entry in entries {
        let entry = entry.map_err(storage)?;
        if let Some(name) = entry.file_name().to_str() {
            if !name.starts_with('.') {
                names.push(name.to_string());
            }
        }
    }
    names.sort();
    Ok(names)
}

impl DiskBackend {
    /// Opens the store at `root`, creating its directories if needed.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, VcsError> {
        let root = root.into();
        fs::create_dir_all(root.join("objects")).map_err(storage)?;
        fs::create_dir_all(root.join("heads")).map_err(storage)?;
        Ok(DiskBackend { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn object_path(&self, key: &str) -> PathBuf {
        self.root.join("objects").join(&key[..2]).join(&key[2..])
    }

    pub fn head_path(&self, script: &str) -> PathBuf {
        self.root.join("heads").join(script)
    }

    fn temp_in(dir: &Path, bytes: &[u8]) -> Result<NamedTempFile, VcsError> {
        fs::create_dir_all(dir).map_err(storage)?;
        let mut tmp = tempfile::Builder::new()
            .prefix(".tmp")
            .tempfile_in(dir)
            .map_err(storage)?;
        tmp.write_all(bytes).map_err(storage)?;
        tmp.as_file().sync_all().map_err(storage)?;
        Ok(tmp)
    }
}

impl Backend for DiskBackend {
    fn read_object(&self, key: &str) -> Result<Option<Vec<u8>>, VcsError> {
        if !is_object_key(key) {
            return Ok(None);
        }
        read_optional(&self.object_path(key))
    }

    fn write_object(&mut self, key: &str, bytes: &[u8]) -> Result<(), VcsError> {
        if !is_object_key(key) {
            return Err(VcsError::InvalidHash(key.into()));
        }
        let path = self.object_path(key);
        if path.exists() {
            return Ok(());
        }
        let tmp = Self::temp_in(path.parent().expect("object dir"), bytes)?;
        match tmp.persist_noclobber(&path) {
            Ok(_) => Ok(()),
            // A concurrent writer stored the same content first.
            Err(e) if path.exists() => {
                drop(e);
                Ok(())
            }
            Err(e) => Err(storage(e.error)),
        }
    }

    fn object_keys(&self) -> Result<Vec<String>, VcsError> {
        let objects = self.root.join("objects");
        let mut keys = Vec::new();
        for prefix in list_dir(&objects)? {
            for rest in list_dir(&objects.join(&prefix))? {
                keys.push(format!("{prefix}{rest}"));
            }
        }
        Ok(keys)
    }

    fn read_head(&self, script: &str) -> Result<Option<String>, VcsError> {
        if !is_head_name(script) {
            return Ok(None);
        }
        Ok(read_optional(&self.head_path(script))?
            .map(|bytes| String::from_utf8_lossy(&bytes).into_owned()))
    }

    fn write_head(&mut self, script: &str, hash: &str) -> Result<(), VcsError> {
        if !is_head_name(script) {
            return Err(VcsError::InvalidScriptId(script.into()));
        }
        let path = self.head_path(script);
        let tmp = Self::temp_in(path.parent().expect("heads dir"), hash.as_bytes())?;
        tmp.persist(&path).map_err(|e| storage(e.error))?;
        Ok(())
    }

    fn head_keys(&self) -> Result<Vec<String>, VcsError> {
        list_dir(&self.root.join("heads"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bench_core::vcs::{FindingKind, ScriptId, Store};

    const T: &str = "2023-01-01T00:00:00Z";

    #[test]
    fn layout_matches_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = Store::new(DiskBackend::open(dir.path()).unwrap());
        let id = ScriptId::from_u128(1);
        let c = store.commit(id, b"hello", "A", "a@x", "m", T).unwrap();
        let h = c.hash.as_str();
        assert_eq!(
            h,
            "a2e825bacf195adeabd50a7b504638da316538236855a5b07c5de4e1a89b8526"
        );
        assert!(dir
            .path()
            .join("objects")
            .join(&h[..2])
            .join(&h[2..])
            .is_file());
        let blob = c.blob.as_str();
        assert_eq!(
            fs::read(dir.path().join("objects").join(&blob[..2]).join(&blob[2..])).unwrap(),
            b"blob 5\nhello"
        );
        assert_eq!(
            fs::read_to_string(dir.path().join("heads").join(id.to_string())).unwrap(),
            h
        );
    }

    #[test]
    fn reopen_and_verify() {
        let dir = tempfile::tempdir().unwrap();
        let id = ScriptId::from_u128(7);
        let first = {
            let mut store = Store::new(DiskBackend::open(dir.path()).unwrap());
            let c = store.commit(id, b"one", "A", "a@x", "first", T).unwrap();
            store.commit(id, b"two", "A", "a@x", "second", T).unwrap();
            c
        };
        let store = Store::new(DiskBackend::open(dir.path()).unwrap());
        assert_eq!(store.history(id).unwrap().len(), 2);
        assert_eq!(store.get_version(first.hash.as_str()).unwrap(), b"one");
        assert!(store.fsck().unwrap().is_empty());
        assert_eq!(store.backend().object_keys().unwrap().len(), 4);

        let path = store.backend().object_path(first.hash.as_str());
        let mut bytes = fs::read(&path).unwrap();
        bytes[0] ^= 0x20;
        fs::write(&path, bytes).unwrap();
        let findings = store.fsck().unwrap();
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].kind, FindingKind::HashMismatch);
    }

    #[test]
    fn rejects_unsafe_names() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = DiskBackend::open(dir.path()).unwrap();
        assert_eq!(b.read_object("../x").unwrap(), None);
        assert!(b.write_object("../../etc", b"x").is_err());
        assert_eq!(b.read_head("../objects").unwrap(), None);
        assert!(b.write_head("a/b", "x").is_err());
    }
}
