use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::backend::Backend;
use super::ids::{ObjectId, ScriptId};
use super::object::{blob_bytes, parse_blob, Commit, CommitFields};
use super::VcsError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub hash: ObjectId,
    pub timestamp: String,
    pub author: String,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FindingKind {
    /// Stored bytes do not hash to their key.
    HashMismatch,
    /// An object or head that cannot be parsed.
    Malformed,
    /// A commit refers to a missing object.
    DanglingReference,
    /// A head names a missing or non-commit object.
    DanglingHead,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Finding {
    pub kind: FindingKind,
    /// Object key or head name the finding is about.
    pub subject: String,
    pub detail: String,
}

/// Script history on top of a [`Backend`]. Mutating methods take `&mut self`,
/// so a store has a single writer.
#[derive(Debug, Clone, Default)]
pub struct Store<B> {
    backend: B,
}

impl<B: Backend> Store<B> {
    pub fn new(backend: B) -> Self {
        Store { backend }
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    pub fn backend_mut(&mut self) -> &mut B {
        &mut self.backend
    }

    pub fn into_backend(self) -> B {
        self.backend
    }

    pub fn head(&self, script: ScriptId) -> Result<Option<ObjectId>, VcsError> {
        match self.backend.read_head(&script.to_string())? {
            None => Ok(None),
            Some(h) => h
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| VcsError::Corrupt(format!("head of {script} is `{h}`"))),
        }
    }

    /// Stores `content` and appends a commit on top of the current head.
    #[allow(clippy::too_many_arguments)]
    pub fn commit(
        &mut self,
        script: ScriptId,
        content: &[u8],
        author: &str,
        email: &str,
        message: &str,
        timestamp: &str,
    ) -> Result<Commit, VcsError> {
        let parent = self.head(script)?;
        let blob_data = blob_bytes(content);
        let blob = ObjectId::of(&blob_data);
        let fields = CommitFields {
            script_id: script,
            blob: &blob,
            parent: parent.as_ref(),
            author,
            email,
            timestamp,
            message,
        };
        fields.validate()?;
        let bytes = fields.serialize();
        let commit = fields.into_commit();
        self.backend.write_object(blob.as_str(), &blob_data)?;
        self.backend.write_object(commit.hash.as_str(), &bytes)?;
        self.backend
            .write_head(&script.to_string(), commit.hash.as_str())?;
        Ok(commit)
    }

    pub fn get_commit(&self, hash: &str) -> Result<Commit, VcsError> {
        let unknown = || VcsError::UnknownCommit(hash.into());
        let id: ObjectId = hash.parse().map_err(|_| unknown())?;
        let bytes = self.backend.read_object(id.as_str())?.ok_or_else(unknown)?;
        if !bytes.starts_with(b"commit\n") {
            return Err(unknown());
        }
        if ObjectId::of(&bytes) != id {
            return Err(VcsError::Corrupt(format!(
                "object {id} fails its hash check"
            )));
        }
        Commit::parse(&bytes).map_err(|e| VcsError::Corrupt(format!("commit {id}: {e}")))
    }

    /// Content of the version saved by commit `hash`.
    pub fn get_version(&self, hash: &str) -> Result<Vec<u8>, VcsError> {
        let commit = self.get_commit(hash)?;
        let bytes = self
            .backend
            .read_object(commit.blob.as_str())?
            .ok_or_else(|| VcsError::Corrupt(format!("blob {} is missing", commit.blob)))?;
        if ObjectId::of(&bytes) != commit.blob {
            return Err(VcsError::Corrupt(format!(
                "blob {} fails its hash check",
                commit.blob
            )));
        }
        parse_blob(&bytes)
            .map(<[u8]>::to_vec)
            .ok_or_else(|| VcsError::Corrupt(format!("blob {} is malformed", commit.blob)))
    }

    /// Newest first. Unknown scripts have an empty history.
    pub fn history(&self, script: ScriptId) -> Result<Vec<HistoryEntry>, VcsError> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        let mut next = self.head(script)?;
        while let Some(hash) = next {
            if !seen.insert(hash.clone()) {
                return Err(VcsError::Corrupt(format!(
                    "history of {script} has a cycle"
                )));
            }
            let commit = self.get_commit(hash.as_str()).map_err(|e| match e {
                VcsError::UnknownCommit(h) => VcsError::Corrupt(format!("commit {h} is missing")),
                other => other,
            })?;
            if commit.script_id != script {
                return Err(VcsError::Corrupt(format!(
                    "commit {hash} in the history of {script} belongs to another script"
                )));
            }
            next = commit.parent.clone();
            out.push(HistoryEntry {
                hash,
                timestamp: commit.timestamp,
                author: commit.author,
                message: commit.message,
            });
        }
        Ok(out)
    }

    /// Appends a commit whose content equals that of `hash`.
    pub fn restore(
        &mut self,
        script: ScriptId,
        hash: &str,
        author: &str,
        email: &str,
        timestamp: &str,
    ) -> Result<Commit, VcsError> {
        let target = self.get_commit(hash)?;
        if target.script_id != script {
            return Err(VcsError::ForeignCommit(hash.into()));
        }
        let content = self.get_version(hash)?;
        let message = format!("Restore {}", target.hash.short(8));
        self.commit(script, &content, author, email, &message, timestamp)
    }

    /// Checks every object against its key and every reference for a target.
    pub fn fsck(&self) -> Result<Vec<Finding>, VcsError> {
        let mut findings = Vec::new();
        let keys = self.backend.object_keys()?;
        let present: BTreeSet<&str> = keys.iter().map(String::as_str).collect();
        let mut blobs = BTreeSet::new();
        let mut finding = |kind, subject: &str, detail: String| {
            findings.push(Finding {
                kind,
                subject: subject.into(),
                detail,
            })
        };
        for key in &keys {
            let Some(bytes) = self.backend.read_object(key)? else {
                continue;
            };
            if key.parse::<ObjectId>().is_err() {
                finding(
                    FindingKind::Malformed,
                    key,
                    "key is not an object hash".into(),
                );
                continue;
            }
            if ObjectId::of(&bytes).as_str() != key {
                finding(
                    FindingKind::HashMismatch,
                    key,
                    format!("content hashes to {}", ObjectId::of(&bytes)),
                );
                continue;
            }
            if bytes.starts_with(b"blob ") {
                if parse_blob(&bytes).is_none() {
                    finding(FindingKind::Malformed, key, "bad blob header".into());
                }
                blobs.insert(key.as_str());
                continue;
            }
            match Commit::parse(&bytes) {
                Err(e) => finding(FindingKind::Malformed, key, e),
                Ok(c) => {
                    for (what, target) in [("blob", Some(&c.blob)), ("parent", c.parent.as_ref())] {
                        if let Some(t) = target {
                            if !present.contains(t.as_str()) {
                                finding(
                                    FindingKind::DanglingReference,
                                    key,
                                    format!("{what} {t} is missing"),
                                );
                            }
                        }
                    }
                }
            }
        }
        for script in self.backend.head_keys()? {
            if script.parse::<ScriptId>().is_err() {
                finding(
                    FindingKind::Malformed,
                    &script,
                    "head name is not a script id".into(),
                );
                continue;
            }
            let target = self.backend.read_head(&script)?.unwrap_or_default();
            let target = target.trim();
            // A present but damaged target is already reported above.
            if !present.contains(target) || blobs.contains(target) {
                finding(
                    FindingKind::DanglingHead,
                    &script,
                    format!("head `{target}` is not a stored commit"),
                );
            }
        }
        findings.sort();
        Ok(findings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vcs::MemoryBackend;
    use alloc::vec;

    const T1: &str = "2023-01-01T00:00:00Z";
    const T2: &str = "2023-01-02T00:00:00Z";

    fn store() -> Store<MemoryBackend> {
        Store::new(MemoryBackend::new())
    }

    fn id(n: u128) -> ScriptId {
        ScriptId::from_u128(n)
    }

    #[test]
    fn fixture_hashes() {
        let mut s = store();
        let first = s.commit(id(1), b"hello", "A", "a@x", "m", T1).unwrap();
        assert_eq!(
            first.hash.as_str(),
            "a2e825bacf195adeabd50a7b504638da316538236855a5b07c5de4e1a89b8526"
        );
        assert_eq!(first.parent, None);
        let second = s.commit(id(1), b"world", "A", "a@x", "second", T2).unwrap();
        assert_eq!(
            second.blob.as_str(),
            "5b47626763de2ca52b7a708a0cb092938741f0e28e554b123d7e5170cd46c7c9"
        );
        assert_eq!(
            second.hash.as_str(),
            "e3c5a91148f492173750556177fdac44d5cf246e7e5ca7ad45c1e4c52841c635"
        );
        assert_eq!(second.parent, Some(first.hash));
    }

    #[test]
    fn history_and_versions() {
        let mut s = store();
        assert!(s.history(id(1)).unwrap().is_empty());
        let a = s.commit(id(1), b"X", "A", "a@x", "one", T1).unwrap();
        s.commit(id(1), b"Y", "B", "b@x", "two", T2).unwrap();
        let c = s.commit(id(1), b"Y", "B", "b@x", "three", T2).unwrap();
        let h = s.history(id(1)).unwrap();
        let msgs: Vec<_> = h.iter().map(|e| e.message.as_str()).collect();
        assert_eq!(msgs, vec!["three", "two", "one"]);
        assert_eq!(h[0].hash, c.hash);
        assert_eq!(h[2].author, "A");
        assert_eq!(h[2].timestamp, T1);
        assert_eq!(s.get_version(a.hash.as_str()).unwrap(), b"X");
        assert_eq!(s.get_version(c.hash.as_str()).unwrap(), b"Y");
        assert!(matches!(
            s.get_version(&"0".repeat(64)),
            Err(VcsError::UnknownCommit(_))
        ));
        assert!(matches!(
            s.get_version(c.blob.as_str()),
            Err(VcsError::UnknownCommit(_))
        ));
    }

    #[test]
    fn commit_validation() {
        let mut s = store();
        assert_eq!(
            s.commit(id(1), b"", "A", "a@x", " ", T1),
            Err(VcsError::EmptyMessage)
        );
        assert_eq!(
            s.commit(id(1), b"", "", "a@x", "m", T1),
            Err(VcsError::EmptyAuthor)
        );
        assert!(matches!(
            s.commit(id(1), b"", "A", "a@x", "m", "yesterday"),
            Err(VcsError::InvalidTimestamp(_))
        ));
        assert!(s.backend().objects.is_empty());
    }

    #[test]
    fn restore_appends() {
        let mut s = store();
        let a = s.commit(id(1), b"v1", "A", "a@x", "one", T1).unwrap();
        s.commit(id(1), b"v2", "A", "a@x", "two", T1).unwrap();
        s.commit(id(1), b"v3", "A", "a@x", "three", T1).unwrap();
        let r = s.restore(id(1), a.hash.as_str(), "R", "r@x", T2).unwrap();
        assert_eq!(
            r.message,
            alloc::format!("Restore {}", &a.hash.as_str()[..8])
        );
        assert_eq!(s.history(id(1)).unwrap().len(), 4);
        assert_eq!(s.get_version(r.hash.as_str()).unwrap(), b"v1");
        assert_eq!(r.blob, a.blob);

        let other = s.commit(id(2), b"o", "A", "a@x", "other", T1).unwrap();
        assert_eq!(
            s.restore(id(1), other.hash.as_str(), "R", "r@x", T2),
            Err(VcsError::ForeignCommit(other.hash.to_string()))
        );
        let head = s.head(id(1)).unwrap().unwrap();
        let again = s.restore(id(1), head.as_str(), "R", "r@x", T2).unwrap();
        assert_eq!(again.parent, Some(head));
    }

    #[test]
    fn fsck_findings() {
        let mut s = store();
        assert!(s.fsck().unwrap().is_empty());
        let a = s.commit(id(1), b"hello", "A", "a@x", "m", T1).unwrap();
        s.commit(id(1), b"world", "A", "a@x", "n", T1).unwrap();
        assert!(s.fsck().unwrap().is_empty());

        let mut corrupt = s.clone();
        corrupt
            .backend_mut()
            .objects
            .get_mut(a.hash.as_str())
            .unwrap()[3] ^= 1;
        let f = corrupt.fsck().unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].kind, FindingKind::HashMismatch);

        let mut missing = s.clone();
        missing.backend_mut().objects.remove(a.blob.as_str());
        let f = missing.fsck().unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].kind, FindingKind::DanglingReference);
        assert_eq!(f[0].subject, a.hash.as_str());

        let mut head = s.clone();
        head.backend_mut()
            .heads
            .insert(id(3).to_string(), a.blob.to_string());
        let f = head.fsck().unwrap();
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].kind, FindingKind::DanglingHead);
    }
}
