//! In-memory filesystem with per-object ACLs and integrity labels.
//!
//! Access checks run three gates in order: capability, ACL, integrity.
//! Reads are not integrity-gated; writes enforce no-write-up.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::profile::{Capability, IntegrityLevel, ProfileId, SandboxProfile};
use super::SandboxError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessMode {
    Read,
    Write,
    ReadWrite,
}

impl AccessMode {
    pub fn covers(self, request: Request) -> bool {
        matches!(
            (self, request),
            (AccessMode::ReadWrite, _)
                | (AccessMode::Read, Request::Read)
                | (AccessMode::Write, Request::Write)
        )
    }

    fn widen(self, other: AccessMode) -> AccessMode {
        if self == other {
            self
        } else {
            AccessMode::ReadWrite
        }
    }
}

/// The kind of access a check asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Request {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DenyReason {
    CapabilityDenied,
    AclDenied,
    IntegrityDenied,
    /// The caller may look at the parent directory, but the object is absent.
    NotFound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Allow,
    Deny(DenyReason),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FsObject {
    pub content: Vec<u8>,
    pub integrity: IntegrityLevel,
    pub acl: BTreeMap<ProfileId, AccessMode>,
}

impl FsObject {
    pub fn new(content: impl Into<Vec<u8>>, integrity: IntegrityLevel) -> Self {
        FsObject {
            content: content.into(),
            integrity,
            acl: BTreeMap::new(),
        }
    }
}

/// Normalizes an absolute path: collapses `//` and `.`, resolves `..`
/// (clamped at the root) and drops a trailing slash.
pub fn normalize_path(path: &str) -> Result<String, SandboxError> {
    if !path.starts_with('/') {
        return Err(SandboxError::InvalidPath(path.into()));
    }
    let mut parts: Vec<&str> = Vec::new();
    for seg in path.split('/') {
        match seg {
            "" | "." => {}
            ".." => {
                parts.pop();
            }
            seg if seg.chars().any(char::is_control) => {
                return Err(SandboxError::InvalidPath(path.into()))
            }
            seg => parts.push(seg),
        }
    }
    let mut out = String::with_capacity(path.len());
    for p in &parts {
        out.push('/');
        out.push_str(p);
    }
    if out.is_empty() {
        out.push('/');
    }
    Ok(out)
}

fn parent(path: &str) -> Option<&str> {
    if path == "/" {
        return None;
    }
    match path.rfind('/') {
        Some(0) => Some("/"),
        Some(i) => Some(&path[..i]),
        None => None,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VirtualFs {
    objects: BTreeMap<String, FsObject>,
}

impl VirtualFs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, path: &str, object: FsObject) -> Result<(), SandboxError> {
        let path = normalize_path(path)?;
        self.objects.insert(path, object);
        Ok(())
    }

    pub fn get(&self, path: &str) -> Option<&FsObject> {
        self.objects.get(path)
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.objects.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// The object itself, or for a missing path its nearest existing ancestor.
    fn governing(&self, path: &str) -> Option<(&str, &FsObject, bool)> {
        if let Some((k, o)) = self.objects.get_key_value(path) {
            return Some((k.as_str(), o, true));
        }
        let mut cur = parent(path);
        while let Some(p) = cur {
            if let Some((k, o)) = self.objects.get_key_value(p) {
                return Some((k.as_str(), o, false));
            }
            cur = parent(p);
        }
        None
    }

    /// Grants `mode` to `profile` on an existing path, widening any existing
    /// entry. Never removes a permission.
    pub fn grant_access(
        &mut self,
        path: &str,
        profile: &ProfileId,
        mode: AccessMode,
    ) -> Result<(), SandboxError> {
        let path = normalize_path(path)?;
        let obj = self
            .objects
            .get_mut(&path)
            .ok_or(SandboxError::PathNotFound(path))?;
        let entry = obj.acl.entry(profile.clone()).or_insert(mode);
        *entry = entry.widen(mode);
        Ok(())
    }

    pub fn read(&self, profile: &SandboxProfile, path: &str) -> Result<&[u8], Access> {
        match check_fs_access(self, profile, path, Request::Read) {
            Access::Allow => Ok(&self.objects[path].content),
            deny => Err(deny),
        }
    }

    /// Writes through the access check. New objects inherit the governing
    /// ancestor's ACL and take the writer's integrity level.
    pub fn write(
        &mut self,
        profile: &SandboxProfile,
        path: &str,
        content: Vec<u8>,
    ) -> Result<(), Access> {
        match check_fs_access(self, profile, path, Request::Write) {
            Access::Allow => {}
            deny => return Err(deny),
        }
        if let Some(obj) = self.objects.get_mut(path) {
            obj.content = content;
        } else {
            let acl = self
                .governing(path)
                .map(|(_, o, _)| o.acl.clone())
                .unwrap_or_default();
            self.objects.insert(
                path.into(),
                FsObject {
                    content,
                    integrity: profile.integrity,
                    acl,
                },
            );
        }
        Ok(())
    }
}

pub fn grant_access(
    mut fs: VirtualFs,
    path: &str,
    profile: &ProfileId,
    mode: AccessMode,
) -> Result<VirtualFs, SandboxError> {
    fs.grant_access(path, profile, mode)?;
    Ok(fs)
}

/// `path` must already be normalized.
pub fn check_fs_access(
    fs: &VirtualFs,
    profile: &SandboxProfile,
    path: &str,
    request: Request,
) -> Access {
    let needed = match request {
        Request::Read => Capability::FileRead,
        Request::Write => Capability::FileWrite,
    };
    if !profile.has(needed) {
        return Access::Deny(DenyReason::CapabilityDenied);
    }
    let Some((_, object, exact)) = fs.governing(path) else {
        return Access::Deny(DenyReason::AclDenied);
    };
    let granted = object
        .acl
        .get(&profile.id)
        .is_some_and(|mode| mode.covers(request));
    match request {
        Request::Read if !exact => {
            // Only reveal absence to callers allowed to list the parent.
            let listable = object
                .acl
                .get(&profile.id)
                .is_some_and(|m| m.covers(Request::Read));
            if listable {
                Access::Deny(DenyReason::NotFound)
            } else {
                Access::Deny(DenyReason::AclDenied)
            }
        }
        _ if !granted => Access::Deny(DenyReason::AclDenied),
        Request::Write if object.integrity > profile.integrity => {
            Access::Deny(DenyReason::IntegrityDenied)
        }
        _ => Access::Allow,
    }
}
