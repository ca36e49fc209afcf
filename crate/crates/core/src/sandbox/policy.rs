use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::profile::{create_or_get_profile, Capability, IntegrityLevel, ProfileId};
use super::vfs::{AccessMode, FsObject, VirtualFs};
use super::{ExecutionPolicy, ResourceLimits, SandboxError};

/// The policy file: profile, limits, a filesystem fixture and extra grants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyDocument {
    pub profile: ProfileSpec,
    #[serde(default)]
    pub limits: ResourceLimits,
    #[serde(default)]
    pub fs: Vec<FsEntry>,
    #[serde(default)]
    pub grants: Vec<GrantEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub name: String,
    #[serde(default)]
    pub capabilities: Vec<Capability>,
    pub integrity: IntegrityLevel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FsEntry {
    pub path: String,
    #[serde(default)]
    pub content: String,
    pub integrity: IntegrityLevel,
    #[serde(default)]
    pub acl: Vec<AclEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AclEntry {
    pub id: ProfileId,
    pub mode: AccessMode,
}

/// A grant applied after the fixture is loaded. Without `id` the grant goes
/// to the document's own profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrantEntry {
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<ProfileId>,
    pub mode: AccessMode,
}

impl PolicyDocument {
    pub fn build(&self) -> Result<(ExecutionPolicy, VirtualFs), SandboxError> {
        let profile = create_or_get_profile(
            &self.profile.name,
            self.profile.capabilities.iter().copied(),
            self.profile.integrity,
        )?;
        let mut fs = VirtualFs::new();
        for entry in &self.fs {
            let mut obj = FsObject::new(entry.content.as_bytes().to_vec(), entry.integrity);
            for acl in &entry.acl {
                obj.acl.insert(acl.id.clone(), acl.mode);
            }
            fs.insert(&entry.path, obj)?;
        }
        for grant in &self.grants {
            let id = grant.id.as_ref().unwrap_or(&profile.id);
            fs.grant_access(&grant.path, id, grant.mode)?;
        }
        let policy = ExecutionPolicy::new(profile, self.limits)?;
        Ok((policy, fs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sandbox::{check_fs_access, Access, Request};

    const DOC: &str = r#"{
        "profile": {"name": "reader", "capabilities": ["file_read", "console_write"], "integrity": "low"},
        "limits": {"max_steps": 10, "max_heap_cells": 10, "max_output_bytes": 10, "max_wall_ms": 10},
        "fs": [
            {"path": "/data", "content": "", "integrity": "medium"},
            {"path": "/data/a.txt", "content": "hello", "integrity": "medium",
             "acl": [{"id": "SB-8ed3f6ad685b959e", "mode": "read"}]}
        ],
        "grants": [{"path": "/data/a.txt", "mode": "read"}]
    }"#;

    #[test]
    fn builds_policy_and_fixture() {
        let doc: PolicyDocument = serde_json::from_str(DOC).unwrap();
        let (policy, fs) = doc.build().unwrap();
        assert_eq!(policy.limits.max_steps, 10);
        assert_eq!(fs.len(), 2);
        let obj = fs.get("/data/a.txt").unwrap();
        assert_eq!(obj.acl.len(), 2);
        assert_eq!(
            check_fs_access(&fs, &policy.profile, "/data/a.txt", Request::Read),
            Access::Allow
        );
    }

    #[test]
    fn unknown_capability_rejected_at_parse() {
        let bad = DOC.replace("file_read", "root_access");
        assert!(serde_json::from_str::<PolicyDocument>(&bad).is_err());
    }

    #[test]
    fn invalid_acl_id_rejected_at_parse() {
        let bad = DOC.replace("SB-8ed3f6ad685b959e", "alpha");
        assert!(serde_json::from_str::<PolicyDocument>(&bad).is_err());
    }

    #[test]
    fn zero_limit_rejected() {
        let bad = DOC.replace("\"max_steps\": 10", "\"max_steps\": 0");
        let doc: PolicyDocument = serde_json::from_str(&bad).unwrap();
        assert_eq!(
            doc.build().unwrap_err(),
            SandboxError::NonPositiveLimit("max_steps")
        );
    }

    #[test]
    fn grant_to_missing_path_fails() {
        let bad = DOC.replace(
            "\"grants\": [{\"path\": \"/data/a.txt\"",
            "\"grants\": [{\"path\": \"/nope\"",
        );
        let doc: PolicyDocument = serde_json::from_str(&bad).unwrap();
        assert!(matches!(doc.build(), Err(SandboxError::PathNotFound(_))));
    }
}
