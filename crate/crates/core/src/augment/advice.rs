use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Structured guidance shown when the user opens an augmentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdviceModel {
    pub id: String,
    pub title: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secure_action: Option<SecureAction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub insecure_action: Option<InsecureAction>,
    #[serde(default)]
    pub links: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecureAction {
    pub label: String,
    pub sample_code: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsecureAction {
    pub label: String,
    pub suppression_hint: String,
}
