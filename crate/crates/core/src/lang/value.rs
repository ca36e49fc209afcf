use alloc::string::{String, ToString};
use core::fmt;

use serde::{Deserialize, Serialize};

/// Runtime values. There are no implicit conversions between variants.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "lowercase")]
pub enum Value {
    Int(i64),
    Bool(bool),
    #[serde(rename = "string")]
    Str(String),
    Unit,
}

/// Bytes of string payload charged per heap cell.
pub const CELL_BYTES: usize = 32;

impl Value {
    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "int",
            Value::Bool(_) => "bool",
            Value::Str(_) => "string",
            Value::Unit => "unit",
        }
    }

    /// What `print` writes, minus the trailing newline.
    pub fn render(&self) -> String {
        match self {
            Value::Str(s) => s.clone(),
            other => other.to_string(),
        }
    }

    /// Heap cells this value occupies while bound.
    pub fn cells(&self) -> u64 {
        match self {
            Value::Str(s) => string_cells(s.len()),
            _ => 1,
        }
    }
}

pub fn string_cells(len: usize) -> u64 {
    1 + (len / CELL_BYTES) as u64
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => f.write_str(s),
            Value::Unit => Ok(()),
        }
    }
}
