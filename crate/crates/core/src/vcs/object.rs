use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ids::{ObjectId, ScriptId};
use super::VcsError;

/// Stored form of a blob: `blob <len>\n` followed by the content.
pub fn blob_bytes(content: &[u8]) -> Vec<u8> {
    let mut out = format!("blob {}\n", content.len()).into_bytes();
    out.extend_from_slice(content);
    out
}

pub fn blob_hash(content: &[u8]) -> ObjectId {
    ObjectId::of(&blob_bytes(content))
}

/// Content of a stored blob, or `None` if the header is wrong.
pub fn parse_blob(bytes: &[u8]) -> Option<&[u8]> {
    let rest = bytes.strip_prefix(b"blob ")?;
    let nl = rest.iter().position(|&b| b == b'\n')?;
    let len_text = core::str::from_utf8(&rest[..nl]).ok()?;
    if len_text.is_empty() || (len_text.len() > 1 && len_text.starts_with('0')) {
        return None;
    }
    let len: usize = len_text.parse().ok()?;
    let content = &rest[nl + 1..];
    (content.len() == len).then_some(content)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commit {
    pub hash: ObjectId,
    pub parent: Option<ObjectId>,
    pub blob: ObjectId,
    pub script_id: ScriptId,
    pub author: String,
    pub email: String,
    /// RFC 3339, UTC.
    pub timestamp: String,
    pub message: String,
}

/// Everything a commit hashes over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitFields<'a> {
    pub script_id: ScriptId,
    pub blob: &'a ObjectId,
    pub parent: Option<&'a ObjectId>,
    pub author: &'a str,
    pub email: &'a str,
    pub timestamp: &'a str,
    pub message: &'a str,
}

impl CommitFields<'_> {
    pub fn validate(&self) -> Result<(), VcsError> {
        if self.author.trim().is_empty() {
            return Err(VcsError::EmptyAuthor);
        }
        if self.message.trim().is_empty() {
            return Err(VcsError::EmptyMessage);
        }
        if self.author.contains(['\n', '\r']) {
            return Err(VcsError::InvalidField("author must be a single line"));
        }
        if self.email.chars().any(char::is_whitespace) {
            return Err(VcsError::InvalidField("email must not contain whitespace"));
        }
        if !is_rfc3339_utc(self.timestamp) {
            return Err(VcsError::InvalidTimestamp(self.timestamp.into()));
        }
        Ok(())
    }

    /// The canonical serialization; its SHA-256 is the commit hash.
    pub fn serialize(&self) -> Vec<u8> {
        let mut s = String::new();
        s.push_str("commit\n");
        s.push_str(&format!("script {}\n", self.script_id));
        s.push_str(&format!("blob {}\n", self.blob));
        if let Some(p) = self.parent {
            s.push_str(&format!("parent {p}\n"));
        }
        s.push_str(&format!("author {} {}\n", self.author, self.email));
        s.push_str(&format!("timestamp {}\n", self.timestamp));
        s.push_str(&format!("message {}\n", escape_message(self.message)));
        s.into_bytes()
    }

    pub fn hash(&self) -> ObjectId {
        ObjectId::of(&self.serialize())
    }

    pub fn into_commit(self) -> Commit {
        Commit {
            hash: self.hash(),
            parent: self.parent.cloned(),
            blob: self.blob.clone(),
            script_id: self.script_id,
            author: self.author.into(),
            email: self.email.into(),
            timestamp: self.timestamp.into(),
            message: self.message.into(),
        }
    }
}

impl Commit {
    pub fn fields(&self) -> CommitFields<'_> {
        CommitFields {
            script_id: self.script_id,
            blob: &self.blob,
            parent: self.parent.as_ref(),
            author: &self.author,
            email: &self.email,
            timestamp: &self.timestamp,
            message: &self.message,
        }
    }

    /// Parses a stored commit. The hash is recomputed from `bytes`.
    pub fn parse(bytes: &[u8]) -> Result<Commit, String> {
        let text = core::str::from_utf8(bytes).map_err(|_| "commit is not UTF-8".to_string())?;
        let body = text
            .strip_prefix("commit\n")
            .and_then(|b| b.strip_suffix('\n'))
            .ok_or("missing commit header or trailing newline")?;
        let lines: Vec<&str> = body.split('\n').collect();
        let (parent_line, rest) = match lines.len() {
            5 => (None, &lines[2..]),
            6 => (Some(lines[2]), &lines[3..]),
            n => return Err(format!("expected 5 or 6 lines, found {n}")),
        };
        let field = |line: &'_ str, name: &str| -> Result<String, String> {
            line.strip_prefix(name)
                .and_then(|l| l.strip_prefix(' '))
                .map(String::from)
                .ok_or_else(|| format!("missing `{name}` line"))
        };
        let script_id: ScriptId = field(lines[0], "script")?
            .parse()
            .map_err(|e: VcsError| e.to_string())?;
        let blob: ObjectId = field(lines[1], "blob")?
            .parse()
            .map_err(|e: VcsError| e.to_string())?;
        let parent: Option<ObjectId> = match parent_line {
            Some(l) => Some(
                field(l, "parent")?
                    .parse()
                    .map_err(|e: VcsError| e.to_string())?,
            ),
            None => None,
        };
        let author_line = field(rest[0], "author")?;
        let (author, email) = author_line
            .rsplit_once(' ')
            .ok_or("author line lacks an email")?;
        let timestamp = field(rest[1], "timestamp")?;
        let message = unescape_message(&field(rest[2], "message")?).ok_or("bad message escape")?;
        let commit = Commit {
            hash: ObjectId::of(bytes),
            parent,
            blob,
            script_id,
            author: author.into(),
            email: email.into(),
            timestamp,
            message,
        };
        commit.fields().validate().map_err(|e| e.to_string())?;
        if commit.fields().serialize() != bytes {
            return Err("commit is not in canonical form".into());
        }
        Ok(commit)
    }
}

/// Escapes `\` and line feeds so a message fits on one line.
pub fn escape_message(message: &str) -> String {
    let mut out = String::with_capacity(message.len());
    for c in message.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_message(escaped: &str) -> Option<String> {
    let mut out = String::with_capacity(escaped.len());
    let mut chars = escaped.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next()? {
            '\\' => out.push('\\'),
            'n' => out.push('\n'),
            _ => return None,
        }
    }
    Some(out)
}

/// `YYYY-MM-DDTHH:MM:SS[.fraction]Z`
pub fn is_rfc3339_utc(s: &str) -> bool {
    let b = s.as_bytes();
    if b.len() < 20 || b[b.len() - 1] != b'Z' {
        return false;
    }
    let digits = |r: core::ops::Range<usize>| b[r.clone()].iter().all(u8::is_ascii_digit);
    let num = |r: core::ops::Range<usize>| -> u32 {
        b[r].iter().fold(0, |acc, d| acc * 10 + u32::from(d - b'0'))
    };
    let shape = digits(0..4)
        && b[4] == b'-'
        && digits(5..7)
        && b[7] == b'-'
        && digits(8..10)
        && b[10] == b'T'
        && digits(11..13)
        && b[13] == b':'
        && digits(14..16)
        && b[16] == b':'
        && digits(17..19);
    if !shape {
        return false;
    }
    let frac = &b[19..b.len() - 1];
    let frac_ok = frac.is_empty()
        || (frac.len() > 1 && frac[0] == b'.' && frac[1..].iter().all(u8::is_ascii_digit));
    let (year, month, day) = (num(0..4), num(5..7), num(8..10));
    let leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
    let days = match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if leap => 29,
        2 => 28,
        _ => return false,
    };
    frac_ok && (1..=days).contains(&day) && num(11..13) < 24 && num(14..16) < 60 && num(17..19) < 61
}
