use crate::sandbox::Capability;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Builtin {
    pub name: &'static str,
    pub arity: usize,
    /// Pure builtins have no effect besides their return value.
    pub pure: bool,
    pub capability: Option<Capability>,
}

pub const BUILTINS: &[Builtin] = &[
    Builtin {
        name: "print",
        arity: 1,
        pure: false,
        capability: Some(Capability::ConsoleWrite),
    },
    Builtin {
        name: "nl",
        arity: 0,
        pure: true,
        capability: None,
    },
    Builtin {
        name: "concat",
        arity: 2,
        pure: true,
        capability: None,
    },
    Builtin {
        name: "len",
        arity: 1,
        pure: true,
        capability: None,
    },
    Builtin {
        name: "str",
        arity: 1,
        pure: true,
        capability: None,
    },
    Builtin {
        name: "hash_sha1",
        arity: 1,
        pure: true,
        capability: Some(Capability::Hashing),
    },
    Builtin {
        name: "hash_sha512",
        arity: 1,
        pure: true,
        capability: Some(Capability::Hashing),
    },
    Builtin {
        name: "read_file",
        arity: 1,
        pure: false,
        capability: Some(Capability::FileRead),
    },
    Builtin {
        name: "write_file",
        arity: 2,
        pure: false,
        capability: Some(Capability::FileWrite),
    },
];

pub fn lookup(name: &str) -> Option<&'static Builtin> {
    BUILTINS.iter().find(|b| b.name == name)
}

/// Builtins whose ignored result is reported by the analyzer.
pub fn is_pure(name: &str) -> bool {
    matches!(
        name,
        "concat" | "hash_sha1" | "hash_sha512" | "len" | "nl" | "str"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_flag_matches_list() {
        for b in BUILTINS {
            assert_eq!(b.pure, is_pure(b.name), "{}", b.name);
        }
    }
}
