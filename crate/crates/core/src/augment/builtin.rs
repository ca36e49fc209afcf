use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::advice::{AdviceModel, InsecureAction, SecureAction};
use super::rule::{AugmentationRule, DecorationShape, FontStyle, FontWeight, OverlayText, RuleSet};
use super::AugmentError;

pub const SHA1_TOOLTIP: &str =
    "SHA1 is cryptographically broken, please use a currently secure function like SHA-512.";

pub const BUILTIN_RULESETS: &[&str] = &[
    "smalltalk",
    "sha1_warning",
    "identifier_overlay",
    "newline_advice",
];

/// Returns a built-in ruleset. `params` is only read by
/// `identifier_overlay`, where it maps identifiers to display names.
pub fn builtin_ruleset(
    name: &str,
    params: &BTreeMap<String, String>,
) -> Result<RuleSet, AugmentError> {
    match name {
        "smalltalk" => Ok(smalltalk()),
        "sha1_warning" => Ok(sha1_warning()),
        "identifier_overlay" => Ok(identifier_overlay(params)),
        "newline_advice" => Ok(newline_advice()),
        other => Err(AugmentError::UnknownRuleset(other.into())),
    }
}

/// Smalltalk highlighting. Later entries take precedence, so priorities
/// ascend in list order.
pub fn smalltalk() -> RuleSet {
    let rules = vec![
        AugmentationRule::new("keywords", 1)
            .regex(r"\b(self|super|true|false|nil)\b")
            .font_weight(FontWeight::Bold)
            .foreground("RoyalBlue"),
        AugmentationRule::new("messages", 2)
            .regex(r"\w+:")
            .foreground("Orange"),
        AugmentationRule::new("numbers_and_strings", 3)
            .regex(r"\b\d+(\.\d+)?\b")
            .regex(r"'((.|\r|\n)*?)'")
            .foreground("MediumAquamarine"),
        AugmentationRule::new("symbols", 4)
            .regex(r"[$#]\w+")
            .font_weight(FontWeight::Bold)
            .foreground("DarkRed"),
        AugmentationRule::new("parameters", 5)
            .regex(r":\w+")
            .font_weight(FontWeight::Bold),
        AugmentationRule::new("comments", 6)
            .regex(r#""(.|\r|\n)*?""#)
            .foreground("LightGreen")
            .font_style(FontStyle::Italic),
    ];
    RuleSet {
        rules,
        advice: Vec::new(),
    }
}

pub fn sha1_advice() -> AdviceModel {
    AdviceModel {
        id: "sha1_insecure".into(),
        title: "Insecure hash function".into(),
        message: SHA1_TOOLTIP.into(),
        secure_action: Some(SecureAction {
            label: "Hash with SHA-512".into(),
            sample_code: "let digest = hash_sha512(text);".into(),
        }),
        insecure_action: Some(InsecureAction {
            label: "Keep SHA-1".into(),
            suppression_hint: "Only for checksums that carry no security meaning, such as matching legacy identifiers.".into(),
        }),
        links: vec!["https://csrc.nist.gov/projects/hash-functions".into()],
    }
}

pub fn sha1_warning() -> RuleSet {
    let rule = AugmentationRule::new("sha1_call", 10)
        .regex(r"\bhash_sha1\s*\(")
        .decoration(DecorationShape::UnderlineBracket, "Red")
        .tooltip(SHA1_TOOLTIP)
        .with_advice("sha1_insecure");
    RuleSet {
        rules: vec![rule],
        advice: vec![sha1_advice()],
    }
}

/// One overlay rule per mapped identifier, shown in clear text.
pub fn identifier_overlay(mapping: &BTreeMap<String, String>) -> RuleSet {
    let rules = mapping
        .iter()
        .filter(|(ident, _)| !ident.is_empty())
        .map(|(ident, display)| {
            AugmentationRule::new(format!("overlay_{ident}"), 0)
                .regex(word_pattern(ident))
                .background("DarkGray")
                .foreground("White")
                .overlay(OverlayText::Plain(display.clone()))
        })
        .collect();
    RuleSet {
        rules,
        advice: Vec::new(),
    }
}

fn word_pattern(ident: &str) -> String {
    let is_word = |c: Option<char>| c.is_some_and(|c| c.is_alphanumeric() || c == '_');
    let mut p = String::new();
    if is_word(ident.chars().next()) {
        p.push_str(r"\b");
    }
    p.push_str(&regex_syntax::escape(ident));
    if is_word(ident.chars().next_back()) {
        p.push_str(r"\b");
    }
    p
}

pub fn newline_advice_model() -> AdviceModel {
    AdviceModel {
        id: "newline_escape".into(),
        title: "Use nl() for line breaks".into(),
        message: "The \\n escape sequence does not produce a portable line break. Build the string with nl() instead.".into(),
        secure_action: Some(SecureAction {
            label: "Insert line breaks with nl()".into(),
            sample_code: "let s = \"first\" + nl() + \"second\";".into(),
        }),
        insecure_action: Some(InsecureAction {
            label: "Keep the escape".into(),
            suppression_hint: "Only where the consumer expects a bare line feed byte.".into(),
        }),
        links: Vec::new(),
    }
}

pub fn newline_advice() -> RuleSet {
    let rule = AugmentationRule::new("newline_escape", 5)
        .regex(r"\\n")
        .decoration(DecorationShape::UnderlineSquiggle, "Orange")
        .tooltip("Use nl() instead of the \\n escape sequence.")
        .with_advice("newline_escape");
    RuleSet {
        rules: vec![rule],
        advice: vec![newline_advice_model()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::{compute_spans, Stage};

    #[test]
    fn unknown_ruleset() {
        assert_eq!(
            builtin_ruleset("cobol", &BTreeMap::new()),
            Err(AugmentError::UnknownRuleset("cobol".into()))
        );
    }

    #[test]
    fn all_builtins_are_valid() {
        let mut params = BTreeMap::new();
        params.insert("F1001".into(), "Category ID".into());
        params.insert("a.b".into(), "dotted".into());
        for name in BUILTIN_RULESETS {
            let set = builtin_ruleset(name, &params).unwrap();
            let out = compute_spans("", &set.rules, &set.catalog());
            assert!(out.errors.is_empty(), "{name}: {:?}", out.errors);
        }
    }

    #[test]
    fn sha1_call_site() {
        let set = sha1_warning();
        let text = "let x = hash_sha1(\"s\");";
        let out = compute_spans(text, &set.rules, &set.catalog());
        assert_eq!(out.spans.len(), 1);
        let span = &out.spans[0];
        assert_eq!(span.stage, Stage::Background);
        assert_eq!(span.effects.tooltip.as_deref(), Some(SHA1_TOOLTIP));
        assert_eq!(&text[span.span.start..span.span.end], "hash_sha1(");
        assert_eq!(span.advice.as_ref().unwrap().id, "sha1_insecure");

        let out = compute_spans(
            "hash_sha512(\"s\"); my_hash_sha1(1);",
            &set.rules,
            &set.catalog(),
        );
        assert!(out.spans.is_empty());
    }

    #[test]
    fn smalltalk_one_liner() {
        let set = smalltalk();
        let text = "self foo: 42 \"note\"";
        let out = compute_spans(text, &set.rules, &set.catalog());
        let got: Vec<_> = out
            .spans
            .iter()
            .map(|s| (s.rule_id.as_str(), &text[s.span.start..s.span.end]))
            .collect();
        assert_eq!(
            got,
            vec![
                ("keywords", "self"),
                ("messages", "foo:"),
                ("numbers_and_strings", "42"),
                ("comments", "\"note\""),
            ]
        );
        assert_eq!(out.spans[0].effects.font_weight, Some(FontWeight::Bold));
        assert_eq!(
            out.spans[0].effects.foreground.as_deref(),
            Some("RoyalBlue")
        );
        assert_eq!(out.spans[3].effects.font_style, Some(FontStyle::Italic));
    }

    #[test]
    fn word_patterns() {
        assert_eq!(word_pattern("F1"), r"\bF1\b");
        assert_eq!(word_pattern("a.b"), r"\ba\.b\b");
        assert_eq!(word_pattern("+x"), r"\+x\b");
    }
}
