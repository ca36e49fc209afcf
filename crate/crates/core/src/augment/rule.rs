use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::advice::AdviceModel;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentationRule {
    pub id: String,
    /// Higher wins per effect channel.
    #[serde(default)]
    pub priority: i64,
    pub matchers: Vec<Matcher>,
    #[serde(default)]
    pub effects: Effects,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advice: Option<String>,
}

impl AugmentationRule {
    pub fn new(id: impl Into<String>, priority: i64) -> Self {
        AugmentationRule {
            id: id.into(),
            priority,
            matchers: Vec::new(),
            effects: Effects::default(),
            advice: None,
        }
    }

    pub fn regex(mut self, pattern: impl Into<String>) -> Self {
        self.matchers.push(Matcher::Regex(pattern.into()));
        self
    }

    pub fn literal(mut self, text: impl Into<String>) -> Self {
        self.matchers.push(Matcher::Literal(text.into()));
        self
    }

    pub fn foreground(mut self, color: &str) -> Self {
        self.effects.foreground = Some(color.into());
        self
    }

    pub fn background(mut self, color: &str) -> Self {
        self.effects.background = Some(color.into());
        self
    }

    pub fn font_style(mut self, style: FontStyle) -> Self {
        self.effects.font_style = Some(style);
        self
    }

    pub fn font_weight(mut self, weight: FontWeight) -> Self {
        self.effects.font_weight = Some(weight);
        self
    }

    pub fn decoration(mut self, shape: DecorationShape, color: &str) -> Self {
        self.effects.decoration = Some(Decoration {
            shape,
            color: color.into(),
        });
        self
    }

    pub fn tooltip(mut self, text: impl Into<String>) -> Self {
        self.effects.tooltip = Some(text.into());
        self
    }

    pub fn overlay(mut self, overlay: OverlayText) -> Self {
        self.effects.overlay_text = Some(overlay);
        self
    }

    pub fn gutter(mut self, side: GutterSide, glyph: impl Into<String>) -> Self {
        self.effects.gutter = Some(Gutter {
            side,
            glyph: glyph.into(),
        });
        self
    }

    pub fn with_advice(mut self, id: impl Into<String>) -> Self {
        self.advice = Some(id.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Matcher {
    Literal(String),
    Regex(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Effects {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub foreground: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub font_style: Option<FontStyle>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub font_weight: Option<FontWeight>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoration: Option<Decoration>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tooltip: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlay_text: Option<OverlayText>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gutter: Option<Gutter>,
}

impl Effects {
    pub fn is_empty(&self) -> bool {
        *self == Effects::default()
    }

    pub(crate) fn colors(&self) -> impl Iterator<Item = &str> {
        self.foreground
            .iter()
            .chain(&self.background)
            .chain(self.decoration.iter().map(|d| &d.color))
            .map(String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FontStyle {
    Normal,
    Italic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FontWeight {
    Normal,
    Bold,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Decoration {
    pub shape: DecorationShape,
    pub color: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecorationShape {
    UnderlineBracket,
    UnderlineSquiggle,
    Box,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gutter {
    pub side: GutterSide,
    pub glyph: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GutterSide {
    Left,
    Right,
}

/// Replacement text shown over a match. Templates may reference regex
/// captures as `$1` or `${name}`; `$0` is the whole match.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OverlayText {
    Plain(String),
    Template { template: String },
}

/// A ruleset file: rules plus the advice they may reference.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSet {
    #[serde(default)]
    pub rules: Vec<AugmentationRule>,
    #[serde(default)]
    pub advice: Vec<AdviceModel>,
}

impl RuleSet {
    pub fn catalog(&self) -> BTreeMap<String, AdviceModel> {
        self.advice
            .iter()
            .map(|a| (a.id.clone(), a.clone()))
            .collect()
    }

    pub fn extend(&mut self, other: RuleSet) {
        self.rules.extend(other.rules);
        self.advice.extend(other.advice);
    }
}

/// `#RRGGBB` or a CSS color keyword, case-insensitive.
pub fn is_valid_color(color: &str) -> bool {
    if let Some(hex) = color.strip_prefix('#') {
        return hex.len() == 6 && hex.bytes().all(|b| b.is_ascii_hexdigit());
    }
    NAMED_COLORS
        .binary_search_by(|probe| cmp_ignore_case(probe, color))
        .is_ok()
}

fn cmp_ignore_case(a: &str, b: &str) -> core::cmp::Ordering {
    a.bytes()
        .map(|c| c.to_ascii_lowercase())
        .cmp(b.bytes().map(|c| c.to_ascii_lowercase()))
}

const NAMED_COLORS: &[&str] = &[
    "aliceblue",
    "antiquewhite",
    "aqua",
    "aquamarine",
    "azure",
    "beige",
    "bisque",
    "black",
    "blanchedalmond",
    "blue",
    "blueviolet",
    "brown",
    "burlywood",
    "cadetblue",
    "chartreuse",
    "chocolate",
    "coral",
    "cornflowerblue",
    "cornsilk",
    "crimson",
    "cyan",
    "darkblue",
    "darkcyan",
    "darkgoldenrod",
    "darkgray",
    "darkgreen",
    "darkgrey",
    "darkkhaki",
    "darkmagenta",
    "darkolivegreen",
    "darkorange",
    "darkorchid",
    "darkred",
    "darksalmon",
    "darkseagreen",
    "darkslateblue",
    "darkslategray",
    "darkslategrey",
    "darkturquoise",
    "darkviolet",
    "deeppink",
    "deepskyblue",
    "dimgray",
    "dimgrey",
    "dodgerblue",
    "firebrick",
    "floralwhite",
    "forestgreen",
    "fuchsia",
    "gainsboro",
    "ghostwhite",
    "gold",
    "goldenrod",
    "gray",
    "green",
    "greenyellow",
    "grey",
    "honeydew",
    "hotpink",
    "indianred",
    "indigo",
    "ivory",
    "khaki",
    "lavender",
    "lavenderblush",
    "lawngreen",
    "lemonchiffon",
    "lightblue",
    "lightcoral",
    "lightcyan",
    "lightgoldenrodyellow",
    "lightgray",
    "lightgreen",
    "lightgrey",
    "lightpink",
    "lightsalmon",
    "lightseagreen",
    "lightskyblue",
    "lightslategray",
    "lightslategrey",
    "lightsteelblue",
    "lightyellow",
    "lime",
    "limegreen",
    "linen",
    "magenta",
    "maroon",
    "mediumaquamarine",
    "mediumblue",
    "mediumorchid",
    "mediumpurple",
    "mediumseagreen",
    "mediumslateblue",
    "mediumspringgreen",
    "mediumturquoise",
    "mediumvioletred",
    "midnightblue",
    "mintcream",
    "mistyrose",
    "moccasin",
    "navajowhite",
    "navy",
    "oldlace",
    "olive",
    "olivedrab",
    "orange",
    "orangered",
    "orchid",
    "palegoldenrod",
    "palegreen",
    "paleturquoise",
    "palevioletred",
    "papayawhip",
    "peachpuff",
    "peru",
    "pink",
    "plum",
    "powderblue",
    "purple",
    "rebeccapurple",
    "red",
    "rosybrown",
    "royalblue",
    "saddlebrown",
    "salmon",
    "sandybrown",
    "seagreen",
    "seashell",
    "sienna",
    "silver",
    "skyblue",
    "slateblue",
    "slategray",
    "slategrey",
    "snow",
    "springgreen",
    "steelblue",
    "tan",
    "teal",
    "thistle",
    "tomato",
    "transparent",
    "turquoise",
    "violet",
    "wheat",
    "white",
    "whitesmoke",
    "yellow",
    "yellowgreen",
];
