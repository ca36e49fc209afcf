//! Which attributes of the visual augmentation taxonomy a rule exercises.
//! Documentation aid only; nothing here affects rendering.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::advice::AdviceModel;
use super::rule::{AugmentationRule, DecorationShape, GutterSide, Matcher};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visualization {
    Colour,
    Text,
    Decoration,
    Icon,
    Graphics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    InCode,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    CharacterRange,
    Line,
    LineRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interaction {
    Popover,
    Navigation,
    Change,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyRow {
    pub rule_id: String,
    pub visualization: BTreeSet<Visualization>,
    pub location: BTreeSet<Location>,
    pub target: BTreeSet<Target>,
    pub interaction: BTreeSet<Interaction>,
}

/// One row per rule, in rule order. Advice ids are looked up in `catalog`
/// to decide whether links make the rule navigable.
pub fn taxonomy_coverage(
    rules: &[AugmentationRule],
    catalog: &BTreeMap<String, AdviceModel>,
) -> Vec<TaxonomyRow> {
    rules.iter().map(|r| classify(r, catalog)).collect()
}

fn classify(rule: &AugmentationRule, catalog: &BTreeMap<String, AdviceModel>) -> TaxonomyRow {
    let fx = &rule.effects;
    let mut row = TaxonomyRow {
        rule_id: rule.id.clone(),
        ..TaxonomyRow::default()
    };
    if fx.foreground.is_some()
        || fx.background.is_some()
        || fx.font_style.is_some()
        || fx.font_weight.is_some()
    {
        row.visualization.insert(Visualization::Colour);
    }
    if fx.tooltip.is_some() || fx.overlay_text.is_some() {
        row.visualization.insert(Visualization::Text);
    }
    if let Some(d) = &fx.decoration {
        row.visualization.insert(match d.shape {
            DecorationShape::Box => Visualization::Graphics,
            _ => Visualization::Decoration,
        });
    }
    let in_code = fx.foreground.is_some()
        || fx.background.is_some()
        || fx.font_style.is_some()
        || fx.font_weight.is_some()
        || fx.decoration.is_some()
        || fx.overlay_text.is_some();
    if in_code {
        row.location.insert(Location::InCode);
        row.target.insert(Target::CharacterRange);
    }
    if let Some(g) = &fx.gutter {
        row.visualization.insert(Visualization::Icon);
        row.location.insert(match g.side {
            GutterSide::Left => Location::Left,
            GutterSide::Right => Location::Right,
        });
        row.target.insert(Target::Line);
    }
    if in_code && rule.matchers.iter().any(spans_lines) {
        row.target.insert(Target::LineRange);
    }
    let advice = rule.advice.as_ref().and_then(|id| catalog.get(id));
    if fx.tooltip.is_some() || advice.is_some() {
        row.interaction.insert(Interaction::Popover);
    }
    if advice.is_some_and(|a| !a.links.is_empty()) {
        row.interaction.insert(Interaction::Navigation);
    }
    if fx.overlay_text.is_some() {
        row.interaction.insert(Interaction::Change);
    }
    row
}

/// Whether a matcher can match across a line break.
fn spans_lines(m: &Matcher) -> bool {
    match m {
        Matcher::Literal(s) => s.contains('\n'),
        Matcher::Regex(p) => {
            p.contains("\\n") || p.contains("\\r") || p.contains("(?s") || p.contains("\\s")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::builtin;

    #[test]
    fn sha1_row() {
        let set = builtin::sha1_warning();
        let rows = taxonomy_coverage(&set.rules, &set.catalog());
        let row = &rows[0];
        assert_eq!(
            row.visualization,
            [Visualization::Text, Visualization::Decoration].into()
        );
        assert_eq!(row.location, [Location::InCode].into());
        assert!(row.interaction.contains(&Interaction::Popover));
    }

    #[test]
    fn overlay_row() {
        let mut map = BTreeMap::new();
        map.insert("F1001".into(), "Category ID".into());
        let set = builtin::identifier_overlay(&map);
        let row = &taxonomy_coverage(&set.rules, &set.catalog())[0];
        assert!(row.visualization.contains(&Visualization::Text));
        assert_eq!(row.target, [Target::CharacterRange].into());
        assert!(row.interaction.contains(&Interaction::Change));
    }

    #[test]
    fn smalltalk_comments_span_lines() {
        let set = builtin::smalltalk();
        let rows = taxonomy_coverage(&set.rules, &set.catalog());
        let comments = rows.iter().find(|r| r.rule_id == "comments").unwrap();
        assert!(comments.target.contains(&Target::LineRange));
        let keywords = rows.iter().find(|r| r.rule_id == "keywords").unwrap();
        assert!(!keywords.target.contains(&Target::LineRange));
    }

    #[test]
    fn gutter_row() {
        let rule = AugmentationRule::new("g", 0)
            .literal("TODO")
            .gutter(GutterSide::Right, "*");
        let row = &taxonomy_coverage(&[rule], &BTreeMap::new())[0];
        assert_eq!(row.visualization, [Visualization::Icon].into());
        assert_eq!(row.location, [Location::Right].into());
        assert_eq!(row.target, [Target::Line].into());
    }

    #[test]
    fn empty() {
        assert!(taxonomy_coverage(&[], &BTreeMap::new()).is_empty());
    }
}
