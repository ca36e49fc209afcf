use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Reverse;

use regex_automata::meta::Regex;
use serde::{Deserialize, Serialize};

use super::advice::AdviceModel;
use super::rule::{is_valid_color, AugmentationRule, Effects, Matcher, OverlayText};
use crate::lang::{LineIndex, Span};

/// Rendering stage a span belongs to, in pipeline order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    /// Elements that replace document text (overlays).
    Inline,
    /// Per-character styling: colors and fonts.
    Transform,
    /// Drawing behind or beside the text: decorations and gutter glyphs.
    Background,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentationSpan {
    pub rule_id: String,
    pub priority: i64,
    pub stage: Stage,
    pub span: Span,
    pub line_fragments: Vec<Span>,
    /// Only the channels this span won, plus the tooltip when the span
    /// belongs to the rule's primary stage.
    pub effects: Effects,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advice: Option<AdviceModel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RuleErrorKind {
    InvalidPattern,
    InvalidColor,
    UnknownAdvice,
    MissingSecureAction,
    DuplicateId,
    NoMatchers,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleError {
    pub rule_id: String,
    pub kind: RuleErrorKind,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Augmentation {
    pub spans: Vec<AugmentationSpan>,
    /// Rules listed here were skipped; all others were applied.
    pub errors: Vec<RuleError>,
}

/// Effect channels that compete per byte. Tooltip and advice are not
/// channels: they travel with whatever the rule wins in its primary stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Channel {
    Foreground,
    Background,
    FontStyle,
    FontWeight,
    Decoration,
    Gutter,
}

impl Channel {
    pub const ALL: [Channel; 6] = [
        Channel::Foreground,
        Channel::Background,
        Channel::FontStyle,
        Channel::FontWeight,
        Channel::Decoration,
        Channel::Gutter,
    ];

    pub fn stage(self) -> Stage {
        match self {
            Channel::Decoration | Channel::Gutter => Stage::Background,
            _ => Stage::Transform,
        }
    }

    pub fn is_set(self, effects: &Effects) -> bool {
        match self {
            Channel::Foreground => effects.foreground.is_some(),
            Channel::Background => effects.background.is_some(),
            Channel::FontStyle => effects.font_style.is_some(),
            Channel::FontWeight => effects.font_weight.is_some(),
            Channel::Decoration => effects.decoration.is_some(),
            Channel::Gutter => effects.gutter.is_some(),
        }
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }

    /// Copies this channel's value from `from` into `to`.
    pub fn copy(self, from: &Effects, to: &mut Effects) {
        match self {
            Channel::Foreground => to.foreground = from.foreground.clone(),
            Channel::Background => to.background = from.background.clone(),
            Channel::FontStyle => to.font_style = from.font_style,
            Channel::FontWeight => to.font_weight = from.font_weight,
            Channel::Decoration => to.decoration = from.decoration.clone(),
            Channel::Gutter => to.gutter = from.gutter.clone(),
        }
    }
}

const ATTACHMENT: u8 = 1 << 7;

/// The stage that carries a rule's tooltip and advice.
pub fn primary_stage(effects: &Effects) -> Stage {
    let has = |stage| {
        Channel::ALL
            .iter()
            .any(|c| c.stage() == stage && c.is_set(effects))
    };
    if has(Stage::Background) {
        Stage::Background
    } else if effects.overlay_text.is_some() {
        Stage::Inline
    } else {
        Stage::Transform
    }
}

/// A rule that passed validation, with its matchers compiled.
pub struct CompiledRule<'r> {
    pub rule: &'r AugmentationRule,
    pub regexes: Vec<Regex>,
    pub advice: Option<&'r AdviceModel>,
}

impl CompiledRule<'_> {
    pub fn has_attachments(&self) -> bool {
        self.rule.effects.tooltip.is_some() || self.advice.is_some()
    }
}

/// Validates rules in order. Invalid rules are reported and left out.
pub fn compile_rules<'r>(
    rules: &'r [AugmentationRule],
    catalog: &'r BTreeMap<String, AdviceModel>,
) -> (Vec<CompiledRule<'r>>, Vec<RuleError>) {
    let mut seen = BTreeSet::new();
    let mut compiled = Vec::new();
    let mut errors = Vec::new();
    for rule in rules {
        match compile_rule(rule, catalog, &mut seen) {
            Ok(c) => compiled.push(c),
            Err((kind, message)) => errors.push(RuleError {
                rule_id: rule.id.clone(),
                kind,
                message,
            }),
        }
    }
    (compiled, errors)
}

fn compile_rule<'r>(
    rule: &'r AugmentationRule,
    catalog: &'r BTreeMap<String, AdviceModel>,
    seen: &mut BTreeSet<&'r str>,
) -> Result<CompiledRule<'r>, (RuleErrorKind, String)> {
    if !seen.insert(&rule.id) {
        return Err((
            RuleErrorKind::DuplicateId,
            format!("rule id `{}` is already used", rule.id),
        ));
    }
    if rule.matchers.is_empty() {
        return Err((
            RuleErrorKind::NoMatchers,
            "rule has no matchers".to_string(),
        ));
    }
    if let Some(bad) = rule.effects.colors().find(|c| !is_valid_color(c)) {
        return Err((
            RuleErrorKind::InvalidColor,
            format!("invalid color `{bad}`"),
        ));
    }
    let mut regexes = Vec::with_capacity(rule.matchers.len());
    for matcher in &rule.matchers {
        let pattern = match matcher {
            Matcher::Literal(s) if s.is_empty() => {
                return Err((RuleErrorKind::InvalidPattern, "empty literal".to_string()))
            }
            Matcher::Literal(s) => regex_syntax::escape(s),
            Matcher::Regex(p) => p.clone(),
        };
        let regex = Regex::new(&pattern)
            .map_err(|e| (RuleErrorKind::InvalidPattern, format!("`{pattern}`: {e}")))?;
        regexes.push(regex);
    }
    let advice = match &rule.advice {
        None => None,
        Some(id) => Some(catalog.get(id).ok_or_else(|| {
            (
                RuleErrorKind::UnknownAdvice,
                format!("unknown advice `{id}`"),
            )
        })?),
    };
    if let Some(advice) = advice {
        if rule.effects.decoration.is_some() && advice.secure_action.is_none() {
            return Err((
                RuleErrorKind::MissingSecureAction,
                format!(
                    "advice `{}` on a warning rule needs a secure action",
                    advice.id
                ),
            ));
        }
    }
    Ok(CompiledRule {
        rule,
        regexes,
        advice,
    })
}

struct Hit {
    rule: usize,
    start: usize,
    end: usize,
    overlay: Option<String>,
}

/// Matches every rule against the whole document and resolves conflicts.
///
/// Each channel is decided per byte: among matches covering the byte that
/// set the channel, the highest `(priority, rule id)` wins, and within one
/// rule the earlier, then longer, match. A match's span is split where it
/// loses channels; runs with nothing left are dropped. Overlays never
/// overlap: they are taken greedily by descending priority, then position.
pub fn compute_spans(
    text: &str,
    rules: &[AugmentationRule],
    catalog: &BTreeMap<String, AdviceModel>,
) -> Augmentation {
    let (compiled, errors) = compile_rules(rules, catalog);
    let hits = collect_hits(text, &compiled);
    let index = LineIndex::new(text);
    let mut spans = Vec::new();

    for (h, bits) in resolve_channels(&compiled, &hits) {
        let hit = &hits[h];
        let c = &compiled[hit.rule];
        for (stage, start, end, kept) in bits {
            let mut effects = Effects::default();
            for ch in Channel::ALL {
                if kept & ch.bit() != 0 {
                    ch.copy(&c.rule.effects, &mut effects);
                }
            }
            let attach = kept & ATTACHMENT != 0;
            if attach {
                effects.tooltip = c.rule.effects.tooltip.clone();
            }
            spans.push(make_span(&index, c, stage, start, end, effects, attach));
        }
    }

    for h in resolve_overlays(&compiled, &hits) {
        let hit = &hits[h];
        let c = &compiled[hit.rule];
        let attach = primary_stage(&c.rule.effects) == Stage::Inline;
        let effects = Effects {
            overlay_text: hit.overlay.clone().map(OverlayText::Plain),
            tooltip: if attach {
                c.rule.effects.tooltip.clone()
            } else {
                None
            },
            ..Effects::default()
        };
        spans.push(make_span(
            &index,
            c,
            Stage::Inline,
            hit.start,
            hit.end,
            effects,
            attach,
        ));
    }

    sort_spans(&mut spans);
    Augmentation { spans, errors }
}

/// Output order: start, higher priority first, rule id, stage, end.
pub fn sort_spans(spans: &mut [AugmentationSpan]) {
    spans.sort_by(|a, b| {
        (
            a.span.start,
            Reverse(a.priority),
            &a.rule_id,
            a.stage,
            a.span.end,
        )
            .cmp(&(
                b.span.start,
                Reverse(b.priority),
                &b.rule_id,
                b.stage,
                b.span.end,
            ))
    });
}

fn make_span(
    index: &LineIndex<'_>,
    c: &CompiledRule<'_>,
    stage: Stage,
    start: usize,
    end: usize,
    effects: Effects,
    attach: bool,
) -> AugmentationSpan {
    AugmentationSpan {
        rule_id: c.rule.id.clone(),
        priority: c.rule.priority,
        stage,
        span: index.span(start, end),
        line_fragments: index.line_fragments(start, end),
        effects,
        advice: if attach { c.advice.cloned() } else { None },
    }
}

fn collect_hits(text: &str, compiled: &[CompiledRule<'_>]) -> Vec<Hit> {
    let mut hits = Vec::new();
    for (r, c) in compiled.iter().enumerate() {
        let template = match &c.rule.effects.overlay_text {
            Some(OverlayText::Template { template }) => Some(template.as_str()),
            _ => None,
        };
        let mut seen = BTreeSet::new();
        for regex in &c.regexes {
            let mut caps = regex.create_captures();
            for m in regex.find_iter(text) {
                if m.is_empty() || !seen.insert((m.start(), m.end())) {
                    continue;
                }
                let overlay = match (&c.rule.effects.overlay_text, template) {
                    (Some(_), Some(template)) => {
                        let input = regex_automata::Input::new(text)
                            .range(m.start()..)
                            .anchored(regex_automata::Anchored::Yes);
                        regex.search_captures(&input, &mut caps);
                        let mut out = String::new();
                        caps.interpolate_string_into(text, template, &mut out);
                        Some(out)
                    }
                    (Some(OverlayText::Plain(s)), None) => Some(s.clone()),
                    _ => None,
                };
                hits.push(Hit {
                    rule: r,
                    start: m.start(),
                    end: m.end(),
                    overlay,
                });
            }
        }
    }
    hits
}

type Runs = Vec<(Stage, usize, usize, u8)>;

/// Per-hit runs of `(stage, start, end, kept channel bits)`.
fn resolve_channels(compiled: &[CompiledRule<'_>], hits: &[Hit]) -> Vec<(usize, Runs)> {
    let key = |h: &Hit| {
        let rule = compiled[h.rule].rule;
        (rule.priority, rule.id.as_str(), Reverse(h.start), h.end)
    };
    let participating: Vec<usize> = (0..hits.len())
        .filter(|&h| {
            let c = &compiled[hits[h].rule];
            Channel::ALL.iter().any(|ch| ch.is_set(&c.rule.effects))
                || (c.has_attachments() && primary_stage(&c.rule.effects) != Stage::Inline)
        })
        .collect();

    let mut bounds: Vec<usize> = participating
        .iter()
        .flat_map(|&h| [hits[h].start, hits[h].end])
        .collect();
    bounds.sort_unstable();
    bounds.dedup();

    let mut by_start = participating.clone();
    by_start.sort_by_key(|&h| hits[h].start);
    let mut next = 0;
    let mut active: Vec<usize> = Vec::new();
    let mut runs: BTreeMap<usize, Runs> = BTreeMap::new();

    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        active.retain(|&h| hits[h].end > a);
        while next < by_start.len() && hits[by_start[next]].start <= a {
            active.push(by_start[next]);
            next += 1;
        }
        if active.is_empty() {
            continue;
        }
        let mut winners = [None::<usize>; 6];
        for (slot, ch) in winners.iter_mut().zip(Channel::ALL) {
            *slot = active
                .iter()
                .copied()
                .filter(|&h| ch.is_set(&compiled[hits[h].rule].rule.effects))
                .max_by(|&x, &y| key(&hits[x]).cmp(&key(&hits[y])));
        }
        for &h in &active {
            let c = &compiled[hits[h].rule];
            let primary = primary_stage(&c.rule.effects);
            for stage in [Stage::Transform, Stage::Background] {
                let mut kept = 0u8;
                for (ch, w) in Channel::ALL.iter().zip(winners) {
                    if ch.stage() == stage && w == Some(h) {
                        kept |= ch.bit();
                    }
                }
                if stage == primary && c.has_attachments() {
                    kept |= ATTACHMENT;
                }
                if kept == 0 {
                    continue;
                }
                let list = runs.entry(h).or_default();
                match list.iter_mut().rev().find(|r| r.0 == stage) {
                    Some(last) if last.2 == a && last.3 == kept => last.2 = b,
                    _ => list.push((stage, a, b, kept)),
                }
            }
        }
    }
    runs.into_iter().collect()
}

fn resolve_overlays(compiled: &[CompiledRule<'_>], hits: &[Hit]) -> Vec<usize> {
    let mut candidates: Vec<usize> = (0..hits.len())
        .filter(|&h| hits[h].overlay.is_some())
        .collect();
    candidates.sort_by(|&x, &y| {
        let k = |h: &Hit| {
            let rule = compiled[h.rule].rule;
            (
                Reverse(rule.priority),
                h.start,
                Reverse(rule.id.as_str()),
                Reverse(h.end),
            )
        };
        k(&hits[x]).cmp(&k(&hits[y]))
    });
    // Accepted overlays are disjoint, so ordering by start also orders ends.
    let mut taken: BTreeMap<usize, usize> = BTreeMap::new();
    let mut kept = Vec::new();
    for h in candidates {
        let (s, e) = (hits[h].start, hits[h].end);
        let clash = taken
            .range(..e)
            .next_back()
            .is_some_and(|(_, &end)| end > s);
        if !clash {
            taken.insert(s, e);
            kept.push(h);
        }
    }
    kept
}
