//! A slow, obviously-correct reimplementation of span computation, used to
//! cross-check the engine. Matching goes through the `regex` crate with a
//! position-by-position scan; conflicts are resolved byte by byte.

use std::cmp::Reverse;
use std::collections::BTreeMap;

use bench_core::augment::{
    AdviceModel, AugmentationRule, AugmentationSpan, Effects, Matcher, OverlayText, Stage,
};
use bench_core::lang::Span;

struct Hit {
    rule: usize,
    start: usize,
    end: usize,
    overlay: Option<String>,
}

const CHANNELS: usize = 6;

fn channel_set(fx: &Effects) -> [bool; CHANNELS] {
    [
        fx.foreground.is_some(),
        fx.background.is_some(),
        fx.font_style.is_some(),
        fx.font_weight.is_some(),
        fx.decoration.is_some(),
        fx.gutter.is_some(),
    ]
}

fn channel_stage(ch: usize) -> Stage {
    if ch >= 4 {
        Stage::Background
    } else {
        Stage::Transform
    }
}

fn copy_channel(ch: usize, from: &Effects, to: &mut Effects) {
    match ch {
        0 => to.foreground = from.foreground.clone(),
        1 => to.background = from.background.clone(),
        2 => to.font_style = from.font_style,
        3 => to.font_weight = from.font_weight,
        4 => to.decoration = from.decoration.clone(),
        _ => to.gutter = from.gutter.clone(),
    }
}

fn primary(fx: &Effects) -> Stage {
    let set = channel_set(fx);
    if set[4] || set[5] {
        Stage::Background
    } else if fx.overlay_text.is_some() {
        Stage::Inline
    } else {
        Stage::Transform
    }
}

fn naive_span(text: &str, start: usize, end: usize) -> Span {
    let before = &text[..start];
    let line = before.matches('\n').count() as u32 + 1;
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let column = text[line_start..start].chars().count() as u32 + 1;
    Span {
        start,
        end,
        line,
        column,
    }
}

fn naive_fragments(text: &str, start: usize, end: usize) -> Vec<Span> {
    let mut out = Vec::new();
    let mut from = start;
    for i in start..end {
        if text.as_bytes()[i] == b'\n' {
            out.push(naive_span(text, from, i + 1));
            from = i + 1;
        }
    }
    if from < end || out.is_empty() {
        out.push(naive_span(text, from, end));
    }
    out
}

/// Every non-overlapping match, found by trying each position in turn.
fn scan(text: &str, re: &regex::Regex) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i <= text.len() {
        match re.find_at(text, i) {
            Some(m) if m.start() == i && m.end() > i => {
                out.push((i, m.end()));
                i = m.end();
            }
            _ => {
                i += text[i..].chars().next().map_or(1, char::len_utf8);
            }
        }
    }
    out
}

/// Spans for `rules`, which must all be valid.
pub fn oracle_spans(
    text: &str,
    rules: &[AugmentationRule],
    catalog: &BTreeMap<String, AdviceModel>,
) -> Vec<AugmentationSpan> {
    let mut hits = Vec::new();
    for (r, rule) in rules.iter().enumerate() {
        let mut seen = std::collections::BTreeSet::new();
        for m in &rule.matchers {
            let pattern = match m {
                Matcher::Literal(s) => regex::escape(s),
                Matcher::Regex(p) => p.clone(),
            };
            let re = regex::Regex::new(&pattern).expect("oracle pattern");
            for (start, end) in scan(text, &re) {
                if !seen.insert((start, end)) {
                    continue;
                }
                let overlay = rule.effects.overlay_text.as_ref().map(|o| match o {
                    OverlayText::Plain(s) => s.clone(),
                    OverlayText::Template { template } => {
                        let caps = re.captures_at(text, start).unwrap();
                        let mut out = String::new();
                        caps.expand(template, &mut out);
                        out
                    }
                });
                hits.push(Hit {
                    rule: r,
                    start,
                    end,
                    overlay,
                });
            }
        }
    }

    let advice_of = |r: usize| {
        rules[r]
            .advice
            .as_ref()
            .and_then(|id| catalog.get(id))
            .cloned()
    };
    let has_attach = |r: usize| rules[r].effects.tooltip.is_some() || advice_of(r).is_some();
    let key = |h: &Hit| {
        let rule = &rules[h.rule];
        (rule.priority, rule.id.clone(), Reverse(h.start), h.end)
    };

    // winner[byte][channel]
    let mut winner = vec![[None::<usize>; CHANNELS]; text.len()];
    for (b, slots) in winner.iter_mut().enumerate() {
        for (ch, slot) in slots.iter_mut().enumerate() {
            for (h, hit) in hits.iter().enumerate() {
                if hit.start <= b && b < hit.end && channel_set(&rules[hit.rule].effects)[ch] {
                    let better = match *slot {
                        None => true,
                        Some(w) => key(hit) > key(&hits[w]),
                    };
                    if better {
                        *slot = Some(h);
                    }
                }
            }
        }
    }

    let mut spans = Vec::new();
    let mut emit =
        |rule: usize, stage: Stage, start: usize, end: usize, fx: Effects, attach: bool| {
            spans.push(AugmentationSpan {
                rule_id: rules[rule].id.clone(),
                priority: rules[rule].priority,
                stage,
                span: naive_span(text, start, end),
                line_fragments: naive_fragments(text, start, end),
                effects: fx,
                advice: if attach { advice_of(rule) } else { None },
            });
        };

    for (h, hit) in hits.iter().enumerate() {
        let fx = &rules[hit.rule].effects;
        for stage in [Stage::Transform, Stage::Background] {
            let attach = has_attach(hit.rule) && primary(fx) == stage;
            // (kept channels, attachment) per byte
            let kept: Vec<(Vec<usize>, bool)> = (hit.start..hit.end)
                .map(|b| {
                    let chans = (0..CHANNELS)
                        .filter(|&ch| channel_stage(ch) == stage && winner[b][ch] == Some(h))
                        .collect();
                    (chans, attach)
                })
                .collect();
            let mut i = 0;
            while i < kept.len() {
                let mut j = i + 1;
                while j < kept.len() && kept[j] == kept[i] {
                    j += 1;
                }
                let (chans, att) = &kept[i];
                if !chans.is_empty() || *att {
                    let mut out = Effects::default();
                    for &ch in chans {
                        copy_channel(ch, fx, &mut out);
                    }
                    if *att {
                        out.tooltip = fx.tooltip.clone();
                    }
                    emit(hit.rule, stage, hit.start + i, hit.start + j, out, *att);
                }
                i = j;
            }
        }
    }

    let mut order: Vec<usize> = (0..hits.len())
        .filter(|&h| hits[h].overlay.is_some())
        .collect();
    order.sort_by_key(|&h| {
        let rule = &rules[hits[h].rule];
        (
            Reverse(rule.priority),
            hits[h].start,
            Reverse(rule.id.clone()),
            Reverse(hits[h].end),
        )
    });
    let mut accepted: Vec<usize> = Vec::new();
    for h in order {
        let clash = accepted
            .iter()
            .any(|&a| hits[a].start < hits[h].end && hits[h].start < hits[a].end);
        if !clash {
            accepted.push(h);
        }
    }
    for h in accepted {
        let hit = &hits[h];
        let fx = &rules[hit.rule].effects;
        let attach = primary(fx) == Stage::Inline && has_attach(hit.rule);
        let out = Effects {
            overlay_text: hit.overlay.clone().map(OverlayText::Plain),
            tooltip: if attach { fx.tooltip.clone() } else { None },
            ..Effects::default()
        };
        emit(hit.rule, Stage::Inline, hit.start, hit.end, out, attach);
    }
    spans
}

/// Order-insensitive comparison key.
pub fn multiset(spans: &[AugmentationSpan]) -> Vec<String> {
    let mut v: Vec<String> = spans.iter().map(|s| format!("{s:?}")).collect();
    v.sort();
    v
}
