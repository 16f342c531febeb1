//! Typed parsing and serialization of the two response formats.
//!
//! Every input is first run through the grammar recognizer; extraction then
//! walks bytes already known to conform.

use serde::{Deserialize, Serialize};

use super::grammar::{grammar_check, GrammarId};
use super::ProtocolError;
use crate::geometry::BBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "positive",
            Label::Negative => "negative",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Label {
    type Err = ProtocolError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" => Ok(Label::Positive),
            "negative" => Ok(Label::Negative),
            other => Err(ProtocolError::InvalidArgument(format!(
                "unknown label `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointLabel {
    pub label: Label,
    pub confidence: f64,
}

impl PointLabel {
    /// Entry used to pad short label lists; any positive threshold discards it.
    pub const SENTINEL: PointLabel = PointLabel {
        label: Label::Negative,
        confidence: 0.0,
    };
}

/// A box that passed the grammar but failed the semantic checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedBox {
    pub index: usize,
    pub x_min: u64,
    pub y_min: u64,
    pub x_max: u64,
    pub y_max: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationResponse {
    pub reasoning: String,
    pub boxes: Vec<BBox>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rejected: Vec<RejectedBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelingResponse {
    pub labels: Vec<PointLabel>,
    /// Entries dropped because the response was longer than the point list.
    #[serde(default)]
    pub truncated: usize,
    /// Sentinel entries appended because the response was shorter.
    #[serde(default)]
    pub padded: usize,
}

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn ws(&mut self) {
        while matches!(self.s.get(self.pos), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, lit: &str) -> bool {
        self.ws();
        if self.s[self.pos..].starts_with(lit.as_bytes()) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, lit: &str) {
        let ok = self.eat(lit);
        debug_assert!(ok, "recognizer accepted input the extractor cannot walk");
    }

    fn key(&mut self, name: &str) {
        self.expect(&format!("\"{name}\""));
        self.expect(":");
    }

    fn string(&mut self) -> String {
        self.expect("\"");
        let start = self.pos;
        let mut end = start;
        while self.s[end] != b'"' {
            end += if self.s[end] == b'\\' { 2 } else { 1 };
        }
        self.pos = end + 1;
        unescape(std::str::from_utf8(&self.s[start..end]).unwrap_or_default())
    }

    fn digits(&mut self) -> &'a str {
        self.ws();
        let start = self.pos;
        while self
            .s
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_digit() || *c == b'.')
        {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).unwrap()
    }
}

fn unescape(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some('b') => out.push('\u{8}'),
            Some('f') => out.push('\u{c}'),
            Some('u') => {
                let rest = chars.as_str();
                match rest
                    .get(..4)
                    .and_then(|h| u32::from_str_radix(h, 16).ok())
                    .and_then(char::from_u32)
                {
                    Some(ch) => {
                        out.push(ch);
                        chars = rest[4..].chars();
                    }
                    None => out.push('u'),
                }
            }
            Some(other) => out.push(other),
            None => {}
        }
    }
    out
}

/// JSON-style escaping that the string production accepts and [`unescape`] inverts.
pub fn escape_json(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn syntax(raw: &str, id: GrammarId) -> Result<(), ProtocolError> {
    let check = grammar_check(raw, id);
    match check.offset {
        None => Ok(()),
        Some(offset) => Err(ProtocolError::Syntax {
            grammar: id,
            offset,
        }),
    }
}

pub fn parse_localization(raw: &str) -> Result<LocalizationResponse, ProtocolError> {
    syntax(raw, GrammarId::Localization)?;
    let mut c = Cursor {
        s: raw.as_bytes(),
        pos: 0,
    };
    c.expect("{");
    c.key("reasoning");
    let reasoning = c.string();
    c.expect(",");
    c.key("boxes");
    c.expect("[");
    let mut boxes = Vec::new();
    let mut rejected = Vec::new();
    let mut index = 0;
    if !c.eat("]") {
        loop {
            c.expect("{");
            let mut v = [0u64; 4];
            for (i, (slot, name)) in v
                .iter_mut()
                .zip(["x_min", "y_min", "x_max", "y_max"])
                .enumerate()
            {
                if i > 0 {
                    c.expect(",");
                }
                c.key(name);
                *slot = c.digits().parse().unwrap_or(u64::MAX);
            }
            c.expect("}");
            let [x_min, y_min, x_max, y_max] = v;
            let reason = if v.iter().any(|&n| n > i32::MAX as u64) {
                Some("coordinate out of range")
            } else if x_min >= x_max {
                Some("x_min must be < x_max")
            } else if y_min >= y_max {
                Some("y_min must be < y_max")
            } else {
                None
            };
            match reason {
                None => boxes.push(BBox::from_corners_unchecked(
                    x_min as i32,
                    y_min as i32,
                    x_max as i32,
                    y_max as i32,
                )),
                Some(r) => rejected.push(RejectedBox {
                    index,
                    x_min,
                    y_min,
                    x_max,
                    y_max,
                    reason: r.to_string(),
                }),
            }
            index += 1;
            if !c.eat(",") {
                break;
            }
        }
        c.expect("]");
    }
    c.expect("}");
    Ok(LocalizationResponse {
        reasoning,
        boxes,
        rejected,
    })
}

/// Parses a labeling response, truncating or sentinel-padding it to `expected_n` entries.
pub fn parse_labeling(raw: &str, expected_n: usize) -> Result<LabelingResponse, ProtocolError> {
    if expected_n == 0 {
        return Err(ProtocolError::InvalidArgument(
            "expected_n must be >= 1".into(),
        ));
    }
    let mut labels = parse_label_list(raw)?;
    let got = labels.len();
    labels.truncate(expected_n);
    labels.resize(expected_n, PointLabel::SENTINEL);
    Ok(LabelingResponse {
        labels,
        truncated: got.saturating_sub(expected_n),
        padded: expected_n.saturating_sub(got),
    })
}

/// Parses a labeling response without any length adjustment.
pub fn parse_label_list(raw: &str) -> Result<Vec<PointLabel>, ProtocolError> {
    syntax(raw, GrammarId::Labeling)?;
    let mut c = Cursor {
        s: raw.as_bytes(),
        pos: 0,
    };
    c.expect("{");
    c.key("labels");
    c.expect("[");
    let mut labels = Vec::new();
    loop {
        c.expect("{");
        c.key("label");
        let label = if c.eat("\"positive\"") {
            Label::Positive
        } else {
            c.expect("\"negative\"");
            Label::Negative
        };
        c.expect(",");
        c.key("confidence");
        let confidence: f64 = c.digits().parse().unwrap_or(0.0);
        c.expect("}");
        labels.push(PointLabel { label, confidence });
        if !c.eat(",") {
            break;
        }
    }
    Ok(labels)
}

/// Formats a confidence in `[0, 1]` as a lexeme of the confidence production.
pub fn format_confidence(c: f64) -> String {
    if !(c > 0.0) {
        "0".to_string()
    } else if c >= 1.0 {
        "1".to_string()
    } else {
        // Display never uses exponent notation and yields the shortest round-trip form.
        let s = format!("{c}");
        debug_assert!(s.starts_with("0."));
        s
    }
}

impl LocalizationResponse {
    pub fn to_json(&self) -> String {
        let boxes: Vec<String> = self
            .boxes
            .iter()
            .map(|b| {
                format!(
                    "{{\"x_min\": {}, \"y_min\": {}, \"x_max\": {}, \"y_max\": {}}}",
                    b.x_min, b.y_min, b.x_max, b.y_max
                )
            })
            .collect();
        format!(
            "{{\"reasoning\": \"{}\", \"boxes\": [{}]}}",
            escape_json(&self.reasoning),
            boxes.join(", ")
        )
    }
}

/// Serializes labels; the list must be non-empty to conform.
pub fn labels_to_json(labels: &[PointLabel]) -> String {
    let items: Vec<String> = labels
        .iter()
        .map(|l| {
            format!(
                "{{\"label\": \"{}\", \"confidence\": {}}}",
                l.label,
                format_confidence(l.confidence)
            )
        })
        .collect();
    format!("{{\"labels\": [{}]}}", items.join(", "))
}

impl LabelingResponse {
    pub fn to_json(&self) -> String {
        labels_to_json(&self.labels)
    }
}
