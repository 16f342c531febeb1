//! Prompt templates for the localization and point-labeling stages.

use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::geometry::{BBox, Point};

pub const LOCALIZATION_TEMPLATE: &str = "You are a visual grounding assistant.
Given an image and a natural-language query, return every object in the image
that the query refers to, as a bounding box in pixel coordinates.
Image size: {H} × {W} (height × width).
Query: \"{Q}\"
Respond with a single JSON object that conforms to the grammar below.
Include a short reasoning string explaining your choice, followed by a
boxes list in which each element has integer fields
x_min, y_min, x_max, y_max, all in pixel coordinates of the image.
If the query does not refer to any visible object, return an empty list for
boxes and briefly explain why in reasoning.
";

pub const LABELING_TEMPLATE: &str = "You are a visual grounding assistant.
Given an image, a natural-language query, a bounding box, and a list of points
inside that bounding box, decide for each point whether it lies on the object
described by the query (positive) or on the background (negative),
and report your confidence.
Image size: {H} × {W} (height × width).
Query: \"{Q}\"
Bounding box (pixel coordinates): {BOX}.
Points: {POINTS}.
Respond with a single JSON object that conforms to the grammar below.
The labels field must contain exactly one entry per input point, in the
same order. Each entry has a label string (positive or
negative) and a confidence number in [0, 1].
Do not hedge: pick the label that better describes the point, and report your
own honest confidence.
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TemplateId {
    Localization,
    Labeling,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptVariables {
    pub height: u32,
    pub width: u32,
    pub query: String,
    pub bbox: Option<BBox>,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRender {
    pub template: TemplateId,
    pub text: String,
    pub variables: PromptVariables,
}

/// Escapes backslashes and double quotes so the query cannot close its quoted line.
pub fn escape_query(q: &str) -> String {
    let mut out = String::with_capacity(q.len());
    for c in q.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn format_box(b: &BBox) -> String {
    format!("[{}, {}, {}, {}]", b.x_min, b.y_min, b.x_max, b.y_max)
}

pub fn format_points(points: &[Point]) -> String {
    let items: Vec<String> = points
        .iter()
        .map(|p| format!("({}, {})", p.x, p.y))
        .collect();
    format!("[{}]", items.join(", "))
}

fn fill_header(template: &str, h: u32, w: u32, q: &str) -> String {
    template
        .replacen("{H}", &h.to_string(), 1)
        .replacen("{W}", &w.to_string(), 1)
        .replacen("{Q}", &escape_query(q), 1)
}

fn check_query(q: &str) -> Result<(), ProtocolError> {
    if q.trim().is_empty() {
        Err(ProtocolError::EmptyQuery)
    } else {
        Ok(())
    }
}

pub fn render_localization_prompt(
    height: u32,
    width: u32,
    query: &str,
) -> Result<PromptRender, ProtocolError> {
    check_query(query)?;
    Ok(PromptRender {
        template: TemplateId::Localization,
        text: fill_header(LOCALIZATION_TEMPLATE, height, width, query),
        variables: PromptVariables {
            height,
            width,
            query: query.to_string(),
            bbox: None,
            points: Vec::new(),
        },
    })
}

pub fn render_labeling_prompt(
    height: u32,
    width: u32,
    query: &str,
    bbox: &BBox,
    points: &[Point],
) -> Result<PromptRender, ProtocolError> {
    check_query(query)?;
    if points.is_empty() {
        return Err(ProtocolError::EmptyPoints);
    }
    if let Some(p) = points.iter().find(|p| !bbox.contains(p)) {
        return Err(ProtocolError::PointOutsideBox { x: p.x, y: p.y });
    }
    // Query text is substituted last so placeholder-like text inside it stays literal.
    let text = LABELING_TEMPLATE
        .replacen("{H}", &height.to_string(), 1)
        .replacen("{W}", &width.to_string(), 1)
        .replacen("{BOX}", &format_box(bbox), 1)
        .replacen("{POINTS}", &format_points(points), 1)
        .replacen("{Q}", &escape_query(query), 1);
    Ok(PromptRender {
        template: TemplateId::Labeling,
        text,
        variables: PromptVariables {
            height,
            width,
            query: query.to_string(),
            bbox: Some(*bbox),
            points: points.to_vec(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn localization_header() {
        let r = render_localization_prompt(480, 640, "the red cup").unwrap();
        assert!(r.text.contains("Image size: 480 × 640"));
        assert!(r.text.contains("Query: \"the red cup\"\n"));
        assert!(!r.text.contains('{'));
        assert_eq!(
            r,
            render_localization_prompt(480, 640, "the red cup").unwrap()
        );
    }

    #[test]
    fn quotes_are_escaped() {
        let r = render_localization_prompt(10, 10, "the \"big\" one").unwrap();
        assert!(r.text.contains("Query: \"the \\\"big\\\" one\"\n"));
    }

    #[test]
    fn labeling_points_in_order() {
        let b = BBox::new(0, 0, 50, 50).unwrap();
        let pts = [Point::new(3, 4), Point::new(10, 1), Point::new(7, 7)];
        let r = render_labeling_prompt(100, 100, "dog", &b, &pts).unwrap();
        assert!(r.text.contains("Image size: 100 × 100"));
        assert!(r.text.contains("Points: [(3, 4), (10, 1), (7, 7)]."));
        assert!(r
            .text
            .contains("Bounding box (pixel coordinates): [0, 0, 50, 50]."));
        assert!(!r.text.contains("{"));
    }

    #[test]
    fn placeholder_text_in_query_is_literal() {
        let b = BBox::new(0, 0, 5, 5).unwrap();
        let r = render_labeling_prompt(9, 9, "{POINTS}", &b, &[Point::new(1, 1)]).unwrap();
        assert!(r.text.contains("Query: \"{POINTS}\""));
        assert!(r.text.contains("Points: [(1, 1)]."));
    }

    #[test]
    fn errors() {
        let b = BBox::new(0, 0, 5, 5).unwrap();
        assert!(matches!(
            render_localization_prompt(1, 1, " "),
            Err(ProtocolError::EmptyQuery)
        ));
        assert!(matches!(
            render_labeling_prompt(9, 9, "q", &b, &[]),
            Err(ProtocolError::EmptyPoints)
        ));
        assert!(matches!(
            render_labeling_prompt(9, 9, "q", &b, &[Point::new(6, 1)]),
            Err(ProtocolError::PointOutsideBox { .. })
        ));
    }
}
