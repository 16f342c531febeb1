//! Prompt rendering and grammar-constrained response handling.

pub mod grammar;
pub mod prompts;
pub mod response;

pub use grammar::{
    grammar_check, Grammar, GrammarCheck, GrammarId, LABELING_GRAMMAR, LOCALIZATION_GRAMMAR,
};
pub use prompts::{
    escape_query, render_labeling_prompt, render_localization_prompt, PromptRender,
    PromptVariables, TemplateId,
};
pub use response::{
    format_confidence, labels_to_json, parse_label_list, parse_labeling, parse_localization, Label,
    LabelingResponse, LocalizationResponse, PointLabel, RejectedBox,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("{grammar} response does not conform to its grammar at byte {offset}")]
    Syntax { grammar: GrammarId, offset: usize },
    #[error("semantic error: {0}")]
    Semantic(String),
    #[error("query must not be empty")]
    EmptyQuery,
    #[error("point list must not be empty")]
    EmptyPoints,
    #[error("point ({x}, {y}) lies outside the box")]
    PointOutsideBox { x: i32, y: i32 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("grammar definition: {0}")]
    GrammarDefinition(String),
}

impl ProtocolError {
    pub fn is_syntax(&self) -> bool {
        matches!(self, ProtocolError::Syntax { .. })
    }
}
