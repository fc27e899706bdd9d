//! Prompt documents: in-context examples, GUI description, feedback, query and
//! output format, rendered to deterministic text.
//!
//! All English wording lives in [`templates`]; nothing else in the crate
//! spells out prompt sentences.

use serde::{Deserialize, Serialize};

use crate::entity::GuiEntityBundle;
use crate::store::ExampleRecord;

/// Frozen prompt wording.
pub mod templates {
    pub const UNKNOWN: &str = "unknown";
    pub const ICL_HEADER: &str = "We will provide you with {n} examples:";
    pub const ICL_LINE: &str =
        "{ord} text input is \"{label}\", its nearby components are \"{nearby}\", its hint-text is \"{hint}\".";
    pub const APP_INFO: &str = "The app name is \"{app}\", it has following activities: \"{activities}\".";
    pub const PAGE_INFO: &str = "The current GUI page is \"{activity}\", it has following components: \"{components}\", the upper part of the page is \"{upper}\", the lower part of the page is \"{lower}\".";
    pub const INPUT_INFO: &str = "The text input of this page is \"{label}\", its nearby components are \"{nearby}\".";
    pub const FEEDBACK: &str = "The input content \"{content}\" doesn't pass the page, the error message of the input component is: {error}.";
    pub const NULL_ERROR: &str = "null";
    pub const QUERY: &str = "Please generate a hint-text for the input component based on the above information, and generate corresponding input content based on the generated hint-text.";
    pub const FEEDBACK_QUERY: &str = "Please regenerate the hint text and its corresponding input content based on the feedback information above.";
    pub const EXAMPLE_OUTPUT: &str = "Please output according to the following example: the hint-text is \"xxx\", the input content is \"xxx\".";
    /// Appended once when a response could not be parsed.
    pub const FORMAT_REMINDER: &str = "Your previous answer did not follow the required format. Answer exactly like this: the hint-text is \"xxx\", the input content is \"xxx\".";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SectionKind {
    InContext,
    AppInfo,
    PageInfo,
    InputInfo,
    Feedback,
    Query,
    FeedbackQuery,
    ExampleOutput,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub kind: SectionKind,
    pub text: String,
}

impl Section {
    fn new(kind: SectionKind, text: String) -> Self {
        Self { kind, text }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryMode {
    Generate,
    Refine,
}

/// Outcome of one validation attempt, as fed back to the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    FailNoTransition,
    /// Not checked against a device (dry runs).
    Unvalidated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub verdict: Verdict,
    pub input_content: String,
    pub error_message: Option<String>,
    pub round: u32,
}

/// Ordered prompt sections. Only the two constructors below build one, so
/// the section order is always one of the two legal layouts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptDocument {
    sections: Vec<Section>,
}

impl PromptDocument {
    /// `[InContext?, AppInfo, PageInfo, InputInfo, Query, ExampleOutput]`.
    /// An empty example list leaves out the in-context section.
    pub fn generation(bundle: &GuiEntityBundle, examples: &[ExampleRecord]) -> Self {
        let mut sections = Vec::with_capacity(6);
        sections.extend(build_icl_section(examples));
        sections.extend(build_gui_sections(bundle));
        sections.extend(build_query_sections(QueryMode::Generate));
        Self { sections }
    }

    /// `[Feedback, AppInfo, PageInfo, InputInfo, FeedbackQuery, ExampleOutput]`.
    pub fn feedback(bundle: &GuiEntityBundle, fb: &FeedbackRecord) -> Self {
        let mut sections = Vec::with_capacity(6);
        sections.push(build_feedback_section(fb));
        sections.extend(build_gui_sections(bundle));
        sections.extend(build_query_sections(QueryMode::Refine));
        Self { sections }
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    pub fn kinds(&self) -> Vec<SectionKind> {
        self.sections.iter().map(|s| s.kind).collect()
    }

    pub fn has(&self, kind: SectionKind) -> bool {
        self.sections.iter().any(|s| s.kind == kind)
    }

    /// Sections joined by blank lines.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push_str("\n\n");
            }
            out.push_str(&s.text);
        }
        out.push('\n');
        out
    }
}

/// Single-pass `{name}` substitution; substituted values are never rescanned.
fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 64);
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let after = &rest[start + 1..];
        let hit = after.find('}').and_then(|end| {
            let name = &after[..end];
            vars.iter().find(|(k, _)| *k == name).map(|(_, v)| (*v, end))
        });
        match hit {
            Some((value, end)) => {
                out.push_str(value);
                rest = &after[end + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

fn or_unknown(s: &str) -> &str {
    if s.trim().is_empty() {
        templates::UNKNOWN
    } else {
        s
    }
}

fn join_or_unknown(items: &[String]) -> String {
    if items.is_empty() {
        templates::UNKNOWN.to_string()
    } else {
        items.join(", ")
    }
}

/// `1st`, `2nd`, `3rd`, `4th`, ..., `11th`, `12th`, `13th`, `21st`, ...
pub fn ordinal(n: usize) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

pub fn build_gui_sections(bundle: &GuiEntityBundle) -> [Section; 3] {
    let app = fill(
        templates::APP_INFO,
        &[
            ("app", or_unknown(&bundle.app.app_name)),
            ("activities", &join_or_unknown(&bundle.app.activities)),
        ],
    );
    let page = fill(
        templates::PAGE_INFO,
        &[
            ("activity", or_unknown(&bundle.page.activity_name)),
            ("components", &join_or_unknown(&bundle.page.components)),
            ("upper", &join_or_unknown(&bundle.page.upper)),
            ("lower", &join_or_unknown(&bundle.page.lower)),
        ],
    );
    let input = fill(
        templates::INPUT_INFO,
        &[
            ("label", or_unknown(&bundle.input.input_label)),
            ("nearby", &join_or_unknown(&bundle.input.nearby_labels)),
        ],
    );
    [
        Section::new(SectionKind::AppInfo, app),
        Section::new(SectionKind::PageInfo, page),
        Section::new(SectionKind::InputInfo, input),
    ]
}

/// `None` for an empty example list.
pub fn build_icl_section(examples: &[ExampleRecord]) -> Option<Section> {
    if examples.is_empty() {
        return None;
    }
    let mut text = fill(templates::ICL_HEADER, &[("n", &examples.len().to_string())]);
    for (i, ex) in examples.iter().enumerate() {
        text.push('\n');
        text.push_str(&fill(
            templates::ICL_LINE,
            &[
                ("ord", &ordinal(i + 1)),
                ("label", or_unknown(&ex.input_label)),
                ("nearby", &join_or_unknown(&ex.nearby_labels)),
                ("hint", &ex.hint_text),
            ],
        ));
    }
    Some(Section::new(SectionKind::InContext, text))
}

pub fn build_query_sections(mode: QueryMode) -> [Section; 2] {
    let query = match mode {
        QueryMode::Generate => Section::new(SectionKind::Query, templates::QUERY.into()),
        QueryMode::Refine => Section::new(SectionKind::FeedbackQuery, templates::FEEDBACK_QUERY.into()),
    };
    [
        query,
        Section::new(SectionKind::ExampleOutput, templates::EXAMPLE_OUTPUT.into()),
    ]
}

pub fn build_feedback_section(fb: &FeedbackRecord) -> Section {
    let error = match fb.error_message.as_deref().map(str::trim) {
        Some(e) if !e.is_empty() => format!("\"{e}\""),
        _ => templates::NULL_ERROR.to_string(),
    };
    let text = fill(
        templates::FEEDBACK,
        &[("content", &fb.input_content), ("error", &error)],
    );
    Section::new(SectionKind::Feedback, text)
}
