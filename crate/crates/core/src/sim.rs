//! Declarative app simulator used as the validation device, plus the adapter
//! trait a real-device driver would implement.
//!
//! A sim app is a JSON document (schema version 1):
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "app_name": "Flight",
//!   "package": "com.example.flight",
//!   "initial_screen": "search",
//!   "screens": [
//!     {
//!       "id": "search",
//!       "activity_name": "SearchFlight",
//!       "static_nodes": [{"kind": "text", "text": "Flight Search"},
//!                        {"kind": "button", "text": "Search"}],
//!       "inputs": [{
//!         "field_id": "depart",
//!         "label": "Depart",
//!         "validator": {"type": "one_of", "values": ["Beijing", "Paris"]},
//!         "error_message": "Please enter the correct city name",
//!         "transition_target": "results"
//!       }]
//!     },
//!     {"id": "results", "activity_name": "FlightList"}
//!   ]
//! }
//! ```
//!
//! Validators: `nonempty`, `pattern` (full-string regex), `one_of` (exact
//! membership), `range` (decimal number within `[min, max]`).

use std::collections::{HashMap, HashSet};
use std::sync::Arc;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entity::{display_label, InputComponentInfo};
use crate::hierarchy::{fingerprint, Bounds, UiNode, ViewHierarchy};

pub const SCHEMA_VERSION: u32 = 1;
/// Label-set Jaccard similarity below which a page counts as a new page.
pub const TRANSITION_JACCARD: f64 = 0.5;

const SCREEN_W: i32 = 1080;
const SCREEN_H: i32 = 1920;
const ROW_H: i32 = 140;
const TOP: i32 = 60;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("no field {field:?} on screen {screen:?}")]
    UnknownField { screen: String, field: String },
    #[error("no screen with activity {0:?}")]
    UnknownActivity(String),
}

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("device unavailable: {0}")]
    Unavailable(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Validator {
    Nonempty,
    Pattern { pattern: String },
    OneOf { values: Vec<String> },
    Range { min: f64, max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaticKind {
    Text,
    Button,
    Image,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticNode {
    pub kind: StaticKind,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub resource_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputField {
    pub field_id: String,
    #[serde(default)]
    pub label: String,
    pub validator: Validator,
    #[serde(default)]
    pub error_message: String,
    pub transition_target: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimScreen {
    pub id: String,
    pub activity_name: String,
    #[serde(default)]
    pub static_nodes: Vec<StaticNode>,
    #[serde(default)]
    pub inputs: Vec<InputField>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimAppSpec {
    pub schema_version: u32,
    pub app_name: String,
    #[serde(default)]
    pub package: String,
    pub initial_screen: String,
    pub screens: Vec<SimScreen>,
}

/// A validated spec with compiled validators.
#[derive(Debug, Clone)]
pub struct SimApp {
    spec: SimAppSpec,
    screen_index: HashMap<String, usize>,
    patterns: HashMap<(usize, usize), Regex>,
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> SimError {
    SimError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

pub fn load_sim_app(spec_text: &str) -> Result<SimApp, SimError> {
    let spec: SimAppSpec = serde_json::from_str(spec_text).map_err(|e| {
        schema(format!("line {} column {}", e.line(), e.column()), e.to_string())
    })?;
    SimApp::new(spec)
}

impl SimApp {
    pub fn new(spec: SimAppSpec) -> Result<Self, SimError> {
        if spec.schema_version != SCHEMA_VERSION {
            return Err(schema(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", spec.schema_version),
            ));
        }
        if spec.screens.is_empty() {
            return Err(schema("screens", "at least one screen is required"));
        }
        let mut screen_index = HashMap::new();
        for (i, s) in spec.screens.iter().enumerate() {
            if s.id.trim().is_empty() {
                return Err(schema(format!("screens[{i}].id"), "empty screen id"));
            }
            if screen_index.insert(s.id.clone(), i).is_some() {
                return Err(schema(format!("screens[{i}].id"), format!("duplicate screen id {:?}", s.id)));
            }
        }
        if !screen_index.contains_key(&spec.initial_screen) {
            return Err(schema(
                "initial_screen",
                format!("unknown screen {:?}", spec.initial_screen),
            ));
        }
        let mut patterns = HashMap::new();
        for (si, s) in spec.screens.iter().enumerate() {
            let mut seen = HashSet::new();
            for (fi, f) in s.inputs.iter().enumerate() {
                let at = |field: &str| format!("screens[{si}].inputs[{fi}].{field}");
                if f.field_id.trim().is_empty() || !seen.insert(f.field_id.as_str()) {
                    return Err(schema(at("field_id"), "empty or duplicate field id"));
                }
                if !screen_index.contains_key(&f.transition_target) {
                    return Err(schema(
                        at("transition_target"),
                        format!("unknown screen {:?}", f.transition_target),
                    ));
                }
                match &f.validator {
                    Validator::Pattern { pattern } => {
                        let re = Regex::new(&format!("^(?:{pattern})$"))
                            .map_err(|e| schema(at("validator.pattern"), e.to_string()))?;
                        patterns.insert((si, fi), re);
                    }
                    Validator::OneOf { values } if values.is_empty() => {
                        return Err(schema(at("validator.values"), "empty enumeration"));
                    }
                    Validator::Range { min, max } if !(min <= max) => {
                        return Err(schema(at("validator"), "min must not exceed max"));
                    }
                    _ => {}
                }
            }
        }
        Ok(Self {
            spec,
            screen_index,
            patterns,
        })
    }

    pub fn spec(&self) -> &SimAppSpec {
        &self.spec
    }

    pub fn start(&self) -> SimState {
        SimState {
            current: self.screen_index[&self.spec.initial_screen],
            pending_popup: None,
            history: Vec::new(),
        }
    }

    pub fn screen(&self, state: &SimState) -> &SimScreen {
        &self.spec.screens[state.current]
    }

    fn accepts(&self, screen: usize, field: usize, text: &str) -> bool {
        match &self.spec.screens[screen].inputs[field].validator {
            Validator::Nonempty => !text.trim().is_empty(),
            Validator::Pattern { .. } => self.patterns[&(screen, field)].is_match(text),
            Validator::OneOf { values } => values.iter().any(|v| v == text),
            Validator::Range { min, max } => text
                .trim()
                .parse::<f64>()
                .is_ok_and(|x| x.is_finite() && *min <= x && x <= *max),
        }
    }

    /// The page as it currently looks, without consuming the popup.
    pub fn render(&self, state: &SimState) -> ViewHierarchy {
        let screen = &self.spec.screens[state.current];
        let pkg = if self.spec.package.is_empty() {
            "com.sim.app"
        } else {
            self.spec.package.as_str()
        };
        let mut rows: Vec<UiNode> = Vec::new();
        let mut y = TOP;
        let mut next_row = || {
            let b = Bounds::new(0, y, SCREEN_W, y + ROW_H);
            y += ROW_H;
            b
        };
        let static_node = |n: &StaticNode, b: Bounds| {
            let class = match n.kind {
                StaticKind::Text => "android.widget.TextView",
                StaticKind::Button => "android.widget.Button",
                StaticKind::Image => "android.widget.ImageView",
            };
            UiNode::new(class, b)
                .with_text(n.text.clone())
                .with_resource_id(n.resource_id.clone())
        };
        for n in screen.static_nodes.iter().filter(|n| n.kind != StaticKind::Button) {
            rows.push(static_node(n, next_row()));
        }
        for f in &screen.inputs {
            let b = next_row();
            let mut row = UiNode::new("android.widget.LinearLayout", b);
            if !f.label.is_empty() {
                row = row.with_child(
                    UiNode::new("android.widget.TextView", Bounds::new(40, b.top, 360, b.bottom))
                        .with_text(f.label.clone()),
                );
            }
            row = row.with_child(
                UiNode::new("android.widget.EditText", Bounds::new(380, b.top, 1040, b.bottom))
                    .with_resource_id(format!("{pkg}:id/{}", f.field_id)),
            );
            rows.push(row);
        }
        for n in screen.static_nodes.iter().filter(|n| n.kind == StaticKind::Button) {
            rows.push(static_node(n, next_row()));
        }
        let height = SCREEN_H.max(y);
        let content = rows.into_iter().fold(
            UiNode::new("android.widget.LinearLayout", Bounds::new(0, 0, SCREEN_W, height)),
            UiNode::with_child,
        );
        let mut root = UiNode::new("android.widget.FrameLayout", Bounds::new(0, 0, SCREEN_W, height))
            .with_resource_id("android:id/content")
            .with_child(content);
        if let Some(msg) = &state.pending_popup {
            root = root.with_child(
                UiNode::new("android.widget.TextView", Bounds::new(140, height - 420, 940, height - 280))
                    .with_resource_id("android:id/message")
                    .with_text(msg.clone()),
            );
        }
        ViewHierarchy::from_root(screen.activity_name.clone(), root)
    }

    /// Renders the page and consumes any pending popup.
    pub fn current_page(&self, state: &mut SimState) -> ViewHierarchy {
        let vh = self.render(state);
        state.pending_popup = None;
        state.history.push(HistoryEntry {
            action: SimAction::Render,
            fingerprint: fingerprint(&vh),
        });
        vh
    }

    /// Types `text` into `field_id` on the current screen and submits it.
    /// Accepted input moves to the field's target screen; rejected input
    /// raises the field's error popup (if it has one).
    pub fn inject_and_submit(&self, state: &mut SimState, field_id: &str, text: &str) -> Result<bool, SimError> {
        let screen = &self.spec.screens[state.current];
        let fi = screen
            .inputs
            .iter()
            .position(|f| f.field_id == field_id)
            .ok_or_else(|| SimError::UnknownField {
                screen: screen.id.clone(),
                field: field_id.to_string(),
            })?;
        let field = &screen.inputs[fi];
        let accepted = self.accepts(state.current, fi, text);
        if accepted {
            state.current = self.screen_index[&field.transition_target];
            state.pending_popup = None;
        } else if !field.error_message.is_empty() {
            state.pending_popup = Some(field.error_message.clone());
        }
        let fp = fingerprint(&self.render(state));
        state.history.push(HistoryEntry {
            action: SimAction::Inject {
                field: field_id.to_string(),
                text: text.to_string(),
            },
            fingerprint: fp,
        });
        Ok(accepted)
    }

    /// Jumps to the first screen showing `activity_name`, clearing popups.
    pub fn reset_to(&self, state: &mut SimState, activity_name: &str) -> Result<(), SimError> {
        let idx = self
            .spec
            .screens
            .iter()
            .position(|s| s.activity_name == activity_name)
            .ok_or_else(|| SimError::UnknownActivity(activity_name.to_string()))?;
        state.current = idx;
        state.pending_popup = None;
        let fp = fingerprint(&self.render(state));
        state.history.push(HistoryEntry {
            action: SimAction::Reset {
                activity: activity_name.to_string(),
            },
            fingerprint: fp,
        });
        Ok(())
    }

    pub fn apply(&self, state: &mut SimState, action: &SimAction) -> Result<(), SimError> {
        match action {
            SimAction::Render => {
                self.current_page(state);
                Ok(())
            }
            SimAction::Inject { field, text } => self.inject_and_submit(state, field, text).map(|_| ()),
            SimAction::Reset { activity } => self.reset_to(state, activity),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimAction {
    Render,
    Inject { field: String, text: String },
    Reset { activity: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub action: SimAction,
    /// Page fingerprint right after the action.
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimState {
    current: usize,
    pub pending_popup: Option<String>,
    pub history: Vec<HistoryEntry>,
}

fn label_set(vh: &ViewHierarchy) -> HashSet<String> {
    vh.preorder()
        .into_iter()
        .map(|(_, n)| display_label(n))
        .filter(|l| !l.is_empty())
        .collect()
}

/// A new page iff the activity changed or the label sets overlap by less
/// than [`TRANSITION_JACCARD`]. A popup over an unchanged page is not one.
pub fn detect_transition(before: &ViewHierarchy, after: &ViewHierarchy) -> bool {
    if before.activity_name != after.activity_name {
        return true;
    }
    let a = label_set(before);
    let b = label_set(after);
    let union = a.union(&b).count();
    if union == 0 {
        return false;
    }
    let jaccard = a.intersection(&b).count() as f64 / union as f64;
    jaccard < TRANSITION_JACCARD
}

/// Text of nodes that appear in `after` but not in `before`, compared as a
/// multiset of `(class, text)`, joined in document order.
pub fn diff_error_message(before: &ViewHierarchy, after: &ViewHierarchy) -> Option<String> {
    let mut old: HashMap<(&str, &str), usize> = HashMap::new();
    let before_nodes = before.preorder();
    for (_, n) in &before_nodes {
        *old.entry((n.class_name.as_str(), n.text.as_str())).or_default() += 1;
    }
    let mut fresh = Vec::new();
    for (_, n) in after.preorder() {
        let key = (n.class_name.as_str(), n.text.as_str());
        match old.get_mut(&key) {
            Some(c) if *c > 0 => *c -= 1,
            _ => {
                let t = n.text.trim();
                if !t.is_empty() {
                    fresh.push(t.to_string());
                }
            }
        }
    }
    if fresh.is_empty() {
        None
    } else {
        Some(fresh.join(" "))
    }
}

/// What the hint pipeline needs from a device. The simulator implements it;
/// a real-device driver (adb input + UIAutomator dump) would too.
pub trait DeviceAdapter {
    /// Brings the app to the screen showing `activity_name`.
    fn reset_to(&mut self, activity_name: &str) -> Result<(), DeviceError>;
    fn current_page(&mut self) -> Result<ViewHierarchy, DeviceError>;
    /// Types `text` into the field and performs the follow-up action,
    /// waiting up to `settle` for the UI to react.
    fn inject_and_submit(&mut self, field_id: &str, text: &str, settle: Duration) -> Result<(), DeviceError>;
    /// Maps an extracted input onto the device's field id.
    fn locate_field(&self, input: &InputComponentInfo) -> Option<String>;

    fn detect_transition(&self, before: &ViewHierarchy, after: &ViewHierarchy) -> bool {
        detect_transition(before, after)
    }

    fn diff_error_message(&self, before: &ViewHierarchy, after: &ViewHierarchy) -> Option<String> {
        diff_error_message(before, after)
    }
}

/// [`DeviceAdapter`] over a [`SimApp`]. One device per pipeline; the app
/// definition is shared.
#[derive(Debug, Clone)]
pub struct SimDevice {
    app: Arc<SimApp>,
    state: SimState,
}

impl SimDevice {
    pub fn new(app: Arc<SimApp>) -> Self {
        let state = app.start();
        Self { app, state }
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn app(&self) -> &SimApp {
        &self.app
    }
}

impl DeviceAdapter for SimDevice {
    fn reset_to(&mut self, activity_name: &str) -> Result<(), DeviceError> {
        Ok(self.app.reset_to(&mut self.state, activity_name)?)
    }

    fn current_page(&mut self) -> Result<ViewHierarchy, DeviceError> {
        Ok(self.app.current_page(&mut self.state))
    }

    fn inject_and_submit(&mut self, field_id: &str, text: &str, _settle: Duration) -> Result<(), DeviceError> {
        self.app.inject_and_submit(&mut self.state, field_id, text)?;
        Ok(())
    }

    fn locate_field(&self, input: &InputComponentInfo) -> Option<String> {
        let inputs = &self.app.screen(&self.state).inputs;
        let label = input.input_label.as_str();
        inputs
            .iter()
            .find(|f| f.field_id == label)
            .or_else(|| inputs.iter().find(|f| !f.label.is_empty() && f.label == label))
            .or_else(|| {
                inputs
                    .iter()
                    .find(|f| !f.label.is_empty() && input.nearby_labels.contains(&f.label))
            })
            .or(if inputs.len() == 1 { inputs.first() } else { None })
            .map(|f| f.field_id.clone())
    }
}
