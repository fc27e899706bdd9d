//! App, page and input-component information pulled out of a hierarchy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hierarchy::{AppManifest, NodePath, UiNode, ViewHierarchy};

/// Maximum number of nearby labels kept for one input.
pub const NEARBY_CAP: usize = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error("page root has non-positive height")]
    DegenerateBounds,
    #[error("node path {0} does not resolve")]
    BadPath(NodePath),
    #[error("node at {0} is not a text input")]
    NotAnInput(NodePath),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AppInfo {
    pub app_name: String,
    pub activities: Vec<String>,
}

impl AppInfo {
    pub fn unknown() -> Self {
        Self::default()
    }
}

impl From<&AppManifest> for AppInfo {
    fn from(m: &AppManifest) -> Self {
        let mut activities: Vec<String> = Vec::with_capacity(m.activity_names.len());
        for a in &m.activity_names {
            if !activities.contains(a) {
                activities.push(a.clone());
            }
        }
        Self {
            app_name: m.app_name.clone(),
            activities,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PageInfo {
    pub activity_name: String,
    pub components: Vec<String>,
    pub upper: Vec<String>,
    pub lower: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InputComponentInfo {
    pub input_label: String,
    pub nearby_labels: Vec<String>,
    pub node_path: NodePath,
    pub existing_hint: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuiEntityBundle {
    pub app: AppInfo,
    pub page: PageInfo,
    pub input: InputComponentInfo,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Human-readable label of a node: its text, else the short form of its
/// resource id, else empty. Content descriptions are not consulted.
pub fn display_label(node: &UiNode) -> String {
    let text = node.text.trim();
    if !text.is_empty() {
        return text.to_string();
    }
    let id = node.resource_id.trim();
    id.rsplit('/').next().unwrap_or(id).trim().to_string()
}

pub fn extract_page_info(vh: &ViewHierarchy) -> Result<PageInfo, ExtractError> {
    let root = vh.root.bounds;
    if root.height() <= 0 {
        return Err(ExtractError::DegenerateBounds);
    }
    let midline2 = root.top as i64 + root.bottom as i64;

    let mut labeled: Vec<((i64, i64), String)> = vh
        .preorder()
        .into_iter()
        .filter_map(|(_, node)| {
            let label = display_label(node);
            if label.is_empty() {
                return None;
            }
            let (cx2, cy2) = node.bounds.doubled_center();
            Some(((cy2, cx2), label))
        })
        .collect();
    // stable: equal centers keep document order
    labeled.sort_by_key(|(key, _)| *key);

    let mut page = PageInfo {
        activity_name: vh.activity_name.clone(),
        ..Default::default()
    };
    for ((cy2, _), label) in labeled {
        if cy2 > midline2 {
            page.lower.push(label.clone());
        } else {
            page.upper.push(label.clone());
        }
        page.components.push(label);
    }
    Ok(page)
}

pub fn extract_input_info(
    vh: &ViewHierarchy,
    path: &NodePath,
) -> Result<InputComponentInfo, ExtractError> {
    let node = vh
        .node_at(path)
        .ok_or_else(|| ExtractError::BadPath(path.clone()))?;
    if !node.is_text_input() {
        return Err(ExtractError::NotAnInput(path.clone()));
    }
    let input_label = display_label(node);

    let mut nearby = Vec::new();
    if let Some(parent_path) = path.parent() {
        let parent = vh
            .node_at(&parent_path)
            .ok_or_else(|| ExtractError::BadPath(path.clone()))?;
        let own_index = path.last();
        let candidates = std::iter::once(parent).chain(
            parent
                .children
                .iter()
                .enumerate()
                .filter(|(i, _)| Some(*i) != own_index)
                .map(|(_, c)| c),
        );
        for n in candidates {
            let label = display_label(n);
            if label.is_empty() || label == input_label {
                continue;
            }
            nearby.push(label);
            if nearby.len() == NEARBY_CAP {
                break;
            }
        }
    }

    Ok(InputComponentInfo {
        input_label,
        nearby_labels: nearby,
        node_path: path.clone(),
        existing_hint: node.hint.clone(),
    })
}

pub fn bundle(app: AppInfo, page: PageInfo, input: InputComponentInfo) -> GuiEntityBundle {
    let mut warnings = Vec::new();
    if !app.activities.is_empty()
        && !page.activity_name.is_empty()
        && !app.activities.contains(&page.activity_name)
    {
        warnings.push(format!(
            "activity {:?} is not declared by app {:?}",
            page.activity_name, app.app_name
        ));
    }
    GuiEntityBundle {
        app,
        page,
        input,
        warnings,
    }
}

/// Convenience: page + input extraction and bundling in one go.
pub fn extract_bundle(
    vh: &ViewHierarchy,
    manifest: Option<&AppManifest>,
    path: &NodePath,
) -> Result<GuiEntityBundle, ExtractError> {
    let app = manifest.map(AppInfo::from).unwrap_or_default();
    let page = extract_page_info(vh)?;
    let input = extract_input_info(vh, path)?;
    Ok(bundle(app, page, input))
}
