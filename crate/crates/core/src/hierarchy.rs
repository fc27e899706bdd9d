//! Typed view-hierarchy trees parsed from UIAutomator dumps, plus app manifests.
//!
//! A dump looks like
//!
//! ```text
//! <hierarchy rotation="0">
//!   <node class="android.widget.FrameLayout" bounds="[0,0][1080,1920]">
//!     <node class="android.widget.EditText" resource-id="com.x:id/from" hint="" bounds="[0,100][1080,220]"/>
//!   </node>
//! </hierarchy>
//! ```
//!
//! Absent attributes and empty attributes are the same thing here: both become
//! empty strings.

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("malformed bounds {0:?}: expected [l,t][r,b]")]
    MalformedBounds(String),
    #[error("manifest has no package attribute")]
    MissingPackage,
}

/// Screen rectangle in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Bounds {
    pub left: i32,
    pub top: i32,
    pub right: i32,
    pub bottom: i32,
}

impl Bounds {
    pub fn new(left: i32, top: i32, right: i32, bottom: i32) -> Self {
        Self { left, top, right, bottom }
    }

    /// Parses the `[l,t][r,b]` syntax emitted by UIAutomator.
    pub fn parse(raw: &str) -> Result<Self, ParseError> {
        let bad = || ParseError::MalformedBounds(raw.to_string());
        let rest = raw.trim().strip_prefix('[').ok_or_else(bad)?;
        let (first, rest) = rest.split_once("][").ok_or_else(bad)?;
        let second = rest.strip_suffix(']').ok_or_else(bad)?;
        let pair = |s: &str| -> Result<(i32, i32), ParseError> {
            let (a, b) = s.split_once(',').ok_or_else(bad)?;
            let a = a.parse::<i32>().map_err(|_| bad())?;
            let b = b.parse::<i32>().map_err(|_| bad())?;
            Ok((a, b))
        };
        let (left, top) = pair(first)?;
        let (right, bottom) = pair(second)?;
        if left > right || top > bottom {
            return Err(bad());
        }
        Ok(Self { left, top, right, bottom })
    }

    pub fn contains(&self, other: &Bounds) -> bool {
        self.left <= other.left
            && self.top <= other.top
            && self.right >= other.right
            && self.bottom >= other.bottom
    }

    /// Twice the center point; keeps the arithmetic in integers.
    pub fn doubled_center(&self) -> (i64, i64) {
        (
            self.left as i64 + self.right as i64,
            self.top as i64 + self.bottom as i64,
        )
    }

    pub fn height(&self) -> i32 {
        self.bottom - self.top
    }

    fn union(&self, other: &Bounds) -> Bounds {
        Bounds {
            left: self.left.min(other.left),
            top: self.top.min(other.top),
            right: self.right.max(other.right),
            bottom: self.bottom.max(other.bottom),
        }
    }
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}][{},{}]", self.left, self.top, self.right, self.bottom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UiNode {
    pub class_name: String,
    pub text: String,
    pub resource_id: String,
    pub hint: String,
    pub content_desc: String,
    pub bounds: Bounds,
    pub children: Vec<UiNode>,
}

impl UiNode {
    pub fn new(class_name: impl Into<String>, bounds: Bounds) -> Self {
        Self {
            class_name: class_name.into(),
            bounds,
            ..Default::default()
        }
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = text.into();
        self
    }

    pub fn with_resource_id(mut self, id: impl Into<String>) -> Self {
        self.resource_id = id.into();
        self
    }

    pub fn with_hint(mut self, hint: impl Into<String>) -> Self {
        self.hint = hint.into();
        self
    }

    pub fn with_child(mut self, child: UiNode) -> Self {
        self.children.push(child);
        self
    }

    /// Class-name test used everywhere a "text input" is meant.
    pub fn is_text_input(&self) -> bool {
        self.class_name.to_ascii_lowercase().contains("edittext")
    }
}

/// True iff the node carries a hint with visible content.
pub fn has_hint(node: &UiNode) -> bool {
    !node.hint.trim().is_empty()
}

/// Child-index path from the root; the root itself is the empty path.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodePath(pub Vec<usize>);

impl NodePath {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn child(&self, index: usize) -> Self {
        let mut v = self.0.clone();
        v.push(index);
        Self(v)
    }

    pub fn parent(&self) -> Option<NodePath> {
        if self.0.is_empty() {
            None
        } else {
            Some(Self(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn last(&self) -> Option<usize> {
        self.0.last().copied()
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_char('/')?;
        for (i, idx) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_char('/')?;
            }
            write!(f, "{idx}")?;
        }
        Ok(())
    }
}

impl From<Vec<usize>> for NodePath {
    fn from(v: Vec<usize>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewHierarchy {
    pub activity_name: String,
    pub root: UiNode,
    pub source_path: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl ViewHierarchy {
    /// Builds a hierarchy from an already constructed tree, running the same
    /// bounds checks as the parser.
    pub fn from_root(activity_name: impl Into<String>, root: UiNode) -> Self {
        let mut vh = Self {
            activity_name: activity_name.into(),
            root,
            source_path: String::new(),
            warnings: Vec::new(),
        };
        vh.check();
        vh
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source_path = source.into();
        self
    }

    /// Pre-order list of every node with its path.
    pub fn preorder(&self) -> Vec<(NodePath, &UiNode)> {
        let mut out = Vec::new();
        let mut stack = vec![(NodePath::root(), &self.root)];
        while let Some((path, node)) = stack.pop() {
            for (i, child) in node.children.iter().enumerate().rev() {
                stack.push((path.child(i), child));
            }
            out.push((path, node));
        }
        out
    }

    pub fn node_at(&self, path: &NodePath) -> Option<&UiNode> {
        let mut node = &self.root;
        for &i in &path.0 {
            node = node.children.get(i)?;
        }
        Some(node)
    }

    /// Serializes back into UIAutomator dump syntax.
    pub fn to_dump_xml(&self) -> String {
        let mut out = String::from("<?xml version='1.0' encoding='UTF-8' standalone='yes' ?>\n");
        out.push_str("<hierarchy rotation=\"0\">\n");
        write_node(&mut out, &self.root, 1);
        out.push_str("</hierarchy>\n");
        out
    }

    fn check(&mut self) {
        if self.activity_name.trim().is_empty() {
            self.warnings.push("activity name is empty".to_string());
        }
        let root_bounds = self.root.bounds;
        let mut outside = 0usize;
        let mut stack: Vec<&UiNode> = self.root.children.iter().collect();
        while let Some(node) = stack.pop() {
            if !root_bounds.contains(&node.bounds) {
                outside += 1;
            }
            stack.extend(node.children.iter());
        }
        if outside > 0 {
            self.warnings.push(format!(
                "{outside} node(s) extend beyond root bounds {root_bounds}"
            ));
        }
    }
}

/// Text-input nodes in pre-order.
pub fn find_text_inputs(vh: &ViewHierarchy) -> Vec<(NodePath, &UiNode)> {
    vh.preorder()
        .into_iter()
        .filter(|(_, n)| n.is_text_input())
        .collect()
}

/// Parses a UIAutomator dump. `activity_name` comes from the caller because
/// dumps do not record it.
pub fn parse_hierarchy(xml_text: &str, activity_name: &str) -> Result<ViewHierarchy, ParseError> {
    let doc = roxmltree::Document::parse(xml_text)
        .map_err(|e| ParseError::MalformedXml(e.to_string()))?;
    let top = doc.root_element();
    let root = if top.has_tag_name("node") {
        convert(top)?
    } else {
        let nodes: Vec<_> = top
            .children()
            .filter(|c| c.is_element() && c.has_tag_name("node"))
            .collect();
        match nodes.len() {
            0 => {
                return Err(ParseError::MalformedXml(format!(
                    "<{}> contains no node element",
                    top.tag_name().name()
                )))
            }
            1 => convert(nodes[0])?,
            _ => {
                let children = nodes
                    .into_iter()
                    .map(convert)
                    .collect::<Result<Vec<_>, _>>()?;
                let bounds = children
                    .iter()
                    .map(|c| c.bounds)
                    .reduce(|a, b| a.union(&b))
                    .unwrap_or_default();
                UiNode {
                    class_name: top.tag_name().name().to_string(),
                    bounds,
                    children,
                    ..Default::default()
                }
            }
        }
    };
    Ok(ViewHierarchy::from_root(activity_name, root))
}

fn convert(el: roxmltree::Node<'_, '_>) -> Result<UiNode, ParseError> {
    let attr = |name: &str| el.attribute(name).unwrap_or("").to_string();
    let bounds = match el.attribute("bounds") {
        Some(raw) if !raw.is_empty() => Bounds::parse(raw)?,
        _ => Bounds::default(),
    };
    let children = el
        .children()
        .filter(|c| c.is_element() && c.has_tag_name("node"))
        .map(convert)
        .collect::<Result<Vec<_>, _>>()?;
    Ok(UiNode {
        class_name: attr("class"),
        text: attr("text"),
        resource_id: attr("resource-id"),
        hint: attr("hint"),
        content_desc: attr("content-desc"),
        bounds,
        children,
    })
}

fn write_node(out: &mut String, node: &UiNode, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    let _ = write!(
        out,
        "<node text=\"{}\" resource-id=\"{}\" class=\"{}\" content-desc=\"{}\" hint=\"{}\" bounds=\"{}\"",
        escape_attr(&node.text),
        escape_attr(&node.resource_id),
        escape_attr(&node.class_name),
        escape_attr(&node.content_desc),
        escape_attr(&node.hint),
        node.bounds
    );
    if node.children.is_empty() {
        out.push_str(" />\n");
        return;
    }
    out.push_str(">\n");
    for child in &node.children {
        write_node(out, child, depth + 1);
    }
    for _ in 0..depth {
        out.push_str("  ");
    }
    out.push_str("</node>\n");
}

fn escape_attr(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
    out
}

/// Deterministic digest over the activity name and the pre-order sequence of
/// `(class, display label)`. Bounds do not participate.
pub fn fingerprint(vh: &ViewHierarchy) -> String {
    let mut hasher = Sha256::new();
    hasher.update(vh.activity_name.as_bytes());
    hasher.update([0u8]);
    for (_, node) in vh.preorder() {
        hasher.update(node.class_name.as_bytes());
        hasher.update([0x1f]);
        hasher.update(crate::entity::display_label(node).as_bytes());
        hasher.update([0x1e]);
    }
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppManifest {
    pub app_name: String,
    pub activity_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Reads a plain-XML AndroidManifest.
///
/// The app name is the application label unless it is missing or a resource
/// reference (`@string/...`), in which case the last segment of the package
/// name is used.
pub fn parse_manifest(xml_text: &str) -> Result<AppManifest, ParseError> {
    let doc = roxmltree::Document::parse(xml_text)
        .map_err(|e| ParseError::MalformedXml(e.to_string()))?;
    let manifest = doc.root_element();
    if !manifest.has_tag_name("manifest") {
        return Err(ParseError::MalformedXml(format!(
            "expected <manifest>, found <{}>",
            manifest.tag_name().name()
        )));
    }
    let package = manifest
        .attribute("package")
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .ok_or(ParseError::MissingPackage)?;

    let application = manifest
        .children()
        .find(|c| c.is_element() && c.has_tag_name("application"));
    let label = application
        .and_then(|app| local_attr(app, "label"))
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('@'));
    let app_name = match label {
        Some(l) => l.to_string(),
        None => short_name(package).to_string(),
    };

    let mut activity_names: Vec<String> = Vec::new();
    if let Some(app) = application {
        for act in app
            .children()
            .filter(|c| c.is_element() && c.has_tag_name("activity"))
        {
            let Some(name) = local_attr(act, "name").map(str::trim).filter(|n| !n.is_empty())
            else {
                continue;
            };
            let short = short_name(name).to_string();
            if !short.is_empty() && !activity_names.contains(&short) {
                activity_names.push(short);
            }
        }
    }
    let mut warnings = Vec::new();
    if activity_names.is_empty() {
        warnings.push(format!("manifest for {package} declares no activities"));
    }
    Ok(AppManifest {
        app_name,
        activity_names,
        warnings,
    })
}

fn local_attr<'a>(node: roxmltree::Node<'a, '_>, local: &str) -> Option<&'a str> {
    node.attributes()
        .find(|a| a.name() == local)
        .map(|a| a.value())
}

fn short_name(qualified: &str) -> &str {
    qualified.rsplit('.').next().unwrap_or(qualified)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_LEVEL: &str = r#"<?xml version='1.0' encoding='UTF-8' standalone='yes' ?>
<hierarchy rotation="0">
  <node index="0" text="" resource-id="" class="android.widget.FrameLayout" package="com.x.flight" bounds="[0,0][1080,1920]">
    <node index="0" text="" resource-id="com.x.flight:id/depart" class="android.widget.EditText" bounds="[40,200][1040,320]" />
  </node>
</hierarchy>"#;

    #[test]
    fn single_node_document() {
        let vh = parse_hierarchy(
            r#"<node class="android.widget.EditText" bounds="[0,0][100,50]"/>"#,
            "Main",
        )
        .unwrap();
        assert_eq!(vh.root.class_name, "android.widget.EditText");
        assert!(vh.root.children.is_empty());
        assert_eq!(vh.root.text, "");
        assert_eq!(vh.root.hint, "");
        assert_eq!(vh.root.bounds, Bounds::new(0, 0, 100, 50));
    }

    #[test]
    fn two_level_dump() {
        let vh = parse_hierarchy(TWO_LEVEL, "SearchFlight").unwrap();
        assert_eq!(vh.activity_name, "SearchFlight");
        assert_eq!(vh.root.class_name, "android.widget.FrameLayout");
        assert_eq!(vh.root.children.len(), 1);
        let child = &vh.root.children[0];
        assert!(child.class_name.ends_with("EditText"));
        assert_eq!(child.resource_id, "com.x.flight:id/depart");
        assert_eq!(child.bounds, Bounds::new(40, 200, 1040, 320));
        assert!(vh.warnings.is_empty());
    }

    #[test]
    fn truncated_input_is_malformed() {
        assert!(matches!(
            parse_hierarchy("<node", "Main"),
            Err(ParseError::MalformedXml(_))
        ));
    }

    #[test]
    fn bad_bounds_rejected() {
        for raw in ["0,0,100,50", "[0,0][100]", "[a,0][1,1]", "[10,0][5,5]", "[0,0][1,1"] {
            let xml = format!(r#"<node class="x" bounds="{raw}"/>"#);
            assert!(
                matches!(parse_hierarchy(&xml, "A"), Err(ParseError::MalformedBounds(_))),
                "{raw}"
            );
        }
    }

    #[test]
    fn negative_coordinates_parse() {
        assert_eq!(Bounds::parse("[-5,-10][3,4]").unwrap(), Bounds::new(-5, -10, 3, 4));
    }

    #[test]
    fn escaping_survives_round_trip() {
        let root = UiNode::new("android.widget.FrameLayout", Bounds::new(0, 0, 10, 10))
            .with_child(
                UiNode::new("android.widget.TextView", Bounds::new(0, 0, 5, 5))
                    .with_text("Tom & \"Jerry\" <3 'quoted'\nnext"),
            );
        let vh = ViewHierarchy::from_root("Main", root);
        let back = parse_hierarchy(&vh.to_dump_xml(), "Main").unwrap();
        assert_eq!(back.root, vh.root);
    }

    #[test]
    fn outside_root_bounds_warns() {
        let root = UiNode::new("F", Bounds::new(0, 0, 10, 10))
            .with_child(UiNode::new("T", Bounds::new(5, 5, 20, 20)));
        let vh = ViewHierarchy::from_root("Main", root);
        assert_eq!(vh.warnings.len(), 1);
    }

    #[test]
    fn multiple_top_level_nodes_get_wrapper() {
        let xml = r#"<hierarchy><node class="A" bounds="[0,0][10,10]"/><node class="B" bounds="[0,10][10,30]"/></hierarchy>"#;
        let vh = parse_hierarchy(xml, "Main").unwrap();
        assert_eq!(vh.root.children.len(), 2);
        assert_eq!(vh.root.bounds, Bounds::new(0, 0, 10, 30));
    }

    #[test]
    fn empty_hierarchy_is_malformed() {
        assert!(matches!(
            parse_hierarchy("<hierarchy rotation=\"0\"/>", "Main"),
            Err(ParseError::MalformedXml(_))
        ));
    }

    #[test]
    fn find_inputs_in_document_order() {
        let b = Bounds::new(0, 0, 10, 10);
        let root = UiNode::new("android.widget.LinearLayout", b)
            .with_child(UiNode::new("android.widget.TextView", b).with_text("From"))
            .with_child(UiNode::new("android.widget.EditText", b).with_resource_id("id/from"))
            .with_child(UiNode::new("android.widget.TextView", b).with_text("To"))
            .with_child(
                UiNode::new("android.widget.FrameLayout", b)
                    .with_child(UiNode::new("android.widget.EditText", b).with_resource_id("id/to")),
            )
            .with_child(UiNode::new("android.widget.TextView", b).with_text("Go"));
        let vh = ViewHierarchy::from_root("Main", root);
        let inputs = find_text_inputs(&vh);
        assert_eq!(inputs.len(), 2);
        assert_eq!(inputs[0].0, NodePath(vec![1]));
        assert_eq!(inputs[1].0, NodePath(vec![3, 0]));
        assert_eq!(inputs[1].1.resource_id, "id/to");
    }

    #[test]
    fn vendor_subclass_matches() {
        let n = UiNode::new("androidx.appcompat.widget.AppCompatEditText", Bounds::default());
        assert!(n.is_text_input());
        let vh = ViewHierarchy::from_root("A", n);
        assert_eq!(find_text_inputs(&vh).len(), 1);
        let none = ViewHierarchy::from_root("A", UiNode::new("android.widget.TextView", Bounds::default()));
        assert!(find_text_inputs(&none).is_empty());
    }

    #[test]
    fn hint_presence() {
        let n = UiNode::default();
        assert!(has_hint(&n.clone().with_hint("Enter the city")));
        assert!(!has_hint(&n.clone().with_hint("")));
        assert!(!has_hint(&n.with_hint("   ")));
    }

    #[test]
    fn fingerprint_ignores_bounds_only() {
        let a = parse_hierarchy(TWO_LEVEL, "SearchFlight").unwrap();
        let b = parse_hierarchy(TWO_LEVEL, "SearchFlight").unwrap();
        assert_eq!(fingerprint(&a), fingerprint(&b));

        let mut moved = a.clone();
        moved.root.children[0].bounds = Bounds::new(0, 0, 500, 500);
        assert_eq!(fingerprint(&a), fingerprint(&moved));

        let mut retexted = a.clone();
        retexted.root.children[0].text = "Depart".into();
        assert_ne!(fingerprint(&a), fingerprint(&retexted));

        let mut renamed = a.clone();
        renamed.activity_name = "Other".into();
        assert_ne!(fingerprint(&a), fingerprint(&renamed));
    }

    #[test]
    fn manifest_fallback_to_package() {
        let xml = r#"<manifest xmlns:android="http://schemas.android.com/apk/res/android" package="com.x.flight">
  <application android:label="@string/app_name">
    <activity android:name=".Main"/>
    <activity android:name=".RoundTrip"/>
  </application>
</manifest>"#;
        let m = parse_manifest(xml).unwrap();
        assert_eq!(m.app_name, "flight");
        assert_eq!(m.activity_names, vec!["Main", "RoundTrip"]);
        assert!(m.warnings.is_empty());
    }

    #[test]
    fn manifest_label_and_dedup() {
        let xml = r#"<manifest xmlns:android="http://schemas.android.com/apk/res/android" package="com.x.flight">
  <application android:label="Flight">
    <activity android:name="com.x.flight.Main"/>
    <activity android:name=".OneWay"/>
    <activity android:name=".Main"/>
    <activity android:name=".RoundTrip"/>
  </application>
</manifest>"#;
        let m = parse_manifest(xml).unwrap();
        assert_eq!(m.app_name, "Flight");
        assert_eq!(m.activity_names, vec!["Main", "OneWay", "RoundTrip"]);
    }

    #[test]
    fn manifest_without_activities_warns() {
        let m = parse_manifest(r#"<manifest package="com.a.b"><application/></manifest>"#).unwrap();
        assert!(m.activity_names.is_empty());
        assert_eq!(m.warnings.len(), 1);
    }

    #[test]
    fn manifest_errors() {
        assert_eq!(
            parse_manifest("<manifest><application/></manifest>"),
            Err(ParseError::MissingPackage)
        );
        assert!(matches!(parse_manifest("<manifest"), Err(ParseError::MalformedXml(_))));
    }
}
