//! Missing hint-text statistics over a dump corpus.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{list_apps, read_page};
use crate::exec::Exec;
use crate::hierarchy::{fingerprint, has_hint, ViewHierarchy};

pub const UNCATEGORIZED: &str = "Uncategorized";

pub const DEFAULT_CATEGORIES: [&str; 33] = [
    "Art & Design",
    "Auto & Vehicles",
    "Beauty",
    "Books & Reference",
    "Business",
    "Comics",
    "Communication",
    "Dating",
    "Education",
    "Entertainment",
    "Events",
    "Finance",
    "Food & Drink",
    "Games",
    "Health & Fitness",
    "House & Home",
    "Libraries & Demo",
    "Lifestyle",
    "Maps & Navigation",
    "Medical",
    "Music & Audio",
    "News & Magazines",
    "Parenting",
    "Personalization",
    "Photography",
    "Productivity",
    "Shopping",
    "Social",
    "Sports",
    "Tools",
    "Travel & Local",
    "Video Players & Editors",
    "Weather",
];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CategoryEntry {
    pub category: String,
    pub downloads: Option<u64>,
}

/// App id → category, read from lines of `app-id<TAB>category[<TAB>downloads]`.
/// Blank lines and `#` comments are ignored.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CategoryMap {
    entries: HashMap<String, CategoryEntry>,
}

impl CategoryMap {
    pub fn parse(text: &str) -> Result<(Self, Vec<String>), String> {
        let known: HashSet<&str> = DEFAULT_CATEGORIES.iter().copied().collect();
        let mut map = Self::default();
        let mut warnings = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            let (app, category) = match cols.as_slice() {
                [app, cat, ..] if !app.is_empty() && !cat.is_empty() => (*app, *cat),
                _ => return Err(format!("line {}: expected app-id<TAB>category", i + 1)),
            };
            let downloads = match cols.get(2) {
                Some(d) if !d.is_empty() => Some(
                    d.replace(',', "")
                        .parse::<u64>()
                        .map_err(|_| format!("line {}: bad download count {d:?}", i + 1))?,
                ),
                _ => None,
            };
            if !known.contains(category) {
                warnings.push(format!("line {}: category {category:?} is not in the default list", i + 1));
            }
            let entry = CategoryEntry {
                category: category.to_string(),
                downloads,
            };
            if map.entries.insert(app.to_string(), entry).is_some() {
                warnings.push(format!("line {}: app {app:?} listed twice, last entry wins", i + 1));
            }
        }
        Ok((map, warnings))
    }

    pub fn get(&self, app_id: &str) -> Option<&CategoryEntry> {
        self.entries.get(app_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppStats {
    pub app_id: String,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub downloads: Option<u64>,
    /// Distinct pages holding at least one text input.
    pub pages: usize,
    pub pages_with_missing: usize,
    pub inputs: usize,
    pub inputs_missing_hint: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub category: String,
    pub apps_with_inputs: usize,
    pub apps_with_any_missing: usize,
    pub missing_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub apps_scanned: usize,
    pub apps_with_inputs: usize,
    pub apps_with_any_missing: usize,
    pub overall_missing_rate: f64,
    pub pages_with_inputs: usize,
    pub pages_with_missing: usize,
    pub inputs: usize,
    pub inputs_missing_hint: usize,
    pub skipped_files: usize,
    /// Sorted by app id.
    pub apps: Vec<AppStats>,
    /// Sorted by category name.
    pub categories: Vec<CategoryStats>,
    pub warnings: Vec<String>,
}

fn rate(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 / whole as f64
    }
}

/// Counts one app's distinct input-bearing pages. Pages are deduplicated by
/// fingerprint, keeping the first in the given order.
pub fn app_stats(app_id: &str, entry: Option<&CategoryEntry>, pages: &[ViewHierarchy]) -> AppStats {
    let mut seen = HashSet::new();
    let mut stats = AppStats {
        app_id: app_id.to_string(),
        category: entry.map_or(UNCATEGORIZED, |e| e.category.as_str()).to_string(),
        downloads: entry.and_then(|e| e.downloads),
        pages: 0,
        pages_with_missing: 0,
        inputs: 0,
        inputs_missing_hint: 0,
    };
    for vh in pages {
        if !seen.insert(fingerprint(vh)) {
            continue;
        }
        let inputs: Vec<_> = vh.preorder().into_iter().filter(|(_, n)| n.is_text_input()).collect();
        if inputs.is_empty() {
            continue;
        }
        let missing = inputs.iter().filter(|(_, n)| !has_hint(n)).count();
        stats.pages += 1;
        stats.pages_with_missing += usize::from(missing > 0);
        stats.inputs += inputs.len();
        stats.inputs_missing_hint += missing;
    }
    stats
}

/// Builds the report from per-app stats. Input order does not matter.
pub fn aggregate(mut apps: Vec<AppStats>, skipped_files: usize, mut warnings: Vec<String>) -> AuditReport {
    apps.sort_by(|a, b| a.app_id.cmp(&b.app_id));
    let mut by_cat: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for a in apps.iter().filter(|a| a.inputs > 0) {
        let slot = by_cat.entry(&a.category).or_default();
        slot.0 += 1;
        slot.1 += usize::from(a.inputs_missing_hint > 0);
    }
    let categories = by_cat
        .into_iter()
        .map(|(c, (with, missing))| CategoryStats {
            category: c.to_string(),
            apps_with_inputs: with,
            apps_with_any_missing: missing,
            missing_rate: rate(missing, with),
        })
        .collect();
    let apps_with_inputs = apps.iter().filter(|a| a.inputs > 0).count();
    let apps_with_any_missing = apps.iter().filter(|a| a.inputs_missing_hint > 0).count();
    if apps.is_empty() {
        warnings.push("corpus contains no apps".to_string());
    }
    AuditReport {
        apps_scanned: apps.len(),
        apps_with_inputs,
        apps_with_any_missing,
        overall_missing_rate: rate(apps_with_any_missing, apps_with_inputs),
        pages_with_inputs: apps.iter().map(|a| a.pages).sum(),
        pages_with_missing: apps.iter().map(|a| a.pages_with_missing).sum(),
        inputs: apps.iter().map(|a| a.inputs).sum(),
        inputs_missing_hint: apps.iter().map(|a| a.inputs_missing_hint).sum(),
        skipped_files,
        apps,
        categories,
        warnings,
    }
}

pub fn scan_corpus(root: &Path, categories: &CategoryMap) -> io::Result<AuditReport> {
    scan_corpus_with(root, categories, Exec::default())
}

pub fn scan_corpus_with(root: &Path, categories: &CategoryMap, exec: Exec) -> io::Result<AuditReport> {
    let dirs = list_apps(root)?;
    let scanned = exec.map(&dirs, |dir| {
        let mut pages = Vec::new();
        let mut warnings = Vec::new();
        for p in &dir.pages {
            match read_page(&dir.app_id, p) {
                Ok(vh) => pages.push(vh),
                Err(e) => warnings.push(format!("skipped {}/{}: {e}", dir.app_id, p.file_name().unwrap_or_default().to_string_lossy())),
            }
        }
        (app_stats(&dir.app_id, categories.get(&dir.app_id), &pages), warnings)
    });
    let mut apps = Vec::with_capacity(scanned.len());
    let mut warnings = Vec::new();
    let mut skipped = 0;
    for (stats, w) in scanned {
        skipped += w.len();
        for msg in &w {
            log::warn!("{msg}");
        }
        warnings.extend(w);
        apps.push(stats);
    }
    Ok(aggregate(apps, skipped, warnings))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Structured,
}

pub fn render_report(report: &AuditReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Structured => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        ReportFormat::Text => render_text(report),
    }
}

pub fn load_report(text: &str) -> Result<AuditReport, serde_json::Error> {
    serde_json::from_str(text)
}

fn render_text(r: &AuditReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "apps scanned            {}", r.apps_scanned);
    let _ = writeln!(out, "apps with text inputs   {}", r.apps_with_inputs);
    let _ = writeln!(out, "apps missing hint-text  {}", r.apps_with_any_missing);
    let _ = writeln!(
        out,
        "overall missing rate    {:.3} ({:.1}%)",
        r.overall_missing_rate,
        r.overall_missing_rate * 100.0
    );
    let _ = writeln!(
        out,
        "pages missing hint-text {} of {} ({:.1}%)",
        r.pages_with_missing,
        r.pages_with_inputs,
        rate(r.pages_with_missing, r.pages_with_inputs) * 100.0
    );
    let _ = writeln!(
        out,
        "inputs missing hint     {} of {} ({:.1}%)",
        r.inputs_missing_hint,
        r.inputs,
        rate(r.inputs_missing_hint, r.inputs) * 100.0
    );
    let _ = writeln!(out, "skipped files           {}", r.skipped_files);
    if !r.categories.is_empty() {
        let _ = writeln!(out, "\n{:<28} {:>6} {:>8} {:>7}", "category", "apps", "missing", "rate");
        for c in &r.categories {
            let _ = writeln!(
                out,
                "{:<28} {:>6} {:>8} {:>6.1}%",
                c.category,
                c.apps_with_inputs,
                c.apps_with_any_missing,
                c.missing_rate * 100.0
            );
        }
    }
    for w in &r.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{Bounds, UiNode};

    fn page(activity: &str, hints: &[&str]) -> ViewHierarchy {
        let mut root = UiNode::new("android.widget.FrameLayout", Bounds::new(0, 0, 100, 100));
        for (i, h) in hints.iter().enumerate() {
            root = root.with_child(
                UiNode::new("android.widget.EditText", Bounds::new(0, 0, 100, 10))
                    .with_resource_id(format!("a:id/f{i}"))
                    .with_hint(*h),
            );
        }
        ViewHierarchy::from_root(activity, root)
    }

    #[test]
    fn app_stats_dedups_pages() {
        let pages = [page("A", &["", "Name"]), page("A", &["", "Name"]), page("B", &[]), page("C", &["x"])];
        let s = app_stats("app", None, &pages);
        assert_eq!(s.pages, 2);
        assert_eq!(s.pages_with_missing, 1);
        assert_eq!(s.inputs, 3);
        assert_eq!(s.inputs_missing_hint, 1);
        assert_eq!(s.category, UNCATEGORIZED);
    }

    fn stats(id: &str, cat: &str, inputs: usize, missing: usize) -> AppStats {
        AppStats {
            app_id: id.into(),
            category: cat.into(),
            downloads: None,
            pages: usize::from(inputs > 0),
            pages_with_missing: usize::from(missing > 0),
            inputs,
            inputs_missing_hint: missing,
        }
    }

    #[test]
    fn aggregate_rates() {
        let apps = vec![
            stats("c", "Tools", 2, 1),
            stats("a", "Tools", 1, 0),
            stats("b", "Games", 3, 3),
            stats("d", "Games", 0, 0),
        ];
        let r = aggregate(apps, 0, vec![]);
        assert_eq!(r.apps_scanned, 4);
        assert_eq!(r.apps_with_inputs, 3);
        assert_eq!(r.apps_with_any_missing, 2);
        assert!((r.overall_missing_rate - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.categories[0].category, "Games");
        assert_eq!(r.categories[0].apps_with_inputs, 1);
        assert_eq!(r.categories[1].missing_rate, 0.5);
        assert_eq!(r.apps[0].app_id, "a");
    }

    #[test]
    fn empty_corpus_warns() {
        let r = aggregate(vec![], 0, vec![]);
        assert_eq!(r.overall_missing_rate, 0.0);
        assert_eq!(r.warnings, ["corpus contains no apps"]);
    }

    #[test]
    fn text_report_shape() {
        let apps: Vec<_> = (0..25)
            .map(|i| stats(&format!("app{i:02}"), "Tools", 1, usize::from(i < 19)))
            .collect();
        let r = aggregate(apps, 0, vec![]);
        let text = render_report(&r, ReportFormat::Text);
        assert!(text.contains("overall missing rate    0.760 (76.0%)"), "{text}");
        assert_eq!(text, render_report(&r, ReportFormat::Text));
        let back = load_report(&render_report(&r, ReportFormat::Structured)).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn category_map_parsing() {
        let (m, w) = CategoryMap::parse("# comment\na.app\tTools\nb.app\tWeird\t1,000\n\na.app\tGames\n").unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.get("a.app").unwrap().category, "Games");
        assert_eq!(m.get("b.app").unwrap().downloads, Some(1000));
        assert_eq!(w.len(), 2);
        assert!(CategoryMap::parse("lonely\n").is_err());
        assert!(CategoryMap::parse("a\tTools\tlots\n").is_err());
    }

    #[test]
    fn scan_skips_unreadable_files() {
        let tmp = tempfile::tempdir().unwrap();
        let app = tmp.path().join("x.app");
        std::fs::create_dir_all(&app).unwrap();
        std::fs::write(app.join("Main.xml"), page("Main", &[""]).to_dump_xml()).unwrap();
        std::fs::write(app.join("Bad.xml"), "<hierarchy>").unwrap();
        let (cats, _) = CategoryMap::parse("x.app\tTools\n").unwrap();
        let r = scan_corpus(tmp.path(), &cats).unwrap();
        assert_eq!(r.skipped_files, 1);
        assert_eq!(r.apps_with_any_missing, 1);
        assert_eq!(r.apps[0].category, "Tools");
        let seq = scan_corpus_with(tmp.path(), &cats, Exec::Sequential).unwrap();
        assert_eq!(seq, r);
    }
}
