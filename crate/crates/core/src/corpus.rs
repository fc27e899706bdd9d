//! Directory layout: `<root>/<app-id>/<page>.xml`, with optional
//! `manifest.xml` and `sim.json` beside the pages. A page file named
//! `Activity#3.xml` belongs to activity `Activity`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::hierarchy::{parse_hierarchy, parse_manifest, AppManifest, ViewHierarchy};
use crate::sim::{load_sim_app, SimApp};

pub const MANIFEST_FILE: &str = "manifest.xml";
pub const SIM_FILE: &str = "sim.json";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AppDir {
    pub app_id: String,
    pub dir: PathBuf,
    /// Sorted by file name.
    pub pages: Vec<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub sim: Option<PathBuf>,
}

/// Lists app directories under `root`, sorted by app id.
pub fn list_apps(root: &Path) -> io::Result<Vec<AppDir>> {
    let mut apps = Vec::new();
    for entry in fs::read_dir(root)? {
        let entry = entry?;
        if !entry.file_type()?.is_dir() {
            continue;
        }
        let dir = entry.path();
        let mut pages = Vec::new();
        let (mut manifest, mut sim) = (None, None);
        for f in fs::read_dir(&dir)? {
            let path = f?.path();
            if !path.is_file() {
                continue;
            }
            match path.file_name().and_then(|n| n.to_str()) {
                Some(MANIFEST_FILE) => manifest = Some(path),
                Some(SIM_FILE) => sim = Some(path),
                Some(name) if name.ends_with(".xml") => pages.push(path),
                _ => {}
            }
        }
        pages.sort();
        apps.push(AppDir {
            app_id: entry.file_name().to_string_lossy().into_owned(),
            dir,
            pages,
            manifest,
            sim,
        });
    }
    apps.sort_by(|a, b| a.app_id.cmp(&b.app_id));
    Ok(apps)
}

pub fn activity_from_path(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    stem.split('#').next().unwrap_or_default().to_string()
}

/// `app-id/page.xml`, independent of where the corpus lives.
pub fn relative_source(app_id: &str, page: &Path) -> String {
    let name = page.file_name().map(|n| n.to_string_lossy()).unwrap_or_default();
    format!("{app_id}/{name}")
}

#[derive(Debug, Clone)]
pub struct LoadedApp {
    pub app_id: String,
    pub manifest: Option<AppManifest>,
    pub pages: Vec<ViewHierarchy>,
    pub sim: Option<Arc<SimApp>>,
    /// Files that could not be read or parsed, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
}

pub fn read_page(app_id: &str, path: &Path) -> Result<ViewHierarchy, String> {
    let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
    parse_hierarchy(&text, &activity_from_path(path))
        .map(|vh| vh.with_source(relative_source(app_id, path)))
        .map_err(|e| e.to_string())
}

/// Loads an app. Broken pages and manifests are recorded in `skipped`;
/// a broken sim spec is an error because generation depends on it.
pub fn load_app(app: &AppDir, with_sim: bool) -> Result<LoadedApp, String> {
    let mut skipped = Vec::new();
    let manifest = app.manifest.as_ref().and_then(|p| {
        match fs::read_to_string(p).map_err(|e| e.to_string()).and_then(|t| parse_manifest(&t).map_err(|e| e.to_string())) {
            Ok(m) => Some(m),
            Err(e) => {
                skipped.push((p.clone(), e));
                None
            }
        }
    });
    let mut pages = Vec::new();
    for p in &app.pages {
        match read_page(&app.app_id, p) {
            Ok(vh) => pages.push(vh),
            Err(e) => skipped.push((p.clone(), e)),
        }
    }
    let sim = match (&app.sim, with_sim) {
        (Some(p), true) => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            Some(Arc::new(load_sim_app(&text).map_err(|e| format!("{}: {e}", p.display()))?))
        }
        _ => None,
    };
    Ok(LoadedApp {
        app_id: app.app_id.clone(),
        manifest,
        pages,
        sim,
        skipped,
    })
}
