//! Hint-text example records, their line-delimited store, and top-K retrieval.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::embedding::{cosine, embed_sentence, EmbeddingTable};
use crate::entity::{extract_bundle, GuiEntityBundle};
use crate::exec::Exec;
use crate::hierarchy::{find_text_inputs, has_hint, AppManifest, ViewHierarchy};

pub const DEFAULT_K: usize = 6;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("record {0:?} already exists with different content")]
    DuplicateId(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("retrieval k must be at least 1")]
    InvalidK,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Mined,
    Runtime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub record_id: String,
    pub input_label: String,
    pub nearby_labels: Vec<String>,
    pub activity_name: String,
    pub app_name: String,
    pub hint_text: String,
    pub origin: Origin,
}

impl ExampleRecord {
    /// Builds a record from extracted GUI information. The id is a content
    /// hash, so re-mining the same corpus yields the same ids.
    pub fn from_bundle(bundle: &GuiEntityBundle, hint_text: &str, origin: Origin) -> Self {
        let mut rec = Self {
            record_id: String::new(),
            input_label: bundle.input.input_label.clone(),
            nearby_labels: bundle.input.nearby_labels.clone(),
            activity_name: bundle.page.activity_name.clone(),
            app_name: bundle.app.app_name.clone(),
            hint_text: hint_text.trim().to_string(),
            origin,
        };
        rec.record_id = rec.content_id();
        rec
    }

    fn content_id(&self) -> String {
        let mut h = Sha256::new();
        for part in [&self.app_name, &self.activity_name, &self.input_label, &self.hint_text] {
            h.update(part.as_bytes());
            h.update([0x1f]);
        }
        for l in &self.nearby_labels {
            h.update(l.as_bytes());
            h.update([0x1e]);
        }
        let prefix = match self.origin {
            Origin::Mined => "m",
            Origin::Runtime => "r",
        };
        format!("{prefix}-{}", &hex::encode(h.finalize())[..16])
    }

    /// Text that retrieval embeds for this record.
    pub fn context_text(&self) -> String {
        context_text(&self.input_label, &self.nearby_labels)
    }

    fn content_key(&self) -> (String, Vec<String>, String) {
        (
            self.input_label.clone(),
            self.nearby_labels.clone(),
            self.hint_text.clone(),
        )
    }

    fn validate(&self) -> Result<(), StoreError> {
        if self.record_id.trim().is_empty() {
            return Err(StoreError::InvalidRecord("empty record_id".into()));
        }
        if self.hint_text.trim().is_empty() {
            return Err(StoreError::InvalidRecord(format!(
                "record {:?} has an empty hint_text",
                self.record_id
            )));
        }
        Ok(())
    }
}

pub(crate) fn context_text(input_label: &str, nearby: &[String]) -> String {
    let mut s = input_label.to_string();
    for l in nearby {
        s.push(' ');
        s.push_str(l);
    }
    s
}

/// Retrieval query text for a bundle: input label followed by nearby labels.
pub fn query_text(bundle: &GuiEntityBundle) -> String {
    context_text(&bundle.input.input_label, &bundle.input.nearby_labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddOutcome {
    Added,
    Duplicate,
}

#[derive(Debug)]
struct StoreIndex {
    table: Arc<EmbeddingTable>,
    vectors: Vec<Vec<f64>>,
}

/// Ordered collection of example records. Records are only ever appended.
#[derive(Debug, Default)]
pub struct ExampleStore {
    records: Vec<ExampleRecord>,
    by_id: HashMap<String, usize>,
    content: HashSet<(String, Vec<String>, String)>,
    index: Option<StoreIndex>,
}

impl PartialEq for ExampleStore {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records
    }
}

impl Clone for ExampleStore {
    fn clone(&self) -> Self {
        Self {
            records: self.records.clone(),
            by_id: self.by_id.clone(),
            content: self.content.clone(),
            index: self.index.as_ref().map(|i| StoreIndex {
                table: Arc::clone(&i.table),
                vectors: i.vectors.clone(),
            }),
        }
    }
}

/// Result of reading a store file.
#[derive(Debug)]
pub struct LoadedStore {
    pub store: ExampleStore,
    pub warnings: Vec<String>,
}

impl ExampleStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[ExampleRecord] {
        &self.records
    }

    pub fn get(&self, record_id: &str) -> Option<&ExampleRecord> {
        self.by_id.get(record_id).map(|&i| &self.records[i])
    }

    /// Appends `record` unless identical content is already stored.
    pub fn add(&mut self, record: ExampleRecord) -> Result<AddOutcome, StoreError> {
        record.validate()?;
        if self.content.contains(&record.content_key()) {
            return Ok(AddOutcome::Duplicate);
        }
        if self.by_id.contains_key(&record.record_id) {
            return Err(StoreError::DuplicateId(record.record_id));
        }
        if let Some(index) = &mut self.index {
            index.vectors.push(embed_sentence(&record.context_text(), &index.table));
        }
        self.by_id.insert(record.record_id.clone(), self.records.len());
        self.content.insert(record.content_key());
        self.records.push(record);
        Ok(AddOutcome::Added)
    }

    /// Precomputes record embeddings with `table`; later `add` calls keep the
    /// index current.
    pub fn attach_embeddings(&mut self, table: Arc<EmbeddingTable>) {
        let vectors = Exec::default().map(&self.records, |r| embed_sentence(&r.context_text(), &table));
        self.index = Some(StoreIndex { table, vectors });
    }

    fn cached_vectors(&self, table: &EmbeddingTable) -> Option<&[Vec<f64>]> {
        self.index
            .as_ref()
            .filter(|i| std::ptr::eq(Arc::as_ptr(&i.table), table))
            .map(|i| i.vectors.as_slice())
    }

    pub fn load<R: BufRead>(reader: R) -> Result<LoadedStore, StoreError> {
        let mut store = ExampleStore::new();
        let mut warnings = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let record: ExampleRecord = match serde_json::from_str(&line) {
                Ok(r) => r,
                Err(e) => {
                    warnings.push(format!("line {lineno}: corrupt record ({e})"));
                    continue;
                }
            };
            match store.add(record) {
                Ok(AddOutcome::Added) => {}
                Ok(AddOutcome::Duplicate) => {
                    warnings.push(format!("line {lineno}: duplicate content skipped"))
                }
                Err(e) => warnings.push(format!("line {lineno}: {e}")),
            }
        }
        for w in &warnings {
            log::warn!("example store {w}");
        }
        Ok(LoadedStore { store, warnings })
    }

    /// Loads a store file; a missing file yields an empty store.
    pub fn load_path(path: &Path) -> Result<LoadedStore, StoreError> {
        match std::fs::File::open(path) {
            Ok(f) => Self::load(std::io::BufReader::new(f)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(LoadedStore {
                store: ExampleStore::new(),
                warnings: Vec::new(),
            }),
            Err(e) => Err(e.into()),
        }
    }

    pub fn save<W: Write>(&self, mut w: W) -> Result<(), StoreError> {
        for r in &self.records {
            let line = serde_json::to_string(r).map_err(std::io::Error::other)?;
            w.write_all(line.as_bytes())?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save_path(&self, path: &Path) -> Result<(), StoreError> {
        let mut buf = Vec::new();
        self.save(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetrievalConfig {
    k: usize,
}

impl RetrievalConfig {
    pub fn new(k: usize) -> Result<Self, StoreError> {
        if k == 0 {
            return Err(StoreError::InvalidK);
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self { k: DEFAULT_K }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub examples: Vec<ExampleRecord>,
    pub scores: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Top-k records by cosine similarity between the query's context embedding
/// and each record's, ties broken by ascending record id.
///
/// Records whose hint equals the query input's own existing hint are never
/// returned, so a prompt cannot leak the answer it is asking for.
pub fn select_examples(
    query: &GuiEntityBundle,
    store: &ExampleStore,
    table: &EmbeddingTable,
    cfg: &RetrievalConfig,
) -> Selection {
    select_examples_with(query, store, table, cfg, Exec::default())
}

pub fn select_examples_with(
    query: &GuiEntityBundle,
    store: &ExampleStore,
    table: &EmbeddingTable,
    cfg: &RetrievalConfig,
    exec: Exec,
) -> Selection {
    if store.is_empty() {
        return Selection {
            examples: Vec::new(),
            scores: Vec::new(),
            warnings: vec!["example store is empty; no in-context examples".into()],
        };
    }
    let q = embed_sentence(&query_text(query), table);
    let leak = query.input.existing_hint.trim().to_lowercase();
    let cached = store.cached_vectors(table);
    let records = store.records();

    let scored: Vec<Option<f64>> = exec.map_range(records.len(), |i| {
        let rec = &records[i];
        if !leak.is_empty() && rec.hint_text.trim().to_lowercase() == leak {
            return None;
        }
        let score = match cached {
            Some(v) => cosine(&q, &v[i]),
            None => cosine(&q, &embed_sentence(&rec.context_text(), table)),
        };
        Some(score.unwrap_or(0.0))
    });
    let mut ranked: Vec<(f64, usize)> = scored
        .into_iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|s| (s, i)))
        .collect();

    let order = |a: &(f64, usize), b: &(f64, usize)| {
        b.0.total_cmp(&a.0)
            .then_with(|| records[a.1].record_id.cmp(&records[b.1].record_id))
    };
    let k = cfg.k().min(ranked.len());
    if k < ranked.len() {
        ranked.select_nth_unstable_by(k, order);
        ranked.truncate(k);
    }
    ranked.sort_unstable_by(order);

    Selection {
        scores: ranked.iter().map(|(s, _)| *s).collect(),
        examples: ranked.into_iter().map(|(_, i)| records[i].clone()).collect(),
        warnings: Vec::new(),
    }
}

/// One page of a corpus with its app's manifest, when known.
pub type CorpusEntry<'a> = (&'a ViewHierarchy, Option<&'a AppManifest>);

/// One record per text input that already carries a hint.
pub fn mine_examples(corpus: &[CorpusEntry<'_>], exec: Exec) -> Vec<ExampleRecord> {
    exec.map(corpus, |(vh, manifest)| {
        let mut out = Vec::new();
        for (path, node) in find_text_inputs(vh) {
            if !has_hint(node) {
                continue;
            }
            match extract_bundle(vh, *manifest, &path) {
                Ok(b) => out.push(ExampleRecord::from_bundle(&b, &node.hint, Origin::Mined)),
                Err(e) => log::warn!("{}: skipping input {path}: {e}", vh.source_path),
            }
        }
        out
    })
    .into_iter()
    .flatten()
    .collect()
}
