//! Per-input hint generation: prompt, ask the model, validate the proposed
//! input on a device, feed failures back, and grow the example store.

use std::sync::{Arc, RwLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::EmbeddingTable;
use crate::entity::{extract_bundle, ExtractError, GuiEntityBundle};
use crate::exec::Exec;
use crate::gateway::{parse_hint_response, Gateway, GatewayError, HintResult};
use crate::hierarchy::{find_text_inputs, has_hint, AppManifest, NodePath, ViewHierarchy};
use crate::prompt::{templates, FeedbackRecord, PromptDocument, Verdict};
use crate::sim::{DeviceAdapter, DeviceError, SimApp, SimDevice};
use crate::store::{select_examples, ExampleRecord, ExampleStore, Origin, RetrievalConfig, DEFAULT_K};

pub const DEFAULT_MAX_ROUNDS: u32 = 3;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("backend failure: {0}")]
    Backend(#[from] GatewayError),
    #[error("response unparseable even after a format reminder")]
    UnparseableAfterReminder,
    #[error("device error: {0}")]
    Device(#[from] DeviceError),
    #[error("device has no field for input {0:?}")]
    FieldNotFound(String),
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerateOptions {
    pub max_rounds: u32,
    pub use_icl: bool,
    pub use_feedback: bool,
    pub k: usize,
    pub settle: Duration,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            max_rounds: DEFAULT_MAX_ROUNDS,
            use_icl: true,
            use_feedback: true,
            k: DEFAULT_K,
            settle: Duration::from_millis(0),
        }
    }
}

/// When runtime examples reach the store.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StoreUpdate {
    /// Added as soon as an input passes.
    Immediate,
    /// Left in [`HintOutcome::runtime_example`] for the caller to merge.
    Deferred,
}

/// Shared, read-mostly pipeline dependencies.
#[derive(Clone, Copy)]
pub struct Collaborators<'a> {
    pub store: &'a RwLock<ExampleStore>,
    pub table: &'a EmbeddingTable,
    pub gateway: &'a Gateway,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub prompt: String,
    pub raw_response: String,
    /// True when a format reminder was needed to get a parseable answer.
    pub reminded: bool,
    pub feedback: FeedbackRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HintOutcome {
    pub bundle: GuiEntityBundle,
    pub result: HintResult,
    pub verdict: FeedbackRecord,
    pub rounds_used: u32,
    pub transcript: Vec<TranscriptEntry>,
    pub backend_calls: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_example: Option<ExampleRecord>,
}

fn ask(
    gateway: &Gateway,
    prompt: &str,
    reminder_left: &mut bool,
    calls: &mut u32,
) -> Result<(HintResult, bool), PipelineError> {
    let raw = gateway.complete(prompt)?;
    *calls += 1;
    match parse_hint_response(&raw) {
        Ok(r) => Ok((r, false)),
        Err(GatewayError::UnparseableResponse) if *reminder_left => {
            *reminder_left = false;
            let retry = format!("{prompt}\n{}\n", templates::FORMAT_REMINDER);
            let raw = gateway.complete(&retry)?;
            *calls += 1;
            parse_hint_response(&raw)
                .map(|r| (r, true))
                .map_err(|_| PipelineError::UnparseableAfterReminder)
        }
        Err(GatewayError::UnparseableResponse) => Err(PipelineError::UnparseableAfterReminder),
        Err(e) => Err(e.into()),
    }
}

/// Generates a hint for one input.
///
/// With `device = None` this is a dry run: one round, verdict
/// [`Verdict::Unvalidated`], and the store is left alone.
pub fn generate_hint<'d>(
    bundle: &GuiEntityBundle,
    collab: Collaborators<'_>,
    mut device: Option<&mut (dyn DeviceAdapter + 'd)>,
    opts: &GenerateOptions,
    update: StoreUpdate,
) -> Result<HintOutcome, PipelineError> {
    let examples = if opts.use_icl && opts.k > 0 {
        let cfg = RetrievalConfig::new(opts.k).expect("k > 0 checked above");
        let store = collab.store.read().unwrap_or_else(|p| p.into_inner());
        let sel = select_examples(bundle, &store, collab.table, &cfg);
        for w in &sel.warnings {
            log::debug!("{w}");
        }
        sel.examples
    } else {
        Vec::new()
    };

    let field = match device.as_deref_mut() {
        Some(dev) => {
            dev.reset_to(&bundle.page.activity_name)?;
            Some(
                dev.locate_field(&bundle.input)
                    .ok_or_else(|| PipelineError::FieldNotFound(bundle.input.input_label.clone()))?,
            )
        }
        None => None,
    };

    let max_rounds = opts.max_rounds.max(1);
    let mut doc = PromptDocument::generation(bundle, &examples);
    let mut transcript = Vec::new();
    let mut calls = 0u32;
    let mut reminder_left = true;

    for round in 1..=max_rounds {
        let prompt = doc.render();
        let (result, reminded) = ask(collab.gateway, &prompt, &mut reminder_left, &mut calls)?;

        let feedback = match (device.as_deref_mut(), field.as_deref()) {
            (Some(dev), Some(field)) => {
                let before = dev.current_page()?;
                dev.inject_and_submit(field, &result.input_content, opts.settle)?;
                let after = dev.current_page()?;
                if dev.detect_transition(&before, &after) {
                    FeedbackRecord {
                        verdict: Verdict::Pass,
                        input_content: result.input_content.clone(),
                        error_message: None,
                        round,
                    }
                } else {
                    FeedbackRecord {
                        verdict: Verdict::FailNoTransition,
                        input_content: result.input_content.clone(),
                        error_message: dev.diff_error_message(&before, &after),
                        round,
                    }
                }
            }
            _ => FeedbackRecord {
                verdict: Verdict::Unvalidated,
                input_content: result.input_content.clone(),
                error_message: None,
                round,
            },
        };

        transcript.push(TranscriptEntry {
            prompt,
            raw_response: result.raw_response.clone(),
            reminded,
            feedback: feedback.clone(),
        });

        let last = feedback.verdict != Verdict::FailNoTransition
            || !opts.use_feedback
            || round == max_rounds;
        if !last {
            doc = PromptDocument::feedback(bundle, &feedback);
            if let Some(dev) = device.as_deref_mut() {
                dev.reset_to(&bundle.page.activity_name)?;
            }
            continue;
        }

        let runtime_example = (feedback.verdict == Verdict::Pass)
            .then(|| ExampleRecord::from_bundle(bundle, &result.hint_text, Origin::Runtime));
        let runtime_example = match (update, runtime_example) {
            (StoreUpdate::Immediate, Some(rec)) => {
                let mut store = collab.store.write().unwrap_or_else(|p| p.into_inner());
                if let Err(e) = store.add(rec) {
                    log::warn!("runtime example not stored: {e}");
                }
                None
            }
            (_, rec) => rec,
        };
        return Ok(HintOutcome {
            bundle: bundle.clone(),
            result,
            verdict: feedback,
            rounds_used: round,
            transcript,
            backend_calls: calls,
            runtime_example,
        });
    }
    unreachable!("the final round always returns")
}

/// One line of a patch file: where to put which hint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patch {
    pub source: String,
    pub node_path: NodePath,
    pub hint_text: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRepair {
    pub patches: Vec<Patch>,
    pub outcomes: Vec<HintOutcome>,
}

/// Generates hints for every hint-less text input of a page. Inputs that
/// already have a hint are skipped. Inputs that never pass still get their
/// last hint, marked with a failing verdict.
pub fn repair_page<'d>(
    vh: &ViewHierarchy,
    manifest: Option<&AppManifest>,
    collab: Collaborators<'_>,
    mut device: Option<&mut (dyn DeviceAdapter + 'd)>,
    opts: &GenerateOptions,
    update: StoreUpdate,
) -> Result<PageRepair, PipelineError> {
    let mut repair = PageRepair {
        patches: Vec::new(),
        outcomes: Vec::new(),
    };
    for (path, node) in find_text_inputs(vh) {
        if has_hint(node) {
            continue;
        }
        let bundle = extract_bundle(vh, manifest, &path)?;
        let outcome = generate_hint(&bundle, collab, device.as_deref_mut(), opts, update)?;
        repair.patches.push(Patch {
            source: vh.source_path.clone(),
            node_path: path,
            hint_text: outcome.result.hint_text.clone(),
            verdict: outcome.verdict.verdict,
        });
        repair.outcomes.push(outcome);
    }
    Ok(repair)
}

/// A page scheduled for corpus-level generation.
#[derive(Debug, Clone)]
pub struct PageJob<'a> {
    pub page: &'a ViewHierarchy,
    pub manifest: Option<&'a AppManifest>,
    /// Simulator for validation; `None` means a dry run for this page.
    pub sim: Option<Arc<SimApp>>,
}

/// Repairs many pages, possibly in parallel. Every page retrieves from the
/// store as it was when the run started; runtime examples are merged
/// afterwards in job order, so the result does not depend on scheduling.
pub fn repair_corpus(
    jobs: &[PageJob<'_>],
    collab: Collaborators<'_>,
    opts: &GenerateOptions,
    exec: Exec,
) -> Vec<Result<PageRepair, PipelineError>> {
    let results = exec.map(jobs, |job| {
        let mut device = job.sim.clone().map(SimDevice::new);
        repair_page(
            job.page,
            job.manifest,
            collab,
            device.as_mut().map(|d| d as &mut dyn DeviceAdapter),
            opts,
            StoreUpdate::Deferred,
        )
    });
    let mut store = collab.store.write().unwrap_or_else(|p| p.into_inner());
    for repair in results.iter().flatten() {
        for rec in repair.outcomes.iter().filter_map(|o| o.runtime_example.clone()) {
            if let Err(e) = store.add(rec) {
                log::warn!("runtime example not stored: {e}");
            }
        }
    }
    results
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{MockRule, MockScript};
    use crate::hierarchy::NodePath;
    use crate::sim::load_sim_app;

    const SPEC: &str = r#"{
      "schema_version": 1, "app_name": "Flight", "package": "com.example.flight",
      "initial_screen": "search",
      "screens": [
        {"id": "search", "activity_name": "SearchFlight",
         "static_nodes": [{"kind": "text", "text": "Flight Search"}, {"kind": "button", "text": "Search"}],
         "inputs": [{"field_id": "depart", "label": "Depart",
                     "validator": {"type": "one_of", "values": ["Beijing", "Paris"]},
                     "error_message": "Please enter the correct city name",
                     "transition_target": "results"},
                    {"field_id": "passengers", "label": "Passengers",
                     "validator": {"type": "range", "min": 1, "max": 9},
                     "transition_target": "results"}]},
        {"id": "results", "activity_name": "FlightList",
         "static_nodes": [{"kind": "text", "text": "Results"}, {"kind": "text", "text": "Sort"}]}
      ]
    }"#;

    fn answer(hint: &str, content: &str) -> String {
        format!("the hint-text is \"{hint}\", the input content is \"{content}\"")
    }

    fn rule(contains: &[&str], response: String) -> MockRule {
        MockRule {
            contains: contains.iter().map(|s| s.to_string()).collect(),
            response,
            ..Default::default()
        }
    }

    struct Fixture {
        app: Arc<SimApp>,
        page: ViewHierarchy,
        store: RwLock<ExampleStore>,
        table: EmbeddingTable,
    }

    fn fixture() -> Fixture {
        let app = Arc::new(load_sim_app(SPEC).unwrap());
        let page = app.render(&app.start()).with_source("flight/search.xml");
        let mut table = EmbeddingTable::new(2);
        table.insert("depart", vec![1.0, 0.0]).unwrap();
        table.insert("city", vec![0.9, 0.1]).unwrap();
        Fixture {
            app,
            page,
            store: RwLock::new(ExampleStore::new()),
            table,
        }
    }

    fn depart_bundle(f: &Fixture) -> GuiEntityBundle {
        let (path, _) = find_text_inputs(&f.page).into_iter().next().unwrap();
        extract_bundle(&f.page, None, &path).unwrap()
    }

    #[test]
    fn happy_path_passes_first_round() {
        let f = fixture();
        let gw = Gateway::mock(MockScript {
            default: Some(answer("Enter the departure city", "Beijing")),
            ..Default::default()
        });
        let collab = Collaborators { store: &f.store, table: &f.table, gateway: &gw };
        let mut dev = SimDevice::new(Arc::clone(&f.app));
        let out = generate_hint(&depart_bundle(&f), collab, Some(&mut dev), &GenerateOptions::default(), StoreUpdate::Immediate)
            .unwrap();
        assert_eq!(out.verdict.verdict, Verdict::Pass);
        assert_eq!(out.rounds_used, 1);
        assert_eq!(out.transcript.len(), 1);
        assert_eq!(f.store.read().unwrap().len(), 1);
        assert_eq!(f.store.read().unwrap().records()[0].origin, Origin::Runtime);
    }

    fn failing_first_gateway() -> Gateway {
        Gateway::mock(MockScript {
            rules: vec![rule(
                &["Please enter the correct city name"],
                answer("Enter a city name", "Beijing"),
            )],
            default: Some(answer("Enter a vehicle", "train")),
            ..Default::default()
        })
    }

    #[test]
    fn feedback_recovers_in_second_round() {
        let f = fixture();
        let gw = failing_first_gateway();
        let collab = Collaborators { store: &f.store, table: &f.table, gateway: &gw };
        let mut dev = SimDevice::new(Arc::clone(&f.app));
        let out = generate_hint(&depart_bundle(&f), collab, Some(&mut dev), &GenerateOptions::default(), StoreUpdate::Immediate)
            .unwrap();
        assert_eq!(out.verdict.verdict, Verdict::Pass);
        assert_eq!(out.rounds_used, 2);
        assert_eq!(out.result.hint_text, "Enter a city name");
        let first = &out.transcript[0].feedback;
        assert_eq!(first.verdict, Verdict::FailNoTransition);
        assert_eq!(first.input_content, "train");
        assert_eq!(first.error_message.as_deref(), Some("Please enter the correct city name"));
        assert!(out.transcript[1].prompt.starts_with("The input content \"train\" doesn't pass"));
        assert_eq!(f.store.read().unwrap().len(), 1);
    }

    #[test]
    fn no_feedback_stops_after_one_round() {
        let f = fixture();
        let gw = failing_first_gateway();
        let collab = Collaborators { store: &f.store, table: &f.table, gateway: &gw };
        let mut dev = SimDevice::new(Arc::clone(&f.app));
        let opts = GenerateOptions {
            use_feedback: false,
            ..Default::default()
        };
        let out = generate_hint(&depart_bundle(&f), collab, Some(&mut dev), &opts, StoreUpdate::Immediate).unwrap();
        assert_eq!(out.verdict.verdict, Verdict::FailNoTransition);
        assert_eq!(out.rounds_used, 1);
        assert!(f.store.read().unwrap().is_empty());
    }

    #[test]
    fn rounds_and_calls_are_bounded() {
        let f = fixture();
        let gw = Gateway::mock(MockScript {
            sequence: vec!["garbage".into()],
            default: Some(answer("Enter a vehicle", "train")),
            ..Default::default()
        });
        let collab = Collaborators { store: &f.store, table: &f.table, gateway: &gw };
        let mut dev = SimDevice::new(Arc::clone(&f.app));
        let out = generate_hint(&depart_bundle(&f), collab, Some(&mut dev), &GenerateOptions::default(), StoreUpdate::Immediate)
            .unwrap();
        assert_eq!(out.verdict.verdict, Verdict::FailNoTransition);
        assert_eq!(out.rounds_used, 3);
        assert_eq!(out.transcript.len(), 3);
        assert!(out.transcript[0].reminded);
        assert_eq!(out.backend_calls, 4);
        assert!(f.store.read().unwrap().is_empty());
    }

    #[test]
    fn second_unparseable_answer_is_fatal() {
        let f = fixture();
        let gw = Gateway::mock(MockScript {
            default: Some("no idea".into()),
            ..Default::default()
        });
        let collab = Collaborators { store: &f.store, table: &f.table, gateway: &gw };
        let err = generate_hint(&depart_bundle(&f), collab, None, &GenerateOptions::default(), StoreUpdate::Immediate)
            .unwrap_err();
        assert!(matches!(err, PipelineError::UnparseableAfterReminder));
    }

    #[test]
    fn backend_errors_propagate() {
        let f = fixture();
        let gw = Gateway::mock(MockScript::default());
        let collab = Collaborators { store: &f.store, table: &f.table, gateway: &gw };
        let err = generate_hint(&depart_bundle(&f), collab, None, &GenerateOptions::default(), StoreUpdate::Immediate)
            .unwrap_err();
        assert!(matches!(err, PipelineError::Backend(GatewayError::MockMiss(_))));
    }

    #[test]
    fn dry_run_is_unvalidated() {
        let f = fixture();
        let gw = failing_first_gateway();
        let collab = Collaborators { store: &f.store, table: &f.table, gateway: &gw };
        let out = generate_hint(&depart_bundle(&f), collab, None, &GenerateOptions::default(), StoreUpdate::Immediate)
            .unwrap();
        assert_eq!(out.verdict.verdict, Verdict::Unvalidated);
        assert_eq!(out.rounds_used, 1);
        assert!(f.store.read().unwrap().is_empty());
    }

    #[test]
    fn repair_page_flags_failures() {
        let f = fixture();
        // depart passes via feedback; passengers never gets a number
        let gw = Gateway::mock(MockScript {
            rules: vec![
                rule(&["Please enter the correct city name"], answer("Enter a city name", "Beijing")),
                rule(&["text input of this page is \"passengers\""], answer("Number of passengers", "many")),
            ],
            default: Some(answer("Enter a vehicle", "train")),
            ..Default::default()
        });
        let collab = Collaborators { store: &f.store, table: &f.table, gateway: &gw };
        let mut dev = SimDevice::new(Arc::clone(&f.app));
        let repair = repair_page(&f.page, None, collab, Some(&mut dev), &GenerateOptions::default(), StoreUpdate::Immediate)
            .unwrap();
        assert_eq!(repair.patches.len(), 2);
        assert_eq!(repair.patches[0].verdict, Verdict::Pass);
        assert_eq!(repair.patches[1].verdict, Verdict::FailNoTransition);
        assert_eq!(repair.patches[1].hint_text, "Number of passengers");
        assert_eq!(repair.patches[0].source, "flight/search.xml");
    }

    #[test]
    fn repair_skips_hinted_inputs() {
        let mut f = fixture();
        for (path, _) in find_text_inputs(&f.page.clone()) {
            let mut node = &mut f.page.root;
            for &i in &path.0 {
                node = &mut node.children[i];
            }
            node.hint = "Already hinted".into();
        }
        let gw = Gateway::mock(MockScript::default());
        let collab = Collaborators { store: &f.store, table: &f.table, gateway: &gw };
        let repair = repair_page(&f.page, None, collab, None, &GenerateOptions::default(), StoreUpdate::Immediate).unwrap();
        assert!(repair.patches.is_empty());
    }

    #[test]
    fn corpus_merge_is_deferred_and_ordered() {
        let f = fixture();
        let gw = Gateway::mock(MockScript {
            rules: vec![rule(&["\"depart\""], answer("Enter the departure city", "Paris"))],
            default: Some(answer("Number of passengers", "2")),
            ..Default::default()
        });
        let collab = Collaborators { store: &f.store, table: &f.table, gateway: &gw };
        let jobs = vec![
            PageJob { page: &f.page, manifest: None, sim: Some(Arc::clone(&f.app)) },
            PageJob { page: &f.page, manifest: None, sim: Some(Arc::clone(&f.app)) },
        ];
        let results = repair_corpus(&jobs, collab, &GenerateOptions::default(), Exec::default());
        assert_eq!(results.len(), 2);
        for r in &results {
            let r = r.as_ref().unwrap();
            assert!(r.patches.iter().all(|p| p.verdict == Verdict::Pass));
            // nothing was retrievable during the run
            assert!(r.outcomes.iter().all(|o| !o.transcript[0].prompt.contains("We will provide")));
        }
        let store = f.store.read().unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(store.records()[0].input_label, "depart");
        assert_eq!(store.records()[1].input_label, "passengers");
        let _ = NodePath::root();
    }
}
