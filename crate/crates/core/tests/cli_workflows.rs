mod common;

use std::fs;
use std::path::Path;

use common::{cli, fixture, read_jsonl};
use hintsmith::audit::load_report;
use hintsmith::metrics::MetricReport;
use hintsmith::store::ExampleStore;
use serde_json::Value;

fn s(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

fn generate_args(corpus: &Path, mock: &str, dir: &Path) -> Vec<String> {
    vec![
        "generate".into(),
        "--corpus".into(),
        s(corpus),
        "--embeddings".into(),
        s(&fixture("embeddings/toy_300d.txt")),
        "--mock-script".into(),
        s(&fixture(mock)),
        "--patches".into(),
        s(&dir.join("patches.jsonl")),
        "--transcript".into(),
        s(&dir.join("transcript.jsonl")),
    ]
}

#[test]
fn mine_counts_planted_inputs_and_dedups_on_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let store = tmp.path().join("store.jsonl");
    let args = ["mine", "--corpus", &s(&fixture("corpus/mining")), "--store", &s(&store)];
    assert_eq!(cli(&args), 0);
    let first = fs::read(&store).unwrap();
    assert_eq!(ExampleStore::load_path(&store).unwrap().store.len(), 17);
    assert_eq!(cli(&args), 0);
    assert_eq!(fs::read(&store).unwrap(), first);
}

#[test]
fn mine_empty_corpus_gives_empty_store() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    fs::create_dir_all(&corpus).unwrap();
    let store = tmp.path().join("store.jsonl");
    assert_eq!(cli(&["mine", "--corpus", &s(&corpus), "--store", &s(&store)]), 0);
    assert!(ExampleStore::load_path(&store).unwrap().store.is_empty());
}

#[test]
fn audit_structured_round_trips_and_bad_path_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("report.json");
    let code = cli(&[
        "audit",
        "--corpus",
        &s(&fixture("corpus/audit")),
        "--format",
        "structured",
        "--out",
        &s(&out),
        "--jobs",
        "1",
    ]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&out).unwrap();
    let report = load_report(&text).unwrap();
    assert_eq!(report.skipped_files, 1);
    assert_eq!(report.apps_scanned, 27);
    assert_eq!(serde_json::to_string_pretty(&report).unwrap() + "\n", text);
    assert!(report.categories.iter().all(|c| c.category == "Uncategorized"));

    assert_eq!(cli(&["audit", "--corpus", &s(&tmp.path().join("nope"))]), 2);
}

#[test]
fn generate_without_embeddings_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = generate_args(&fixture("corpus/happy"), "mocks/happy.json", tmp.path());
    args[4] = s(&tmp.path().join("missing.txt"));
    assert_eq!(cli(&args), 2);
    assert!(!tmp.path().join("patches.jsonl").exists());
}

#[test]
fn backend_failure_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let mock = tmp.path().join("empty.json");
    fs::write(&mock, r#"{"rules": []}"#).unwrap();
    let mut args = generate_args(&fixture("corpus/feedback"), "mocks/feedback.json", tmp.path());
    args[6] = s(&mock);
    assert_eq!(cli(&args), 3);
}

#[test]
fn no_feedback_flags_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = generate_args(&fixture("corpus/feedback"), "mocks/feedback.json", tmp.path());
    args.push("--no-feedback".into());
    assert_eq!(cli(&args), 0);
    let patches: Vec<Value> = read_jsonl(&tmp.path().join("patches.jsonl"));
    assert!(patches.iter().any(|p| p["verdict"] == "fail_no_transition"));
}

#[test]
fn dry_run_needs_no_simulator() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    let app = corpus.join("com.travel.flightsearch");
    fs::create_dir_all(&app).unwrap();
    let src = fixture("corpus/feedback/com.travel.flightsearch");
    fs::copy(src.join("SearchFlightActivity.xml"), app.join("SearchFlightActivity.xml")).unwrap();

    let args = generate_args(&corpus, "mocks/feedback.json", tmp.path());
    assert_eq!(cli(&args), 2, "validation without sim.json must be refused");

    let mut args = args;
    args.push("--dry-run".into());
    assert_eq!(cli(&args), 0);
    let patches: Vec<Value> = read_jsonl(&tmp.path().join("patches.jsonl"));
    assert_eq!(patches.len(), 1);
    assert_eq!(patches[0]["verdict"], "unvalidated");
    assert_eq!(patches[0]["source"], "com.travel.flightsearch/SearchFlightActivity.xml");
}

#[test]
fn store_out_grows_with_passing_inputs_only() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("grown.jsonl");
    let mut args = generate_args(&fixture("corpus/feedback"), "mocks/feedback.json", tmp.path());
    args.extend(["--no-feedback".into(), "--store-out".into(), s(&out)]);
    assert_eq!(cli(&args), 0);
    assert!(ExampleStore::load_path(&out).unwrap().store.is_empty());

    let mut args = generate_args(&fixture("corpus/feedback"), "mocks/feedback.json", tmp.path());
    args.extend(["--store-out".into(), s(&out)]);
    assert_eq!(cli(&args), 0);
    let grown = ExampleStore::load_path(&out).unwrap().store;
    assert_eq!(grown.len(), 2);
    assert!(grown.records().iter().all(|r| r.record_id.starts_with("r-")));
}

#[test]
fn evaluate_pairs_file() {
    let tmp = tempfile::tempdir().unwrap();
    let pairs = tmp.path().join("pairs.jsonl");
    fs::write(
        &pairs,
        "{\"candidate\":\"Enter city\",\"reference\":\"enter city\"}\n{\"candidate\":\"Your name\",\"reference\":\"Your name\"}\n",
    )
    .unwrap();
    let out = tmp.path().join("report.json");
    assert_eq!(cli(&["evaluate", "--pairs", &s(&pairs), "--out", &s(&out)]), 0);
    let report: MetricReport = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.count, 2);
    assert_eq!(report.means.exact_match, 1.0);

    let empty = tmp.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    assert_eq!(cli(&["evaluate", "--pairs", &s(&empty)]), 2);
}

#[test]
fn evaluate_keyed_files_need_matching_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let truth = fixture("corpus/happy_truth.jsonl");
    let text = fs::read_to_string(&truth).unwrap();
    let short = tmp.path().join("short.jsonl");
    fs::write(&short, text.lines().skip(1).map(|l| format!("{l}\n")).collect::<String>()).unwrap();
    assert_eq!(cli(&["evaluate", "--candidates", &s(&short), "--references", &s(&truth)]), 2);
    assert_eq!(cli(&["evaluate", "--candidates", &s(&truth), "--references", &s(&truth)]), 0);
}

const TRACE: &str = r#"{"action":"render"}
{"action":"inject","field":"depart","text":"train"}
{"action":"render"}
{"action":"inject","field":"depart","text":"Beijing"}
{"action":"render"}
"#;

#[test]
fn simulate_replays_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = fixture("corpus/feedback/com.travel.flightsearch/sim.json");
    let trace = tmp.path().join("trace.jsonl");
    fs::write(&trace, TRACE).unwrap();
    let out_a = tmp.path().join("a.jsonl");
    let out_b = tmp.path().join("b.jsonl");
    for out in [&out_a, &out_b] {
        assert_eq!(cli(&["simulate", "--spec", &s(&spec), "--trace", &s(&trace), "--out", &s(out)]), 0);
    }
    assert_eq!(fs::read(&out_a).unwrap(), fs::read(&out_b).unwrap());
    let history: Vec<Value> = read_jsonl(&out_a);
    assert_eq!(history.len(), 5);
    // a rejected value raises the popup, which the next render still shows
    assert_ne!(history[0]["fingerprint"], history[1]["fingerprint"]);
    assert_eq!(history[1]["fingerprint"], history[2]["fingerprint"]);
    assert_ne!(history[2]["fingerprint"], history[3]["fingerprint"]);

    let bad = tmp.path().join("bad.jsonl");
    fs::write(&bad, "{\"action\":\"render\"}\n{\"action\":\"inject\",\"field\":\"nope\",\"text\":\"x\"}\n").unwrap();
    assert_eq!(cli(&["simulate", "--spec", &s(&spec), "--trace", &s(&bad)]), 2);
}
