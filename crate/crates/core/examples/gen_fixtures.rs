//! Regenerates the bundled fixtures under `crates/core/fixtures/`.
//!
//!     cargo run --example gen_fixtures [-- <out-dir>]
//!
//! Output is a pure function of the seeds below.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use hintsmith::embedding::{EmbeddingTable, DEFAULT_DIMENSION};
use hintsmith::entity::extract_bundle;
use hintsmith::hierarchy::{find_text_inputs, Bounds, UiNode, ViewHierarchy};
use hintsmith::prompt::PromptDocument;
use hintsmith::sim::{
    InputField, SimApp, SimAppSpec, SimScreen, StaticKind, StaticNode, Validator,
};

const EMBED_SEED: u64 = 0x5eed_0001;
const AUDIT_SEED: u64 = 0x5eed_0002;
const VOCAB_SIZE: usize = 1000;

const CLUSTERS: &[&[&str]] = &[
    &[
        "depart", "departure", "arrival", "arrive", "city", "destination", "from", "to", "airport",
        "flight", "trip", "hotel", "checkin", "checkout", "check", "in", "out", "guest", "guests",
        "adults", "children", "passenger", "passengers", "sky", "travel", "booking",
    ],
    &["email", "mail", "address", "phone", "number", "mobile", "contact", "share", "recipient", "with"],
    &[
        "user", "username", "name", "full", "first", "last", "nickname", "login", "password", "pin",
        "register", "sign", "up", "holder", "card", "cardholder", "bank", "pocket",
    ],
    &[
        "amount", "price", "transfer", "quantity", "qty", "coupon", "code", "cvv", "expiry",
        "payment", "pay", "money", "market", "shop",
    ],
    &["street", "postcode", "zip", "postal", "country", "delivery", "where", "going"],
    &[
        "date", "birthday", "birth", "time", "reminder", "day", "month", "year", "daily", "goal",
        "steps", "yyyy", "mm", "dd", "hh", "yy",
    ],
    &[
        "search", "query", "title", "tag", "note", "notes", "message", "body", "comment", "food",
        "dishes", "restaurants", "products", "chat", "eats", "quick",
    ],
    &["weight", "kg", "height", "profile", "fit", "log", "health"],
    &[
        "enter", "your", "the", "a", "of", "for", "set", "add", "type", "choose", "input", "text",
        "field", "activity", "page", "button", "next", "submit", "results", "done", "ok", "cancel",
        "view", "edit", "or", "are", "you",
    ],
];

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random_range(f64::EPSILON..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

fn toy_embeddings() -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(EMBED_SEED);
    let mut table = EmbeddingTable::new(DEFAULT_DIMENSION);
    for cluster in CLUSTERS {
        let center: Vec<f64> = (0..DEFAULT_DIMENSION).map(|_| gaussian(&mut rng)).collect();
        for word in *cluster {
            let v = center.iter().map(|c| round4(c + 0.6 * gaussian(&mut rng))).collect();
            assert!(table.insert(word, v).unwrap(), "duplicate vocab word {word}");
        }
    }
    let mut i = 0;
    while table.len() < VOCAB_SIZE {
        let v = (0..DEFAULT_DIMENSION).map(|_| round4(gaussian(&mut rng))).collect();
        table.insert(&format!("w{i:04}"), v).unwrap();
        i += 1;
    }
    table
}

struct Field {
    activity: &'static str,
    title: &'static str,
    field_id: &'static str,
    label: &'static str,
    validator: Validator,
    error: &'static str,
    hint: &'static str,
    content: &'static str,
}

struct SimFixtureApp {
    app_id: &'static str,
    app_name: &'static str,
    fields: Vec<Field>,
}

fn one_of(values: &[&str]) -> Validator {
    Validator::OneOf {
        values: values.iter().map(|s| s.to_string()).collect(),
    }
}

fn pattern(p: &str) -> Validator {
    Validator::Pattern { pattern: p.to_string() }
}

fn range(min: f64, max: f64) -> Validator {
    Validator::Range { min, max }
}

const EMAIL: &str = r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}";
const CITIES: &[&str] = &["Beijing", "Shanghai", "Guangzhou", "Shenzhen", "Paris", "London"];

#[allow(clippy::too_many_arguments)]
fn field(
    activity: &'static str,
    title: &'static str,
    field_id: &'static str,
    label: &'static str,
    validator: Validator,
    error: &'static str,
    hint: &'static str,
    content: &'static str,
) -> Field {
    Field {
        activity,
        title,
        field_id,
        label,
        validator,
        error,
        hint,
        content,
    }
}

fn happy_apps() -> Vec<SimFixtureApp> {
    vec![
        SimFixtureApp {
            app_id: "com.travel.skytrip",
            app_name: "SkyTrip",
            fields: vec![
                field("SearchActivity", "Find flights", "departure_city", "From", one_of(CITIES), "Unknown city", "Enter departure city", "Beijing"),
                field("ArrivalActivity", "Where to?", "arrival_city", "To", one_of(CITIES), "Unknown city", "Enter arrival city", "Paris"),
                field("PassengerActivity", "Travellers", "passenger_count", "Passengers", range(1.0, 9.0), "", "Number of passengers", "2"),
                field("ContactActivity", "Contact details", "contact_email", "Email", pattern(EMAIL), "Invalid email", "Enter your email address", "user@example.com"),
            ],
        },
        SimFixtureApp {
            app_id: "com.shop.market",
            app_name: "MarketPlace",
            fields: vec![
                field("SearchActivity", "Shop", "search_query", "Search", Validator::Nonempty, "", "Search products", "running shoes"),
                field("CheckoutActivity", "Shipping", "zip_code", "ZIP", pattern(r"\d{5}"), "Invalid ZIP code", "Enter ZIP code", "94103"),
                field("QuantityActivity", "Cart", "quantity", "Qty", range(1.0, 99.0), "", "Enter quantity", "3"),
                field("CouponActivity", "Promotions", "coupon_code", "Coupon", pattern("[A-Z0-9]{6}"), "Coupon not valid", "Enter coupon code", "SAVE10"),
            ],
        },
        SimFixtureApp {
            app_id: "com.bank.pocket",
            app_name: "PocketBank",
            fields: vec![
                field("LoginActivity", "Welcome back", "user_name", "Username", Validator::Nonempty, "", "Enter your username", "alice"),
                field("PinActivity", "Security", "pin_code", "PIN", pattern(r"\d{4}"), "Wrong PIN format", "Enter 4-digit PIN", "1234"),
                field("TransferActivity", "Transfer", "amount", "Amount", range(0.01, 10000.0), "Amount out of range", "Enter amount to transfer", "250"),
                field("PhoneActivity", "Verify", "phone_number", "Phone", pattern(r"\+?\d{7,15}"), "Invalid phone number", "Enter phone number", "13800138000"),
            ],
        },
        SimFixtureApp {
            app_id: "com.health.fitlog",
            app_name: "FitLog",
            fields: vec![
                field("ProfileActivity", "Profile", "full_name", "Name", Validator::Nonempty, "", "Enter your full name", "Alex Chen"),
                field("WeightActivity", "Body", "body_weight", "Weight (kg)", range(20.0, 300.0), "", "Enter your weight in kg", "70"),
                field("StepsActivity", "Goals", "daily_goal", "Daily goal", range(1000.0, 50000.0), "", "Set daily step goal", "8000"),
                field("BirthActivity", "About you", "birth_date", "Birthday", pattern(r"\d{4}-\d{2}-\d{2}"), "Use YYYY-MM-DD", "Enter birth date (YYYY-MM-DD)", "1990-05-17"),
            ],
        },
        SimFixtureApp {
            app_id: "com.notes.daily",
            app_name: "DailyNotes",
            fields: vec![
                field("NewNoteActivity", "New note", "note_title", "Title", Validator::Nonempty, "", "Enter note title", "Groceries"),
                field("TagActivity", "Tags", "tag_name", "Tag", Validator::Nonempty, "", "Add a tag", "personal"),
                field("ReminderActivity", "Reminder", "reminder_time", "Time", pattern(r"\d{2}:\d{2}"), "Use HH:MM", "Enter reminder time (HH:MM)", "09:30"),
                field("ShareActivity", "Share", "share_email", "Share with", pattern(EMAIL), "Invalid email", "Enter recipient email", "friend@example.com"),
            ],
        },
    ]
}

fn feedback_apps() -> Vec<SimFixtureApp> {
    vec![
        SimFixtureApp {
            app_id: "com.travel.flightsearch",
            app_name: "FlightSearch",
            fields: vec![field(
                "SearchFlightActivity",
                "Flight Search",
                "depart",
                "Depart",
                one_of(&CITIES[..4]),
                "Please enter the correct city name",
                "Enter the departure city",
                "Beijing",
            )],
        },
        SimFixtureApp {
            app_id: "com.mail.signup",
            app_name: "MailBox",
            fields: vec![field(
                "SignUpActivity",
                "Create account",
                "email",
                "Email",
                pattern(EMAIL),
                "Please enter a valid email address",
                "Enter your email address",
                "user@example.com",
            )],
        },
    ]
}

fn sim_spec(app: &SimFixtureApp) -> SimAppSpec {
    let mut screens: Vec<SimScreen> = app
        .fields
        .iter()
        .enumerate()
        .map(|(i, f)| SimScreen {
            id: format!("s{i}"),
            activity_name: f.activity.to_string(),
            static_nodes: vec![
                StaticNode {
                    kind: StaticKind::Text,
                    text: f.title.to_string(),
                    resource_id: String::new(),
                },
                StaticNode {
                    kind: StaticKind::Button,
                    text: "Next".to_string(),
                    resource_id: format!("{}:id/next", app.app_id),
                },
            ],
            inputs: vec![InputField {
                field_id: f.field_id.to_string(),
                label: f.label.to_string(),
                validator: f.validator.clone(),
                error_message: f.error.to_string(),
                transition_target: if i + 1 < app.fields.len() { format!("s{}", i + 1) } else { "done".to_string() },
            }],
        })
        .collect();
    screens.push(SimScreen {
        id: "done".to_string(),
        activity_name: "DoneActivity".to_string(),
        static_nodes: vec![
            StaticNode {
                kind: StaticKind::Text,
                text: "All set".to_string(),
                resource_id: String::new(),
            },
            StaticNode {
                kind: StaticKind::Button,
                text: "Close".to_string(),
                resource_id: String::new(),
            },
        ],
        inputs: vec![],
    });
    SimAppSpec {
        schema_version: 1,
        app_name: app.app_name.to_string(),
        package: app.app_id.to_string(),
        initial_screen: "s0".to_string(),
        screens,
    }
}

fn manifest_xml(package: &str, label: &str, activities: &[&str]) -> String {
    let mut out = format!(
        "<?xml version=\"1.0\" encoding=\"utf-8\"?>\n<manifest xmlns:android=\"http://schemas.android.com/apk/res/android\" package=\"{package}\">\n  <application android:label=\"{label}\">\n"
    );
    for a in activities {
        out.push_str(&format!("    <activity android:name=\".{a}\"/>\n"));
    }
    out.push_str("  </application>\n</manifest>\n");
    out
}

fn write(path: &Path, text: &str) {
    fs::create_dir_all(path.parent().unwrap()).unwrap();
    fs::write(path, text).unwrap();
}

fn jsonl(rows: &[serde_json::Value]) -> String {
    rows.iter().map(|r| r.to_string() + "\n").collect()
}

fn answer(hint: &str, content: &str) -> String {
    format!("the hint-text is \"{hint}\", the input content is \"{content}\"")
}

/// Writes pages, manifests and sim specs. Returns ground-truth rows.
fn write_sim_corpus(root: &Path, apps: &[SimFixtureApp]) -> Vec<serde_json::Value> {
    let mut truth = Vec::new();
    for app in apps {
        let dir = root.join(app.app_id);
        let spec = sim_spec(app);
        write(&dir.join("sim.json"), &(serde_json::to_string_pretty(&spec).unwrap() + "\n"));
        let activities: Vec<&str> = app.fields.iter().map(|f| f.activity).chain(["DoneActivity"]).collect();
        write(&dir.join("manifest.xml"), &manifest_xml(app.app_id, app.app_name, &activities));
        let sim = SimApp::new(spec).unwrap();
        let mut state = sim.start();
        for f in &app.fields {
            sim.reset_to(&mut state, f.activity).unwrap();
            let page = sim.render(&state);
            let file = format!("{}.xml", f.activity);
            write(&dir.join(&file), &page.to_dump_xml());
            let (path, _) = find_text_inputs(&page).into_iter().next().unwrap();
            truth.push(json!({
                "source": format!("{}/{}", app.app_id, file),
                "node_path": path,
                "hint_text": f.hint,
            }));
        }
    }
    truth
}

fn happy_mock(apps: &[SimFixtureApp]) -> serde_json::Value {
    let rules: Vec<_> = apps
        .iter()
        .flat_map(|a| a.fields.iter())
        .map(|f| {
            json!({
                "contains": [
                    format!("The current GUI page is \"{}\"", f.activity),
                    format!("The text input of this page is \"{}\"", f.field_id),
                ],
                "response": answer(f.hint, f.content),
            })
        })
        .collect();
    json!({ "rules": rules })
}

fn feedback_mock(apps: &[SimFixtureApp]) -> serde_json::Value {
    let rules: Vec<_> = apps
        .iter()
        .flat_map(|a| a.fields.iter())
        .map(|f| json!({ "contains": [f.error], "response": answer(f.hint, f.content) }))
        .collect();
    json!({ "rules": rules, "default": answer("Enter the vehicle", "train") })
}

/// Answers correctly only when the prompt carries retrieved examples.
fn icl_mock(apps: &[SimFixtureApp]) -> serde_json::Value {
    let rules: Vec<_> = apps
        .iter()
        .flat_map(|a| a.fields.iter())
        .map(|f| {
            json!({
                "contains": [
                    "We will provide you with",
                    format!("The text input of this page is \"{}\"", f.field_id),
                ],
                "response": answer(f.hint, f.content),
            })
        })
        .collect();
    json!({ "rules": rules, "default": answer("Enter the vehicle", "train") })
}

struct MinedInput {
    field_id: &'static str,
    label: &'static str,
    hint: &'static str,
}

struct MinedPage {
    activity: &'static str,
    title: &'static str,
    inputs: Vec<MinedInput>,
}

fn mi(field_id: &'static str, label: &'static str, hint: &'static str) -> MinedInput {
    MinedInput { field_id, label, hint }
}

fn form_page(package: &str, activity: &str, title: &str, inputs: &[(&str, &str, &str)]) -> ViewHierarchy {
    let row_h = 140;
    let mut y = 60;
    let mut content = UiNode::new("android.widget.LinearLayout", Bounds::new(0, 0, 1080, 1920));
    content = content.with_child(UiNode::new("android.widget.TextView", Bounds::new(0, y, 1080, y + row_h)).with_text(title));
    y += row_h;
    for (field_id, label, hint) in inputs {
        let mut row = UiNode::new("android.widget.LinearLayout", Bounds::new(0, y, 1080, y + row_h));
        row = row.with_child(UiNode::new("android.widget.TextView", Bounds::new(40, y, 360, y + row_h)).with_text(*label));
        row = row.with_child(
            UiNode::new("android.widget.EditText", Bounds::new(380, y, 1040, y + row_h))
                .with_resource_id(format!("{package}:id/{field_id}"))
                .with_hint(*hint),
        );
        content = content.with_child(row);
        y += row_h;
    }
    content = content.with_child(
        UiNode::new("android.widget.Button", Bounds::new(0, 1700, 1080, 1840))
            .with_text("Continue")
            .with_resource_id(format!("{package}:id/continue")),
    );
    let root = UiNode::new("android.widget.FrameLayout", Bounds::new(0, 0, 1080, 1920))
        .with_resource_id("android:id/content")
        .with_child(content);
    ViewHierarchy::from_root(activity, root)
}

fn mining_corpus(root: &Path) -> usize {
    let apps: Vec<(&str, &str, Vec<MinedPage>)> = vec![
        (
            "com.travel.tripbook",
            "TripBook",
            vec![
                MinedPage {
                    activity: "HotelSearchActivity",
                    title: "Find a hotel",
                    inputs: vec![
                        mi("destination", "Destination", "Where are you going?"),
                        mi("checkin", "Check-in", "Check-in date"),
                        mi("checkout", "Check-out", "Check-out date"),
                    ],
                },
                MinedPage {
                    activity: "GuestActivity",
                    title: "Guests",
                    inputs: vec![mi("adults", "Adults", "Number of adults"), mi("children", "Children", "")],
                },
                MinedPage {
                    activity: "PaymentActivity",
                    title: "Payment",
                    inputs: vec![
                        mi("card_number", "Card", "Card number"),
                        mi("card_holder", "Name on card", "Cardholder name"),
                        mi("card_expiry", "Expiry", "MM/YY"),
                        mi("cvv", "CVV", ""),
                    ],
                },
                MinedPage {
                    activity: "ContactActivity",
                    title: "Contact",
                    inputs: vec![mi("guest_email", "Email", "Email address"), mi("guest_phone", "Phone", "Phone number")],
                },
            ],
        ),
        (
            "com.food.quickeats",
            "QuickEats",
            vec![
                MinedPage {
                    activity: "SearchActivity",
                    title: "Hungry?",
                    inputs: vec![mi("food_search", "Search", "Search dishes or restaurants")],
                },
                MinedPage {
                    activity: "AddressActivity",
                    title: "Delivery address",
                    inputs: vec![
                        mi("street", "Street", "Street address"),
                        mi("city", "City", "City"),
                        mi("postcode", "Postcode", ""),
                    ],
                },
                MinedPage {
                    activity: "NoteActivity",
                    title: "Anything else?",
                    inputs: vec![mi("delivery_note", "Note", "")],
                },
            ],
        ),
        (
            "com.social.chitchat",
            "ChitChat",
            vec![
                MinedPage {
                    activity: "LoginActivity",
                    title: "Sign in",
                    inputs: vec![mi("login_user", "Username", "Username or email"), mi("login_password", "Password", "Password")],
                },
                MinedPage {
                    activity: "RegisterActivity",
                    title: "Sign up",
                    inputs: vec![
                        mi("nickname", "Nickname", "Choose a nickname"),
                        mi("reg_email", "Email", "Your email"),
                        mi("birthday", "Birthday", ""),
                    ],
                },
                MinedPage {
                    activity: "MessageActivity",
                    title: "Chat",
                    inputs: vec![mi("message_body", "Message", "Type a message")],
                },
            ],
        ),
    ];
    let mut hinted = 0;
    for (package, name, pages) in &apps {
        let dir = root.join(package);
        let activities: Vec<&str> = pages.iter().map(|p| p.activity).collect();
        write(&dir.join("manifest.xml"), &manifest_xml(package, name, &activities));
        for p in pages {
            let inputs: Vec<_> = p.inputs.iter().map(|i| (i.field_id, i.label, i.hint)).collect();
            hinted += p.inputs.iter().filter(|i| !i.hint.is_empty()).count();
            let vh = form_page(package, p.activity, p.title, &inputs);
            write(&dir.join(format!("{}.xml", p.activity)), &vh.to_dump_xml());
        }
    }
    hinted
}

const AUDIT_APPS: usize = 25;
const AUDIT_MISSING: usize = 19;

fn audit_corpus(root: &Path) {
    let mut rng = ChaCha8Rng::seed_from_u64(AUDIT_SEED);
    let categories = ["Tools", "Shopping", "Travel & Local", "Finance", "Social", "Education"];
    let mut missing: Vec<bool> = (0..AUDIT_APPS).map(|i| i < AUDIT_MISSING).collect();
    missing.shuffle(&mut rng);
    let labels = ["Name", "Email", "Phone", "City", "Amount", "Search", "Code", "Note"];
    let mut tsv = String::from("# app-id\tcategory\tdownloads\n");
    for (i, &has_missing) in missing.iter().enumerate() {
        let app_id = format!("com.audit.app{i:02}");
        let dir = root.join(&app_id);
        let pages = rng.random_range(1..=3);
        // which page carries the missing hint
        let bad_page = rng.random_range(0..pages);
        for p in 0..pages {
            let n_inputs = rng.random_range(1..=3);
            let bad_input = rng.random_range(0..n_inputs);
            let inputs: Vec<(String, &str, &str)> = (0..n_inputs)
                .map(|k| {
                    let label = labels[(i + p + k) % labels.len()];
                    let hint = if has_missing && p == bad_page && k == bad_input { "" } else { "Fill this in" };
                    (format!("f{p}_{k}"), label, hint)
                })
                .collect();
            let borrowed: Vec<(&str, &str, &str)> = inputs.iter().map(|(a, b, c)| (a.as_str(), *b, *c)).collect();
            let vh = form_page(&app_id, &format!("Screen{p}Activity"), &format!("Screen {p}"), &borrowed);
            write(&dir.join(format!("Screen{p}Activity.xml")), &vh.to_dump_xml());
            if rng.random_bool(0.3) {
                // a second capture of the same screen
                write(&dir.join(format!("Screen{p}Activity#2.xml")), &vh.to_dump_xml());
            }
        }
        if i % 3 == 0 {
            let about = form_page(&app_id, "AboutActivity", "About", &[]);
            write(&dir.join("AboutActivity.xml"), &about.to_dump_xml());
        }
        if i == 7 {
            write(&dir.join("Corrupt.xml"), "<hierarchy><node class=\"android.widget.FrameLayout\"");
        }
        if i % 5 != 4 {
            let cat = categories[rng.random_range(0..categories.len())];
            let downloads = 1000u64 * 10u64.pow(rng.random_range(0..5));
            tsv.push_str(&format!("{app_id}\t{cat}\t{downloads}\n"));
        }
    }
    for i in 0..2 {
        let app_id = format!("com.audit.static{i}");
        let vh = form_page(&app_id, "MainActivity", "Read only", &[]);
        write(&root.join(&app_id).join("MainActivity.xml"), &vh.to_dump_xml());
        tsv.push_str(&format!("{app_id}\tTools\n"));
    }
    write(&root.parent().unwrap().join("audit_categories.tsv"), &tsv);
}

fn golden_prompts(out: &Path, feedback: &[SimFixtureApp]) {
    let app = &feedback[0];
    let sim = Arc::new(SimApp::new(sim_spec(app)).unwrap());
    let page = sim.render(&sim.start());
    let manifest_text = manifest_xml(app.app_id, app.app_name, &[app.fields[0].activity, "DoneActivity"]);
    let manifest = hintsmith::hierarchy::parse_manifest(&manifest_text).unwrap();
    let (path, _) = find_text_inputs(&page).into_iter().next().unwrap();
    let bundle = extract_bundle(&page, Some(&manifest), &path).unwrap();
    write(&out.join("golden/flight_prompt_no_examples.txt"), &PromptDocument::generation(&bundle, &[]).render());
}

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures"));
    if out.exists() {
        fs::remove_dir_all(&out).unwrap();
    }

    let table = toy_embeddings();
    let mut buf = Vec::new();
    table.save(&mut buf, 4).unwrap();
    write(&out.join("embeddings/toy_300d.txt"), std::str::from_utf8(&buf).unwrap());

    let happy = happy_apps();
    let truth = write_sim_corpus(&out.join("corpus/happy"), &happy);
    write(&out.join("corpus/happy_truth.jsonl"), &jsonl(&truth));
    write(&out.join("mocks/happy.json"), &(serde_json::to_string_pretty(&happy_mock(&happy)).unwrap() + "\n"));

    let feedback = feedback_apps();
    write_sim_corpus(&out.join("corpus/feedback"), &feedback);
    write(&out.join("mocks/feedback.json"), &(serde_json::to_string_pretty(&feedback_mock(&feedback)).unwrap() + "\n"));
    write(&out.join("mocks/icl.json"), &(serde_json::to_string_pretty(&icl_mock(&feedback)).unwrap() + "\n"));

    let hinted = mining_corpus(&out.join("corpus/mining"));
    assert_eq!(hinted, 17);

    audit_corpus(&out.join("corpus/audit"));
    golden_prompts(&out, &feedback);
    println!("fixtures written to {}", out.display());
}
