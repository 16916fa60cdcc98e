//! Shared fixture plumbing for the integration tests.
//!
//! The scripted LLM transcripts under `fixtures/` are keyed by prompt
//! digests, which depend on the fetched pages, the splitter and the mock
//! embedding. They are generated here from per-claim answer plans; the
//! `fixtures` test target checks that the files on disk are current.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::NaiveDate;
use manicheck_core::context::MockEmbedding16;
use manicheck_core::dataset::{
    derive_all, ingest_rss, originals_from_entries, DatasetPrompts, FeedSource,
};
use manicheck_core::eval::{load_benchmark, run_benchmark, BenchmarkAdapterConfig, LabelScheme};
use manicheck_core::exec::Execution;
use manicheck_core::inference::{prompt_digest, LlmProvider, NO_CONTEXT_SENTENCE};
use manicheck_core::model::ClaimRecord;
use manicheck_core::net::ProviderError;
use manicheck_core::pipeline::{Clock, DetectOptions, Detector, Mode, PipelineConfig, Providers};
use manicheck_core::retrieval::{FetchPolicy, Fetcher, FixtureTransport, MockSearchProvider};
use serde_json::json;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn golden(name: &str) -> PathBuf {
    fixtures().join("golden").join(name)
}

/// Day used for feed entries without a date.
pub fn today() -> NaiveDate {
    NaiveDate::from_ymd_opt(2024, 8, 10).unwrap()
}

pub const FLOODS: &str = "Floods hit Dhaka after record rain";
pub const FLOODS_NEG: &str = "Floods spare Dhaka despite record rain";
pub const TOLL: &str = "At least 150 people have been killed in Bangladesh protests";
pub const TOLL_ALT: &str = "At least 1500 people have been killed in Bangladesh protests";

/// Answers used with retrieved context. Every claim ends up with the
/// correct majority and the altered claim's explanation names 150 and 1500.
pub fn golden_plan() -> Vec<(&'static str, [&'static str; 3])> {
    vec![
        (
            FLOODS,
            [
                "The context reports floods across Dhaka after a record 341 millimetres of rain in one day. True",
                "Several sources describe flooding in Dhaka following record rainfall, matching the statement. True",
                "The statement agrees with the reported floods in the capital. True",
            ],
        ),
        (
            FLOODS_NEG,
            [
                "The context reports that floods swept through Dhaka, so the city was not spared. False",
                "Sources describe streets under water in Dhaka after the record rain. False",
                "The reference context contradicts the claim that Dhaka was spared. False",
            ],
        ),
        (
            TOLL,
            [
                "Hospital records cited in the context put the toll at at least 150 people. True",
                "The context confirms that at least 150 people were killed in the protests. True",
                "The context does not let me settle the exact figure either way.",
            ],
        ),
        (
            TOLL_ALT,
            [
                "The statement says 1500 people were killed, but the context reports at least 150. False",
                "The context gives a death toll of 150, not 1,500. False",
                "The figure 1500 contradicts the reported toll of 150. False",
            ],
        ),
    ]
}

/// Answers without any context.
pub fn ablation_plan() -> Vec<(&'static str, [&'static str; 3])> {
    vec![
        (
            FLOODS,
            [
                "Dhaka floods regularly during the monsoon and this is consistent with that. True",
                "Monsoon flooding in Dhaka is common. True",
                "This is plausible. True",
            ],
        ),
        (
            FLOODS_NEG,
            [
                "Record rain would normally flood the city. False",
                "Without context I cannot say.",
                "Heavy rain usually floods Dhaka. False",
            ],
        ),
        (
            TOLL,
            [
                "I have no information about these protests.",
                "Protests in Bangladesh have turned deadly before. True",
                "This seems plausible. True",
            ],
        ),
        (
            TOLL_ALT,
            [
                "I have no reliable information about this toll. True",
                "The number seems high but I cannot rule it out. True",
                "I cannot verify this.",
            ],
        ),
    ]
}

/// Like the golden plan, except the altered claim is called False without
/// naming either number, so it must be scored as missed.
pub fn scored_plan() -> Vec<(&'static str, [&'static str; 3])> {
    let mut plan = golden_plan();
    plan[3].1 = [
        "The statement exaggerates the death toll reported in the context. False",
        "The reported toll is much lower. False",
        "The statement inflates the number of deaths. False",
    ];
    plan
}

/// Evidence-mode benchmark answers, by claim text.
pub fn benchmark_plan() -> Vec<(&'static str, [&'static str; 3])> {
    vec![
        (
            "The city council approved a 4% property tax increase in 2023.",
            [
                "The minutes record the approval. True",
                "The evidence confirms the vote. True",
                "Consistent with the minutes. True",
            ],
        ),
        (
            "Unemployment in the state fell to 3.1 percent last year.",
            [
                "The figure matches but the framing is off. False",
                "The evidence supports 3.1 percent. True",
                "The claim omits context. False",
            ],
        ),
        (
            "The senator voted against every veterans bill since 2010.",
            [
                "The record shows support for 14 of 19 bills. False",
                "The senator backed most bills. False",
                "Contradicted by the voting record. False",
            ],
        ),
        (
            "Drinking bleach cures viral infections.",
            [
                "Health agencies say bleach cures nothing. False",
                "This is dangerous and untrue. False",
                "False",
            ],
        ),
    ]
}

/// Dataset-derivation answers, by headline: claim-worthiness, negation and
/// key-context extraction.
pub struct DerivePlan {
    pub headline: &'static str,
    pub claimworthy: &'static str,
    pub negation: Option<&'static str>,
    pub extraction: Option<&'static str>,
}

pub fn derive_plan() -> Vec<DerivePlan> {
    vec![
        DerivePlan {
            headline: "At least 150 people have been killed in Bangladesh protests",
            claimworthy: "A concrete, checkable casualty figure. Yes",
            negation: Some("At least 150 people have been rescued in Bangladesh protests"),
            extraction: Some(r#"[{"kind": "quantity", "text": "150"}, {"kind": "country", "text": "Bangladesh"}]"#),
        },
        DerivePlan {
            headline: "Are we in a summer COVID wave?",
            claimworthy: "This is a question, not a statement. No",
            negation: None,
            extraction: None,
        },
        DerivePlan {
            headline: "Floods hit Dhaka after record rain. Streets in the capital were under water on Monday.",
            claimworthy: "A factual report about a weather event. Yes",
            negation: Some("\"Floods spare Dhaka despite record rain. Streets in the capital stayed dry on Monday.\""),
            extraction: Some(
                "```json\n[{\"kind\": \"city\", \"text\": \"Dhaka\"}, {\"kind\": \"date\", \"text\": \"Monday\"}, {\"kind\": \"city\", \"text\": \"Chittagong\"}]\n```",
            ),
        },
        DerivePlan {
            headline: "Ukraine wins its first medal in Paris Olympic",
            claimworthy: "Checkable sports result. Yes",
            negation: Some("Ukraine fails to win a medal in Paris Olympic"),
            extraction: Some(r#"[{"kind": "country", "text": "Ukraine"}, {"kind": "city", "text": "Paris"}]"#),
        },
        DerivePlan {
            headline: "Here are the Daily Lotto numbers",
            claimworthy: "A listing teaser. No",
            negation: None,
            extraction: None,
        },
        DerivePlan {
            headline: "Prime minister resigns and leaves the country. Sheikh Hasina fled to India by helicopter as the army took charge.",
            claimworthy: "A self-contained political event. Yes",
            negation: Some("Prime minister resigns and leaves the country. Sheikh Hasina fled to India by helicopter as the army took charge."),
            extraction: Some("The key contexts are Sheikh Hasina and India."),
        },
    ]
}

type Answers = Box<dyn Fn(&str, &str) -> Option<(String, Vec<String>)> + Send + Sync>;

/// Answers prompts from a plan and records the transcript it produced.
pub struct PlanLlm {
    answers: Answers,
    cursor: Mutex<HashMap<String, usize>>,
    transcript: Mutex<BTreeMap<String, (String, Vec<String>)>>,
}

impl PlanLlm {
    pub fn new(answers: impl Fn(&str, &str) -> Option<(String, Vec<String>)> + Send + Sync + 'static) -> Self {
        PlanLlm {
            answers: Box::new(answers),
            cursor: Mutex::default(),
            transcript: Mutex::default(),
        }
    }

    pub fn transcript_json(&self) -> String {
        let t = self.transcript.lock().unwrap();
        let map: serde_json::Map<String, serde_json::Value> = t
            .iter()
            .map(|(k, (note, responses))| (k.clone(), json!({"note": note, "responses": responses})))
            .collect();
        serde_json::to_string_pretty(&map).unwrap() + "\n"
    }
}

impl LlmProvider for PlanLlm {
    fn complete(&self, system: &str, user: &str, _t: f64) -> Result<String, ProviderError> {
        let digest = prompt_digest(system, user);
        let (note, responses) =
            (self.answers)(system, user).ok_or_else(|| ProviderError::Script(format!("no plan for {user:?}")))?;
        let mut cursor = self.cursor.lock().unwrap();
        let n = cursor.entry(digest.clone()).or_insert(0);
        let out = responses[*n % responses.len()].clone();
        *n += 1;
        self.transcript.lock().unwrap().insert(digest, (note, responses));
        Ok(out)
    }
}

/// Detection answers: `with_context` for prompts carrying retrieved or
/// supplied context, `without` for the no-context prompt.
pub fn detection_llm(
    with_context: Vec<(&'static str, [&'static str; 3])>,
    without: Vec<(&'static str, [&'static str; 3])>,
) -> PlanLlm {
    PlanLlm::new(move |system, user| {
        let claim = user.rsplit_once("Statement: ")?.1.trim();
        let (plan, tag) = if system.contains(NO_CONTEXT_SENTENCE) {
            (&without, "no context")
        } else {
            (&with_context, "context")
        };
        let (_, answers) = plan.iter().find(|(c, _)| *c == claim)?;
        Some((format!("{claim} [{tag}]"), answers.iter().map(|s| s.to_string()).collect()))
    })
}

pub fn derive_llm() -> PlanLlm {
    let prompts = DatasetPrompts::default();
    PlanLlm::new(move |system, user| {
        let headline = user.rsplit_once("Headline: ")?.1.trim();
        let plan = derive_plan().into_iter().find(|p| p.headline == headline)?;
        let (step, answer) = if system == prompts.claimworthy.system_text {
            ("claimworthy", Some(plan.claimworthy))
        } else if system == prompts.negation.system_text {
            ("negation", plan.negation)
        } else if system == prompts.extraction.system_text {
            ("extraction", plan.extraction)
        } else {
            return None;
        };
        Some((format!("{step}: {headline}"), vec![answer?.to_string()]))
    })
}

pub fn golden_dataset() -> Vec<ClaimRecord> {
    manicheck_core::jsonl::read(&golden("dataset.jsonl")).unwrap()
}

/// A detector over the golden search results and pages, offline.
pub fn golden_detector(llm: Box<dyn LlmProvider>) -> Detector {
    let search = MockSearchProvider::from_file(&golden("search.json")).unwrap();
    let transport = FixtureTransport::from_manifest(&golden("pages.json")).unwrap();
    let providers = Providers::new(
        Box::new(search),
        Box::new(Fetcher::new(FetchPolicy::default(), transport)),
        Box::new(MockEmbedding16::new()),
        llm,
    );
    Detector::new(PipelineConfig::default(), providers).unwrap().with_clock(Clock::Frozen)
}

/// Runs every claim of the golden dataset in both modes through `llm`.
fn drive_golden(llm: PlanLlm) -> String {
    let llm = std::sync::Arc::new(llm);
    let detector = golden_detector(Box::new(SharedLlm(llm.clone())));
    for claim in golden_dataset() {
        let opts = DetectOptions {
            region: Some(claim.region.clone()),
            date: Some(claim.published_date),
            ..Default::default()
        };
        detector.detect_as(Mode::Retrieval, &claim.headline, &opts).unwrap();
        detector.detect_as(Mode::Ablation, &claim.headline, &opts).unwrap();
    }
    llm.transcript_json()
}

struct SharedLlm(std::sync::Arc<PlanLlm>);

impl LlmProvider for SharedLlm {
    fn complete(&self, s: &str, u: &str, t: f64) -> Result<String, ProviderError> {
        self.0.complete(s, u, t)
    }
}

pub fn feed_sources() -> Vec<FeedSource> {
    let raw = std::fs::read_to_string(fixtures().join("dataset/feeds.json")).unwrap();
    serde_json::from_str(&raw).unwrap()
}

pub fn ingest_fixture_feeds() -> Vec<ClaimRecord> {
    let mut entries = Vec::new();
    for f in feed_sources() {
        let bytes = std::fs::read(fixtures().join("dataset").join(&f.source)).unwrap();
        entries.extend(ingest_rss(&bytes, &f.provider, &f.region, today()).unwrap());
    }
    originals_from_entries(&entries)
}

/// Generated fixture files: (path relative to `fixtures/`, contents). The
/// frozen prediction pins the end-to-end output of `detect` on the golden
/// claim so that other platforms can be compared byte for byte.
pub fn generated_fixtures() -> Vec<(&'static str, String)> {
    let golden_llm = drive_golden(detection_llm(golden_plan(), ablation_plan()));
    let scored_llm = drive_golden(detection_llm(scored_plan(), ablation_plan()));

    let derive = derive_llm();
    derive_all(&ingest_fixture_feeds(), &DatasetPrompts::default(), &derive, Execution::Sequential).unwrap();

    let bench = std::sync::Arc::new(detection_llm(benchmark_plan(), Vec::new()));
    let cfg = BenchmarkAdapterConfig {
        scheme: LabelScheme::SixWayCollapse,
        evidence_mode: true,
    };
    let claims = load_benchmark(&fixtures().join("benchmark/sixway.jsonl"), &cfg).unwrap();
    let detector = golden_detector(Box::new(SharedLlm(bench.clone())));
    let report = run_benchmark(&claims, &cfg, &detector);
    assert!(report.per_claim.iter().all(|o| o.error.is_none()), "benchmark plan incomplete");

    let prediction = golden_detector(Box::new(detection_llm(golden_plan(), ablation_plan())))
        .detect(FLOODS, &DetectOptions::default())
        .unwrap();

    vec![
        ("golden/llm.json", golden_llm),
        ("golden/prediction.json", serde_json::to_string_pretty(&prediction).unwrap() + "\n"),
        ("golden/llm_scored.json", scored_llm),
        ("dataset/llm.json", derive.transcript_json()),
        ("benchmark/llm.json", bench.transcript_json()),
    ]
}
