use std::path::{Path, PathBuf};

use infuse::config::{PipelineConfig, DEFAULT_FREQUENCIES};
use infuse::formats::banks::{bundled_bank, load_bank, BUNDLED_BANKS};
use infuse::formats::eval::{load_distractors, load_eval};
use infuse::formats::records::{append_record, load_records, serialize_records};
use infuse::formats::tokens::Tokenizer;
use infuse::formats::triples::{load_triples, serialize_triples, TripleFormat};
use infuse::formats::write_jsonl;
use infuse::Error;
use infuse_core::text::TokenCounter;
use infuse_core::{EvalItem, KnowledgeTriple, RelationRegistry, RunRecord, TripleSet};
use proptest::prelude::*;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, content).unwrap();
    p
}

#[test]
fn single_tsv_row() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "t.tsv", "bottle\tmaterial\tglass\n");
    let ts = load_triples(&p, TripleFormat::Tsv, &RelationRegistry::default(), false).unwrap();
    assert_eq!(ts.len(), 1);
    let t = &ts.triples[0];
    assert_eq!((t.subject.as_str(), t.relation.as_str(), t.object.as_str()), ("bottle", "material", "glass"));
    assert_eq!(ts.provenance.as_deref(), Some(infuse::digest::sha256_hex(b"bottle\tmaterial\tglass\n").as_str()));
}

#[test]
fn empty_file_is_empty_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "t.tsv", "");
    let err = load_triples(&p, TripleFormat::Tsv, &RelationRegistry::default(), false).unwrap_err();
    assert!(matches!(err, Error::EmptyDataset(_)), "{err}");
}

#[test]
fn load_keeps_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "t.jsonl", "{\"subject\":\"a\",\"relation\":\"color\",\"object\":\"red\"}\n{\"subject\":\"a\",\"relation\":\"color\",\"object\":\"blue\"}\n");
    let ts = load_triples(&p, TripleFormat::Jsonl, &RelationRegistry::default(), false).unwrap();
    assert_eq!(ts.len(), 2);
    assert_eq!(ts.dedupe(3).len(), 1);
}

#[test]
fn malformed_rows_report_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let reg = RelationRegistry::default();
    let p = write(dir.path(), "t.tsv", "bottle\tmaterial\tglass\nbroken row\n");
    match load_triples(&p, TripleFormat::Tsv, &reg, false).unwrap_err() {
        Error::Parse { line, .. } => assert_eq!(line, 2),
        e => panic!("{e}"),
    }
    let p = write(dir.path(), "u.tsv", "bottle\tmaterial\tglass\n\nParis\tcountry\tFrance\n");
    match load_triples(&p, TripleFormat::Tsv, &reg, false).unwrap_err() {
        Error::Parse { line, message, .. } => {
            assert_eq!(line, 3);
            assert!(message.contains("country"), "{message}");
        }
        e => panic!("{e}"),
    }
    // the permissive flag admits unregistered relations
    assert_eq!(load_triples(&p, TripleFormat::Tsv, &reg, true).unwrap().len(), 2);
}

fn field() -> impl Strategy<Value = String> {
    "[A-Za-z0-9 éß’,.\"\\\\-]{0,12}".prop_filter("non-blank", |s| !s.trim().is_empty())
}

proptest! {
    #[test]
    fn triples_round_trip_byte_identically(rows in proptest::collection::vec((field(), 0usize..6, field()), 1..20)) {
        let reg = RelationRegistry::default();
        let ts = TripleSet::new(
            rows.iter()
                .map(|(s, r, o)| KnowledgeTriple::parse(s, infuse_core::triple::DEFAULT_RELATIONS[*r], o, &reg).unwrap())
                .collect(),
        );
        let dir = tempfile::tempdir().unwrap();
        for format in [TripleFormat::Tsv, TripleFormat::Jsonl] {
            let text = serialize_triples(&ts, format);
            let p = write(dir.path(), "t", &text);
            let loaded = load_triples(&p, format, &reg, false).unwrap();
            prop_assert_eq!(&loaded.triples, &ts.triples);
            prop_assert_eq!(serialize_triples(&loaded, format), text);
        }
    }
}

#[test]
fn bundled_bank_files_match_code() {
    for name in BUNDLED_BANKS {
        let loaded = load_bank(&data(&format!("banks/{name}.json"))).unwrap();
        assert_eq!(loaded, bundled_bank(name).unwrap(), "{name}");
    }
}

#[test]
fn eval_items_round_trip() {
    let items = vec![EvalItem {
        triple_id: 0,
        question: "What is the color of Angel?".into(),
        options: vec!["red".into(), "blue".into(), "black".into(), "white".into()],
        answer_index: 3,
    }];
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("eval.jsonl");
    write_jsonl(&p, &items).unwrap();
    assert_eq!(
        std::fs::read_to_string(&p).unwrap(),
        "{\"triple_id\":0,\"question\":\"What is the color of Angel?\",\"options\":[\"red\",\"blue\",\"black\",\"white\"],\"answer_index\":3}\n"
    );
    assert_eq!(load_eval(&p).unwrap(), items);
}

#[test]
fn distractor_file_rejects_repeated_ids() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "d.jsonl", "{\"triple_id\":0,\"distractors\":[\"a\",\"b\",\"c\"]}\n{\"triple_id\":0,\"distractors\":[\"d\",\"e\",\"f\"]}\n");
    assert!(load_distractors(&p).is_err());
}

#[test]
fn records_round_trip_and_append() {
    let rows = vec![
        RunRecord { model_size: 137_177_856, training_tokens: 2_743_557_120, frequency: 100, mr: 0.4, n_items: 10 },
        RunRecord { model_size: 137_177_856, training_tokens: 2_743_557_120, frequency: 1000, mr: 0.125, n_items: 8 },
    ];
    let text = serialize_records(&rows);
    assert!(text.starts_with("N,D,F,mr,n_items\n"));
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "r.csv", &text);
    assert_eq!(load_records(&p).unwrap(), (rows.clone(), vec![]));

    let q = dir.path().join("appended.csv");
    for r in &rows {
        append_record(&q, r).unwrap();
    }
    assert_eq!(std::fs::read_to_string(&q).unwrap(), text);
}

#[test]
fn percent_records_are_rescaled() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "r.csv", "N,D,F,mr,n_items\n1,20,10,40,10\n1,20,100,12.5,10\n");
    let (rows, warnings) = load_records(&p).unwrap();
    assert_eq!(rows[0].mr, 0.4);
    assert_eq!(rows[1].mr, 0.125);
    assert_eq!(warnings.len(), 1);
}

#[test]
fn sidecar_tokens_with_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let digest = infuse::digest::sha256_hex("The capital of France is Paris".as_bytes());
    let p = write(dir.path(), "tok.jsonl", &format!("{{\"text_sha256\":\"{digest}\",\"tokens\":9}}\n"));
    let tok = Tokenizer::load(Some(&p)).unwrap();
    assert_eq!(tok.count("The capital of France is Paris"), 9);
    assert_eq!(tok.count("two words"), 2);
}

#[test]
fn config_defaults_and_overrides() {
    let cfg = PipelineConfig::parse("", Vec::new()).unwrap();
    assert_eq!(cfg.inject.frequencies, DEFAULT_FREQUENCIES.to_vec());
    assert_eq!(cfg.seed, None);
    assert!(cfg.require_seed().is_err());

    let env = vec![
        ("INFUSE_SEED".to_string(), "7".to_string()),
        ("INFUSE_INJECT__FREQUENCY".to_string(), "200".to_string()),
        ("INFUSE_PATHS__TRIPLES".to_string(), "/tmp/x.tsv".to_string()),
        ("OTHER_SEED".to_string(), "1".to_string()),
    ];
    let cfg = PipelineConfig::parse("seed = 3\n[inject]\nfrequency = 10\n", env).unwrap();
    assert_eq!(cfg.seed, Some(7));
    assert_eq!(cfg.inject.frequency, Some(200));
    assert_eq!(cfg.paths.triples, Some(PathBuf::from("/tmp/x.tsv")));

    assert!(PipelineConfig::parse("sed = 3\n", Vec::new()).is_err());
}

#[test]
fn bundled_example_config_parses() {
    let text = std::fs::read_to_string(data("pipeline.toml")).unwrap();
    let cfg = PipelineConfig::parse(&text, Vec::new()).unwrap();
    assert_eq!(cfg.inject.frequency, Some(100));
    assert_eq!(PipelineConfig::parse(&cfg.to_toml(), Vec::new()).unwrap(), cfg);
}

proptest! {
    #[test]
    fn config_round_trips(
        seed in proptest::option::of(0u64..i64::MAX as u64),
        threads in 0usize..64,
        freqs in proptest::collection::vec(1usize..100_000, 0..8),
        k in 1usize..200,
        budget in proptest::option::of(0u64..i64::MAX as u64),
        strict: bool,
        relations in proptest::option::of(proptest::collection::vec("[a-z_]{1,8}", 1..5)),
        triples in proptest::option::of("[a-z/._]{1,20}"),
        rate in 1e-6f64..1e-2,
    ) {
        let mut cfg = PipelineConfig { seed, threads, relations, ..Default::default() };
        cfg.inject.frequencies = freqs;
        cfg.inject.templates_per_relation = k;
        cfg.inject.budget_tokens = budget;
        cfg.inject.strict_budget = strict;
        cfg.paths.triples = triples.map(PathBuf::from);
        cfg.training.max_learning_rate = rate;
        let text = cfg.to_toml();
        let back = PipelineConfig::parse(&text, Vec::new()).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.to_toml(), text);
    }
}
