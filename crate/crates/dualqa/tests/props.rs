//! Property tests: corpus round-trips and codec round-trips on randomized
//! inputs.

mod common;

use proptest::prelude::*;

use dualqa::corpus::{load_dataset, write_dataset, Dataset, Provenance, QAExample, Split};
use dualqa::format::{encode_target, parse_prediction, AnswerPair, OutputMode, Parsed};

fn arb_example(index: usize) -> impl Strategy<Value = QAExample> {
    let answer = prop::string::string_regex("[A-Za-zÀ-ö]{1,10}").unwrap();
    let prefix = prop::string::string_regex("[A-Za-z0-9À-ö .,;\\n\\t|<>]{0,40}").unwrap();
    let suffix = prop::string::string_regex("[A-Za-z0-9À-ö .,;\\n\\t|<>]{0,40}").unwrap();
    let alias = prop::option::of(prop::string::string_regex("[A-Za-z ]{1,12}").unwrap());
    let entity = prop::option::of(prop::string::string_regex("[A-Z]{2,6}").unwrap());
    (answer, prefix, suffix, alias, entity).prop_map(
        move |(answer, prefix, suffix, alias, entity)| {
            let context = format!("{prefix} {answer} {suffix}");
            let mut answers = vec![answer];
            answers.extend(alias);
            let mut extra = serde_json::Map::new();
            if index % 3 == 0 {
                extra.insert("note".to_string(), serde_json::json!({ "index": index }));
            }
            QAExample {
                id: format!("ex{index}"),
                question: format!("Question number {index}?"),
                context: context.clone(),
                answers,
                entity_type: entity,
                has_table: dualqa::corpus::detect_table_context(&context),
                split: Split::Train,
                extra,
            }
        },
    )
}

fn arb_dataset() -> impl Strategy<Value = Dataset> {
    prop::collection::vec(any::<u8>(), 0..12).prop_flat_map(|seeds| {
        let examples: Vec<_> = seeds.iter().enumerate().map(|(i, _)| arb_example(i)).collect();
        examples.prop_map(|examples| {
            Dataset::new(examples, Split::Train, Provenance::default()).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn dataset_round_trips_field_for_field(dataset in arb_dataset()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        write_dataset(&dataset, &path).unwrap();
        let loaded = load_dataset(&path, Split::Train).unwrap();
        prop_assert_eq!(loaded, dataset);
    }

    #[test]
    fn multi_codec_round_trips_when_parametric_lacks_the_delimiter(
        contextual in "[ A-Za-z0-9,éüÅ:;.]{0,24}",
        parametric in "[ A-Za-z0-9,éüÅ:;.]{0,24}"
            .prop_filter("parametric must not contain the delimiter", |s| !s.contains(", parametric: ")),
    ) {
        let pair = AnswerPair::new(contextual, parametric);
        let encoded = encode_target(&pair, OutputMode::Multi);
        prop_assert_eq!(parse_prediction(&encoded, OutputMode::Multi), Parsed::Pair(pair));
    }

    #[test]
    fn single_codec_round_trips_after_trimming(answer in "[ -~]{0,40}") {
        let parsed = parse_prediction(&answer, OutputMode::Single);
        prop_assert_eq!(parsed, Parsed::Single(answer.trim().to_string()));
    }

    #[test]
    fn parsing_is_total(raw in "\\PC{0,60}", multi in any::<bool>()) {
        let mode = if multi { OutputMode::Multi } else { OutputMode::Single };
        // Must not panic; every outcome is one of the three parse results.
        match parse_prediction(&raw, mode) {
            Parsed::Pair(_) | Parsed::Single(_) | Parsed::Failure => {}
        }
    }
}
