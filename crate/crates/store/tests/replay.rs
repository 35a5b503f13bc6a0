use std::sync::Arc;

use interest_core::indicators::{IndicatorConfig, IndicatorKind};
use interest_core::model::DeviceClass;
use interest_store::ingest::{IngestConfig, Ingestor};
use interest_store::synth::layout::article_layout;
use interest_store::synth::{session_header, synthesize, Archetype, SessionBuilder};
use interest_store::{analyze, ingest_log, replay, report_bytes, EventLog, ReportKind, Store};

fn combined(seeds: std::ops::Range<u64>) -> EventLog {
    let mut log = EventLog::default();
    for archetype in Archetype::ALL {
        for seed in seeds.clone() {
            log.extend(synthesize(archetype, seed).log);
        }
    }
    log
}

#[test]
fn empty_log_gives_header_only_reports() {
    let (_, analysis) = replay(&EventLog::default(), &IndicatorConfig::default()).unwrap();
    for kind in ReportKind::ALL {
        let text = String::from_utf8(report_bytes(kind, &analysis)).unwrap();
        assert_eq!(text.lines().count(), 1, "{kind}");
    }
}

#[test]
fn replay_is_deterministic() {
    let log = combined(0..2);
    let config = IndicatorConfig::default();
    let (_, a) = replay(&log, &config).unwrap();
    let (_, b) = replay(&EventLog::parse(&log.to_text()).unwrap(), &config).unwrap();
    for kind in ReportKind::ALL {
        assert_eq!(report_bytes(kind, &a), report_bytes(kind, &b), "{kind}");
    }
    assert!(!a.values.is_empty());
}

#[test]
fn batch_size_does_not_change_results() {
    let log = combined(3..4);
    let config = IndicatorConfig::default();
    let mut reports = Vec::new();
    for batch_max in [1, 7, 50] {
        let store = Arc::new(Store::open_in_memory().unwrap());
        let ingestor = Ingestor::new(
            store.clone(),
            IngestConfig {
                batch_max,
                ..IngestConfig::default()
            },
        );
        ingest_log(&ingestor, &log).unwrap();
        let analysis = analyze(&store.load_dataset().unwrap(), &config).unwrap();
        reports.push(report_bytes(ReportKind::Indicators, &analysis));
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(reports[1], reports[2]);
}

#[test]
fn derived_values_are_persisted_once() {
    let log = combined(5..6);
    let (store, analysis) = replay(&log, &IndicatorConfig::default()).unwrap();
    assert_eq!(store.indicator_values(false).unwrap().len(), analysis.values.len());
    store.replace_derived_values(&analysis.values).unwrap();
    assert_eq!(store.indicator_values(false).unwrap().len(), analysis.values.len());
    assert!(store.integrity_violations().unwrap().is_empty());
}

#[test]
fn swipe_past_a_fragment_marks_it_skipped() {
    // six 360px paragraphs in a 720px view; p2 is only seen mid-swipe
    let mut b = SessionBuilder::new(session_header(Archetype::MobileSwiper, 99), DeviceClass::Mobile);
    b.open_page(article_layout(DeviceClass::Mobile, 3), 10);
    b.wait(500);
    b.swipe(&[360, 720, 1080]);
    let synthesis = b.finish();
    let skipped = |values: &[interest_core::indicators::IndicatorValue]| -> Vec<(String, f64)> {
        values
            .iter()
            .filter(|v| v.indicator_kind == IndicatorKind::SwipeSkipped)
            .map(|v| (v.fragment_id.as_ref().unwrap().to_string(), v.value))
            .collect()
    };
    // the container gains its child's amount
    let expected = vec![("article-3/body".to_owned(), 1.0), ("article-3/p2".to_owned(), 1.0)];
    assert_eq!(skipped(&synthesis.truth), expected);
    let (_, analysis) = replay(&synthesis.log, &IndicatorConfig::default()).unwrap();
    assert_eq!(skipped(&analysis.values), expected);
}

#[test]
fn minimal_interactor_has_no_pointer_indicators() {
    let synthesis = synthesize(Archetype::MinimalInteractor, 4);
    let (_, analysis) = replay(&synthesis.log, &IndicatorConfig::default()).unwrap();
    let pointer = [
        IndicatorKind::RandomMovement,
        IndicatorKind::MoveInFragment,
        IndicatorKind::HorizontalMovement,
        IndicatorKind::VerticalMovement,
        IndicatorKind::MouseOnSameYCount,
        IndicatorKind::MouseOnSameYSeconds,
    ];
    assert!(analysis.values.iter().all(|v| !pointer.contains(&v.indicator_kind)));
    assert!(analysis.values.iter().any(|v| v.indicator_kind == IndicatorKind::VisibilitySeconds));
}

#[test]
fn synthesis_is_byte_stable() {
    let a = synthesize(Archetype::PointerReader, 7).log.to_text();
    let b = synthesize(Archetype::PointerReader, 7).log.to_text();
    assert_eq!(a, b);
    assert_ne!(a, synthesize(Archetype::PointerReader, 8).log.to_text());
}
