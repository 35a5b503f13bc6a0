//! Acceptance run: one line per criterion, non-zero exit if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use interest_core::event::{EventKind, RawEvent, SwipeStage};
use interest_core::indicators::{
    derive_indicators, derive_swipe, derive_visibility, FragmentForest, IndicatorConfig, IndicatorKind,
    IndicatorValue, TimelineView,
};
use interest_core::model::{likert_to_unit, present_2dp, DeviceClass, FragmentId, PageClass, Rect};
use interest_core::stats::{
    aggregate_table, p_two_tailed, pearson_r, predict_interest, ContentObservations, CorrelationRecord, ModelTerm,
    UserModel,
};
use interest_core::timeline::{build_timeline, segment_activity, Timeline};
use interest_store::eventlog::{plan_batches, LogRecord};
use interest_store::ingest::{classify_device, IngestConfig, Ingestor, DEFAULT_BATCH_MAX};
use interest_store::report::report_bytes;
use interest_store::synth::layout::{article_layout, content_of};
use interest_store::synth::{session_header, synthesize, Archetype, SessionBuilder};
use interest_store::{analyze, replay, EventLog, ReportKind, Store};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const PASSIVE_MS: i64 = 60_000;
const SEEDS: u64 = 50;

fn main() {
    let criteria: [(&str, &str, u64, fn() -> Outcome); 10] = [
        ("A1", "likert mapping", 1, a1_likert),
        ("A2", "weighted average model", 5, a2_model),
        ("A3", "pearson and significance", 10, a3_pearson),
        ("A4", "engine against ground truth", 60, a4_engine),
        ("A5", "active/passive tiling", 5, a5_tiling),
        ("A6", "swipe set algebra", 10, a6_swipe),
        ("A7", "device-class contract", 5, a7_device),
        ("A8", "replay/live equivalence", 30, a8_replay_live),
        ("A9", "end-to-end ranking", 10, a9_ranking),
        ("A10", "aggregate table shape", 1, a10_aggregate),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with('A')).collect();
    let mut failed = 0;
    for (id, title, limit_s, run) in criteria {
        if !only.is_empty() && !only.iter().any(|o| o == id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {message}"))
        });
        let elapsed = start.elapsed();
        let limit = Duration::from_secs(limit_s);
        let result = match result {
            Ok(detail) if elapsed >= limit => Err(format!("{detail}; over the {limit_s} s limit")),
            other => other,
        };
        let (verdict, detail) = match &result {
            Ok(detail) => ("PASS", detail),
            Err(detail) => ("FAIL", detail),
        };
        println!("{id:<4} {verdict} {:>7.2}s/{limit_s}s  {title}: {detail}", elapsed.as_secs_f64());
        failed += usize::from(result.is_err());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn a1_likert() -> Outcome {
    let table = [(3, "0.33"), (2, "0.17"), (5, "0.67"), (6, "0.83"), (7, "1.00")];
    for (likert, want) in table {
        let got = present_2dp(likert_to_unit(likert).map_err(|e| e.to_string())?);
        ensure!(got == want, "{likert} -> {got}, expected {want}");
    }
    Ok("3->0.33 2->0.17 5->0.67 6->0.83 7->1.00".into())
}

fn a2_model() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let series: Vec<(IndicatorKind, PageClass)> = IndicatorKind::ALL
        .into_iter()
        .flat_map(|k| PageClass::ALL.into_iter().map(move |p| (k, p)))
        .collect();
    let content = "c".into();
    let factors = [3.0, 0.75, 6.5, 0.5, 5.0];
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=10);
        let mut chosen = series.clone();
        chosen.shuffle(&mut rng);
        let mut observations = ContentObservations::default();
        let mut terms = Vec::new();
        for &(kind, page_class) in &chosen[..n] {
            let min: f64 = rng.random_range(-100.0..100.0);
            let max = min + rng.random_range(0.001..200.0);
            let spread = max - min;
            let value = rng.random_range(min - 0.2 * spread..max + 0.2 * spread);
            // dyadic weights keep every scaled weight exact
            let weight = f64::from(rng.random_range(1..=1024u32)) / 256.0;
            observations.add(&content, page_class, kind, value);
            terms.push(ModelTerm {
                indicator_kind: kind,
                page_class,
                weight,
                min,
                max,
            });
        }
        let model = UserModel {
            user_id: "u".into(),
            terms,
        };
        let got = predict_interest(&model, &observations, &content).map_err(|e| e.to_string())?.value;

        let (mut num, mut den) = (0.0, 0.0);
        for t in &model.terms {
            let raw = observations.value(&content, t.page_class, t.indicator_kind);
            let clamped = raw.max(t.min).min(t.max);
            num += t.weight * (clamped - t.min) / (t.max - t.min);
            den += t.weight;
        }
        let want = num / den;
        worst = worst.max((got - want).abs());
        ensure!((got - want).abs() <= 1e-12, "prediction {got} vs oracle {want}");
        ensure!((0.0..=1.0).contains(&got), "prediction {got} outside [0, 1]");
        for k in factors {
            let mut scaled = model.clone();
            for t in &mut scaled.terms {
                t.weight *= k;
            }
            let again = predict_interest(&scaled, &observations, &content).map_err(|e| e.to_string())?.value;
            ensure!(again == got, "scaling weights by {k} moved {got} to {again}");
        }
    }
    Ok(format!("1000 models, max deviation {worst:.1e}, scaling exact"))
}

/// Two-tailed Student-t tail by quadrature after x = sqrt(df) tan(theta).
fn t_tail_oracle(t: f64, df: f64) -> f64 {
    let f = |theta: f64| theta.cos().powf(df - 1.0);
    let simpson = |a: f64, b: f64| {
        let n = 4000;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    let theta0 = (t.abs() / df.sqrt()).atan();
    simpson(theta0, half_pi) / simpson(0.0, half_pi)
}

fn a3_pearson() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_r, mut worst_p) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let n = rng.random_range(3..=50);
        let slope: f64 = rng.random_range(-2.0..2.0);
        let noise: f64 = rng.random_range(0.01..3.0);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| slope * x + noise * rng.random_range(-10.0..10.0)).collect();
        let mx = xs.iter().sum::<f64>() / n as f64;
        let my = ys.iter().sum::<f64>() / n as f64;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
        let want = sxy / (sxx * syy).sqrt();
        let r = pearson_r(&xs, &ys).map_err(|e| e.to_string())?;
        worst_r = worst_r.max((r - want).abs());
        ensure!((r - want).abs() <= 1e-12, "r {r} vs {want} (n={n})");

        let df = (n - 2) as f64;
        let t = r * (df / (1.0 - r * r)).sqrt();
        let p = p_two_tailed(r, n).map_err(|e| e.to_string())?;
        let p_want = t_tail_oracle(t, df);
        worst_p = worst_p.max((p - p_want).abs());
        ensure!((p - p_want).abs() <= 1e-6, "p {p} vs {p_want} (r={r}, n={n})");
    }
    for n in 3..=50 {
        let p = p_two_tailed(0.0, n).map_err(|e| e.to_string())?;
        ensure!(p == 1.0, "r = 0, n = {n} gives p = {p}");
    }
    Ok(format!("max |dr| {worst_r:.1e}, max |dp| {worst_p:.1e}, r=0 -> p=1"))
}

type ValueKey = (String, String, String, String, IndicatorKind);

fn keyed(values: &[IndicatorValue]) -> BTreeMap<ValueKey, f64> {
    values
        .iter()
        .map(|v| {
            (
                (
                    v.user_id.to_string(),
                    v.session_id.to_string(),
                    v.page_id.to_string(),
                    v.fragment_id.as_ref().map(ToString::to_string).unwrap_or_default(),
                    v.indicator_kind,
                ),
                v.value,
            )
        })
        .collect()
}

fn compare_to_truth(truth: &[IndicatorValue], derived: &[IndicatorValue]) -> Result<(), String> {
    let truth = keyed(truth);
    let derived = keyed(derived);
    for (key, want) in &truth {
        let got = derived.get(key).ok_or_else(|| format!("missing {key:?} (expected {want})"))?;
        let ok = if key.4.is_duration() {
            (got - want).abs() <= 0.002
        } else {
            got == want
        };
        ensure!(ok, "{key:?}: expected {want}, derived {got}");
    }
    if let Some(extra) = derived.keys().find(|k| !truth.contains_key(*k)) {
        return Err(format!("unexpected value {extra:?}"));
    }
    Ok(())
}

fn visible(fragment: &Rect, view: &Rect) -> bool {
    let w = (fragment.x + fragment.width).min(view.x + view.width) - fragment.x.max(view.x);
    let h = (fragment.y + fragment.height).min(view.y + view.height) - fragment.y.max(view.y);
    let overlap = w.max(0.0) * h.max(0.0);
    overlap / (fragment.width * fragment.height) >= 0.5
        || (fragment.height > view.height && overlap / (view.width * view.height) >= 0.5)
}

/// Visibility by walking the timeline one millisecond at a time.
fn visibility_oracle(timeline: &Timeline) -> BTreeMap<(FragmentId, IndicatorKind), i64> {
    let events = timeline.events();
    let mut geometry: Vec<(i64, Rect, BTreeMap<FragmentId, Rect>)> = Vec::new();
    for e in events {
        let (view, rects) = match &e.kind {
            EventKind::Scroll {
                viewport,
                fragment_rects,
            } => (*viewport, fragment_rects.clone()),
            EventKind::Pinch {
                viewport_after,
                fragment_rects,
                ..
            } => (*viewport_after, fragment_rects.clone()),
            _ => continue,
        };
        if geometry.last().is_some_and(|g| g.0 == e.client_time) {
            geometry.pop();
        }
        geometry.push((e.client_time, view, rects));
    }
    let mut out = BTreeMap::new();
    let mut previous = BTreeSet::new();
    let visible_sets: Vec<BTreeSet<FragmentId>> = geometry
        .iter()
        .map(|(_, view, rects)| rects.iter().filter(|(_, r)| visible(r, view)).map(|(id, _)| id.clone()).collect())
        .collect();
    for set in &visible_sets {
        for id in set {
            if !previous.contains(id) {
                *out.entry((id.clone(), IndicatorKind::VisibilityCount)).or_insert(0) += 1;
            }
            out.entry((id.clone(), IndicatorKind::VisibilitySeconds)).or_insert(0);
        }
        previous = set.clone();
    }
    let (Some(first), Some(last)) = (events.first(), events.last()) else {
        return out;
    };
    // active milliseconds spent under each geometry snapshot
    let mut active_ms = vec![0i64; geometry.len()];
    let mut ev = 0;
    let mut geo: Option<usize> = None;
    for t in first.client_time..last.client_time {
        while ev + 1 < events.len() && events[ev + 1].client_time <= t {
            ev += 1;
        }
        while geometry.get(geo.map_or(0, |g| g + 1)).is_some_and(|g| g.0 <= t) {
            geo = Some(geo.map_or(0, |g| g + 1));
        }
        // events[ev + 1] is the first one after t
        let active = events[ev + 1].client_time - events[ev].client_time <= PASSIVE_MS;
        if let (Some(g), true) = (geo, active) {
            active_ms[g] += 1;
        }
    }
    for (set, ms) in visible_sets.iter().zip(active_ms) {
        for id in set {
            *out.entry((id.clone(), IndicatorKind::VisibilitySeconds)).or_insert(0) += ms;
        }
    }
    out
}

fn a4_engine() -> Outcome {
    let config = IndicatorConfig::default();
    let mut checked_values = 0;
    let mut oracle_timelines = 0;
    for archetype in Archetype::ALL {
        for seed in 0..SEEDS {
            let synthesis = synthesize(archetype, seed);
            let (store, analysis) = replay(&synthesis.log, &config).map_err(|e| e.to_string())?;
            compare_to_truth(&synthesis.truth, &analysis.values).map_err(|e| format!("{archetype} seed {seed}: {e}"))?;
            checked_values += synthesis.truth.len();

            let dataset = store.load_dataset().map_err(|e| e.to_string())?;
            for events in dataset.timelines.values().filter(|e| e.len() <= 100) {
                let timeline = build_timeline(events.iter().cloned()).map_err(|e| e.to_string())?;
                let view = TimelineView::new(&timeline, PASSIVE_MS).map_err(|e| e.to_string())?;
                let derived = derive_visibility(&view, &config);
                let derived: BTreeMap<_, _> = derived.iter().map(|(f, k, a)| ((f.clone(), k), a)).collect();
                let oracle = visibility_oracle(&timeline);
                ensure!(
                    derived.keys().eq(oracle.keys()),
                    "{archetype} seed {seed}: visibility keys differ from the 1 ms oracle"
                );
                for (key, want) in &oracle {
                    let got = derived[key];
                    let ok = if key.1.is_duration() {
                        (got - want).abs() <= 2
                    } else {
                        got == *want
                    };
                    ensure!(ok, "{archetype} seed {seed}: {key:?} engine {got}, 1 ms oracle {want}");
                }
                oracle_timelines += 1;
            }
        }
    }
    Ok(format!(
        "{} sessions, {checked_values} values, {oracle_timelines} timelines against the 1 ms oracle",
        Archetype::ALL.len() as u64 * SEEDS
    ))
}

fn tick(seq: usize, t: i64) -> RawEvent {
    RawEvent {
        kind: EventKind::KeyUp {
            selection_present: false,
        },
        event_id: format!("e{seq}").into(),
        session_id: "s".into(),
        page_id: "p".into(),
        client_time: t,
    }
}

fn a5_tiling() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut passive_seen = 0;
    for _ in 0..1000 {
        let n = rng.random_range(1..80);
        let mut t = rng.random_range(0..1_000_000i64);
        let mut times = vec![t];
        for _ in 1..n {
            t += match rng.random_range(0..6) {
                0 => 0,
                1 => PASSIVE_MS,
                2 => PASSIVE_MS + 1,
                3 => rng.random_range(PASSIVE_MS..400_000),
                _ => rng.random_range(1..20_000),
            };
            times.push(t);
        }
        let mut events: Vec<RawEvent> = times.iter().enumerate().map(|(i, &t)| tick(i, t)).collect();
        events.shuffle(&mut rng);
        let timeline = build_timeline(events).map_err(|e| e.to_string())?;
        let seg = segment_activity(&timeline, PASSIVE_MS).map_err(|e| e.to_string())?;

        let mut pieces: Vec<(i64, i64)> = seg
            .active
            .iter()
            .chain(&seg.passive)
            .map(|i| (i.start, i.end))
            .collect();
        pieces.sort();
        ensure!(pieces[0].0 == times[0], "tiling does not start at the first event");
        ensure!(pieces.last().unwrap().1 == t, "tiling does not end at the last event");
        for w in pieces.windows(2) {
            ensure!(w[0].1 == w[1].0, "gap or overlap between {:?} and {:?}", w[0], w[1]);
        }
        ensure!(
            seg.active_total_ms() + seg.passive_total_ms() == t - times[0],
            "lengths do not add up"
        );
        let want: Vec<(i64, i64)> = times
            .windows(2)
            .filter(|w| w[1] - w[0] > PASSIVE_MS)
            .map(|w| (w[0], w[1]))
            .collect();
        let got: Vec<(i64, i64)> = seg.passive.iter().map(|i| (i.start, i.end)).collect();
        ensure!(got == want, "passive intervals {got:?}, gaps over 60 s {want:?}");
        passive_seen += got.len();
    }
    Ok(format!("1000 timelines, {passive_seen} passive gaps"))
}

fn a6_swipe() -> Outcome {
    let ids: Vec<FragmentId> = (0..5).map(|i| FragmentId::new(format!("f{i}"))).collect();
    let subset = |mask: u32| -> BTreeSet<FragmentId> {
        ids.iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, id)| id.clone())
            .collect()
    };
    let phase = |seq: usize, phase: SwipeStage, set: BTreeSet<FragmentId>| RawEvent {
        kind: EventKind::SwipePhase {
            phase,
            visible_fragments: set,
        },
        event_id: format!("e{seq}").into(),
        session_id: "s".into(),
        page_id: "p".into(),
        client_time: seq as i64,
    };
    let mut triples = 0;
    for b in 0..32u32 {
        for d in 0..32u32 {
            for a in 0..32u32 {
                let timeline = build_timeline([
                    phase(0, SwipeStage::Start, subset(b)),
                    phase(1, SwipeStage::During, subset(d)),
                    phase(2, SwipeStage::End, subset(a)),
                ])
                .map_err(|e| e.to_string())?;
                let tally = derive_swipe(&timeline, &mut Vec::new());
                let of = |kind: IndicatorKind| -> BTreeSet<FragmentId> {
                    tally
                        .iter()
                        .filter(|(_, k, amount)| *k == kind && *amount == 1)
                        .map(|(f, _, _)| f.clone())
                        .collect()
                };
                let skipped = of(IndicatorKind::SwipeSkipped);
                let ends: BTreeSet<FragmentId> = subset(b | a);
                ensure!(skipped == subset(d & !(b | a)), "B={b:05b} D={d:05b} A={a:05b}: skipped {skipped:?}");
                ensure!(skipped.is_disjoint(&ends), "skipped meets B or A");
                ensure!(skipped.is_subset(&subset(d)), "skipped outside D");
                ensure!(of(IndicatorKind::SwipeVisibleBefore) == subset(b), "before set wrong");
                ensure!(of(IndicatorKind::SwipeVisibleAfter) == subset(a), "after set wrong");
                ensure!(tally.len() == (b.count_ones() + a.count_ones() + (d & !(b | a)).count_ones()) as usize, "extra values");
                triples += 1;
            }
        }
    }
    Ok(format!("{triples} triples"))
}

fn desktop_only(kind: IndicatorKind) -> bool {
    use IndicatorKind::*;
    [
        RandomMovement,
        MoveInFragment,
        MouseOverFragmentCount,
        MouseOverFragmentSeconds,
        HorizontalMovement,
        VerticalMovement,
        MouseOnSameYCount,
        MouseOnSameYSeconds,
    ]
    .contains(&kind)
}

fn mobile_only(kind: IndicatorKind) -> bool {
    use IndicatorKind::*;
    [
        ContactOnSameYCount,
        SwipeVisibleBefore,
        SwipeVisibleAfter,
        SwipeSkipped,
        OrientationChangeLandscape,
        OrientationChangePortrait,
    ]
    .contains(&kind)
}

/// Engine output per page straight from a log, without the store.
fn derive_from_log(log: &EventLog, config: &IndicatorConfig) -> Result<Vec<(DeviceClass, IndicatorValue)>, String> {
    let markers = IngestConfig::default().mobile_markers;
    let mut devices = BTreeMap::new();
    let mut fragments = Vec::new();
    let mut pages: BTreeMap<(String, String), Vec<RawEvent>> = BTreeMap::new();
    let mut users = BTreeMap::new();
    for record in &log.records {
        match record {
            LogRecord::Session(h) => {
                devices.insert(h.session_id.clone(), classify_device(&h.user_agent, &markers));
                users.insert(h.session_id.clone(), h.user_id.clone());
            }
            LogRecord::Fragment(f) => fragments.push(f.clone()),
            LogRecord::Event(e) => {
                let (session, page) = (e.session_id.clone().unwrap(), e.page_id.clone().unwrap());
                pages.entry((session.to_string(), page.to_string())).or_default().push(RawEvent {
                    kind: e.kind.clone(),
                    event_id: e.event_id.clone().unwrap(),
                    session_id: session,
                    page_id: page,
                    client_time: e.client_time,
                });
            }
            _ => {}
        }
    }
    let forest = FragmentForest::new(fragments).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for events in pages.into_values() {
        let session = events[0].session_id.clone();
        let device = devices[&session];
        let timeline = build_timeline(events).map_err(|e| e.to_string())?;
        let derivation =
            derive_indicators(&timeline, &users[&session], device, &forest, config).map_err(|e| e.to_string())?;
        out.extend(derivation.values.into_iter().map(|v| (device, v)));
    }
    Ok(out)
}

fn a7_device() -> Outcome {
    let config = IndicatorConfig::default();
    let mut counts = BTreeMap::new();
    for archetype in Archetype::ALL {
        for seed in 0..SEEDS {
            let synthesis = synthesize(archetype, seed);
            for (device, value) in derive_from_log(&synthesis.log, &config)? {
                ensure!(device == archetype.device(), "{archetype} classified as {device}");
                let kind = value.indicator_kind;
                match device {
                    DeviceClass::Mobile => ensure!(!desktop_only(kind), "mobile session {seed} yields {kind}"),
                    DeviceClass::Desktop => ensure!(!mobile_only(kind), "desktop session {seed} yields {kind}"),
                }
                *counts.entry(device).or_insert(0usize) += 1;
            }
        }
    }
    Ok(format!(
        "{} desktop and {} mobile values conform",
        counts.get(&DeviceClass::Desktop).unwrap_or(&0),
        counts.get(&DeviceClass::Mobile).unwrap_or(&0)
    ))
}

async fn push_over_http(base: &str, log: &EventLog) -> Result<usize, String> {
    let client = reqwest::Client::new();
    let mut requests = 0;
    for planned in plan_batches(log, DEFAULT_BATCH_MAX).map_err(|e| e.to_string())? {
        let response = client
            .post(format!("{base}/sessions"))
            .json(&planned.register)
            .send()
            .await
            .map_err(|e| e.to_string())?;
        ensure!(response.status() == 201, "register returned {}", response.status());
        let registered: serde_json::Value = response.json().await.map_err(|e| e.to_string())?;
        let id = registered["session_id"].as_str().unwrap_or_default().to_owned();
        let token = registered["token"].as_str().unwrap_or_default().to_owned();
        for batch in &planned.batches {
            let response = client
                .post(format!("{base}/sessions/{id}/events"))
                .bearer_auth(&token)
                .json(batch)
                .send()
                .await
                .map_err(|e| e.to_string())?;
            ensure!(response.status() == 200, "batch returned {}", response.status());
            requests += 1;
        }
        if !planned.ratings.is_empty() {
            let response = client
                .post(format!("{base}/sessions/{id}/ratings"))
                .bearer_auth(&token)
                .json(&serde_json::json!({ "ratings": planned.ratings }))
                .send()
                .await
                .map_err(|e| e.to_string())?;
            ensure!(response.status() == 200, "ratings returned {}", response.status());
        }
        requests += 1;
    }
    Ok(requests)
}

fn a8_replay_live() -> Outcome {
    let mut log = EventLog::default();
    for archetype in Archetype::ALL {
        for seed in 0..3 {
            log.extend(synthesize(archetype, seed).log);
        }
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let log_path = dir.path().join("sessions.jsonl");
    std::fs::write(&log_path, log.to_text()).map_err(|e| e.to_string())?;

    let store = Arc::new(Store::open(&dir.path().join("live.db")).map_err(|e| e.to_string())?);
    let ingestor = Ingestor::new(store.clone(), IngestConfig::default());
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let requests = runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.map_err(|e| e.to_string())?;
        let base = format!("http://{}", listener.local_addr().map_err(|e| e.to_string())?);
        let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
        let server = tokio::spawn(interest_server::serve(listener, ingestor, async {
            let _ = stopped.await;
        }));
        let pushed = push_over_http(&base, &log).await;
        let _ = stop.send(());
        let _ = server.await;
        pushed
    })?;
    let config = IndicatorConfig::default();
    let live = analyze(&store.load_dataset().map_err(|e| e.to_string())?, &config).map_err(|e| e.to_string())?;

    let file = std::fs::File::open(&log_path).map_err(|e| e.to_string())?;
    let from_file = EventLog::read(std::io::BufReader::new(file)).map_err(|e| e.to_string())?;
    let (_, replayed) = replay(&from_file, &config).map_err(|e| e.to_string())?;

    ensure!(!live.values.is_empty(), "nothing derived");
    let multiset = |values: &[IndicatorValue]| {
        let mut v: Vec<String> = values.iter().map(|v| serde_json::to_string(v).unwrap()).collect();
        v.sort();
        v
    };
    ensure!(multiset(&live.values) == multiset(&replayed.values), "indicator multisets differ");
    for kind in ReportKind::ALL {
        ensure!(
            report_bytes(kind, &live) == report_bytes(kind, &replayed),
            "{kind} reports differ"
        );
    }
    Ok(format!(
        "{} values over {requests} requests, 4 reports byte-identical",
        live.values.len()
    ))
}

fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = mean;
        }
        i = j + 1;
    }
    out
}

fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

fn a9_ranking() -> Outcome {
    let ratings: [u8; 10] = [1, 4, 7, 2, 5, 3, 6, 2, 5, 7];
    let header = session_header(Archetype::MinimalInteractor, 9_999);
    let user = header.user_id.clone();
    let mut b = SessionBuilder::new(header, DeviceClass::Desktop);
    for (k, &likert) in ratings.iter().enumerate() {
        b.open_page(article_layout(DeviceClass::Desktop, k), 2_000);
        // reading time is 4 s per rating point plus a fixed 3 s
        b.wait(3_000 + 4_000 * i64::from(likert));
        b.tick();
    }
    for (k, &likert) in ratings.iter().enumerate() {
        b.rate(content_of(k), Some(likert));
    }
    let synthesis = b.finish();
    let (_, analysis) = replay(&synthesis.log, &IndicatorConfig::default()).map_err(|e| e.to_string())?;

    let record = analysis
        .correlations
        .iter()
        .find(|r| r.user_id == user && r.indicator_kind == IndicatorKind::VisibilitySeconds)
        .ok_or("no visibility_seconds correlation")?;
    ensure!(record.n == 10, "correlation over {} articles", record.n);
    ensure!(present_2dp(record.r) == "1.00" && (record.r - 1.0).abs() <= 1e-12, "r = {}", record.r);
    ensure!(record.p < 0.001, "p = {}", record.p);

    let mut predicted = Vec::new();
    let mut rated = Vec::new();
    for (k, &likert) in ratings.iter().enumerate() {
        let content = content_of(k);
        let row = analysis
            .predictions
            .iter()
            .find(|p| p.user_id == user && p.content_id == content)
            .ok_or_else(|| format!("no prediction for {content}"))?;
        predicted.push(row.prediction.value);
        rated.push(f64::from(likert));
    }
    let rho = spearman(&predicted, &rated);
    ensure!((rho - 1.0).abs() <= 1e-12, "spearman {rho}");
    Ok(format!("r = {}, p = {:e}, spearman = {rho}", record.r, record.p))
}

fn a10_aggregate() -> Outcome {
    let record = |kind, page_class, r, p| CorrelationRecord {
        user_id: "u".into(),
        indicator_kind: kind,
        page_class,
        r,
        p,
        n: 10,
    };
    use IndicatorKind::*;
    let records = vec![
        record(VisibilitySeconds, PageClass::Detail, 0.1, 0.01),
        record(VisibilitySeconds, PageClass::Detail, 0.3, 0.01),
        record(VisibilitySeconds, PageClass::Detail, 0.5, 0.01),
        record(VisibilitySeconds, PageClass::Detail, 0.7, 0.01),
        record(VisibilitySeconds, PageClass::Detail, 0.9, 0.01),
        record(VisibilitySeconds, PageClass::Detail, 0.95, 0.01),
        record(VisibilitySeconds, PageClass::Detail, 0.99, 0.2),
        record(ContactInFragment, PageClass::Overview, 0.45, 0.001),
        record(ContactInFragment, PageClass::Overview, 0.62, 0.001),
        record(SelectCount, PageClass::Detail, 0.8, 0.5),
    ];
    let rows = aggregate_table(&records, 0.05);
    let expected = [
        (VisibilitySeconds, PageClass::Detail, 6, 3.45 / 6.0, [1, 1, 1, 1, 2]),
        (ContactInFragment, PageClass::Overview, 2, 0.535, [0, 0, 1, 1, 0]),
    ];
    ensure!(rows.len() == expected.len(), "{} rows, expected {}", rows.len(), expected.len());
    for (kind, page_class, n, mean, buckets) in expected {
        let row = rows
            .iter()
            .find(|r| r.indicator_kind == kind && r.page_class == page_class)
            .ok_or_else(|| format!("no row for {kind}/{page_class}"))?;
        ensure!(row.n_significant == n, "{kind}: n = {}", row.n_significant);
        ensure!((row.mean_r - mean).abs() <= 1e-12, "{kind}: mean r = {}", row.mean_r);
        ensure!(row.buckets == buckets, "{kind}: buckets {:?}", row.buckets);
        ensure!(row.buckets.iter().sum::<usize>() == n, "{kind}: buckets do not sum to n");
    }
    let analysis = interest_store::Analysis {
        aggregate: rows,
        ..Default::default()
    };
    let csv = String::from_utf8(report_bytes(ReportKind::Aggregate, &analysis)).map_err(|e| e.to_string())?;
    let mut lines = csv.lines();
    let header = lines.next().unwrap_or_default();
    ensure!(
        header
            == "indicator_kind,page_class,n_significant,mean_r,mean_r_2dp,corr_lt_0_2,corr_lt_0_4,corr_lt_0_6,corr_lt_0_8,corr_ge_0_8",
        "header {header}"
    );
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        ensure!(cells.len() == 10, "row {line}");
        let n: usize = cells[2].parse().map_err(|_| format!("n in {line}"))?;
        let sum: usize = cells[5..].iter().map(|c| c.parse::<usize>().unwrap_or(usize::MAX / 16)).sum();
        ensure!(sum == n, "csv buckets of {line} do not sum to n");
    }
    Ok("2 rows, columns and bucket sums as documented".into())
}
