use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, OnceLock};

use enthymeme::dataset::{binarize, load_dataset, DatasetError, DatasetItem, Format, Source, StepType};
use enthymeme::pipeline::{decide_all, prepare_all, report, Preparation, RunConfig};
use enthymeme::providers::cache::DiskCache;
use enthymeme::providers::stub::Fixtures;
use enthymeme::providers::{NliProvider, Providers, Result as ProviderResult, Similarity};
use enthymeme::sweep::{sweep, write_csv};
use enthymeme_core::{BinaryLabel, NliScores};
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn corpus() -> &'static [DatasetItem] {
    static ITEMS: OnceLock<Vec<DatasetItem>> = OnceLock::new();
    ITEMS.get_or_init(|| load_dataset(&fixture("mini_corpus.jsonl"), Format::Jsonl).unwrap().items)
}

fn fixtures() -> Fixtures {
    Fixtures::load(&fixture("mini_fixtures.json")).unwrap()
}

/// The corpus prepared with no contradiction scores at all.
fn prepared_without_contradicts(step: StepType) -> &'static [Preparation] {
    static ORIGINAL: OnceLock<Vec<Preparation>> = OnceLock::new();
    static THREE: OnceLock<Vec<Preparation>> = OnceLock::new();
    let cell = if step == StepType::Three { &THREE } else { &ORIGINAL };
    cell.get_or_init(|| {
        let providers = Fixtures { nli: Vec::new(), ..fixtures() }.providers();
        let instances: Vec<_> = corpus().iter().flat_map(|i| binarize(i, step).unwrap()).collect();
        prepare_all(&instances, &RunConfig::default(), &providers)
    })
}

fn entailed(prepared: &[Preparation], tau_m: f64) -> BTreeSet<String> {
    let config = RunConfig { tau_m, ..RunConfig::default() };
    decide_all(prepared, &config)
        .into_iter()
        .filter(|t| t.predicted == Some(BinaryLabel::Entailment))
        .map(|t| t.id)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entailments_shrink_as_tau_m_rises(a in 0.0f64..1.0, b in 0.0f64..1.0, step in prop::sample::select(vec![StepType::Original, StepType::Three])) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let prepared = prepared_without_contradicts(step);
        let (low, high) = (entailed(prepared, lo), entailed(prepared, hi));
        prop_assert!(high.is_subset(&low), "τ_m {lo} -> {low:?}, {hi} -> {high:?}");
    }

    #[test]
    fn sweep_has_one_row_per_grid_point(m in 1usize..4, c in 1usize..3, steps in prop::sample::subsequence(vec![StepType::None, StepType::Original, StepType::Two], 1..=3)) {
        let tau_m: Vec<f64> = (0..m).map(|i| 0.5 + 0.1 * i as f64).collect();
        let tau_c: Vec<f64> = (0..c).map(|i| 80.0 + 10.0 * i as f64).collect();
        let rows = sweep(&corpus()[..3], &tau_m, &tau_c, &steps, &RunConfig::default(), &fixtures().providers()).unwrap();
        prop_assert_eq!(rows.len(), m * c * steps.len());
        for r in &rows {
            prop_assert_eq!(r.report.confusion.total() as usize, r.report.instances);
            for x in [r.report.metrics.accuracy, r.report.metrics.class0.f1, r.report.metrics.class1.f1] {
                prop_assert!((0.0..=1.0).contains(&x));
            }
        }
    }

    #[test]
    fn gold_is_entailment_exactly_on_the_helpful_side(
        helpful in prop::collection::vec("[a-z]{1,8}\\.", 1..=3),
        unhelpful in prop::collection::vec("[a-z]{1,8}\\.", 1..=3),
    ) {
        let n = helpful.len().min(unhelpful.len());
        let step = StepType::from_steps(n as u8).unwrap();
        let mut item = DatasetItem::new("p", "Premise.", "Claim.", Source::Custom);
        item.helpful.insert(n.to_string(), helpful[..n].to_vec());
        item.unhelpful.insert(n.to_string(), unhelpful[..n].to_vec());
        let instances = binarize(&item, step).unwrap();
        prop_assert_eq!(instances.len(), 2);
        for inst in instances {
            let from_helpful = inst.implicit == helpful[..n];
            prop_assert_eq!(inst.gold == BinaryLabel::Entailment, from_helpful && inst.id.ends_with("/h"));
        }
        let none = binarize(&item, StepType::None).unwrap();
        prop_assert_eq!(none.len(), 1);
        prop_assert!(none[0].implicit.is_empty() && none[0].gold == BinaryLabel::Entailment);
    }
}

#[test]
fn missing_steps_are_reported() {
    let item = DatasetItem::new("p", "Premise.", "Claim.", Source::Custom);
    assert!(matches!(binarize(&item, StepType::Three), Err(DatasetError::MissingSteps { .. })));
}

#[test]
fn errored_instances_count_toward_the_total() {
    let mut items = corpus()[..2].to_vec();
    items[0].amr.clear();
    let instances: Vec<_> = items.iter().flat_map(|i| binarize(i, StepType::Original).unwrap()).collect();
    let prepared = prepare_all(&instances, &RunConfig::default(), &fixtures().providers());
    let traces = decide_all(&prepared, &RunConfig::default());
    let counted = report(&traces, false);
    assert_eq!((counted.instances, counted.errored, counted.confusion.total()), (4, 2, 4));
    let excluded = report(&traces, true);
    assert_eq!((excluded.instances, excluded.errored, excluded.confusion.total()), (4, 2, 2));
}

struct Counting<P: ?Sized> {
    inner: Box<P>,
    calls: Arc<AtomicUsize>,
}

impl Similarity for Counting<dyn Similarity> {
    fn id(&self) -> String {
        self.inner.id()
    }
    fn similarity(&self, a: &str, b: &str) -> ProviderResult<f64> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.similarity(a, b)
    }
}

impl NliProvider for Counting<dyn NliProvider> {
    fn id(&self) -> String {
        self.inner.id()
    }
    fn nli(&self, premise: &str, hypothesis: &str) -> ProviderResult<NliScores> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.nli(premise, hypothesis)
    }
}

fn counted_providers(calls: &Arc<AtomicUsize>) -> Providers {
    let base = fixtures().providers();
    Providers {
        similarity: Box::new(Counting { inner: base.similarity, calls: calls.clone() }),
        nli: Box::new(Counting { inner: base.nli, calls: calls.clone() }),
        generator: None,
        parser: None,
    }
}

#[test]
fn warm_cache_reproduces_the_sweep_without_provider_calls() {
    let dir = tempfile::tempdir().unwrap();
    let steps = [StepType::Original, StepType::Three];
    let run = |calls: &Arc<AtomicUsize>| {
        let cache = Arc::new(DiskCache::open(dir.path()).unwrap());
        let providers = counted_providers(calls).cached(cache.clone());
        let rows = sweep(corpus(), &[0.5, 0.6, 0.7], &[80.0, 90.0], &steps, &RunConfig::default(), &providers).unwrap();
        let mut csv = Vec::new();
        write_csv(&rows, &mut csv).unwrap();
        (csv, cache.stats())
    };
    let (cold_calls, warm_calls) = (Arc::new(AtomicUsize::new(0)), Arc::new(AtomicUsize::new(0)));
    let (cold, cold_stats) = run(&cold_calls);
    let (warm, warm_stats) = run(&warm_calls);
    assert_eq!(cold, warm);
    assert!(cold_calls.load(Ordering::SeqCst) > 0 && cold_stats.misses > 0);
    assert_eq!(warm_calls.load(Ordering::SeqCst), 0);
    assert_eq!(warm_stats.misses, 0);
    assert!(warm_stats.hits > 0);
}

#[test]
fn scores_are_fetched_once_per_step_type() {
    // Re-thresholding must not query providers again.
    let calls = Arc::new(AtomicUsize::new(0));
    let providers = counted_providers(&calls);
    sweep(corpus(), &[0.5], &[80.0], &[StepType::Original], &RunConfig::default(), &providers).unwrap();
    let one_point = calls.swap(0, Ordering::SeqCst);
    sweep(corpus(), &[0.5, 0.6, 0.7, 0.8], &[80.0, 90.0, 100.0], &[StepType::Original], &RunConfig::default(), &providers)
        .unwrap();
    assert_eq!(calls.load(Ordering::SeqCst), one_point);
}
