//! Synthetic streams and the two evaluation harnesses: the 1D
//! inlier/outlier stability experiment and the multipass precision/recall
//! benchmark.
//!
//! All generation is seeded and deterministic. Multi-dimensional clusters
//! place their mean in the first component and are centred at zero in the
//! remaining components; histograms and mode estimates are taken over the
//! first component.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Bernoulli, Distribution, Normal};
use serde::Serialize;

use crate::config::Config;
use crate::engine::{Engine, FrameReport};
use crate::error::{Error, Result};
use crate::memory::{Descriptor, Frame, IdentityId, Memory};
use crate::renn::{self, ObservationOutcome};
use crate::stats::ValueBucket;

pub const INLIER_LABEL: &str = "inlier";
pub const OUTLIER_LABEL: &str = "outlier";

/// Parameters of a two-population Gaussian stream: a tight inlier cluster
/// (true positives of one subject) polluted by a broader outlier cluster
/// (false detections).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianStreamSpec {
    pub inlier_mean: f64,
    pub inlier_std: f64,
    pub outlier_mean: f64,
    pub outlier_std: f64,
    /// Probability that an observation is drawn from the outlier pdf.
    pub outlier_fraction: f64,
    /// Number of frames to generate.
    pub iterations: u64,
    pub dimension: usize,
    pub observations_per_frame: usize,
    pub seed: u64,
}

/// The three separation regimes of the standard stability benchmark:
/// outliers far from, near, and overlapping the inlier cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeparationCase {
    Separated,
    Medium,
    Overlap,
}

impl SeparationCase {
    pub fn outlier_mean(self) -> f64 {
        match self {
            SeparationCase::Separated => 3.0,
            SeparationCase::Medium => 1.0,
            SeparationCase::Overlap => 0.5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SeparationCase::Separated => "separated",
            SeparationCase::Medium => "medium",
            SeparationCase::Overlap => "overlap",
        }
    }
}

impl GaussianStreamSpec {
    /// The standard 1D benchmark: inliers N(0, 0.1), outliers N(mu, 0.5)
    /// with mu from the separation case, 20% outliers, 1000 frames of 64
    /// observations. The frame size keeps a few hundred elements live at
    /// any instant, enough for stable mode and spread estimates.
    pub fn standard(case: SeparationCase) -> Self {
        GaussianStreamSpec {
            inlier_mean: 0.0,
            inlier_std: 0.1,
            outlier_mean: case.outlier_mean(),
            outlier_std: 0.5,
            outlier_fraction: 0.2,
            iterations: 1000,
            dimension: 1,
            observations_per_frame: 64,
            seed: 7,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inlier_std > 0.0 && self.outlier_std > 0.0) {
            return Err(Error::InvalidArgument(
                "standard deviations must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.outlier_fraction) {
            return Err(Error::InvalidArgument(
                "outlier_fraction must lie in [0, 1)".into(),
            ));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidArgument("iterations must be >= 1".into()));
        }
        if self.dimension == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if self.observations_per_frame < 2 {
            return Err(Error::InvalidArgument(
                "observations_per_frame must be >= 2".into(),
            ));
        }
        Ok(())
    }
}

/// Seeded mixture stream. Each observation is an outlier with probability
/// `outlier_fraction`; ground-truth labels ride along on every frame.
pub fn gen_gaussian_stream(spec: &GaussianStreamSpec) -> Result<Vec<Frame>> {
    spec.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let coin = Bernoulli::new(spec.outlier_fraction).expect("fraction validated");
    let inlier_head = Normal::new(spec.inlier_mean, spec.inlier_std).expect("std validated");
    let inlier_rest = Normal::new(0.0, spec.inlier_std).expect("std validated");
    let outlier_head = Normal::new(spec.outlier_mean, spec.outlier_std).expect("std validated");
    let outlier_rest = Normal::new(0.0, spec.outlier_std).expect("std validated");

    let mut frames = Vec::with_capacity(spec.iterations as usize);
    for t in 1..=spec.iterations {
        let mut observations = Vec::with_capacity(spec.observations_per_frame);
        let mut labels = Vec::with_capacity(spec.observations_per_frame);
        for _ in 0..spec.observations_per_frame {
            let outlier = coin.sample(&mut rng);
            let (head, rest, label) = if outlier {
                (&outlier_head, &outlier_rest, OUTLIER_LABEL)
            } else {
                (&inlier_head, &inlier_rest, INLIER_LABEL)
            };
            let mut values = Vec::with_capacity(spec.dimension);
            values.push(head.sample(&mut rng));
            for _ in 1..spec.dimension {
                values.push(rest.sample(&mut rng));
            }
            observations.push(Descriptor::new(values)?);
            labels.push(label.to_string());
        }
        frames.push(Frame::with_labels(t, observations, labels));
    }
    Ok(frames)
}

/// Outcome of a stability run: the learned descriptor distribution held in
/// memory after the stream, with the subject's statistics extracted.
///
/// Identity lineages churn on an i.i.d. synthetic stream (there is no
/// temporal coherence for a chain to follow), so the learned model of the
/// subject is read off the memory as a whole: the histogram covers every
/// live element, the mode is the centre of its heaviest bin, and the
/// subject statistics are computed over the window `mode ± 5
/// truth_inlier_std`. The identity that absorbed the most insertions over
/// the run is reported alongside.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    /// Histogram of first components of all live descriptors; mass sums to
    /// `elements_total`.
    pub histogram: Vec<ValueBucket>,
    pub histogram_bin_width: f64,
    /// (first component, eligibility) pairs for every live element.
    pub eligibility_scatter: Vec<ScatterPoint>,
    /// Centre of the heaviest histogram bin.
    pub learned_mode: f64,
    /// Mean of first components within the subject window.
    pub learned_mean: f64,
    /// Sample standard deviation of first components within the subject
    /// window.
    pub learned_std: f64,
    /// Live elements inside the subject window.
    pub elements_subject_window: usize,
    /// Identity with the most insertions across the whole run.
    pub dominant_identity: IdentityId,
    /// Insertions recorded for the dominant identity across the run.
    pub dominant_insertions: usize,
    /// Live elements of the dominant identity at the end of the run.
    pub elements_dominant: usize,
    pub elements_total: usize,
    pub identities_total: usize,
    pub truth_inlier_mean: f64,
    pub truth_inlier_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterPoint {
    pub value: f64,
    pub eligibility: f64,
}

/// Run the engine over a generated stream, then summarize what it learned.
pub fn stability_experiment(spec: &GaussianStreamSpec, config: &Config) -> Result<StabilityReport> {
    let frames = gen_gaussian_stream(spec)?;
    let mut engine = Engine::new(config.clone())?;
    let mut insertions: Vec<(IdentityId, usize)> = Vec::new();
    for frame in &frames {
        let report = engine.observe(frame)?;
        for assignment in &report.assignments {
            let id = assignment.identity();
            match insertions.binary_search_by_key(&id, |(i, _)| *i) {
                Ok(i) => insertions[i].1 += 1,
                Err(i) => insertions.insert(i, (id, 1)),
            }
        }
    }
    summarize(engine.memory(), spec, &insertions)
}

fn summarize(
    memory: &Memory,
    spec: &GaussianStreamSpec,
    insertions: &[(IdentityId, usize)],
) -> Result<StabilityReport> {
    if memory.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot summarize an empty memory".into(),
        ));
    }
    let values: Vec<f64> = memory
        .elements()
        .iter()
        .map(|el| el.descriptor.values()[0])
        .collect();
    let eligibility_scatter = memory
        .elements()
        .iter()
        .map(|el| ScatterPoint {
            value: el.descriptor.values()[0],
            eligibility: el.eligibility,
        })
        .collect();

    let bin_width = spec.inlier_std / 2.0;
    let (histogram, learned_mode) = mode_histogram(&values, bin_width);
    let window = 5.0 * spec.inlier_std;
    let subject: Vec<f64> = values
        .iter()
        .copied()
        .filter(|v| (v - learned_mode).abs() <= window)
        .collect();
    let learned_mean = subject.iter().sum::<f64>() / subject.len().max(1) as f64;
    let learned_std = sample_std(&subject);

    let (dominant_identity, dominant_insertions) = insertions
        .iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .copied()
        .unwrap_or((IdentityId(0), 0));
    let elements_dominant = memory
        .elements()
        .iter()
        .filter(|el| el.identity == dominant_identity)
        .count();
    let identities_total = {
        let mut ids: Vec<IdentityId> = memory.elements().iter().map(|el| el.identity).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    };

    Ok(StabilityReport {
        histogram,
        histogram_bin_width: bin_width,
        eligibility_scatter,
        learned_mode,
        learned_mean,
        learned_std,
        elements_subject_window: subject.len(),
        dominant_identity,
        dominant_insertions,
        elements_dominant,
        elements_total: memory.len(),
        identities_total,
        truth_inlier_mean: spec.inlier_mean,
        truth_inlier_std: spec.inlier_std,
    })
}

/// Histogram with edges aligned to integer multiples of `width`, plus a
/// refined mode estimate: the count-weighted centroid of the heaviest bin
/// (ties toward the lowest edge) and its two neighbours, which removes the
/// half-bin quantization of the raw argmax.
fn mode_histogram(values: &[f64], width: f64) -> (Vec<ValueBucket>, f64) {
    use std::collections::BTreeMap;
    let mut bins: BTreeMap<i64, usize> = BTreeMap::new();
    for &v in values {
        let k = (v / width).floor() as i64;
        *bins.entry(k).or_insert(0) += 1;
    }
    let mode_bin = bins
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .map(|(&k, _)| k)
        .unwrap_or(0);
    let mode = refine_mode(values, (mode_bin as f64 + 0.5) * width, 2.5 * width);
    let histogram = bins
        .into_iter()
        .map(|(k, count)| ValueBucket {
            lo: k as f64 * width,
            hi: (k + 1) as f64 * width,
            count,
        })
        .collect();
    (histogram, mode)
}

/// Flat-kernel mean-shift from the heaviest bin: iterate to the mean of the
/// samples within `h` of the current estimate until it settles on the local
/// density peak. Removes the anchor sensitivity of a raw histogram argmax.
fn refine_mode(values: &[f64], start: f64, h: f64) -> f64 {
    let mut x = start;
    for _ in 0..32 {
        let mut sum = 0.0;
        let mut n = 0usize;
        for &v in values {
            if (v - x).abs() <= h {
                sum += v;
                n += 1;
            }
        }
        if n == 0 {
            return x;
        }
        let next = sum / n as f64;
        if (next - x).abs() < 1e-12 {
            return next;
        }
        x = next;
    }
    x
}

fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    var.sqrt()
}

/// One labelled multi-observation item of an evaluation set (an "image"
/// with its detections).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledItem {
    pub observations: Vec<Descriptor>,
    pub labels: Vec<String>,
}

pub const TARGET_LABEL: &str = "target";
pub const DISTRACTOR_LABEL: &str = "distractor";

/// Parameters of the two-class labelled benchmark used by the multipass
/// precision/recall harness.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoClassSetSpec {
    pub target_mean: f64,
    pub target_std: f64,
    pub distractor_mean: f64,
    pub distractor_std: f64,
    pub items: usize,
    pub target_per_item: usize,
    pub distractor_per_item: usize,
    pub dimension: usize,
    pub seed: u64,
}

impl TwoClassSetSpec {
    /// Standard benchmark: target N(0, 0.1) vs distractor N(1, 0.1), a
    /// 10-sigma separation, with one draw of each per item.
    pub fn standard(items: usize, seed: u64) -> Self {
        TwoClassSetSpec {
            target_mean: 0.0,
            target_std: 0.1,
            distractor_mean: 1.0,
            distractor_std: 0.1,
            items,
            target_per_item: 1,
            distractor_per_item: 1,
            dimension: 1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_std > 0.0 && self.distractor_std > 0.0) {
            return Err(Error::InvalidArgument(
                "standard deviations must be positive".into(),
            ));
        }
        if self.dimension == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        if self.target_per_item + self.distractor_per_item == 0 {
            return Err(Error::InvalidArgument(
                "items must contain at least one observation".into(),
            ));
        }
        Ok(())
    }
}

/// Seeded labelled set: each item holds its target draws first, then its
/// distractor draws.
pub fn gen_two_class_set(spec: &TwoClassSetSpec) -> Result<Vec<LabeledItem>> {
    spec.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let target_head = Normal::new(spec.target_mean, spec.target_std).expect("validated");
    let target_rest = Normal::new(0.0, spec.target_std).expect("validated");
    let distractor_head =
        Normal::new(spec.distractor_mean, spec.distractor_std).expect("validated");
    let distractor_rest = Normal::new(0.0, spec.distractor_std).expect("validated");

    let draw = |head: &Normal<f64>, rest: &Normal<f64>, rng: &mut ChaCha12Rng| {
        let mut values = Vec::with_capacity(spec.dimension);
        values.push(head.sample(rng));
        for _ in 1..spec.dimension {
            values.push(rest.sample(rng));
        }
        Descriptor::new(values)
    };

    let mut items = Vec::with_capacity(spec.items);
    for _ in 0..spec.items {
        let mut observations = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..spec.target_per_item {
            observations.push(draw(&target_head, &target_rest, &mut rng)?);
            labels.push(TARGET_LABEL.to_string());
        }
        for _ in 0..spec.distractor_per_item {
            observations.push(draw(&distractor_head, &distractor_rest, &mut rng)?);
            labels.push(DISTRACTOR_LABEL.to_string());
        }
        items.push(LabeledItem {
            observations,
            labels,
        });
    }
    Ok(items)
}

/// Present a labelled set to the engine as frames, `passes` times over,
/// re-indexing monotonically so the stream clock keeps advancing.
pub fn multipass_train(
    engine: &mut Engine,
    subset_a: &[LabeledItem],
    passes: usize,
) -> Result<Vec<FrameReport>> {
    if passes == 0 {
        return Err(Error::InvalidArgument("passes must be >= 1".into()));
    }
    let mut reports = Vec::with_capacity(subset_a.len() * passes);
    for _ in 0..passes {
        for item in subset_a {
            let index = engine.memory().frame_counter() + 1;
            let frame = Frame::with_labels(index, item.observations.clone(), item.labels.clone());
            reports.push(engine.observe(&frame)?);
        }
    }
    Ok(reports)
}

/// One precision/recall measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrCurvePoint {
    #[serde(rename = "pass")]
    pub pass_number: usize,
    pub precision: f64,
    pub recall: f64,
    /// Set when a ratio was 0/0 (no predictions, or no actual positives)
    /// and reported as 1.0.
    pub degenerate: bool,
}

/// Match a labelled set against the memory without mutating it, predicting
/// positive exactly when an observation is assigned `target`.
///
/// Observations labelled `positive_label` are the actual positives.
pub fn pr_eval(
    engine: &Engine,
    subset_b: &[LabeledItem],
    target: IdentityId,
    positive_label: &str,
    pass_number: usize,
) -> Result<PrCurvePoint> {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for item in subset_b {
        let assigned = assign_item_readonly(engine, item)?;
        for (k, outcome) in assigned.iter().enumerate() {
            let predicted = *outcome == Some(target);
            let actual = item.labels[k] == positive_label;
            match (predicted, actual) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
    }
    let mut degenerate = false;
    let precision = if tp + fp == 0 {
        degenerate = true;
        1.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        degenerate = true;
        1.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    Ok(PrCurvePoint {
        pass_number,
        precision,
        recall,
        degenerate,
    })
}

/// Identity most often assigned (read-only) to observations carrying
/// `label`; `None` when nothing labelled `label` matches at all.
pub fn dominant_assigned_identity(
    engine: &Engine,
    set: &[LabeledItem],
    label: &str,
) -> Result<Option<IdentityId>> {
    let mut counts: Vec<(IdentityId, usize)> = Vec::new();
    for item in set {
        let assigned = assign_item_readonly(engine, item)?;
        for (k, outcome) in assigned.iter().enumerate() {
            if item.labels[k] != label {
                continue;
            }
            if let Some(id) = outcome {
                match counts.binary_search_by_key(id, |(i, _)| *i) {
                    Ok(i) => counts[i].1 += 1,
                    Err(i) => counts.insert(i, (*id, 1)),
                }
            }
        }
    }
    Ok(counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(id, _)| id))
}

/// Read-only identity assignment for one item, applying the same ingest
/// normalization the engine would.
fn assign_item_readonly(engine: &Engine, item: &LabeledItem) -> Result<Vec<Option<IdentityId>>> {
    if item.labels.len() != item.observations.len() {
        return Err(Error::InvalidArgument(
            "item labels must cover every observation".into(),
        ));
    }
    let config = engine.config();
    let mut frame = Frame::new(
        engine.memory().frame_counter() + 1,
        item.observations.clone(),
    );
    if config.normalize {
        frame = frame.normalized()?;
    }
    let match_set = renn::match_frame(engine.memory(), &frame, config)?;
    let assignment = renn::assign_identities(&match_set, engine.memory(), &frame);
    Ok(assignment
        .outcomes
        .iter()
        .map(|o| match o {
            ObservationOutcome::Existing { identity, .. } => Some(*identity),
            ObservationOutcome::NewIdentity => None,
        })
        .collect())
}
