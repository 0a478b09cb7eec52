//! Acceptance suite: one test per release gate, each printing a PASS/FAIL
//! line. Run with `cargo test -p renn-core --test acceptance -- --nocapture`
//! to see the lines.
//!
//! Every tolerance is pinned in the constants below; none is derived at
//! run time.

use std::panic::{catch_unwind, resume_unwind};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use renn_core::knn::{batch_two_nearest, distance, two_nearest};
use renn_core::memctl::{apply_decay, ETA_FLOOR};
use renn_core::renn::{assign_identities, renn_match, ObservationOutcome};
use renn_core::synth::{
    dominant_assigned_identity, gen_gaussian_stream, gen_two_class_set, multipass_train, pr_eval,
    stability_experiment, GaussianStreamSpec, SeparationCase, TwoClassSetSpec, TARGET_LABEL,
};
use renn_core::{Config, Descriptor, Engine, Frame, IdentityId, Memory, MemoryElement};

/// Oracle-equivalence instance count and size caps.
const ORACLE_INSTANCES: usize = 1000;
const ORACLE_MAX_MEMORY: usize = 10_000;
const ORACLE_MAX_OBSERVATIONS: usize = 8;
const ORACLE_MAX_DIMENSION: usize = 64;
const ORACLE_BUDGET: Duration = Duration::from_secs(30);

/// Contraction gate: geometries, fixed-point target and product tolerance.
const CONTRACTION_GEOMETRIES: usize = 100;
const FIXED_POINT_EPS: f64 = 1e-6;
const PRODUCT_RTOL: f64 = 1e-12;

/// Ratio-partition gate: total elements checked.
const PARTITION_ELEMENTS: usize = 100_000;

/// Stability gate tolerances (all in units of the benchmark).
const STABILITY_MODE_TOL_SEPARATED: f64 = 0.05;
const STABILITY_BIAS_MAX: f64 = 1.0; // × inlier_std, toward the outliers
const STABILITY_BIAS_MIN: f64 = -0.05; // absolute, away from the outliers
const STABILITY_STD_LO: f64 = 0.5; // × inlier_std
const STABILITY_STD_HI: f64 = 2.0; // × inlier_std
const STABILITY_BUDGET_PER_CASE: Duration = Duration::from_secs(60);

/// Multipass gate.
const PR_PRECISION_FLOOR: f64 = 0.9;
const PR_PASSES: usize = 3;

/// Boundedness gate: plateau tolerance between the two probe frames.
const PLATEAU_REL_TOL: f64 = 0.2;
const PLATEAU_PROBE_EARLY: u64 = 1000;
const PLATEAU_PROBE_LATE: u64 = 2000;

/// Determinism gate.
const WORKER_COUNTS: [usize; 3] = [1, 4, 8];

fn gate<F: FnOnce() + std::panic::UnwindSafe>(id: u32, title: &str, body: F) {
    match catch_unwind(body) {
        Ok(()) => println!("acceptance {id} ({title}): PASS"),
        Err(cause) => {
            println!("acceptance {id} ({title}): FAIL");
            resume_unwind(cause);
        }
    }
}

fn random_descriptor(rng: &mut ChaCha12Rng, dim: usize) -> Descriptor {
    Descriptor::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Log-uniform integer in [lo, hi].
fn log_uniform(rng: &mut ChaCha12Rng, lo: usize, hi: usize) -> usize {
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    (rng.random_range(a..=b).exp().round() as usize).clamp(lo, hi)
}

#[test]
fn oracle_equivalence() {
    gate(
        1,
        "batch two-nearest equals exhaustive full-sort oracle",
        || {
            let started = Instant::now();
            let mut rng = ChaCha12Rng::seed_from_u64(0xACC1);
            for instance in 0..ORACLE_INSTANCES {
                // A few instances at the declared size caps, the rest sampled.
                let (n_mem, n_obs, dim) = if instance < 3 {
                    (
                        ORACLE_MAX_MEMORY,
                        ORACLE_MAX_OBSERVATIONS,
                        ORACLE_MAX_DIMENSION,
                    )
                } else {
                    (
                        log_uniform(&mut rng, 10, ORACLE_MAX_MEMORY),
                        rng.random_range(2..=ORACLE_MAX_OBSERVATIONS),
                        log_uniform(&mut rng, 1, ORACLE_MAX_DIMENSION),
                    )
                };
                let queries: Vec<Descriptor> = (0..n_mem)
                    .map(|_| random_descriptor(&mut rng, dim))
                    .collect();
                let points: Vec<Descriptor> = (0..n_obs)
                    .map(|_| random_descriptor(&mut rng, dim))
                    .collect();
                let batch = batch_two_nearest(&queries, &points).unwrap();
                for (query, row) in queries.iter().zip(&batch) {
                    let mut all: Vec<(f64, usize)> = points
                        .iter()
                        .enumerate()
                        .map(|(i, p)| (distance(query, p).unwrap(), i))
                        .collect();
                    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    assert_eq!(row.first_index, all[0].1);
                    assert_eq!(row.second_index, all[1].1);
                    // Bitwise equality in double precision.
                    assert_eq!(row.first_distance.to_bits(), all[0].0.to_bits());
                    assert_eq!(row.second_distance.to_bits(), all[1].0.to_bits());
                }
            }
            let elapsed = started.elapsed();
            assert!(
                elapsed < ORACLE_BUDGET,
                "oracle equivalence took {elapsed:?}, budget {ORACLE_BUDGET:?}"
            );
        },
    );
}

#[test]
fn contraction_fixed_point() {
    gate(
        2,
        "matched decay contracts eligibility to the zero fixed point",
        || {
            let mut rng = ChaCha12Rng::seed_from_u64(0xACC2);
            for _ in 0..CONTRACTION_GEOMETRIES {
                let mut config = Config::new(1);
                config.rho_bar = rng.random_range(0.05..=1.0);
                config.alpha = rng.random_range(1.0..=3.0);
                config.validate().unwrap();

                // A matched geometry: d1/d2 strictly below the threshold, held
                // fixed across iterations.
                let ratio = rng.random_range(0.0..0.98) * config.rho_bar;
                let d2 = rng.random_range(0.5..10.0);
                let d1 = ratio * d2;
                let frame = Frame::new(
                    1,
                    vec![
                        Descriptor::new(vec![d1]).unwrap(),
                        Descriptor::new(vec![-d2]).unwrap(),
                    ],
                );

                let mut memory = Memory::new(&config).unwrap();
                memory.insert(MemoryElement {
                    descriptor: Descriptor::new(vec![0.0]).unwrap(),
                    identity: IdentityId(0),
                    eligibility: 1.0,
                    inserted_at: 0,
                    last_matched_at: 0,
                });

                let match_set = renn_match(&memory, &frame, &config).unwrap();
                assert_eq!(match_set.len(), 1, "geometry must match");
                let events = apply_decay(&mut memory, &match_set, &config);
                let eta = events[0].eta;
                assert!(eta < 1.0, "eta {eta} not a contraction");
                assert!(eta >= ETA_FLOOR);

                let max_steps = (FIXED_POINT_EPS.ln() / eta.ln()).ceil() as usize;
                let mut expected = events[0].eligibility_after;
                let mut steps = 1usize;
                while steps < max_steps {
                    let match_set = renn_match(&memory, &frame, &config).unwrap();
                    let events = apply_decay(&mut memory, &match_set, &config);
                    assert_eq!(events[0].eta, eta, "fixed geometry, fixed eta");
                    expected *= eta;
                    steps += 1;
                    let got = memory.elements()[0].eligibility;
                    let rel = ((got - expected) / expected).abs();
                    assert!(rel <= PRODUCT_RTOL, "e_n drifted from e0*prod(eta): {rel}");
                }
                // After ceil(ln(eps)/ln(eta)) steps the eligibility sits at or
                // below eps; the allowance covers the exact-power boundary case
                // where eta^max_steps rounds a few ulps above it.
                let e_final = memory.elements()[0].eligibility;
                assert!(
                    e_final <= FIXED_POINT_EPS * (1.0 + 1e-9),
                    "eligibility {e_final} above fixed-point bound after {steps} steps (eta {eta})"
                );
            }
        },
    );
}

#[test]
fn ratio_partition() {
    gate(
        3,
        "matched/unmatched elements partition exactly at the ratio threshold",
        || {
            let mut rng = ChaCha12Rng::seed_from_u64(0xACC3);
            let mut checked = 0usize;
            while checked < PARTITION_ELEMENTS {
                let dim = rng.random_range(1..=4);
                let n_mem = rng.random_range(200..=1500);
                let n_obs = rng.random_range(2..=8);
                let mut config = Config::new(dim);
                config.rho_bar = rng.random_range(0.3..=1.0);

                let mut memory = Memory::new(&config).unwrap();
                for _ in 0..n_mem {
                    memory.insert(MemoryElement {
                        descriptor: random_descriptor(&mut rng, dim),
                        identity: IdentityId(0),
                        eligibility: 1.0,
                        inserted_at: 0,
                        last_matched_at: 0,
                    });
                }
                let frame = Frame::new(
                    1,
                    (0..n_obs)
                        .map(|_| random_descriptor(&mut rng, dim))
                        .collect(),
                );
                let match_set = renn_match(&memory, &frame, &config).unwrap();
                let matched: std::collections::HashSet<usize> =
                    match_set.entries.iter().map(|e| e.memory_index).collect();
                assert_eq!(matched.len(), match_set.len(), "duplicate memory index");
                for (i, el) in memory.elements().iter().enumerate() {
                    let tn = two_nearest(&el.descriptor, &frame.observations).unwrap();
                    if matched.contains(&i) {
                        assert!(
                            tn.ratio() < config.rho_bar,
                            "matched element at ratio {}",
                            tn.ratio()
                        );
                    } else {
                        assert!(
                            tn.ratio() >= config.rho_bar,
                            "unmatched element at ratio {}",
                            tn.ratio()
                        );
                    }
                }
                checked += n_mem;
            }
        },
    );
}

#[test]
fn reverse_vs_forward_matching() {
    gate(
        4,
        "reverse matching recovers near-duplicate memories forward ratio rejects",
        || {
            let mut rng = ChaCha12Rng::seed_from_u64(0xACC4);
            for m in [10usize, 100, 1000] {
                let config = Config::new(1);
                let centre = 0.5;
                let mut memory = Memory::new(&config).unwrap();
                for _ in 0..m {
                    // Near-duplicates of one identity inside a 1e-4 ball.
                    memory.insert(MemoryElement {
                        descriptor: Descriptor::new(vec![centre + rng.random_range(-1e-4..1e-4)])
                            .unwrap(),
                        identity: IdentityId(7),
                        eligibility: 1.0,
                        inserted_at: 0,
                        last_matched_at: 0,
                    });
                }
                // New observation just outside the ball, plus a far observation.
                let o_true = Descriptor::new(vec![centre + 2e-3]).unwrap();
                let o_far = Descriptor::new(vec![centre + 5.0]).unwrap();

                // Forward ratio test: the observation's first and second nearest
                // memory descriptors are near-duplicates, so the ratio is ~1.
                let memory_points: Vec<Descriptor> = memory
                    .elements()
                    .iter()
                    .map(|el| el.descriptor.clone())
                    .collect();
                let forward = two_nearest(&o_true, &memory_points).unwrap();
                assert!(
                    forward.ratio() >= config.rho_bar,
                    "forward ratio {} unexpectedly below threshold for m={m}",
                    forward.ratio()
                );

                // Reverse matching: every stored element matches the close
                // observation.
                let frame = Frame::new(1, vec![o_true.clone(), o_far.clone()]);
                let match_set = renn_match(&memory, &frame, &config).unwrap();
                assert_eq!(match_set.len(), m, "all {m} elements must match");
                assert!(match_set
                    .entries
                    .iter()
                    .all(|e| e.neighbours.first_index == 0));

                let assignment = assign_identities(&match_set, &memory, &frame);
                assert!(matches!(
                    assignment.outcomes[0],
                    ObservationOutcome::Existing {
                        identity: IdentityId(7),
                        ..
                    }
                ));
                assert!(matches!(
                    assignment.outcomes[1],
                    ObservationOutcome::NewIdentity
                ));
            }
        },
    );
}

#[test]
fn stability_three_regimes() {
    gate(
        5,
        "learned distribution tracks the inlier pdf across separation regimes",
        || {
            for case in [
                SeparationCase::Separated,
                SeparationCase::Medium,
                SeparationCase::Overlap,
            ] {
                let spec = GaussianStreamSpec::standard(case);
                let config = Config::new(1);
                let started = Instant::now();
                let report = stability_experiment(&spec, &config).unwrap();
                let elapsed = started.elapsed();
                assert!(
                    elapsed < STABILITY_BUDGET_PER_CASE,
                    "{} case took {elapsed:?}",
                    case.name()
                );

                let bias = report.learned_mode - spec.inlier_mean;
                if case == SeparationCase::Separated {
                    assert!(
                        bias.abs() <= STABILITY_MODE_TOL_SEPARATED,
                        "separated-case mode bias {bias}"
                    );
                }
                assert!(
                    bias <= STABILITY_BIAS_MAX * spec.inlier_std,
                    "{}-case mode bias {bias} beyond one inlier std toward outliers",
                    case.name()
                );
                assert!(
                    bias >= STABILITY_BIAS_MIN,
                    "{}-case mode shifted away from outliers by {bias}",
                    case.name()
                );
                let std_lo = STABILITY_STD_LO * spec.inlier_std;
                let std_hi = STABILITY_STD_HI * spec.inlier_std;
                assert!(
                    report.learned_std >= std_lo && report.learned_std <= std_hi,
                    "{}-case learned std {} outside [{std_lo}, {std_hi}]",
                    case.name(),
                    report.learned_std
                );
            }
        },
    );
}

#[test]
fn multipass_precision_recall() {
    gate(
        6,
        "multipass training keeps precision high and recall non-decreasing",
        || {
            let subset_a = gen_two_class_set(&TwoClassSetSpec::standard(150, 61)).unwrap();
            let subset_b = gen_two_class_set(&TwoClassSetSpec::standard(200, 62)).unwrap();
            let mut engine = Engine::new(Config::new(1)).unwrap();

            let mut points = Vec::new();
            for pass in 1..=PR_PASSES {
                multipass_train(&mut engine, &subset_a, 1).unwrap();
                let target = dominant_assigned_identity(&engine, &subset_a, TARGET_LABEL)
                    .unwrap()
                    .expect("a target identity must emerge from training");
                let point = pr_eval(&engine, &subset_b, target, TARGET_LABEL, pass).unwrap();
                assert!(
                    point.precision >= PR_PRECISION_FLOOR,
                    "pass {pass} precision {}",
                    point.precision
                );
                points.push(point);
            }
            for pair in points.windows(2) {
                assert!(
                    pair[1].recall >= pair[0].recall,
                    "recall decreased between passes: {} -> {}",
                    pair[0].recall,
                    pair[1].recall
                );
            }
            assert!(points[PR_PASSES - 1].recall >= points[0].recall);
        },
    );
}

/// Stationary two-identity stream: two tight clusters, 32 observations each
/// per frame.
fn two_identity_frames(frames: u64, seed: u64) -> Vec<Frame> {
    let cluster = |mean: f64, seed: u64| {
        gen_gaussian_stream(&GaussianStreamSpec {
            inlier_mean: mean,
            inlier_std: 0.1,
            outlier_mean: 0.0,
            outlier_std: 1.0,
            outlier_fraction: 0.0,
            iterations: frames,
            dimension: 1,
            observations_per_frame: 32,
            seed,
        })
        .unwrap()
    };
    let a = cluster(-2.5, seed);
    let b = cluster(2.5, seed.wrapping_add(1));
    a.into_iter()
        .zip(b)
        .map(|(fa, fb)| {
            let mut observations = fa.observations;
            observations.extend(fb.observations);
            Frame::new(fa.index, observations)
        })
        .collect()
}

#[test]
fn memory_boundedness() {
    gate(
        7,
        "memory size plateaus and never violates commit thresholds",
        || {
            let config = Config::new(1);
            let frames = two_identity_frames(PLATEAU_PROBE_LATE, 4200);
            let mut engine = Engine::new(config.clone()).unwrap();
            let mut early = 0usize;
            for frame in &frames {
                engine.observe(frame).unwrap();
                let memory = engine.memory();
                for el in memory.elements() {
                    assert!(
                        el.eligibility >= config.e_bar,
                        "eligibility {} below threshold after commit",
                        el.eligibility
                    );
                    assert!(
                        memory.frame_counter() - el.last_matched_at <= config.max_stale,
                        "stale element survived commit"
                    );
                }
                if frame.index == PLATEAU_PROBE_EARLY {
                    early = memory.len();
                }
            }
            let late = engine.memory().len();
            assert!(
            (late as f64 - early as f64).abs() <= PLATEAU_REL_TOL * early as f64,
            "size drifted: N({PLATEAU_PROBE_EARLY}) = {early}, N({PLATEAU_PROBE_LATE}) = {late}"
        );
        },
    );
}

#[test]
fn determinism_and_split_resume() {
    gate(
        8,
        "outputs are identical across worker counts and snapshot splits",
        || {
            let mut spec = GaussianStreamSpec::standard(SeparationCase::Overlap);
            spec.iterations = 300;
            spec.observations_per_frame = 8;
            let frames = gen_gaussian_stream(&spec).unwrap();
            let config = Config::new(1);

            let run_all = || {
                let mut engine = Engine::new(config.clone()).unwrap();
                let reports: Vec<_> = frames.iter().map(|f| engine.observe(f).unwrap()).collect();
                (reports, engine.snapshot())
            };

            let mut outcomes = Vec::new();
            for workers in WORKER_COUNTS {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .unwrap();
                outcomes.push(pool.install(run_all));
            }
            for other in &outcomes[1..] {
                assert_eq!(
                    outcomes[0].0, other.0,
                    "frame reports differ across worker counts"
                );
                assert_eq!(
                    outcomes[0].1, other.1,
                    "snapshots differ across worker counts"
                );
            }

            // Split at the midpoint, resume from the snapshot, compare bytes.
            let split = frames.len() / 2;
            let mut head = Engine::new(config.clone()).unwrap();
            for frame in &frames[..split] {
                head.observe(frame).unwrap();
            }
            let mut resumed = Engine::restore_with(&head.snapshot(), &config).unwrap();
            for frame in &frames[split..] {
                resumed.observe(frame).unwrap();
            }
            assert_eq!(
                resumed.snapshot(),
                outcomes[0].1,
                "split/resume differs from the continuous run"
            );
        },
    );
}
