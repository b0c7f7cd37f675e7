//! Acceptance harness: prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use invertkit::commands::{evaluate, train};
use invertkit::config::{
    AnalysisConfig, Command, DatasetConfig, FeatureConfig, NetworkConfig, RunConfig, TrainSection,
};
use invertkit::formats::{encode_checkpoint, load_checkpoint};
use invertkit::synth::{write_corpus, CLASSES};
use invertkit_core::train::TrainConfig;

use common::checks::{
    adam_vs_reference, conv_vs_naive, hog_vs_oracle, lbp_vs_oracle, metric_properties,
    perturbation_properties, sampling_properties, upconv_vs_two_step,
};
use common::gradients::{corrupted_conv_check, hog_net_check, op_suite};
use common::runs::{mode_comparison, overfit_one_image, resume_trajectories};

/// Full-run settings for the held-out HOG inversion.
const FULL_STEPS: u64 = 5000;
const FULL_BATCH: usize = 16;
const FULL_SIZE: usize = 64;
const FULL_PER_CLASS: usize = 26;
const FULL_DIVISOR: usize = 8;
const FULL_SEED: u64 = 7;
const FULL_LIMIT_SECONDS: f64 = 30.0 * 60.0;
const FULL_TARGET: f64 = 0.9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion(id: &str, name: &str, failures: &mut Vec<String>, f: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let o = f();
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    println!(
        "{verdict} {id} {name}: {} [{:.1}s]",
        o.detail,
        start.elapsed().as_secs_f64()
    );
    if !o.pass {
        failures.push(id.to_string());
    }
}

fn gradient_suite() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;
    for r in op_suite(20) {
        pass &= r.passed();
        if !r.passed() {
            notes.push(format!("{} failed ({})", r.name, r.report.max_relative_error));
        }
    }
    let hog = hog_net_check(6);
    pass &= hog.passed();
    let corrupted_rejected = !corrupted_conv_check().passed();
    pass &= corrupted_rejected;
    let seconds = start.elapsed().as_secs_f64();
    pass &= seconds < 120.0;
    notes.push(format!(
        "hog net {} entries, worst rel {:.2e}; corrupted gradient rejected: {corrupted_rejected}; {seconds:.0}s of 120s",
        hog.checked, hog.max_relative_error
    ));
    outcome(pass, notes.join("; "))
}

fn oracles() -> Outcome {
    let conv = conv_vs_naive(40);
    let upconv = upconv_vs_two_step(40);
    let lbp = lbp_vs_oracle(50);
    let hog = hog_vs_oracle(12);
    let adam = adam_vs_reference(10, 100);
    outcome(
        conv <= 1e-6 && upconv == 0 && lbp == 0 && hog <= 1e-6 && adam <= 1e-6,
        format!(
            "conv {conv:.1e}, upconv {upconv} inexact, lbp {lbp} count mismatches, hog {hog:.1e}, adam {adam:.1e}"
        ),
    )
}

fn shapes() -> Outcome {
    let (cells, bad) = common::tables::mismatches();
    let mut detail = format!("{cells} output sizes, {} mismatches", bad.len());
    if let Some(first) = bad.first() {
        detail.push_str(&format!(" (first: {first})"));
    }
    outcome(bad.is_empty() && cells > 0, detail)
}

fn overfit() -> Outcome {
    let losses = overfit_one_image(500);
    let best = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = best / losses[0];
    outcome(
        ratio < 0.01,
        format!("best loss {:.3}% of initial over {} steps", 100.0 * ratio, losses.len()),
    )
}

fn full_run_config(data: PathBuf, out: PathBuf) -> RunConfig {
    let mut run = RunConfig::new(Command::Train, FULL_SEED, out);
    run.dataset = Some(DatasetConfig {
        image_dir: data,
        target_size: [FULL_SIZE, FULL_SIZE],
        split: 0.9,
        grayscale_features: true,
    });
    run.features = Some(FeatureConfig {
        kind: "hog".into(),
        cell: 8,
        encoder: None,
        tap: None,
    });
    run.network = Some(NetworkConfig {
        width_divisor: FULL_DIVISOR,
    });
    run.train = Some(TrainSection {
        steps: FULL_STEPS,
        batch: FULL_BATCH,
        lr: 1e-3,
        beta1: 0.9,
        beta2: 0.999,
        adam_eps: 1e-8,
        lr_decay: TrainConfig::default_decay(FULL_STEPS),
        mode: "fixed_encoder".into(),
        divergence_factor: 1e3,
        montage_every: 1000,
        resume: None,
        encoder_input: None,
    });
    run
}

/// The held-out HOG run, returning the outcome and its checkpoint path
/// for the persistence criterion.
fn full_hog_run(work: &tempfile::TempDir) -> (Outcome, Option<PathBuf>) {
    let start = Instant::now();
    let data = work.path().join("data");
    let images = match write_corpus(&data, FULL_PER_CLASS, FULL_SIZE, FULL_SEED) {
        Ok(n) => n,
        Err(e) => return (outcome(false, format!("corpus: {e}")), None),
    };
    let run = full_run_config(data.clone(), work.path().join("hog"));
    let summary = match run.write().and_then(|_| train(&run)) {
        Ok(s) => s,
        Err(e) => return (outcome(false, format!("training failed: {e}")), None),
    };
    let seconds = start.elapsed().as_secs_f64();
    let mut baseline = RunConfig::new(Command::Evaluate, FULL_SEED, work.path().join("mean"));
    baseline.dataset = run.dataset.clone();
    baseline.analysis = Some(AnalysisConfig {
        baseline: Some("mean".into()),
        images: Some("test".into()),
        ..Default::default()
    });
    let mean = run_and(&baseline, evaluate);
    let error = summary.test_error.unwrap_or(f64::NAN);
    let workers = rayon::current_num_threads();
    let pass = error < FULL_TARGET && seconds <= FULL_LIMIT_SECONDS;
    let detail = format!(
        "{images} synthetic images ({} classes) at {FULL_SIZE}x{FULL_SIZE}, {} steps, batch {FULL_BATCH}, width/{FULL_DIVISOR}: held-out normalized error {error:.4} (target < {FULL_TARGET}; mean-image baseline {}), {seconds:.0}s of {FULL_LIMIT_SECONDS:.0}s on {workers} worker(s)",
        CLASSES.len(),
        summary.steps,
        mean.map_or("n/a".into(), |m| format!("{m:.4}")),
    );
    (outcome(pass, detail), Some(summary.checkpoint))
}

fn run_and<T>(
    run: &RunConfig,
    f: impl FnOnce(&RunConfig) -> invertkit::Result<T>,
) -> Option<T> {
    run.write().ok()?;
    f(run).ok()
}

fn mode_ordering() -> Outcome {
    let (fixed, auto) = mode_comparison(300);
    outcome(
        auto <= fixed,
        format!("final training loss: autoencoder {auto:.3}, fixed encoder {fixed:.3}"),
    )
}

fn perturbations() -> Outcome {
    let r = perturbation_properties(500);
    outcome(
        r.norm_ratio_error <= 1e-6
            && r.idempotence_gap <= 1e-6
            && r.partition_exact
            && r.endpoints_exact,
        format!(
            "norm change {:.1e}, idempotence gap {:.1e}, top-k partition exact: {}, interpolation endpoints exact: {}",
            r.norm_ratio_error, r.idempotence_gap, r.partition_exact, r.endpoints_exact
        ),
    )
}

fn sampling() -> Outcome {
    let (worst, outside) = sampling_properties(10_000, 2.0);
    outcome(
        worst <= 0.02 && outside == 0,
        format!("worst zero-fraction gap {worst:.4} over 10000 draws, {outside} draws outside the scaled range"),
    )
}

fn persistence(checkpoint: Option<PathBuf>) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    match checkpoint {
        Some(path) => {
            let original = fs::read(&path).unwrap_or_default();
            let round = load_checkpoint(&path).map(|cp| encode_checkpoint(&cp));
            let same = round.as_ref().is_ok_and(|b| *b == original);
            pass &= same && !original.is_empty();
            notes.push(format!(
                "{} save-load-save of a {} byte checkpoint byte-identical: {same}",
                path.file_name().unwrap_or_default().to_string_lossy(),
                original.len()
            ));
        }
        None => {
            pass = false;
            notes.push("no checkpoint from the full run".into());
        }
    }
    let (straight, resumed) = resume_trajectories(40, 17);
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let exact = bits(&straight) == bits(&resumed);
    pass &= exact;
    notes.push(format!(
        "resume at step 17 of 40 reproduces the loss trajectory bit for bit: {exact}"
    ));
    outcome(pass, notes.join("; "))
}

fn metric() -> Outcome {
    let (worst, perfect) = metric_properties(60);
    outcome(
        worst <= 1e-6 && perfect == 0.0,
        format!("worst gap to brute force {worst:.1e} over 60 sets, perfect model {perfect}"),
    )
}

fn main() {
    let mut failures = Vec::new();
    let work = tempfile::tempdir().expect("temporary directory");
    criterion("1", "gradient suite", &mut failures, gradient_suite);
    criterion("2", "oracle equivalence", &mut failures, oracles);
    criterion("3", "shape conformance", &mut failures, shapes);
    criterion("4a", "overfit one image", &mut failures, overfit);
    let mut checkpoint = None;
    criterion("4b", "held-out HOG inversion", &mut failures, || {
        let (o, cp) = full_hog_run(&work);
        checkpoint = cp;
        o
    });
    criterion("4c", "autoencoder vs fixed encoder", &mut failures, mode_ordering);
    criterion("5", "perturbation properties", &mut failures, perturbations);
    criterion("6", "sampling", &mut failures, sampling);
    criterion("7", "persistence", &mut failures, || persistence(checkpoint.clone()));
    criterion("8", "metric", &mut failures, metric);
    if failures.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed {}", failures.join(", "));
        std::process::exit(1);
    }
}
