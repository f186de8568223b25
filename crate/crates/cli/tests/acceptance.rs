//! Acceptance suite: one verdict line per criterion.
//!
//! Failing criteria are reported but do not fail `cargo test` unless
//! `MNN_ACCEPTANCE_STRICT=1` is set.

use std::alloc::{GlobalAlloc, Layout, System};
use std::path::Path;
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use mnn::data::{self, LabeledDataset};
use mnn::gradcheck::{check_case, random_case, DEFAULT_STEP};
use mnn::{
    build_model, evaluate, forward, forward_with_grad, from_mlp_layers, readout, train, Activation, FopWorkspace,
    InitSpec, Mask, Metrics, NetworkShape, TrainConfig,
};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Counting;

static LIVE: AtomicUsize = AtomicUsize::new(0);
static PEAK: AtomicUsize = AtomicUsize::new(0);
static CALLS: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let ptr = System.alloc(layout);
        if !ptr.is_null() {
            let live = LIVE.fetch_add(layout.size(), Ordering::SeqCst) + layout.size();
            PEAK.fetch_max(live, Ordering::SeqCst);
            CALLS.fetch_add(1, Ordering::SeqCst);
        }
        ptr
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout);
        LIVE.fetch_sub(layout.size(), Ordering::SeqCst);
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

struct Verdict {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Verdict {
    fn new(pass: bool, summary: String) -> Self {
        Verdict {
            pass,
            summary,
            details: Vec::new(),
        }
    }
}

const SEEDS: u64 = 10;

/// The experimental protocol: ReLU mesh network, 3 ticks, Adam at 0.001
/// for 1000 full-batch epochs on a stratified 70/30 split.
fn protocol_run(all: &LabeledDataset, hidden: usize, seed: u64) -> (f64, Metrics) {
    let (train_set, test_set, _) = data::split_standardize(all, 0.7, seed).expect("split");
    let shape = NetworkShape::new(all.feature_count() + 1, hidden, all.class_count(), 3).expect("shape");
    let model = build_model(shape, Mask::mesh(&shape), Activation::Relu, InitSpec::UniformScaled, seed).expect("model");
    let cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let (model, metrics) = train(model, &train_set, &cfg).expect("training");
    (evaluate(&model, &test_set).expect("evaluation"), metrics)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn fmt_accs(accs: &[f64]) -> String {
    accs.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>().join(" ")
}

fn gradient_oracle() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut worst_cfg = String::new();
    let mut failures = 0;
    for seed in 0..100u64 {
        let neurons = 3 + (seed % 10) as usize;
        let ticks = 1 + ((seed / 10) % 5) as usize;
        let act = if seed % 2 == 0 { Activation::Tanh } else { Activation::Sigmoid };
        let case = random_case(neurons, ticks, act, seed).expect("case");
        let report = check_case(&case, DEFAULT_STEP, 1e-5).expect("check");
        if !report.pass {
            failures += 1;
        }
        if report.max_rel_err > worst {
            worst = report.max_rel_err;
            worst_cfg = format!("seed {seed}, N={neurons}, t={ticks}, {act}");
        }
    }
    let elapsed = start.elapsed();
    Verdict::new(
        failures == 0 && elapsed < Duration::from_secs(60),
        format!(
            "100 configurations, max relative error {worst:.2e} ({worst_cfg}) <= 1e-5, {failures} failing, {:.2} s < 60 s",
            elapsed.as_secs_f64()
        ),
    )
}

fn single_step_closed_form() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let activations = [Activation::Relu, Activation::Tanh, Activation::Sigmoid, Activation::Identity];
    let mut mismatches = 0usize;
    let mut checked = 0usize;
    for m in 0..1000 {
        let inputs = rng.random_range(2..=4);
        let hidden = rng.random_range(0..=5);
        let outputs = rng.random_range(1..=3);
        let shape = NetworkShape::new(inputs, hidden, outputs, 2).unwrap();
        let act = activations[m % 4];
        let model = build_model(shape, Mask::dense(&shape), act, InitSpec::UniformScaled, rng.random()).unwrap();
        let x: Vec<f64> = (0..inputs - 1).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (trace, d) = forward_with_grad(&model, &x).unwrap();
        let s0 = &trace.states[0];
        let t1 = &trace.preacts[0];
        for (i, j) in model.mask().edges() {
            for (o, &t) in t1.iter().enumerate() {
                let expected = if o == j { act.eval(t).1 * s0[i] } else { 0.0 };
                checked += 1;
                if d.get(i, j, o) != expected {
                    mismatches += 1;
                }
            }
        }
    }
    Verdict::new(
        mismatches == 0,
        format!("1000 random models at t=2, {checked} entries compared, {mismatches} differ from [o=j] phi'(T1[o]) S0[i]"),
    )
}

fn two_dim_datasets() -> Verdict {
    type Gen = fn(u64) -> LabeledDataset;
    let sets: [(&str, Gen); 4] = [
        ("moons", |s| data::gen_moons(1000, 0.1, s).unwrap()),
        ("circles", |s| data::gen_circles(1000, 0.1, 0.5, s).unwrap()),
        ("single blobs", |s| data::single_blobs(999, s).unwrap()),
        ("double blobs", |s| data::double_blobs(999, s).unwrap()),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut details = Vec::new();
    for (name, gen) in sets {
        let start = Instant::now();
        let accs: Vec<f64> = (0..SEEDS).map(|s| protocol_run(&gen(s), 5, s).0).collect();
        let good = accs.iter().filter(|&&a| a >= 0.95).count();
        pass &= good >= 8;
        parts.push(format!("{name} {good}/10"));
        details.push(format!(
            "{name}: test accuracy per seed [{}], {:.0} s",
            fmt_accs(&accs),
            start.elapsed().as_secs_f64()
        ));
    }
    let mut v = Verdict::new(pass, format!("seeds with test accuracy >= 0.95 (need 8/10): {}", parts.join(", ")));
    v.details = details;
    v
}

fn spirals_sweep() -> Verdict {
    let mut means = Vec::new();
    let mut details = Vec::new();
    for hidden in [15, 5] {
        let start = Instant::now();
        let accs: Vec<f64> = (0..SEEDS)
            .map(|s| protocol_run(&data::gen_spirals(1000, 0.1, 1.75, s).unwrap(), hidden, s).0)
            .collect();
        let (mean, std) = mean_std(&accs);
        means.push(mean);
        details.push(format!(
            "{hidden} hidden: mean {mean:.3} std {std:.3}, per seed [{}], {:.0} s",
            fmt_accs(&accs),
            start.elapsed().as_secs_f64()
        ));
    }
    let (a15, a5) = (means[0], means[1]);
    let gap = a15 - a5;
    let mut v = Verdict::new(
        a15 >= 0.95 && a5 <= 0.90 && gap >= 0.10,
        format!("mean acc(15) = {a15:.3} (need >= 0.95), acc(5) = {a5:.3} (need <= 0.90), gap {gap:.3} (need >= 0.10)"),
    );
    v.details = details;
    v
}

fn iris_runs() -> Vec<(f64, Metrics)> {
    let iris = data::iris();
    (0..SEEDS).map(|s| protocol_run(&iris, 10, s)).collect()
}

fn iris_accuracy(runs: &[(f64, Metrics)]) -> Verdict {
    let accs: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let (mean, std) = mean_std(&accs);
    let mut v = Verdict::new(
        mean >= 0.90 && std <= 0.05,
        format!("mean test accuracy {mean:.4} (need >= 0.90), std {std:.4} (need <= 0.05)"),
    );
    v.details.push(format!("per seed [{}]", fmt_accs(&accs)));
    v
}

/// Loss at epoch 1000 below half the loss at epoch 1, and a non-increasing
/// 100-epoch moving average. Consecutive window means differ by
/// `(loss[k + 100] - loss[k]) / 100`, so the latter is checked exactly as
/// `loss[k + 100] <= loss[k]`.
fn iris_convergence(runs: &[(f64, Metrics)]) -> Verdict {
    let mut ok = 0;
    let mut details = Vec::new();
    for (seed, (_, metrics)) in runs.iter().enumerate() {
        let mut losses = vec![metrics.initial.expect("initial row").loss];
        losses.extend(metrics.losses());
        let (first, last) = (losses[1], losses[1000]);
        let halved = last < 0.5 * first;
        let rises = (0..losses.len() - 100).filter(|&k| losses[k + 100] > losses[k]).count();
        if halved && rises == 0 {
            ok += 1;
        }
        details.push(format!(
            "seed {seed}: loss(1) {first:.4}, loss(1000) {last:.4}, ratio {:.3}, rising windows {rises}",
            last / first
        ));
    }
    let mut v = Verdict::new(
        ok == runs.len(),
        format!("{ok}/{} Iris runs halve the loss and have a non-increasing smoothed loss", runs.len()),
    );
    v.details = details;
    v
}

fn gradient_memory(ticks: usize) -> (usize, usize, usize) {
    let shape = NetworkShape::new(3, 5, 2, ticks).unwrap();
    let model = build_model(shape, Mask::dense(&shape), Activation::Tanh, InitSpec::UniformScaled, 7).unwrap();
    let x = [0.4, -0.8];
    let base = LIVE.load(Ordering::SeqCst);
    PEAK.store(base, Ordering::SeqCst);
    let mut ws = FopWorkspace::new(&model);
    let calls_before_run = CALLS.load(Ordering::SeqCst);
    ws.run(&model, &x).unwrap();
    let run_calls = CALLS.load(Ordering::SeqCst) - calls_before_run;
    let mut g = vec![0.0; ws.edge_count()];
    ws.edge_gradient(model.shape(), &[0.3, -0.3], &mut g);
    let peak = PEAK.load(Ordering::SeqCst) - base;
    drop((ws, g));
    (peak, run_calls, model.neurons())
}

fn memory_contract() -> Verdict {
    let (p3, c3, n) = gradient_memory(3);
    let (p30, c30, _) = gradient_memory(30);
    let tensor = n * n * n * std::mem::size_of::<f64>();
    let pass = p3 == p30 && c3 == 0 && c30 == 0 && p3 <= 3 * tensor;
    Verdict::new(
        pass,
        format!(
            "N={n}: peak live bytes {p3} at t=3 and {p30} at t=30 (one N^3 tensor is {tensor}), {c3}/{c30} allocations during propagation"
        ),
    )
}

fn mlp_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let activations = [Activation::Relu, Activation::Tanh, Activation::Sigmoid, Activation::Identity];
    let mut worst: f64 = 0.0;
    for m in 0..100 {
        let layers = rng.random_range(2..=3);
        let widths: Vec<usize> = (0..=layers).map(|_| rng.random_range(2..=8)).collect();
        let blocks: Vec<Array2<f64>> = widths
            .windows(2)
            .map(|w| Array2::from_shape_fn((w[0], w[1]), |_| rng.random_range(-1.0..1.0)))
            .collect();
        let act = activations[m % 4];
        let model = from_mlp_layers(&blocks, act).unwrap().with_clamp_inputs(false);
        let x: Vec<f64> = (0..widths[0] - 1).map(|_| rng.random_range(-2.0..2.0)).collect();

        let mut v = Array1::from(x.clone());
        v = ndarray::concatenate![ndarray::Axis(0), v, Array1::from(vec![1.0])];
        for w in &blocks {
            v = v.dot(w).mapv(|t| act.value(t));
        }
        let got = readout(&forward(&model, &x).unwrap(), model.shape()).unwrap();
        for (a, b) in got.iter().zip(v.iter()) {
            let scale = a.abs().max(b.abs());
            if scale > 0.0 {
                worst = worst.max((a - b).abs() / scale);
            }
        }
    }
    Verdict::new(worst <= 1e-12, format!("100 random MLPs, max relative deviation {worst:.2e} <= 1e-12"))
}

fn run_twice(dir: &Path, args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_mnn"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    let mut bytes = out.stdout;
    bytes.extend(out.status.code().unwrap_or(-1).to_le_bytes());
    bytes
}

fn cli_determinism() -> Verdict {
    let runs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let commands: Vec<Vec<&str>> = vec![
        vec!["gen", "--dataset", "moons", "--n", "1000", "--noise", "0.1", "--seed", "7", "--out", "moons.csv"],
        vec!["gen", "--dataset", "circles", "--seed", "7", "--out", "circles.csv"],
        vec!["gen", "--dataset", "spirals", "--seed", "7", "--out", "spirals.csv"],
        vec!["gen", "--dataset", "single-blobs", "--n", "999", "--seed", "7", "--out", "single.csv"],
        vec!["gen", "--dataset", "double-blobs", "--n", "999", "--seed", "7", "--out", "double.csv"],
        vec!["gen", "--dataset", "iris", "--out", "iris.csv"],
        vec![
            "train", "--data", "moons.csv", "--epochs", "100", "--lr", "0.01", "--seed", "1", "--out", "moons.json",
            "--metrics", "moons_metrics.csv",
        ],
        vec![
            "train", "--data", "iris.csv", "--hidden", "10", "--epochs", "100", "--seed", "1", "--out", "iris.json",
            "--metrics", "iris_metrics.csv",
        ],
        vec!["eval", "--model", "moons.json", "--data", "moons.csv", "--split", "train"],
        vec!["eval", "--model", "iris.json", "--data", "iris.csv", "--split", "test"],
        vec!["eval", "--model", "iris.json", "--data", "iris.csv", "--split", "all"],
        vec!["gradcheck", "--n", "8", "--ticks", "4", "--activation", "tanh", "--seed", "3"],
        vec!["gradcheck", "--n", "10", "--ticks", "3", "--activation", "sigmoid", "--seed", "4", "--json"],
        vec!["plot", "--model", "moons.json", "--data", "moons.csv", "--resolution", "100", "--pgm", "r.pgm", "--csv", "r.csv"],
    ];
    let expected_files = commands
        .iter()
        .flat_map(|args| args.windows(2))
        .filter(|w| matches!(w[0], "--out" | "--metrics" | "--pgm" | "--csv"))
        .count();
    let mut differing = Vec::new();
    for args in &commands {
        let a = run_twice(runs[0].path(), args);
        let b = run_twice(runs[1].path(), args);
        if a != b {
            differing.push(format!("stdout of {}", args[0]));
        }
    }
    let mut files = 0;
    for entry in std::fs::read_dir(runs[0].path()).unwrap() {
        let name = entry.unwrap().file_name();
        let a = std::fs::read(runs[0].path().join(&name)).unwrap();
        let b = std::fs::read(runs[1].path().join(&name)).ok();
        files += 1;
        if b.as_deref() != Some(&a[..]) {
            differing.push(name.to_string_lossy().into_owned());
        }
    }
    Verdict::new(
        differing.is_empty() && files == expected_files,
        format!(
            "{} commands run twice, {files} of {expected_files} output files compared, differing: [{}]",
            commands.len(),
            differing.join(", ")
        ),
    )
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored.
    let strict = std::env::var("MNN_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut record = |id: usize, name: &'static str, f: &dyn Fn() -> Verdict| {
        let start = Instant::now();
        let v = f();
        println!(
            "{} {id}. {name}: {} [{:.1} s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.summary,
            start.elapsed().as_secs_f64()
        );
        for d in &v.details {
            println!("       {d}");
        }
        results.push((id, name, v));
    };

    record(1, "gradient oracle", &gradient_oracle);
    record(2, "single-step closed form", &single_step_closed_form);
    record(3, "two-dimensional datasets", &two_dim_datasets);
    record(4, "spirals sweep", &spirals_sweep);
    let start = Instant::now();
    let iris = iris_runs();
    println!("     (10 Iris trainings shared by criteria 5 and 6: {:.0} s)", start.elapsed().as_secs_f64());
    record(5, "iris accuracy", &|| iris_accuracy(&iris));
    record(6, "iris convergence", &|| iris_convergence(&iris));
    record(7, "memory contract", &memory_contract);
    record(8, "MLP equivalence", &mlp_equivalence);
    record(9, "CLI determinism", &cli_determinism);

    let passed = results.iter().filter(|r| r.2.pass).count();
    println!("{passed}/{} acceptance criteria passed", results.len());
    if strict && passed != results.len() {
        std::process::exit(1);
    }
}
