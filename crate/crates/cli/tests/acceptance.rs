//! End-to-end acceptance checks at their pinned tolerances. Prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.
//!
//! `F1B_SWEEP_STEP` coarsens the parameter-sweep grid (default 0.2).

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use f1b_core::cells::{run, run_traced, CellState, LinearClassifier};
use f1b_core::constructions::{
    choose_a, lift, mechanism_of, vanilla_k2_params, GruK1Construction, ModelSetup, VanillaK2Construction,
};
use f1b_core::linalg::sigmoid;
use f1b_core::process::{enumerate_paths, FlagPlacement, DEFAULT_ENUMERATION_CAP};
use f1b_core::rng::{derive_seed, CounterRng};
use f1b_core::simulation::{mc_distributions, sweep_vanilla_k1, SweepGrid};
use f1b_core::trainer::{
    backward, numerical_gradient, relative_error, replay_figure4, BiasChoice, TrainableModel,
};
use f1b_core::verification::{certify_gru_interval, certify_vanilla_k2, exact_error, moment_recursion};
use f1b_core::cells::{CellParams, VanillaParams};
use f1b_core::process::{sample_path, FlagEncoding};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn sweep_step() -> f64 {
    std::env::var("F1B_SWEEP_STEP").ok().and_then(|s| s.parse().ok()).unwrap_or(0.2)
}

/// Gated scalar construction with `b = 1` and the gate chosen for margin 0.1.
fn gated(n: usize) -> GruK1Construction {
    GruK1Construction::new(choose_a(n, 0.1).expect("valid margin"), 1.0)
}

fn gated_protocol(kinds: &[f1b_core::cells::ModelKind], ns: &[usize], limit: u64) -> Verdict {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut pass = true;
    for &n in ns {
        let c = gated(n);
        let (gate, scale) = (sigmoid(c.a), 1f64.tanh());
        let expected = scale * (2.0 * gate.powi(n as i32) - 1.0);
        for &kind in kinds {
            let setup = c.setup_for(kind).expect("construction");
            let r = exact_error(&setup, n).expect("enumerable");
            pass &= r.errors == 0;
            notes.push(format!("{kind} n={n}: {}/{}", r.errors, r.total_paths));
        }
        let cert = certify_gru_interval(gate, scale, n).expect("valid gate");
        let gap = (cert.certified_margin - expected).abs();
        pass &= cert.certified && gap <= 1e-12;
        notes.push(format!("cert n={n}: margin {:.6} (|Δ| {gap:.1e})", cert.certified_margin));
    }
    let elapsed = start.elapsed();
    pass &= within(elapsed, limit);
    verdict(pass, format!("{} [{:.1?}]", notes.join("; "), elapsed))
}

fn criterion_1() -> Verdict {
    gated_protocol(&[f1b_core::cells::ModelKind::Gru], &[4, 8, 12], 30)
}

fn criterion_2() -> Verdict {
    use f1b_core::cells::ModelKind::{Lstm, Pru};
    gated_protocol(&[Pru, Lstm], &[4, 10], 30)
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let c = VanillaK2Construction::new(0.5, 0.5, -2.0);
    let setup = vanilla_k2_params(&c).expect("valid construction");
    let mut pass = setup.classifier == LinearClassifier::new(vec![1.0, 0.5], 0.0)
        && setup.encoding == FlagEncoding::Binary
        && setup.s0 == CellState::hidden(vec![0.0, -1.0]);
    let mut notes = Vec::new();
    for n in [4, 8, 12] {
        let r = exact_error(&setup, n).expect("enumerable");
        pass &= r.errors == 0;
        notes.push(format!("n={n}: {}/{}", r.errors, r.total_paths));
    }
    let cert = certify_vanilla_k2(&c, 12).expect("valid construction");
    pass &= cert.certified && cert.holds_for_all_n && (cert.certified_margin - 0.25).abs() <= 1e-12;
    notes.push(format!("all-n certificate {} margin {}", cert.holds_for_all_n, cert.certified_margin));

    let n = 8;
    let (mut transitions, mut bad) = (0u64, 0u64);
    for path in enumerate_paths(n, DEFAULT_ENUMERATION_CAP).expect("enumerable") {
        let (traj, _) = run_traced(&setup.params, &setup.s0, &path, setup.encoding).expect("runs");
        for t in 1..=n {
            let x = path.encode(t, setup.encoding).expect("in range");
            transitions += 1;
            if mechanism_of(&c, &traj[t - 1], x).len() != 2 {
                bad += 1;
            }
        }
    }
    pass &= bad == 0;
    notes.push(format!("{transitions} transitions, {bad} without exactly two mechanisms"));
    let elapsed = start.elapsed();
    pass &= within(elapsed, 30);
    verdict(pass, format!("{} [{:.1?}]", notes.join("; "), elapsed))
}

fn lifted_gru(n: usize) -> (ModelSetup, ModelSetup) {
    let base = gated(n).gru_setup().expect("construction");
    let (params, s0) = lift(&base.params, &base.s0);
    let lifted = ModelSetup {
        params,
        s0,
        encoding: base.encoding,
        classifier: base.classifier.lifted(),
    };
    (base, lifted)
}

fn criterion_4() -> Verdict {
    let start = Instant::now();
    let n = 10;
    let (base, lifted) = lifted_gru(n);
    let mut pass = lifted.params.dim() == 2;
    let mut nonzero = 0u64;
    for path in enumerate_paths(n, DEFAULT_ENUMERATION_CAP).expect("enumerable") {
        let traj = run(&lifted.params, &lifted.s0, &path, lifted.encoding).expect("runs");
        nonzero += traj.iter().filter(|s| s.readout()[1] != 0.0).count() as u64;
    }
    let a = exact_error(&base, n).expect("enumerable");
    let b = exact_error(&lifted, n).expect("enumerable");
    pass &= nonzero == 0 && a == b && b.errors == 0;
    let elapsed = start.elapsed();
    pass &= within(elapsed, 10);
    verdict(
        pass,
        format!("extra coordinate non-zero in {nonzero} states; errors {} → {} [{elapsed:.1?}]", a.errors, b.errors),
    )
}

fn criterion_5() -> Verdict {
    let start = Instant::now();
    let step = sweep_step();
    let grid = SweepGrid::cube(-2.0, 2.0, step).expect("grid");
    let r = sweep_vanilla_k1(&grid, 20, 2000, 0).expect("sweep");
    let failing = r.points.iter().filter(|p| !(p.error > 0.01)).count();
    verdict(
        failing == 0 && r.points.len() == grid.len(),
        format!(
            "{} points (step {step}), min error {:.4} at {:?}, {failing} at or below 0.01 [{:.1?}]",
            r.points.len(),
            r.min_error,
            r.argmin,
            start.elapsed()
        ),
    )
}

fn scalar_vanilla(u: f64, w1: f64, w2: f64) -> ModelSetup {
    ModelSetup {
        params: CellParams::Vanilla(VanillaParams::scalar(u, w1, w2)),
        s0: CellState::hidden(vec![0.0]),
        encoding: FlagEncoding::Symmetric,
        classifier: LinearClassifier::new(vec![1.0], 0.0),
    }
}

fn threshold_errors(setup: &ModelSetup, times: &[usize]) -> Vec<f64> {
    let s = mc_distributions(setup, 20, FlagPlacement::Fixed(10), 10_000, 0, times, 61).expect("simulation");
    times.iter().map(|&t| s.snapshot(t).unwrap().threshold_errors[0].unwrap()).collect()
}

fn criterion_6() -> Verdict {
    let start = Instant::now();
    let keeps = threshold_errors(&scalar_vanilla(0.8, 0.9, 0.1), &[10, 20]);
    let loads = threshold_errors(&scalar_vanilla(2.0, 0.7, 0.1), &[10]);
    verdict(
        keeps[0] < 0.05 && keeps[1] > 0.2 && loads[0] > 0.05,
        format!(
            "(0.8,0.9,0.1): t=10 {:.4}, t=20 {:.4}; (2.0,0.7,0.1): t=10 {:.4} [{:.1?}]",
            keeps[0],
            keeps[1],
            loads[0],
            start.elapsed()
        ),
    )
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    let strong = threshold_errors(&GruK1Construction::new(4.0, 1.0).gru_setup().unwrap(), &[20]);
    let weak = threshold_errors(&GruK1Construction::new(0.5, 1.0).gru_setup().unwrap(), &[20]);
    verdict(
        strong[0] == 0.0 && weak[0] > 0.2,
        format!("a=4: t=20 {}; a=0.5: t=20 {:.4} [{:.1?}]", strong[0], weak[0], start.elapsed()),
    )
}

fn criterion_8() -> Verdict {
    let start = Instant::now();
    let n = 20;
    let paths = 100_000;
    let times: Vec<usize> = (0..=n).collect();
    let mut pass = true;
    let mut notes = Vec::new();
    for gate in [0.62, 0.9, 0.982] {
        let c = GruK1Construction::from_gate(gate, 1.0).expect("valid gate");
        let m = moment_recursion(c.gate(), c.scale(), n).expect("valid gate");
        let symmetric = (0..=n).all(|t| m.mean_pos[t] == -m.mean_neg[t] && m.var_pos[t] == m.var_neg[t]);
        let s = mc_distributions(&c.gru_setup().unwrap(), n, FlagPlacement::Random, paths, 0, &times, 61)
            .expect("simulation");
        let mut worst: f64 = 0.0;
        for t in 0..=n {
            let mc = s.snapshot(t).unwrap().moments[0].expect("paths present");
            let checks = [
                (mc.mean_pos, m.mean_pos[t], mc.var_pos),
                (mc.mean_neg, m.mean_neg[t], mc.var_neg),
                (mc.var_pos, m.var_pos[t], mc.m4_pos - mc.var_pos * mc.var_pos),
                (mc.var_neg, m.var_neg[t], mc.m4_neg - mc.var_neg * mc.var_neg),
            ];
            for (estimate, exact, spread) in checks {
                let se = (spread.max(0.0) / paths as f64).sqrt();
                let z = if estimate == exact { 0.0 } else { (estimate - exact).abs() / se };
                worst = worst.max(z);
            }
        }
        pass &= symmetric && worst <= 4.0;
        notes.push(format!("A={gate}: max {worst:.2} SE, mirror {symmetric}"));
    }
    verdict(pass, format!("{} [{:.1?}]", notes.join("; "), start.elapsed()))
}

fn criterion_9() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for config in 0..50u64 {
        let mut rng = CounterRng::new(derive_seed(0x6C, config));
        let n = 1 + rng.below(12) as usize;
        let mut m = TrainableModel::random(1.0, derive_seed(config, 1));
        m.head = LinearClassifier::new(vec![rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)], rng.uniform(-0.5, 0.5));
        let batch: Vec<_> = (0..8).map(|i| sample_path(n, derive_seed(derive_seed(config, 2), i)).unwrap()).collect();
        let analytic = backward(&m, &batch).expect("batch").flat;
        let numeric = numerical_gradient(&m, &batch, 1e-5).expect("batch");
        for (a, f) in analytic.iter().zip(&numeric) {
            worst = worst.max(relative_error(*a, *f));
        }
    }
    verdict(worst < 1e-5, format!("max relative error {worst:.2e} over 50 configurations [{:.1?}]", start.elapsed()))
}

fn criterion_10() -> Verdict {
    let start = Instant::now();
    let r = replay_figure4(10_000, 0, BiasChoice::Recovered).expect("replay");
    let s2_50 = r.threshold_error(50, 1).unwrap();
    let s2_51 = r.threshold_error(51, 1).unwrap();
    let s1_100 = r.threshold_error(100, 0).unwrap();
    let elapsed = start.elapsed();
    let pass = s2_50 < 0.05 && s2_51 > 0.2 && s1_100 < 0.05 && r.final_linear_error < 0.02 && within(elapsed, 120);
    verdict(
        pass,
        format!(
            "bias {:?}: S2 t=50 {s2_50:.4}, S2 t=51 {s2_51:.4}, S1 t=100 {s1_100:.4}, final linear {:.4} [{elapsed:.1?}]",
            r.bias, r.final_linear_error
        ),
    )
}

/// The zero-bias reading of the published weights, reported for reference.
fn zero_bias_note() -> String {
    let r = replay_figure4(10_000, 0, BiasChoice::Zero).expect("replay");
    format!(
        "zero-bias replay: S2 t=50 {:.4}, S2 t=51 {:.4}, S1 t=100 {:.4}, final linear {:.4}",
        r.threshold_error(50, 1).unwrap(),
        r.threshold_error(51, 1).unwrap(),
        r.threshold_error(100, 0).unwrap(),
        r.final_linear_error
    )
}

fn lab(workers: usize, dir: &Path, args: &[String]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_f1b-lab"))
        .args(args)
        .arg("--workers")
        .arg(workers.to_string())
        .current_dir(dir)
        .env_remove("F1B_WORKERS")
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} exited {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)))
    }
}

fn args(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn determinism_runs(lifted_params: &Path) -> Vec<Vec<String>> {
    let mut runs = Vec::new();
    for n in ["4", "8", "12"] {
        runs.push(args(&["verify", "--model", "gru", "--n", n, "--out", &format!("c1_verify_{n}.json")]));
        runs.push(args(&["certify", "--model", "gru", "--n", n, "--out", &format!("c1_certify_{n}.json")]));
    }
    for model in ["pru", "lstm"] {
        for n in ["4", "10"] {
            runs.push(args(&["verify", "--model", model, "--n", n, "--out", &format!("c2_{model}_{n}.json")]));
        }
    }
    let k2 = "b1=0.5,w21=0.5,b2=-2";
    for n in ["4", "8", "12"] {
        runs.push(args(&["verify", "--model", "vanilla", "--construct", k2, "--n", n, "--out", &format!("c3_verify_{n}.json")]));
    }
    runs.push(args(&["certify", "--model", "vanilla", "--construct", k2, "--n", "12", "--out", "c3_certify.json"]));
    runs.push(args(&["verify", "--params", lifted_params.to_str().unwrap(), "--n", "10", "--out", "c4_lifted.json"]));
    let step = sweep_step().to_string();
    runs.push(args(&["sweep", "--grid", &format!("-2:2:{step}"), "--n", "20", "--paths", "2000", "--out", "c5_sweep.csv"]));
    for (name, construct) in [("keep", "u=0.8,w1=0.9,w2=0.1"), ("load", "u=2.0,w1=0.7,w2=0.1")] {
        runs.push(args(&[
            "simulate", "--model", "vanilla", "--construct", construct, "--n", "20", "--flag-at", "10",
            "--paths", "10000", "--snapshots", "10,20", "--out", &format!("c6_{name}.csv"),
        ]));
    }
    for a in ["4", "0.5"] {
        runs.push(args(&[
            "simulate", "--model", "gru", "--construct", &format!("a={a},b=1"), "--n", "20", "--flag-at", "10",
            "--paths", "10000", "--snapshots", "20", "--out", &format!("c7_a{a}.csv"),
        ]));
    }
    let all_times: Vec<String> = (0..=20).map(|t| t.to_string()).collect();
    for gate in ["0.62", "0.9", "0.982"] {
        runs.push(args(&[
            "simulate", "--model", "gru", "--A", gate, "--n", "20", "--paths", "100000",
            "--snapshots", &all_times.join(","), "--format", "json", "--out", &format!("c8_{gate}.json"),
        ]));
    }
    runs.push(args(&["train", "--n", "10", "--epochs", "2", "--eval-paths", "2000", "--out", "c9_train.json"]));
    runs.push(args(&["replay-fig4", "--paths", "10000", "--out", "c10_replay.csv"]));
    runs
}

fn files_in(dir: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
}

fn criterion_11() -> Verdict {
    let start = Instant::now();
    let root = tempfile::tempdir().expect("temp dir");
    let lifted_path = root.path().join("lifted.json");
    std::fs::write(&lifted_path, serde_json::to_vec_pretty(&lifted_gru(10).1).unwrap()).unwrap();
    let runs = determinism_runs(&lifted_path);
    let mut dirs = Vec::new();
    for workers in [1usize, 8] {
        let dir = root.path().join(format!("w{workers}"));
        std::fs::create_dir(&dir).unwrap();
        for a in &runs {
            if let Err(e) = lab(workers, &dir, a) {
                return verdict(false, e);
            }
        }
        dirs.push(dir);
    }
    let (one, eight) = (files_in(&dirs[0]), files_in(&dirs[1]));
    let names = |v: &[PathBuf]| v.iter().map(|p| p.file_name().unwrap().to_owned()).collect::<Vec<_>>();
    if names(&one) != names(&eight) {
        return verdict(false, "different output file sets");
    }
    let differing: Vec<String> = one
        .iter()
        .zip(&eight)
        .filter(|(a, b)| std::fs::read(a).unwrap() != std::fs::read(b).unwrap())
        .map(|(a, _)| a.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    verdict(
        differing.is_empty(),
        format!(
            "{} commands, {} files compared, differing: {:?} [{:.1?}]",
            runs.len(),
            one.len(),
            differing,
            start.elapsed()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 11] = [
        ("gated scalar GRU: zero exact error and certified margin", criterion_1),
        ("gated scalar PRU and LSTM: zero exact error", criterion_2),
        ("two-dimensional vanilla construction: exact, all-n certificate, two mechanisms", criterion_3),
        ("lifting to K=2 keeps the extra coordinate at zero", criterion_4),
        ("scalar vanilla sweep: every grid point errs above 0.01", criterion_5),
        ("scalar vanilla memory loss and failed loading", criterion_6),
        ("scalar GRU separation versus forgetting", criterion_7),
        ("moment recursion matches Monte-Carlo within 4 SE", criterion_8),
        ("back-propagation matches central differences", criterion_9),
        ("replay of published two-dimensional weights", criterion_10),
        ("outputs identical with 1 and 8 workers", criterion_11),
    ];
    let only: Option<Vec<usize>> = std::env::var("F1B_CRITERIA")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let v = check();
        println!("[{}] {id:>2}. {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if id == 10 {
            println!("     note: {}", zero_bias_note());
        }
        if !v.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
