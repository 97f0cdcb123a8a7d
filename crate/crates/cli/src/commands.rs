//! One function per subcommand.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use f1b_core::cells::{CellParams, CellState, LinearClassifier, ModelKind, VanillaParams};
use f1b_core::constructions::{choose_a, vanilla_k2_params, GruK1Construction, ModelSetup, VanillaK2Construction};
use f1b_core::process::{sample_conditioned, FlagEncoding, FlagPlacement, DEFAULT_ENUMERATION_CAP};
use f1b_core::rng::derive_seed;
use f1b_core::simulation::{
    export_histograms, export_sweep, mc_distributions, sweep_vanilla_k1, DistributionSeries, ExportFormat,
    SweepGrid, DEFAULT_BINS,
};
use f1b_core::trainer::{replay_figure4, train, BiasChoice, TrainConfig};
use f1b_core::verification::{certify_gru_interval, certify_vanilla_k2, exact_error, VerificationReport};

use crate::output::{json_bytes, sibling, Outputs};
use crate::settings::Settings;

/// Bad flags, values or configuration: exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// A verification or certification that did not hold: exit code 2.
#[derive(Debug)]
pub struct VerificationFailed(pub String);

impl fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for VerificationFailed {}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<VerificationFailed>().is_some() {
        2
    } else {
        1
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn dispatch(name: &str, s: Settings, out: Option<&Path>) -> Result<()> {
    match name {
        "gen" => gen(&s, out),
        "construct" => construct(&s, out),
        "verify" => verify(&s, out),
        "certify" => certify(&s, out),
        "simulate" => simulate(&s, out),
        "sweep" => sweep(&s, out),
        "train" => train_cmd(&s, out),
        "replay-fig4" => replay(&s, out),
        other => Err(usage(format!("unknown subcommand {other}"))),
    }
}

fn parse_kv(text: &str) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| usage(format!("construction parameter `{part}` is not k=v")))?;
        let v: f64 = v.trim().parse().map_err(|_| usage(format!("`{v}` is not a number")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

fn check_keys(kv: &BTreeMap<String, f64>, allowed: &[&str]) -> Result<()> {
    match kv.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(usage(format!("unknown construction parameter `{k}` (expected one of {})", allowed.join(", ")))),
        None => Ok(()),
    }
}

fn model_kind(s: &Settings) -> Result<ModelKind> {
    let name = s.model.as_deref().ok_or_else(|| usage("--model is required"))?;
    name.parse().map_err(|e| usage(format!("{e}")))
}

fn format_of(s: &Settings, default: ExportFormat) -> Result<ExportFormat> {
    match &s.format {
        Some(f) => f.parse().map_err(|e| usage(format!("{e}"))),
        None => Ok(default),
    }
}

fn placement_of(s: &Settings) -> FlagPlacement {
    s.flag_at.map_or(FlagPlacement::Random, FlagPlacement::Fixed)
}

/// Scalar gated construction from `--A`/`--B`, `--construct` and `--margin`.
fn gated_construction(s: &Settings, n: usize) -> Result<GruK1Construction> {
    let kv = parse_kv(s.construct.as_deref().unwrap_or(""))?;
    check_keys(&kv, &["a", "b", "A", "margin"])?;
    let b = kv.get("b").copied().unwrap_or(1.0);
    let gate = s.gate.or_else(|| kv.get("A").copied());
    let c = if let Some(g) = gate {
        GruK1Construction::from_gate(g, b)?
    } else if let Some(&a) = kv.get("a") {
        GruK1Construction::new(a, b)
    } else {
        let margin = s.margin.or_else(|| kv.get("margin").copied()).unwrap_or(0.1);
        GruK1Construction::new(choose_a(n, margin)?, b)
    };
    c.validate()?;
    Ok(c)
}

enum Built {
    Gated(ModelKind, GruK1Construction),
    VanillaK2(VanillaK2Construction),
    VanillaK1 { u: f64, w1: f64, w2: f64 },
    File(ModelSetup),
}

impl Built {
    fn setup(&self) -> Result<ModelSetup> {
        Ok(match self {
            Built::Gated(kind, c) => c.setup_for(*kind)?,
            Built::VanillaK2(c) => vanilla_k2_params(c)?,
            Built::VanillaK1 { u, w1, w2 } => ModelSetup {
                params: CellParams::Vanilla(VanillaParams::scalar(*u, *w1, *w2)),
                s0: CellState::hidden(vec![0.0]),
                encoding: FlagEncoding::Symmetric,
                classifier: LinearClassifier::new(vec![1.0], 0.0),
            },
            Built::File(setup) => setup.clone(),
        })
    }

    fn describe(&self) -> Value {
        match self {
            Built::Gated(kind, c) => json!({
                "model": kind.to_string(),
                "a": c.a,
                "b": c.b,
                "A": c.gate(),
                "B": c.scale(),
            }),
            Built::VanillaK2(c) => json!({"model": "vanilla", "b1": c.b1, "w21": c.w21, "b2": c.b2}),
            Built::VanillaK1 { u, w1, w2 } => json!({"model": "vanilla", "u": u, "w1": w1, "w2": w2}),
            Built::File(setup) => json!({"model": setup.params.kind().to_string(), "setup": setup}),
        }
    }
}

fn build(s: &Settings, n: usize) -> Result<Built> {
    if let Some(path) = &s.params {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let setup: ModelSetup =
            serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        setup.validate()?;
        return Ok(Built::File(setup));
    }
    let kind = model_kind(s)?;
    if kind != ModelKind::Vanilla {
        return Ok(Built::Gated(kind, gated_construction(s, n)?));
    }
    let kv = parse_kv(s.construct.as_deref().unwrap_or("b1=0.5,w21=0.5,b2=-2"))?;
    let get = |k: &str| kv.get(k).copied();
    if kv.contains_key("u") || kv.contains_key("w1") || kv.contains_key("w2") {
        check_keys(&kv, &["u", "w1", "w2"])?;
        return Ok(Built::VanillaK1 {
            u: get("u").unwrap_or(0.0),
            w1: get("w1").unwrap_or(0.0),
            w2: get("w2").unwrap_or(0.0),
        });
    }
    check_keys(&kv, &["b1", "w21", "b2"])?;
    let c = VanillaK2Construction::new(get("b1").unwrap_or(0.5), get("w21").unwrap_or(0.5), get("b2").unwrap_or(-2.0));
    c.validate()?;
    Ok(Built::VanillaK2(c))
}

fn gen(s: &Settings, out: Option<&Path>) -> Result<()> {
    let n = s.n.unwrap_or(10);
    let count = s.count.unwrap_or(1);
    let seed = s.seed.unwrap_or(0);
    let mut text = String::new();
    for i in 0..count {
        let path = sample_conditioned(n, derive_seed(seed, i), placement_of(s), s.label)?;
        text.push_str(&path.to_string());
        text.push('\n');
    }
    let mut outputs = Outputs::new(out);
    outputs.write_main(text.as_bytes())?;
    let config = json!({"n": n, "count": count, "seed": seed, "flag_at": s.flag_at, "label": s.label});
    outputs.finish("gen", config, Some(seed))
}

fn construct(s: &Settings, out: Option<&Path>) -> Result<()> {
    let n = s.n.unwrap_or(12);
    let built = build(s, n)?;
    let setup = built.setup()?;
    let mut outputs = Outputs::new(out);
    outputs.write_main(&json_bytes(&setup)?)?;
    outputs.finish("construct", json!({"n": n, "construction": built.describe()}), None)
}

fn verify(s: &Settings, out: Option<&Path>) -> Result<()> {
    let n = s.n.unwrap_or(12);
    if n > DEFAULT_ENUMERATION_CAP {
        return Err(usage(format!("--n {n} exceeds the enumeration cap {DEFAULT_ENUMERATION_CAP}")));
    }
    let built = build(s, n)?;
    let setup = built.setup()?;
    let result = exact_error(&setup, n)?;
    let report = VerificationReport::from_exact(&result, json!({"n": n, "construction": built.describe(), "setup": setup}));
    let mut outputs = Outputs::new(out);
    outputs.write_main(&json_bytes(&report)?)?;
    let allow = s.allow_errors.unwrap_or(false);
    outputs.finish("verify", json!({"n": n, "construction": built.describe(), "allow_errors": allow}), None)?;
    if result.errors > 0 && !allow {
        return Err(VerificationFailed(format!(
            "{} of {} paths misclassified (error probability {})",
            result.errors, result.total_paths, result.error_probability
        ))
        .into());
    }
    Ok(())
}

fn certify(s: &Settings, out: Option<&Path>) -> Result<()> {
    let n = s.n.unwrap_or(12);
    let kind = model_kind(s)?;
    let (cert, config) = if kind == ModelKind::Vanilla {
        let Built::VanillaK2(c) = build(s, n)? else {
            return Err(usage("vanilla certification needs --construct b1=..,w21=..,b2=.."));
        };
        (certify_vanilla_k2(&c, n)?, json!({"n": n, "model": "vanilla", "b1": c.b1, "w21": c.w21, "b2": c.b2}))
    } else {
        let c = gated_construction(s, n)?;
        let scale = s.scale.unwrap_or_else(|| c.scale());
        let gate = c.gate();
        (
            certify_gru_interval(gate, scale, n)?,
            json!({"n": n, "model": kind.to_string(), "A": gate, "B": scale}),
        )
    };
    let mut outputs = Outputs::new(out);
    outputs.write_main(&json_bytes(&cert)?)?;
    outputs.finish("certify", config, None)?;
    let all_n_required = kind == ModelKind::Vanilla;
    if !cert.certified || (all_n_required && !cert.holds_for_all_n) {
        return Err(VerificationFailed(format!("not certified (margin {})", cert.certified_margin)).into());
    }
    Ok(())
}

fn parse_snapshots(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| usage(format!("snapshot `{p}` is not a time step"))))
        .collect()
}

fn summary(series: &DistributionSeries) -> Value {
    let snaps: Vec<Value> = series
        .snapshots
        .iter()
        .map(|s| json!({"t": s.t, "threshold_errors": s.threshold_errors, "linear_error": s.linear_error}))
        .collect();
    json!({"snapshots": snaps})
}

fn write_series(series: &DistributionSeries, format: ExportFormat, outputs: &mut Outputs) -> Result<()> {
    match format {
        ExportFormat::Json => outputs.write_main(&json_bytes(series)?)?,
        ExportFormat::Csv => {
            let mut buf = Vec::new();
            export_histograms(series, ExportFormat::Csv, &mut buf)?;
            outputs.write_main(&buf)?;
            if let (Some(scatter), Some(main)) = (&series.scatter, outputs.primary()) {
                let mut text = String::from("label,s1,s2\n");
                for (label, pts) in [(1, &scatter.pos), (-1, &scatter.neg)] {
                    for p in pts {
                        text.push_str(&format!("{label},{},{}\n", p[0], p[1]));
                    }
                }
                let path = sibling(main, "scatter", "csv");
                outputs.write_file(path, text.as_bytes())?;
            }
        }
    }
    Ok(())
}

fn simulate(s: &Settings, out: Option<&Path>) -> Result<()> {
    let n = s.n.unwrap_or(20);
    let built = build(s, n)?;
    let setup = built.setup()?;
    let paths = s.paths.unwrap_or(10_000);
    let seed = s.seed.unwrap_or(0);
    let bins = s.bins.unwrap_or(DEFAULT_BINS);
    let snapshots = match &s.snapshots {
        Some(text) => parse_snapshots(text)?,
        None => s.flag_at.into_iter().chain([n]).collect(),
    };
    let format = format_of(s, ExportFormat::Csv)?;
    let series = mc_distributions(&setup, n, placement_of(s), paths, seed, &snapshots, bins)?;
    let mut outputs = Outputs::new(out);
    write_series(&series, format, &mut outputs)?;
    if outputs.has_file() {
        println!("{}", serde_json::to_string_pretty(&summary(&series))?);
    }
    let config = json!({
        "n": n, "construction": built.describe(), "flag_at": s.flag_at, "paths": paths, "seed": seed,
        "snapshots": series.snapshot_times, "bins": bins, "format": format,
    });
    outputs.finish("simulate", config, Some(seed))
}

fn sweep(s: &Settings, out: Option<&Path>) -> Result<()> {
    let n = s.n.unwrap_or(20);
    let paths = s.paths.unwrap_or(2000);
    let seed = s.seed.unwrap_or(0);
    let grid_text = s.grid.clone().unwrap_or_else(|| "-2:2:0.2".into());
    let parts: Vec<f64> = grid_text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| usage(format!("--grid `{grid_text}` is not lo:hi:step")))?;
    let grid = match parts.as_slice() {
        [lo, hi, step] => SweepGrid::cube(*lo, *hi, *step).map_err(|e| usage(format!("{e}")))?,
        _ => bail!(UsageError(format!("--grid `{grid_text}` is not lo:hi:step"))),
    };
    let format = format_of(s, ExportFormat::Csv)?;
    let report = sweep_vanilla_k1(&grid, n, paths, seed)?;
    let mut outputs = Outputs::new(out);
    let mut buf = Vec::new();
    export_sweep(&report, format, &mut buf)?;
    outputs.write_main(&buf)?;
    if outputs.has_file() {
        let summary = json!({"points": report.points.len(), "min_error": report.min_error, "argmin": report.argmin});
        println!("{}", serde_json::to_string_pretty(&summary)?);
    }
    let config = json!({"n": n, "paths": paths, "seed": seed, "grid": grid_text, "format": format});
    outputs.finish("sweep", config, Some(seed))
}

fn train_cmd(s: &Settings, out: Option<&Path>) -> Result<()> {
    let d = TrainConfig::default();
    let config = TrainConfig {
        n: s.n.unwrap_or(d.n),
        batch_size: s.batch_size.unwrap_or(d.batch_size),
        learning_rate: s.learning_rate.unwrap_or(d.learning_rate),
        momentum: s.momentum.unwrap_or(d.momentum),
        epochs: s.epochs.unwrap_or(d.epochs),
        steps_per_epoch: s.steps_per_epoch.unwrap_or(d.steps_per_epoch),
        seed: s.seed.unwrap_or(d.seed),
        init_scale: s.init_scale.unwrap_or(d.init_scale),
        placement: d.placement,
        eval_paths: s.eval_paths.unwrap_or(d.eval_paths),
    };
    config.validate().map_err(|e| usage(format!("{e}")))?;
    let (model, report) = train(&config)?;
    let mut outputs = Outputs::new(out);
    match out {
        Some(path) => {
            outputs.write_main(&json_bytes(&report)?)?;
            outputs.write_file(sibling(path, "params", "json"), &json_bytes(&model.setup())?)?;
            let summary = json!({
                "converged": report.converged,
                "final_accuracy": report.final_accuracy,
                "separable": report.separable,
                "final_loss": report.loss_curve.last(),
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        None => outputs.write_main(&json_bytes(&json!({"report": report, "setup": model.setup()}))?)?,
    }
    outputs.finish("train", serde_json::to_value(&config)?, Some(config.seed))
}

fn replay(s: &Settings, out: Option<&Path>) -> Result<()> {
    let paths = s.paths.unwrap_or(10_000);
    let seed = s.seed.unwrap_or(0);
    let bias: BiasChoice = s
        .bias
        .as_deref()
        .unwrap_or("recover")
        .parse()
        .map_err(|e| usage(format!("{e}")))?;
    let format = format_of(s, ExportFormat::Csv)?;
    let r = replay_figure4(paths, seed, bias)?;
    let mut outputs = Outputs::new(out);
    let checks = json!({
        "bias": r.bias,
        "s2_error_t50": r.threshold_error(50, 1),
        "s2_error_t51": r.threshold_error(51, 1),
        "s1_error_t51": r.threshold_error(51, 0),
        "s1_error_t100": r.threshold_error(100, 0),
        "final_linear_error": r.final_linear_error,
        "separable": r.separator.is_some(),
    });
    match format {
        ExportFormat::Json => outputs.write_main(&json_bytes(&r)?)?,
        ExportFormat::Csv => {
            write_series(&r.series, ExportFormat::Csv, &mut outputs)?;
            if let Some(main) = out {
                outputs.write_file(sibling(main, "checks", "json"), &json_bytes(&checks)?)?;
            }
        }
    }
    if out.is_some() {
        println!("{}", serde_json::to_string_pretty(&checks)?);
    }
    let config = json!({"paths": paths, "seed": seed, "bias": bias, "format": format});
    outputs.finish("replay-fig4", config, Some(seed))
}
