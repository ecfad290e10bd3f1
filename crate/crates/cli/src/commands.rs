use std::fs;
use std::path::Path;
use std::time::Instant;

use ebsw::estimators::{distance, estimate};
use ebsw::eval::slicing_density_grid;
use ebsw::flows::{color_transfer, run_flow, FlowTrace, DEFAULT_COLOR_STEP_SIZE, DEFAULT_STEP_SIZE};
use ebsw::image::{load_ppm, save_ppm};
use ebsw::measures::{load_measure, save_measure};
use ebsw::{EmpiricalMeasure, EstimatorConfig, Method, RngSeed};
use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::args::{BenchArgs, ColorArgs, Command, DensityArgs, DistanceArgs, FlowArgs};
use crate::manifest::Outputs;
use crate::CliError;

/// What a command produced: optional stdout text plus manifest outputs.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: Option<String>,
    pub outputs: Outputs,
}

/// Runs `cmd`. With `write == false` nothing is written to disk; only the
/// values are computed (used by replay).
pub fn run(cmd: &Command, write: bool) -> Result<Outcome, CliError> {
    match cmd {
        Command::Distance(a) => cmd_distance(a),
        Command::Flow(a) => cmd_flow(a, write),
        Command::ColorTransfer(a) => cmd_color_transfer(a, write),
        Command::Density(a) => cmd_density(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Replay(_) => Err(CliError::Usage("a manifest cannot replay another replay".into())),
    }
}

fn sha256(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn json_line(value: &Value) -> String {
    serde_json::to_string(value).expect("JSON values always serialize")
}

fn cmd_distance(a: &DistanceArgs) -> Result<Outcome, CliError> {
    let cfg = a.estimator.config();
    cfg.validate()?;
    let mu = load_measure(&a.mu)?;
    let nu = load_measure(&a.nu)?;
    let start = Instant::now();
    let value = distance(&mu, &nu, &cfg)?;
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    let report = json!({
        "method": cfg.method.as_str(),
        "value": value,
        "elapsed_ms": elapsed_ms,
        "config": a.estimator.json(),
    });
    let mut outputs = Outputs::default();
    outputs.values.insert("value".into(), json!(value));
    Ok(Outcome {
        stdout: Some(json_line(&report)),
        outputs,
    })
}

fn trace_values(trace: &FlowTrace, values: &mut Map<String, Value>) {
    let rows: Vec<Value> = trace
        .records
        .iter()
        .map(|r| json!([r.step, r.estimator_value, r.eval_w2]))
        .collect();
    values.insert("trace".into(), Value::Array(rows));
}

fn summary(trace: &FlowTrace, out: &Path) -> Value {
    json!({
        "initial_eval_w2": trace.first().map(|r| r.eval_w2),
        "final_eval_w2": trace.last().map(|r| r.eval_w2),
        "final_estimator_value": trace.last().map(|r| r.estimator_value),
        "out": out,
    })
}

fn cmd_flow(a: &FlowArgs, write: bool) -> Result<Outcome, CliError> {
    let cfg = a.flow.config(DEFAULT_STEP_SIZE);
    cfg.validate()?;
    let source = load_measure(&a.flow.source)?;
    let target = load_measure(&a.flow.target)?;
    let (moved, trace) = run_flow(&source, &target, &cfg)?;
    let final_csv = moved.to_csv();
    let mut outputs = Outputs::default();
    trace_values(&trace, &mut outputs.values);
    outputs.values.insert("final_sha256".into(), json!(sha256(final_csv.as_bytes())));
    let trace_path = a.out.join("trace.csv");
    let final_path = a.out.join("final.csv");
    if write {
        fs::create_dir_all(&a.out).map_err(|e| CliError::Data(format!("{}: {e}", a.out.display())))?;
        fs::write(&trace_path, trace.to_csv()).map_err(ebsw::Error::from)?;
        save_measure(&moved, &final_path)?;
    }
    outputs.files.insert("trace".into(), trace_path.display().to_string());
    outputs.files.insert("final".into(), final_path.display().to_string());
    Ok(Outcome {
        stdout: Some(json_line(&summary(&trace, &a.out))),
        outputs,
    })
}

fn cmd_color_transfer(a: &ColorArgs, write: bool) -> Result<Outcome, CliError> {
    let cfg = a.flow.config(DEFAULT_COLOR_STEP_SIZE);
    cfg.validate()?;
    let source = load_ppm(&a.flow.source)?;
    let target = load_ppm(&a.flow.target)?;
    let (image, trace) = color_transfer(&source, &target, &cfg)?;
    let mut outputs = Outputs::default();
    trace_values(&trace, &mut outputs.values);
    outputs.values.insert("image_sha256".into(), json!(sha256(&image.encode_ppm())));
    if write {
        save_ppm(&image, &a.out)?;
    }
    outputs.files.insert("image".into(), a.out.display().to_string());
    Ok(Outcome {
        stdout: Some(json_line(&summary(&trace, &a.out))),
        outputs,
    })
}

fn cmd_density(a: &DensityArgs) -> Result<Outcome, CliError> {
    let mu = load_measure(&a.mu)?;
    let nu = load_measure(&a.nu)?;
    let grid = slicing_density_grid(&mu, &nu, &a.energy, a.p, a.angles)?;
    let csv = grid.to_csv();
    let mut outputs = Outputs::default();
    outputs.values.insert("csv_sha256".into(), json!(sha256(csv.as_bytes())));
    Ok(Outcome {
        stdout: Some(csv.trim_end().to_string()),
        outputs,
    })
}

fn gaussian_cloud(n: usize, d: usize, seed: RngSeed, shift: f64) -> Result<EmpiricalMeasure, CliError> {
    let mut rng = seed.rng();
    let points = (0..n * d)
        .map(|_| shift + rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(EmpiricalMeasure::new(points, d)?)
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

fn cmd_bench(a: &BenchArgs) -> Result<Outcome, CliError> {
    if a.repeats == 0 || a.n == 0 || a.d == 0 || a.methods.is_empty() {
        return Err(CliError::Usage("n, d, repeats and methods must be non-empty".into()));
    }
    let base = EstimatorConfig {
        p: a.p,
        projections: a.projections,
        energy: a.energy,
        seed: a.seed,
        ..Default::default()
    };
    base.validate()?;
    let root = RngSeed(a.seed);
    let mu = gaussian_cloud(a.n, a.d, root.derive(0), 0.0)?;
    let nu = gaussian_cloud(a.n, a.d, root.derive(1), 1.0)?;
    let mut rows = Vec::new();
    let mut medians = Vec::new();
    let mut outputs = Outputs::default();
    for &method in &a.methods {
        let cfg = base.with_method(method);
        let mut times = Vec::with_capacity(a.repeats);
        let mut value = 0.0;
        for _ in 0..a.repeats {
            let start = Instant::now();
            value = estimate(&mu, &nu, &cfg)?.value;
            times.push(start.elapsed().as_secs_f64() * 1e3);
        }
        let med = median(&mut times);
        medians.push((method, med));
        outputs.values.insert(method.as_str().into(), json!(value));
        rows.push(json!({ "method": method.as_str(), "median_ms": med, "value": value }));
    }
    let find = |m: Method| medians.iter().find(|(k, _)| *k == m).map(|(_, t)| *t);
    let ratio = match (find(Method::IsEbsw), find(Method::Sw)) {
        (Some(is), Some(sw)) if sw > 0.0 => Some(is / sw),
        _ => None,
    };
    let report = json!({
        "n": a.n,
        "d": a.d,
        "projections": a.projections,
        "repeats": a.repeats,
        "threads": rayon::current_num_threads(),
        "results": rows,
        "is_ebsw_over_sw": ratio,
    });
    Ok(Outcome {
        stdout: Some(json_line(&report)),
        outputs,
    })
}
