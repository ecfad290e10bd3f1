use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ebsw::flows::{DEFAULT_COLOR_STEP_SIZE, DEFAULT_STEP_SIZE};
use ebsw::{EnergyFunction, EstimatorConfig, FlowConfig, GradientMode, Method, SeedPolicy};
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(name = "ebsw", version, about = "Energy-based sliced Wasserstein distances, flows and color transfer")]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "EBSW_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Distance between two CSV point clouds, as JSON on stdout.
    Distance(DistanceArgs),
    /// Euler gradient flow of a source cloud towards a target cloud.
    Flow(FlowArgs),
    /// Color transfer between two binary PPM images.
    ColorTransfer(ColorArgs),
    /// Slicing density on a grid of angles (2D data), as CSV on stdout.
    Density(DensityArgs),
    /// Median wall times per method on random Gaussian clouds.
    Bench(BenchArgs),
    /// Re-runs a manifest and checks that every value is reproduced.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    #[arg(long, default_value = "is-ebsw")]
    pub method: Method,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Number of projections.
    #[arg(short = 'L', long = "projections", default_value_t = 100)]
    pub projections: usize,
    /// `e` or `q:<q>[:<eps>]`.
    #[arg(long, default_value = "e")]
    pub energy: EnergyFunction,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// vMF concentration of the random-walk proposal (rmh-ebsw).
    #[arg(long, default_value_t = 10.0)]
    pub kappa: f64,
    /// Max-SW ascent iterations.
    #[arg(short = 'T', long = "iters", default_value_t = 100)]
    pub iters: usize,
    /// Max-SW ascent step size.
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
}

impl EstimatorArgs {
    pub fn config(&self) -> EstimatorConfig {
        EstimatorConfig {
            p: self.p,
            projections: self.projections,
            energy: self.energy,
            method: self.method,
            max_sw_iters: self.iters,
            max_sw_step: self.eta,
            rmh_kappa: self.kappa,
            seed: self.seed,
        }
    }

    pub fn json(&self) -> Value {
        json!({
            "method": self.method.as_str(),
            "p": self.p,
            "projections": self.projections,
            "energy": self.energy.to_string(),
            "seed": self.seed,
            "kappa": self.kappa,
            "iters": self.iters,
            "eta": self.eta,
        })
    }

    fn argv(&self, out: &mut Vec<String>) {
        push(out, "--method", self.method.as_str());
        push(out, "--p", self.p);
        push(out, "--projections", self.projections);
        push(out, "--energy", self.energy);
        push(out, "--seed", self.seed);
        push(out, "--kappa", self.kappa);
        push(out, "--iters", self.iters);
        push(out, "--eta", self.eta);
    }
}

#[derive(Debug, Clone, Args)]
pub struct DistanceArgs {
    #[arg(long)]
    pub mu: PathBuf,
    #[arg(long)]
    pub nu: PathBuf,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Where to write the run manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FlowOptions {
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    /// Euler step size (default depends on the command).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Trace interval (default: min(100, steps)).
    #[arg(long)]
    pub eval_every: Option<usize>,
    #[arg(long, default_value = "conventional")]
    pub gradient_mode: GradientMode,
    /// `fresh` or `fixed`.
    #[arg(long, default_value = "fresh")]
    pub seed_policy: SeedPolicy,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

impl FlowOptions {
    pub fn config(&self, default_gamma: f64) -> FlowConfig {
        FlowConfig {
            steps: self.steps,
            step_size: self.gamma.unwrap_or(default_gamma),
            estimator: self.estimator.config(),
            gradient_mode: self.gradient_mode,
            eval_every: self.eval_every.unwrap_or(self.steps.min(100)),
            seed_policy: self.seed_policy,
        }
    }

    fn json(&self, default_gamma: f64) -> Value {
        let cfg = self.config(default_gamma);
        json!({
            "source": self.source,
            "target": self.target,
            "steps": cfg.steps,
            "gamma": cfg.step_size,
            "eval_every": cfg.eval_every,
            "gradient_mode": cfg.gradient_mode.to_string(),
            "seed_policy": cfg.seed_policy.to_string(),
            "estimator": self.estimator.json(),
        })
    }

    fn argv(&self, default_gamma: f64, out: &mut Vec<String>) {
        let cfg = self.config(default_gamma);
        push(out, "--source", absolute(&self.source).display());
        push(out, "--target", absolute(&self.target).display());
        push(out, "--steps", cfg.steps);
        push(out, "--gamma", cfg.step_size);
        push(out, "--eval-every", cfg.eval_every);
        push(out, "--gradient-mode", cfg.gradient_mode);
        push(out, "--seed-policy", cfg.seed_policy);
        self.estimator.argv(out);
    }
}

#[derive(Debug, Clone, Args)]
pub struct FlowArgs {
    #[command(flatten)]
    pub flow: FlowOptions,
    /// Output directory for trace.csv, final.csv and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ColorArgs {
    #[command(flatten)]
    pub flow: FlowOptions,
    /// Output PPM; the manifest goes next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DensityArgs {
    #[arg(long)]
    pub mu: PathBuf,
    #[arg(long)]
    pub nu: PathBuf,
    #[arg(long, default_value = "e")]
    pub energy: EnergyFunction,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Number of grid angles.
    #[arg(short = 'K', long = "angles", default_value_t = 360)]
    pub angles: usize,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(short = 'L', long = "projections", default_value_t = 100)]
    pub projections: usize,
    #[arg(long, default_value_t = 20)]
    pub repeats: usize,
    #[arg(long, value_delimiter = ',', default_value = "sw,is-ebsw")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "e")]
    pub energy: EnergyFunction,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Distance(_) => "distance",
            Command::Flow(_) => "flow",
            Command::ColorTransfer(_) => "color-transfer",
            Command::Density(_) => "density",
            Command::Bench(_) => "bench",
            Command::Replay(_) => "replay",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Command::Distance(a) => a.estimator.seed,
            Command::Flow(a) => a.flow.estimator.seed,
            Command::ColorTransfer(a) => a.flow.estimator.seed,
            Command::Bench(a) => a.seed,
            Command::Density(_) | Command::Replay(_) => 0,
        }
    }

    pub fn manifest_path(&self) -> Option<PathBuf> {
        match self {
            Command::Distance(a) => a.manifest.clone(),
            Command::Density(a) => a.manifest.clone(),
            Command::Bench(a) => a.manifest.clone(),
            Command::Flow(a) => Some(a.out.join("manifest.json")),
            Command::ColorTransfer(a) => Some(a.out.with_extension("manifest.json")),
            Command::Replay(_) => None,
        }
    }

    /// Fully explicit configuration for the manifest.
    pub fn config_json(&self) -> Value {
        match self {
            Command::Distance(a) => json!({ "mu": a.mu, "nu": a.nu, "estimator": a.estimator.json() }),
            Command::Flow(a) => json!({ "flow": a.flow.json(DEFAULT_STEP_SIZE), "out": a.out }),
            Command::ColorTransfer(a) => json!({ "flow": a.flow.json(DEFAULT_COLOR_STEP_SIZE), "out": a.out }),
            Command::Density(a) => json!({
                "mu": a.mu, "nu": a.nu, "energy": a.energy.to_string(), "p": a.p, "angles": a.angles,
            }),
            Command::Bench(a) => json!({
                "n": a.n, "d": a.d, "projections": a.projections, "repeats": a.repeats,
                "methods": a.methods.iter().map(|m| m.as_str()).collect::<Vec<_>>(),
                "seed": a.seed, "energy": a.energy.to_string(), "p": a.p,
            }),
            Command::Replay(a) => json!({ "manifest": a.manifest }),
        }
    }

    /// Canonical argument vector: every default spelled out and every path
    /// absolute, so parsing it again reproduces the run exactly.
    pub fn argv(&self) -> Vec<String> {
        let mut out = vec![self.name().to_string()];
        match self {
            Command::Distance(a) => {
                push(&mut out, "--mu", absolute(&a.mu).display());
                push(&mut out, "--nu", absolute(&a.nu).display());
                a.estimator.argv(&mut out);
            }
            Command::Flow(a) => {
                a.flow.argv(DEFAULT_STEP_SIZE, &mut out);
                push(&mut out, "--out", absolute(&a.out).display());
            }
            Command::ColorTransfer(a) => {
                a.flow.argv(DEFAULT_COLOR_STEP_SIZE, &mut out);
                push(&mut out, "--out", absolute(&a.out).display());
            }
            Command::Density(a) => {
                push(&mut out, "--mu", absolute(&a.mu).display());
                push(&mut out, "--nu", absolute(&a.nu).display());
                push(&mut out, "--energy", a.energy);
                push(&mut out, "--p", a.p);
                push(&mut out, "--angles", a.angles);
            }
            Command::Bench(a) => {
                push(&mut out, "--n", a.n);
                push(&mut out, "--d", a.d);
                push(&mut out, "--projections", a.projections);
                push(&mut out, "--repeats", a.repeats);
                let methods: Vec<&str> = a.methods.iter().map(|m| m.as_str()).collect();
                push(&mut out, "--methods", methods.join(","));
                push(&mut out, "--seed", a.seed);
                push(&mut out, "--energy", a.energy);
                push(&mut out, "--p", a.p);
            }
            Command::Replay(a) => out.push(absolute(&a.manifest).display().to_string()),
        }
        out
    }
}

fn push(out: &mut Vec<String>, flag: &str, value: impl std::fmt::Display) {
    out.push(flag.to_string());
    out.push(value.to_string());
}

fn absolute(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf())
}
