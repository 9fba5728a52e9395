use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pixlayout::{LayoutKind, LayoutParams, SamplingConfig, SensorGrid};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "pixlayout", version, about = "Differentiable non-uniform sensor pixel layouts")]
pub struct Cli {
    /// Output directory for artifacts and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Render an image or analytic field through a (deformed) sensor.
    Simulate(SimulateArgs),
    /// Compare analytic layout gradients against central finite differences.
    Gradcheck(GradcheckArgs),
    /// Resample a deformed-sensor image onto a uniform grid.
    Backwarp(BackwarpArgs),
    /// Jointly train a layout and a classifier on IDX image/label files.
    Train(TrainArgs),
    /// Evaluate a trained checkpoint on IDX image/label files.
    Eval(EvalArgs),
    /// Draw a layout as SVG.
    LayoutSvg(LayoutSvgArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct ThetaArgs {
    /// Deformation family: identity, curv or rect.
    #[arg(long, default_value = "curv")]
    pub kind: LayoutKind,
    /// Constrained parameters "t1,t2", each in (-1, 1).
    #[arg(long, value_parser = parse_theta, allow_hyphen_values = true, conflicts_with = "theta_raw")]
    pub theta: Option<[f64; 2]>,
    /// Unconstrained parameters "r1,r2" with theta = tanh(r).
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub theta_raw: Option<[f64; 2]>,
}

impl ThetaArgs {
    pub fn resolve(&self) -> CliResult<LayoutParams> {
        Ok(match (self.theta, self.theta_raw) {
            (Some(t), _) => LayoutParams::from_theta(self.kind, t)?,
            (None, Some(r)) => LayoutParams::from_raw(self.kind, r)?,
            (None, None) => LayoutParams::from_raw(self.kind, [0.0, 0.0])?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct SamplingArgs {
    /// Sampling seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stratified samples per pixel axis.
    #[arg(long, default_value_t = 8)]
    pub strata: usize,
    /// Samples per pixel edge for the boundary integrals.
    #[arg(long, default_value_t = 32)]
    pub boundary_samples: usize,
}

impl SamplingArgs {
    pub fn config(&self, jitter: bool) -> CliResult<SamplingConfig> {
        let cfg = SamplingConfig {
            interior_strata: self.strata,
            boundary_samples: self.boundary_samples,
            rng_seed: self.seed,
            jitter,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Input image (PNG, PPM or PGM).
    #[arg(long, required_unless_present = "field", conflicts_with = "field")]
    pub image: Option<PathBuf>,
    /// Analytic field: blob, checker, constant, ramp or a JSON object.
    #[arg(long)]
    pub field: Option<String>,
    /// Sensor resolution "R1xR2".
    #[arg(long, value_parser = parse_grid, default_value = "4x4")]
    pub grid: SensorGrid,
    #[command(flatten)]
    pub layout: ThetaArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Use stratum midpoints instead of jittered samples.
    #[arg(long)]
    pub no_jitter: bool,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct GradcheckArgs {
    /// Input image (PNG, PPM or PGM) instead of an analytic field.
    #[arg(long, conflicts_with = "field")]
    pub image: Option<PathBuf>,
    /// Analytic field: blob, checker, constant, ramp or a JSON object.
    #[arg(long, default_value = "blob")]
    pub field: String,
    #[arg(long, value_parser = parse_grid, default_value = "4x4")]
    pub grid: SensorGrid,
    #[command(flatten)]
    pub layout: ThetaArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// Central-difference step in theta_raw.
    #[arg(long, default_value_t = 1e-4)]
    pub fd_step: f64,
    /// Maximum relative error of the gradient vector.
    #[arg(long, default_value_t = 1e-2)]
    pub tolerance: f64,
    /// Jitter the samples (finite differences still share them).
    #[arg(long)]
    pub jitter: bool,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct BackwarpArgs {
    /// Deformed sensor output: PPM (RGB) or PGM (label map), 8-bit.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub layout: ThetaArgs,
    /// Uniform output resolution "WxH".
    #[arg(long, value_parser = parse_dims)]
    pub target: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub train_images: PathBuf,
    #[arg(long)]
    pub train_labels: PathBuf,
    #[arg(long, requires = "test_labels")]
    pub test_images: Option<PathBuf>,
    #[arg(long, requires = "test_images")]
    pub test_labels: Option<PathBuf>,
    /// Use only the first N training samples.
    #[arg(long)]
    pub train_limit: Option<usize>,
    /// Use only the first N test samples.
    #[arg(long)]
    pub test_limit: Option<usize>,
    #[arg(long, value_parser = parse_grid, default_value = "4x4")]
    pub grid: SensorGrid,
    /// Deformation family; identity trains the uniform baseline.
    #[arg(long, default_value = "curv")]
    pub kind: LayoutKind,
    #[arg(long, default_value_t = 14)]
    pub epochs: usize,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    /// Epochs before the layout starts updating.
    #[arg(long, default_value_t = 0)]
    pub freeze_layout_epochs: usize,
    /// Master seed; the individual seeds below default to values derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
    #[arg(long)]
    pub init_seed: Option<u64>,
    #[arg(long)]
    pub sampling_seed: Option<u64>,
    #[arg(long)]
    pub eval_seed: Option<u64>,
    /// Classifier input channels: 3 (RGB) or 1 (channel mean).
    #[arg(long, default_value_t = 3)]
    pub input_channels: usize,
    #[arg(long, default_value_t = 8)]
    pub strata: usize,
    #[arg(long, default_value_t = 32)]
    pub boundary_samples: usize,
    #[arg(long)]
    pub no_jitter: bool,
    /// Width and height of the layout SVG in pixels.
    #[arg(long, default_value_t = 512)]
    pub svg_size: u32,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct LayoutSvgArgs {
    #[arg(long, value_parser = parse_grid, default_value = "4x4")]
    pub grid: SensorGrid,
    #[command(flatten)]
    pub layout: ThetaArgs,
    #[arg(long, default_value_t = 512)]
    pub size: u32,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

pub fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected two comma-separated numbers, got '{s}'"));
    }
    let mut out = [0.0; 2];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p.parse::<f64>().map_err(|e| format!("'{p}': {e}"))?;
        if !o.is_finite() {
            return Err(format!("'{p}' is not a finite number"));
        }
    }
    Ok(out)
}

pub fn parse_theta(s: &str) -> Result<[f64; 2], String> {
    let t = parse_pair(s)?;
    if t.iter().any(|v| v.abs() >= 1.0) {
        return Err(format!(
            "theta components must lie in the open interval (-1, 1), got {s}; \
             pass unconstrained values with --theta-raw instead"
        ));
    }
    Ok(t)
}

pub fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got '{s}'"))?;
    let w: usize = a.trim().parse().map_err(|e| format!("'{a}': {e}"))?;
    let h: usize = b.trim().parse().map_err(|e| format!("'{b}': {e}"))?;
    if w == 0 || h == 0 {
        return Err(format!("dimensions must be positive, got '{s}'"));
    }
    Ok((w, h))
}

pub fn parse_grid(s: &str) -> Result<SensorGrid, String> {
    let (r1, r2) = parse_dims(s)?;
    SensorGrid::new(r1, r2).map_err(|e| e.to_string())
}

/// Named analytic fields or an inline JSON description.
pub fn parse_field(spec: &str) -> CliResult<pixlayout::AnalyticField> {
    use pixlayout::AnalyticField;
    let field = match spec.trim() {
        s if s.starts_with('{') => serde_json::from_str(s)
            .map_err(|e| CliError::Validation(format!("field JSON: {e}")))?,
        "blob" => AnalyticField::blob([0.2, -0.1], 0.35),
        "checker" | "checkerboard" => AnalyticField::checkerboard(3.0),
        "constant" => AnalyticField::constant(0.5, 0.5, 0.5),
        "ramp" => AnalyticField::LinearRamp,
        other => {
            return Err(CliError::Validation(format!(
                "unknown field '{other}' (expected blob, checker, constant, ramp or JSON)"
            )))
        }
    };
    field.validate()?;
    Ok(field)
}
