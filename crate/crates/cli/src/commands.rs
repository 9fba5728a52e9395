use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use pixlayout::layout::{layout_json, layout_svg, LayoutRecord};
use pixlayout::radiance::{encode_pgm, read_pnm, write_ppm};
use pixlayout::{load_mnist_limit, train_joint, Checkpoint, Dataset, EpochMetrics, TrainConfig};
use pixlayout::{
    backwarp, load_image, simulate, simulate_cached, AdamConfig, LabelImage, LayoutParams,
    RadianceField, Rgb, SamplingConfig, SensorGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::{
    parse_field, BackwarpArgs, Command, EvalArgs, GradcheckArgs, LayoutSvgArgs, SimulateArgs,
    TrainArgs,
};
use crate::error::{CliError, CliResult};
use crate::manifest::{absolute_input, write_json, Manifest};

/// Files written by a command, and a deferred failure that should still
/// leave the outputs and manifest on disk.
pub struct Outcome {
    pub outputs: Vec<String>,
    pub failure: Option<CliError>,
}

impl Outcome {
    fn ok(outputs: &[&str]) -> Self {
        Outcome {
            outputs: outputs.iter().map(|s| s.to_string()).collect(),
            failure: None,
        }
    }
}

/// Rewrites input paths as absolute paths.
pub fn resolve_inputs(command: &mut Command) -> CliResult<()> {
    fn fix(p: &mut PathBuf) -> CliResult<()> {
        *p = absolute_input(p)?;
        Ok(())
    }
    match command {
        Command::Simulate(a) => a.image.as_mut().map_or(Ok(()), fix),
        Command::Gradcheck(a) => a.image.as_mut().map_or(Ok(()), fix),
        Command::Backwarp(a) => fix(&mut a.input),
        Command::Train(a) => {
            fix(&mut a.train_images)?;
            fix(&mut a.train_labels)?;
            a.test_images.as_mut().map_or(Ok(()), fix)?;
            a.test_labels.as_mut().map_or(Ok(()), fix)
        }
        Command::Eval(a) => {
            fix(&mut a.checkpoint)?;
            fix(&mut a.images)?;
            fix(&mut a.labels)
        }
        Command::LayoutSvg(_) => Ok(()),
        Command::Replay(a) => fix(&mut a.manifest),
    }
}

/// Runs `command`, writing its outputs and manifest into `out`.
pub fn execute(mut command: Command, out: &Path) -> CliResult<()> {
    if let Command::Replay(args) = &command {
        let manifest = Manifest::load(&args.manifest)?;
        info!("replaying {}", args.manifest.display());
        return execute(manifest.command, out);
    }
    resolve_inputs(&mut command)?;
    fs::create_dir_all(out).map_err(|e| CliError::io(out.display(), e))?;
    let outcome = match &command {
        Command::Simulate(a) => run_simulate(a, out)?,
        Command::Gradcheck(a) => run_gradcheck(a, out)?,
        Command::Backwarp(a) => run_backwarp(a, out)?,
        Command::Train(a) => run_train(a, out)?,
        Command::Eval(a) => run_eval(a, out)?,
        Command::LayoutSvg(a) => run_layout_svg(a, out)?,
        Command::Replay(_) => unreachable!("handled above"),
    };
    let path = Manifest::new(command, outcome.outputs).write(out)?;
    info!("wrote {}", path.display());
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn load_field(image: Option<&PathBuf>, field: Option<&str>) -> CliResult<Box<dyn RadianceField>> {
    match (image, field) {
        (Some(path), _) => Ok(Box::new(load_image(path, None)?)),
        (None, Some(spec)) => Ok(Box::new(parse_field(spec)?)),
        (None, None) => Err(CliError::Validation("pass --image or --field".into())),
    }
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path.display(), e))
}

#[derive(Serialize)]
struct SimulateReport {
    layout: LayoutRecord,
    sampling: SamplingConfig,
    volumes_sum: f64,
    volumes: Vec<f64>,
    /// Interleaved RGB, row-major.
    pixels: Vec<f64>,
}

fn run_simulate(a: &SimulateArgs, out: &Path) -> CliResult<Outcome> {
    let field = load_field(a.image.as_ref(), a.field.as_deref())?;
    let params = a.layout.resolve()?;
    let sampling = a.sampling.config(!a.no_jitter)?;
    let image = simulate(field.as_ref(), a.grid, params, sampling)?;
    let pixels = image.to_interleaved();
    write_ppm(out.join("sensor.ppm"), a.grid.r1(), a.grid.r2(), &pixels)?;
    let report = SimulateReport {
        layout: LayoutRecord::new(&a.grid, &params),
        sampling,
        volumes_sum: image.volumes_sum(),
        volumes: image.volumes.clone(),
        pixels,
    };
    write_json(&out.join("simulate.json"), &report)?;
    println!(
        "simulated {}x{} sensor, theta = ({:.6}, {:.6}), total volume {:.12}",
        a.grid.r1(),
        a.grid.r2(),
        params.theta()[0],
        params.theta()[1],
        report.volumes_sum
    );
    Ok(Outcome::ok(&["sensor.ppm", "simulate.json"]))
}

#[derive(Serialize)]
struct GradcheckReport {
    layout: LayoutRecord,
    sampling: SamplingConfig,
    /// Finite differences are taken in `theta_raw`.
    fd_step: f64,
    analytic: [f64; 2],
    finite_difference: [f64; 2],
    relative_error: [f64; 2],
    relative_error_norm: f64,
    analytic_dtheta: [f64; 2],
    tolerance: f64,
    pass: bool,
}

fn relative_error(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// `|a - b| / max(|a|, |b|)` over the whole vector, 0 when both vanish.
pub fn relative_error_norm(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    let scale = norm(&mut a.iter().copied()).max(norm(&mut b.iter().copied()));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

fn run_gradcheck(a: &GradcheckArgs, out: &Path) -> CliResult<Outcome> {
    if !(a.fd_step > 0.0 && a.fd_step.is_finite()) {
        return Err(CliError::Validation("--fd-step must be a positive number".into()));
    }
    if !(a.tolerance > 0.0) {
        return Err(CliError::Validation("--tolerance must be positive".into()));
    }
    let field = load_field(a.image.as_ref(), Some(&a.field))?;
    let params = a.layout.resolve()?;
    let sampling = a.sampling.config(a.jitter)?;

    let mut rng = ChaCha8Rng::seed_from_u64(a.sampling.seed);
    let upstream: Vec<Rgb> = (0..a.grid.pixel_count())
        .map(|_| Rgb::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let objective = |p: LayoutParams| -> CliResult<f64> {
        let image = simulate(field.as_ref(), a.grid, p, sampling)?;
        Ok(image.pixels.iter().zip(&upstream).map(|(i, u)| i.dot(u)).sum())
    };

    let (image, cache) = simulate_cached(field.as_ref(), a.grid, params, sampling)?;
    let record = pixlayout::backward(&image, &upstream, field.as_ref(), &cache)?;
    let mut fd = [0.0; 2];
    for (j, slot) in fd.iter_mut().enumerate() {
        let mut up = params.theta_raw();
        let mut dn = up;
        up[j] += a.fd_step;
        dn[j] -= a.fd_step;
        let f_up = objective(LayoutParams::from_raw(params.kind(), up)?)?;
        let f_dn = objective(LayoutParams::from_raw(params.kind(), dn)?)?;
        *slot = (f_up - f_dn) / (2.0 * a.fd_step);
    }
    let analytic = record.dloss_dtheta_raw;
    let err = relative_error_norm(&analytic, &fd);
    let pass = err <= a.tolerance;
    let report = GradcheckReport {
        layout: LayoutRecord::new(&a.grid, &params),
        sampling,
        fd_step: a.fd_step,
        analytic,
        finite_difference: fd,
        relative_error: [relative_error(analytic[0], fd[0]), relative_error(analytic[1], fd[1])],
        relative_error_norm: err,
        analytic_dtheta: record.dloss_dtheta,
        tolerance: a.tolerance,
        pass,
    };
    write_json(&out.join("gradcheck.json"), &report)?;
    println!(
        "analytic ({:.6e}, {:.6e})  fd ({:.6e}, {:.6e})  relative error {:.3e}  {}",
        analytic[0],
        analytic[1],
        fd[0],
        fd[1],
        err,
        if pass { "PASS" } else { "FAIL" }
    );
    let mut outcome = Outcome::ok(&["gradcheck.json"]);
    if !pass {
        outcome.failure = Some(CliError::Tolerance(format!(
            "relative error {err:.3e} exceeds {:.3e}",
            a.tolerance
        )));
    }
    Ok(outcome)
}

fn run_backwarp(a: &BackwarpArgs, out: &Path) -> CliResult<Outcome> {
    let bytes = fs::read(&a.input).map_err(|e| CliError::io(a.input.display(), e))?;
    let pnm = read_pnm(&bytes)?;
    if pnm.maxval > 255 {
        return Err(CliError::Validation(
            "backwarp expects 8-bit PPM/PGM input".into(),
        ));
    }
    let grid = SensorGrid::new(pnm.width, pnm.height)?;
    let params = a.layout.resolve()?;
    let (tw, th) = a.target;
    let samples: Vec<u8> = pnm.samples.iter().map(|&s| s as u8).collect();
    let (name, encoded) = if pnm.channels == 3 {
        let texels: Vec<[u8; 3]> = samples.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        let warped = backwarp(&LabelImage::new(grid.r1(), grid.r2(), texels)?, &params, tw, th)?;
        let mut data = format!("P6\n{tw} {th}\n255\n").into_bytes();
        data.extend(warped.values().iter().flatten());
        ("backwarp.ppm", data)
    } else {
        let warped = backwarp(&LabelImage::new(grid.r1(), grid.r2(), samples)?, &params, tw, th)?;
        ("backwarp.pgm", encode_pgm(tw, th, warped.values())?)
    };
    let path = out.join(name);
    fs::write(&path, encoded).map_err(|e| CliError::io(path.display(), e))?;
    println!("resampled {}x{} sensor onto {tw}x{th}", grid.r1(), grid.r2());
    Ok(Outcome::ok(&[name]))
}

#[derive(Serialize)]
struct TrainMetrics {
    layout: LayoutRecord,
    config: TrainConfig,
    sampling: SamplingConfig,
    train_samples: usize,
    test_samples: Option<usize>,
    final_test_accuracy: Option<f64>,
    history: Vec<EpochMetrics>,
}

fn load_split(images: &Path, labels: &Path, limit: Option<usize>) -> CliResult<Dataset> {
    Ok(load_mnist_limit(images, labels, limit)?)
}

fn run_train(a: &TrainArgs, out: &Path) -> CliResult<Outcome> {
    let train = load_split(&a.train_images, &a.train_labels, a.train_limit)?;
    let test = match (&a.test_images, &a.test_labels) {
        (Some(i), Some(l)) => Some(load_split(i, l, a.test_limit)?),
        _ => None,
    };
    let seeded = TrainConfig::seeded(a.seed);
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        layout_freeze_epochs: a.freeze_layout_epochs,
        adam: AdamConfig {
            learning_rate: a.lr,
            ..AdamConfig::default()
        },
        shuffle_seed: a.shuffle_seed.unwrap_or(seeded.shuffle_seed),
        init_seed: a.init_seed.unwrap_or(seeded.init_seed),
        sampling_seed: a.sampling_seed.unwrap_or(seeded.sampling_seed),
        eval_seed: a.eval_seed.unwrap_or(seeded.eval_seed),
        input_channels: a.input_channels,
    };
    let sampling = SamplingConfig {
        interior_strata: a.strata,
        boundary_samples: a.boundary_samples,
        rng_seed: cfg.eval_seed,
        jitter: !a.no_jitter,
    };
    cfg.validate()?;
    sampling.validate()?;
    info!("training on {} samples, grid {}x{}, kind {}", train.len(), a.grid.r1(), a.grid.r2(), a.kind);
    let report = train_joint(&train, test.as_ref(), a.grid, a.kind, &cfg, &sampling)?;

    Checkpoint::new(&report, a.grid, cfg.input_channels, sampling).save(out.join("checkpoint.json"))?;
    write_text(&out.join("layout.svg"), &layout_svg(&a.grid, &report.layout, a.svg_size))?;
    write_text(&out.join("layout.json"), &(layout_json(&a.grid, &report.layout)? + "\n"))?;
    let metrics = TrainMetrics {
        layout: LayoutRecord::new(&a.grid, &report.layout),
        config: cfg,
        sampling,
        train_samples: train.len(),
        test_samples: test.as_ref().map(Dataset::len),
        final_test_accuracy: report.final_test_accuracy(),
        history: report.history.clone(),
    };
    write_json(&out.join("metrics.json"), &metrics)?;
    let theta = report.layout.theta();
    match metrics.final_test_accuracy {
        Some(acc) => println!("theta = ({:.6}, {:.6}), test accuracy {acc:.4}", theta[0], theta[1]),
        None => println!("theta = ({:.6}, {:.6})", theta[0], theta[1]),
    }
    Ok(Outcome::ok(&["checkpoint.json", "layout.svg", "layout.json", "metrics.json"]))
}

#[derive(Serialize)]
struct EvalReport {
    layout: LayoutRecord,
    samples: usize,
    accuracy: f64,
}

fn run_eval(a: &EvalArgs, out: &Path) -> CliResult<Outcome> {
    let ckpt = Checkpoint::load(&a.checkpoint)?;
    let data = load_split(&a.images, &a.labels, a.limit)?;
    let accuracy = ckpt.evaluate(&data)?;
    let report = EvalReport {
        layout: LayoutRecord::new(&ckpt.grid, &ckpt.layout),
        samples: data.len(),
        accuracy,
    };
    write_json(&out.join("eval.json"), &report)?;
    println!("accuracy {accuracy:.4} on {} samples", data.len());
    Ok(Outcome::ok(&["eval.json"]))
}

fn run_layout_svg(a: &LayoutSvgArgs, out: &Path) -> CliResult<Outcome> {
    if a.size == 0 {
        return Err(CliError::Validation("--size must be positive".into()));
    }
    let params = a.layout.resolve()?;
    write_text(&out.join("layout.svg"), &layout_svg(&a.grid, &params, a.size))?;
    write_text(&out.join("layout.json"), &(layout_json(&a.grid, &params)? + "\n"))?;
    println!("wrote layout for theta = ({:.6}, {:.6})", params.theta()[0], params.theta()[1]);
    Ok(Outcome::ok(&["layout.svg", "layout.json"]))
}
