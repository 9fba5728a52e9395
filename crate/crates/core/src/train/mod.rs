//! Joint optimization of the layout parameters and a small classifier.
//!
//! Each training step renders a mini-batch through the sensor, classifies the
//! pixel values, and backpropagates the loss into both the network weights
//! and, through the boundary-flux backward pass, into `theta_raw`.

mod adam;
mod classifier;
mod loss;
mod mnist;

use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use adam::{Adam, AdamConfig};
pub use classifier::{Activations, Classifier, HIDDEN};
pub use loss::{argmax, cross_entropy};
pub use mnist::{
    encode_idx_images, encode_idx_labels, load_mnist, load_mnist_limit, parse_idx_images,
    parse_idx_labels, write_idx, Dataset, CLASSES, IMAGES_MAGIC, LABELS_MAGIC,
};

use crate::error::{Error, Result};
use crate::grad::BoundaryPlan;
use crate::layout::{LayoutKind, LayoutParams, SensorGrid};
use crate::radiance::Rgb;
use crate::sensor::{stream_seed, SamplePlan, SamplingConfig, SensorImage};

/// `|theta_raw|` is kept below this so that `tanh` stays strictly inside
/// `(-1, 1)` in floating point.
pub const THETA_RAW_LIMIT: f64 = 15.0;

pub const CHECKPOINT_FORMAT: &str = "pixlayout-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Epochs at the start during which `theta_raw` is not updated.
    pub layout_freeze_epochs: usize,
    pub adam: AdamConfig,
    pub shuffle_seed: u64,
    pub init_seed: u64,
    /// Master seed for the per-step sensor sampling seeds.
    pub sampling_seed: u64,
    /// Fixed sensor sampling seed used for evaluation.
    pub eval_seed: u64,
    /// 3 for interleaved RGB pixel values, 1 for their channel mean.
    pub input_channels: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig::seeded(0)
    }
}

impl TrainConfig {
    /// Default hyperparameters with every seed derived from `seed`.
    pub fn seeded(seed: u64) -> Self {
        TrainConfig {
            epochs: 14,
            batch_size: 64,
            layout_freeze_epochs: 0,
            adam: AdamConfig::default(),
            shuffle_seed: stream_seed(seed, &[1]),
            init_seed: stream_seed(seed, &[2]),
            sampling_seed: stream_seed(seed, &[3]),
            eval_seed: stream_seed(seed, &[4]),
            input_channels: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::InvalidParameter("epochs must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidParameter("batch size must be >= 1".into()));
        }
        if !matches!(self.input_channels, 1 | 3) {
            return Err(Error::InvalidParameter("input channels must be 1 or 3".into()));
        }
        self.adam.validate()
    }
}

/// Sensor-to-classifier plumbing: how pixel values become network inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pipeline {
    pub grid: SensorGrid,
    pub input_channels: usize,
}

impl Pipeline {
    pub fn new(grid: SensorGrid, input_channels: usize) -> Result<Self> {
        if !matches!(input_channels, 1 | 3) {
            return Err(Error::InvalidParameter("input channels must be 1 or 3".into()));
        }
        Ok(Pipeline {
            grid,
            input_channels,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.grid.pixel_count() * self.input_channels
    }

    pub fn features(&self, image: &SensorImage) -> Vec<f64> {
        match self.input_channels {
            3 => image.to_interleaved(),
            _ => image.pixels.iter().map(|p| p.sum() / 3.0).collect(),
        }
    }

    /// Maps `d Loss / d features` back to per-pixel RGB cotangents.
    pub fn pixel_cotangents(&self, dx: &[f64]) -> Vec<Rgb> {
        match self.input_channels {
            3 => dx.chunks_exact(3).map(|c| Rgb::new(c[0], c[1], c[2])).collect(),
            _ => dx.iter().map(|&d| Rgb::repeat(d / 3.0)).collect(),
        }
    }
}

/// Mean loss over a mini-batch and its gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchOutcome {
    pub loss: f64,
    pub correct: usize,
    pub dloss_dtheta: [f64; 2],
    pub dloss_dtheta_raw: [f64; 2],
    pub dparams: Vec<f64>,
}

/// Forward and backward pass of the full pipeline over `indices`. The layout
/// gradient is only computed when `layout_grad` is set and the layout is not
/// the identity kind.
pub fn batch_gradient(
    data: &Dataset,
    indices: &[usize],
    layout: &LayoutParams,
    classifier: &Classifier,
    pipeline: &Pipeline,
    sampling: &SamplingConfig,
    layout_grad: bool,
) -> Result<BatchOutcome> {
    if indices.is_empty() {
        return Err(Error::InvalidParameter("empty mini-batch".into()));
    }
    if classifier.input_dim() != pipeline.input_dim() {
        return Err(Error::ShapeMismatch {
            expected: pipeline.input_dim(),
            actual: classifier.input_dim(),
        });
    }
    let plan = Arc::new(SamplePlan::new(pipeline.grid, *layout, *sampling)?);
    let boundary = if layout_grad && layout.kind() != LayoutKind::Identity {
        Some(BoundaryPlan::new(Arc::clone(&plan))?)
    } else {
        None
    };
    let per_image = indices
        .par_iter()
        .map(|&i| {
            let source = data.image(i);
            let (image, _) = plan.render_serial(&source);
            let acts = classifier.forward_cached(&pipeline.features(&image))?;
            let label = data.label(i);
            let (loss, dlogits) = cross_entropy(&acts.logits, label)?;
            let mut dparams = vec![0.0; classifier.params().len()];
            let dx = classifier.backward(&acts, &dlogits, &mut dparams);
            let dtheta = match &boundary {
                Some(b) => {
                    b.backward(&source, &image, &pipeline.pixel_cotangents(&dx), false)?
                        .dloss_dtheta
                }
                None => [0.0; 2],
            };
            Ok((loss, argmax(&acts.logits) == label, dtheta, dparams))
        })
        .collect::<Result<Vec<_>>>()?;

    let scale = 1.0 / indices.len() as f64;
    let mut out = BatchOutcome {
        loss: 0.0,
        correct: 0,
        dloss_dtheta: [0.0; 2],
        dloss_dtheta_raw: [0.0; 2],
        dparams: vec![0.0; classifier.params().len()],
    };
    for (loss, correct, dtheta, dparams) in per_image {
        out.loss += loss;
        out.correct += usize::from(correct);
        out.dloss_dtheta[0] += dtheta[0];
        out.dloss_dtheta[1] += dtheta[1];
        for (a, b) in out.dparams.iter_mut().zip(&dparams) {
            *a += b;
        }
    }
    out.loss *= scale;
    out.dparams.iter_mut().for_each(|g| *g *= scale);
    let d = layout.dtheta_draw();
    out.dloss_dtheta = [out.dloss_dtheta[0] * scale, out.dloss_dtheta[1] * scale];
    out.dloss_dtheta_raw = [out.dloss_dtheta[0] * d[0], out.dloss_dtheta[1] * d[1]];
    Ok(out)
}

/// Predicted class for every sample of `data`.
pub fn predict(
    data: &Dataset,
    layout: &LayoutParams,
    classifier: &Classifier,
    pipeline: &Pipeline,
    sampling: &SamplingConfig,
) -> Result<Vec<usize>> {
    let plan = Arc::new(SamplePlan::new(pipeline.grid, *layout, *sampling)?);
    (0..data.len())
        .into_par_iter()
        .map(|i| {
            let (image, _) = plan.render_serial(&data.image(i));
            Ok(argmax(&classifier.forward(&pipeline.features(&image))?))
        })
        .collect()
}

/// Fraction of `data` classified correctly. Sampling uses `sampling.rng_seed`
/// for every sample, so the result does not depend on sample order.
pub fn evaluate(
    data: &Dataset,
    layout: &LayoutParams,
    classifier: &Classifier,
    pipeline: &Pipeline,
    sampling: &SamplingConfig,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::InvalidParameter("cannot evaluate an empty dataset".into()));
    }
    let predictions = predict(data, layout, classifier, pipeline, sampling)?;
    let correct = predictions
        .iter()
        .zip(data.labels())
        .filter(|(p, l)| **p == usize::from(**l))
        .count();
    Ok(correct as f64 / data.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: Option<f64>,
    pub theta: [f64; 2],
    pub theta_raw: [f64; 2],
    pub layout_frozen: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub layout: LayoutParams,
    pub classifier: Classifier,
    pub history: Vec<EpochMetrics>,
}

impl TrainReport {
    pub fn final_test_accuracy(&self) -> Option<f64> {
        self.history.last().and_then(|m| m.test_accuracy)
    }
}

/// Trains layout and classifier jointly, starting from the uniform layout.
///
/// Each step samples the sensor with a fresh seed derived from
/// `cfg.sampling_seed` and the step index; strata counts and jitter come from
/// `sampling`. Evaluation uses `cfg.eval_seed`. With `kind = Identity` the
/// layout never moves, which gives the uniform baseline.
pub fn train_joint(
    train: &Dataset,
    test: Option<&Dataset>,
    grid: SensorGrid,
    kind: LayoutKind,
    cfg: &TrainConfig,
    sampling: &SamplingConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    sampling.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidParameter("training set is empty".into()));
    }
    let pipeline = Pipeline::new(grid, cfg.input_channels)?;
    let mut classifier = Classifier::new(pipeline.input_dim(), cfg.init_seed)?;
    let mut layout = LayoutParams::from_raw(kind, [0.0, 0.0])?;
    let mut adam_nu = Adam::new(cfg.adam, classifier.params().len());
    let mut adam_theta = Adam::new(cfg.adam, 2);
    let eval_sampling = sampling.with_seed(cfg.eval_seed);

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut step = 0u64;
    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(stream_seed(cfg.shuffle_seed, &[epoch as u64])));
        let learn_layout = kind != LayoutKind::Identity && epoch >= cfg.layout_freeze_epochs;
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            let step_sampling = sampling.with_seed(stream_seed(cfg.sampling_seed, &[step]));
            let out = batch_gradient(
                train,
                batch,
                &layout,
                &classifier,
                &pipeline,
                &step_sampling,
                learn_layout,
            )?;
            if !out.loss.is_finite() {
                return Err(Error::NonFinite("training loss"));
            }
            adam_nu.step(classifier.params_mut(), &out.dparams);
            if learn_layout {
                let mut raw = layout.theta_raw();
                adam_theta.step(&mut raw, &out.dloss_dtheta_raw);
                layout.set_theta_raw(raw.map(|v| v.clamp(-THETA_RAW_LIMIT, THETA_RAW_LIMIT)));
            }
            loss_sum += out.loss * batch.len() as f64;
            correct += out.correct;
            step += 1;
        }
        let test_accuracy = test
            .map(|t| evaluate(t, &layout, &classifier, &pipeline, &eval_sampling))
            .transpose()?;
        let metrics = EpochMetrics {
            epoch: epoch + 1,
            train_loss: loss_sum / train.len() as f64,
            train_accuracy: correct as f64 / train.len() as f64,
            test_accuracy,
            theta: layout.effective_theta(),
            theta_raw: layout.theta_raw(),
            layout_frozen: !learn_layout,
        };
        log::info!(
            "epoch {}: loss {:.4}, train acc {:.4}, test acc {:?}, theta {:?}",
            metrics.epoch,
            metrics.train_loss,
            metrics.train_accuracy,
            metrics.test_accuracy,
            metrics.theta
        );
        history.push(metrics);
    }
    Ok(TrainReport {
        layout,
        classifier,
        history,
    })
}

/// Everything needed to re-run evaluation of a trained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub grid: SensorGrid,
    pub layout: LayoutParams,
    pub input_channels: usize,
    pub sampling: SamplingConfig,
    pub classifier: Classifier,
}

impl Checkpoint {
    /// `sampling` should carry the evaluation seed.
    pub fn new(report: &TrainReport, grid: SensorGrid, input_channels: usize, sampling: SamplingConfig) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            grid,
            layout: report.layout,
            input_channels,
            sampling,
            classifier: report.classifier.clone(),
        }
    }

    pub fn pipeline(&self) -> Result<Pipeline> {
        Pipeline::new(self.grid, self.input_channels)
    }

    pub fn evaluate(&self, data: &Dataset) -> Result<f64> {
        evaluate(data, &self.layout, &self.classifier, &self.pipeline()?, &self.sampling)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint = serde_json::from_str(&text)?;
        if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::format(
                "checkpoint",
                format!("unsupported format {} v{}", ckpt.format, ckpt.version),
            ));
        }
        let pipeline = ckpt.pipeline()?;
        if ckpt.classifier.input_dim() != pipeline.input_dim()
            || ckpt.classifier.params().len() != Classifier::param_count(pipeline.input_dim())
        {
            return Err(Error::format("checkpoint", "classifier shape does not match the grid"));
        }
        Ok(ckpt)
    }
}

/// Synthetic 28x28 ten-class dataset: class `c` is a bright blob at angle
/// `2 pi c / 10` on a ring around the image center, with per-sample position,
/// brightness and size jitter. Used for tests and examples without MNIST.
pub fn synthetic_dataset(n: usize, seed: u64) -> Dataset {
    const SIDE: usize = 28;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pixels = Vec::with_capacity(n * SIDE * SIDE);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let c = rng.gen_range(0..CLASSES);
        let angle = std::f64::consts::TAU * c as f64 / CLASSES as f64;
        let cx = 13.5 + 6.0 * angle.cos() + rng.gen_range(-1.5..1.5);
        let cy = 13.5 + 6.0 * angle.sin() + rng.gen_range(-1.5..1.5);
        let amplitude = rng.gen_range(0.7..1.0);
        let spread = rng.gen_range(6.0..12.0);
        for y in 0..SIDE {
            for x in 0..SIDE {
                let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                let v = amplitude * (-d2 / spread).exp();
                pixels.push((v.min(1.0) * 255.0).round() as u8);
            }
        }
        labels.push(c as u8);
    }
    Dataset::new(SIDE, SIDE, pixels, labels).expect("synthetic dataset is well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 16,
            ..TrainConfig::seeded(5)
        }
    }

    fn cheap_sampling() -> SamplingConfig {
        SamplingConfig {
            interior_strata: 4,
            boundary_samples: 8,
            ..Default::default()
        }
    }

    #[test]
    fn overfits_a_single_batch() {
        let data = synthetic_dataset(32, 1);
        let grid = SensorGrid::new(4, 4).unwrap();
        let pipeline = Pipeline::new(grid, 3).unwrap();
        let mut clf = Classifier::new(pipeline.input_dim(), 2).unwrap();
        let mut adam = Adam::new(AdamConfig::default(), clf.params().len());
        let layout = LayoutParams::identity();
        let sampling = SamplingConfig::quadrature();
        let batch: Vec<usize> = (0..32).collect();
        for _ in 0..200 {
            let out = batch_gradient(&data, &batch, &layout, &clf, &pipeline, &sampling, false).unwrap();
            adam.step(clf.params_mut(), &out.dparams);
        }
        let acc = evaluate(&data, &layout, &clf, &pipeline, &sampling).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn constant_logits_score_the_modal_class_frequency() {
        let data = synthetic_dataset(50, 3);
        let counts = data.class_counts();
        let modal = argmax(&counts.map(|c| c as f64));
        let grid = SensorGrid::new(2, 2).unwrap();
        let pipeline = Pipeline::new(grid, 3).unwrap();
        let n = Classifier::param_count(pipeline.input_dim());
        let mut params = vec![0.0; n];
        params[n - CLASSES + modal] = 1.0;
        let clf = Classifier::from_params(pipeline.input_dim(), params).unwrap();
        let acc = evaluate(&data, &LayoutParams::identity(), &clf, &pipeline, &SamplingConfig::default()).unwrap();
        assert_eq!(acc, counts[modal] as f64 / 50.0);
    }

    #[test]
    fn evaluation_ignores_sample_order() {
        let data = synthetic_dataset(40, 4);
        let grid = SensorGrid::new(4, 4).unwrap();
        let pipeline = Pipeline::new(grid, 1).unwrap();
        let clf = Classifier::new(pipeline.input_dim(), 8).unwrap();
        let layout = LayoutParams::from_theta(LayoutKind::Curvilinear, [0.4, 0.2]).unwrap();
        let sampling = SamplingConfig::default().with_seed(99);
        let a = evaluate(&data, &layout, &clf, &pipeline, &sampling).unwrap();
        let reversed: Vec<u8> = (0..40).rev().flat_map(|i| data.raw_image(i).to_vec()).collect();
        let labels: Vec<u8> = data.labels().iter().rev().copied().collect();
        let rev = Dataset::new(28, 28, reversed, labels).unwrap();
        assert_eq!(a, evaluate(&rev, &layout, &clf, &pipeline, &sampling).unwrap());
    }

    #[test]
    fn layout_gradient_matches_finite_differences_of_the_pipeline() {
        // Finite differences through fixed quadrature nodes see the kinks of
        // bilinear texture interpolation and converge only as O(1/n), so the
        // check runs at 8x the default sample counts.
        let data = synthetic_dataset(32, 6);
        let grid = SensorGrid::new(4, 4).unwrap();
        let pipeline = Pipeline::new(grid, 3).unwrap();
        let clf = Classifier::new(pipeline.input_dim(), 7).unwrap();
        let sampling = SamplingConfig::quadrature().scaled(8);
        let batch: Vec<usize> = (0..32).collect();
        let raw = [0.3, 0.2];
        let layout = LayoutParams::from_raw(LayoutKind::Curvilinear, raw).unwrap();
        let out = batch_gradient(&data, &batch, &layout, &clf, &pipeline, &sampling, true).unwrap();
        let loss_at = |r: [f64; 2]| {
            let l = LayoutParams::from_raw(LayoutKind::Curvilinear, r).unwrap();
            batch_gradient(&data, &batch, &l, &clf, &pipeline, &sampling, false).unwrap().loss
        };
        let h = 1e-4;
        let fd: Vec<f64> = (0..2)
            .map(|j| {
                let (mut up, mut dn) = (raw, raw);
                up[j] += h;
                dn[j] -= h;
                (loss_at(up) - loss_at(dn)) / (2.0 * h)
            })
            .collect();
        let a = out.dloss_dtheta_raw;
        let err = ((a[0] - fd[0]).powi(2) + (a[1] - fd[1]).powi(2)).sqrt();
        let scale = (a[0].powi(2) + a[1].powi(2)).sqrt().max((fd[0].powi(2) + fd[1].powi(2)).sqrt());
        assert!(err / scale < 1e-2, "analytic {a:?} vs fd {fd:?}");
    }

    #[test]
    fn frozen_layout_stays_at_zero_bit_exactly() {
        let data = synthetic_dataset(48, 7);
        let grid = SensorGrid::new(4, 4).unwrap();
        let cfg = TrainConfig {
            layout_freeze_epochs: 2,
            ..small_cfg(2)
        };
        let report = train_joint(&data, None, grid, LayoutKind::Curvilinear, &cfg, &cheap_sampling()).unwrap();
        assert_eq!(report.layout.theta_raw(), [0.0, 0.0]);
        assert_eq!(report.layout.theta(), [0.0, 0.0]);
        assert!(report.history.iter().all(|m| m.layout_frozen));
    }

    #[test]
    fn identity_run_equals_permanently_frozen_curvilinear_run() {
        let data = synthetic_dataset(48, 8);
        let test = synthetic_dataset(20, 9);
        let grid = SensorGrid::new(4, 4).unwrap();
        let cfg = TrainConfig {
            layout_freeze_epochs: 99,
            ..small_cfg(2)
        };
        let s = cheap_sampling();
        let a = train_joint(&data, Some(&test), grid, LayoutKind::Identity, &cfg, &s).unwrap();
        let b = train_joint(&data, Some(&test), grid, LayoutKind::Curvilinear, &cfg, &s).unwrap();
        for (x, y) in a.classifier.params().iter().zip(b.classifier.params()) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in a.history.iter().zip(&b.history) {
            assert!((x.train_loss - y.train_loss).abs() < 1e-12);
            assert_eq!(x.test_accuracy, y.test_accuracy);
        }
    }

    #[test]
    fn training_is_deterministic_and_moves_theta() {
        let data = synthetic_dataset(64, 10);
        let grid = SensorGrid::new(4, 4).unwrap();
        let cfg = small_cfg(2);
        let s = cheap_sampling();
        let a = train_joint(&data, None, grid, LayoutKind::Rectangular, &cfg, &s).unwrap();
        let b = train_joint(&data, None, grid, LayoutKind::Rectangular, &cfg, &s).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.layout.theta_raw(), [0.0, 0.0]);
        assert!(a.layout.theta().iter().all(|t| t.abs() < 1.0));
    }

    #[test]
    fn checkpoint_round_trips() {
        let data = synthetic_dataset(32, 11);
        let grid = SensorGrid::new(2, 3).unwrap();
        let report = train_joint(&data, None, grid, LayoutKind::Curvilinear, &small_cfg(1), &cheap_sampling()).unwrap();
        let ckpt = Checkpoint::new(&report, grid, 3, cheap_sampling().with_seed(4));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        ckpt.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back, ckpt);
        assert_eq!(back.evaluate(&data).unwrap(), ckpt.evaluate(&data).unwrap());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig { epochs: 0, ..Default::default() }.validate().is_err());
        assert!(TrainConfig { input_channels: 2, ..Default::default() }.validate().is_err());
        let mut bad = TrainConfig::default();
        bad.adam.learning_rate = -1.0;
        assert!(bad.validate().is_err());
    }
}
