//! Differentiable simulation of sensors with non-uniform pixel layouts.
//!
//! A layout deforms the uniform pixel grid on `S = [-1, 1]^2` by a
//! two-parameter bijection ([`layout`]). The forward pass ([`sensor`])
//! integrates a point-sampled radiance field ([`radiance`]) over each
//! deformed pixel; the backward pass ([`grad`]) differentiates the pixel
//! values with respect to the layout parameters through boundary flux
//! integrals. [`resample`] maps deformed outputs back onto a uniform grid and
//! [`train`] optimizes a layout jointly with a small classifier.

pub mod error;
pub mod grad;
pub mod layout;
pub mod radiance;
pub mod resample;
pub mod sensor;
pub mod train;

pub use error::{Error, Result};
pub use grad::{backward, dpixel_dtheta, edge_flux, BoundaryPlan, EdgeFlux, GradientRecord};
pub use layout::{
    boundary_param, deform, deform_dtheta, deform_inverse, jacobian, uniform_pixel_bounds,
    BoundaryParam, Edge, EdgeId, LayoutKind, LayoutParams, PixelIndex, PixelRegion, Point, Rect,
    SensorGrid,
};
pub use radiance::{load_image, AnalyticField, RadianceField, Rgb, SourceImage};
pub use resample::{backwarp, LabelImage};
pub use sensor::{
    pixel_volume, simulate, simulate_cached, ForwardCache, SamplePlan, SamplingConfig,
    SensorImage, SensorResponse,
};
pub use train::{
    evaluate, load_mnist, load_mnist_limit, synthetic_dataset, train_joint, AdamConfig, Checkpoint,
    Classifier, Dataset, EpochMetrics, Pipeline, TrainConfig, TrainReport,
};
