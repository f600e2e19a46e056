//! Two-stage convolutional jam/clean classifier trained with plain SGD.

mod checkpoint;
mod layers;
mod loss;
mod metrics;
mod model;
mod real;
mod spec;
mod train;

pub use checkpoint::{load_model, model_from_bytes, model_to_bytes, save_model, JnetHeader, JNET_MAGIC, JNET_VERSION};
pub use loss::{bce, mean_bce, BCE_EPSILON};
pub use metrics::{ClassMetrics, MetricsReport};
pub use model::{DetectorModel, ForwardCache, Gradients, Mode};
pub use real::Real;
pub use spec::{NetworkSpec, ParamId, ParamLayout, ShapeChain};
pub use train::{evaluate, predict_all, train, EpochStats, ExampleSource, TrainConfig, TrainHistory};
