//! Robustness certification and certified training for nearest prototype
//! classifiers.

pub mod error;
pub mod exact;
pub mod geometry;
pub mod io;
pub mod model;
pub mod norm;
pub mod oracle;
pub mod sphere;
pub mod support;
pub mod train;

pub use error::{Error, Result};
pub use model::{Domain, Metric, PrototypeModel, SphereBlock, SphereEmbedding, ThreatNorm, ThreatSpec};
pub use norm::Norm;
pub use exact::{certify, Certificate, CertifyMode, CertifyOptions};
pub use io::Dataset;
pub use train::{TrainConfig, MarginValue};
