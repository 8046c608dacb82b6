//! Cluster-based zero-shot classification for binary-labelled numeric data.
//!
//! The idea: fit k-means to the rows of one class only (the *train* class),
//! record for each cluster the largest member-to-centroid distance, and
//! classify new points by whether they fall inside the radius of their
//! nearest cluster. Points outside every radius are assigned to the class
//! the model never saw (the *target* class).
//!
//! ```
//! use cluster_zsl::clustering::KMeansConfig;
//! use cluster_zsl::synth::{gen_two_blobs, TwoBlobSpec};
//! use cluster_zsl::zsl::{train_model, BoundaryRule, PredictedClass};
//!
//! let data = gen_two_blobs::<f64>(&TwoBlobSpec { n_per_class: 50, seed: 7, ..Default::default() }).unwrap();
//! let model = train_model(&data.features().view(), &KMeansConfig::new(4, 7), BoundaryRule::Inclusive).unwrap();
//! // every training point sits inside some cluster radius
//! for p in model.predict_batch(&data.features().view()).unwrap() {
//!     assert_eq!(p.class, PredictedClass::Train);
//! }
//! ```
//!
//! All randomised stages take explicit seeds and use a fixed, portable RNG,
//! so equal inputs give byte-identical outputs on every platform.

pub mod clustering;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod seed;
pub mod synth;
pub mod zsl;

pub use error::{Error, Result};

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar the library is generic over.
///
/// Implemented for `f32` and `f64`. The bounds cover what the algorithms
/// need: IEEE arithmetic, conversion from primitive counts, compound
/// assignment, summation and printing.
pub trait Float:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumAssignOps
    + ndarray::ScalarOperand
    + Sum<Self>
    + Display
    + Debug
    + Send
    + Sync
    + 'static
{
}

impl Float for f32 {}
impl Float for f64 {}

/// Concrete aliases for the common case.
pub type Dataset32 = dataset::Dataset<f32>;
pub type Dataset64 = dataset::Dataset<f64>;
pub type Scaler32 = dataset::Scaler<f32>;
pub type Scaler64 = dataset::Scaler<f64>;
pub type ZeroShotSplit32 = dataset::ZeroShotSplit<f32>;
pub type ZeroShotSplit64 = dataset::ZeroShotSplit<f64>;
pub type KMeansResult32 = clustering::KMeansResult<f32>;
pub type KMeansResult64 = clustering::KMeansResult<f64>;
pub type ZslModel32 = zsl::ZslModel<f32>;
pub type ZslModel64 = zsl::ZslModel<f64>;
pub type ClassPrediction32 = zsl::ClassPrediction<f32>;
pub type ClassPrediction64 = zsl::ClassPrediction<f64>;
