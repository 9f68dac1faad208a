//! Latent social-impulse recovery and longevity inference for online videos.
//!
//! The pipeline models a video site as a causal filter with an exponentially
//! decaying impulse response. Observed view increments are deconvolved into
//! non-negative impulse trains ([`filter`], [`nnls`]), impulse trains are
//! reduced to corpus-normalised longevity scores ([`longevity`]), and missing
//! scores are inferred over the related-video graph ([`graph`], [`inference`])
//! with a discrete Gaussian Markov random field solved by loopy belief
//! propagation. [`harness`] runs masking experiments against the regression
//! and graph-KNN baselines and generates synthetic corpora with known truth.

pub mod cli;
pub mod error;
pub mod filter;
pub mod graph;
pub mod harness;
pub mod inference;
pub mod io;
pub mod longevity;
pub mod nnls;
pub mod stats;

pub use error::{Error, Result};
pub use filter::{FilterSpec, ImpulseTrain, ViewHistory};
pub use graph::{Features, VideoGraph, VideoId, VideoNode};
pub use longevity::{LongevityConfig, ScoredVideo};
pub use nnls::{deconvolve, NnlsOptions};
