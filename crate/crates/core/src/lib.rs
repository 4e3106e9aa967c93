//! Reconstruction of pilot-job lifecycles from resource-pool snapshots,
//! termination classification, preemption statistics and runtime-distribution
//! fitting, with a synthetic grid simulator that produces labelled snapshots.

pub mod classify;
pub mod distfit;
pub mod ingest;
pub mod pipeline;
pub mod scalar;
pub mod simulate;
pub mod stats;
pub mod timeline;

pub use scalar::Scalar;

pub type Model64 = distfit::Model<f64>;
pub type DistributionFit64 = distfit::DistributionFit<f64>;
pub type MixtureModel64 = distfit::MixtureModel<f64>;
pub type EmpiricalCdf64 = stats::EmpiricalCdf<f64>;
pub type FitConfig64 = distfit::FitConfig<f64>;

pub type Model32 = distfit::Model<f32>;
pub type DistributionFit32 = distfit::DistributionFit<f32>;
pub type MixtureModel32 = distfit::MixtureModel<f32>;
pub type EmpiricalCdf32 = stats::EmpiricalCdf<f32>;
pub type FitConfig32 = distfit::FitConfig<f32>;
