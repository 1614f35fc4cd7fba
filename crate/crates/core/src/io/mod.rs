//! File formats: feature files, DEM grids, tile manifests, run
//! configuration and CSV reports.

pub mod config;
pub mod dem;
pub mod features;
pub mod manifest;
pub mod report;

pub use config::{MatchSetRule, RunConfig};
pub use dem::{read_dem, write_dem};
pub use features::{read_features, FeatureSet, FeatureWriter};
pub use manifest::read_manifest;
pub use report::{csv_string, write_csv};
