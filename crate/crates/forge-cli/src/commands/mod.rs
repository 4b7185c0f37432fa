pub mod fit_knee;
pub mod fit_law;
pub mod gen;
pub mod ingest;
pub mod optimize;
pub mod predict;
pub mod ps;
pub mod stats;
pub mod sweep;
pub mod threshold;
pub mod validate;
