pub mod analysis;
pub mod calibration;
pub mod corpus;
pub mod detection_io;
pub mod metrics;
pub mod report;
pub mod sampling;
pub mod stats;
pub mod synthetic;
pub mod warnings;
