pub mod inference;
pub mod langid;
pub mod metrics;
pub mod orchestrator;
pub mod promptlib;
pub mod registry;
