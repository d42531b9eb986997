pub mod arbdefective;
pub mod engine;
pub mod extension;
pub mod graph;
pub mod harness;
pub mod linial;
pub mod partition;
pub mod randomized;
pub mod schemes;
