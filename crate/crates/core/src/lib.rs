pub mod bench;
pub mod engine;
pub mod graph;
pub mod instrument;
pub mod minilang;
pub mod preprocess;
