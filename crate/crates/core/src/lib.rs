pub mod bank;
pub mod harness;
pub mod infer;
pub mod ingest;
pub mod names;
pub mod notebook;
pub mod pysrc;
pub mod resolver;
pub mod version;

pub use infer::{infer_notebook, InferError, Inference};
