//! Edge and cloud services for the concise -> comprehensive -> response
//! pipeline, and the text-generation backends they share.

pub mod backend;
pub mod batcher;
pub mod client;
pub mod cloud;
pub mod corpus;
pub mod dedup;
pub mod edge;
pub mod metrics;
pub mod profile;

mod net;
mod text;

pub use net::WireError;
pub use text::{coverage, keywords, stem};
