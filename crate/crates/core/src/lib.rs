pub mod error;
pub mod tensor;

pub mod channel;
pub mod codec;
pub mod corpus;
pub mod detector;
pub mod experiment;
pub mod harq;
pub mod knowledge_base;
pub mod metrics;
pub mod reconstructor;

pub use error::{Error, Result};
