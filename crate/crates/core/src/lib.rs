//! Fake task detection for mobile crowdsensing campaigns.
//!
//! A self-organizing feature map pre-clusters the training data; neurons
//! whose members are all legitimate become a fast path that accepts test
//! tasks outright, and the remaining mixed tasks go to a deep feedforward
//! classifier trained only on mixed data. Removing the easy legitimate
//! tasks first leaves the classifier with a less imbalanced problem.
//!
//! Modules, bottom-up:
//!
//! * [`taskgen`] simulates campaigns and splits them chronologically.
//! * [`features`] scales features and ranks them with ReliefF.
//! * [`sofm`] trains the map, marks clusters and partitions datasets.
//! * [`deepnn`] is the classifier and its backpropagation trainer.
//! * [`pipeline`] runs and scores the baseline, pre-clustered and combined variants.
//! * [`cli`] backs the `crowdguard` binary.
//!
//! The guide under `book/` walks through each stage; its code listings are
//! compiled and run as doctests of this crate.

pub mod cli;
pub mod deepnn;
pub mod error;
pub mod features;
pub mod pipeline;
pub mod plot;
pub mod sofm;
pub mod taskgen;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/task-generation.md")]
    mod task_generation {}
    #[doc = include_str!("../../../book/src/features.md")]
    mod features {}
    #[doc = include_str!("../../../book/src/sofm.md")]
    mod sofm {}
    #[doc = include_str!("../../../book/src/deepnn.md")]
    mod deepnn {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/results.md")]
    mod results {}
}
