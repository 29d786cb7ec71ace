//! Trade-network integration analytics.
//!
//! End-to-end pipeline for yearly weighted directed trade networks built
//! from bilateral flow records: the first-quartile edge filter, eight
//! node-level integration indicators (degrees, strengths, PageRank,
//! betweenness, random-walk betweenness, closeness, clustering, k-core),
//! composite macro indices, balanced country-year panel assembly, and
//! static/dynamic panel estimators (pooled OLS, fixed/random effects,
//! Blundell-Bond system GMM) with the standard diagnostic battery.

pub mod centrality;
pub mod config;
pub mod country;
pub mod csvio;
pub mod econ;
pub mod error;
pub mod flow;
pub mod graph;
pub mod indicators;
pub mod linalg;
pub mod panel;
pub mod pipeline;
pub mod synth;

pub use country::{CountryCode, Universe};
pub use error::{Error, Result};
pub use flow::FlowRecord;
pub use graph::{EdgeFilter, NetworkStats, YearlyTradeGraph};
