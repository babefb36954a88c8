//! Siting of hydrogen refueling stations on a highway network and their
//! embedding in a greenfield power-system capacity expansion.
//!
//! Pipeline: route origin-destination truck flows over the highway graph
//! ([`highway`]), place the minimum number of capacitated stations covering
//! them ([`siting`]), classify and cost the stations ([`catalog`]), attach
//! them to the nearest bus of the power model and size their electrolyzers
//! and stores ([`coupling`]) inside the expansion LP ([`power`]), then read
//! prices, hydrogen costs and system metrics off the solved case
//! ([`metrics`]).

pub mod catalog;
pub mod coupling;
pub mod finance;
pub mod highway;
pub mod io;
pub mod metrics;
pub mod power;
pub mod siting;
