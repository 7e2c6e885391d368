//! Technology-adoption contagion on a geographically embedded social network.
//!
//! Agents live in cities and come in two types (Early and Regular adopters).
//! A social network is generated with Poisson degrees, a truncated power-law
//! distance kernel and tunable early-adopter homophily. Adoption spreads as a
//! weekly SI process through word of mouth and, optionally, a mass-media
//! agent whose volume is either read from data or driven by adoption itself.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod geo;
pub mod io;
pub mod media;
pub mod metrics;
pub mod netgen;
pub mod rng;

pub use error::{Error, Result};
