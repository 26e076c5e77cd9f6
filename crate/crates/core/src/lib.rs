//! Shannon entropies and mutual-information hierarchies for two- and
//! three-particle non-interacting states in a one-dimensional box or a
//! harmonic trap, in position and momentum space.
//!
//! The crate is organised bottom-up:
//!
//! * [`orbitals`] evaluates single-particle basis functions.
//! * [`wavefunction`] assembles permanents, Slater determinants and Hartree
//!   products (and superpositions of them).
//! * [`quadrature`] provides the tensor-product integration engine.
//! * [`densities`] reduces many-particle densities to one- and two-particle
//!   marginals, either in closed form or by quadrature.
//! * [`information`] turns densities into entropies and correlation measures.
//! * [`superposition`] builds and scans two-configuration superpositions.
//! * [`tables`] holds the reference values used for reproduction runs.

pub mod densities;
pub mod error;
pub mod format;
pub mod information;
pub mod orbitals;
pub mod quadrature;
pub mod superposition;
pub mod tables;
pub mod wavefunction;

pub use error::{Error, Result};

pub use orbitals::{Amplitude, Model, Space};
pub use quadrature::{IntegralResult, QuadratureScheme, RuleFamily};

pub use wavefunction::{Configuration, SymmetryClass, WaveFunction};
pub use information::{EntropyTriple, InformationReport, System, TwoParticleReport};
pub use superposition::{ScanResult, SuperpositionSpec};
