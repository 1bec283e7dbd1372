//! Closed-form resolvent kernels of one-dimensional point-interaction
//! Hamiltonians (delta arrays, the delta-prime interaction, the Dirichlet
//! decoupled line) together with the machinery needed to study how scaled
//! potentials and Cheon-Shigehara delta triples approximate them: truncated
//! power-series verification of the small-spacing expansions, bound-state
//! search on the secular determinants, a transfer-matrix Schroedinger solver
//! for piecewise-constant potentials, and Hilbert-Schmidt distance studies
//! between all of the above.
//!
//! Everything is evaluated on the imaginary spectral axis `k = i kappa`,
//! `kappa > 0`, so all kernels are real.

pub mod convergence;
pub mod delta_arrays;
pub mod kernels;
pub mod linalg;
pub mod model;
pub mod potentials;
pub mod quadrature;
pub mod schrodinger;
pub mod series;
pub mod spectra;

pub use convergence::{ConvergenceReport, StudyConfig, StudyId};
pub use delta_arrays::{CouplingConfig, DeltaArray, GammaMatrix, Uvw};
pub use kernels::{KernelValue, ModelTag, SpectralPoint};
pub use model::KernelModel;
pub use potentials::{PotentialShape, ScaledPotential, ShapeId};
pub use schrodinger::{DecayingSolutionPair, PiecewiseConstantPotential};
pub use series::{ExpansionId, Jet, VerificationReport};
pub use spectra::BoundState;
