//! Numerical core for blow-up analysis of almost-critical Hamiltonian
//! Lane-Emden systems with Neumann boundary conditions: ground-state
//! bubbles by radial shooting, energy-expansion constants by quadrature,
//! half-space boundary correctors by single-layer potentials, boundary
//! mean-curvature geometry, and the reduced-energy landscape that locates
//! the concentration point and scale.

pub mod bubble;
pub mod cache;
pub mod constants;
pub mod error;
pub mod geometry;
pub mod halfspace;
pub mod hyperbola;
pub mod ode;
pub mod quad;
pub mod reduced;

pub use bubble::{BubbleSolution, RadialProfile, ScaledBubble, TailCoefficients};
pub use constants::EnergyConstants;
pub use error::{Error, Result};
pub use geometry::{BoundarySurface, CriticalPoint, CurvatureReport, SurfacePoint};
pub use halfspace::{CorrectorField, CorrectorKind, ExpansionOrder, QuadricBoundaryData};
pub use hyperbola::{
    Criticality, DecayExponent, ExponentPair, Regime, RegimeVariant, RemainderLedger,
};
pub use reduced::{BlowupPrediction, ThetaLandscape};
