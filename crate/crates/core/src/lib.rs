//! Numerical engine for higher-order energies of rotationally symmetric maps
//! between warped-product models.
//!
//! The crate evaluates r-energies and their Eells–Sampson variants along
//! one-parameter families of radial profiles, locates constant-profile
//! critical angles, evaluates second variations, and covers two special
//! geometries: ellipsoidal targets and warped geodesic-ball domains.
//!
//! Conventions used throughout:
//! - jets store raw ρ-derivatives (`d[i] = dⁱ/dρⁱ` at the base point), not
//!   Taylor coefficients;
//! - energies are the bare integral `∫₀¹ L dρ`, without the `Vol(S^{n−1})`
//!   prefactor.

pub mod criticality;
pub mod ellipsoid;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod jet;
pub mod quadrature;
pub mod roots;
pub mod scalar;
pub mod stability;
pub mod warped;

pub use error::{Error, Result};
pub use geometry::{AffineProfile, Bump, ModelPair, ProfileFamily, RadialProfile, WarpFn};
pub use jet::Jet;
pub use quadrature::{Integral, TanhSinh};
pub use scalar::{Perturbation2, Scalar};
