//! Computational objects around the higher Ramanujan equations.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: dense complex matrices and the shared tolerance policy;
//! * [`sympgrp`]: symplectic and general-symplectic groups, parabolics, cosets mod `Sp(Z)`;
//! * [`siegel`]: the Siegel upper half-space and the actions on it;
//! * [`derham`]: first de Rham cohomology of `C^g / (Z^g + tau Z^g)` in period coordinates;
//! * [`qseries`]: exact Eisenstein q-expansions and the Ramanujan vector field;
//! * [`elliptic`]: Weierstrass invariants and quasi-periods from lattice sums;
//! * [`flows`]: the Ramanujan flows in group coordinates and their twisted leaves;
//! * [`verify`]: the verification suites used by the command-line tool.

pub mod derham;
pub mod elliptic;
pub mod error;
pub mod flows;
pub mod numerics;
pub mod qseries;
pub mod sample;
pub mod siegel;
pub mod sympgrp;
pub mod verify;

pub use derham::{CohClass, HodgeFrame};
pub use elliptic::LatticePeriods;
pub use error::{Error, Result};
pub use flows::{FlowState, LeafSpec};
pub use numerics::{c, CMatrix, Tolerance, C64, TWO_PI_I};
pub use qseries::{QSeries, RamanujanPoint};
pub use siegel::SiegelPoint;
pub use sympgrp::{GSpMatrix, IntMatrix, LieGenerator, ParabolicElement, SymplecticMatrix};
