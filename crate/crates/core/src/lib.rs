//! Exact and numerical tools for Bell tests in the (n, c, d) scenario: n parties,
//! c inputs and d outputs per site, with correlators p(k|s) for the mod-d sum
//! of the outputs.
//!
//! * [`ffun`]: functions Z_c^n -> Z_d and their linear / bipartite classes
//! * [`poly`]: exact double-description hull and membership
//! * [`sym`]: relabeling symmetries, orbits and canonical forms
//! * [`ineq`]: Bell inequality catalog and non-trivial inequalities from games
//! * [`qopt`]: Werner-Wolf and MBS quantum bounds
//! * [`nmbqc`]: non-adaptive measurement-based computation
//! * [`nosig`]: non-signalling boxes and the Svetlichny polytope
//! * [`loophole`]: detection and input post-selection

pub mod caps;
pub mod error;
pub mod ffun;
pub mod ineq;
pub mod lattice;
pub mod loophole;
pub mod nmbqc;
pub mod nosig;
pub mod poly;
pub mod qopt;
pub mod rat;
pub mod sym;

pub use caps::Caps;
pub use error::{Error, Result};
pub use ffun::{DigitString, FiniteFunction, FunctionClassReport, Scenario};
pub use ineq::{BellInequality, GameSpec};
pub use poly::{LinearInequality, RationalPolytope, RationalVector};
pub use qopt::{AngleConfig, CertifiedKind, PhaseConfig, QuantumBoundReport};
pub use rat::Q;
pub use sym::{Orbit, SymmetryOp};
