//! Least-energy ground states and sign-changing (nodal) solutions of the
//! logarithmic Schrödinger equation
//!
//! ```text
//! -Δu + λa(x)u = u log u²    on a finite weighted graph G = (V, E)
//! ```
//!
//! and of its Dirichlet counterpart on the potential well `Ω = {a = 0}`.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: weighted graphs and discrete calculus (Laplacian, gradient
//!   form, integrals, norms, boundaries, hop distance);
//! * [`energy`]: the energy functionals, directional derivatives, pointwise
//!   residuals and the positive/negative-part coupling `K`;
//! * [`nehari`]: ray and pair projections onto the Nehari sets;
//! * [`solver`]: multi-start projected descent for the ground and nodal
//!   levels, and verification of candidate solutions;
//! * [`oracle`]: brute-force enumeration of critical points on tiny graphs;
//! * [`io`]: JSON formats for graphs and fields;
//! * [`lab`]: fixture generation and the `λ → ∞` sweep.

pub mod energy;
pub mod error;
pub mod field;
pub mod graph;
pub mod io;
pub mod lab;
pub mod nehari;
pub mod oracle;
pub mod solver;

pub use energy::{IdentityReport, Mode, ProblemInstance};
pub use error::{Error, Result};
pub use field::VertexField;
pub use graph::{Edge, NormBundle, SubDomain, ValidationReport, Vertex, WeightedGraph};
pub use nehari::{
    fiber_energy, miranda_bracket, pair_residuals, project_pair, project_pair_from, project_ray,
    FiberValue, PairOptions, PairProjection,
};
pub use oracle::{oracle_enumerate, CriticalPoint, GridSpec, OracleResult};
pub use solver::{solve_ground, solve_nodal, verify, LevelKind, SolveOptions, SolveReport, VerificationReport};
