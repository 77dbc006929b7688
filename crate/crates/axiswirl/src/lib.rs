//! Numerical laboratory for axisymmetric swirl dynamics on a periodic cylinder.
//!
//! The domain is the meridional section Ω = {0 < r < 1, z ∈ 𝕋} of the unit
//! cylinder with periodic axial coordinate. The state is the pair
//!
//! * Γ = r·u^θ  — the swirl (circulation density), transported: D_t Γ = 0,
//! * G = ω^θ/r — the azimuthal vorticity ratio, sourced by the swirl:
//!   D_t G = r^{-4} ∂_z(Γ²),
//!
//! with the meridional velocity recovered from G through a degenerate elliptic
//! problem that is uniformized by viewing r as a radial coordinate in five
//! dimensions: −Δ₅φ = G with Δ₅ = ∂_r² + (3/r)∂_r + ∂_z², φ = 0 on the side
//! wall, and u^r = −r∂_zφ, u^z = 2φ + r∂_rφ.
//!
//! The crates' modules:
//!
//! * [`grid`] — shifted cylindrical grids, scalar fields, parity projection,
//!   and the weighted volume integral ∫ f r³ dr dz.
//! * [`poisson`] — the five-dimensional Laplacian, its FFT/tridiagonal solver,
//!   velocity recovery, and the divergence diagnostic.
//! * [`kernels`] — closed-form side-wall kernels: the hyperbolic kernel
//!   K₀(x,y) = xy/(x²+y²)², its transport identity, the five-dimensional
//!   half-space Green function, the mixed wall kernel, and the constants that
//!   tie them together.
//! * [`quad`] — adaptive Gauss–Kronrod quadrature used by the continuum
//!   oracles and the kernel constants.
//! * [`packets`] — packet geometry, smooth cutoffs, kernel-weighted masses,
//!   the maximal diagonal score, dyadic tails, and projected amplitudes.
//! * [`cluster`] — the moving cluster frame, candidate selection, coherence
//!   matrix, coherent component, Campanato defect, and anisotropy monitors.
//! * [`traces`] — side-wall point traces (σ, a, b, c, λ-rescaled A, B) and
//!   the gradient ceiling.
//! * [`dynamics`] — the semi-Lagrangian evolution loop with its per-step
//!   identity residuals and the continuation monitor.
//! * [`ode`] — the planar comparison system X′ = αY², Y′ = βXY: adaptive
//!   integration, closed-form blow-up times, and trace comparison.
//! * [`initdata`] — smooth odd packet initial data and the admissibility
//!   report.
//! * [`config`] — run configuration (structured key/value text) shared by the
//!   CLI and the tests.
//! * [`snapshot`] — the self-describing scalar-field snapshot format.

pub mod cluster;
pub mod config;
pub mod consistency;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod initdata;
pub mod kernels;
pub mod ode;
pub mod packets;
pub mod poisson;
pub mod quad;
pub mod snapshot;
pub mod stencil;
pub mod traces;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
