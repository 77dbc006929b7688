//! Half-space consistency: the solver's wall compression rate against the
//! reduced-kernel prediction.
//!
//! For an odd side-wall source G supported in a packet of scale λ, the flat
//! half-space model predicts the wall compression rate at the packet center
//! as σ ≈ 2·C₀·H_λ[G], where
//!
//!   H_λ[G] = ∬_{(0,λ)²} K₀(x, y) · G(1−x, y) dx dy
//!
//! is the hyperbolic mass over the positive half-packet (the mirror half
//! contributes equally because both K₀ and G are odd in y, hence the
//! factor 2). The curved wall perturbs the kernel at relative order λ, and
//! the periodic images and the axis add a smooth, separated correction, so
//! the ratio σ_solver / prediction tends to 1 as the packet shrinks. This
//! module measures that ratio; it is the aggregate check that the discrete
//! recovery, the wall traces, and the closed-form kernel constants all agree.

use crate::grid::{sample_bilinear, Parity, ScalarField};
use crate::kernels::{k0_eval, C0_EFFECTIVE};
use crate::poisson::recover_velocity;
use crate::quad::integrate_2d;
use crate::traces::boundary_traces;
use crate::{Error, Result};

/// Minimum number of grid cells the packet scale must span in each direction
/// for the hyperbolic mass to be meaningful.
pub const MIN_CELLS_PER_SCALE: f64 = 4.0;

/// Outcome of the half-space consistency comparison.
#[derive(Debug, Clone, Copy)]
pub struct ConsistencyReport {
    /// Wall compression rate σ from the recovered velocity's boundary trace.
    pub sigma_solver: f64,
    /// Half-space prediction 2·C₀·H_λ[G].
    pub sigma_halfspace: f64,
    /// Hyperbolic mass H_λ[G] over the positive half-packet.
    pub h_lambda: f64,
    /// sigma_solver / sigma_halfspace.
    pub ratio: f64,
}

/// Hyperbolic mass H_λ[G] = ∬_{(0,λ)²} K₀(x, y)·G(1−x, y) dx dy.
///
/// G is sampled bilinearly; the integrand has an integrable 1/ρ profile at
/// the wall corner (K₀ supplies x·y/ρ⁴ and the odd source one more power of
/// y), which the adaptive rule resolves because the Gauss–Kronrod nodes
/// never touch the corner itself. The tolerance is set relative to a crude
/// composite estimate so the accuracy target follows the mass scale.
pub fn hyperbolic_mass(g: &ScalarField, lambda: f64) -> Result<f64> {
    let n = 64;
    let h = lambda / n as f64;
    let mut crude = 0.0;
    for a in 0..n {
        for b in 0..n {
            let x = (a as f64 + 0.5) * h;
            let y = (b as f64 + 0.5) * h;
            crude += k0_eval(x, y) * sample_bilinear(g, 1.0 - x, y);
        }
    }
    crude *= h * h;
    let tol = (1e-6 * crude.abs()).max(1e-12);
    integrate_2d(
        |x, y| k0_eval(x, y) * sample_bilinear(g, 1.0 - x, y),
        0.0,
        lambda,
        0.0,
        lambda,
        tol,
    )
}

/// Compares the solver's σ against the half-space prediction 2·C₀·H_λ[G].
///
/// `phi` must be the recovery solution for `g` (the caller owns that
/// contract; this routine only recovers the velocity and reads its wall
/// trace). `lambda` is the packet scale; the positive half-packet
/// (0,λ)×(0,λ) in wall coordinates (x, y) = (1−r, z) must fit inside the
/// domain and span at least [`MIN_CELLS_PER_SCALE`] cells. A source with no
/// mass on the half-packet is rejected as degenerate — the prediction would
/// be identically zero and the ratio meaningless.
pub fn sigma_consistency(
    g: &ScalarField,
    phi: &ScalarField,
    lambda: f64,
) -> Result<ConsistencyReport> {
    let spec = g.spec();
    if phi.spec() != spec {
        return Err(Error::GridMismatch(
            "source and potential sampled on different grids".into(),
        ));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "packet scale lambda = {lambda} must be positive"
        )));
    }
    if lambda > 1.0 || lambda > 0.5 * spec.z_period {
        return Err(Error::InvalidParameter(format!(
            "packet scale lambda = {lambda} exceeds the domain (radial depth 1, half-period {})",
            0.5 * spec.z_period
        )));
    }
    let cell = spec.dr().max(spec.dz());
    if lambda < MIN_CELLS_PER_SCALE * cell {
        return Err(Error::UnresolvedPacket(format!(
            "packet scale lambda = {lambda} spans fewer than {MIN_CELLS_PER_SCALE} cells (cell = {cell:.3e})"
        )));
    }

    // Degeneracy: no source samples on the closed half-packet.
    let mut mass = 0.0_f64;
    for i in 0..spec.nr {
        let x = spec.x(i);
        if !(0.0..=lambda).contains(&x) {
            continue;
        }
        for k in 0..spec.nz {
            let y = spec.z(k);
            if (0.0..=lambda).contains(&y) {
                mass = mass.max(g.get(i, k).abs());
            }
        }
    }
    if mass == 0.0 {
        return Err(Error::DegeneratePacket(
            "no source mass on the half-packet; the half-space prediction is void".into(),
        ));
    }

    let h_lambda = hyperbolic_mass(g, lambda)?;
    let sigma_halfspace = 2.0 * C0_EFFECTIVE * h_lambda;
    if sigma_halfspace == 0.0 {
        return Err(Error::DegeneratePacket(
            "hyperbolic mass vanished despite nonzero samples; ratio undefined".into(),
        ));
    }

    let vel = recover_velocity(phi);
    let gamma = ScalarField::zeros(spec).with_parity(Parity::Odd);
    let trace = boundary_traces(&gamma, g, &vel, lambda, 0.0)?;
    let sigma_solver = trace.sigma;

    Ok(ConsistencyReport {
        sigma_solver,
        sigma_halfspace,
        h_lambda,
        ratio: sigma_solver / sigma_halfspace,
    })
}
