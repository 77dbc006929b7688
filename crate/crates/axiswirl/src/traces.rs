//! Boundary-trace extraction at the wall stagnation point (r, z) = (1, 0).
//!
//! The mechanism under study is driven by four wall-point scalars:
//!
//! * σ = −∂_z u^z(1, 0, t), the boundary compression rate,
//! * a = ∂_z G(1, 0, t), the odd slope of the forced vorticity ratio,
//! * b = ∂_z Γ(1, 0, t), the odd slope of the swirl angular momentum,
//! * c = ∂_z² Γ(1, 0, t), the wall curvature (identically zero in the
//!   exact-odd class; its drift is a parity monitor).
//!
//! together with the normalized pair A = λ·a, B = λ^{1/2}·b on the moving
//! compression scale λ(t). All z-stencils at the wall point are fourth-order
//! centered (the wall node and z = 0 are exact grid nodes), so polynomial
//! profiles up to degree four are reproduced to round-off.

use crate::grid::ScalarField;
use crate::poisson::Velocity;
use crate::stencil::{dr2, dz2, dz4, dz4_row, dzz4_row};
use crate::{Error, Result};

/// Inner-core fraction κ used when a trace is extracted without an explicit
/// choice; the core is {x + |y| ≤ κλ}.
pub const KAPPA_CORE_DEFAULT: f64 = 0.5;

/// Relative floor under which |∂_zΓ| nodes are excluded from the anisotropy
/// ratio (avoids division blow-up on the odd zero set).
pub const ANISOTROPY_FLOOR: f64 = 1e-3;

/// Wall-point scalars and their normalized companions at one instant.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryTrace {
    /// Sample time.
    pub t: f64,
    /// Compression rate σ = −∂_z u^z(1, 0, t).
    pub sigma: f64,
    /// Forced slope a = ∂_z G(1, 0, t).
    pub a: f64,
    /// Swirl slope b = ∂_z Γ(1, 0, t).
    pub b: f64,
    /// Wall curvature c = ∂_z²Γ(1, 0, t); ~0 in the exact-odd class.
    pub c_curv: f64,
    /// Compression scale λ(t) > 0.
    pub lambda: f64,
    /// Normalized score A = λ·a, stored exactly as this product.
    pub big_a: f64,
    /// Normalized source B = λ^{1/2}·b, stored exactly as this product.
    pub big_b: f64,
    /// Max over the inner core of |∂_rΓ / ∂_zΓ| (radial-swirl anisotropy).
    pub r_ratio: f64,
    /// Discrete sup of first differences over all velocity components
    /// (u^r, u^z, and the swirl u^θ = Γ/r), including the wall slope |b|
    /// itself so the continuation bound gradUinf ≥ |b| holds structurally.
    pub grad_u_inf: f64,
}

/// Extracts the boundary trace from a state snapshot.
///
/// All fields must share one grid; λ must be positive. The z-stencils live
/// entirely inside one period around z = 0, so no wrap artifacts enter.
pub fn boundary_traces(
    gamma: &ScalarField,
    g: &ScalarField,
    vel: &Velocity,
    lambda: f64,
    t: f64,
) -> Result<BoundaryTrace> {
    let spec = gamma.spec();
    if g.spec() != spec || vel.spec() != spec {
        return Err(Error::GridMismatch(
            "trace inputs sampled on different grids".into(),
        ));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "compression scale lambda = {lambda} must be positive"
        )));
    }
    let dz = spec.dz();
    let w = spec.wall();
    let k0 = spec.z_zero();

    let sigma = -dz4_row(vel.uz.row(w), k0, dz);
    let a = dz4_row(g.row(w), k0, dz);
    let b = dz4_row(gamma.row(w), k0, dz);
    let c_curv = dzz4_row(gamma.row(w), k0, dz);

    let r_ratio = core_anisotropy(gamma, lambda, KAPPA_CORE_DEFAULT).unwrap_or(0.0);

    // Velocity gradient sup over u^r, u^z, and the swirl u^θ = Γ/r.
    let utheta =
        ScalarField::from_fn_indexed(spec, gamma.parity(), |i, k| gamma.get(i, k) / spec.r(i));
    let mut grad = b.abs();
    for f in [&vel.ur, &vel.uz, &utheta] {
        for i in 0..spec.nr {
            for k in 0..spec.nz {
                grad = grad.max(dr2(f, i, k).abs()).max(dz2(f, i, k).abs());
            }
        }
    }

    Ok(BoundaryTrace {
        t,
        sigma,
        a,
        b,
        c_curv,
        lambda,
        big_a: lambda * a,
        big_b: lambda.sqrt() * b,
        r_ratio,
        grad_u_inf: grad,
    })
}

/// Max of |∂_rΓ / ∂_zΓ| over inner-core nodes {x + |y| ≤ κλ} whose |∂_zΓ|
/// clears the relative floor. Returns None when the core holds no nodes or
/// every core node is under the floor (degenerate denominator everywhere).
pub fn core_anisotropy(gamma: &ScalarField, lambda: f64, kappa: f64) -> Option<f64> {
    let spec = gamma.spec();
    let bound = kappa * lambda;
    let mut core: Vec<(usize, usize, f64)> = Vec::new();
    let mut zmax = 0.0_f64;
    for i in (0..spec.nr).rev() {
        if spec.x(i) > bound {
            break;
        }
        for k in 0..spec.nz {
            let y = spec.z(k);
            // Periodic wrap is irrelevant at core scales (κλ ≪ period).
            if spec.x(i) + y.abs() <= bound {
                let dzg = dz4(gamma, i, k);
                zmax = zmax.max(dzg.abs());
                core.push((i, k, dzg));
            }
        }
    }
    if core.is_empty() || zmax == 0.0 {
        return None;
    }
    let floor = ANISOTROPY_FLOOR * zmax;
    let mut ratio: Option<f64> = None;
    for (i, k, dzg) in core {
        if dzg.abs() > floor {
            let drg = dr2(gamma, i, k);
            let r = (drg / dzg).abs();
            ratio = Some(ratio.map_or(r, |m: f64| m.max(r)));
        }
    }
    ratio
}

/// Swirl-curvature ratio Q = Γ_*·c / b² for the non-exact-odd extension with
/// wall swirl constant Γ_*. In the exact-odd class Γ_* = 0 and Q ≡ 0; a
/// vanishing b with nonzero Γ_* has no finite Q and returns None.
pub fn swirl_curvature_q(trace: &BoundaryTrace, gamma_star: f64) -> Option<f64> {
    if gamma_star == 0.0 {
        return Some(0.0);
    }
    if trace.b == 0.0 {
        return None;
    }
    Some(gamma_star * trace.c_curv / (trace.b * trace.b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, odd_project, GridSpec, Parity, ScalarField};

    fn vel_zero(spec: GridSpec) -> Velocity {
        Velocity {
            ur: ScalarField::zeros(spec),
            uz: ScalarField::zeros(spec),
        }
    }

    #[test]
    fn linear_fields_reproduce_coefficients() {
        let spec = make_grid(32, 64, 2.0).unwrap();
        let b0 = 2.5;
        let a0 = -1.25;
        // Truncate to a neighborhood of z = 0 so periodicity is undisturbed;
        // the wall stencil only sees |z| ≤ 2Δz anyway.
        let window = |z: f64| if z.abs() < 0.49 { 1.0 } else { 0.0 };
        let gamma = ScalarField::from_fn_parity(spec, Parity::Odd, |_, z| b0 * z * window(z));
        let g = ScalarField::from_fn_parity(spec, Parity::Odd, |_, z| a0 * z * window(z));
        let tr = boundary_traces(&gamma, &g, &vel_zero(spec), 0.25, 0.0).unwrap();
        assert!((tr.b - b0).abs() < 1e-12, "b = {}", tr.b);
        assert!((tr.a - a0).abs() < 1e-12, "a = {}", tr.a);
        assert!(tr.c_curv.abs() < 1e-11, "c = {}", tr.c_curv);
        // Normalized pair stored exactly as the products.
        assert_eq!(tr.big_a, 0.25 * tr.a);
        assert_eq!(tr.big_b, 0.25_f64.sqrt() * tr.b);
        // Γ is z-only: no radial dependence, zero anisotropy.
        assert_eq!(tr.r_ratio, 0.0);
    }

    #[test]
    fn sigma_from_linear_wall_profile() {
        let spec = make_grid(32, 64, 2.0).unwrap();
        let sigma0 = 0.7;
        let window = |z: f64| if z.abs() < 0.49 { 1.0 } else { 0.0 };
        let vel = Velocity {
            ur: ScalarField::zeros(spec),
            uz: ScalarField::from_fn(spec, |_, z| -sigma0 * z * window(z)),
        };
        let zero = ScalarField::zeros(spec);
        let tr = boundary_traces(&zero, &zero, &vel, 1.0, 0.0).unwrap();
        assert!((tr.sigma - sigma0).abs() < 1e-12, "sigma = {}", tr.sigma);
    }

    #[test]
    fn quadratic_curvature_recovered() {
        let spec = make_grid(32, 128, 2.0).unwrap();
        let (b0, c0) = (1.5, -3.0);
        let window = |z: f64| if z.abs() < 0.49 { 1.0 } else { 0.0 };
        let gamma =
            ScalarField::from_fn(spec, |_, z| (b0 * z + 0.5 * c0 * z * z) * window(z));
        let zero = ScalarField::zeros(spec);
        let tr = boundary_traces(&gamma, &zero, &vel_zero(spec), 1.0, 0.0).unwrap();
        // Fourth-order stencils are exact on quadratics.
        assert!((tr.b - b0).abs() < 1e-12);
        assert!((tr.c_curv - c0).abs() < 1e-10, "c = {}", tr.c_curv);
    }

    #[test]
    fn quartic_profile_exact_and_quintic_close() {
        let spec = make_grid(16, 64, 2.0).unwrap();
        let window = |z: f64| if z.abs() < 0.49 { 1.0 } else { 0.0 };
        // Degree-4: within the exactness range of the stencil.
        let g4 = ScalarField::from_fn(spec, |_, z| (z + z.powi(4)) * window(z));
        let zero = ScalarField::zeros(spec);
        let tr = boundary_traces(&g4, &zero, &vel_zero(spec), 1.0, 0.0).unwrap();
        assert!((tr.b - 1.0).abs() < 1e-11, "quartic slope {}", tr.b);
        // Degree-5 contributes O(h⁴) only.
        let g5 = ScalarField::from_fn(spec, |_, z| (z + z.powi(5)) * window(z));
        let tr5 = boundary_traces(&g5, &zero, &vel_zero(spec), 1.0, 0.0).unwrap();
        let h = spec.dz();
        assert!(
            (tr5.b - 1.0).abs() < 10.0 * h.powi(4),
            "quintic slope err {}",
            (tr5.b - 1.0).abs()
        );
    }

    #[test]
    fn odd_projection_zeroes_wall_value() {
        let spec = make_grid(16, 32, 2.0).unwrap();
        let f = odd_project(&ScalarField::from_fn(spec, |r, z| r + z + z * z));
        assert_eq!(f.get(spec.wall(), spec.z_zero()), 0.0);
    }

    #[test]
    fn anisotropy_sees_radial_dependence() {
        let spec = make_grid(256, 256, 1.0).unwrap();
        let eps = 0.03;
        // Γ = b₀z(1 + ε(1−r)): ∂_rΓ/∂_zΓ = −εz·b₀.../(b₀(1+ε(1−r))) ≈ ε·x-ish;
        // on the core x+|y| ≤ κλ the ratio is ≤ ε·κλ·O(1)… use a field with
        // uniform ratio instead: Γ = b₀(z + εx·z)? ∂_x = εz, ∂_z = b₀(1+εx).
        // Simplest exact check: Γ = z + ε(1−r): ∂_rΓ = −ε, ∂_zΓ = 1 → ratio ε.
        let gamma = ScalarField::from_fn(spec, |r, z| z + eps * (1.0 - r));
        let got = core_anisotropy(&gamma, 0.2, 0.5).unwrap();
        assert!((got - eps).abs() < 1e-10, "ratio {got} vs {eps}");
    }

    #[test]
    fn grad_u_dominates_wall_slope() {
        let spec = make_grid(32, 64, 2.0).unwrap();
        let gamma = ScalarField::from_fn(spec, |r, z| 3.0 * r * r * (std::f64::consts::PI * z).sin());
        let zero = ScalarField::zeros(spec);
        let tr = boundary_traces(&gamma, &zero, &vel_zero(spec), 1.0, 0.0).unwrap();
        assert!(tr.grad_u_inf >= tr.b.abs());
        assert!(tr.grad_u_inf > 0.0);
    }

    #[test]
    fn bad_lambda_rejected() {
        let spec = make_grid(16, 16, 1.0).unwrap();
        let zero = ScalarField::zeros(spec);
        let v = vel_zero(spec);
        assert!(boundary_traces(&zero, &zero, &v, 0.0, 0.0).is_err());
        assert!(boundary_traces(&zero, &zero, &v, -1.0, 0.0).is_err());
    }

    #[test]
    fn q_ratio_branches() {
        let spec = make_grid(16, 32, 2.0).unwrap();
        let zero = ScalarField::zeros(spec);
        let tr = boundary_traces(&zero, &zero, &vel_zero(spec), 1.0, 0.0).unwrap();
        assert_eq!(swirl_curvature_q(&tr, 0.0), Some(0.0));
        assert_eq!(swirl_curvature_q(&tr, 1.0), None); // b = 0, no finite Q
    }
}
