//! Closed-form kernels for the side-wall analysis in flattened coordinates
//! x = 1 − r (distance into the fluid), y = z.
//!
//! The model strain kernel is K₀(x, y) = xy/(x² + y²)², the leading-order
//! influence of interior vorticity on the wall strain. Its companion objects:
//!
//! * the five-dimensional half-space Green function (image construction,
//!   normalization 1/(8π²)),
//! * the mixed wall kernel ∂ₓ∂_y of that Green function at the wall corner,
//!   amplitude C₅ = 15/(4π²),
//! * the transverse reduction ∫(s² + |η|²)^{−7/2} dη = (8π/15) s⁻⁴, which
//!   collapses the mixed kernel onto C₀·K₀ with C₀ = C₅ · 8π/15 = 2/π,
//! * the interior image-pair kernel used when the observation point sits off
//!   the corner, and its odd-in-y symmetrization.
//!
//! All constants are pinned here once and consumed everywhere else.

/// Normalization of the five-dimensional free-space Green function: 1/(8π²).
pub const GREEN_NORM: f64 = 1.0 / (8.0 * std::f64::consts::PI * std::f64::consts::PI);

/// Amplitude of the mixed wall kernel before transverse reduction:
/// C₅ = 30 · GREEN_NORM = 15/(4π²).
pub const C5_MIXED: f64 = 30.0 * GREEN_NORM;

/// Transverse reduction constant ∫_{ℝ³} (1 + |η|²)^{−7/2} dη = 8π/15.
pub const ETA_REDUCTION: f64 = 8.0 * std::f64::consts::PI / 15.0;

/// Effective reduced wall-kernel constant C₀ = C₅ · 8π/15 = 2/π.
pub const C0_EFFECTIVE: f64 = 2.0 / std::f64::consts::PI;

/// Validated side-wall evaluation point in flattened coordinates
/// x = 1 − r ≥ 0 (into the fluid), y = z, away from the corner singularity.
///
/// The raw `f64` kernel routines below are the computational hot path; this
/// type is the checked front door for callers holding unvalidated
/// coordinates (the CLI, external data).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    x: f64,
    y: f64,
}

impl KernelPoint {
    /// Validates a wall-plane point: coordinates finite, x ≥ 0, and not the
    /// corner (0, 0) where the kernel is singular. Wall points (x = 0,
    /// y ≠ 0) are allowed and evaluate to zero.
    pub fn new(x: f64, y: f64) -> crate::Result<Self> {
        if !(x.is_finite() && y.is_finite()) {
            return Err(crate::Error::InvalidParameter(format!(
                "kernel point ({x}, {y}) has non-finite coordinates"
            )));
        }
        if x < 0.0 {
            return Err(crate::Error::InvalidParameter(format!(
                "kernel point x = {x} lies outside the fluid (x ≥ 0 required)"
            )));
        }
        if x == 0.0 && y == 0.0 {
            return Err(crate::Error::Singular("kernel singular at origin".into()));
        }
        Ok(Self { x, y })
    }

    /// Wall-normal coordinate x = 1 − r.
    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    /// Axial coordinate y = z.
    #[inline]
    pub fn y(&self) -> f64 {
        self.y
    }

    /// K₀ at this point.
    #[inline]
    pub fn eval(&self) -> f64 {
        k0_eval(self.x, self.y)
    }

    /// Transport-identity residual at this point (see
    /// [`k0_transport_residual`]).
    #[inline]
    pub fn transport_residual(&self, sigma: f64) -> f64 {
        k0_transport_residual(self.x, self.y, sigma)
    }
}

/// Validated point of the five-dimensional lifted half-space: wall-normal
/// ξ ≥ 0, axial ζ, and a transverse tangential 3-vector η.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedPoint5 {
    xi: f64,
    zeta: f64,
    eta: [f64; 3],
}

impl LiftedPoint5 {
    /// Validates finite components and ξ ≥ 0 (closed half-space).
    pub fn new(xi: f64, zeta: f64, eta: [f64; 3]) -> crate::Result<Self> {
        if !(xi.is_finite() && zeta.is_finite() && eta.iter().all(|c| c.is_finite())) {
            return Err(crate::Error::InvalidParameter(format!(
                "lifted point ({xi}, {zeta}, {eta:?}) has non-finite components"
            )));
        }
        if xi < 0.0 {
            return Err(crate::Error::InvalidParameter(format!(
                "lifted point xi = {xi} lies outside the half-space (xi ≥ 0 required)"
            )));
        }
        Ok(Self { xi, zeta, eta })
    }

    /// Wall-normal coordinate ξ.
    #[inline]
    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// Axial coordinate ζ.
    #[inline]
    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    /// Transverse tangential coordinates η ∈ ℝ³.
    #[inline]
    pub fn eta(&self) -> [f64; 3] {
        self.eta
    }

    /// Dirichlet half-space Green function between this point and `other`;
    /// the transverse offset enters only through its magnitude. Errors on
    /// coincident points, where the fundamental solution is singular.
    pub fn green(&self, other: &LiftedPoint5) -> crate::Result<f64> {
        if self == other {
            return Err(crate::Error::Singular(
                "Green function singular at coincident points".into(),
            ));
        }
        let eta_off = ((self.eta[0] - other.eta[0]).powi(2)
            + (self.eta[1] - other.eta[1]).powi(2)
            + (self.eta[2] - other.eta[2]).powi(2))
        .sqrt();
        Ok(halfspace_green(
            self.xi, self.zeta, other.xi, other.zeta, eta_off,
        ))
    }

    /// Mixed wall kernel of this source point observed at the wall corner.
    /// Errors when the source itself sits on the wall ξ = 0, where the
    /// boundary derivative that produced the kernel is not defined.
    pub fn mixed_kernel(&self) -> crate::Result<f64> {
        if self.xi == 0.0 {
            return Err(crate::Error::Singular(
                "mixed kernel undefined for a boundary source (xi = 0)".into(),
            ));
        }
        let eta_mag =
            (self.eta[0] * self.eta[0] + self.eta[1] * self.eta[1] + self.eta[2] * self.eta[2])
                .sqrt();
        Ok(wall_mixed_kernel(self.xi, self.zeta, eta_mag))
    }
}

/// Model strain kernel K₀(x, y) = xy/(x² + y²)².
#[inline]
pub fn k0_eval(x: f64, y: f64) -> f64 {
    let s = x * x + y * y;
    x * y / (s * s)
}

/// Gradient of K₀: (∂ₓK₀, ∂_yK₀) = (y(y² − 3x²), x(x² − 3y²)) / (x² + y²)³.
#[inline]
pub fn k0_grad(x: f64, y: f64) -> (f64, f64) {
    let s = x * x + y * y;
    let s3 = s * s * s;
    (y * (y * y - 3.0 * x * x) / s3, x * (x * x - 3.0 * y * y) / s3)
}

/// Multiplier in the transport identity for the pure strain field
/// V_σ = (σx, −σy):  V_σ·∇K₀ = σ · factor(x, y) · K₀ with
/// factor = −4(x² − y²)/(x² + y²).
#[inline]
pub fn strain_transport_factor(x: f64, y: f64) -> f64 {
    -4.0 * (x * x - y * y) / (x * x + y * y)
}

/// Residual of the transport identity at one point:
/// V_σ·∇K₀ − σ·factor·K₀. Identically zero in exact arithmetic; exposed so
/// tests and diagnostics can confirm the cancellation in floating point.
#[inline]
pub fn k0_transport_residual(x: f64, y: f64, sigma: f64) -> f64 {
    let (gx, gy) = k0_grad(x, y);
    sigma * x * gx - sigma * y * gy - sigma * strain_transport_factor(x, y) * k0_eval(x, y)
}

/// Five-dimensional half-space Green function between the observation point
/// (x, y) and a source at (ξ, ζ) with transverse offset magnitude |η| = eta,
/// Dirichlet on the wall x = 0, via the image source at (−ξ, ζ):
/// G_D = c₅ (d₋⁻³ − d₊⁻³).
#[inline]
pub fn halfspace_green(x: f64, y: f64, xi: f64, zeta: f64, eta: f64) -> f64 {
    let dm2 = (x - xi) * (x - xi) + (y - zeta) * (y - zeta) + eta * eta;
    let dp2 = (x + xi) * (x + xi) + (y - zeta) * (y - zeta) + eta * eta;
    GREEN_NORM * (dm2.powf(-1.5) - dp2.powf(-1.5))
}

/// Mixed wall kernel ∂ₓ∂_y G_D evaluated at the wall corner (x, y) = (0, 0):
/// C₅ · ξζ · (ξ² + ζ² + η²)^{−7/2}.
#[inline]
pub fn wall_mixed_kernel(xi: f64, zeta: f64, eta: f64) -> f64 {
    let rho2 = xi * xi + zeta * zeta + eta * eta;
    C5_MIXED * xi * zeta * rho2.powf(-3.5)
}

/// Transversely reduced wall kernel at the corner: ∫ wall_mixed dη
/// = C₀ · K₀(ξ, ζ).
#[inline]
pub fn wall_kernel_reduced(xi: f64, zeta: f64) -> f64 {
    C0_EFFECTIVE * k0_eval(xi, zeta)
}

/// Reduced wall kernel observed at wall height y, acting on a source density
/// that is odd in ζ and represented by its ζ > 0 half: the mirror source at
/// (ξ, −ζ) carries opposite sign, so
/// K(y; ξ, ζ) = C₀ [ K₀(ξ, ζ − y) + K₀(ξ, ζ + y) ].
/// At y = 0 this is 2·C₀·K₀(ξ, ζ) — the factor-of-two odd doubling.
#[inline]
pub fn wall_kernel_shifted_odd(y: f64, xi: f64, zeta: f64) -> f64 {
    C0_EFFECTIVE * (k0_eval(xi, zeta - y) + k0_eval(xi, zeta + y))
}

/// Transversely reduced interior strain kernel between an interior
/// observation point (x, y) and a source at (ξ, ζ), image pair included:
/// (1/π) [ (x−ξ)(y−ζ)/ρ₋⁴ − (x+ξ)(y−ζ)/ρ₊⁴ ].
/// As (x, y) → (0, 0) it tends to C₀·K₀(ξ, ζ).
#[inline]
pub fn interior_pair_kernel(x: f64, y: f64, xi: f64, zeta: f64) -> f64 {
    let rm2 = (x - xi) * (x - xi) + (y - zeta) * (y - zeta);
    let rp2 = (x + xi) * (x + xi) + (y - zeta) * (y - zeta);
    ((x - xi) * (y - zeta) / (rm2 * rm2) - (x + xi) * (y - zeta) / (rp2 * rp2))
        / std::f64::consts::PI
}

/// Odd-in-ζ symmetrization of [`interior_pair_kernel`] for sources given on
/// the ζ > 0 half: K(X; ξ, ζ) − K(X; ξ, −ζ). At the corner this is
/// 2·C₀·K₀(ξ, ζ).
#[inline]
pub fn interior_pair_kernel_odd(x: f64, y: f64, xi: f64, zeta: f64) -> f64 {
    interior_pair_kernel(x, y, xi, zeta) - interior_pair_kernel(x, y, xi, -zeta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate_1d, integrate_2d};
    use proptest::prelude::*;

    #[test]
    fn pinned_constants() {
        assert!((GREEN_NORM - 0.012665147955292222).abs() < 1e-16);
        assert!((C5_MIXED - 0.37995443865876666).abs() < 1e-15);
        assert!((ETA_REDUCTION - 1.67551608191456).abs() < 1e-13);
        assert!((C0_EFFECTIVE - 0.6366197723675814).abs() < 1e-15);
        // C₀ really is the product C₅ · (8π/15).
        assert!((C5_MIXED * ETA_REDUCTION - C0_EFFECTIVE).abs() < 1e-15);
    }

    #[test]
    fn typed_points_validate_and_delegate() {
        // Corner rejected with the pinned message; wall points admitted.
        let err = KernelPoint::new(0.0, 0.0).unwrap_err().to_string();
        assert!(err.contains("kernel singular at origin"), "message: {err}");
        assert!(KernelPoint::new(-0.1, 1.0).is_err());
        assert!(KernelPoint::new(f64::NAN, 1.0).is_err());
        assert_eq!(KernelPoint::new(0.0, 0.5).unwrap().eval(), 0.0);

        let p = KernelPoint::new(1.0, 1.0).unwrap();
        assert_eq!(p.eval(), 0.25);
        assert_eq!(KernelPoint::new(1.0, -1.0).unwrap().eval(), -0.25);
        assert!(p.transport_residual(2.0).abs() < 1e-14);

        // Lifted points: half-space validation, coincidence, wall vanishing,
        // symmetry, and the boundary-source rejection for the mixed kernel.
        assert!(LiftedPoint5::new(-1e-9, 0.0, [0.0; 3]).is_err());
        let a = LiftedPoint5::new(0.7, 0.3, [0.1, -0.2, 0.4]).unwrap();
        let b = LiftedPoint5::new(1.1, -0.5, [0.0, 0.6, -0.3]).unwrap();
        assert!(a.green(&a).is_err());
        let gab = a.green(&b).unwrap();
        let gba = b.green(&a).unwrap();
        assert!((gab - gba).abs() <= 1e-15 * gab.abs());
        let wall = LiftedPoint5::new(0.0, 0.2, [0.3, 0.0, 0.0]).unwrap();
        assert!(wall.green(&b).unwrap().abs() < 1e-16);
        assert!(wall.mixed_kernel().is_err());
        let m = LiftedPoint5::new(1.0, 1.0, [0.0; 3]).unwrap();
        assert!((m.mixed_kernel().unwrap() - C5_MIXED * 2.0f64.powf(-3.5)).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let pts: [(f64, f64); 4] = [(0.3, 0.7), (1.2, -0.4), (0.05, 0.05), (2.0, 3.0)];
        for &(x, y) in &pts {
            let h = 1e-6 * (x.abs() + y.abs());
            let (gx, gy) = k0_grad(x, y);
            let fdx = (k0_eval(x + h, y) - k0_eval(x - h, y)) / (2.0 * h);
            let fdy = (k0_eval(x, y + h) - k0_eval(x, y - h)) / (2.0 * h);
            let scale = gx.abs().max(gy.abs()).max(1.0);
            assert!((gx - fdx).abs() / scale < 1e-7, "at ({x},{y})");
            assert!((gy - fdy).abs() / scale < 1e-7, "at ({x},{y})");
        }
    }

    #[test]
    fn transport_identity_is_pointwise_exact() {
        // The strain field V_σ = (σx, −σy) transports K₀ onto a multiple of
        // itself; the residual should vanish to rounding.
        let pts = [(0.5, 0.5), (0.1, 0.9), (1.5, 0.2), (0.01, 0.03), (3.0, -2.0)];
        for &(x, y) in &pts {
            let scale = (k0_eval(x, y).abs() / (x * x + y * y).sqrt()).max(1e-300);
            let res = k0_transport_residual(x, y, 1.7);
            assert!(
                res.abs() / scale < 1e-12,
                "residual {res:.3e} at ({x},{y}), scale {scale:.3e}"
            );
        }
    }

    proptest! {
        #[test]
        fn transport_identity_random(x in 1e-3f64..3.0, y in 1e-3f64..3.0, s in -5.0f64..5.0) {
            let scale = (k0_eval(x, y).abs() / (x*x + y*y).sqrt()).max(1e-300) * s.abs().max(1.0);
            let res = k0_transport_residual(x, y, s);
            prop_assert!(res.abs() / scale < 1e-10);
        }

        #[test]
        fn k0_scale_invariance(x in 0.01f64..2.0, y in 0.01f64..2.0, lam in 0.1f64..10.0) {
            // K₀(λx, λy) = λ⁻² K₀(x, y): degree −2 homogeneity.
            let lhs = k0_eval(lam * x, lam * y);
            let rhs = k0_eval(x, y) / (lam * lam);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-30));
        }
    }

    #[test]
    fn mixed_kernel_matches_green_function_derivative() {
        // Central mixed finite difference of G_D about the corner.
        for &(xi, zeta, eta) in &[(1.0, 1.0, 0.0), (0.7, 0.3, 0.5), (0.2, 1.5, 1.0)] {
            let h = 1e-4;
            let fd = (halfspace_green(h, h, xi, zeta, eta)
                - halfspace_green(h, -h, xi, zeta, eta)
                - halfspace_green(-h, h, xi, zeta, eta)
                + halfspace_green(-h, -h, xi, zeta, eta))
                / (4.0 * h * h);
            let exact = wall_mixed_kernel(xi, zeta, eta);
            assert!(
                (fd - exact).abs() < 1e-5 * exact.abs().max(1e-3),
                "ξ={xi} ζ={zeta} η={eta}: fd {fd}, exact {exact}"
            );
        }
    }

    #[test]
    fn mixed_kernel_pinned_value() {
        // At (ξ, ζ, η) = (1, 1, 0): C₅ · 2^{−7/2}.
        let v = wall_mixed_kernel(1.0, 1.0, 0.0);
        assert!((v - 0.0335835450147).abs() < 1e-13, "got {v}");
    }

    #[test]
    fn eta_reduction_by_quadrature() {
        // ∫_{ℝ³}(s²+|η|²)^{−7/2} dη = 4π ∫₀^∞ t²(s²+t²)^{−7/2} dt
        //                            = (8π/15) s⁻⁴.
        for &s in &[0.5, 1.0, 2.0] {
            let cut = 50.0 * s;
            let body = integrate_1d(
                |t| t * t * (s * s + t * t).powf(-3.5),
                0.0,
                cut,
                1e-12,
            )
            .unwrap();
            // Tail beyond the cutoff: integrand < t⁻⁵, so tail < cut⁻⁴/4.
            let full = 4.0 * std::f64::consts::PI * body;
            let expect = ETA_REDUCTION / s.powi(4);
            let tail_bound = std::f64::consts::PI * cut.powi(-4);
            assert!(
                (full - expect).abs() < 1e-8 * expect + tail_bound,
                "s={s}: got {full}, want {expect}"
            );
        }
    }

    #[test]
    fn reduced_kernel_is_eta_integral_of_mixed_kernel() {
        for &(xi, zeta) in &[(1.0f64, 1.0f64), (0.5, 1.5), (2.0, 0.3)] {
            let s2 = xi * xi + zeta * zeta;
            let cut = 60.0 * s2.sqrt();
            let reduced = 4.0
                * std::f64::consts::PI
                * integrate_1d(
                    |t| t * t * wall_mixed_kernel(xi, zeta, t.hypot(0.0)),
                    0.0,
                    cut,
                    1e-12,
                )
                .unwrap();
            let expect = wall_kernel_reduced(xi, zeta);
            assert!(
                (reduced - expect).abs() < 1e-6 * expect.abs(),
                "ξ={xi} ζ={zeta}: got {reduced}, want {expect}"
            );
        }
    }

    #[test]
    fn unit_square_moment_is_pi_over_eight() {
        // ∬_{(0,1)²} K₀(x, y) · y dxdy = π/8, the model slice mass of a
        // profile with unit wall slope.
        let v = integrate_2d(|x, y| k0_eval(x, y) * y, 1e-10, 1.0, 1e-10, 1.0, 1e-8).unwrap();
        assert!(
            (v - std::f64::consts::FRAC_PI_8).abs() < 2e-5,
            "got {v}, want {}",
            std::f64::consts::FRAC_PI_8
        );
    }

    #[test]
    fn shifted_odd_kernel_limits() {
        // At the corner the odd doubling gives exactly 2C₀K₀ …
        for &(xi, zeta) in &[(0.3, 0.6), (1.0, 0.1)] {
            let at0 = wall_kernel_shifted_odd(0.0, xi, zeta);
            assert!((at0 - 2.0 * C0_EFFECTIVE * k0_eval(xi, zeta)).abs() < 1e-14);
            // … and the interior pair kernel agrees in the corner limit.
            let corner = interior_pair_kernel_odd(1e-9, 0.0, xi, zeta);
            assert!(
                (corner - at0).abs() < 1e-6 * at0.abs(),
                "corner {corner}, wall {at0}"
            );
        }
    }

    #[test]
    fn pair_kernel_vanishes_on_wall_plane() {
        // Dirichlet image construction: the Green function itself vanishes
        // at x = 0, and the pair kernel stays finite and odd-compatible.
        for &(y, xi, zeta) in &[(0.4, 0.8, 0.2), (-0.3, 0.5, 1.0)] {
            let g = halfspace_green(0.0, y, xi, zeta, 0.3);
            assert!(g.abs() < 1e-15, "G_D on wall = {g}");
        }
    }
}
