//! Shifted cylindrical grids and scalar fields on the meridional section.
//!
//! The section Ω = {0 < r ≤ 1, z ∈ 𝕋} is sampled on a tensor grid with two
//! deliberate asymmetries:
//!
//! * **Radial nodes are half-cell shifted**: r_i = (i + 1/2)·Δr with
//!   Δr = 2/(2·nr − 1), so r = 0 is never sampled (the 3/r coefficient of the
//!   five-dimensional Laplacian stays finite everywhere) while the side wall
//!   r = 1 lands exactly on the last node, where all boundary traces live.
//!   The ghost node below the first one sits at −Δr/2; even reflection across
//!   r = 0 is exact for lifted radial profiles and realizes the zero-flux
//!   axis condition.
//! * **Axial nodes are mirror-symmetric**: z_k = −L/2 + k·Δz with Δz = L/nz
//!   and nz even, so z = 0 is on the grid (index nz/2) and z ↦ −z maps nodes
//!   to nodes. Exact-odd symmetry is therefore an index permutation, not an
//!   interpolation.
//!
//! Fields carry a parity tag. The odd projection and the weighted volume
//! integral ∫ f r³ dr dz respect the mirror structure exactly, so odd fields
//! integrate to zero at round-off level.

use crate::error::Error;
use crate::Result;

/// Parity of a scalar field under the axial mirror z ↦ −z.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// f(r, −z) = −f(r, z); vanishes on the mirror rows z = 0 and z = −L/2.
    Odd,
    /// f(r, −z) = f(r, z).
    Even,
    /// No symmetry claimed.
    None,
}

/// Geometry of the shifted tensor grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Number of radial nodes; the last one sits exactly on the wall r = 1.
    pub nr: usize,
    /// Number of axial nodes (even); node nz/2 sits exactly on z = 0.
    pub nz: usize,
    /// Axial period L.
    pub z_period: f64,
}

/// Builds a grid, enforcing the shape invariants.
///
/// Requires nr ≥ 8 and nz ≥ 8 with nz even, and a positive period. These
/// floors guarantee that every wall stencil used by the trace and recovery
/// operators fits on the grid.
pub fn make_grid(nr: usize, nz: usize, z_period: f64) -> Result<GridSpec> {
    if nr < 8 {
        return Err(Error::InvalidGrid(format!("nr = {nr} < 8")));
    }
    if nz < 8 {
        return Err(Error::InvalidGrid(format!("nz = {nz} < 8")));
    }
    if nz % 2 != 0 {
        return Err(Error::InvalidGrid(format!(
            "nz = {nz} must be even so that z = 0 and the mirror are on-grid"
        )));
    }
    if !(z_period.is_finite() && z_period > 0.0) {
        return Err(Error::InvalidGrid(format!("z_period = {z_period} must be positive")));
    }
    Ok(GridSpec { nr, nz, z_period })
}

impl GridSpec {
    /// Radial spacing Δr = 2/(2·nr − 1).
    #[inline]
    pub fn dr(&self) -> f64 {
        2.0 / (2.0 * self.nr as f64 - 1.0)
    }

    /// Axial spacing Δz = L/nz.
    #[inline]
    pub fn dz(&self) -> f64 {
        self.z_period / self.nz as f64
    }

    /// Radial coordinate of node i: (2i + 1)/(2·nr − 1). Node nr − 1 is
    /// exactly 1.0 (numerator equals denominator).
    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        (2 * i + 1) as f64 / (2 * self.nr - 1) as f64
    }

    /// Wall-distance coordinate x = 1 − r of node i.
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        1.0 - self.r(i)
    }

    /// Axial coordinate of node k: −L/2 + k·Δz.
    #[inline]
    pub fn z(&self, k: usize) -> f64 {
        -0.5 * self.z_period + k as f64 * self.dz()
    }

    /// Index of the wall node r = 1.
    #[inline]
    pub fn wall(&self) -> usize {
        self.nr - 1
    }

    /// Index of the node z = 0.
    #[inline]
    pub fn z_zero(&self) -> usize {
        self.nz / 2
    }

    /// Index of the mirror node: z(mirror(k)) = −z(k) modulo the period.
    #[inline]
    pub fn z_mirror(&self, k: usize) -> usize {
        if k == 0 {
            0
        } else {
            self.nz - k
        }
    }

    /// Periodic axial index wrap.
    #[inline]
    pub fn z_wrap(&self, k: isize) -> usize {
        k.rem_euclid(self.nz as isize) as usize
    }

    /// Total number of nodes.
    #[inline]
    pub fn len(&self) -> usize {
        self.nr * self.nz
    }

    /// True when the grid holds no nodes (never, for a validated grid).
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A point in flattened side-wall coordinates x = 1 − r, y = z, with y
/// wrapped into the symmetric fundamental interval [−L/2, L/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatPoint {
    pub x: f64,
    pub y: f64,
}

impl FlatPoint {
    /// Flattens a cylinder point, wrapping the axial coordinate.
    pub fn from_cylinder(r: f64, z: f64, z_period: f64) -> Self {
        let half = 0.5 * z_period;
        let mut y = (z + half).rem_euclid(z_period) - half;
        // rem_euclid can return exactly z_period for values just below the
        // seam after rounding; fold that back.
        if y >= half {
            y -= z_period;
        }
        FlatPoint { x: 1.0 - r, y }
    }
}

/// A scalar field sampled on a [`GridSpec`], stored row-major with the radial
/// index slow: value(i, k) = data[i·nz + k].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    parity: Parity,
    data: Vec<f64>,
}

impl ScalarField {
    /// All-zero field.
    pub fn zeros(spec: GridSpec) -> Self {
        ScalarField { spec, parity: Parity::None, data: vec![0.0; spec.len()] }
    }

    /// Samples f(r, z) at every node.
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(spec.len());
        for i in 0..spec.nr {
            let r = spec.r(i);
            for k in 0..spec.nz {
                data.push(f(r, spec.z(k)));
            }
        }
        ScalarField { spec, parity: Parity::None, data }
    }

    /// Samples f(r, z) at every node and tags the stated parity. The caller
    /// asserts the symmetry; constructors that cannot are expected to use
    /// [`odd_project`] instead of a bare tag.
    pub fn from_fn_parity(spec: GridSpec, parity: Parity, f: impl Fn(f64, f64) -> f64) -> Self {
        ScalarField::from_fn(spec, f).with_parity(parity)
    }

    /// Samples f(i, k) by node index and tags the stated parity.
    pub fn from_fn_indexed(
        spec: GridSpec,
        parity: Parity,
        f: impl Fn(usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(spec.len());
        for i in 0..spec.nr {
            for k in 0..spec.nz {
                data.push(f(i, k));
            }
        }
        ScalarField { spec, parity, data }
    }

    /// Rebuilds a field from raw row-major values.
    pub fn from_vec(spec: GridSpec, data: Vec<f64>, parity: Parity) -> Result<Self> {
        if data.len() != spec.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}×{} grid",
                data.len(),
                spec.nr,
                spec.nz
            )));
        }
        Ok(ScalarField { spec, parity, data })
    }

    #[inline]
    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    #[inline]
    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// Overrides the parity tag (used by constructors that know the symmetry
    /// of what they sampled).
    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = parity;
        self
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.spec.nz + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, k: usize, v: f64) {
        self.data[i * self.spec.nz + k] = v;
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Borrow of one radial row (all z at fixed r-index).
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.spec.nz..(i + 1) * self.spec.nz]
    }

    /// Maximum absolute value over all nodes.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// True when every node is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Sup-norm of the even part: max |f(i,k) + f(i, mirror k)| / 2. Zero for
    /// an exactly odd field; used as the parity-drift diagnostic.
    pub fn even_part_max(&self) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..self.spec.nr {
            for k in 0..self.spec.nz {
                let km = self.spec.z_mirror(k);
                m = m.max(0.5 * (self.get(i, k) + self.get(i, km)).abs());
            }
        }
        m
    }

    /// In-place linear combination self ← self + c·other.
    pub fn axpy(&mut self, c: f64, other: &ScalarField) -> Result<()> {
        if other.spec != self.spec {
            return Err(Error::GridMismatch("axpy over different grids".into()));
        }
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += c * b;
        }
        self.parity = combine_parity(self.parity, other.parity);
        Ok(())
    }

    /// In-place scaling self ← c·self.
    pub fn scale(&mut self, c: f64) {
        for a in self.data.iter_mut() {
            *a *= c;
        }
    }
}

fn combine_parity(a: Parity, b: Parity) -> Parity {
    if a == b {
        a
    } else {
        Parity::None
    }
}

/// Exact odd projection under the axial mirror:
/// (P f)(i, k) = (f(i, k) − f(i, mirror k))/2.
///
/// Idempotent to round-off, annihilates even fields, and forces exact zeros
/// on the two self-mirror rows z = 0 and z = −L/2. The result is tagged
/// [`Parity::Odd`].
pub fn odd_project(f: &ScalarField) -> ScalarField {
    let spec = f.spec();
    let mut out = ScalarField::zeros(spec);
    for i in 0..spec.nr {
        for k in 0..spec.nz {
            let km = spec.z_mirror(k);
            if k == km {
                out.set(i, k, 0.0);
            } else {
                out.set(i, k, 0.5 * (f.get(i, k) - f.get(i, km)));
            }
        }
    }
    out.parity = Parity::Odd;
    out
}

/// Weighted volume integral ∫_Ω f r³ dr dz (the measure that makes the
/// five-dimensional Laplacian self-adjoint).
///
/// Fixed composite rule: trapezoid over the radial nodes [Δr/2, 1] plus the
/// analytic axis correction ∫_0^{Δr/2} f r³ dr ≈ f(r_0)·r_0⁴/4 (the r³
/// weight makes the omitted segment O(Δr⁴)), times the periodic rectangle
/// rule in z, which is spectrally accurate for smooth periodic integrands.
/// Deterministic: fixed summation order, no adaptivity.
pub fn weighted_integral5(f: &ScalarField) -> f64 {
    let spec = f.spec();
    let dr = spec.dr();
    let dz = spec.dz();
    let nr = spec.nr;
    let mut total = 0.0;
    for k in 0..spec.nz {
        let mut radial = 0.0;
        for i in 0..nr {
            let w = if i == 0 || i == nr - 1 { 0.5 * dr } else { dr };
            let r = spec.r(i);
            radial += w * f.get(i, k) * r * r * r;
        }
        // Axis segment [0, r_0] with f frozen at the innermost node.
        let r0 = spec.r(0);
        radial += f.get(0, k) * r0 * r0 * r0 * r0 / 4.0;
        total += radial * dz;
    }
    total
}

/// Bilinear interpolation of a field at an arbitrary point: periodic in z,
/// clamped (constant-extrapolated) radially beyond the outermost node rows.
///
/// Exact on fields linear in (r, z), which is what the mass functionals and
/// the characteristic tracer rely on.
pub fn sample_bilinear(f: &ScalarField, r: f64, z: f64) -> f64 {
    let spec = f.spec();
    let p = (r / spec.dr() - 0.5).clamp(0.0, (spec.nr - 1) as f64);
    let i0 = (p.floor() as usize).min(spec.nr - 2);
    let tr = (p - i0 as f64).clamp(0.0, 1.0);
    let q = (z + 0.5 * spec.z_period) / spec.dz();
    let kf = q.floor();
    let tz = (q - kf).clamp(0.0, 1.0);
    let k0 = spec.z_wrap(kf as isize);
    let k1 = spec.z_wrap(kf as isize + 1);
    let lo = (1.0 - tz) * f.get(i0, k0) + tz * f.get(i0, k1);
    let hi = (1.0 - tz) * f.get(i0 + 1, k0) + tz * f.get(i0 + 1, k1);
    (1.0 - tr) * lo + tr * hi
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(nr: usize, nz: usize) -> GridSpec {
        make_grid(nr, nz, 2.0 * std::f64::consts::PI).unwrap()
    }

    #[test]
    fn bilinear_sampling_exact_on_linear_fields() {
        let spec = grid(32, 64);
        let f = ScalarField::from_fn(spec, |r, z| 2.0 * r - 0.5 * z + 0.25);
        for (r, z) in [
            (0.3, 0.1),
            (0.777, -1.9),
            (spec.r(5), spec.z(9)),
            (1.0, 0.0),
            (0.999, 2.9),
        ] {
            let got = sample_bilinear(&f, r, z);
            assert!(
                (got - (2.0 * r - 0.5 * z + 0.25)).abs() < 1e-12,
                "at ({r}, {z}): {got}"
            );
        }
        // Periodic wrap: z and z + L sample identically.
        let g = ScalarField::from_fn(spec, |r, z| (z * 3.0).sin() * r);
        let l = spec.z_period;
        assert!((sample_bilinear(&g, 0.6, 0.4) - sample_bilinear(&g, 0.6, 0.4 + l)).abs() < 1e-12);
        // Radial clamp: below the innermost row extends constantly.
        assert_eq!(sample_bilinear(&g, 0.0, 0.4), sample_bilinear(&g, spec.r(0), 0.4));
    }

    #[test]
    fn wall_node_is_exactly_one() {
        for nr in [8, 33, 256] {
            let g = grid(nr, 16);
            assert_eq!(g.r(g.wall()), 1.0);
            assert!(g.r(0) > 0.0);
            assert!((g.r(0) - 0.5 * g.dr()).abs() < 1e-15);
        }
    }

    #[test]
    fn z_zero_and_mirror_structure() {
        let g = grid(8, 16);
        assert_eq!(g.z(g.z_zero()), 0.0);
        for k in 0..g.nz {
            let km = g.z_mirror(k);
            let zk = g.z(k);
            let zm = g.z(km);
            // Mirror modulo the period.
            let diff = (zk + zm).rem_euclid(g.z_period);
            let diff = diff.min(g.z_period - diff);
            assert!(diff < 1e-12, "k={k} z={zk} zm={zm}");
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(make_grid(4, 16, 1.0).is_err());
        assert!(make_grid(16, 7, 1.0).is_err());
        assert!(make_grid(16, 6, 1.0).is_err());
        assert!(make_grid(16, 16, 0.0).is_err());
        assert!(make_grid(16, 16, -1.0).is_err());
    }

    #[test]
    fn odd_project_annihilates_even_and_fixes_odd() {
        let g = grid(16, 32);
        let even = ScalarField::from_fn(g, |r, z| r * z.cos());
        let p = odd_project(&even);
        assert!(p.max_abs() < 1e-15);

        let odd = ScalarField::from_fn(g, |r, z| r * z.sin());
        let p = odd_project(&odd);
        let mut dev = 0.0_f64;
        for i in 0..g.nr {
            for k in 0..g.nz {
                dev = dev.max((p.get(i, k) - odd.get(i, k)).abs());
            }
        }
        assert!(dev < 1e-15, "projection moved an exactly odd field by {dev}");
        assert_eq!(p.parity(), Parity::Odd);
        // Self-mirror rows are exactly zero.
        for i in 0..g.nr {
            assert_eq!(p.get(i, g.z_zero()), 0.0);
            assert_eq!(p.get(i, 0), 0.0);
        }
    }

    #[test]
    fn weighted_integral_of_one_and_r() {
        // ∫ 1 · r³ dr dz = 2π/4, ∫ r · r³ dr dz = 2π/5 on period 2π.
        let g = grid(128, 16);
        let one = ScalarField::from_fn(g, |_, _| 1.0);
        let i1 = weighted_integral5(&one);
        let expect1 = 2.0 * std::f64::consts::PI / 4.0;
        assert!(
            (i1 - expect1).abs() / expect1 < 5e-4,
            "∫r³: got {i1}, want {expect1}"
        );

        let fr = ScalarField::from_fn(g, |r, _| r);
        let i2 = weighted_integral5(&fr);
        let expect2 = 2.0 * std::f64::consts::PI / 5.0;
        assert!(
            (i2 - expect2).abs() / expect2 < 5e-4,
            "∫r⁴: got {i2}, want {expect2}"
        );
    }

    #[test]
    fn weighted_integral_kills_odd_fields() {
        let g = grid(32, 64);
        let odd = odd_project(&ScalarField::from_fn(g, |r, z| (1.0 - r) * (3.0 * z).sin() + z));
        let i = weighted_integral5(&odd);
        assert!(i.abs() < 1e-13, "odd integral {i}");
    }

    #[test]
    fn flat_point_wraps() {
        let l = 2.0 * std::f64::consts::PI;
        let p = FlatPoint::from_cylinder(0.9, l * 0.75, l);
        assert!((p.x - 0.1).abs() < 1e-15);
        assert!((p.y - (-0.25 * l)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn odd_project_is_idempotent(seed in 0u64..1000) {
            let g = grid(12, 24);
            let f = ScalarField::from_fn(g, |r, z| {
                // Deterministic pseudo-random smooth-ish field.
                ((seed as f64 + 1.0) * r + z).sin() * (r + 0.3 * z.cos())
            });
            let once = odd_project(&f);
            let twice = odd_project(&once);
            let mut dev = 0.0_f64;
            for (a, b) in once.as_slice().iter().zip(twice.as_slice()) {
                dev = dev.max((a - b).abs());
            }
            prop_assert!(dev <= 1e-15);
        }
    }
}
