//! Finite-difference primitives shared by the elliptic, trace, and dynamics
//! modules, plus the tridiagonal solver behind the per-mode radial solves.
//!
//! Axial derivatives wrap periodically. Radial derivatives are centered in
//! the interior, one-sided (second order) at the wall, and use the even
//! reflection ghost f(−Δr/2) = f(+Δr/2) at the innermost node — exact for
//! fields that lift to regular radial profiles in the five-dimensional view
//! (all evolved quantities here do; radially odd quantities such as u^r are
//! only ever differentiated through the even product r·u^r).

use crate::grid::ScalarField;
use rustfft::num_complex::Complex;

/// Second-order centered axial derivative at node (i, k), periodic wrap.
#[inline]
pub fn dz2(f: &ScalarField, i: usize, k: usize) -> f64 {
    let s = f.spec();
    let kp = s.z_wrap(k as isize + 1);
    let km = s.z_wrap(k as isize - 1);
    (f.get(i, kp) - f.get(i, km)) / (2.0 * s.dz())
}

/// Fourth-order centered axial derivative at node (i, k), periodic wrap.
#[inline]
pub fn dz4(f: &ScalarField, i: usize, k: usize) -> f64 {
    let s = f.spec();
    let kp1 = s.z_wrap(k as isize + 1);
    let km1 = s.z_wrap(k as isize - 1);
    let kp2 = s.z_wrap(k as isize + 2);
    let km2 = s.z_wrap(k as isize - 2);
    (-f.get(i, kp2) + 8.0 * f.get(i, kp1) - 8.0 * f.get(i, km1) + f.get(i, km2))
        / (12.0 * s.dz())
}

/// Second-order centered axial second derivative, periodic wrap.
#[inline]
pub fn dzz2(f: &ScalarField, i: usize, k: usize) -> f64 {
    let s = f.spec();
    let kp = s.z_wrap(k as isize + 1);
    let km = s.z_wrap(k as isize - 1);
    (f.get(i, kp) - 2.0 * f.get(i, k) + f.get(i, km)) / (s.dz() * s.dz())
}

/// Fourth-order centered axial second derivative, periodic wrap.
#[inline]
pub fn dzz4(f: &ScalarField, i: usize, k: usize) -> f64 {
    let s = f.spec();
    let kp1 = s.z_wrap(k as isize + 1);
    let km1 = s.z_wrap(k as isize - 1);
    let kp2 = s.z_wrap(k as isize + 2);
    let km2 = s.z_wrap(k as isize - 2);
    (-f.get(i, kp2) + 16.0 * f.get(i, kp1) - 30.0 * f.get(i, k) + 16.0 * f.get(i, km1)
        - f.get(i, km2))
        / (12.0 * s.dz() * s.dz())
}

/// Second-order radial derivative: centered in the interior, even-reflection
/// ghost at the innermost node, one-sided at the wall.
#[inline]
pub fn dr2(f: &ScalarField, i: usize, k: usize) -> f64 {
    let s = f.spec();
    let dr = s.dr();
    if i == 0 {
        // Ghost f(−Δr/2) = f(+Δr/2): centered difference collapses.
        (f.get(1, k) - f.get(0, k)) / (2.0 * dr)
    } else if i == s.nr - 1 {
        (3.0 * f.get(i, k) - 4.0 * f.get(i - 1, k) + f.get(i - 2, k)) / (2.0 * dr)
    } else {
        (f.get(i + 1, k) - f.get(i - 1, k)) / (2.0 * dr)
    }
}

/// Second-order one-sided radial derivative at the wall node, biased into the
/// interior: (3f_w − 4f_{w−1} + f_{w−2}) / (2Δr).
#[inline]
pub fn dr_wall(f: &ScalarField, k: usize) -> f64 {
    let s = f.spec();
    let w = s.nr - 1;
    (3.0 * f.get(w, k) - 4.0 * f.get(w - 1, k) + f.get(w - 2, k)) / (2.0 * s.dr())
}

/// Fourth-order centered axial derivative along one stored row, by raw slice.
/// Used for wall traces where the row is contiguous.
#[inline]
pub fn dz4_row(row: &[f64], k: usize, dz: f64) -> f64 {
    let n = row.len();
    let idx = |d: isize| -> usize { (k as isize + d).rem_euclid(n as isize) as usize };
    (-row[idx(2)] + 8.0 * row[idx(1)] - 8.0 * row[idx(-1)] + row[idx(-2)]) / (12.0 * dz)
}

/// Fourth-order centered axial second derivative along one stored row.
#[inline]
pub fn dzz4_row(row: &[f64], k: usize, dz: f64) -> f64 {
    let n = row.len();
    let idx = |d: isize| -> usize { (k as isize + d).rem_euclid(n as isize) as usize };
    (-row[idx(2)] + 16.0 * row[idx(1)] - 30.0 * row[k] + 16.0 * row[idx(-1)] - row[idx(-2)])
        / (12.0 * dz * dz)
}

/// Solves the tridiagonal system sub·x_{i−1} + diag·x_i + sup·x_{i+1} = rhs_i
/// in place (Thomas algorithm) with real coefficients and complex right-hand
/// side. sub[0] and sup[n−1] are ignored.
///
/// The caller guarantees the matrix is nonsingular (the per-mode radial
/// operators here are weakly diagonally dominant M-matrices, for which the
/// elimination is stable without pivoting).
pub fn solve_tridiag_complex(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &mut [Complex<f64>],
    scratch: &mut Vec<f64>,
) {
    let n = diag.len();
    debug_assert_eq!(sub.len(), n);
    debug_assert_eq!(sup.len(), n);
    debug_assert_eq!(rhs.len(), n);
    scratch.clear();
    scratch.resize(n, 0.0);
    // Forward sweep.
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        scratch[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * scratch[i];
        let prev = rhs[i - 1];
        rhs[i] = (rhs[i] - prev * sub[i]) / beta;
    }
    // Back substitution.
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= next * scratch[i + 1];
    }
}

/// Real right-hand-side variant of [`solve_tridiag_complex`].
pub fn solve_tridiag(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut scratch = vec![0.0; n];
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        scratch[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * scratch[i];
        rhs[i] = (rhs[i] - rhs[i - 1] * sub[i]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= rhs[i + 1] * scratch[i + 1];
    }
}
