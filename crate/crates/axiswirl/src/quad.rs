//! Adaptive Gauss–Kronrod quadrature (7-point Gauss / 15-point Kronrod pair)
//! in one dimension, with a nested driver for rectangles.
//!
//! These routines back the analytic cross-checks: kernel normalization
//! constants, slice masses of model profiles, and the independent evaluation
//! routes that the grid-based functionals are compared against.

use crate::{Error, Result};

/// 15-point Kronrod abscissae on [0, 1] side (symmetric about 0).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// 7-point Gauss weights (odd-index subset of the Kronrod nodes).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss–Kronrod evaluation on [a, b]: returns (Kronrod value, error
/// estimate |K15 − G7|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let fsum = f(mid - dx) + f(mid + dx);
        kron += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    kron *= half;
    gauss *= half;
    (kron, (kron - gauss).abs())
}

/// Adaptive 1D integral of `f` over [a, b] to absolute tolerance `tol`.
///
/// Bisects the interval with the worst local error until the summed error
/// estimate falls below `tol`. Fails with [`Error::QuadratureFailure`] if the
/// subdivision budget is exhausted first.
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || tol <= 0.0 {
        return Err(Error::QuadratureFailure("bad interval or tolerance".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    // (error, value, a, b) kept in a max-heap by error.
    let (v0, e0) = gk15(&f, a, b);
    if !v0.is_finite() {
        return Err(Error::QuadratureFailure("non-finite integrand".into()));
    }
    let mut heap: std::collections::BinaryHeap<HeapItem> = std::collections::BinaryHeap::new();
    heap.push(HeapItem { err: e0, val: v0, a, b });
    let mut total_err = e0;
    let mut total_val = v0;
    let max_intervals = 4000_usize;
    while total_err > tol {
        if heap.len() >= max_intervals {
            return Err(Error::QuadratureFailure(format!(
                "subdivision budget exhausted: error estimate {total_err:.3e} > {tol:.3e}"
            )));
        }
        let worst = heap.pop().expect("non-empty heap");
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            return Err(Error::QuadratureFailure(
                "interval collapsed below machine resolution".into(),
            ));
        }
        let (vl, el) = gk15(&f, worst.a, m);
        let (vr, er) = gk15(&f, m, worst.b);
        if !(vl.is_finite() && vr.is_finite()) {
            return Err(Error::QuadratureFailure("non-finite integrand".into()));
        }
        total_val += vl + vr - worst.val;
        total_err += el + er - worst.err;
        heap.push(HeapItem { err: el, val: vl, a: worst.a, b: m });
        heap.push(HeapItem { err: er, val: vr, a: m, b: worst.b });
    }
    Ok(total_val)
}

struct HeapItem {
    err: f64,
    val: f64,
    a: f64,
    b: f64,
}

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive 2D integral of `f` over [ax, bx] × [ay, by] to absolute
/// tolerance `tol`, by nesting the 1D routine (inner integral in y).
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    ax: f64,
    bx: f64,
    ay: f64,
    by: f64,
    tol: f64,
) -> Result<f64> {
    let span = (bx - ax).abs().max(1.0);
    let inner_tol = (0.1 * tol / span).max(1e-15);
    // The inner pass must not abort the whole integral on one hard slice;
    // propagate failure through a poisoned value instead.
    let poison = std::cell::Cell::new(false);
    let outer = integrate_1d(
        |x| match integrate_1d(|y| f(x, y), ay, by, inner_tol) {
            Ok(v) => v,
            Err(_) => {
                poison.set(true);
                f64::NAN
            }
        },
        ax,
        bx,
        tol,
    );
    if poison.get() {
        return Err(Error::QuadratureFailure("inner slice did not converge".into()));
    }
    outer
}
