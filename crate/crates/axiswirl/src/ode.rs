//! The planar comparison system X′ = αY², Y′ = βXY: adaptive integration,
//! conserved first integral, closed-form blow-up time, and empirical
//! comparison against simulated score traces.
//!
//! The two comparison systems appearing upstream — wall-trace growth with
//! coefficients (c₁, c₀/2) and coherent-component growth with (c₁, c₂) — are
//! the same system up to naming, so a single (α, β) family covers both.

use crate::{Error, Result};

/// State of the comparison system at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonState {
    /// Score-like component (plays A or M). Nonnegative.
    pub x: f64,
    /// Source-like component (plays B). Nonnegative; zero freezes the flow.
    pub y: f64,
    /// Coefficient of Y² in X′. Positive.
    pub alpha: f64,
    /// Coefficient of XY in Y′. Positive.
    pub beta: f64,
    pub t: f64,
}

impl ComparisonState {
    pub fn new(x: f64, y: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "score component X = {x} must be finite and nonnegative"
            )));
        }
        if !(y >= 0.0 && y.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "source component Y = {y} must be finite and nonnegative"
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "coefficients (alpha, beta) = ({alpha}, {beta}) must be positive"
            )));
        }
        Ok(ComparisonState {
            x,
            y,
            alpha,
            beta,
            t: 0.0,
        })
    }

    /// First integral I = Y² − (β/α)X², conserved by the exact flow:
    /// dI/dt = 2βXY² − (β/α)·2X·αY² = 0.
    pub fn first_integral(&self) -> f64 {
        self.y * self.y - (self.beta / self.alpha) * self.x * self.x
    }

    fn deriv(&self, x: f64, y: f64) -> (f64, f64) {
        (self.alpha * y * y, self.beta * x * y)
    }
}

/// Accepted states of one integration, in time order (initial state first).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<ComparisonState>,
    /// True when integration halted early because X reached the 1/tol
    /// ceiling; the final time is then a lower bound for the blow-up time.
    pub ceiling_hit: bool,
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One embedded step from (x, y) with width h: returns the fifth-order
/// solution and a scaled error estimate.
fn dp_step(s: &ComparisonState, x: f64, y: f64, h: f64, tol: f64) -> (f64, f64, f64) {
    let mut kx = [0.0_f64; 7];
    let mut ky = [0.0_f64; 7];
    let (dx, dy) = s.deriv(x, y);
    kx[0] = dx;
    ky[0] = dy;
    for i in 1..7 {
        let mut xs = x;
        let mut ys = y;
        for j in 0..i {
            let a = if i < 7 && j < 6 { A[i - 1][j] } else { 0.0 };
            xs += h * a * kx[j];
            ys += h * a * ky[j];
        }
        let (dx, dy) = s.deriv(xs, ys);
        kx[i] = dx;
        ky[i] = dy;
    }
    let mut x5 = x;
    let mut y5 = y;
    let mut ex = 0.0;
    let mut ey = 0.0;
    for i in 0..7 {
        x5 += h * B5[i] * kx[i];
        y5 += h * B5[i] * ky[i];
        ex += h * (B5[i] - B4[i]) * kx[i];
        ey += h * (B5[i] - B4[i]) * ky[i];
    }
    let scx = tol * (1.0 + x.abs().max(x5.abs()));
    let scy = tol * (1.0 + y.abs().max(y5.abs()));
    let err = (0.5 * ((ex / scx).powi(2) + (ey / scy).powi(2))).sqrt();
    (x5, y5, err)
}

/// Advances the state to t_target (or to the X ceiling) with adaptive
/// embedded Runge–Kutta steps; pushes every accepted state when `record` is
/// given. Returns the end state and whether the ceiling fired.
fn advance(
    s0: &ComparisonState,
    t_target: f64,
    tol: f64,
    i_ref: f64,
    mut record: Option<&mut Vec<ComparisonState>>,
) -> Result<(ComparisonState, bool)> {
    let ceiling = 1.0 / tol;
    let mut s = *s0;
    if s.x >= ceiling {
        return Ok((s, true));
    }
    let (dx0, dy0) = s.deriv(s.x, s.y);
    let f0 = dx0.abs().max(dy0.abs());
    let mut h = ((t_target - s.t) * 1e-2).min(0.1 / (1.0 + f0));
    if h <= 0.0 {
        return Ok((s, false));
    }
    let drift_limit = 10.0 * tol * i_ref.abs() + 1e-12;
    loop {
        if s.t >= t_target {
            return Ok((s, false));
        }
        let h_try = h.min(t_target - s.t);
        if h_try < 1e-14 * s.t.abs().max(1.0) {
            return Err(Error::OdeFailure(
                "stiff/blow-up unresolved: step underflow before the requested \
                 time without reaching the X ceiling"
                    .into(),
            ));
        }
        let (x5, y5, err) = dp_step(&s, s.x, s.y, h_try, tol);
        if err <= 1.0 && x5.is_finite() && y5.is_finite() {
            s.x = x5;
            s.y = y5.max(0.0);
            s.t += h_try;
            // The drift budget carries a floor for the round-off of
            // evaluating Y² − (β/α)X² itself: near blow-up the two squares
            // cancel at magnitudes far above |I|, and that noise is not
            // integrator drift.
            let drift = (s.first_integral() - i_ref).abs();
            let fp_floor = 32.0
                * f64::EPSILON
                * (s.y * s.y + (s.beta / s.alpha) * s.x * s.x);
            if drift > drift_limit + fp_floor {
                return Err(Error::OdeFailure(format!(
                    "first-integral drift {drift:.3e} exceeds contract {drift_limit:.3e} \
                     at t = {}",
                    s.t
                )));
            }
            if let Some(rec) = record.as_deref_mut() {
                rec.push(s);
            }
            if s.x >= ceiling {
                return Ok((s, true));
            }
            let grow = if err > 0.0 {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            h = h_try * grow;
        } else {
            let shrink = if err.is_finite() {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            };
            h = h_try * shrink;
        }
    }
}

/// Integrates the comparison system to t_end with local tolerance tol,
/// halting early when X exceeds 1/tol (blow-up proximity; the final time is
/// then a lower bound for t*). The first integral is monitored along the
/// whole trajectory and drift beyond 10·tol·|I₀| + 1e-12 is an error.
pub fn integrate(s0: &ComparisonState, t_end: f64, tol: f64) -> Result<Trajectory> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tolerance {tol} must be positive"
        )));
    }
    if !(t_end > s0.t) {
        return Err(Error::InvalidParameter(format!(
            "end time {t_end} must exceed the state time {}",
            s0.t
        )));
    }
    let mut states = vec![*s0];
    let i0 = s0.first_integral();
    let (_, ceiling_hit) = advance(s0, t_end, tol, i0, Some(&mut states))?;
    Ok(Trajectory {
        states,
        ceiling_hit,
    })
}

/// Integrates and reports the state at each requested time (strictly
/// increasing, all beyond the state time). Hitting the X ceiling fills the
/// remaining samples with +∞ in X.
pub fn sample_trajectory(
    s0: &ComparisonState,
    times: &[f64],
    tol: f64,
) -> Result<Vec<ComparisonState>> {
    let mut out = Vec::with_capacity(times.len());
    let mut s = *s0;
    let i0 = s0.first_integral();
    let mut blown = false;
    for (n, &t) in times.iter().enumerate() {
        if !(t >= s.t) || (n > 0 && t <= times[n - 1]) {
            return Err(Error::InvalidSeries(format!(
                "requested times must be increasing and beyond the state time \
                 (offender: {t})"
            )));
        }
        if blown {
            out.push(ComparisonState {
                x: f64::INFINITY,
                y: f64::INFINITY,
                t,
                ..s
            });
            continue;
        }
        let (next, ceiling) = advance(&s, t, tol, i0, None)?;
        s = next;
        blown = ceiling;
        if blown {
            out.push(ComparisonState {
                x: f64::INFINITY,
                y: f64::INFINITY,
                t,
                ..s
            });
        } else {
            out.push(s);
        }
    }
    Ok(out)
}

/// Closed-form blow-up time of X′ = βX² + αI₀ (the reduced form of the
/// system along its conserved integral):
///
/// * I₀ > 0: t* = (π/2 − arctan(X₀√(β/(αI₀)))) / √(αβI₀);
/// * I₀ = 0: t* = 1/(βX₀);
/// * I₀ < 0 with X₀ above the trapping root ρ = √(−αI₀/β):
///   t* = ln((X₀+ρ)/(X₀−ρ)) / (2βρ); at or below ρ the orbit never blows
///   up and +∞ is returned (unreachable from Y₀ > 0, kept as a sentinel).
pub fn blowup_time(s: &ComparisonState) -> Result<f64> {
    if !(s.y > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "source amplitude must be positive (Y₀ = {})",
            s.y
        )));
    }
    if !(s.x >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "score component X₀ = {} must be nonnegative",
            s.x
        )));
    }
    let i0 = s.first_integral();
    let t_star = if i0 > 0.0 {
        let root = (s.alpha * s.beta * i0).sqrt();
        let arg = s.x * (s.beta / (s.alpha * i0)).sqrt();
        (std::f64::consts::FRAC_PI_2 - arg.atan()) / root
    } else if i0 == 0.0 {
        1.0 / (s.beta * s.x)
    } else {
        let rho = (-s.alpha * i0 / s.beta).sqrt();
        if s.x <= rho {
            return Ok(f64::INFINITY);
        }
        ((s.x + rho) / (s.x - rho)).ln() / (2.0 * s.beta * rho)
    };
    Ok(t_star)
}

// ---------------------------------------------------------------------------
// Trace comparison
// ---------------------------------------------------------------------------

/// One sample of a simulated score series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub t: f64,
    /// Score-like column (A_* or A).
    pub a: f64,
    /// Source-like column (B_* or B).
    pub b: f64,
}

/// Empirical comparison of a simulated series against the ODE system.
#[derive(Debug, Clone)]
pub struct TraceComparison {
    /// min over samples of (ΔA/Δt)/B² (NaN when no sample has B > 0).
    pub c1_observed: f64,
    /// min over samples of (ΔB/Δt)/(A·B) (NaN when undefined throughout).
    pub c2_observed: f64,
    /// Coefficients actually integrated with.
    pub c1_used: f64,
    pub c2_used: f64,
    /// Comparison trajectory at the sample times.
    pub comparison: Vec<ComparisonState>,
    /// Largest relative excess of the comparison trajectory over the series
    /// (≤ 0 when the series dominates everywhere).
    pub max_violation: f64,
    /// Whether the series dominates the comparison trajectory at every
    /// sample within a small relative slack.
    pub dominated: bool,
}

/// Relative slack allowed when declaring sample-by-sample domination.
pub const DOMINATION_SLACK: f64 = 1e-6;
const TRACE_TOL: f64 = 1e-10;

/// Forward-difference growth margins of a series: the observed ĉ₁, ĉ₂.
pub fn observed_c_hats(series: &[SeriesPoint]) -> (f64, f64) {
    let mut c1 = f64::INFINITY;
    let mut c2 = f64::INFINITY;
    for w in series.windows(2) {
        let dt = w[1].t - w[0].t;
        let (a, b) = (w[0].a, w[0].b);
        if b > 0.0 {
            c1 = c1.min((w[1].a - w[0].a) / dt / (b * b));
            if a != 0.0 {
                c2 = c2.min((w[1].b - w[0].b) / dt / (a * b));
            }
        }
    }
    let fix = |c: f64| if c.is_finite() { c } else { f64::NAN };
    (fix(c1), fix(c2))
}

/// Integrates the comparison system with coefficients (c₁, c₂) — explicit, or
/// the observed margins when `c_hat` is None — from the series' initial data,
/// and checks the Dini comparison property: the simulated series should
/// dominate the comparison trajectory sample-by-sample.
pub fn trace_comparison(
    series: &[SeriesPoint],
    c_hat: Option<(f64, f64)>,
) -> Result<TraceComparison> {
    if series.len() < 2 {
        return Err(Error::InvalidSeries(format!(
            "trace comparison needs at least two samples, got {}",
            series.len()
        )));
    }
    for w in series.windows(2) {
        if !(w[1].t > w[0].t) {
            return Err(Error::InvalidSeries(format!(
                "time column must be strictly increasing ({} then {})",
                w[0].t, w[1].t
            )));
        }
    }
    let (c1_observed, c2_observed) = observed_c_hats(series);
    let (c1_used, c2_used) = match c_hat {
        Some((c1, c2)) => (c1, c2),
        None => (c1_observed, c2_observed),
    };
    // A frozen source (B ≡ 0) freezes the comparison flow regardless of the
    // coefficients; integrate with unit placeholders so NaN margins cannot
    // poison the trajectory.
    let degenerate = !(c1_used > 0.0 && c1_used.is_finite())
        || !(c2_used > 0.0 && c2_used.is_finite());
    let (ci1, ci2) = if degenerate { (1.0, 1.0) } else { (c1_used, c2_used) };
    if degenerate && series[0].b > 0.0 {
        return Err(Error::InvalidSeries(format!(
            "comparison coefficients ({c1_used}, {c2_used}) must be positive \
             for a series with a live source"
        )));
    }
    let s0 = ComparisonState {
        x: series[0].a.max(0.0),
        y: series[0].b.max(0.0),
        alpha: ci1,
        beta: ci2,
        t: series[0].t,
    };
    let times: Vec<f64> = series[1..].iter().map(|p| p.t).collect();
    let mut comparison = vec![s0];
    comparison.extend(sample_trajectory(&s0, &times, TRACE_TOL)?);

    let mut max_violation = f64::NEG_INFINITY;
    for (p, c) in series.iter().zip(&comparison) {
        let vx = (c.x - p.a) / p.a.abs().max(1e-12);
        let vy = (c.y - p.b) / p.b.abs().max(1e-12);
        max_violation = max_violation.max(vx).max(vy);
    }
    Ok(TraceComparison {
        c1_observed,
        c2_observed,
        c1_used,
        c2_used,
        comparison,
        max_violation,
        dominated: max_violation <= DOMINATION_SLACK,
    })
}
