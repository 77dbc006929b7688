//! Time evolution of (Γ, G): semi-Lagrangian transport under the recovered
//! meridional flow, the swirl-gradient source for G, exact per-step scale
//! compression, identity-residual monitors, and the stepping/monitoring loop.

use crate::cluster::{
    anisotropy_and_shear, campanato_defect, cluster_score, coherence_matrix,
    coherent_component, ClusterParams, ClusterState, SIGN_TOL_REL,
};
use crate::config::{IntegrationSection, PhysicsSection};
use crate::grid::{odd_project, GridSpec, Parity, ScalarField};
use crate::packets::{maximal_score, tail_masses, DyadicPacket};
use crate::poisson::{divergence_residual, recover_velocity, Poisson5, Velocity};
use crate::stencil::dz4;
use crate::traces::{boundary_traces, BoundaryTrace};
use crate::{Error, Result};

/// Residual denominators are floored at this scale so rest states report 0.
pub const RESIDUAL_EPS: f64 = 1e-10;

/// Per-step interpolation overshoot budget of the transport limiter.
pub const OVERSHOOT_BUDGET: f64 = 0.01;

// ---------------------------------------------------------------------------
// State and reports
// ---------------------------------------------------------------------------

/// Full simulation state at one time level.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    /// Swirl Γ (exactly odd).
    pub gamma: ScalarField,
    /// Swirl source G (exactly odd).
    pub g: ScalarField,
    /// Compression scale λ(t), updated by the exact factor e^{−σ dt}.
    pub lambda: f64,
    /// Accumulated compression S(t) = ∫₀ᵗ σ ds.
    pub s_accum: f64,
    /// Wall traces of the current fields.
    pub trace: BoundaryTrace,
    pub step_count: u64,
}

/// Identity and consistency residuals of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResiduals {
    /// |b′ − σb| / max(|σb|, ε₀), midpoint-in-time pairing.
    pub b_ident: f64,
    /// |a′ − σa − 2b²| / max(|σa + 2b²|, ε₀).
    pub a_ident: f64,
    /// |A′ − 2B²| / max(|2B²|, ε₀).
    pub ab_ident: f64,
    /// Max-norm of the cylindrical divergence of the recovered velocity.
    pub divergence: f64,
    /// Sup of the even parts of (Γ, G) before re-symmetrization.
    pub parity_drift: f64,
}

impl StepResiduals {
    pub const ZERO: StepResiduals = StepResiduals {
        b_ident: 0.0,
        a_ident: 0.0,
        ab_ident: 0.0,
        divergence: 0.0,
        parity_drift: 0.0,
    };
}

/// Report for one completed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    /// Advective CFL number max|v|·dt/min(dr, dz) actually taken.
    pub cfl: f64,
    pub residuals: StepResiduals,
    /// Characteristic feet that left the radial domain and were clamped.
    pub clamped_feet: usize,
}

// ---------------------------------------------------------------------------
// Right-hand side and transport
// ---------------------------------------------------------------------------

/// Source of the swirl-source equation: r^{−4}·∂_z(Γ²), with the same
/// fourth-order axial differencing used elsewhere. Odd in z when Γ is odd
/// (Γ² is even, so its z-derivative is odd).
pub fn rhs_g(gamma: &ScalarField) -> ScalarField {
    let spec = gamma.spec();
    let gamma_sq = ScalarField::from_fn_indexed(spec, Parity::None, |i, k| {
        let v = gamma.get(i, k);
        v * v
    });
    let parity = if gamma.parity() == Parity::Odd {
        Parity::Odd
    } else {
        Parity::None
    };
    ScalarField::from_fn_indexed(spec, parity, |i, k| {
        let r = spec.r(i);
        let r2 = r * r;
        dz4(&gamma_sq, i, k) / (r2 * r2)
    })
}

/// Cubic Lagrange sample on the 4×4 stencil around (r, z): periodic in z,
/// stencil shifted one-sided near the radial edges. Exact when (r, z) is a
/// grid node up to the placement arithmetic; combined with the caller's
/// early exit for zero displacement it is bit-exact under zero velocity.
fn sample_cubic(f: &ScalarField, r: f64, z: f64) -> (f64, f64, f64) {
    let spec = f.spec();
    let nr = spec.nr;
    let p = (r / spec.dr() - 0.5).clamp(0.0, (nr - 1) as f64);
    let base_f = (p.floor() as isize - 1).clamp(0, nr as isize - 4);
    let i0 = base_f as usize;
    let sr = p - base_f as f64;
    let q = (z + 0.5 * spec.z_period) / spec.dz();
    let k_cell = q.floor();
    let sz = q - k_cell + 1.0;
    let k_base = k_cell as isize - 1;

    #[inline]
    fn lagrange4(s: f64) -> [f64; 4] {
        let (s0, s1, s2, s3) = (s, s - 1.0, s - 2.0, s - 3.0);
        [
            s1 * s2 * s3 / -6.0,
            s0 * s2 * s3 / 2.0,
            s0 * s1 * s3 / -2.0,
            s0 * s1 * s2 / 6.0,
        ]
    }
    let wr = lagrange4(sr);
    let wz = lagrange4(sz);
    let ks = [
        spec.z_wrap(k_base),
        spec.z_wrap(k_base + 1),
        spec.z_wrap(k_base + 2),
        spec.z_wrap(k_base + 3),
    ];
    let mut val = 0.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (j, wj) in wr.iter().enumerate() {
        let row = f.row(i0 + j);
        for (l, wl) in wz.iter().enumerate() {
            let v = row[ks[l]];
            lo = lo.min(v);
            hi = hi.max(v);
            val += wj * wl * v;
        }
    }
    (val, lo, hi)
}

/// Semi-Lagrangian transport of f over dt: backward characteristics with a
/// second-order midpoint integrator (velocity sampled bilinearly at the half
/// step), cubic interpolation of f at the foot, and a limiter that confines
/// each value to the stencil range widened by 1% of max|f|. Returns the
/// transported field and the number of characteristic feet that left the
/// radial domain and were clamped to it.
pub fn advect_counted(f: &ScalarField, v: &Velocity, dt: f64) -> (ScalarField, usize) {
    let spec = f.spec();
    let fmax = f.max_abs();
    let slack = OVERSHOOT_BUDGET * fmax;
    let r_min = 0.5 * spec.dr();
    let mut clamped = 0usize;
    let mut data = Vec::with_capacity(spec.len());
    for i in 0..spec.nr {
        let r = spec.r(i);
        for k in 0..spec.nz {
            let z = spec.z(k);
            let v1r = v.ur.get(i, k);
            let v1z = v.uz.get(i, k);
            // Midpoint backward: half step with the nodal velocity, then the
            // full step with the velocity at the half-step point. The
            // velocity is sampled with the same cubic rule as the field:
            // lower-order sampling here leaks an O(dz²/λ) error into the
            // wall-identity residuals once the profile compresses.
            let rh = (r - 0.5 * dt * v1r).clamp(r_min, 1.0);
            let zh = z - 0.5 * dt * v1z;
            let vmr = sample_cubic(&v.ur, rh, zh).0;
            let vmz = sample_cubic(&v.uz, rh, zh).0;
            let rf_raw = r - dt * vmr;
            let zf = z - dt * vmz;
            if rf_raw == r && zf == z {
                data.push(f.get(i, k));
                continue;
            }
            let rf = rf_raw.clamp(r_min, 1.0);
            if rf != rf_raw {
                clamped += 1;
            }
            let (val, lo, hi) = sample_cubic(f, rf, zf);
            data.push(val.clamp(lo - slack, hi + slack));
        }
    }
    let out = ScalarField::from_vec(spec, data, f.parity())
        .expect("advected field has the grid's own length");
    (out, clamped)
}

/// Transport without the clamp count.
pub fn advect(f: &ScalarField, v: &Velocity, dt: f64) -> ScalarField {
    advect_counted(f, v, dt).0
}

// ---------------------------------------------------------------------------
// Stepper
// ---------------------------------------------------------------------------

/// Owns the elliptic solver and a one-level velocity cache so the stepping
/// loop performs a single solve per step.
pub struct Stepper {
    solver: Poisson5,
    cache: Option<(u64, Velocity)>,
}

impl Stepper {
    pub fn new(spec: GridSpec) -> Self {
        Stepper {
            solver: Poisson5::new(spec),
            cache: None,
        }
    }

    /// Recovers the velocity of the state's G (cached across the step
    /// boundary, keyed by step count).
    pub fn velocity(&mut self, s: &SimState) -> Result<Velocity> {
        if let Some((n, v)) = &self.cache {
            if *n == s.step_count {
                return Ok(v.clone());
            }
        }
        let phi = self.solver.solve(&s.g)?;
        let vel = recover_velocity(&phi);
        self.cache = Some((s.step_count, vel.clone()));
        Ok(vel)
    }

    /// Builds the initial state at time t0: validates parity, solves for the
    /// velocity, and fills the boundary traces.
    pub fn init_state(
        &mut self,
        gamma: ScalarField,
        g: ScalarField,
        lambda: f64,
        t0: f64,
    ) -> Result<SimState> {
        if gamma.parity() != Parity::Odd || g.parity() != Parity::Odd {
            return Err(Error::ParityMismatch(
                "simulation state requires exactly odd Gamma and G".into(),
            ));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "compression scale lambda = {lambda} must be positive"
            )));
        }
        let phi = self.solver.solve(&g)?;
        let vel = recover_velocity(&phi);
        let trace = boundary_traces(&gamma, &g, &vel, lambda, t0)?;
        let state = SimState {
            t: t0,
            gamma,
            g,
            lambda,
            s_accum: 0.0,
            trace,
            step_count: 0,
        };
        self.cache = Some((0, vel));
        Ok(state)
    }

    /// Advances one step of size dt: recover the velocity from G, transport
    /// Γ, transport G and add dt·(source at the midpoint Γ), re-symmetrize
    /// both fields, apply the exact scale factor e^{−σ dt}, accumulate S,
    /// recompute traces, and fill the identity residuals from across-step
    /// difference quotients.
    pub fn step(&mut self, s: &SimState, dt: f64) -> Result<(SimState, StepReport)> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step size dt = {dt} must be positive"
            )));
        }
        let spec = s.gamma.spec();
        let vel = self.velocity(s)?;
        let cfl = vel.max_speed() * dt / spec.dr().min(spec.dz());

        let (gamma_half, c1) = advect_counted(&s.gamma, &vel, 0.5 * dt);
        let (gamma_raw, c2) = advect_counted(&s.gamma, &vel, dt);
        let (mut g_raw, c3) = advect_counted(&s.g, &vel, dt);
        // The source contributes along the characteristic: evaluate it on the
        // half-time swirl and read it at the characteristic's half-foot
        // (half-step transport of the source field), not at the arrival node.
        let source = advect(&rhs_g(&gamma_half), &vel, 0.5 * dt);
        g_raw.axpy(dt, &source)?;
        let clamped_feet = c1 + c2 + c3;

        let parity_drift = gamma_raw.even_part_max().max(g_raw.even_part_max());
        let gamma_new = odd_project(&gamma_raw);
        let g_new = odd_project(&g_raw);
        if !(gamma_new.all_finite() && g_new.all_finite()) {
            return Err(Error::NonFinite(format!(
                "fields lost finiteness during step {} (t = {}); last good state \
                 is the step input",
                s.step_count, s.t
            )));
        }

        let sigma0 = s.trace.sigma;
        let lambda_new = s.lambda * (-sigma0 * dt).exp();
        let s_new = s.s_accum + sigma0 * dt;
        let t_new = s.t + dt;

        let phi = self.solver.solve(&g_new)?;
        let vel_new = recover_velocity(&phi);
        let trace_new = boundary_traces(&gamma_new, &g_new, &vel_new, lambda_new, t_new)?;
        let divergence = divergence_residual(&vel_new).max_abs();
        self.cache = Some((s.step_count + 1, vel_new));

        let tr0 = &s.trace;
        let tr1 = &trace_new;
        let mid = |x0: f64, x1: f64| 0.5 * (x0 + x1);
        let rel = |num: f64, den: f64| num.abs() / den.abs().max(RESIDUAL_EPS);
        let sig_m = mid(tr0.sigma, tr1.sigma);
        let b_m = mid(tr0.b, tr1.b);
        let a_m = mid(tr0.a, tr1.a);
        let big_b_m = mid(tr0.big_b, tr1.big_b);
        let b_ident = rel((tr1.b - tr0.b) / dt - sig_m * b_m, sig_m * b_m);
        let a_rhs = sig_m * a_m + 2.0 * b_m * b_m;
        let a_ident = rel((tr1.a - tr0.a) / dt - a_rhs, a_rhs);
        let ab_rhs = 2.0 * big_b_m * big_b_m;
        let ab_ident = rel((tr1.big_a - tr0.big_a) / dt - ab_rhs, ab_rhs);

        let state = SimState {
            t: t_new,
            gamma: gamma_new,
            g: g_new,
            lambda: lambda_new,
            s_accum: s_new,
            trace: trace_new,
            step_count: s.step_count + 1,
        };
        let report = StepReport {
            dt,
            cfl,
            residuals: StepResiduals {
                b_ident,
                a_ident,
                ab_ident,
                divergence,
                parity_drift,
            },
            clamped_feet,
        };
        Ok((state, report))
    }
}

/// One-shot step (builds a fresh solver; the loop in [`run`] reuses one).
pub fn step(s: &SimState, dt: f64) -> Result<(SimState, StepReport)> {
    Stepper::new(s.gamma.spec()).step(s, dt)
}

// ---------------------------------------------------------------------------
// Run loop and monitors
// ---------------------------------------------------------------------------

/// Step-size and termination policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunPolicy {
    pub t_final: f64,
    /// Target advective CFL number for the adaptive dt.
    pub cfl: f64,
    /// Per-step compression cap: dt also satisfies gradUinf·dt ≤ strain_cap.
    pub strain_cap: f64,
    /// Stop when |B| ≥ growth_ceiling·|B(0)|.
    pub growth_ceiling: f64,
    /// Stop when gradUinf ≥ grad_ceiling.
    pub grad_ceiling: f64,
    /// Stop when λ < lambda_floor_cells·max(dr, dz).
    pub lambda_floor_cells: f64,
    /// Stop when the CFL step falls below this.
    pub dt_min: f64,
    /// Score-evaluation cadence in steps.
    pub monitor_every: usize,
}

impl RunPolicy {
    pub fn from_integration(i: &IntegrationSection) -> Self {
        RunPolicy {
            t_final: i.t_final,
            cfl: i.cfl,
            strain_cap: i.strain_cap,
            growth_ceiling: i.growth_ceiling,
            grad_ceiling: i.grad_ceiling,
            lambda_floor_cells: i.lambda_floor_cells,
            dt_min: i.dt_min,
            monitor_every: i.monitor_every,
        }
    }
}

/// Parameters of the per-cadence score monitors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorParams {
    pub cluster: ClusterParams,
    pub delta_c: f64,
    pub k_star: f64,
    pub kappa_core: f64,
}

impl MonitorParams {
    pub fn from_physics(p: &PhysicsSection) -> Self {
        MonitorParams {
            cluster: ClusterParams::from_physics(p),
            delta_c: p.delta_c,
            k_star: p.k_star,
            kappa_core: p.kappa_core,
        }
    }
}

/// Score functionals evaluated at monitor cadence. Degenerate quantities
/// (zero swirl slope, empty cluster, vanishing σ) are reported as NaN
/// sentinels rather than failing the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreSample {
    /// Maximal diagonal score M_{δc}.
    pub m_score: f64,
    /// Scale attaining it in the scan.
    pub m_argmax: f64,
    /// Bounded-overlap cluster score Σ A.
    pub cluster_score: f64,
    /// Selected cluster size.
    pub n_members: usize,
    /// Principal coherent component sums.
    pub a_star: f64,
    pub b_star: f64,
    /// Affine-model defect over the cluster.
    pub eps_cl: f64,
    /// Core anisotropy sup.
    pub r_max: f64,
    /// Core shear sup.
    pub shear_max: f64,
    /// Dyadic tail-to-core mass ratio at the current λ.
    pub tail_ratio: f64,
    /// Min of G over the upper inner cone (sign-class monitor).
    pub min_upper_cone: f64,
    /// Whether the sign-class monitor passes.
    pub sign_ok: bool,
}

/// One emitted time-series sample.
#[derive(Debug, Clone)]
pub struct Sample {
    pub trace: BoundaryTrace,
    pub report: StepReport,
    pub scores: Option<ScoreSample>,
}

/// Why the loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TimeReached,
    GrowthCeiling,
    GradientCeiling,
    ResolutionExhausted,
    DtUnderflow,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StopReason::TimeReached => "time reached",
            StopReason::GrowthCeiling => "growth ceiling",
            StopReason::GradientCeiling => "gradient ceiling",
            StopReason::ResolutionExhausted => "resolution exhausted",
            StopReason::DtUnderflow => "dt underflow",
        };
        f.write_str(s)
    }
}

/// Adaptive step from the advective CFL target and the strain cap; +∞ when
/// the state imposes no limit (rest state).
pub fn stable_dt(policy: &RunPolicy, h: f64, vmax: f64, grad_u_inf: f64) -> f64 {
    let dt_cfl = if vmax > 0.0 {
        policy.cfl * h / vmax
    } else {
        f64::INFINITY
    };
    let dt_strain = if grad_u_inf > 0.0 {
        policy.strain_cap / grad_u_inf
    } else {
        f64::INFINITY
    };
    dt_cfl.min(dt_strain)
}

/// Result of a full run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub samples: Vec<Sample>,
    pub stop: StopReason,
    pub state: SimState,
}

fn evaluate_scores(
    stepper: &mut Stepper,
    state: &SimState,
    mon: &MonitorParams,
) -> Result<ScoreSample> {
    let spec = state.g.spec();
    let scan_cap = mon
        .cluster
        .lambda0
        .min(1.0)
        .min(0.5 * spec.z_period);
    let (m_score, m_argmax) = match maximal_score(&state.g, mon.delta_c, scan_cap) {
        Ok(v) => v,
        Err(Error::InvalidParameter(_)) | Err(Error::UnresolvedPacket(_)) => {
            (f64::NAN, f64::NAN)
        }
        Err(e) => return Err(e),
    };

    // The cluster geometry contracts with accumulated compression; transient
    // negative S (σ < 0 phases) pins the geometry at its initial shape.
    let mut cstate = ClusterState::at_compression(&mon.cluster, state.s_accum.max(0.0))?;
    let sel = cluster_score(&state.gamma, &state.g, &cstate)?;
    cstate.members = sel.members.clone();
    let vel = stepper.velocity(state)?;

    let (a_star, b_star) = if cstate.members.is_empty() {
        (0.0, 0.0)
    } else {
        let packets: Vec<DyadicPacket> =
            cstate.members.iter().map(|m| m.packet).collect();
        let amps: Vec<_> = cstate.members.iter().map(|m| m.amps).collect();
        let k = coherence_matrix(&packets)?;
        let comp = coherent_component(&amps, &k, mon.k_star)?;
        (comp.a_star, comp.b_star)
    };

    let sigma = state.trace.sigma;
    let eps_cl = if cstate.members.is_empty() || sigma == 0.0 {
        f64::NAN
    } else {
        campanato_defect(&vel, sigma, &cstate)?
    };

    let (r_max, shear_max) =
        match anisotropy_and_shear(&state.gamma, &vel, state.lambda, mon.kappa_core) {
            Ok(rep) => (rep.r_max, rep.shear_max),
            Err(Error::DegeneratePacket(_)) => (f64::NAN, f64::NAN),
            Err(e) => return Err(e),
        };

    let extent = 1.0_f64.min(0.5 * spec.z_period);
    let mut j_max = 0usize;
    while 2.0_f64.powi(j_max as i32 + 2) * state.lambda <= extent {
        j_max += 1;
    }
    let tail_ratio = if j_max >= 1 {
        match tail_masses(&state.g, state.lambda, j_max) {
            Ok(rep) => rep.ratio,
            Err(Error::UnresolvedPacket(_)) | Err(Error::InvalidParameter(_)) => f64::NAN,
            Err(e) => return Err(e),
        }
    } else {
        f64::NAN
    };

    // Sign-class monitor: min of G over the upper inner cone at the current λ.
    let mut min_cone = 0.0_f64;
    for i in (0..spec.nr).rev() {
        let x = spec.x(i);
        if x > state.lambda {
            break;
        }
        if x <= 0.0 {
            continue;
        }
        for k in 0..spec.nz {
            let y = spec.z(k);
            if y > 0.0 && ((y / x - 1.0) / mon.delta_c).abs() <= 0.5 {
                min_cone = min_cone.min(state.g.get(i, k));
            }
        }
    }
    let sign_ok = min_cone >= -SIGN_TOL_REL * state.g.max_abs();

    Ok(ScoreSample {
        m_score,
        m_argmax,
        cluster_score: sel.score,
        n_members: cstate.members.len(),
        a_star,
        b_star,
        eps_cl,
        r_max,
        shear_max,
        tail_ratio,
        min_upper_cone: min_cone,
        sign_ok,
    })
}

/// Runs the stepping loop from s0 with adaptive dt = cfl·h/max|v|, emitting
/// one sample per step (scores attached at the monitor cadence and at the
/// endpoints), until the final time or a sentinel fires.
pub fn run(s0: SimState, policy: &RunPolicy, mon: &MonitorParams) -> Result<RunOutcome> {
    if !(policy.t_final > s0.t) {
        return Err(Error::InvalidParameter(format!(
            "final time {} must exceed the initial time {}",
            policy.t_final, s0.t
        )));
    }
    let spec = s0.gamma.spec();
    let h = spec.dr().min(spec.dz());
    let res_floor = policy.lambda_floor_cells * spec.dr().max(spec.dz());
    let b0_ref = s0.trace.big_b.abs();
    let mut stepper = Stepper::new(spec);

    let mut state = s0;
    let mut samples = Vec::new();
    let scores0 = evaluate_scores(&mut stepper, &state, mon)?;
    samples.push(Sample {
        trace: state.trace,
        report: StepReport {
            dt: 0.0,
            cfl: 0.0,
            residuals: StepResiduals::ZERO,
            clamped_feet: 0,
        },
        scores: Some(scores0),
    });

    let stop = loop {
        if state.t >= policy.t_final - 1e-12 * policy.t_final.max(1.0) {
            break StopReason::TimeReached;
        }
        if b0_ref > 0.0 && state.trace.big_b.abs() >= policy.growth_ceiling * b0_ref {
            break StopReason::GrowthCeiling;
        }
        if state.trace.grad_u_inf >= policy.grad_ceiling {
            break StopReason::GradientCeiling;
        }
        if state.lambda < res_floor {
            break StopReason::ResolutionExhausted;
        }
        let vmax = stepper.velocity(&state)?.max_speed();
        let dt_raw = stable_dt(policy, h, vmax, state.trace.grad_u_inf);
        let dt_raw = if dt_raw.is_finite() {
            dt_raw
        } else {
            policy.t_final - state.t
        };
        if dt_raw < policy.dt_min {
            break StopReason::DtUnderflow;
        }
        let dt = dt_raw.min(policy.t_final - state.t);
        let (next, report) = stepper.step(&state, dt)?;
        state = next;
        let scored = policy.monitor_every.max(1) as u64;
        let scores = if state.step_count % scored == 0 {
            Some(evaluate_scores(&mut stepper, &state, mon)?)
        } else {
            None
        };
        samples.push(Sample {
            trace: state.trace,
            report,
            scores,
        });
    };

    if let Some(last) = samples.last_mut() {
        if last.scores.is_none() {
            last.scores = Some(evaluate_scores(&mut stepper, &state, mon)?);
        }
    }
    Ok(RunOutcome {
        samples,
        stop,
        state,
    })
}

// ---------------------------------------------------------------------------
// Continuation monitor
// ---------------------------------------------------------------------------

/// Continuation-norm report over a trace series.
#[derive(Debug, Clone)]
pub struct ContinuationReport {
    /// λ^{−1/2}·|B| per sample — the wall swirl-gradient continuation norm.
    pub cont_norm: Vec<f64>,
    /// gradUinf ≥ |b| held at every sample.
    pub ok: bool,
    /// Largest violation |b| − gradUinf over the series (≤ 0 when ok).
    pub max_gap: f64,
    /// Pearson correlation of λ^{−1/2}|B| with gradUinf (NaN when either
    /// series is constant).
    pub correlation: f64,
}

/// Checks that the velocity-gradient sup dominates the wall swirl slope at
/// every sample and reports the continuation norm λ^{−1/2}B alongside it.
pub fn continuation_monitor(traces: &[BoundaryTrace]) -> Result<ContinuationReport> {
    if traces.is_empty() {
        return Err(Error::InvalidParameter(
            "continuation monitor needs a nonempty trace series".into(),
        ));
    }
    let cont_norm: Vec<f64> = traces
        .iter()
        .map(|tr| tr.big_b.abs() / tr.lambda.sqrt())
        .collect();
    let mut max_gap = f64::NEG_INFINITY;
    for tr in traces {
        max_gap = max_gap.max(tr.b.abs() - tr.grad_u_inf);
    }
    let grads: Vec<f64> = traces.iter().map(|tr| tr.grad_u_inf).collect();
    let n = traces.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let (mc, mg) = (mean(&cont_norm), mean(&grads));
    let mut num = 0.0;
    let mut vc = 0.0;
    let mut vg = 0.0;
    for i in 0..traces.len() {
        let dc = cont_norm[i] - mc;
        let dg = grads[i] - mg;
        num += dc * dg;
        vc += dc * dc;
        vg += dg * dg;
    }
    let correlation = if vc > 0.0 && vg > 0.0 {
        num / (vc * vg).sqrt()
    } else {
        f64::NAN
    };
    Ok(ContinuationReport {
        cont_norm,
        ok: max_gap <= 0.0,
        max_gap,
        correlation,
    })
}
