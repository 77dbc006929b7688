//! Dyadic cluster machinery: the shrinking shell–angle lattice, bounded-
//! overlap score selection, the pairwise coherence matrix, the uniformly
//! coherent component, and the affine (Campanato-type) model defect.

use crate::grid::ScalarField;
use crate::kernels::wall_kernel_shifted_odd;
use crate::packets::{projected_amplitudes, DyadicPacket, PacketAmplitudes};
use crate::poisson::Velocity;
use crate::stencil::{dr2, dz4_row};
use crate::traces::core_anisotropy;
use crate::{Error, Result};

/// Relative tolerance for the packet sign-coherence gate G ≥ −tol·max|G|;
/// sized to absorb the ≤ 1% interpolation undershoot the advection limiter
/// allows per step.
pub const SIGN_TOL_REL: f64 = 0.01;

/// Midpoint nodes per direction for coherence-matrix quadratures.
const COHERENCE_QUAD_N: usize = 48;

// ---------------------------------------------------------------------------
// Cluster state
// ---------------------------------------------------------------------------

/// Time-independent parameters of the shrinking cluster family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterParams {
    /// Base scale λ₀.
    pub lambda0: f64,
    /// Base angular aperture δ₀.
    pub delta0: f64,
    /// Scale-shrink exponent μ.
    pub mu: f64,
    /// Angle-shrink exponent ν; 0 < ν < μ < 1.
    pub nu: f64,
    /// Window growth rate κ; 0 < κ < 1 + μ.
    pub kappa_window: f64,
    /// Initial window depth J_*.
    pub j_star: usize,
    /// Bounded-overlap constant N_ov.
    pub n_overlap: usize,
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu < self.mu && self.mu < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "(nu, mu) = ({}, {}) violates 0 < nu < mu < 1",
                self.nu, self.mu
            )));
        }
        if !(self.kappa_window > 0.0 && self.kappa_window < 1.0 + self.mu) {
            return Err(Error::InvalidParameter(format!(
                "kappa_window = {} violates 0 < kappa_window < 1 + mu",
                self.kappa_window
            )));
        }
        if !(self.lambda0 > 0.0 && self.delta0 > 0.0) {
            return Err(Error::InvalidParameter(
                "lambda0 and delta0 must be positive".into(),
            ));
        }
        if self.n_overlap < 1 {
            return Err(Error::InvalidParameter(
                "n_overlap must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Builds the params from the run-configuration physics section.
    pub fn from_physics(p: &crate::config::PhysicsSection) -> Self {
        ClusterParams {
            lambda0: p.lambda0,
            delta0: p.delta0,
            mu: p.mu,
            nu: p.nu,
            kappa_window: p.kappa_window,
            j_star: p.j_star,
            n_overlap: p.n_overlap,
        }
    }
}

/// One selected packet with its projected amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterMember {
    pub packet: DyadicPacket,
    pub amps: PacketAmplitudes,
}

/// The cluster geometry at accumulated compression S, plus the currently
/// selected members.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    /// Accumulated compression S = ∫₀ᵗ σ ds.
    pub s: f64,
    /// Shrinking base scale λ_μ = λ₀·e^{−(1+μ)S}.
    pub lambda_mu: f64,
    /// Shrinking aperture δ_ν = δ₀·e^{−νS}.
    pub delta_nu: f64,
    /// Dyadic window depth J = J_* + ⌊κS/ln 2⌋ (nondecreasing in S).
    pub j_window: usize,
    /// Bounded-overlap constant.
    pub n_overlap: usize,
    /// Selected members (filled by cluster selection; empty by default).
    pub members: Vec<ClusterMember>,
}

impl ClusterState {
    /// Evaluates the cluster geometry at compression S ≥ 0.
    pub fn at_compression(params: &ClusterParams, s: f64) -> Result<Self> {
        params.validate()?;
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "accumulated compression S = {s} must be finite and >= 0"
            )));
        }
        Ok(ClusterState {
            s,
            lambda_mu: params.lambda0 * (-(1.0 + params.mu) * s).exp(),
            delta_nu: params.delta0 * (-params.nu * s).exp(),
            j_window: params.j_star
                + (params.kappa_window * s / std::f64::consts::LN_2).floor() as usize,
            n_overlap: params.n_overlap,
            members: Vec::new(),
        })
    }

    /// Candidate lattice: shells j = 0..=J × angular centers
    /// {0.5 + k·δ_ν} ∩ [0.5, 2.0]. Adjacent packets overlap pairwise only,
    /// so any sub-family respects N_ov = 2 by construction.
    pub fn candidate_lattice(&self) -> Vec<DyadicPacket> {
        let mut out = Vec::new();
        for j in 0..=self.j_window {
            let lambda_j = 2.0_f64.powi(j as i32) * self.lambda_mu;
            let mut k = 0usize;
            loop {
                let m = 0.5 + k as f64 * self.delta_nu;
                if m > 2.0 + 1e-12 {
                    break;
                }
                out.push(DyadicPacket {
                    j,
                    m,
                    lambda_j,
                    delta_nu: self.delta_nu,
                });
                k += 1;
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Bounded-overlap selection
// ---------------------------------------------------------------------------

/// Axis-aligned support rectangle in (x, ω = y/x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportBox {
    pub x: (f64, f64),
    pub w: (f64, f64),
}

impl SupportBox {
    pub fn of(p: &DyadicPacket) -> Self {
        let (x, w) = p.nominal_box();
        SupportBox { x, w }
    }
}

/// True when every box in the set shares one common interior point
/// (per-coordinate max of lower ends strictly below min of upper ends).
/// Boundary-only contact does not count: the overlap bound is a statement
/// about multiplicity almost everywhere, so intersection widths within
/// rounding error of zero (relative 1e-12) count as contact, not overlap —
/// lattice endpoints like m ± δ_ν are computed in floating point and can
/// disagree by one ulp.
fn share_interior_point(ids: &[usize], boxes: &[SupportBox]) -> bool {
    let mut x_lo = f64::NEG_INFINITY;
    let mut x_hi = f64::INFINITY;
    let mut w_lo = f64::NEG_INFINITY;
    let mut w_hi = f64::INFINITY;
    for &i in ids {
        x_lo = x_lo.max(boxes[i].x.0);
        x_hi = x_hi.min(boxes[i].x.1);
        w_lo = w_lo.max(boxes[i].w.0);
        w_hi = w_hi.min(boxes[i].w.1);
    }
    let open = |lo: f64, hi: f64| hi - lo > 1e-12 * lo.abs().max(hi.abs()).max(1.0);
    open(x_lo, x_hi) && open(w_lo, w_hi)
}

/// Checks that adding `next` to the admissible set `sel` creates no point
/// covered by more than n_ov boxes (no (n_ov+1)-subset containing `next`
/// shares an interior point).
fn addition_admissible(sel: &[usize], next: usize, boxes: &[SupportBox], n_ov: usize) -> bool {
    // Enumerate n_ov-subsets of `sel` joined with `next`.
    let mut combo = vec![0usize; n_ov + 1];
    combo[n_ov] = next;
    fn rec(
        sel: &[usize],
        start: usize,
        depth: usize,
        combo: &mut Vec<usize>,
        boxes: &[SupportBox],
        n_ov: usize,
    ) -> bool {
        if depth == n_ov {
            return !share_interior_point(combo, boxes);
        }
        for pos in start..sel.len() {
            combo[depth] = sel[pos];
            if !rec(sel, pos + 1, depth + 1, combo, boxes, n_ov) {
                return false;
            }
        }
        true
    }
    if sel.len() < n_ov {
        return true;
    }
    rec(sel, 0, 0, &mut combo, boxes, n_ov)
}

fn selection_admissible(sel: &[usize], boxes: &[SupportBox], n_ov: usize) -> bool {
    for (pos, &i) in sel.iter().enumerate() {
        if !addition_admissible(&sel[..pos], i, boxes, n_ov) {
            return false;
        }
    }
    true
}

/// Greedy bounded-overlap selection: weights descending (ties toward the
/// smaller index), each candidate added when it keeps the multiplicity bound.
/// Nonpositive weights are never selected. Documented surrogate for the true
/// sup; within a constant of the optimum on candidate lattices where only
/// adjacent packets overlap, and exact when no overlap constraint binds.
pub fn select_bounded_overlap_greedy(
    weights: &[f64],
    boxes: &[SupportBox],
    n_ov: usize,
) -> Vec<usize> {
    assert_eq!(weights.len(), boxes.len());
    let mut order: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    let mut sel: Vec<usize> = Vec::new();
    for i in order {
        if addition_admissible(&sel, i, boxes, n_ov) {
            sel.push(i);
        }
    }
    sel.sort_unstable();
    sel
}

/// Exhaustive bounded-overlap selection over all subsets (use for small
/// candidate sets only); deterministic tie-break toward the lexicographically
/// smaller index set.
pub fn select_bounded_overlap_exhaustive(
    weights: &[f64],
    boxes: &[SupportBox],
    n_ov: usize,
) -> Vec<usize> {
    assert_eq!(weights.len(), boxes.len());
    let pos: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
    let n = pos.len();
    assert!(n <= 20, "exhaustive selection capped at 20 candidates");
    let mut best: (f64, Vec<usize>) = (0.0, Vec::new());
    for mask in 0u32..(1u32 << n) {
        let sel: Vec<usize> = (0..n).filter(|&b| mask >> b & 1 == 1).map(|b| pos[b]).collect();
        if !selection_admissible(&sel, boxes, n_ov) {
            continue;
        }
        let score: f64 = sel.iter().map(|&i| weights[i]).sum();
        if score > best.0 || (score == best.0 && !best.1.is_empty() && sel < best.1) {
            best = (score, sel);
        }
    }
    best.1
}

/// Number of candidates up to which selection is exhaustive (and therefore
/// exact against the finite candidate set).
pub const EXHAUSTIVE_SELECTION_CAP: usize = 12;

/// Bounded-overlap selection: exhaustive (exact) for at most
/// [`EXHAUSTIVE_SELECTION_CAP`] positive-weight candidates, greedy beyond.
pub fn select_bounded_overlap(weights: &[f64], boxes: &[SupportBox], n_ov: usize) -> Vec<usize> {
    let positive = weights.iter().filter(|w| **w > 0.0).count();
    if positive <= EXHAUSTIVE_SELECTION_CAP {
        select_bounded_overlap_exhaustive(weights, boxes, n_ov)
    } else {
        select_bounded_overlap_greedy(weights, boxes, n_ov)
    }
}

// ---------------------------------------------------------------------------
// Cluster score
// ---------------------------------------------------------------------------

/// Outcome of the cluster selection: the summed score and the members.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSelection {
    /// Σ A_{j,m} over the selected family.
    pub score: f64,
    pub members: Vec<ClusterMember>,
}

/// Minimum of G over grid nodes inside the packet's support box (None when
/// the box holds no nodes).
fn packet_min_g(g: &ScalarField, p: &DyadicPacket) -> Option<f64> {
    let spec = g.spec();
    let ((x_lo, x_hi), (w_lo, w_hi)) = p.support_box();
    let (y_lo, y_hi) = (w_lo * x_lo, w_hi * x_hi);
    let mut min_g: Option<f64> = None;
    for i in (0..spec.nr).rev() {
        let x = spec.x(i);
        if x > x_hi {
            break;
        }
        if x < x_lo || x == 0.0 {
            continue;
        }
        for k in 0..spec.nz {
            let y = spec.z(k);
            if y < y_lo || y > y_hi {
                continue;
            }
            let w = y / x;
            if w < w_lo || w > w_hi {
                continue;
            }
            let v = g.get(i, k);
            min_g = Some(min_g.map_or(v, |m: f64| m.min(v)));
        }
    }
    min_g
}

/// Enumerates the candidate lattice, keeps sign-coherent packets with
/// positive projected G-slope, and selects a bounded-overlap family
/// maximizing Σ A_{j,m} (exhaustive for small candidate sets, greedy
/// beyond). Candidates the grid cannot resolve are skipped.
pub fn cluster_score(
    gamma: &ScalarField,
    g: &ScalarField,
    state: &ClusterState,
) -> Result<ClusterSelection> {
    if gamma.spec() != g.spec() {
        return Err(Error::GridMismatch(
            "cluster score: Gamma and G on different grids".into(),
        ));
    }
    let sign_floor = -SIGN_TOL_REL * g.max_abs();
    let mut cands: Vec<ClusterMember> = Vec::new();
    for packet in state.candidate_lattice() {
        let amps = match projected_amplitudes(gamma, g, &packet) {
            Ok(a) => a,
            Err(Error::UnresolvedPacket(_)) | Err(Error::InvalidParameter(_)) => continue,
            Err(e) => return Err(e),
        };
        if !(amps.a > 0.0) {
            continue;
        }
        match packet_min_g(g, &packet) {
            Some(min_g) if min_g >= sign_floor => {}
            _ => continue,
        }
        cands.push(ClusterMember { packet, amps });
    }
    let weights: Vec<f64> = cands.iter().map(|c| c.amps.big_a).collect();
    let boxes: Vec<SupportBox> = cands.iter().map(|c| SupportBox::of(&c.packet)).collect();
    let sel = select_bounded_overlap(&weights, &boxes, state.n_overlap);
    let members: Vec<ClusterMember> = sel.iter().map(|&i| cands[i]).collect();
    let score = members.iter().map(|m| m.amps.big_a).sum();
    Ok(ClusterSelection { score, members })
}

// ---------------------------------------------------------------------------
// Coherence matrix and coherent component
// ---------------------------------------------------------------------------

/// Pairwise compression coefficients K_ij: the strain at packet i's wall
/// anchor generated by a unit-slope source ζ·χ_j² on packet j, normalized by
/// λ_j so that K_ij·A_j (with A_j = λ_j·a_j) is the compression share of
/// packet j. Exactly invariant under joint rescaling of all packets (kernel
/// degree −2 cancels the source, measure, and normalization degrees).
///
/// The anchor sits a tenth of packet i's angular shadow toward the
/// stagnation point: y_i = 0.1·(1.5·λ_i·m_i).
pub fn coherence_matrix(members: &[DyadicPacket]) -> Result<Vec<Vec<f64>>> {
    if members.is_empty() {
        return Err(Error::InvalidParameter(
            "coherence matrix needs a nonempty member list".into(),
        ));
    }
    let n = members.len();
    let mut k = vec![vec![0.0; n]; n];
    for (jj, src) in members.iter().enumerate() {
        let ((x_lo, x_hi), (w_lo, w_hi)) = src.support_box();
        let nq = COHERENCE_QUAD_N;
        let hx = (x_hi - x_lo) / nq as f64;
        let hw = (w_hi - w_lo) / nq as f64;
        for (ii, obs) in members.iter().enumerate() {
            let y_obs = 0.1 * (1.5 * obs.lambda_j * obs.m);
            let mut total = 0.0;
            for p in 0..nq {
                let xi = x_lo + (p as f64 + 0.5) * hx;
                for q in 0..nq {
                    let w = w_lo + (q as f64 + 0.5) * hw;
                    let zeta = w * xi;
                    let chi = src.cutoff(xi, zeta);
                    if chi == 0.0 {
                        continue;
                    }
                    total += wall_kernel_shifted_odd(y_obs, xi, zeta) * zeta * chi * chi * xi;
                }
            }
            k[ii][jj] = total * hx * hw / src.lambda_j;
        }
    }
    Ok(k)
}

/// The principal uniformly coherent component and its paired score.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentComponent {
    /// Indices into the member list (sorted ascending); empty when no
    /// feasible subset has positive paired score.
    pub members: Vec<usize>,
    /// A_* = Σ A_i over the component.
    pub a_star: f64,
    /// B_* = (Σ B_i²)^{1/2} ≥ 0.
    pub b_star: f64,
    /// The maximized functional A_*·B_* + B_*².
    pub score: f64,
}

fn paired_score(ids: &[usize], amps: &[PacketAmplitudes]) -> (f64, f64, f64) {
    let a_star: f64 = ids.iter().map(|&i| amps[i].big_a).sum();
    let b2: f64 = ids.iter().map(|&i| amps[i].big_b * amps[i].big_b).sum();
    let b_star = b2.sqrt();
    (a_star, b_star, a_star * b_star + b2)
}

fn pairwise_coherent(ids: &[usize], k: &[Vec<f64>], k_star: f64) -> bool {
    ids.iter()
        .all(|&i| ids.iter().all(|&j| k[i][j] >= k_star))
}

/// Selects the subset with all pairwise (and diagonal) coherence entries
/// ≥ k_* that maximizes A_*B_* + B_*². Exhaustive for ≤ 15 members (exact
/// against the member list); greedy best-addition beyond, with its feasibility
/// checked exhaustively over the chosen subset's pairs. Ties break toward the
/// lexicographically smaller index set; the empty set (zero score) is the
/// baseline, so a result is nonempty only when some feasible subset scores
/// positively.
pub fn coherent_component(
    amps: &[PacketAmplitudes],
    k: &[Vec<f64>],
    k_star: f64,
) -> Result<CoherentComponent> {
    if k.len() != amps.len() || k.iter().any(|row| row.len() != amps.len()) {
        return Err(Error::InvalidParameter(
            "coherence matrix shape does not match the member list".into(),
        ));
    }
    if !(k_star > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "coherence threshold k_star = {k_star} must be positive"
        )));
    }
    let n = amps.len();
    let mut best: (f64, Vec<usize>) = (0.0, Vec::new());
    if n <= 15 {
        for mask in 0u32..(1u32 << n) {
            let ids: Vec<usize> = (0..n).filter(|&b| mask >> b & 1 == 1).collect();
            if ids.is_empty() || !pairwise_coherent(&ids, k, k_star) {
                continue;
            }
            let (_, _, score) = paired_score(&ids, amps);
            if score > best.0 || (score == best.0 && !best.1.is_empty() && ids < best.1) {
                best = (score, ids);
            }
        }
    } else {
        // Greedy best-addition from the empty set.
        let mut current: Vec<usize> = Vec::new();
        loop {
            let mut gain: Option<(f64, usize)> = None;
            for cand in 0..n {
                if current.contains(&cand) {
                    continue;
                }
                let mut trial = current.clone();
                trial.push(cand);
                trial.sort_unstable();
                if !pairwise_coherent(&trial, k, k_star) {
                    continue;
                }
                let (_, _, score) = paired_score(&trial, amps);
                let cur = paired_score(&current, amps).2;
                if score > cur {
                    let better = match gain {
                        None => true,
                        Some((gscore, gidx)) => {
                            score > gscore || (score == gscore && cand < gidx)
                        }
                    };
                    if better {
                        gain = Some((score, cand));
                    }
                }
            }
            match gain {
                Some((_, idx)) => {
                    current.push(idx);
                    current.sort_unstable();
                }
                None => break,
            }
        }
        let (_, _, score) = paired_score(&current, amps);
        if score > 0.0 {
            best = (score, current);
        }
    }
    let (a_star, b_star, score) = paired_score(&best.1, amps);
    Ok(CoherentComponent {
        members: best.1,
        a_star,
        b_star,
        score,
    })
}

// ---------------------------------------------------------------------------
// Campanato defect and anisotropy
// ---------------------------------------------------------------------------

/// Sup over cluster-member grid nodes of |u(X) − L X| / (|σ||X|) with the
/// affine hyperbolic model L X = (σx, −σy) in flattened components
/// u = (−u^r, u^z). Nodes are those inside the members' nominal boxes.
pub fn campanato_defect(v: &Velocity, sigma: f64, state: &ClusterState) -> Result<f64> {
    if sigma == 0.0 {
        return Err(Error::InvalidParameter(
            "affine model degenerate: sigma = 0".into(),
        ));
    }
    let spec = v.spec();
    let mut worst = 0.0_f64;
    for member in &state.members {
        let ((x_lo, x_hi), (w_lo, w_hi)) = {
            let (x, w) = member.packet.nominal_box();
            (x, w)
        };
        for i in (0..spec.nr).rev() {
            let x = spec.x(i);
            if x > x_hi {
                break;
            }
            if x < x_lo || x == 0.0 {
                continue;
            }
            for k in 0..spec.nz {
                let y = spec.z(k);
                let w = y / x;
                if w < w_lo || w > w_hi {
                    continue;
                }
                let ux = -v.ur.get(i, k);
                let uy = v.uz.get(i, k);
                let dx = ux - sigma * x;
                let dy = uy + sigma * y;
                let defect = (dx * dx + dy * dy).sqrt()
                    / (sigma.abs() * (x * x + y * y).sqrt());
                worst = worst.max(defect);
            }
        }
    }
    Ok(worst)
}

/// Core anisotropy and shear diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnisotropyReport {
    /// Sup over the inner core of |∂_rΓ/∂_zΓ| above the slope floor.
    pub r_max: f64,
    /// Sup over the inner core of |∂_r u^z|.
    pub shear_max: f64,
    /// σ = −∂_z u^z at the wall stagnation point, for normalization.
    pub sigma_ref: f64,
}

/// Evaluates the radial-swirl anisotropy and off-diagonal shear over the
/// inner core {x + |y| ≤ κλ}. Errors when ∂_zΓ is under the relative floor
/// on the whole core (the ratio is undefined everywhere).
pub fn anisotropy_and_shear(
    gamma: &ScalarField,
    v: &Velocity,
    lambda: f64,
    kappa: f64,
) -> Result<AnisotropyReport> {
    let spec = gamma.spec();
    if v.spec() != spec {
        return Err(Error::GridMismatch(
            "anisotropy: Gamma and velocity on different grids".into(),
        ));
    }
    if !(lambda > 0.0 && kappa > 0.0 && kappa < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "anisotropy needs lambda > 0 and 0 < kappa < 1; got ({lambda}, {kappa})"
        )));
    }
    let r_max = core_anisotropy(gamma, lambda, kappa).ok_or_else(|| {
        Error::DegeneratePacket(
            "swirl slope ∂_zΓ under the floor on the entire inner core".into(),
        )
    })?;
    let bound = kappa * lambda;
    let mut shear_max = 0.0_f64;
    for i in (0..spec.nr).rev() {
        if spec.x(i) > bound {
            break;
        }
        for k in 0..spec.nz {
            if spec.x(i) + spec.z(k).abs() <= bound {
                shear_max = shear_max.max(dr2(&v.uz, i, k).abs());
            }
        }
    }
    let sigma_ref = -dz4_row(v.uz.row(spec.wall()), spec.z_zero(), spec.dz());
    Ok(AnisotropyReport {
        r_max,
        shear_max,
        sigma_ref,
    })
}
