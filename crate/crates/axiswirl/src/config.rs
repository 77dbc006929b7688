//! Run configuration: one structured-text (TOML) document with sections,
//! strict validation, and bit-exact serialization round-trips.
//!
//! Every floating value is printed in Rust's shortest-round-trip form, so
//! `parse(serialize(c)) == c` holds bit-for-bit; the determinism contract of
//! the command-line tools rests on this.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::{Error, Result};

/// Grid shape for the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Radial nodes (wall node included).
    pub nr: usize,
    /// Axial nodes (even).
    pub nz: usize,
    /// Axial period.
    pub z_period: f64,
}

/// Mechanism parameters: scales, cone widths, shrink exponents, window
/// growth, and the admissibility tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    /// Initial compression scale λ₀ (also the packet scale).
    pub lambda0: f64,
    /// Diagonal cone half-width δ_c for conic masses and packets.
    pub delta_c: f64,
    /// Initial cluster angular half-width δ₀.
    pub delta0: f64,
    /// Scale-shrink exponent μ (cluster scale λ_μ = λ₀e^{−(1+μ)S}).
    pub mu: f64,
    /// Angle-shrink exponent ν (δ_ν = δ₀e^{−νS}); requires 0 < ν < μ < 1.
    pub nu: f64,
    /// Dyadic-window growth rate κ in J = J_* + ⌊κS/ln2⌋; 0 < κ < 1+μ.
    pub kappa_window: f64,
    /// Inner-core fraction κ for traces and the affine-model defect; in (0,1).
    pub kappa_core: f64,
    /// Initial dyadic window depth J_*.
    pub j_star: usize,
    /// Coherence threshold k_* for the pairwise compression matrix.
    pub k_star: f64,
    /// Tail-ratio tolerance η.
    pub eta: f64,
    /// Linear-core relative-deviation tolerance δ.
    pub delta_lin: f64,
    /// Anisotropy tolerance ε.
    pub eps_aniso: f64,
    /// Source-dominance constant C_* in B(0)² ≥ C_*·M²..
    pub c_star: f64,
    /// Bounded-overlap constant N_ov for cluster selection.
    pub n_overlap: usize,
}

/// Initial-data amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeSection {
    /// Forced-slope amplitude α of the vorticity-ratio packet.
    pub alpha: f64,
    /// Swirl-slope amplitude β; omit to let the generator solve the
    /// dominance clause with its safety factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

/// Time-integration controls and stopping ceilings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSection {
    /// Final time T.
    pub t_final: f64,
    /// CFL target (fraction of the cell-crossing time).
    pub cfl: f64,
    /// Strain cap: dt is also limited so that gradUinf·dt stays below this.
    /// Near a stagnation point the advective CFL alone admits steps with a
    /// large per-step compression factor, which degrades the trace-identity
    /// residuals; this bounds the compression per step instead.
    pub strain_cap: f64,
    /// Stop when B(t) ≥ growth_ceiling · B(0).
    pub growth_ceiling: f64,
    /// Stop when the velocity-gradient sup exceeds this ceiling.
    pub grad_ceiling: f64,
    /// Stop when λ(t) < lambda_floor_cells · max(Δr, Δz).
    pub lambda_floor_cells: f64,
    /// Abort when the stable step falls under this.
    pub dt_min: f64,
    /// Evaluate the expensive monitors every this many steps.
    pub monitor_every: usize,
    /// Seed for any randomized sampling (kernel spot checks).
    pub seed: u64,
}

/// Output locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Directory for CSV/JSON/snapshot outputs.
    pub out_dir: String,
    /// Basename prefix for emitted files.
    pub prefix: String,
}

/// Complete configuration for a laboratory run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSection,
    pub physics: PhysicsSection,
    pub amplitudes: AmplitudeSection,
    pub integration: IntegrationSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            grid: GridSection {
                nr: 256,
                nz: 512,
                z_period: std::f64::consts::PI,
            },
            physics: PhysicsSection {
                // 16 grid cells per λ₀ on the default 256×512 grid (the
                // resolution floor of the packet generator).
                lambda0: 0.1,
                delta_c: 0.1,
                delta0: 0.1,
                mu: 0.5,
                nu: 0.25,
                kappa_window: 0.5,
                kappa_core: 0.5,
                j_star: 2,
                k_star: 0.05,
                eta: 0.01,
                delta_lin: 0.1,
                eps_aniso: 0.15,
                c_star: 1.0,
                n_overlap: 2,
            },
            amplitudes: AmplitudeSection {
                alpha: 1.0,
                beta: None,
            },
            integration: IntegrationSection {
                t_final: 0.5,
                cfl: 0.4,
                strain_cap: 0.02,
                growth_ceiling: 100.0,
                grad_ceiling: 1.0e4,
                lambda_floor_cells: 8.0,
                dt_min: 1.0e-8,
                monitor_every: 1,
                seed: 20120,
            },
            output: OutputSection {
                out_dir: "out".into(),
                prefix: "run".into(),
            },
        }
    }
}

macro_rules! require {
    ($cond:expr, $($msg:tt)*) => {
        if !($cond) {
            return Err(Error::Config(format!($($msg)*)));
        }
    };
}

impl RunConfig {
    /// Validates every constraint of the parameter hierarchy; the message of
    /// a rejection cites the violated constraint.
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        crate::grid::make_grid(g.nr, g.nz, g.z_period)
            .map_err(|e| Error::Config(format!("grid section: {e}")))?;

        let p = &self.physics;
        require!(
            p.lambda0 > 0.0 && p.lambda0 < 1.0,
            "lambda0 = {} violates 0 < lambda0 < 1",
            p.lambda0
        );
        require!(
            p.delta_c > 0.0 && p.delta_c < 1.0,
            "delta_c = {} violates 0 < delta_c < 1",
            p.delta_c
        );
        require!(
            p.delta0 > 0.0 && p.delta0 < 1.0,
            "delta0 = {} violates 0 < delta0 < 1",
            p.delta0
        );
        require!(
            p.nu > 0.0 && p.nu < p.mu && p.mu < 1.0,
            "(nu, mu) = ({}, {}) violates 0 < nu < mu < 1",
            p.nu,
            p.mu
        );
        require!(
            p.kappa_window > 0.0 && p.kappa_window < 1.0 + p.mu,
            "kappa_window = {} violates 0 < kappa_window < 1 + mu = {}",
            p.kappa_window,
            1.0 + p.mu
        );
        require!(
            p.kappa_core > 0.0 && p.kappa_core < 1.0,
            "kappa_core = {} violates 0 < kappa_core < 1",
            p.kappa_core
        );
        require!(p.k_star > 0.0, "k_star = {} violates k_star > 0", p.k_star);
        require!(p.eta > 0.0, "eta = {} violates eta > 0", p.eta);
        require!(
            p.delta_lin > 0.0,
            "delta_lin = {} violates delta_lin > 0",
            p.delta_lin
        );
        require!(
            p.eps_aniso > 0.0,
            "eps_aniso = {} violates eps_aniso > 0",
            p.eps_aniso
        );
        require!(p.c_star > 0.0, "c_star = {} violates c_star > 0", p.c_star);
        require!(
            p.n_overlap >= 1,
            "n_overlap = {} violates n_overlap >= 1",
            p.n_overlap
        );

        let a = &self.amplitudes;
        require!(a.alpha > 0.0, "alpha = {} violates alpha > 0", a.alpha);
        if let Some(beta) = a.beta {
            require!(
                beta.is_finite(),
                "beta = {beta} must be finite when given"
            );
        }

        let t = &self.integration;
        require!(
            t.t_final > 0.0,
            "t_final = {} violates t_final > 0",
            t.t_final
        );
        require!(
            t.cfl > 0.0 && t.cfl <= 1.0,
            "cfl = {} violates 0 < cfl <= 1",
            t.cfl
        );
        require!(
            t.strain_cap > 0.0,
            "strain_cap = {} violates strain_cap > 0",
            t.strain_cap
        );
        require!(
            t.growth_ceiling > 1.0,
            "growth_ceiling = {} violates growth_ceiling > 1",
            t.growth_ceiling
        );
        require!(
            t.grad_ceiling > 0.0,
            "grad_ceiling = {} violates grad_ceiling > 0",
            t.grad_ceiling
        );
        require!(
            t.lambda_floor_cells > 0.0,
            "lambda_floor_cells = {} violates lambda_floor_cells > 0",
            t.lambda_floor_cells
        );
        require!(t.dt_min > 0.0, "dt_min = {} violates dt_min > 0", t.dt_min);
        require!(
            t.monitor_every >= 1,
            "monitor_every = {} violates monitor_every >= 1",
            t.monitor_every
        );
        Ok(())
    }

    /// Parses and validates a TOML document.
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(s).map_err(|e| Error::Config(format!("parse failure: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serializes to TOML; floats use shortest-round-trip formatting, so the
    /// output re-parses to a bit-identical configuration.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("serialize failure: {e}")))
    }

    /// Loads and validates a config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    /// Writes the config to a file.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_toml_string()?)?;
        Ok(())
    }
}
