//! Discrete energy accounting, error norms and convergence rates.
//!
//! The stored energy of a level is
//!
//! ```text
//! S^n = |eta|_S^2 + rho_s |q|^2 + rho_f |u|^2 + dt (alpha |u|_Sigma^2 + |lambda|_Sigma^2 / alpha)
//! ```
//!
//! and one step of the loosely coupled scheme dissipates
//!
//! ```text
//! D^{n+1} = rho_f |u^{n+1} - u^n|^2 + 2 dt a_mu(u^{n+1}, u^{n+1})
//!         + 2 dt beta_p h^2 |grad p^{n+1}|^2 + alpha dt |q^{n+1/2} - u^n|_Sigma^2
//! ```
//!
//! so that `S^M + sum_{m<=M} D^m = S^0` holds exactly for unforced runs.
//! Every quadratic form is evaluated with the assembled matrices, so the
//! balance is checked against the scheme's own operators. `|eta|_S` uses
//! `K_e + c0 M`.

use crate::error::SolverError;
use crate::mesh::Mesh;
use crate::problem::{CoupledState, Problem};
use crate::sparse::SparseMatrix;
use crate::splitting::midpoint;

/// Stored discrete energy of one level.
pub fn energy_snapshot(problem: &Problem, state: &CoupledState, dt: f64) -> f64 {
    let p = &problem.params;
    let ms = &problem.interface.m_sigma;
    let ut = problem.fluid_dofs.trace_of(&state.u);
    mechanical_energy(problem, state) + dt * (p.alpha * ms.quad_form(&ut) + ms.quad_form(&state.lambda) / p.alpha)
}

/// `|eta|_S^2 + rho_s |q|^2 + rho_f |u|^2`, without interface terms.
pub fn mechanical_energy(problem: &Problem, state: &CoupledState) -> f64 {
    let p = &problem.params;
    problem.stiffness.quad_form(&state.eta)
        + p.rho_s * problem.solid.mass.quad_form(&state.q)
        + p.rho_f * problem.fluid.mass.quad_form(&state.u)
}

/// The four dissipation terms of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dissipation {
    pub kinetic: f64,
    pub viscous: f64,
    pub pressure: f64,
    pub interface: f64,
}

impl Dissipation {
    pub fn total(&self) -> f64 {
        self.kinetic + self.viscous + self.pressure + self.interface
    }

    pub fn is_nonnegative(&self) -> bool {
        [self.kinetic, self.viscous, self.pressure, self.interface].iter().all(|v| *v >= 0.0)
    }
}

pub fn dissipation(problem: &Problem, prev: &CoupledState, next: &CoupledState, dt: f64) -> Dissipation {
    let p = &problem.params;
    let du: Vec<f64> = next.u.iter().zip(&prev.u).map(|(a, b)| a - b).collect();
    let q_half = problem.solid_dofs.trace_of(&midpoint(&next.q, &prev.q));
    let u_old = problem.fluid_dofs.trace_of(&prev.u);
    let slip: Vec<f64> = q_half.iter().zip(&u_old).map(|(a, b)| a - b).collect();
    Dissipation {
        kinetic: p.rho_f * problem.fluid.mass.quad_form(&du),
        viscous: 2.0 * dt * problem.fluid.viscous.quad_form(&next.u),
        pressure: 2.0
            * dt
            * problem.fluid.stabilization(p.beta_p)
            * problem.fluid.pressure_laplacian.quad_form(&next.p),
        interface: p.alpha * dt * problem.interface.m_sigma.quad_form(&slip),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry {
    pub n: usize,
    pub t: f64,
    pub s: f64,
    /// Dissipation of the step ending at level `n` (0 for the initial level).
    pub d: f64,
    /// `S_n + sum_{m<=n} D_m - S_0`.
    pub residual: f64,
    pub terms_nonnegative: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyLedger {
    pub entries: Vec<LedgerEntry>,
    cumulative: f64,
}

impl EnergyLedger {
    pub fn new(problem: &Problem, initial: &CoupledState, dt: f64) -> Self {
        let s = energy_snapshot(problem, initial, dt);
        Self {
            entries: vec![LedgerEntry {
                n: initial.level,
                t: initial.t,
                s,
                d: 0.0,
                residual: 0.0,
                terms_nonnegative: true,
            }],
            cumulative: 0.0,
        }
    }

    pub fn initial_energy(&self) -> f64 {
        self.entries.first().map_or(0.0, |e| e.s)
    }

    pub fn record(&mut self, problem: &Problem, prev: &CoupledState, next: &CoupledState, dt: f64) -> LedgerEntry {
        let s = energy_snapshot(problem, next, dt);
        let d = dissipation(problem, prev, next, dt);
        self.cumulative += d.total();
        let entry = LedgerEntry {
            n: next.level,
            t: next.t,
            s,
            d: d.total(),
            residual: s + self.cumulative - self.initial_energy(),
            terms_nonnegative: d.is_nonnegative(),
        };
        self.entries.push(entry);
        entry
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub passed: bool,
    pub max_relative_residual: f64,
    /// First level whose residual exceeds the tolerance or whose dissipation
    /// has a negative term.
    pub first_violation: Option<usize>,
}

/// Checks `max_n |residual_n| / S_0 <= tol`.
pub fn check_energy_identity(ledger: &EnergyLedger, tol: f64) -> IdentityCheck {
    let scale = ledger.initial_energy().max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    let mut first_violation = None;
    for e in &ledger.entries {
        let rel = e.residual.abs() / scale;
        if !rel.is_finite() || rel > tol || !e.terms_nonnegative {
            first_violation.get_or_insert(e.n);
        }
        worst = worst.max(if rel.is_finite() { rel } else { f64::INFINITY });
    }
    IdentityCheck { passed: first_violation.is_none(), max_relative_residual: worst, first_violation }
}

/// Relative energy-norm error `|a - b|_K / |a|_K` with `a` as reference.
pub fn elastic_error(eta_ref: &[f64], eta: &[f64], elastic: &SparseMatrix) -> Result<f64, SolverError> {
    let norm_ref = elastic.quad_form(eta_ref);
    if !(norm_ref > 0.0) {
        return Err(SolverError::Diagnostics("reference displacement has zero energy norm".into()));
    }
    let diff: Vec<f64> = eta_ref.iter().zip(eta).map(|(a, b)| a - b).collect();
    Ok((elastic.quad_form(&diff).max(0.0) / norm_ref).sqrt())
}

/// P1 interpolation of a vector field on a structured `AllRightUp` grid at
/// the vertices of another mesh.
pub fn prolong(coarse: &Mesh, values: &[f64], fine: &Mesh) -> Vec<f64> {
    let r = coarse.rect;
    let dx = (r.x1 - r.x0) / coarse.nx as f64;
    let dy = (r.y1 - r.y0) / coarse.ny as f64;
    let mut out = Vec::with_capacity(2 * fine.n_vertices());
    for p in &fine.vertices {
        let fx = ((p[0] - r.x0) / dx).clamp(0.0, coarse.nx as f64);
        let fy = ((p[1] - r.y0) / dy).clamp(0.0, coarse.ny as f64);
        let i = (fx.floor() as usize).min(coarse.nx - 1);
        let j = (fy.floor() as usize).min(coarse.ny - 1);
        let (xi, zeta) = (fx - i as f64, fy - j as f64);
        let v = |a: usize, b: usize, c: usize| values[2 * coarse.grid_index(a, b) + c];
        for c in 0..2 {
            let (v00, v10, v01, v11) = (v(i, j, c), v(i + 1, j, c), v(i, j + 1, c), v(i + 1, j + 1, c));
            let val = if zeta <= xi {
                v00 + xi * (v10 - v00) + zeta * (v11 - v10)
            } else {
                v00 + zeta * (v01 - v00) + xi * (v11 - v01)
            };
            out.push(val);
        }
    }
    out
}

/// Observed rates `log2(e_i / e_{i+1})` for a halving refinement family.
pub fn convergence_table(errors: &[f64]) -> Result<Vec<f64>, SolverError> {
    if errors.len() < 2 {
        return Err(SolverError::Diagnostics("need at least two refinement levels".into()));
    }
    if errors.iter().any(|e| !(*e > 0.0)) {
        return Err(SolverError::Diagnostics("errors must be positive".into()));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}
