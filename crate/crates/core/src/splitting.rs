//! Robin-based loosely coupled time stepping.
//!
//! One time level runs the solid midpoint step with Robin data built from the
//! previous fluid velocity and interface traction, then the backward-Euler
//! fluid step with Robin data built from the fresh solid velocity, then the
//! nodal traction update
//! `lambda^{n+1} = lambda^n + alpha (q^{n+1/2} - u^{n+1})` on the interface.
//!
//! Optional correction sweeps repeat the three stages inside the same time
//! level (Robin-Robin Gauss-Seidel), feeding back the latest fluid trace and
//! traction. Their fixed point is the monolithic solution of the level.

use crate::assembly::{fluid_saddle_matrix, PressureMode};
use crate::error::SolverError;
use crate::problem::{CoupledState, Problem};
use crate::sparse::{Factorization, SparseMatrix, DEFAULT_TOL};

/// Uniform time partition of `[0, dt * n_steps]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, n_steps: usize) -> Option<Self> {
        (dt > 0.0 && dt.is_finite()).then_some(Self { dt, n_steps })
    }

    /// Smallest grid with step `dt` reaching `final_time` (within rounding).
    pub fn covering(dt: f64, final_time: f64) -> Option<Self> {
        let n = (final_time / dt - 1e-9).ceil().max(0.0) as usize;
        Self::new(dt, n)
    }

    pub fn final_time(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    pub fn time(&self, level: usize) -> f64 {
        self.dt * level as f64
    }
}

/// A scheme advancing a [`CoupledState`] by one time level.
pub trait TimeStepper {
    fn dt(&self) -> f64;

    /// Advances `state` to the next level under inlet pressure `p_in`
    /// (evaluated at the new time).
    fn step(&self, state: &CoupledState, p_in: f64) -> Result<CoupledState, SolverError>;
}

/// `lambda_old + alpha (q_half - u_new)`, nodewise on the trace dofs.
pub fn multiplier_update_pointwise(
    lambda_old: &[f64],
    q_half_trace: &[f64],
    u_new_trace: &[f64],
    alpha: f64,
) -> Vec<f64> {
    lambda_old.iter().zip(q_half_trace.iter().zip(u_new_trace)).map(|(l, (q, u))| l + alpha * (q - u)).collect()
}

pub fn midpoint(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()
}

/// Factorized subproblem matrices of the loosely coupled scheme for one `dt`.
pub struct LooseCoupling<'a> {
    problem: &'a Problem,
    dt: f64,
    n_corrections: usize,
    solid: Factorization,
    fluid: Factorization,
}

impl<'a> LooseCoupling<'a> {
    pub fn new(problem: &'a Problem, dt: f64, n_corrections: usize) -> Result<Self, SolverError> {
        let solid = Factorization::cholesky(solid_step_matrix(problem, dt)?, DEFAULT_TOL)?;
        let p = &problem.params;
        let fluid_matrix = fluid_saddle_matrix(
            &problem.fluid,
            &problem.fluid_dofs,
            p.rho_f / dt,
            Some((p.alpha, &problem.interface.b_f)),
            p.beta_p,
            PressureMode::Free,
        )?;
        let fluid = Factorization::lu(fluid_matrix, DEFAULT_TOL)?;
        Ok(Self { problem, dt, n_corrections, solid, fluid })
    }

    pub fn n_corrections(&self) -> usize {
        self.n_corrections
    }

    /// Solid midpoint step with Robin data `(u_trace, lambda)`.
    ///
    /// Solves for `q^{n+1}` and recovers `eta^{n+1} = eta^n + dt/2 (q^{n+1} + q^n)`.
    pub fn solid_step(
        &self,
        state: &CoupledState,
        u_trace: &[f64],
        lambda: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>), SolverError> {
        let pb = self.problem;
        let p = &pb.params;
        let dt = self.dt;
        let dofs = &pb.solid_dofs;
        let mut rhs = pb.solid.mass.apply(&state.q);
        rhs.iter_mut().for_each(|v| *v *= p.rho_s / dt);
        let eta_pred: Vec<f64> = state.eta.iter().zip(&state.q).map(|(e, q)| e + 0.25 * dt * q).collect();
        pb.stiffness.apply_add(-1.0, &eta_pred, &mut rhs);
        let q_trace = dofs.trace_of(&state.q);
        let robin: Vec<f64> =
            (0..lambda.len()).map(|k| p.alpha * u_trace[k] - 0.5 * p.alpha * q_trace[k] - lambda[k]).collect();
        pb.interface.solid_coupling.apply_add(1.0, &robin, &mut rhs);
        let q_new =
            dofs.extend(&self.solid.solve(&dofs.restrict(&rhs)).map_err(SolverError::at_level(state.level + 1))?);
        let eta_new =
            state.eta.iter().zip(q_new.iter().zip(&state.q)).map(|(e, (qn, qo))| e + 0.5 * dt * (qn + qo)).collect();
        Ok((q_new, eta_new))
    }

    /// Backward-Euler fluid step with Robin data `(q_half_trace, lambda)`.
    pub fn fluid_step(
        &self,
        state: &CoupledState,
        q_half_trace: &[f64],
        lambda: &[f64],
        p_in: f64,
    ) -> Result<(Vec<f64>, Vec<f64>), SolverError> {
        let pb = self.problem;
        let p = &pb.params;
        let dofs = &pb.fluid_dofs;
        let mut rhs_u = pb.fluid.mass.apply(&state.u);
        rhs_u.iter_mut().zip(&pb.inlet_unit_load).for_each(|(v, l)| *v = *v * p.rho_f / self.dt + p_in * l);
        let robin: Vec<f64> = q_half_trace.iter().zip(lambda).map(|(q, l)| p.alpha * q + l).collect();
        pb.interface.fluid_coupling.apply_add(1.0, &robin, &mut rhs_u);
        let mut rhs = dofs.restrict(&rhs_u);
        let nu = rhs.len();
        rhs.resize(nu + pb.n_pressure(), 0.0);
        let x = self.fluid.solve(&rhs).map_err(SolverError::at_level(state.level + 1))?;
        Ok((dofs.extend(&x[..nu]), x[nu..].to_vec()))
    }

    /// One (solid, fluid, traction) sweep using the interface data
    /// `(u_trace, lambda)`; returns the new level.
    fn sweep(
        &self,
        state: &CoupledState,
        u_trace: &[f64],
        lambda: &[f64],
        p_in: f64,
    ) -> Result<CoupledState, SolverError> {
        let pb = self.problem;
        let (q, eta) = self.solid_step(state, u_trace, lambda)?;
        let q_half_trace = pb.solid_dofs.trace_of(&midpoint(&q, &state.q));
        let (u, p) = self.fluid_step(state, &q_half_trace, lambda, p_in)?;
        let u_trace_new = pb.fluid_dofs.trace_of(&u);
        let lambda_new = multiplier_update_pointwise(lambda, &q_half_trace, &u_trace_new, pb.params.alpha);
        Ok(CoupledState { u, p, q, eta, lambda: lambda_new, t: state.t + self.dt, level: state.level + 1 })
    }

    pub fn advance(&self, state: &CoupledState, p_in: f64, n_corrections: usize) -> Result<CoupledState, SolverError> {
        let pb = self.problem;
        let mut next = self.sweep(state, &pb.fluid_dofs.trace_of(&state.u), &state.lambda, p_in)?;
        for _ in 0..n_corrections {
            let u_trace = pb.fluid_dofs.trace_of(&next.u);
            let lambda = next.lambda.clone();
            next = self.sweep(state, &u_trace, &lambda, p_in)?;
        }
        Ok(next)
    }
}

impl TimeStepper for LooseCoupling<'_> {
    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, state: &CoupledState, p_in: f64) -> Result<CoupledState, SolverError> {
        self.advance(state, p_in, self.n_corrections)
    }
}

/// Reduced solid matrix `rho_s/dt M + dt/4 (K_e + c0 M) + alpha/2 B_s`.
pub fn solid_step_matrix(problem: &Problem, dt: f64) -> Result<SparseMatrix, SolverError> {
    let p = &problem.params;
    let full = SparseMatrix::linear_combination(&[
        (p.rho_s / dt, &problem.solid.mass),
        (0.25 * dt, &problem.stiffness),
        (0.5 * p.alpha, &problem.interface.b_s),
    ])?;
    let free = problem.solid_dofs.free();
    Ok(full.submatrix(free, free))
}
