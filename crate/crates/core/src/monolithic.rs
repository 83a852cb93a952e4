//! Strongly coupled reference scheme.
//!
//! Same time discretizations as the loosely coupled scheme (midpoint solid,
//! backward-Euler fluid with pressure stabilization), but the kinematic
//! condition `<u^{n+1} - q^{n+1/2}, mu> = 0` is imposed implicitly with the
//! interface traction as a Lagrange multiplier. One block system per level:
//!
//! ```text
//! [ S_q   0     0     C_s ] [q  ]   [ rho_s/dt M q^n - K (eta^n + dt/4 q^n) ]
//! [ 0     F_u  -D^T  -C_f ] [u  ] = [ rho_f/dt M u^n + load                 ]
//! [ 0    -D    -tL    0   ] [p  ]   [ 0                                     ]
//! [ C_s^T/2 -C_f^T 0  0   ] [lam]   [ -C_s^T q^n / 2                        ]
//! ```

use crate::assembly::{fluid_saddle_matrix, PressureMode};
use crate::error::SolverError;
use crate::problem::{CoupledState, Problem};
use crate::sparse::{Factorization, SparseMatrix, Triplets, DEFAULT_TOL};
use crate::splitting::TimeStepper;

/// Block offsets of the monolithic unknown vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockLayout {
    pub solid: usize,
    pub fluid: usize,
    pub pressure: usize,
    pub traction: usize,
    pub total: usize,
}

pub struct MonolithicSystem<'a> {
    problem: &'a Problem,
    dt: f64,
    layout: BlockLayout,
    factor: Factorization,
}

impl<'a> MonolithicSystem<'a> {
    pub fn new(problem: &'a Problem, dt: f64) -> Result<Self, SolverError> {
        let p = &problem.params;
        let sfree = problem.solid_dofs.free();
        let ffree = problem.fluid_dofs.free();
        let ns = sfree.len();
        let nu = ffree.len();
        let np = problem.n_pressure();
        let nt = problem.n_trace();
        let layout =
            BlockLayout { solid: 0, fluid: ns, pressure: ns + nu, traction: ns + nu + np, total: ns + nu + np + nt };

        let solid =
            SparseMatrix::linear_combination(&[(p.rho_s / dt, &problem.solid.mass), (0.25 * dt, &problem.stiffness)])?
                .submatrix(sfree, sfree);
        let fluid =
            fluid_saddle_matrix(&problem.fluid, &problem.fluid_dofs, p.rho_f / dt, None, p.beta_p, PressureMode::Free)?;
        let all_trace: Vec<usize> = (0..nt).collect();
        let cs = problem.interface.solid_coupling.submatrix(sfree, &all_trace);
        let cf = problem.interface.fluid_coupling.submatrix(ffree, &all_trace);

        let n = layout.total;
        let mut t = Triplets::with_capacity(n, n, solid.nnz() + fluid.nnz() + 4 * cs.nnz() + 4 * cf.nnz());
        t.push_block(layout.solid, layout.solid, 1.0, &solid);
        t.push_block(layout.fluid, layout.fluid, 1.0, &fluid);
        t.push_block(layout.solid, layout.traction, 1.0, &cs);
        t.push_block(layout.fluid, layout.traction, -1.0, &cf);
        t.push_block(layout.traction, layout.solid, 0.5, &cs.transpose());
        t.push_block(layout.traction, layout.fluid, -1.0, &cf.transpose());
        let factor = Factorization::lu(t.build()?, DEFAULT_TOL)?;
        Ok(Self { problem, dt, layout, factor })
    }

    pub fn layout(&self) -> BlockLayout {
        self.layout
    }

    pub fn matrix(&self) -> &SparseMatrix {
        self.factor.matrix()
    }

    pub fn monolithic_step(&self, state: &CoupledState, p_in: f64) -> Result<CoupledState, SolverError> {
        let pb = self.problem;
        let p = &pb.params;
        let dt = self.dt;
        let l = self.layout;

        let mut rs = pb.solid.mass.apply(&state.q);
        rs.iter_mut().for_each(|v| *v *= p.rho_s / dt);
        let eta_pred: Vec<f64> = state.eta.iter().zip(&state.q).map(|(e, q)| e + 0.25 * dt * q).collect();
        pb.stiffness.apply_add(-1.0, &eta_pred, &mut rs);

        let mut rf = pb.fluid.mass.apply(&state.u);
        rf.iter_mut().zip(&pb.inlet_unit_load).for_each(|(v, ld)| *v = *v * p.rho_f / dt + p_in * ld);

        let q_trace = pb.solid_dofs.trace_of(&state.q);
        let rk: Vec<f64> = pb.interface.m_sigma.apply(&q_trace).iter().map(|v| -0.5 * v).collect();

        let mut rhs = Vec::with_capacity(l.total);
        rhs.extend(pb.solid_dofs.restrict(&rs));
        rhs.extend(pb.fluid_dofs.restrict(&rf));
        rhs.resize(l.traction, 0.0);
        rhs.extend(rk);

        let x = self.factor.solve(&rhs).map_err(SolverError::at_level(state.level + 1))?;
        let q = pb.solid_dofs.extend(&x[l.solid..l.fluid]);
        let eta = state.eta.iter().zip(q.iter().zip(&state.q)).map(|(e, (qn, qo))| e + 0.5 * dt * (qn + qo)).collect();
        Ok(CoupledState {
            u: pb.fluid_dofs.extend(&x[l.fluid..l.pressure]),
            p: x[l.pressure..l.traction].to_vec(),
            q,
            eta,
            lambda: x[l.traction..].to_vec(),
            t: state.t + dt,
            level: state.level + 1,
        })
    }
}

impl TimeStepper for MonolithicSystem<'_> {
    fn dt(&self) -> f64 {
        self.dt
    }

    fn step(&self, state: &CoupledState, p_in: f64) -> Result<CoupledState, SolverError> {
        self.monolithic_step(state, p_in)
    }
}
