//! The discretized channel problem: meshes, dof maps and assembled operators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{
    assemble_fluid, assemble_interface_mass, assemble_solid, inlet_traction_load, DofMap, FluidOperators,
    InterfaceOperators, PhysicalParams, SolidOperators,
};
use crate::error::SolverError;
use crate::mesh::{build_channel_pair, ChannelGeometry, ChannelMeshes};
use crate::sparse::SparseMatrix;

/// Unknowns at one time level, stored over full dof ranges (fixed dofs hold 0).
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    /// Fluid velocity.
    pub u: Vec<f64>,
    /// Fluid pressure.
    pub p: Vec<f64>,
    /// Solid velocity.
    pub q: Vec<f64>,
    /// Solid displacement.
    pub eta: Vec<f64>,
    /// Interface traction, indexed by trace dof.
    pub lambda: Vec<f64>,
    pub t: f64,
    pub level: usize,
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub geometry: ChannelGeometry,
    pub meshes: ChannelMeshes,
    pub params: PhysicalParams,
    pub fluid_dofs: DofMap,
    pub solid_dofs: DofMap,
    pub fluid: FluidOperators,
    pub solid: SolidOperators,
    pub interface: InterfaceOperators,
    /// `K_e + c0 M_s`.
    pub stiffness: SparseMatrix,
    /// Inlet load for unit pressure.
    pub inlet_unit_load: Vec<f64>,
}

impl Problem {
    pub fn new(geometry: ChannelGeometry, params: PhysicalParams) -> Result<Self, SolverError> {
        params.validate()?;
        let meshes = build_channel_pair(&geometry)?;
        let fluid_dofs = DofMap::fluid(&meshes.fluid, &meshes.interface);
        let solid_dofs = DofMap::solid(&meshes.solid, &meshes.interface);
        let fluid = assemble_fluid(&meshes.fluid, &params)?;
        let solid = assemble_solid(&meshes.solid, &params)?;
        let interface = assemble_interface_mass(&meshes.interface, &fluid_dofs, &solid_dofs)?;
        let stiffness = solid.stiffness(params.c0);
        let inlet_unit_load = inlet_traction_load(&meshes.fluid, 1.0);
        Ok(Self {
            geometry,
            meshes,
            params,
            fluid_dofs,
            solid_dofs,
            fluid,
            solid,
            interface,
            stiffness,
            inlet_unit_load,
        })
    }

    pub fn n_pressure(&self) -> usize {
        self.meshes.fluid.n_vertices()
    }

    pub fn n_trace(&self) -> usize {
        self.interface.m_sigma.nrows()
    }

    pub fn zero_state(&self) -> CoupledState {
        CoupledState {
            u: vec![0.0; self.fluid_dofs.n_dofs()],
            p: vec![0.0; self.n_pressure()],
            q: vec![0.0; self.solid_dofs.n_dofs()],
            eta: vec![0.0; self.solid_dofs.n_dofs()],
            lambda: vec![0.0; self.n_trace()],
            t: 0.0,
            level: 0,
        }
    }

    /// Inlet load for the pressure `p_in`.
    pub fn inlet_load(&self, p_in: f64) -> Vec<f64> {
        self.inlet_unit_load.iter().map(|v| v * p_in).collect()
    }

    /// Deterministic pseudo-random state honoring the Dirichlet constraints.
    /// Each field is scaled to contribute one unit to the discrete energy so no
    /// single term swamps the others (the `lambda` scaling uses `dt`).
    pub fn random_state(&self, seed: u64, dt: f64) -> CoupledState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let mut s = self.zero_state();
        s.u = draw(s.u.len());
        s.q = draw(s.q.len());
        s.eta = draw(s.eta.len());
        s.lambda = draw(s.lambda.len());
        self.fluid_dofs.apply_constraints(&mut s.u);
        self.solid_dofs.apply_constraints(&mut s.q);
        self.solid_dofs.apply_constraints(&mut s.eta);
        let p = &self.params;
        let scale = |v: &mut Vec<f64>, energy: f64| {
            let f = 1.0 / energy.sqrt();
            v.iter_mut().for_each(|x| *x *= f);
        };
        let e = p.rho_f * self.fluid.mass.quad_form(&s.u);
        scale(&mut s.u, e);
        let e = p.rho_s * self.solid.mass.quad_form(&s.q);
        scale(&mut s.q, e);
        let e = self.stiffness.quad_form(&s.eta);
        scale(&mut s.eta, e);
        let e = dt / p.alpha * self.interface.m_sigma.quad_form(&s.lambda);
        scale(&mut s.lambda, e);
        s
    }
}
