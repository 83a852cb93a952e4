//! P1 finite element operators for the fluid and solid subproblems.
//!
//! Vector unknowns are interleaved per vertex (`dof = 2 * vertex + component`),
//! pressure uses one dof per vertex. All matrices here are assembled over the
//! full dof range; Dirichlet dofs are removed later by restriction to the free
//! set (homogeneous data only, so elimination is a plain row/column drop).
//!
//! Integration is exact: gradients are constant per triangle and the mass,
//! divergence and interface blocks use closed-form P1 integrals.

use crate::error::AssemblyError;
use crate::mesh::{outward_normal, BoundaryTag, InterfaceMap, Mesh};
use crate::sparse::{Factorization, SparseMatrix, Triplets, DEFAULT_TOL};

/// Material and coupling constants, CGS units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub rho_f: f64,
    pub rho_s: f64,
    /// Fluid viscosity (poise).
    pub mu: f64,
    /// First Lamé constant, multiplies `2 (eps, eps)`.
    pub lame1: f64,
    /// Second Lamé constant, multiplies `(div, div)`.
    pub lame2: f64,
    /// Zeroth-order elastic support coefficient.
    pub c0: f64,
    /// Robin coefficient.
    pub alpha: f64,
    /// Multiplier of `h^2` in the pressure stabilization.
    pub beta_p: f64,
}

impl PhysicalParams {
    /// Pressure-wave benchmark constants with the given Robin coefficient.
    pub fn pressure_wave(alpha: f64) -> Self {
        let mu = 0.035;
        Self { rho_f: 1.0, rho_s: 1.1, mu, lame1: 1.15e6, lame2: 1.7e6, c0: 4.0e6, alpha, beta_p: 1e-3 / mu }
    }

    pub fn validate(&self) -> Result<(), AssemblyError> {
        let positive = [
            ("rho_f", self.rho_f),
            ("rho_s", self.rho_s),
            ("mu", self.mu),
            ("lame1", self.lame1),
            ("alpha", self.alpha),
            ("beta_p", self.beta_p),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(AssemblyError::InvalidParameter { name, value });
            }
        }
        for (name, value) in [("lame2", self.lame2), ("c0", self.c0)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(AssemblyError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }
}

/// Dof bookkeeping for one vector-valued P1 space.
#[derive(Debug, Clone)]
pub struct DofMap {
    n_vertices: usize,
    fixed: Vec<bool>,
    free: Vec<usize>,
    free_index: Vec<usize>,
    /// Trace dof `2k + c` of interface node `k` -> global vector dof.
    trace: Vec<usize>,
}

const NOT_FREE: usize = usize::MAX;

impl DofMap {
    /// Builds the map from the boundary tags of `mesh`:
    /// `FluidDirichlet`/`SolidDirichlet` fix both components, `Symmetry` fixes
    /// the normal component. `trace_nodes` lists the interface vertices in
    /// interface order.
    pub fn new(mesh: &Mesh, trace_nodes: &[usize]) -> Self {
        let nv = mesh.n_vertices();
        let mut fixed = vec![false; 2 * nv];
        for e in &mesh.boundary_edges {
            let comps: [bool; 2] = match e.tag {
                BoundaryTag::FluidDirichlet | BoundaryTag::SolidDirichlet => [true, true],
                BoundaryTag::Symmetry => {
                    let n = outward_normal(mesh, e.nodes[0], e.nodes[1]).expect("tagged edge is a boundary edge");
                    if n[0].abs() >= n[1].abs() {
                        [true, false]
                    } else {
                        [false, true]
                    }
                }
                _ => [false, false],
            };
            for v in e.nodes {
                for c in 0..2 {
                    fixed[2 * v + c] |= comps[c];
                }
            }
        }
        let mut free = Vec::with_capacity(2 * nv);
        let mut free_index = vec![NOT_FREE; 2 * nv];
        for (d, &f) in fixed.iter().enumerate() {
            if !f {
                free_index[d] = free.len();
                free.push(d);
            }
        }
        let trace = trace_nodes.iter().flat_map(|&v| [2 * v, 2 * v + 1]).collect();
        Self { n_vertices: nv, fixed, free, free_index, trace }
    }

    pub fn fluid(mesh: &Mesh, imap: &InterfaceMap) -> Self {
        Self::new(mesh, &imap.fluid_nodes)
    }

    pub fn solid(mesh: &Mesh, imap: &InterfaceMap) -> Self {
        Self::new(mesh, &imap.solid_nodes)
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.n_vertices
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn n_trace(&self) -> usize {
        self.trace.len()
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn is_fixed(&self, dof: usize) -> bool {
        self.fixed[dof]
    }

    pub fn free_index(&self, dof: usize) -> Option<usize> {
        match self.free_index[dof] {
            NOT_FREE => None,
            k => Some(k),
        }
    }

    pub fn trace_dofs(&self) -> &[usize] {
        &self.trace
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&d| full[d]).collect()
    }

    /// Free values scattered into a full vector with zeros on fixed dofs.
    pub fn extend(&self, reduced: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.n_dofs()];
        for (&d, &v) in self.free.iter().zip(reduced) {
            full[d] = v;
        }
        full
    }

    pub fn trace_of(&self, full: &[f64]) -> Vec<f64> {
        self.trace.iter().map(|&d| full[d]).collect()
    }

    /// Zeroes every fixed dof of `full`.
    pub fn apply_constraints(&self, full: &mut [f64]) {
        for (v, &f) in full.iter_mut().zip(&self.fixed) {
            if f {
                *v = 0.0;
            }
        }
    }
}

/// Fluid operators over the full dof range.
#[derive(Debug, Clone)]
pub struct FluidOperators {
    /// Vector mass `(u, v)`.
    pub mass: SparseMatrix,
    /// `2 mu (eps(u), eps(v))`.
    pub viscous: SparseMatrix,
    /// `(div u, theta)`, rows are pressure dofs.
    pub divergence: SparseMatrix,
    /// Unscaled `(grad p, grad theta)`; the scheme multiplies by `beta_p h^2`.
    pub pressure_laplacian: SparseMatrix,
    /// `int theta` for every pressure basis function.
    pub pressure_weights: Vec<f64>,
    /// Global mesh size used by the stabilization.
    pub h: f64,
}

impl FluidOperators {
    pub fn stabilization(&self, beta_p: f64) -> f64 {
        beta_p * self.h * self.h
    }
}

/// Solid operators over the full dof range.
#[derive(Debug, Clone)]
pub struct SolidOperators {
    /// Vector mass `(q, xi)`, also used for the `c0` term.
    pub mass: SparseMatrix,
    /// `2 L1 (eps, eps) + L2 (div, div)`.
    pub elastic: SparseMatrix,
}

impl SolidOperators {
    /// `K_e + c0 M`.
    pub fn stiffness(&self, c0: f64) -> SparseMatrix {
        if c0 == 0.0 {
            return self.elastic.clone();
        }
        SparseMatrix::linear_combination(&[(1.0, &self.elastic), (c0, &self.mass)]).expect("same shape")
    }
}

/// Interface mass blocks shared by both subdomains.
#[derive(Debug, Clone)]
pub struct InterfaceOperators {
    /// Trace-space mass on the interface (`2 n_sigma` square).
    pub m_sigma: SparseMatrix,
    /// Fluid dofs x trace dofs: `P_f^T M_sigma`.
    pub fluid_coupling: SparseMatrix,
    /// Solid dofs x trace dofs: `P_s^T M_sigma`.
    pub solid_coupling: SparseMatrix,
    /// `P_f^T M_sigma P_f` over fluid dofs.
    pub b_f: SparseMatrix,
    /// `P_s^T M_sigma P_s` over solid dofs.
    pub b_s: SparseMatrix,
}

struct Element {
    area: f64,
    grads: [[f64; 2]; 3],
}

fn element(mesh: &Mesh, t: usize) -> Result<Element, AssemblyError> {
    let [a, b, c] = mesh.triangles[t].map(|v| mesh.vertices[v]);
    let area = mesh.signed_area(t);
    if !(area > 0.0) {
        return Err(AssemblyError::DegenerateTriangle { triangle: t, area });
    }
    let inv = 1.0 / (2.0 * area);
    let grads = [
        [(b[1] - c[1]) * inv, (c[0] - b[0]) * inv],
        [(c[1] - a[1]) * inv, (a[0] - c[0]) * inv],
        [(a[1] - b[1]) * inv, (b[0] - a[0]) * inv],
    ];
    Ok(Element { area, grads })
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Local P1 mass entry: `area/12 * (1 + delta_ab)`.
fn mass_entry(area: f64, a: usize, b: usize) -> f64 {
    if a == b {
        area / 6.0
    } else {
        area / 12.0
    }
}

/// `2 l1 (eps, eps) + l2 (div, div)` on one triangle for the vector basis
/// functions `phi_a e_c` and `phi_b e_d`.
fn elasticity_entry(el: &Element, l1: f64, l2: f64, a: usize, c: usize, b: usize, d: usize) -> f64 {
    let ga = el.grads[a];
    let gb = el.grads[b];
    let sym = if c == d { dot(ga, gb) } else { 0.0 } + ga[d] * gb[c];
    el.area * (l1 * sym + l2 * ga[c] * gb[d])
}

fn assemble_vector_mass(t: &mut Triplets, el: &Element, tri: [usize; 3]) {
    for a in 0..3 {
        for b in 0..3 {
            let m = mass_entry(el.area, a, b);
            for c in 0..2 {
                t.push(2 * tri[a] + c, 2 * tri[b] + c, m);
            }
        }
    }
}

fn assemble_elasticity(t: &mut Triplets, el: &Element, tri: [usize; 3], l1: f64, l2: f64) {
    for a in 0..3 {
        for c in 0..2 {
            for b in 0..3 {
                for d in 0..2 {
                    t.push(2 * tri[a] + c, 2 * tri[b] + d, elasticity_entry(el, l1, l2, a, c, b, d));
                }
            }
        }
    }
}

pub fn assemble_solid(mesh: &Mesh, params: &PhysicalParams) -> Result<SolidOperators, AssemblyError> {
    let n = 2 * mesh.n_vertices();
    let cap = 36 * mesh.triangles.len();
    let mut mass = Triplets::with_capacity(n, n, cap);
    let mut elastic = Triplets::with_capacity(n, n, cap);
    for (k, &tri) in mesh.triangles.iter().enumerate() {
        let el = element(mesh, k)?;
        assemble_vector_mass(&mut mass, &el, tri);
        assemble_elasticity(&mut elastic, &el, tri, params.lame1, params.lame2);
    }
    Ok(SolidOperators { mass: mass.build()?, elastic: elastic.build()? })
}

pub fn assemble_fluid(mesh: &Mesh, params: &PhysicalParams) -> Result<FluidOperators, AssemblyError> {
    let nv = mesh.n_vertices();
    let n = 2 * nv;
    let nt = mesh.triangles.len();
    let mut mass = Triplets::with_capacity(n, n, 18 * nt);
    let mut viscous = Triplets::with_capacity(n, n, 36 * nt);
    let mut divergence = Triplets::with_capacity(nv, n, 18 * nt);
    let mut lap = Triplets::with_capacity(nv, nv, 9 * nt);
    let mut weights = vec![0.0; nv];
    for (k, &tri) in mesh.triangles.iter().enumerate() {
        let el = element(mesh, k)?;
        assemble_vector_mass(&mut mass, &el, tri);
        // 2 mu (eps, eps) is the elasticity form with l1 = mu, l2 = 0
        assemble_elasticity(&mut viscous, &el, tri, params.mu, 0.0);
        for a in 0..3 {
            weights[tri[a]] += el.area / 3.0;
            for b in 0..3 {
                lap.push(tri[a], tri[b], el.area * dot(el.grads[a], el.grads[b]));
                // (div(phi_b e_c), psi_a) = area/3 * d_c phi_b
                for c in 0..2 {
                    divergence.push(tri[a], 2 * tri[b] + c, el.area / 3.0 * el.grads[b][c]);
                }
            }
        }
    }
    Ok(FluidOperators {
        mass: mass.build()?,
        viscous: viscous.build()?,
        divergence: divergence.build()?,
        pressure_laplacian: lap.build()?,
        pressure_weights: weights,
        h: mesh.h,
    })
}

/// Scalar P1 mass on the interface, indexed by interface node.
pub fn interface_scalar_mass(imap: &InterfaceMap) -> Result<SparseMatrix, AssemblyError> {
    if imap.edges.is_empty() {
        return Err(AssemblyError::EmptyInterface);
    }
    let n = imap.len();
    let mut t = Triplets::with_capacity(n, n, 4 * imap.edges.len());
    for e in &imap.edges {
        let [i, j] = e.nodes;
        let l = e.length;
        t.push(i, i, l / 3.0);
        t.push(j, j, l / 3.0);
        t.push(i, j, l / 6.0);
        t.push(j, i, l / 6.0);
    }
    Ok(t.build()?)
}

pub fn assemble_interface_mass(
    imap: &InterfaceMap,
    fluid: &DofMap,
    solid: &DofMap,
) -> Result<InterfaceOperators, AssemblyError> {
    let scalar = interface_scalar_mass(imap)?;
    let nt = 2 * imap.len();
    let mut m = Triplets::with_capacity(nt, nt, 2 * scalar.nnz());
    for i in 0..scalar.nrows() {
        for (j, v) in scalar.row(i) {
            for c in 0..2 {
                m.push(2 * i + c, 2 * j + c, v);
            }
        }
    }
    let m_sigma = m.build()?;
    let lift = |dofs: &DofMap| -> Result<(SparseMatrix, SparseMatrix), AssemblyError> {
        let n = dofs.n_dofs();
        let trace = dofs.trace_dofs();
        let mut coupling = Triplets::new(n, nt);
        let mut block = Triplets::new(n, n);
        for k in 0..nt {
            for (l, v) in m_sigma.row(k) {
                coupling.push(trace[k], l, v);
                block.push(trace[k], trace[l], v);
            }
        }
        Ok((coupling.build()?, block.build()?))
    };
    let (fluid_coupling, b_f) = lift(fluid)?;
    let (solid_coupling, b_s) = lift(solid)?;
    Ok(InterfaceOperators { m_sigma, fluid_coupling, solid_coupling, b_f, b_s })
}

/// Load of the traction `sigma n = -p_in n` on the inlet edges.
pub fn inlet_traction_load(mesh: &Mesh, p_in: f64) -> Vec<f64> {
    let mut load = vec![0.0; 2 * mesh.n_vertices()];
    for e in mesh.edges_with_tag(BoundaryTag::Inlet) {
        let n = outward_normal(mesh, e.nodes[0], e.nodes[1]).expect("inlet edge is a boundary edge");
        let half = 0.5 * mesh.edge_length(e);
        for v in e.nodes {
            for c in 0..2 {
                load[2 * v + c] -= p_in * n[c] * half;
            }
        }
    }
    load
}

/// `(f, v)` for a vector body force, integrated with the edge-midpoint rule
/// (exact for quadratic integrands).
pub fn body_force_load(mesh: &Mesh, f: impl Fn(f64, f64) -> [f64; 2]) -> Result<Vec<f64>, AssemblyError> {
    let mut load = vec![0.0; 2 * mesh.n_vertices()];
    for (k, tri) in mesh.triangles.iter().enumerate() {
        let el = element(mesh, k)?;
        let p = tri.map(|v| mesh.vertices[v]);
        for (i, j) in [(0, 1), (1, 2), (2, 0)] {
            let m = [0.5 * (p[i][0] + p[j][0]), 0.5 * (p[i][1] + p[j][1])];
            let fv = f(m[0], m[1]);
            for a in [i, j] {
                // phi_a = 1/2 at the midpoints of its two edges, 0 at the third
                for c in 0..2 {
                    load[2 * tri[a] + c] += el.area / 3.0 * 0.5 * fv[c];
                }
            }
        }
    }
    Ok(load)
}

/// How the pressure level is fixed in a fluid solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PressureMode {
    /// Natural boundaries determine the pressure (open channel).
    #[default]
    Free,
    /// Adds one Lagrange multiplier enforcing `int p = 0` (all-Dirichlet boxes).
    ZeroMean,
}

/// Reduced symmetric saddle matrix
/// `[m_coeff M + A + robin B, -D^T; -D, -beta_p h^2 L]` over
/// `(free velocity dofs, pressure dofs[, mean multiplier])`.
pub fn fluid_saddle_matrix(
    ops: &FluidOperators,
    dofs: &DofMap,
    mass_coeff: f64,
    robin: Option<(f64, &SparseMatrix)>,
    beta_p: f64,
    mode: PressureMode,
) -> Result<SparseMatrix, AssemblyError> {
    let free = dofs.free();
    let nu = free.len();
    let np = ops.pressure_laplacian.nrows();
    let n = nu + np + usize::from(mode == PressureMode::ZeroMean);
    let mut terms = vec![(mass_coeff, &ops.mass), (1.0, &ops.viscous)];
    if let Some((alpha, b)) = robin {
        terms.push((alpha, b));
    }
    let velocity = SparseMatrix::linear_combination(&terms)?.submatrix(free, free);
    let all_p: Vec<usize> = (0..np).collect();
    let div = ops.divergence.submatrix(&all_p, free);
    let mut t = Triplets::with_capacity(n, n, velocity.nnz() + 2 * div.nnz() + ops.pressure_laplacian.nnz() + 2 * np);
    t.push_block(0, 0, 1.0, &velocity);
    t.push_block(nu, 0, -1.0, &div);
    t.push_block(0, nu, -1.0, &div.transpose());
    t.push_block(nu, nu, -ops.stabilization(beta_p), &ops.pressure_laplacian);
    if mode == PressureMode::ZeroMean {
        for (k, &w) in ops.pressure_weights.iter().enumerate() {
            t.push(nu + k, n - 1, w);
            t.push(n - 1, nu + k, w);
        }
    }
    Ok(t.build()?)
}

/// Interface traction recovered variationally from the fluid residual:
/// solves `M_sigma lambda = r` where `r` collects, at every interface dof,
/// `rho_f/dt M (u_new - u_old) + A u_new - D^T p_new - load`.
/// `load` is the Neumann load used in the fluid step (zero when unforced).
#[allow(clippy::too_many_arguments)]
pub fn lift_residual_stress(
    ops: &FluidOperators,
    dofs: &DofMap,
    m_sigma: &Factorization,
    rho_f: f64,
    dt: f64,
    u_new: &[f64],
    p_new: &[f64],
    u_old: &[f64],
    load: &[f64],
) -> Result<Vec<f64>, AssemblyError> {
    let du: Vec<f64> = u_new.iter().zip(u_old).map(|(a, b)| a - b).collect();
    let mut r = ops.viscous.apply(u_new);
    ops.mass.apply_add(rho_f / dt, &du, &mut r);
    let dtp = ops.divergence.apply_transpose(p_new);
    for ((ri, g), l) in r.iter_mut().zip(dtp).zip(load) {
        *ri -= g + l;
    }
    let rhs = dofs.trace_of(&r);
    Ok(m_sigma.solve(&rhs)?)
}

/// Factorized trace mass, for traction recovery and trace norms.
pub fn factor_trace_mass(m_sigma: &SparseMatrix) -> Result<Factorization, AssemblyError> {
    Ok(Factorization::cholesky(m_sigma.clone(), DEFAULT_TOL)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_channel_pair, build_rect_mesh, ChannelGeometry, DiagonalRule, Rect, SideTags};

    fn unit_triangle_mesh() -> Mesh {
        Mesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            boundary_edges: vec![],
            h: 2f64.sqrt(),
            nx: 1,
            ny: 1,
            rect: Rect::new(0.0, 1.0, 0.0, 1.0).unwrap(),
        }
    }

    fn params() -> PhysicalParams {
        PhysicalParams { rho_f: 1.0, rho_s: 1.0, mu: 0.7, lame1: 0.5, lame2: 0.0, c0: 0.0, alpha: 1.0, beta_p: 1.0 }
    }

    fn box_mesh(nx: usize, ny: usize) -> Mesh {
        build_rect_mesh(
            Rect::new(0.0, 2.0, -0.5, 0.5).unwrap(),
            nx,
            ny,
            DiagonalRule::AllRightUp,
            SideTags::uniform(BoundaryTag::Traction),
        )
        .unwrap()
    }

    /// Independent oracle: build the 2x2 strain of each vector basis function
    /// and contract explicitly.
    fn strain(g: [f64; 2], c: usize) -> [[f64; 2]; 2] {
        let mut grad_u = [[0.0; 2]; 2];
        grad_u[c] = g; // du_c/dx_j = g_j
        let mut e = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                e[i][j] = 0.5 * (grad_u[i][j] + grad_u[j][i]);
            }
        }
        e
    }

    #[test]
    fn single_element_elasticity_matches_strain_contraction() {
        let m = unit_triangle_mesh();
        let (l1, l2) = (0.5, 0.8);
        let p = PhysicalParams { lame1: l1, lame2: l2, ..params() };
        let ops = assemble_solid(&m, &p).unwrap();
        let g = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        let area = 0.5;
        for a in 0..3 {
            for c in 0..2 {
                for b in 0..3 {
                    for d in 0..2 {
                        let ea = strain(g[a], c);
                        let eb = strain(g[b], d);
                        let mut ee = 0.0;
                        for i in 0..2 {
                            for j in 0..2 {
                                ee += ea[i][j] * eb[i][j];
                            }
                        }
                        let want = area * (2.0 * l1 * ee + l2 * g[a][c] * g[b][d]);
                        let got = ops.elastic.get(2 * a + c, 2 * b + d);
                        assert!((got - want).abs() < 1e-15, "({a},{c}),({b},{d}): {got} vs {want}");
                    }
                }
            }
        }
        // with l1 = 1/2 the same-component part equals half the scalar stiffness
        // plus the d_c phi_a d_c phi_b cross term
        let scalar = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        let p = PhysicalParams { lame1: 0.5, lame2: 0.0, ..params() };
        let ops = assemble_solid(&m, &p).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let want = 0.5 * scalar[a][b] + area * 0.5 * g[a][0] * g[b][0];
                assert!((ops.elastic.get(2 * a, 2 * b) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_element_mass() {
        let m = unit_triangle_mesh();
        let ops = assemble_solid(&m, &params()).unwrap();
        let area = 0.5;
        for a in 0..3 {
            for b in 0..3 {
                let want = area / 12.0 * if a == b { 2.0 } else { 1.0 };
                assert!((ops.mass.get(2 * a, 2 * b) - want).abs() < 1e-16);
                assert!((ops.mass.get(2 * a + 1, 2 * b + 1) - want).abs() < 1e-16);
                assert_eq!(ops.mass.get(2 * a, 2 * b + 1), 0.0);
            }
        }
    }

    #[test]
    fn single_element_pressure_laplacian() {
        let m = unit_triangle_mesh();
        let ops = assemble_fluid(&m, &params()).unwrap();
        let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for a in 0..3 {
            for b in 0..3 {
                assert!((ops.pressure_laplacian.get(a, b) - want[a][b]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn degenerate_triangle_rejected() {
        let mut m = unit_triangle_mesh();
        m.vertices[2] = [2.0, 0.0];
        assert!(matches!(assemble_solid(&m, &params()), Err(AssemblyError::DegenerateTriangle { .. })));
        assert!(matches!(assemble_fluid(&m, &params()), Err(AssemblyError::DegenerateTriangle { .. })));
    }

    #[test]
    fn symmetric_operators() {
        let m = box_mesh(5, 4);
        let p = PhysicalParams { lame2: 1.3, ..params() };
        let s = assemble_solid(&m, &p).unwrap();
        let f = assemble_fluid(&m, &p).unwrap();
        for mat in [&s.mass, &s.elastic, &f.mass, &f.viscous, &f.pressure_laplacian] {
            assert!(mat.symmetry_defect() <= 1e-14);
        }
    }

    fn rigid_motions(m: &Mesh) -> Vec<Vec<f64>> {
        let tx = m.vertices.iter().flat_map(|_| [1.0, 0.0]).collect();
        let ty = m.vertices.iter().flat_map(|_| [0.0, 1.0]).collect();
        let rot = m.vertices.iter().flat_map(|p| [-p[1], p[0]]).collect();
        vec![tx, ty, rot]
    }

    #[test]
    fn rigid_motion_kernels() {
        let m = box_mesh(6, 3);
        let p = PhysicalParams { lame1: 1.15e6, lame2: 1.7e6, mu: 0.035, ..params() };
        let s = assemble_solid(&m, &p).unwrap();
        let f = assemble_fluid(&m, &p).unwrap();
        for r in rigid_motions(&m) {
            let ke = s.elastic.apply(&r);
            let scale = p.lame1 + p.lame2;
            assert!(ke.iter().all(|v| v.abs() <= 1e-9 * scale), "{:?}", ke.iter().fold(0.0f64, |a, b| a.max(b.abs())));
            assert!(f.viscous.apply(&r).iter().all(|v| v.abs() <= 1e-14));
        }
        let ones = vec![1.0; m.n_vertices()];
        assert!(f.pressure_laplacian.apply(&ones).iter().all(|v| v.abs() <= 1e-13));
    }

    #[test]
    fn constant_and_solenoidal_fields_are_discretely_divergence_free() {
        let m = box_mesh(4, 4);
        let f = assemble_fluid(&m, &params()).unwrap();
        let constant: Vec<f64> = m.vertices.iter().flat_map(|_| [1.0, 0.0]).collect();
        assert!(f.divergence.apply(&constant).iter().all(|v| v.abs() < 1e-15));
        let linear: Vec<f64> = m.vertices.iter().flat_map(|p| [p[0], -p[1]]).collect();
        assert!(f.divergence.apply(&linear).iter().all(|v| v.abs() < 1e-15));
        // div (x, y) = 2, so (div u, theta) = 2 int theta
        let radial: Vec<f64> = m.vertices.iter().flat_map(|p| [p[0], p[1]]).collect();
        for (d, w) in f.divergence.apply(&radial).iter().zip(&f.pressure_weights) {
            assert!((d - 2.0 * w).abs() < 1e-14);
        }
    }

    #[test]
    fn linear_patch_test() {
        // a linear displacement has constant stress, so its residual vanishes at interior dofs
        let m = box_mesh(5, 5);
        let p = PhysicalParams { lame1: 2.0, lame2: 3.0, ..params() };
        let s = assemble_solid(&m, &p).unwrap();
        let eta: Vec<f64> =
            m.vertices.iter().flat_map(|q| [0.3 * q[0] - 0.2 * q[1], 0.1 * q[0] + 0.7 * q[1]]).collect();
        let r = s.elastic.apply(&eta);
        for i in 1..m.nx {
            for j in 1..m.ny {
                let v = m.grid_index(i, j);
                assert!(r[2 * v].abs() < 1e-13 && r[2 * v + 1].abs() < 1e-13);
            }
        }
    }

    fn channel(nx: usize, l: f64) -> (crate::mesh::ChannelMeshes, DofMap, DofMap) {
        let pair = build_channel_pair(&ChannelGeometry {
            length: l,
            radius: 0.5,
            thickness: 0.1,
            nx,
            ny_fluid: 3,
            ny_solid: 2,
        })
        .unwrap();
        let fd = DofMap::fluid(&pair.fluid, &pair.interface);
        let sd = DofMap::solid(&pair.solid, &pair.interface);
        (pair, fd, sd)
    }

    #[test]
    fn dirichlet_sets() {
        let (pair, fd, sd) = channel(4, 1.0);
        // symmetry axis fixes only the vertical component
        let v = pair.fluid.grid_index(2, 0);
        assert!(fd.is_fixed(2 * v + 1) && !fd.is_fixed(2 * v));
        // corners of the clamped wall ends are fixed, including the interface row
        for &i in &[0, 4] {
            let v = pair.solid.grid_index(i, 0);
            assert!(sd.is_fixed(2 * v) && sd.is_fixed(2 * v + 1));
        }
        // fluid interface is entirely free
        assert!(fd.trace_dofs().iter().all(|&d| !fd.is_fixed(d)));
        assert_eq!(fd.n_free() + pair.fluid.nx + 1, fd.n_dofs());
        let full: Vec<f64> = (0..fd.n_dofs()).map(|k| k as f64).collect();
        let back = fd.extend(&fd.restrict(&full));
        for d in 0..fd.n_dofs() {
            assert_eq!(back[d], if fd.is_fixed(d) { 0.0 } else { full[d] });
        }
    }

    #[test]
    fn single_edge_interface_block() {
        let (pair, fd, sd) = channel(1, 1.0);
        let io = assemble_interface_mass(&pair.interface, &fd, &sd).unwrap();
        let d = io.m_sigma.to_dense();
        let third = 1.0 / 3.0;
        let sixth = 1.0 / 6.0;
        let want =
            [[third, 0.0, sixth, 0.0], [0.0, third, 0.0, sixth], [sixth, 0.0, third, 0.0], [0.0, sixth, 0.0, third]];
        for i in 0..4 {
            for j in 0..4 {
                assert!((d[i][j] - want[i][j]).abs() < 1e-16);
            }
        }
    }

    #[test]
    fn interface_mass_properties() {
        let (pair, fd, sd) = channel(7, 6.0);
        let io = assemble_interface_mass(&pair.interface, &fd, &sd).unwrap();
        let ones: Vec<f64> = vec![1.0; io.m_sigma.nrows()];
        let xs: Vec<f64> = (0..pair.interface.len()).flat_map(|_| [1.0, 0.0]).collect();
        assert!((io.m_sigma.bilinear(&xs, &xs) - 6.0).abs() < 1e-13);
        assert!((io.m_sigma.quad_form(&ones) - 12.0).abs() < 1e-13);
        // row sums equal the lumped nodal lengths
        let scalar = interface_scalar_mass(&pair.interface).unwrap();
        let rows = scalar.apply(&vec![1.0; pair.interface.len()]);
        let n = pair.interface.len();
        for k in 0..n {
            let left = if k > 0 { pair.interface.edges[k - 1].length } else { 0.0 };
            let right = if k + 1 < n { pair.interface.edges[k].length } else { 0.0 };
            assert!((rows[k] - 0.5 * (left + right)).abs() < 1e-15);
        }
        // the fluid and solid blocks are the same trace matrix
        let tf = fd.trace_dofs();
        let ts = sd.trace_dofs();
        for i in 0..tf.len() {
            for j in 0..tf.len() {
                assert_eq!(io.b_f.get(tf[i], tf[j]), io.b_s.get(ts[i], ts[j]));
            }
        }
        for m in [&io.m_sigma, &io.b_f, &io.b_s] {
            assert!(m.symmetry_defect() <= 1e-14);
        }
    }

    #[test]
    fn empty_interface_rejected() {
        let imap = InterfaceMap { fluid_nodes: vec![], solid_nodes: vec![], edges: vec![] };
        assert!(matches!(interface_scalar_mass(&imap), Err(AssemblyError::EmptyInterface)));
    }

    #[test]
    fn inlet_load() {
        let (pair, _, _) = channel(5, 6.0);
        assert!(inlet_traction_load(&pair.fluid, 0.0).iter().all(|&v| v == 0.0));
        let one = inlet_traction_load(&pair.fluid, 1.0);
        let sum_x: f64 = one.iter().step_by(2).sum();
        let sum_y: f64 = one.iter().skip(1).step_by(2).sum();
        assert!((sum_x - 0.5).abs() < 1e-15);
        assert_eq!(sum_y, 0.0);
        for (v, p) in pair.fluid.vertices.iter().enumerate() {
            if p[0] != 0.0 {
                assert_eq!(one[2 * v], 0.0);
            }
        }
        let two = inlet_traction_load(&pair.fluid, 2.0);
        assert!(one.iter().zip(&two).all(|(a, b)| 2.0 * a == *b));
    }

    #[test]
    fn body_force_integrates_polynomials() {
        let m = box_mesh(3, 2);
        let load = body_force_load(&m, |x, y| [1.0, x * y]).unwrap();
        let sx: f64 = load.iter().step_by(2).sum();
        let sy: f64 = load.iter().skip(1).step_by(2).sum();
        assert!((sx - 2.0).abs() < 1e-14);
        // int_0^2 x dx * int_-0.5^0.5 y dy = 0
        assert!(sy.abs() < 1e-14);
    }

    #[test]
    fn parameter_validation() {
        assert!(PhysicalParams::pressure_wave(500.0).validate().is_ok());
        let bad = PhysicalParams { mu: -1.0, ..PhysicalParams::pressure_wave(500.0) };
        assert!(matches!(bad.validate(), Err(AssemblyError::InvalidParameter { name: "mu", .. })));
        let bad = PhysicalParams { alpha: 0.0, ..PhysicalParams::pressure_wave(500.0) };
        assert!(bad.validate().is_err());
        let ok = PhysicalParams { c0: 0.0, lame2: 0.0, ..PhysicalParams::pressure_wave(500.0) };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn zero_state_lifts_to_zero() {
        let (pair, fd, sd) = channel(4, 1.0);
        let p = PhysicalParams::pressure_wave(500.0);
        let ops = assemble_fluid(&pair.fluid, &p).unwrap();
        let io = assemble_interface_mass(&pair.interface, &fd, &sd).unwrap();
        let msf = factor_trace_mass(&io.m_sigma).unwrap();
        let z = vec![0.0; fd.n_dofs()];
        let zp = vec![0.0; pair.fluid.n_vertices()];
        let lam = lift_residual_stress(&ops, &fd, &msf, 1.0, 1e-3, &z, &zp, &z, &z).unwrap();
        assert!(lam.iter().all(|&v| v == 0.0));
    }
}
