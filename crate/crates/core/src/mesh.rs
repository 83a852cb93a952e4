//! Structured triangulations of the fluid channel and the solid wall.
//!
//! Both meshes are built from the same x-partition so the nodes on the shared
//! interface row carry bitwise-identical coordinates. Vertices are numbered
//! column by column (`index = i * (ny + 1) + j`), which keeps the interface
//! row and the boundary columns easy to enumerate.

use crate::error::MeshError;

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]` (CGS units, cm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self, MeshError> {
        if !(x0 < x1 && y0 < y1) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
            return Err(MeshError::InvalidRect { x0, x1, y0, y1 });
        }
        Ok(Self { x0, x1, y0, y1 })
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Direction of the diagonal used to split each grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagonalRule {
    /// Every cell is split along its lower-left to upper-right diagonal.
    #[default]
    AllRightUp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Interface,
    SolidDirichlet,
    FluidDirichlet,
    Inlet,
    Outlet,
    Symmetry,
    Traction,
}

/// Tags assigned to the four sides of a rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SideTags {
    pub bottom: BoundaryTag,
    pub right: BoundaryTag,
    pub top: BoundaryTag,
    pub left: BoundaryTag,
}

impl SideTags {
    pub fn uniform(tag: BoundaryTag) -> Self {
        Self { bottom: tag, right: tag, top: tag, left: tag }
    }

    /// Channel tagging: inlet left, outlet right, symmetry axis at the bottom,
    /// interface at the top.
    pub fn fluid_channel() -> Self {
        Self {
            bottom: BoundaryTag::Symmetry,
            right: BoundaryTag::Outlet,
            top: BoundaryTag::Interface,
            left: BoundaryTag::Inlet,
        }
    }

    /// Wall tagging: clamped ends, interface at the bottom, free traction on top.
    pub fn solid_wall() -> Self {
        Self {
            bottom: BoundaryTag::Interface,
            right: BoundaryTag::SolidDirichlet,
            top: BoundaryTag::Traction,
            left: BoundaryTag::SolidDirichlet,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    /// Endpoints, oriented counter-clockwise with respect to the owning triangle.
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
    pub triangle: usize,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// Longest edge length.
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub rect: Rect,
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Vertex index of grid point `(i, j)`.
    pub fn grid_index(&self, i: usize, j: usize) -> usize {
        i * (self.ny + 1) + j
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn edges_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary_edges.iter().filter(move |e| e.tag == tag)
    }

    /// Union of the endpoints of every edge carrying `tag`, sorted.
    pub fn nodes_with_tag(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut nodes: Vec<usize> = self.edges_with_tag(tag).flat_map(|e| e.nodes).collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        let a = self.vertices[e.nodes[0]];
        let b = self.vertices[e.nodes[1]];
        (b[0] - a[0]).hypot(b[1] - a[1])
    }

    pub fn find_boundary_edge(&self, a: usize, b: usize) -> Option<&BoundaryEdge> {
        self.boundary_edges.iter().find(|e| e.nodes == [a, b] || e.nodes == [b, a])
    }
}

/// Uniform `nx` by `ny` grid on `rect`, two triangles per cell.
pub fn build_rect_mesh(
    rect: Rect,
    nx: usize,
    ny: usize,
    rule: DiagonalRule,
    tags: SideTags,
) -> Result<Mesh, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::ZeroSubdivisions { nx, ny });
    }
    let coord = |lo: f64, hi: f64, k: usize, n: usize| -> f64 {
        if k == n {
            hi
        } else {
            lo + (hi - lo) * (k as f64) / (n as f64)
        }
    };
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for i in 0..=nx {
        let x = coord(rect.x0, rect.x1, i, nx);
        for j in 0..=ny {
            vertices.push([x, coord(rect.y0, rect.y1, j, ny)]);
        }
    }
    let idx = |i: usize, j: usize| i * (ny + 1) + j;

    // Per cell: lower triangle (v00, v10, v11), upper triangle (v00, v11, v01).
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    match rule {
        DiagonalRule::AllRightUp => {
            for i in 0..nx {
                for j in 0..ny {
                    let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
                    triangles.push([v00, v10, v11]);
                    triangles.push([v00, v11, v01]);
                }
            }
        }
    }
    let cell = |i: usize, j: usize| 2 * (i * ny + j);

    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge { nodes: [idx(i, 0), idx(i + 1, 0)], tag: tags.bottom, triangle: cell(i, 0) });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge {
            nodes: [idx(nx, j), idx(nx, j + 1)],
            tag: tags.right,
            triangle: cell(nx - 1, j),
        });
    }
    for i in (0..nx).rev() {
        boundary_edges.push(BoundaryEdge {
            nodes: [idx(i + 1, ny), idx(i, ny)],
            tag: tags.top,
            triangle: cell(i, ny - 1) + 1,
        });
    }
    for j in (0..ny).rev() {
        boundary_edges.push(BoundaryEdge {
            nodes: [idx(0, j + 1), idx(0, j)],
            tag: tags.left,
            triangle: cell(0, j) + 1,
        });
    }

    let dx = (rect.x1 - rect.x0) / nx as f64;
    let dy = (rect.y1 - rect.y0) / ny as f64;
    Ok(Mesh { vertices, triangles, boundary_edges, h: dx.hypot(dy), nx, ny, rect })
}

/// One segment of the interface, referenced by trace indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceEdge {
    pub nodes: [usize; 2],
    pub length: f64,
}

/// Node correspondence on the shared interface, ordered by increasing x.
#[derive(Debug, Clone)]
pub struct InterfaceMap {
    pub fluid_nodes: Vec<usize>,
    pub solid_nodes: Vec<usize>,
    pub edges: Vec<InterfaceEdge>,
}

impl InterfaceMap {
    pub fn len(&self) -> usize {
        self.fluid_nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fluid_nodes.is_empty()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }
}

/// Geometry and resolution of the channel benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelGeometry {
    pub length: f64,
    pub radius: f64,
    pub thickness: f64,
    pub nx: usize,
    pub ny_fluid: usize,
    pub ny_solid: usize,
}

#[derive(Debug, Clone)]
pub struct ChannelMeshes {
    pub fluid: Mesh,
    pub solid: Mesh,
    pub interface: InterfaceMap,
}

/// Fluid mesh on `[0,L] x [0,R]` and solid mesh on `[0,L] x [R,R+eps]`
/// sharing the `y = R` node row.
pub fn build_channel_pair(geo: &ChannelGeometry) -> Result<ChannelMeshes, MeshError> {
    let fluid = build_rect_mesh(
        Rect::new(0.0, geo.length, 0.0, geo.radius)?,
        geo.nx,
        geo.ny_fluid,
        DiagonalRule::AllRightUp,
        SideTags::fluid_channel(),
    )?;
    let solid = build_rect_mesh(
        Rect::new(0.0, geo.length, geo.radius, geo.radius + geo.thickness)?,
        geo.nx,
        geo.ny_solid,
        DiagonalRule::AllRightUp,
        SideTags::solid_wall(),
    )?;
    let interface = match_interface(&fluid, &solid)?;
    Ok(ChannelMeshes { fluid, solid, interface })
}

/// Pairs the top row of `fluid` with the bottom row of `solid`.
pub fn match_interface(fluid: &Mesh, solid: &Mesh) -> Result<InterfaceMap, MeshError> {
    if fluid.nx != solid.nx {
        return Err(MeshError::MismatchedInterface { fluid_nx: fluid.nx, solid_nx: solid.nx });
    }
    let n = fluid.nx + 1;
    let fluid_nodes: Vec<usize> = (0..n).map(|i| fluid.grid_index(i, fluid.ny)).collect();
    let solid_nodes: Vec<usize> = (0..n).map(|i| solid.grid_index(i, 0)).collect();
    for (&f, &s) in fluid_nodes.iter().zip(&solid_nodes) {
        if fluid.vertices[f] != solid.vertices[s] {
            return Err(MeshError::NonMatchingNodes { fluid: fluid.vertices[f], solid: solid.vertices[s] });
        }
    }
    let edges = (0..n - 1)
        .map(|k| {
            let a = fluid.vertices[fluid_nodes[k]];
            let b = fluid.vertices[fluid_nodes[k + 1]];
            InterfaceEdge { nodes: [k, k + 1], length: (b[0] - a[0]).hypot(b[1] - a[1]) }
        })
        .collect();
    Ok(InterfaceMap { fluid_nodes, solid_nodes, edges })
}

/// Unit outward normal of the boundary edge joining vertices `a` and `b`.
pub fn outward_normal(mesh: &Mesh, a: usize, b: usize) -> Result<[f64; 2], MeshError> {
    let edge = mesh.find_boundary_edge(a, b).ok_or(MeshError::NotBoundaryEdge { a, b })?;
    let [p, q] = edge.nodes.map(|v| mesh.vertices[v]);
    let len = (q[0] - p[0]).hypot(q[1] - p[1]);
    let mut n = [(q[1] - p[1]) / len, -(q[0] - p[0]) / len];
    let third = mesh.triangles[edge.triangle]
        .into_iter()
        .find(|v| !edge.nodes.contains(v))
        .expect("boundary triangle has a vertex off the edge");
    let c = mesh.vertices[third];
    if n[0] * (c[0] - p[0]) + n[1] * (c[1] - p[1]) > 0.0 {
        n = [-n[0], -n[1]];
    }
    Ok(n)
}
