//! Stabilized P1/P1 Stokes on the unit square against a manufactured
//! divergence-free solution.

use robin_fsi::assembly::{assemble_fluid, body_force_load, fluid_saddle_matrix, DofMap, PhysicalParams, PressureMode};
use robin_fsi::mesh::{build_rect_mesh, BoundaryTag, DiagonalRule, Mesh, Rect, SideTags};
use robin_fsi::sparse::{solve_general, DEFAULT_TOL};

const MU: f64 = 1.0;

// stream function g(x) g(y) with g(s) = s^2 (1 - s)^2
fn g(s: f64) -> [f64; 4] {
    [
        s * s * (1.0 - s) * (1.0 - s),
        2.0 * s * (1.0 - s) * (1.0 - 2.0 * s),
        2.0 - 12.0 * s + 12.0 * s * s,
        -12.0 + 24.0 * s,
    ]
}

fn velocity_gradient(x: f64, y: f64) -> [[f64; 2]; 2] {
    let (gx, gy) = (g(x), g(y));
    [[gx[1] * gy[1], gx[0] * gy[2]], [-gx[2] * gy[0], -gx[1] * gy[1]]]
}

fn forcing(x: f64, y: f64) -> [f64; 2] {
    let (gx, gy) = (g(x), g(y));
    let lap_u1 = gx[2] * gy[1] + gx[0] * gy[3];
    let lap_u2 = -(gx[3] * gy[0] + gx[1] * gy[2]);
    // pressure (x - 1/2)(y - 1/2)
    [-MU * lap_u1 + (y - 0.5), -MU * lap_u2 + (x - 0.5)]
}

/// `|u - u_h|_1` with the three-edge-midpoint rule per triangle.
fn h1_error(mesh: &Mesh, u: &[f64]) -> f64 {
    let mut sum = 0.0;
    for tri in &mesh.triangles {
        let p = tri.map(|v| mesh.vertices[v]);
        let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let grads = [
            [(p[1][1] - p[2][1]) / det, (p[2][0] - p[1][0]) / det],
            [(p[2][1] - p[0][1]) / det, (p[0][0] - p[2][0]) / det],
            [(p[0][1] - p[1][1]) / det, (p[1][0] - p[0][0]) / det],
        ];
        let mut gh = [[0.0; 2]; 2];
        for a in 0..3 {
            for c in 0..2 {
                for d in 0..2 {
                    gh[c][d] += u[2 * tri[a] + c] * grads[a][d];
                }
            }
        }
        for (i, j) in [(0, 1), (1, 2), (2, 0)] {
            let ge = velocity_gradient(0.5 * (p[i][0] + p[j][0]), 0.5 * (p[i][1] + p[j][1]));
            let e: f64 =
                (0..2).flat_map(|c| (0..2).map(move |d| (c, d))).map(|(c, d)| (ge[c][d] - gh[c][d]).powi(2)).sum();
            sum += det.abs() / 6.0 * e;
        }
    }
    sum.sqrt()
}

/// Velocity H1 error on an `n x n` grid.
pub fn solve(n: usize) -> f64 {
    let mesh = build_rect_mesh(
        Rect::new(0.0, 1.0, 0.0, 1.0).unwrap(),
        n,
        n,
        DiagonalRule::AllRightUp,
        SideTags::uniform(BoundaryTag::FluidDirichlet),
    )
    .unwrap();
    let params = PhysicalParams { mu: MU, ..PhysicalParams::pressure_wave(1.0) };
    let beta_p = 0.1;
    let ops = assemble_fluid(&mesh, &params).unwrap();
    let dofs = DofMap::new(&mesh, &[]);
    let a = fluid_saddle_matrix(&ops, &dofs, 0.0, None, beta_p, PressureMode::ZeroMean).unwrap();
    let load = body_force_load(&mesh, forcing).unwrap();
    let mut rhs = dofs.restrict(&load);
    rhs.resize(a.nrows(), 0.0);
    let x = solve_general(&a, &rhs, DEFAULT_TOL).unwrap();
    let u = dofs.extend(&x[..dofs.n_free()]);
    h1_error(&mesh, &u)
}

/// H1 errors on grids 8, 16, 32, 64 and the rates between them.
pub fn refinement_rates() -> (Vec<f64>, Vec<f64>) {
    let errors: Vec<f64> = [8, 16, 32, 64].iter().map(|&n| solve(n)).collect();
    let rates = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    (errors, rates)
}
