//! Checks shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

pub mod mms;

use std::path::PathBuf;

use robin_fsi::assembly::{fluid_saddle_matrix, PhysicalParams, PressureMode};
use robin_fsi::config::{load_config, RunConfig};
use robin_fsi::diagnostics::{check_energy_identity, IdentityCheck};
use robin_fsi::run::{build_stepper, run_with, Scheme};
use robin_fsi::sparse::SparseMatrix;
use robin_fsi::splitting::{solid_step_matrix, LooseCoupling};
use robin_fsi::{ChannelGeometry, CoupledState, Problem};

pub fn benchmark_config_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../benchmark_fsi3.cfg")
}

pub fn benchmark_config() -> RunConfig {
    load_config(&benchmark_config_path()).expect("shipped benchmark config parses")
}

pub fn channel(nx: usize, ny_fluid: usize, ny_solid: usize) -> ChannelGeometry {
    ChannelGeometry { length: 6.0, radius: 0.5, thickness: 0.1, nx, ny_fluid, ny_solid }
}

/// Eigenvalues of a symmetric dense matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-30 * diag {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Unforced loose run from seeded random data.
pub fn identity_run(geo: ChannelGeometry, alpha: f64, dt: f64, n_steps: usize, seed: u64) -> IdentityCheck {
    let pb = Problem::new(geo, PhysicalParams::pressure_wave(alpha)).unwrap();
    let st = build_stepper(&pb, dt, Scheme::Loose { corrections: 0 }).unwrap();
    let init = pb.random_state(seed, dt);
    let (_, ledger) = run_with(&pb, st.as_ref(), init, n_steps, |_| 0.0, |_, _| Ok(())).unwrap();
    check_energy_identity(&ledger, 1e-9)
}

/// Worst symmetry defect over the assembled symmetric operators.
pub fn max_symmetry_defect(pb: &Problem, dt: f64) -> f64 {
    let p = &pb.params;
    let saddle = fluid_saddle_matrix(
        &pb.fluid,
        &pb.fluid_dofs,
        p.rho_f / dt,
        Some((p.alpha, &pb.interface.b_f)),
        p.beta_p,
        PressureMode::Free,
    )
    .unwrap();
    let mats: Vec<SparseMatrix> = vec![
        pb.fluid.mass.clone(),
        pb.fluid.viscous.clone(),
        pb.fluid.pressure_laplacian.clone(),
        pb.solid.mass.clone(),
        pb.solid.elastic.clone(),
        pb.stiffness.clone(),
        pb.interface.m_sigma.clone(),
        pb.interface.b_f.clone(),
        pb.interface.b_s.clone(),
        saddle,
        solid_step_matrix(pb, dt).unwrap(),
    ];
    mats.iter().map(|m| m.symmetry_defect()).fold(0.0, f64::max)
}

/// `|K r|_inf / (|K|_max |r|_inf)` over the three rigid motions, for the
/// elastic and viscous operators.
pub fn max_rigid_motion_residual(pb: &Problem) -> f64 {
    let mut worst = 0.0f64;
    for (mesh, k) in [(&pb.meshes.solid, &pb.solid.elastic), (&pb.meshes.fluid, &pb.fluid.viscous)] {
        let scale = (0..k.nrows()).flat_map(|i| k.row(i).map(|(_, v)| v.abs()).collect::<Vec<_>>()).fold(0.0, f64::max);
        let motions: [fn(f64, f64) -> [f64; 2]; 3] = [|_, _| [1.0, 0.0], |_, _| [0.0, 1.0], |x, y| [-y, x]];
        for m in &motions {
            let r: Vec<f64> = mesh.vertices.iter().flat_map(|p| m(p[0], p[1])).collect();
            let rmax = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let kr = k.apply(&r);
            let res = kr.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            worst = worst.max(res / (scale * rmax));
        }
    }
    worst
}

/// Smallest and largest eigenvalue of the reduced solid step matrix.
pub fn solid_step_spectrum(nx: usize, dt: f64) -> (f64, f64) {
    let pb = Problem::new(channel(nx, 2, 2), PhysicalParams::pressure_wave(500.0)).unwrap();
    let ev = jacobi_eigenvalues(solid_step_matrix(&pb, dt).unwrap().to_dense());
    let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Worst relative drift of `|eta|_K^2 + rho_s |q|_M^2` over `n_steps` solid
/// steps with vanishing Robin coefficient and zero interface data.
pub fn free_solid_drift(n_steps: usize) -> f64 {
    let params = PhysicalParams { alpha: 1e-300, ..PhysicalParams::pressure_wave(1.0) };
    let pb = Problem::new(channel(8, 2, 2), params).unwrap();
    let dt = 1e-4;
    let sch = LooseCoupling::new(&pb, dt, 0).unwrap();
    let mut s: CoupledState = pb.random_state(21, dt);
    let zero = vec![0.0; pb.n_trace()];
    let energy = |s: &CoupledState| pb.stiffness.quad_form(&s.eta) + params.rho_s * pb.solid.mass.quad_form(&s.q);
    let e0 = energy(&s);
    let mut worst = 0.0f64;
    for _ in 0..n_steps {
        let (q, eta) = sch.solid_step(&s, &zero, &zero).unwrap();
        s.q = q;
        s.eta = eta;
        worst = worst.max((energy(&s) - e0).abs() / e0);
    }
    worst
}
