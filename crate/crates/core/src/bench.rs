//! Pressure-wave runs, refinement study, alpha sweep and energy check.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::diagnostics::{
    check_energy_identity, convergence_table, elastic_error, mean, prolong, EnergyLedger, IdentityCheck,
};
use crate::error::{BenchError, SolverError};
use crate::mesh::ChannelGeometry;
use crate::output::{write_vtk, Cell, CsvWriter, PointField};
use crate::problem::{CoupledState, Problem};
use crate::run::{build_stepper, run, run_with, Scheme};
use crate::splitting::TimeGrid;

/// Relative residual bound of the energy check.
pub const IDENTITY_TOL: f64 = 1e-9;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Output { path: path.display().to_string(), source }
}

fn time_grid(dt: f64, final_time: f64) -> Result<TimeGrid, SolverError> {
    TimeGrid::covering(dt, final_time)
        .ok_or_else(|| SolverError::Diagnostics(format!("step {dt} does not divide final time {final_time}")))
}

/// Solid interface node closest to the middle of the channel.
pub fn interface_midpoint(problem: &Problem) -> usize {
    let m = &problem.meshes.solid;
    m.grid_index(m.nx / 2, 0)
}

pub fn write_ledger_csv(path: &Path, ledger: &EnergyLedger) -> Result<(), BenchError> {
    let mut w = CsvWriter::create(path, &["n", "t", "S", "D", "residual"]).map_err(io_err(path))?;
    for e in &ledger.entries {
        w.row(&[Cell::Int(e.n), Cell::Num(e.t), Cell::Num(e.s), Cell::Num(e.d), Cell::Num(e.residual)])
            .map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_snapshot(out: &Path, k: usize, problem: &Problem, s: &CoupledState) -> Result<(), BenchError> {
    let title = format!("t = {}", crate::output::fmt_g17(s.t));
    let path = out.join(format!("fluid_{k:02}.vtk"));
    write_vtk(
        &path,
        &title,
        &problem.meshes.fluid,
        &[PointField::Vector("velocity", &s.u), PointField::Scalar("pressure", &s.p)],
    )
    .map_err(io_err(&path))?;
    let path = out.join(format!("solid_{k:02}.vtk"));
    write_vtk(
        &path,
        &title,
        &problem.meshes.solid,
        &[PointField::Vector("displacement", &s.eta), PointField::Vector("velocity", &s.q)],
    )
    .map_err(io_err(&path))
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub n_steps: usize,
    /// States at the configured snapshot times.
    pub snapshots: Vec<CoupledState>,
    pub final_state: CoupledState,
    pub ledger: EnergyLedger,
    pub files: Vec<PathBuf>,
}

/// Runs the configured scheme on the configured grid. The series CSV is
/// written level by level, so a solver failure leaves every completed level
/// on disk.
pub fn run_pressure_wave(cfg: &RunConfig, out: &Path) -> Result<RunSummary, BenchError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let grid = time_grid(cfg.dt, cfg.final_time)?;
    let problem = Problem::new(cfg.geometry, cfg.params)?;
    let stepper = build_stepper(&problem, cfg.dt, cfg.scheme)?;
    let snapshot_levels: Vec<usize> =
        cfg.outputs.snapshot_times.iter().map(|t| (t / cfg.dt).round() as usize).collect();
    let mid = interface_midpoint(&problem);

    let series_path = out.join(&cfg.outputs.series_csv);
    let mut series = CsvWriter::create(
        &series_path,
        &["n", "t", "inlet_pressure", "mid_disp_x", "mid_disp_y", "energy", "mechanical_energy"],
    )
    .map_err(io_err(&series_path))?;
    let mut snapshots = Vec::new();
    let mut write_err = None;
    let result = run_with(
        &problem,
        stepper.as_ref(),
        problem.zero_state(),
        grid.n_steps,
        |t| cfg.inlet.pressure(t),
        |s, e| {
            let row = series.row(&[
                Cell::Int(s.level),
                Cell::Num(s.t),
                Cell::Num(cfg.inlet.pressure(s.t)),
                Cell::Num(s.eta[2 * mid]),
                Cell::Num(s.eta[2 * mid + 1]),
                Cell::Num(e.s),
                Cell::Num(crate::diagnostics::mechanical_energy(&problem, s)),
            ]);
            if let Err(source) = row {
                write_err.get_or_insert(source);
                return Err(SolverError::Diagnostics("series output failed".into()));
            }
            if snapshot_levels.contains(&s.level) {
                snapshots.push(s.clone());
            }
            Ok(())
        },
    );
    series.flush().map_err(io_err(&series_path))?;
    if let Some(source) = write_err {
        return Err(BenchError::Output { path: series_path.display().to_string(), source });
    }
    let (final_state, ledger) = result?;

    let ledger_path = out.join(&cfg.outputs.ledger_csv);
    write_ledger_csv(&ledger_path, &ledger)?;
    let mut files = vec![series_path, ledger_path];
    if cfg.outputs.vtk {
        for (k, s) in snapshots.iter().enumerate() {
            write_snapshot(out, k, &problem, s)?;
            files.push(out.join(format!("fluid_{k:02}.vtk")));
            files.push(out.join(format!("solid_{k:02}.vtk")));
        }
    }
    Ok(RunSummary { n_steps: grid.n_steps, snapshots, final_state, ledger, files })
}

/// Runs `scheme` from rest under the configured inlet pulse and returns the
/// state at the configured final time.
pub fn solve_to_final_time(
    cfg: &RunConfig,
    geometry: ChannelGeometry,
    dt: f64,
    alpha: f64,
    scheme: Scheme,
) -> Result<(Problem, CoupledState), SolverError> {
    let grid = time_grid(dt, cfg.final_time)?;
    let params = crate::assembly::PhysicalParams { alpha, ..cfg.params };
    let problem = Problem::new(geometry, params)?;
    let final_state = {
        let stepper = build_stepper(&problem, dt, scheme)?;
        run(&problem, stepper.as_ref(), problem.zero_state(), grid.n_steps, |t| cfg.inlet.pressure(t), &[])?.final_state
    };
    Ok((problem, final_state))
}

/// Fine strongly coupled solution that errors are measured against.
pub struct Reference {
    pub problem: Problem,
    pub eta: Vec<f64>,
}

pub fn compute_reference(cfg: &RunConfig) -> Result<Reference, BenchError> {
    let geo = cfg.geometry_for_pitch(cfg.study.reference_pitch)?;
    let (problem, state) = solve_to_final_time(cfg, geo, cfg.study.reference_dt, cfg.params.alpha, Scheme::Monolithic)?;
    Ok(Reference { problem, eta: state.eta })
}

impl Reference {
    /// Relative elastic-norm error of a coarse displacement, interpolated onto the reference grid.
    pub fn error(&self, problem: &Problem, eta: &[f64]) -> Result<f64, SolverError> {
        let fine = prolong(&problem.meshes.solid, eta, &self.problem.meshes.solid);
        elastic_error(&self.eta, &fine, &self.problem.solid.elastic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub scheme: Scheme,
    pub level: usize,
    pub pitch: f64,
    pub dt: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeRates {
    pub scheme: Scheme,
    /// Errors per level.
    pub errors: Vec<f64>,
    /// Rates between consecutive levels.
    pub rates: Vec<f64>,
    pub mean_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub schemes: Vec<SchemeRates>,
}

impl ConvergenceReport {
    pub fn for_scheme(&self, scheme: Scheme) -> Option<&SchemeRates> {
        self.schemes.iter().find(|s| s.scheme == scheme)
    }
}

/// Runs `jobs` on scoped threads unless `sequential`; results keep input order.
fn map_jobs<T, R, F>(jobs: &[T], sequential: bool, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    if sequential {
        return jobs.iter().map(&f).collect();
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = jobs.iter().map(|j| s.spawn(|| f(j))).collect();
        handles.into_iter().map(|h| h.join().expect("worker thread panicked")).collect()
    })
}

/// Errors of every configured scheme at every level against `reference`.
pub fn convergence_against(cfg: &RunConfig, reference: &Reference) -> Result<ConvergenceReport, BenchError> {
    let mut jobs = Vec::new();
    for &scheme in &cfg.study.schemes {
        for level in 0..cfg.study.levels {
            jobs.push((scheme, level));
        }
    }
    let results = map_jobs(&jobs, cfg.deterministic, |&(scheme, level)| -> Result<ConvergenceRow, BenchError> {
        let (pitch, dt) = cfg.level(level);
        let geo = cfg.geometry_for_pitch(pitch)?;
        let (problem, state) = solve_to_final_time(cfg, geo, dt, cfg.params.alpha, scheme)?;
        let error = reference.error(&problem, &state.eta)?;
        Ok(ConvergenceRow { scheme, level, pitch, dt, error })
    });
    let rows: Vec<ConvergenceRow> = results.into_iter().collect::<Result<_, _>>()?;
    let mut schemes = Vec::new();
    for &scheme in &cfg.study.schemes {
        let errors: Vec<f64> = rows.iter().filter(|r| r.scheme == scheme).map(|r| r.error).collect();
        let rates = convergence_table(&errors)?;
        schemes.push(SchemeRates { scheme, mean_rate: mean(&rates), errors, rates });
    }
    Ok(ConvergenceReport { rows, schemes })
}

pub fn write_convergence_csv(path: &Path, report: &ConvergenceReport) -> Result<(), BenchError> {
    let mut w = CsvWriter::create(path, &["scheme", "level", "pitch", "dt", "error", "rate"]).map_err(io_err(path))?;
    for r in &report.rows {
        let s = report.for_scheme(r.scheme).expect("row scheme has rates");
        let label = r.scheme.label();
        let rate = if r.level == 0 { Cell::Text("") } else { Cell::Num(s.rates[r.level - 1]) };
        w.row(&[Cell::Text(&label), Cell::Int(r.level), Cell::Num(r.pitch), Cell::Num(r.dt), Cell::Num(r.error), rate])
            .map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    let path = &path.with_file_name("convergence_rates.csv");
    let mut w = CsvWriter::create(path, &["scheme", "mean_rate"]).map_err(io_err(path))?;
    for s in &report.schemes {
        w.row(&[Cell::Text(&s.scheme.label()), Cell::Num(s.mean_rate)]).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Reference solve, level runs and `convergence.csv` in `out`.
pub fn run_convergence(cfg: &RunConfig, out: &Path) -> Result<ConvergenceReport, BenchError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let reference = compute_reference(cfg)?;
    let report = convergence_against(cfg, &reference)?;
    write_convergence_csv(&out.join("convergence.csv"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub error: f64,
    /// Energy check of an unforced run with the same grid, step and alpha.
    pub identity: IdentityCheck,
}

/// Unforced loose run from random data; returns the energy ledger check.
pub fn energy_identity_run(
    geometry: ChannelGeometry,
    params: crate::assembly::PhysicalParams,
    dt: f64,
    n_steps: usize,
    seed: u64,
) -> Result<(IdentityCheck, EnergyLedger), SolverError> {
    let problem = Problem::new(geometry, params)?;
    let stepper = build_stepper(&problem, dt, Scheme::Loose { corrections: 0 })?;
    let init = problem.random_state(seed, dt);
    let (_, ledger) = run_with(&problem, stepper.as_ref(), init, n_steps, |_| 0.0, |_, _| Ok(()))?;
    Ok((check_energy_identity(&ledger, IDENTITY_TOL), ledger))
}

/// End-time error of the configured scheme for each alpha, at the configured grid and step.
pub fn sweep_against(cfg: &RunConfig, reference: &Reference) -> Result<Vec<SweepRow>, BenchError> {
    let n_steps = time_grid(cfg.dt, cfg.final_time)?.n_steps;
    let results = map_jobs(&cfg.study.alphas, cfg.deterministic, |&alpha| -> Result<SweepRow, BenchError> {
        let (problem, state) = solve_to_final_time(cfg, cfg.geometry, cfg.dt, alpha, cfg.scheme)?;
        let error = reference.error(&problem, &state.eta)?;
        let params = crate::assembly::PhysicalParams { alpha, ..cfg.params };
        let (identity, _) = energy_identity_run(cfg.geometry, params, cfg.dt, n_steps, cfg.study.energy_seed)?;
        Ok(SweepRow { alpha, error, identity })
    });
    results.into_iter().collect()
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), BenchError> {
    let mut w =
        CsvWriter::create(path, &["alpha", "error", "identity_residual", "identity_passed"]).map_err(io_err(path))?;
    for r in rows {
        let passed = if r.identity.passed { "true" } else { "false" };
        w.row(&[
            Cell::Num(r.alpha),
            Cell::Num(r.error),
            Cell::Num(r.identity.max_relative_residual),
            Cell::Text(passed),
        ])
        .map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn sweep_alpha(cfg: &RunConfig, out: &Path) -> Result<Vec<SweepRow>, BenchError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let reference = compute_reference(cfg)?;
    let rows = sweep_against(cfg, &reference)?;
    write_sweep_csv(&out.join("alpha_sweep.csv"), &rows)?;
    Ok(rows)
}

/// Unforced loose run from seeded random data on the configured grid;
/// writes `energy_ledger.csv`.
pub fn energy_check(cfg: &RunConfig, out: &Path) -> Result<IdentityCheck, BenchError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let n_steps = time_grid(cfg.dt, cfg.final_time)?.n_steps;
    let (check, ledger) = energy_identity_run(cfg.geometry, cfg.params, cfg.dt, n_steps, cfg.study.energy_seed)?;
    write_ledger_csv(&out.join("energy_ledger.csv"), &ledger)?;
    Ok(check)
}

/// Relative elastic-norm distance between two end states on the same grid.
pub fn end_state_difference(
    problem: &Problem,
    reference: &CoupledState,
    other: &CoupledState,
) -> Result<f64, SolverError> {
    elastic_error(&reference.eta, &other.eta, &problem.solid.elastic)
}
