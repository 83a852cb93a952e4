//! Time loop shared by every scheme.

use crate::diagnostics::{EnergyLedger, LedgerEntry};
use crate::error::SolverError;
use crate::monolithic::MonolithicSystem;
use crate::problem::{CoupledState, Problem};
use crate::splitting::{LooseCoupling, TimeStepper};

/// Coupling treatment of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Loosely coupled scheme with `corrections` extra sweeps per level.
    Loose {
        corrections: usize,
    },
    Monolithic,
}

impl Scheme {
    pub fn label(&self) -> String {
        match self {
            Scheme::Loose { corrections: 0 } => "loose".to_string(),
            Scheme::Loose { corrections } => format!("loose_{corrections}c"),
            Scheme::Monolithic => "monolithic".to_string(),
        }
    }
}

/// Factorizes the matrices of `scheme` for step `dt`.
pub fn build_stepper<'a>(
    problem: &'a Problem,
    dt: f64,
    scheme: Scheme,
) -> Result<Box<dyn TimeStepper + 'a>, SolverError> {
    Ok(match scheme {
        Scheme::Loose { corrections } => Box::new(LooseCoupling::new(problem, dt, corrections)?),
        Scheme::Monolithic => Box::new(MonolithicSystem::new(problem, dt)?),
    })
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// States at the requested levels, in increasing order.
    pub snapshots: Vec<CoupledState>,
    pub ledger: EnergyLedger,
    pub final_state: CoupledState,
}

/// Advances `initial` by `n_steps` levels; `inlet(t)` is the inlet pressure.
/// `observer` sees every new level with its ledger entry and may abort the run.
pub fn run_with<F, O>(
    problem: &Problem,
    stepper: &dyn TimeStepper,
    initial: CoupledState,
    n_steps: usize,
    inlet: F,
    mut observer: O,
) -> Result<(CoupledState, EnergyLedger), SolverError>
where
    F: Fn(f64) -> f64,
    O: FnMut(&CoupledState, &LedgerEntry) -> Result<(), SolverError>,
{
    let dt = stepper.dt();
    let mut ledger = EnergyLedger::new(problem, &initial, dt);
    observer(&initial, &ledger.entries[0])?;
    let mut state = initial;
    for _ in 0..n_steps {
        let t_next = state.t + dt;
        let next = stepper.step(&state, inlet(t_next))?;
        let entry = ledger.record(problem, &state, &next, dt);
        observer(&next, &entry)?;
        state = next;
    }
    Ok((state, ledger))
}

pub fn run<F: Fn(f64) -> f64>(
    problem: &Problem,
    stepper: &dyn TimeStepper,
    initial: CoupledState,
    n_steps: usize,
    inlet: F,
    snapshot_levels: &[usize],
) -> Result<Trajectory, SolverError> {
    let mut snapshots = Vec::new();
    let (final_state, ledger) = run_with(problem, stepper, initial, n_steps, inlet, |s, _| {
        if snapshot_levels.contains(&s.level) {
            snapshots.push(s.clone());
        }
        Ok(())
    })?;
    Ok(Trajectory { snapshots, ledger, final_state })
}
