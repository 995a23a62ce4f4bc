//! Linear initial-boundary solver on the dihedral domain.
//!
//! The wall condition is absorbed by an even reflection (`extend`), the
//! half-space problem is advanced by an explicit scheme (`stepper`), and the
//! solution is restricted back while per-step diagnostics and weighted
//! energies accumulate (`energy`).  The measured estimate compares both
//! sides of the a-priori energy inequality across a grid of exponential
//! weights.

mod compat;
mod energy;
mod extend;
mod field;
mod grid;
mod stepper;

pub use compat::{build_compatible_data, build_zero_data, CompatibleData, TraceFn, TraceJet};
pub use energy::{
    measure_estimate, EnergyLedger, EstimateReport, EstimateRow, SliceNorms, MAX_S,
    RATIO_SPREAD_BOUND,
};
pub use extend::{extend_problem, ExtendedField, VANISHING_TOL};
pub use field::{
    poly_bump2, BackgroundField, BoundaryCoeffs, CoefficientField, InteriorCoeffs, Manufactured,
    ManufacturedField, SpaceTimeJet,
};
pub use grid::{GridSpec, Window};
pub use stepper::{max_char_speed, StepRecord, Stepper};

use crate::background::ShockBackground;
use crate::error::Result;
use serde::Serialize;

/// Restricted solution and per-run diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct SolutionField {
    /// Final slice on the dihedral grid.
    pub final_restricted: Vec<f64>,
    /// Shock-face trace of the final slice.
    pub shock_trace: Vec<f64>,
    pub records: Vec<StepRecord>,
    pub max_evenness_defect: f64,
    pub max_neumann_residual: f64,
    /// Restricted slices at every level, kept only when requested.
    #[serde(skip)]
    pub history: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LpSolution {
    pub grid: GridSpec,
    pub window: Window,
    pub v_max: f64,
    pub field: SolutionField,
    pub ledger: EnergyLedger,
    /// L² error of the final slice against the reference, when supplied.
    pub final_error_l2: Option<f64>,
    /// Time-integrated L² shock-trace error against the reference.
    pub trace_error_l2: Option<f64>,
}

/// Solve the dihedral problem: extend across the wall, march the half-space
/// scheme, restrict, and account the energies.  `oracle` (exact profile, if
/// known) only adds error diagnostics; it never influences the run.
pub fn solve_lp(
    bg: &ShockBackground,
    field: &dyn CoefficientField,
    grid: &GridSpec,
    data: &CompatibleData,
    oracle: Option<&dyn Fn(f64, [f64; 3]) -> f64>,
) -> Result<LpSolution> {
    let extended = extend_problem(field, grid)?;
    let b1_ref = bg.boundary_coefficients()[1].abs();
    let mut stepper = Stepper::new(&extended, grid, data, b1_ref)?;
    let window = Window::for_run(grid, stepper.v_max);
    let mut ledger = EnergyLedger::new(grid.eta0, MAX_S, grid.t_final)?;
    if grid.probe_data {
        energy::probe_data_norms(&mut ledger, &extended, grid);
    }

    let ext = |res: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; grid.ext_len()];
        for i1 in 0..=grid.n1 {
            for i2 in 0..=grid.n2 {
                for i3 in 0..=2 * grid.n3 {
                    let i3r = (i3 as isize - grid.n3 as isize).unsigned_abs();
                    out[grid.idx(i1, i2, i3)] = res[grid.ridx(i1, i2, i3r)];
                }
            }
        }
        out
    };
    // exact t = 0 slice from the compatible traces
    let (e0, e1, e2) =
        (ext(&data.traces[0]), ext(&data.traces[1]), ext(&data.traces[2]));
    ledger.absorb(0.0, energy::slice_norms(grid, &window, &e0, &e1, &e2));

    let dt = grid.dt;
    let cfl = stepper.v_max * dt / grid.h_min();
    let mut records = Vec::new();
    let mut history: Option<Vec<Vec<f64>>> =
        grid.keep_history.then(|| vec![grid.restrict(&e0)]);
    let mut max_even = 0.0f64;
    let mut max_neu = 0.0f64;
    let mut trace_err_sq = 0.0f64;

    let push_record = |stepper: &Stepper, records: &mut Vec<StepRecord>,
                           max_even: &mut f64, max_neu: &mut f64, trace_err_sq: &mut f64,
                           history: &mut Option<Vec<Vec<f64>>>| {
        let (ii, tt, err) = stepper.window_norms(&window, oracle);
        let even = stepper.evenness_defect();
        let neu = stepper.neumann_residual();
        *max_even = max_even.max(even);
        *max_neu = max_neu.max(neu);
        if let Some(h) = history.as_mut() {
            h.push(stepper.grid.restrict(stepper.levels().2));
        }
        if let Some(e) = err {
            // trace error accumulates from the face values
            let g = stepper.grid;
            let t = stepper.level as f64 * g.dt;
            let mut face = 0.0;
            for i2 in 0..=g.n2 {
                for i3 in g.wall()..g.ext_dims().2 {
                    let y = g.coord(0, i2, i3);
                    if !window.contains(y) {
                        continue;
                    }
                    let d = stepper.levels().2[g.idx(0, i2, i3)]
                        - oracle.expect("error implies oracle")(t, y);
                    face += g.h2() * g.h3() * d * d;
                }
            }
            *trace_err_sq += g.dt * face;
            records.push(StepRecord {
                step: stepper.level,
                t,
                interior_l2: ii,
                boundary_trace_l2: tt,
                evenness_defect: even,
                neumann_residual: neu,
                cfl_number: cfl,
                error_l2: Some(e),
            });
        } else {
            records.push(StepRecord {
                step: stepper.level,
                t: stepper.level as f64 * dt,
                interior_l2: ii,
                boundary_trace_l2: tt,
                evenness_defect: even,
                neumann_residual: neu,
                cfl_number: cfl,
                error_l2: None,
            });
        }
    };

    // the Taylor level w(Δt) is the scheme's own start; record it
    push_record(&stepper, &mut records, &mut max_even, &mut max_neu, &mut trace_err_sq, &mut history);

    let steps = grid.steps();
    for _ in 1..steps {
        stepper.step_lpe()?;
        // centered slice at the previous level
        let (wm2, wm1, wc) = stepper.levels();
        let tn = (stepper.level - 1) as f64 * dt;
        let wt: Vec<f64> = (0..grid.ext_len()).map(|p| (wc[p] - wm2[p]) / (2.0 * dt)).collect();
        let wtt: Vec<f64> =
            (0..grid.ext_len()).map(|p| (wc[p] - 2.0 * wm1[p] + wm2[p]) / (dt * dt)).collect();
        ledger.absorb(tn, energy::slice_norms(grid, &window, wm1, &wt, &wtt));
        push_record(&stepper, &mut records, &mut max_even, &mut max_neu, &mut trace_err_sq, &mut history);
    }

    // final slice, one-sided in time
    let (wm2, wm1, wc) = stepper.levels();
    let t_end = stepper.level as f64 * dt;
    let wt: Vec<f64> = (0..grid.ext_len())
        .map(|p| (3.0 * wc[p] - 4.0 * wm1[p] + wm2[p]) / (2.0 * dt))
        .collect();
    let wtt: Vec<f64> =
        (0..grid.ext_len()).map(|p| (wc[p] - 2.0 * wm1[p] + wm2[p]) / (dt * dt)).collect();
    ledger.absorb(t_end, energy::slice_norms(grid, &window, wc, &wt, &wtt));

    let final_restricted = grid.restrict(wc);
    let mut shock_trace = Vec::with_capacity((grid.n2 + 1) * (grid.n3 + 1));
    for i2 in 0..=grid.n2 {
        for i3 in 0..=grid.n3 {
            shock_trace.push(final_restricted[grid.ridx(0, i2, i3)]);
        }
    }
    let final_error_l2 = records.last().and_then(|r| r.error_l2);
    Ok(LpSolution {
        grid: *grid,
        window,
        v_max: stepper.v_max,
        field: SolutionField {
            final_restricted,
            shock_trace,
            records,
            max_evenness_defect: max_even,
            max_neumann_residual: max_neu,
            history,
        },
        ledger,
        final_error_l2,
        trace_error_l2: if oracle.is_some() { Some(trace_err_sq.sqrt()) } else { None },
    })
}

/// Write the per-step diagnostics as CSV (comma separated, LF, header row).
pub fn write_step_csv(records: &[StepRecord], mut out: impl std::io::Write) -> Result<()> {
    writeln!(
        out,
        "step,t,interior_l2,boundary_trace_l2,evenness_defect,neumann_residual,cfl_number"
    )?;
    for r in records {
        writeln!(
            out,
            "{},{:.12e},{:.12e},{:.12e},{:.3e},{:.3e},{:.6}",
            r.step, r.t, r.interior_l2, r.boundary_trace_l2, r.evenness_defect,
            r.neumann_residual, r.cfl_number
        )?;
    }
    Ok(())
}
