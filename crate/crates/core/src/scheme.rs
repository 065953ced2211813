//! The CS-EBT2 semi-implicit central scheme.
//!
//! One step maps cell averages on one grid family to the other:
//!
//! * predictor, per cell:
//!   `U* = U_i + dt/2 [ g(U*)/eps - f'_i/dx ]`
//! * corrector, per staggered cell between `i` and `i+1`:
//!   ```text
//!   U = (U_i + U_{i+1})/2 + (U'_i - U'_{i+1})/8 - dt/dx [F(U*_{i+1}) - F(U*_i)]
//!       + dt/(2 eps) [ 2 g(U) - dt/2 Jbar ( g(U)/eps - (F_{i+1} - F_i)/dx ) ]
//!   ```
//!   with `Jbar = (dg/dU(U_i) + dg/dU(U_{i+1}))/2`.
//!
//! `U'` and `f'` are MinMod-limited undivided differences of the states and of
//! the point fluxes. Both implicit equations are solved cell by cell with
//! [`solve_cell_implicit`].

use crate::error::{Error, Result};
use crate::linalg::{mat_mul, mat_vec, solve_in_place, MAX_DIM};
use crate::mesh::{pad_with_ghosts, project_staggered_to_primal, BoundaryKind, Parity, SolutionField};
use crate::models::{BalanceLaw, StiffSource};
use crate::reconstruction::limited_slopes;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionPolicy {
    /// Step on alternating grids; average back to the primal cells only at
    /// the end of the run.
    AlternateThenProject,
    /// Average back to the primal cells after every staggered step.
    ProjectEveryStep,
}

impl std::fmt::Display for ProjectionPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProjectionPolicy::AlternateThenProject => "alternate",
            ProjectionPolicy::ProjectEveryStep => "every-step",
        })
    }
}

impl std::str::FromStr for ProjectionPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "alternate" | "alternate-then-project" => Ok(ProjectionPolicy::AlternateThenProject),
            "every-step" | "project-every-step" => Ok(ProjectionPolicy::ProjectEveryStep),
            other => Err(Error::Parse(format!(
                "unknown projection policy `{other}` (expected alternate|every-step)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub cfl: f64,
    /// Relaxation parameter; the source is `g/eps`.
    pub eps: f64,
    pub bc: BoundaryKind,
    pub t_final: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub projection: ProjectionPolicy,
}

impl SchemeConfig {
    pub fn new(cfl: f64, eps: f64, bc: BoundaryKind, t_final: f64) -> Result<Self> {
        let config = Self {
            cfl,
            eps,
            bc,
            t_final,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            projection: ProjectionPolicy::AlternateThenProject,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidParameter(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_final must be non-negative, got {}",
                self.t_final
            )));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return Err(Error::InvalidParameter("bad Newton settings".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    pub dt_used: f64,
    pub newton_iters_max: usize,
    /// Largest scaled Newton correction left when the cell solves stopped.
    pub implicit_residual_max: f64,
    /// The nominal step produced an inadmissible state and was halved.
    pub dt_halved: bool,
}

impl StepReport {
    fn absorb(&mut self, cell: &CellSolution) {
        self.newton_iters_max = self.newton_iters_max.max(cell.iterations);
        self.implicit_residual_max = self.implicit_residual_max.max(cell.residual);
    }
}

/// `cfl * dx / max_i Lambda(U_i)`. A field with no wave motion at all falls
/// back to `cfl * dx`.
pub fn compute_dt<M: BalanceLaw + ?Sized>(model: &M, field: &SolutionField, cfl: f64) -> f64 {
    let lambda = field
        .cells()
        .map(|u| model.max_wave_speed(u))
        .fold(0.0_f64, f64::max);
    let dx = field.grid.dx();
    if lambda > 0.0 {
        cfl * dx / lambda
    } else {
        cfl * dx
    }
}

/// Clamp `dt` so that `t + dt` does not pass `t_final`.
pub fn clamp_dt(dt: f64, t: f64, t_final: f64) -> f64 {
    dt.min(t_final - t).max(0.0)
}

/// One implicit per-cell equation
/// `U - cs g(U) + ce Jbar g(U) = rhs`.
#[derive(Debug, Clone, Copy)]
pub struct ImplicitSystem<'a> {
    pub rhs: &'a [f64],
    pub source_coeff: f64,
    pub ebt_coeff: f64,
    /// Row-major `d x d`; required when `ebt_coeff != 0`.
    pub jbar: Option<&'a [f64]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellSolution {
    pub u: [f64; MAX_DIM],
    pub iterations: usize,
    /// Scaled size `|dU|_inf / (1 + |U|_inf)` of the last Newton correction.
    pub residual: f64,
}

impl CellSolution {
    pub fn state(&self, d: usize) -> &[f64] {
        &self.u[..d]
    }
}

fn residual_into<S: StiffSource + ?Sized>(
    src: &S,
    sys: &ImplicitSystem<'_>,
    u: &[f64],
    g: &mut [f64],
    out: &mut [f64],
) {
    let d = src.dim();
    src.source(u, g);
    let mut jg = [0.0; MAX_DIM];
    if sys.ebt_coeff != 0.0 {
        mat_vec(sys.jbar.expect("jbar required"), g, &mut jg, d);
    }
    for k in 0..d {
        out[k] = u[k] - sys.source_coeff * g[k] + sys.ebt_coeff * jg[k] - sys.rhs[k];
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Solve one per-cell implicit equation.
///
/// Rows whose source vanishes identically are explicit and are set first.
/// The remaining rows are solved by Newton's method with the analytic
/// Jacobian `I - cs dg/dU + ce Jbar dg/dU`; when `g` is affine in those rows
/// the first iterate is already the exact solution and the second only
/// confirms it. Iteration stops once the scaled correction drops below
/// `tol`. On failure the error carries the iteration count and the last
/// correction (the cell index is filled in by the caller).
pub fn solve_cell_implicit<S: StiffSource + ?Sized>(
    src: &S,
    sys: &ImplicitSystem<'_>,
    tol: f64,
    max_iter: usize,
) -> Result<CellSolution> {
    let d = src.dim();
    assert!(d <= MAX_DIM, "state dimension {d} exceeds {MAX_DIM}");
    let mut u = [0.0; MAX_DIM];
    u[..d].copy_from_slice(&sys.rhs[..d]);

    let mut active = [0usize; MAX_DIM];
    let mut n_active = 0;
    for k in 0..d {
        if src.source_row_active(k) {
            active[n_active] = k;
            n_active += 1;
        }
    }
    if n_active == 0 {
        return Ok(CellSolution {
            u,
            iterations: 0,
            residual: 0.0,
        });
    }

    let mut g = [0.0; MAX_DIM];
    let mut r = [0.0; MAX_DIM];
    let mut jac = [0.0; MAX_DIM * MAX_DIM];
    let mut ebt = [0.0; MAX_DIM * MAX_DIM];
    let mut m = [0.0; MAX_DIM * MAX_DIM];
    let mut delta = [0.0; MAX_DIM];
    let mut trial = [0.0; MAX_DIM];
    let mut r_trial = [0.0; MAX_DIM];

    residual_into(src, sys, &u[..d], &mut g, &mut r);
    let mut r_norm = inf_norm(&r[..d]);
    let mut last = f64::INFINITY;

    for iter in 1..=max_iter {
        src.source_jacobian(&u[..d], &mut jac);
        if sys.ebt_coeff != 0.0 {
            mat_mul(sys.jbar.expect("jbar required"), &jac, &mut ebt, d);
        }
        for (a, &i) in active[..n_active].iter().enumerate() {
            for (b, &j) in active[..n_active].iter().enumerate() {
                let identity = if i == j { 1.0 } else { 0.0 };
                let mut v = identity - sys.source_coeff * jac[i * d + j];
                if sys.ebt_coeff != 0.0 {
                    v += sys.ebt_coeff * ebt[i * d + j];
                }
                m[a * n_active + b] = v;
            }
            delta[a] = r[i];
        }
        if !solve_in_place(&mut m, &mut delta, n_active) {
            return Err(Error::NewtonFailure {
                cell: -1,
                iterations: iter,
                residual: last,
            });
        }

        // damped update: halve while the trial state blows up or the residual grows
        let step_size = inf_norm(&delta[..n_active]);
        let mut lambda = 1.0;
        for _ in 0..10 {
            trial = u;
            for (a, &i) in active[..n_active].iter().enumerate() {
                trial[i] -= lambda * delta[a];
            }
            residual_into(src, sys, &trial[..d], &mut g, &mut r_trial);
            let rt = inf_norm(&r_trial[..d]);
            let small = lambda * step_size <= 1e-8 * (1.0 + inf_norm(&trial[..d]));
            if rt.is_finite() && trial[..d].iter().all(|v| v.is_finite()) && (rt <= r_norm || small) {
                break;
            }
            lambda *= 0.5;
        }
        u = trial;
        r = r_trial;
        r_norm = inf_norm(&r[..d]);
        last = lambda * step_size / (1.0 + inf_norm(&u[..d]));
        if !last.is_finite() {
            break;
        }
        if last <= tol {
            return Ok(CellSolution {
                u,
                iterations: iter,
                residual: last,
            });
        }
    }
    Err(Error::NewtonFailure {
        cell: -1,
        iterations: max_iter,
        residual: last,
    })
}

fn tag_cell(err: Error, cell: isize, time: f64) -> Error {
    match err {
        Error::NewtonFailure {
            iterations,
            residual,
            ..
        } => Error::NewtonFailure {
            cell,
            iterations,
            residual,
        },
        Error::Inadmissible { state, .. } => Error::Inadmissible { cell, time, state },
        other => other,
    }
}

/// Predictor: midpoint states `U^{n+1/2}` for each cell from its state, its
/// limited flux slope and the step size.
pub fn predictor<M: BalanceLaw + ?Sized>(
    model: &M,
    state: &[f64],
    flux_slope: &[f64],
    dt: f64,
    dx: f64,
    config: &SchemeConfig,
) -> Result<CellSolution> {
    let d = model.dim();
    let mut rhs = [0.0; MAX_DIM];
    for k in 0..d {
        rhs[k] = state[k] - 0.5 * dt * flux_slope[k] / dx;
    }
    let sys = ImplicitSystem {
        rhs: &rhs[..d],
        source_coeff: 0.5 * dt / config.eps,
        ebt_coeff: 0.0,
        jbar: None,
    };
    solve_cell_implicit(model, &sys, config.newton_tol, config.newton_max_iter)
}

/// Inputs of the corrector for the staggered cell between two neighbours.
#[derive(Debug, Clone, Copy)]
pub struct CorrectorStencil<'a> {
    pub left: &'a [f64],
    pub right: &'a [f64],
    pub left_slope: &'a [f64],
    pub right_slope: &'a [f64],
    /// `F(U^{n+1/2})` of the two neighbours.
    pub left_mid_flux: &'a [f64],
    pub right_mid_flux: &'a [f64],
    /// Point fluxes `F(U^n)` of the two neighbours.
    pub left_flux: &'a [f64],
    pub right_flux: &'a [f64],
    /// `dg/dU` at the two neighbours' `U^n`.
    pub left_jacobian: &'a [f64],
    pub right_jacobian: &'a [f64],
}

/// Corrector: the staggered average at `t + dt`.
pub fn corrector<M: BalanceLaw + ?Sized>(
    model: &M,
    s: &CorrectorStencil<'_>,
    dt: f64,
    dx: f64,
    config: &SchemeConfig,
) -> Result<CellSolution> {
    let d = model.dim();
    let eps = config.eps;
    let lambda = dt / dx;
    let mut jbar = [0.0; MAX_DIM * MAX_DIM];
    for (k, j) in jbar[..d * d].iter_mut().enumerate() {
        *j = 0.5 * (s.left_jacobian[k] + s.right_jacobian[k]);
    }
    let mut dflux = [0.0; MAX_DIM];
    for k in 0..d {
        dflux[k] = (s.right_flux[k] - s.left_flux[k]) / dx;
    }
    let mut jdf = [0.0; MAX_DIM];
    mat_vec(&jbar, &dflux, &mut jdf, d);

    let mut rhs = [0.0; MAX_DIM];
    let taylor = dt * dt / (4.0 * eps);
    for k in 0..d {
        rhs[k] = 0.5 * (s.left[k] + s.right[k]) + 0.125 * (s.left_slope[k] - s.right_slope[k])
            - lambda * (s.right_mid_flux[k] - s.left_mid_flux[k])
            + taylor * jdf[k];
    }
    let sys = ImplicitSystem {
        rhs: &rhs[..d],
        source_coeff: dt / eps,
        ebt_coeff: dt * dt / (4.0 * eps * eps),
        jbar: Some(&jbar[..d * d]),
    };
    solve_cell_implicit(model, &sys, config.newton_tol, config.newton_max_iter)
}

/// Advance `field` by one CS-EBT2 step of size `dt` without any step-size
/// control. The result lives on the opposite grid family.
pub fn step_with_dt<M: BalanceLaw + ?Sized>(
    model: &M,
    field: &SolutionField,
    config: &SchemeConfig,
    dt: f64,
) -> Result<(SolutionField, StepReport)> {
    let d = model.dim();
    if field.n_comp != d {
        return Err(Error::GridMismatch(format!(
            "field has {} components, model {} has {d}",
            field.n_comp,
            model.name()
        )));
    }
    let n = field.n_cells();
    let dx = field.grid.dx();
    let time = field.time;
    for (i, u) in field.cells().enumerate() {
        if !model.admissible(u) {
            return Err(Error::Inadmissible {
                cell: i as isize,
                time,
                state: u.to_vec(),
            });
        }
    }

    // padded row r holds cell r - 2
    let padded = pad_with_ghosts(field, config.bc, 2)?;
    let rows = n + 4;
    let mut flux = vec![0.0; rows * d];
    for r in 0..rows {
        model.flux(&padded[r * d..(r + 1) * d], &mut flux[r * d..(r + 1) * d]);
    }
    // slope cell s is padded row s + 1
    let slopes = limited_slopes(&padded, d);
    let flux_slopes = limited_slopes(&flux, d);

    // corrector pairs (r, r+1) for r in first..first+n
    let first = match field.grid.parity() {
        Parity::Primal => 2,
        Parity::Staggered => 1,
    };
    let mut report = StepReport {
        dt_used: dt,
        ..StepReport::default()
    };

    let needed = first..first + n + 1;
    let mut mid_flux = vec![0.0; rows * d];
    let mut jac = vec![0.0; rows * d * d];
    for r in needed.clone() {
        let state = &padded[r * d..(r + 1) * d];
        let mid = predictor(model, state, flux_slopes.cell(r - 1), dt, dx, config)
            .map_err(|e| tag_cell(e, r as isize - 2, time))?;
        report.absorb(&mid);
        let mid = mid.state(d);
        if !model.admissible(mid) {
            return Err(Error::Inadmissible {
                cell: r as isize - 2,
                time: time + 0.5 * dt,
                state: mid.to_vec(),
            });
        }
        model.flux(mid, &mut mid_flux[r * d..(r + 1) * d]);
        model.source_jacobian(state, &mut jac[r * d * d..(r + 1) * d * d]);
    }

    let mut out = SolutionField::zeros(field.grid.flipped(), d);
    out.time = time + dt;
    let row = |v: &[f64], r: usize, w: usize| -> std::ops::Range<usize> {
        let _ = v;
        r * w..(r + 1) * w
    };
    for i in 0..n {
        let r = first + i;
        let stencil = CorrectorStencil {
            left: &padded[row(&padded, r, d)],
            right: &padded[row(&padded, r + 1, d)],
            left_slope: slopes.cell(r - 1),
            right_slope: slopes.cell(r),
            left_mid_flux: &mid_flux[row(&mid_flux, r, d)],
            right_mid_flux: &mid_flux[row(&mid_flux, r + 1, d)],
            left_flux: &flux[row(&flux, r, d)],
            right_flux: &flux[row(&flux, r + 1, d)],
            left_jacobian: &jac[row(&jac, r, d * d)],
            right_jacobian: &jac[row(&jac, r + 1, d * d)],
        };
        let sol = corrector(model, &stencil, dt, dx, config).map_err(|e| tag_cell(e, i as isize, time))?;
        report.absorb(&sol);
        let u = sol.state(d);
        if !model.admissible(u) {
            return Err(Error::Inadmissible {
                cell: i as isize,
                time: time + dt,
                state: u.to_vec(),
            });
        }
        out.cell_mut(i).copy_from_slice(u);
    }
    Ok((out, report))
}

/// One CS-EBT2 step with the CFL time step, clamped to `config.t_final`.
///
/// A step that produces an inadmissible state is retried once with half the
/// time step before the failure is reported.
pub fn step<M: BalanceLaw + ?Sized>(
    model: &M,
    field: &SolutionField,
    config: &SchemeConfig,
) -> Result<(SolutionField, StepReport)> {
    let dt = clamp_dt(compute_dt(model, field, config.cfl), field.time, config.t_final);
    match step_with_dt(model, field, config, dt) {
        Err(Error::Inadmissible { .. }) => {
            let (out, mut report) = step_with_dt(model, field, config, 0.5 * dt)?;
            report.dt_halved = true;
            Ok((out, report))
        }
        other => other,
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    /// Final state on the primal grid.
    pub field: SolutionField,
    pub steps: usize,
    pub newton_iters_max: usize,
    pub implicit_residual_max: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub halved_steps: usize,
}

/// March `initial` to `config.t_final`, returning the primal-grid result.
pub fn evolve<M: BalanceLaw + ?Sized>(
    model: &M,
    initial: &SolutionField,
    config: &SchemeConfig,
) -> Result<RunSummary> {
    config.validate()?;
    if initial.grid.parity() != Parity::Primal {
        return Err(Error::GridMismatch("runs start on the primal grid".into()));
    }
    let mut field = initial.clone();
    let mut summary = RunSummary {
        field: initial.clone(),
        steps: 0,
        newton_iters_max: 0,
        implicit_residual_max: 0.0,
        dt_min: f64::INFINITY,
        dt_max: 0.0,
        halved_steps: 0,
    };
    let t_final = config.t_final;
    let slack = 1e-13 * t_final.abs().max(1.0);
    while t_final - field.time > slack {
        let (mut next, report) = step(model, &field, config)?;
        if report.dt_used <= 0.0 {
            return Err(Error::InvalidParameter("time step collapsed to zero".into()));
        }
        if !report.dt_halved && (next.time - t_final).abs() <= slack {
            next.time = t_final;
        }
        if config.projection == ProjectionPolicy::ProjectEveryStep && next.grid.parity() == Parity::Staggered {
            next = project_staggered_to_primal(&next, config.bc)?;
        }
        summary.steps += 1;
        summary.newton_iters_max = summary.newton_iters_max.max(report.newton_iters_max);
        summary.implicit_residual_max = summary.implicit_residual_max.max(report.implicit_residual_max);
        summary.dt_min = summary.dt_min.min(report.dt_used);
        summary.dt_max = summary.dt_max.max(report.dt_used);
        summary.halved_steps += report.dt_halved as usize;
        field = next;
    }
    if field.grid.parity() == Parity::Staggered {
        field = project_staggered_to_primal(&field, config.bc)?;
    }
    summary.field = field;
    Ok(summary)
}

/// A split ODE `y' = f(y) + g(y)` with `f` treated explicitly and `g`
/// implicitly.
pub trait SplitOde: StiffSource {
    fn explicit_rate(&self, y: &[f64], out: &mut [f64]);
}

/// The CS-EBT2 time discretisation written for a split ODE,
///
/// ```text
/// y* = y + dt/2 f(y) + dt/2 g(y*)
/// y+ = y + dt f(y*) + dt g(y+) - dt^2/4 dg/dy(y) (g(y+) + f(y))
/// ```
///
/// using the same implicit cell solver as the PDE step.
pub fn semi_discrete_step<P: SplitOde + ?Sized>(
    problem: &P,
    y: &[f64],
    dt: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let d = problem.dim();
    let mut f0 = [0.0; MAX_DIM];
    problem.explicit_rate(y, &mut f0);
    let mut rhs = [0.0; MAX_DIM];
    for k in 0..d {
        rhs[k] = y[k] + 0.5 * dt * f0[k];
    }
    let half = solve_cell_implicit(
        problem,
        &ImplicitSystem {
            rhs: &rhs[..d],
            source_coeff: 0.5 * dt,
            ebt_coeff: 0.0,
            jbar: None,
        },
        tol,
        max_iter,
    )?;
    let mut f_half = [0.0; MAX_DIM];
    problem.explicit_rate(half.state(d), &mut f_half);
    let mut jac = [0.0; MAX_DIM * MAX_DIM];
    problem.source_jacobian(y, &mut jac);
    let mut jf = [0.0; MAX_DIM];
    mat_vec(&jac, &f0, &mut jf, d);
    for k in 0..d {
        rhs[k] = y[k] + dt * f_half[k] - 0.25 * dt * dt * jf[k];
    }
    let full = solve_cell_implicit(
        problem,
        &ImplicitSystem {
            rhs: &rhs[..d],
            source_coeff: dt,
            ebt_coeff: 0.25 * dt * dt,
            jbar: Some(&jac[..d * d]),
        },
        tol,
        max_iter,
    )?;
    Ok(full.state(d).to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Grid1D;
    use crate::models::auxiliary::{Inert, LinearDecay};
    use crate::models::ModelSpec;
    use approx::assert_relative_eq;

    fn config(cfl: f64, eps: f64, bc: BoundaryKind, t_final: f64) -> SchemeConfig {
        SchemeConfig::new(cfl, eps, bc, t_final).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SchemeConfig::new(1.2, 1.0, BoundaryKind::Periodic, 1.0).is_err());
        assert!(SchemeConfig::new(0.0, 1.0, BoundaryKind::Periodic, 1.0).is_err());
        assert!(SchemeConfig::new(0.5, 0.0, BoundaryKind::Periodic, 1.0).is_err());
        assert!(SchemeConfig::new(0.5, 1.0, BoundaryKind::Periodic, -1.0).is_err());
    }

    #[test]
    fn dt_from_cfl_rule() {
        let jx = ModelSpec::jin_xin(0.7).unwrap();
        let g = Grid1D::new(0.0, 1.0, 320).unwrap();
        let f = SolutionField::from_point_values(g, 2, |x, c| {
            c[0] = x.sin();
            c[1] = 0.7 * c[0];
        });
        assert_relative_eq!(compute_dt(&jx, &f, 0.9), 0.0028125, max_relative = 1e-14);

        let eu = ModelSpec::euler_friction(1.4).unwrap();
        let g = Grid1D::new(0.0, 1.0, 200).unwrap();
        let f = SolutionField::from_point_values(g, 3, |_, c| c.copy_from_slice(&[1.0, 0.0, 2.5]));
        assert_relative_eq!(compute_dt(&eu, &f, 0.9), 0.9 * 0.005 / 1.4f64.sqrt(), max_relative = 1e-14);
        assert!((compute_dt(&eu, &f, 0.9) - 0.003803).abs() < 1e-6);

        assert_eq!(clamp_dt(0.01, 0.35 - 1e-4, 0.35), 0.35 - (0.35 - 1e-4));
        assert!((clamp_dt(0.01, 0.35 - 1e-4, 0.35) - 1e-4).abs() < 1e-15);

        let inert = Inert { dim: 1 };
        let f = SolutionField::zeros(Grid1D::new(0.0, 1.0, 10).unwrap(), 1);
        assert_relative_eq!(compute_dt(&inert, &f, 0.5), 0.05);
    }

    #[test]
    fn predictor_on_scalar_decay() {
        // y' = -y/eps, no flux: y* = 1/(1 + dt/(2 eps))
        let m = LinearDecay { rate: -1.0 };
        let cfg = config(0.5, 0.05, BoundaryKind::Periodic, 1.0);
        let sol = predictor(&m, &[1.0], &[0.0], 0.1, 0.01, &cfg).unwrap();
        assert_relative_eq!(sol.u[0], 0.5, max_relative = 1e-14);
    }

    #[test]
    fn predictor_zero_source_rows_are_explicit() {
        let m = ModelSpec::broadwell();
        let cfg = config(0.9, 1e-6, BoundaryKind::Periodic, 1.0);
        let (dt, dx) = (0.01, 0.02);
        let state = [1.2, 0.3, 0.7];
        let fs = [0.05, -0.02, 0.01];
        let sol = predictor(&m, &state, &fs, dt, dx, &cfg).unwrap();
        assert_eq!(sol.u[0], state[0] - 0.5 * dt * fs[0] / dx);
        assert_eq!(sol.u[1], state[1] - 0.5 * dt * fs[1] / dx);
    }

    #[test]
    fn predictor_jinxin_triangular_solve() {
        let a = 0.7;
        let m = ModelSpec::jin_xin(a).unwrap();
        let (dt, dx, eps) = (0.003, 0.01, 1e-3);
        let cfg = config(0.9, eps, BoundaryKind::Periodic, 1.0);
        let (u, v) = (0.4, -0.1);
        let fs = [0.02, -0.03];
        let sol = predictor(&m, &[u, v], &fs, dt, dx, &cfg).unwrap();
        let u_half = u - 0.5 * dt * fs[0] / dx;
        let c = 0.5 * dt / eps;
        let v_half = (v - 0.5 * dt * fs[1] / dx + c * a * u_half) / (1.0 + c);
        assert_relative_eq!(sol.u[0], u_half, max_relative = 1e-15);
        assert_relative_eq!(sol.u[1], v_half, max_relative = 1e-13);
    }

    #[test]
    fn linear_source_matches_closed_form() {
        // g = B u, ebt term with Jbar = B: (I - c1 B + c2 B B) u = rhs
        struct Linear;
        impl StiffSource for Linear {
            fn dim(&self) -> usize {
                2
            }
            fn source(&self, u: &[f64], out: &mut [f64]) {
                out[0] = -2.0 * u[0] + 0.5 * u[1];
                out[1] = 0.3 * u[0] - 1.0 * u[1];
            }
            fn source_jacobian(&self, _u: &[f64], out: &mut [f64]) {
                out[..4].copy_from_slice(&[-2.0, 0.5, 0.3, -1.0]);
            }
        }
        let b = [-2.0, 0.5, 0.3, -1.0];
        let (c1, c2) = (0.8, 0.16);
        let rhs = [1.0, -0.5];
        let sol = solve_cell_implicit(
            &Linear,
            &ImplicitSystem {
                rhs: &rhs,
                source_coeff: c1,
                ebt_coeff: c2,
                jbar: Some(&b),
            },
            1e-14,
            50,
        )
        .unwrap();
        // closed form via explicit 2x2 inverse
        let mut bb = [0.0; 4];
        mat_mul(&b, &b, &mut bb, 2);
        let m: Vec<f64> = (0..4)
            .map(|k| if k % 3 == 0 { 1.0 } else { 0.0 } - c1 * b[k] + c2 * bb[k])
            .collect();
        let det = m[0] * m[3] - m[1] * m[2];
        let x0 = (m[3] * rhs[0] - m[1] * rhs[1]) / det;
        let x1 = (-m[2] * rhs[0] + m[0] * rhs[1]) / det;
        assert_relative_eq!(sol.u[0], x0, max_relative = 1e-14);
        assert_relative_eq!(sol.u[1], x1, max_relative = 1e-14);
        assert!(sol.iterations <= 2);
    }

    #[test]
    fn broadwell_and_friction_solves_converge_quickly() {
        let cfg = config(0.9, 1e-8, BoundaryKind::Periodic, 1.0);
        let bw = ModelSpec::broadwell();
        let sol = predictor(&bw, &[1.3, 0.4, 0.2], &[0.0; 3], 1e-3, 1e-2, &cfg).unwrap();
        let mut eq = [0.0; 3];
        bw.equilibrium(&sol.u[..3], &mut eq);
        assert!((sol.u[2] - eq[2]).abs() < 1e-4);
        assert!(sol.iterations <= 3);

        let fr = ModelSpec::euler_friction(1.4).unwrap();
        let sol = predictor(&fr, &[1.0, 0.5, 2.5], &[0.0; 3], 1e-3, 1e-2, &cfg).unwrap();
        assert!(sol.u[1].abs() < 1e-4);
        assert!(sol.iterations <= 4);
    }

    #[test]
    fn pure_ode_step_matches_stability_function() {
        // F = 0, g = rate*y, eps = 1: one step multiplies by 1/(1 - z + z^2/4)
        let g = Grid1D::new(0.0, 1.0, 8).unwrap();
        let dt = 0.5 * g.dx();
        let z: f64 = -2.0;
        let m = LinearDecay { rate: z / dt };
        let field = SolutionField::from_point_values(g, 1, |_, c| c[0] = 1.0);
        let cfg = config(0.5, 1.0, BoundaryKind::Periodic, 10.0);
        let (out, report) = step(&m, &field, &cfg).unwrap();
        assert_relative_eq!(report.dt_used, dt, max_relative = 1e-15);
        for v in out.data {
            assert_relative_eq!(v, 0.25, max_relative = 1e-14);
        }
    }

    #[test]
    fn constant_equilibrium_is_fixed_point() {
        let m = ModelSpec::broadwell();
        let g = Grid1D::new(0.0, 1.0, 16).unwrap();
        let mut state = [1.3, 0.4, 0.0];
        let mut eq = [0.0; 3];
        m.equilibrium(&state, &mut eq);
        state[2] = eq[2];
        let field = SolutionField::from_point_values(g, 3, |_, c| c.copy_from_slice(&state));
        let cfg = config(0.9, 1e-8, BoundaryKind::Periodic, 0.5);
        let (one, _) = step(&m, &field, &cfg).unwrap();
        let (two, _) = step(&m, &one, &cfg).unwrap();
        assert_eq!(two.grid.parity(), Parity::Primal);
        for c in two.cells() {
            for k in 0..3 {
                assert!((c[k] - state[k]).abs() <= 1e-13 * state[k].abs().max(1.0));
            }
        }
    }

    #[test]
    fn evolve_hits_final_time_exactly() {
        let m = ModelSpec::jin_xin(0.7).unwrap();
        let g = Grid1D::new(0.0, 1.0, 20).unwrap();
        let field = SolutionField::from_point_values(g, 2, |x, c| {
            c[0] = (2.0 * std::f64::consts::PI * x).sin();
            c[1] = 0.7 * c[0];
        });
        let cfg = config(0.9, 1e-6, BoundaryKind::Periodic, 0.123);
        let run = evolve(&m, &field, &cfg).unwrap();
        assert_eq!(run.field.time, 0.123);
        assert_eq!(run.field.grid.parity(), Parity::Primal);
        assert!(run.implicit_residual_max <= cfg.newton_tol);
    }

    #[test]
    fn zero_final_time_returns_initial_state() {
        let m = ModelSpec::jin_xin(0.7).unwrap();
        let g = Grid1D::new(0.0, 1.0, 20).unwrap();
        let field = SolutionField::from_point_values(g, 2, |x, c| {
            c[0] = x;
            c[1] = 0.0;
        });
        let cfg = config(0.9, 1e-6, BoundaryKind::Periodic, 0.0);
        let run = evolve(&m, &field, &cfg).unwrap();
        assert_eq!(run.steps, 0);
        assert_eq!(run.field, field);
    }

    #[test]
    fn inadmissible_input_is_rejected() {
        let m = ModelSpec::shallow_water();
        let g = Grid1D::new(0.0, 1.0, 8).unwrap();
        let mut field = SolutionField::from_point_values(g, 2, |_, c| c.copy_from_slice(&[1.0, 0.5]));
        field.cell_mut(3)[0] = -0.1;
        let cfg = config(0.9, 1e-6, BoundaryKind::Periodic, 1.0);
        match step(&m, &field, &cfg) {
            Err(Error::Inadmissible { cell, .. }) => assert_eq!(cell, 3),
            other => panic!("expected inadmissible, got {other:?}"),
        }
    }
}
