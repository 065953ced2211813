//! Second-order IMEX Runge–Kutta reference solver.
//!
//! The flux divergence is discretised on the primal grid with MinMod-limited
//! MUSCL reconstruction and a local Lax–Friedrichs (Rusanov) numerical flux,
//! and advanced by the explicit half of the tableau; the stiff source uses the
//! diagonally implicit half. This is deliberately a different code path from
//! the staggered scheme so that it can serve as an independent reference.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mesh::{pad_with_ghosts, BoundaryKind, Parity, SolutionField};
use crate::models::BalanceLaw;
use crate::reconstruction::limited_slopes;
use crate::scheme::{clamp_dt, compute_dt, solve_cell_implicit, ImplicitSystem, RunSummary, SchemeConfig};

/// A pair of Butcher tableaux sharing the stage count. The explicit one is
/// strictly lower triangular, the implicit one lower triangular.
#[derive(Debug, Clone, PartialEq)]
pub struct ImexTableau {
    pub a_exp: Vec<Vec<f64>>,
    pub b_exp: Vec<f64>,
    pub c_exp: Vec<f64>,
    pub a_imp: Vec<Vec<f64>>,
    pub b_imp: Vec<f64>,
    pub c_imp: Vec<f64>,
}

impl ImexTableau {
    /// ARS(2,2,2): `gamma = 1 - 1/sqrt 2`, `delta = 1 - 1/(2 gamma)`.
    pub fn ars222() -> Self {
        let gamma = 1.0 - std::f64::consts::FRAC_1_SQRT_2;
        let delta = 1.0 - 1.0 / (2.0 * gamma);
        Self {
            a_exp: vec![
                vec![0.0, 0.0, 0.0],
                vec![gamma, 0.0, 0.0],
                vec![delta, 1.0 - delta, 0.0],
            ],
            b_exp: vec![delta, 1.0 - delta, 0.0],
            c_exp: vec![0.0, gamma, 1.0],
            a_imp: vec![
                vec![0.0, 0.0, 0.0],
                vec![0.0, gamma, 0.0],
                vec![0.0, 1.0 - gamma, gamma],
            ],
            b_imp: vec![0.0, 1.0 - gamma, gamma],
            c_imp: vec![0.0, gamma, 1.0],
        }
    }

    pub fn stages(&self) -> usize {
        self.b_exp.len()
    }

    /// Both `b` vectors equal the last rows of their tableaux, so the last
    /// stage is the new solution.
    pub fn stiffly_accurate(&self) -> bool {
        let s = self.stages();
        self.a_exp[s - 1] == self.b_exp && self.a_imp[s - 1] == self.b_imp
    }

    /// Largest defect over the row-sum, `sum b = 1` and `sum b c = 1/2`
    /// conditions of both tableaux, plus the coupling conditions
    /// `sum b c~ = sum b~ c = 1/2`.
    pub fn order_defect(&self) -> f64 {
        let s = self.stages();
        let mut worst: f64 = 0.0;
        for i in 0..s {
            worst = worst.max((self.a_exp[i].iter().sum::<f64>() - self.c_exp[i]).abs());
            worst = worst.max((self.a_imp[i].iter().sum::<f64>() - self.c_imp[i]).abs());
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        worst = worst.max((self.b_exp.iter().sum::<f64>() - 1.0).abs());
        worst = worst.max((self.b_imp.iter().sum::<f64>() - 1.0).abs());
        worst = worst.max((dot(&self.b_exp, &self.c_exp) - 0.5).abs());
        worst = worst.max((dot(&self.b_imp, &self.c_imp) - 0.5).abs());
        worst = worst.max((dot(&self.b_exp, &self.c_imp) - 0.5).abs());
        worst = worst.max((dot(&self.b_imp, &self.c_exp) - 0.5).abs());
        worst
    }

    /// One-step amplification on `y' = lambda1 y + lambda2 y` with
    /// `z1 = lambda1 dt` explicit and `z2 = lambda2 dt` implicit.
    pub fn stability_function(&self, z1: Complex64, z2: Complex64) -> Complex64 {
        let s = self.stages();
        let one = Complex64::new(1.0, 0.0);
        let mut y = vec![Complex64::new(0.0, 0.0); s];
        for i in 0..s {
            let mut acc = one;
            for j in 0..i {
                acc += (z1 * self.a_exp[i][j] + z2 * self.a_imp[i][j]) * y[j];
            }
            y[i] = acc / (one - z2 * self.a_imp[i][i]);
        }
        let mut out = one;
        for j in 0..s {
            out += (z1 * self.b_exp[j] + z2 * self.b_imp[j]) * y[j];
        }
        out
    }
}

/// `-(H_{i+1/2} - H_{i-1/2}) / dx` with MUSCL-MinMod interface states and
/// the Rusanov flux. Interfaces whose reconstructed states are inadmissible
/// fall back to the cell averages.
pub fn flux_divergence<M: BalanceLaw + ?Sized>(
    model: &M,
    field: &SolutionField,
    bc: BoundaryKind,
    out: &mut [f64],
) -> Result<()> {
    let d = model.dim();
    let n = field.n_cells();
    let dx = field.grid.dx();
    let padded = pad_with_ghosts(field, bc, 2)?;
    let slopes = limited_slopes(&padded, d);
    // interface q sits between cells q-1 and q, i.e. padded rows q+1 and q+2
    let mut h = vec![0.0; (n + 1) * d];
    let mut ul = vec![0.0; d];
    let mut ur = vec![0.0; d];
    let mut fl = vec![0.0; d];
    let mut fr = vec![0.0; d];
    for q in 0..=n {
        let (rl, rr) = (q + 1, q + 2);
        for k in 0..d {
            ul[k] = padded[rl * d + k] + 0.5 * slopes.cell(rl - 1)[k];
            ur[k] = padded[rr * d + k] - 0.5 * slopes.cell(rr - 1)[k];
        }
        if !(model.admissible(&ul) && model.admissible(&ur)) {
            ul.copy_from_slice(&padded[rl * d..(rl + 1) * d]);
            ur.copy_from_slice(&padded[rr * d..(rr + 1) * d]);
        }
        model.flux(&ul, &mut fl);
        model.flux(&ur, &mut fr);
        let alpha = model.max_wave_speed(&ul).max(model.max_wave_speed(&ur));
        for k in 0..d {
            h[q * d + k] = 0.5 * (fl[k] + fr[k]) - 0.5 * alpha * (ur[k] - ul[k]);
        }
    }
    for i in 0..n {
        for k in 0..d {
            out[i * d + k] = -(h[(i + 1) * d + k] - h[i * d + k]) / dx;
        }
    }
    Ok(())
}

/// One IMEX step of size `dt` with an arbitrary tableau.
pub fn imex_step_with<M: BalanceLaw + ?Sized>(
    tableau: &ImexTableau,
    model: &M,
    field: &SolutionField,
    dt: f64,
    config: &SchemeConfig,
) -> Result<SolutionField> {
    if field.grid.parity() != Parity::Primal {
        return Err(Error::GridMismatch("the IMEX solver works on the primal grid".into()));
    }
    let d = model.dim();
    let n = field.n_cells();
    let len = n * d;
    let s = tableau.stages();
    let eps = config.eps;
    let mut stage_fields: Vec<SolutionField> = Vec::with_capacity(s);
    let mut rates: Vec<Vec<f64>> = Vec::with_capacity(s);
    // g(U_j)/eps, recovered from the implicit solve where possible
    let mut sources: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut g = vec![0.0; d];

    for i in 0..s {
        let mut rhs = field.data.clone();
        for j in 0..i {
            let (ae, ai) = (tableau.a_exp[i][j], tableau.a_imp[i][j]);
            for idx in 0..len {
                rhs[idx] += dt * (ae * rates[j][idx] + ai * sources[j][idx]);
            }
        }
        let diag = tableau.a_imp[i][i];
        let mut stage = SolutionField::zeros(field.grid, d);
        stage.time = field.time + tableau.c_imp[i] * dt;
        let mut src = vec![0.0; len];
        for c in 0..n {
            let r = &rhs[c * d..(c + 1) * d];
            if diag != 0.0 {
                let sol = solve_cell_implicit(
                    model,
                    &ImplicitSystem {
                        rhs: r,
                        source_coeff: dt * diag / eps,
                        ebt_coeff: 0.0,
                        jbar: None,
                    },
                    config.newton_tol,
                    config.newton_max_iter,
                )
                .map_err(|e| match e {
                    Error::NewtonFailure {
                        iterations,
                        residual,
                        ..
                    } => Error::NewtonFailure {
                        cell: c as isize,
                        iterations,
                        residual,
                    },
                    other => other,
                })?;
                let u = sol.state(d);
                stage.cell_mut(c).copy_from_slice(u);
                for k in 0..d {
                    src[c * d + k] = (u[k] - r[k]) / (dt * diag);
                }
            } else {
                stage.cell_mut(c).copy_from_slice(r);
                model.source(r, &mut g);
                for k in 0..d {
                    src[c * d + k] = g[k] / eps;
                }
            }
            let u = stage.cell(c);
            if !model.admissible(u) {
                return Err(Error::Inadmissible {
                    cell: c as isize,
                    time: stage.time,
                    state: u.to_vec(),
                });
            }
        }
        let mut rate = vec![0.0; len];
        flux_divergence(model, &stage, config.bc, &mut rate)?;
        rates.push(rate);
        sources.push(src);
        stage_fields.push(stage);
    }

    let mut out = if tableau.stiffly_accurate() {
        stage_fields.pop().expect("at least one stage")
    } else {
        let mut out = field.clone();
        for j in 0..s {
            for idx in 0..len {
                out.data[idx] += dt * (tableau.b_exp[j] * rates[j][idx] + tableau.b_imp[j] * sources[j][idx]);
            }
        }
        out
    };
    out.time = field.time + dt;
    Ok(out)
}

/// One ARS(2,2,2) step.
pub fn imex_rk2_step<M: BalanceLaw + ?Sized>(
    model: &M,
    field: &SolutionField,
    dt: f64,
    config: &SchemeConfig,
) -> Result<SolutionField> {
    imex_step_with(&ImexTableau::ars222(), model, field, dt, config)
}

/// March `initial` to `config.t_final` with ARS(2,2,2), the CFL time step of
/// `config.cfl` and the same halve-once retry on inadmissible states as the
/// staggered scheme.
pub fn reference_run<M: BalanceLaw + ?Sized>(
    model: &M,
    initial: &SolutionField,
    config: &SchemeConfig,
) -> Result<RunSummary> {
    config.validate()?;
    let tableau = ImexTableau::ars222();
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
        let dt = clamp_dt(compute_dt(model, &field, config.cfl), field.time, t_final);
        let (mut next, used, halved) = match imex_step_with(&tableau, model, &field, dt, config) {
            Err(Error::Inadmissible { .. }) => (imex_step_with(&tableau, model, &field, 0.5 * dt, config)?, 0.5 * dt, true),
            other => (other?, dt, false),
        };
        if !halved && (next.time - t_final).abs() <= slack {
            next.time = t_final;
        }
        summary.steps += 1;
        summary.dt_min = summary.dt_min.min(used);
        summary.dt_max = summary.dt_max.max(used);
        summary.halved_steps += halved as usize;
        field = next;
    }
    summary.field = field;
    Ok(summary)
}

/// Block-average a primal field onto `n_coarse` cells.
pub fn restrict(field: &SolutionField, n_coarse: usize) -> Result<SolutionField> {
    let n = field.n_cells();
    if n_coarse == 0 || n % n_coarse != 0 {
        return Err(Error::GridMismatch(format!(
            "cannot restrict {n} cells onto {n_coarse}: not an integer multiple"
        )));
    }
    if field.grid.parity() != Parity::Primal {
        return Err(Error::GridMismatch("restriction expects a primal field".into()));
    }
    let ratio = n / n_coarse;
    let grid = crate::mesh::Grid1D::new(field.grid.x_left(), field.grid.x_right(), n_coarse)?;
    let d = field.n_comp;
    let mut out = SolutionField::zeros(grid, d);
    out.time = field.time;
    for c in 0..n_coarse {
        let cell = out.cell_mut(c);
        for f in c * ratio..(c + 1) * ratio {
            for (acc, v) in cell.iter_mut().zip(field.cell(f)) {
                *acc += v;
            }
        }
        cell.iter_mut().for_each(|v| *v /= ratio as f64);
    }
    Ok(out)
}
