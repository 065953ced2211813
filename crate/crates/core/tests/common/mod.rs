//! Independent re-implementations shared by the integration tests and the
//! acceptance run. Nothing here calls into the scheme module.

#![allow(dead_code)]

use csebt2_core::models::StiffSource;
use csebt2_core::scheme::SplitOde;
use csebt2_core::{BalanceLaw, Parity, SolutionField};
use num_complex::Complex64;
use std::f64::consts::PI;

fn mm(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// One textbook Nessyahu–Tadmor step on a periodic grid, source ignored.
/// Primal input lands on the staggered cells `(i, i+1)`, staggered input on
/// the primal cells `(i-1, i)`.
pub fn classical_nt_step<M: BalanceLaw + ?Sized>(model: &M, field: &SolutionField, dt: f64) -> SolutionField {
    let n = field.n_cells();
    let d = field.n_comp;
    let lam = dt / field.grid.dx();
    let at = |i: isize| field.cell(i.rem_euclid(n as isize) as usize);
    let flux_of = |u: &[f64]| {
        let mut f = vec![0.0; d];
        model.flux(u, &mut f);
        f
    };
    let fl: Vec<Vec<f64>> = (0..n).map(|i| flux_of(field.cell(i))).collect();
    let fat = |i: isize| &fl[i.rem_euclid(n as isize) as usize];
    let mut slope_u = vec![vec![0.0; d]; n];
    let mut mid = vec![vec![0.0; d]; n];
    for i in 0..n as isize {
        for k in 0..d {
            let su = mm(at(i + 1)[k] - at(i)[k], at(i)[k] - at(i - 1)[k]);
            let sf = mm(fat(i + 1)[k] - fat(i)[k], fat(i)[k] - fat(i - 1)[k]);
            slope_u[i as usize][k] = su;
            mid[i as usize][k] = at(i)[k] - 0.5 * lam * sf;
        }
    }
    let fmid: Vec<Vec<f64>> = mid.iter().map(|u| flux_of(u)).collect();
    let (grid, offset) = match field.grid.parity() {
        Parity::Primal => (field.grid.with_parity(Parity::Staggered), 0isize),
        Parity::Staggered => (field.grid.with_parity(Parity::Primal), -1isize),
    };
    let mut out = SolutionField::zeros(grid, d);
    out.time = field.time + dt;
    let wrap = |i: isize| i.rem_euclid(n as isize) as usize;
    for j in 0..n as isize {
        let (l, r) = (wrap(j + offset), wrap(j + offset + 1));
        let cell = out.cell_mut(j as usize);
        for k in 0..d {
            cell[k] = 0.5 * (field.cell(l)[k] + field.cell(r)[k]) + 0.125 * (slope_u[l][k] - slope_u[r][k])
                - lam * (fmid[r][k] - fmid[l][k]);
        }
    }
    out
}

/// `y' = z1 y + z2 y` for complex `y = (re, im)`; `z1` explicit, `z2` implicit.
pub struct ComplexSplit {
    pub z1: Complex64,
    pub z2: Complex64,
}

fn cmul(z: Complex64, y: &[f64], out: &mut [f64]) {
    out[0] = z.re * y[0] - z.im * y[1];
    out[1] = z.im * y[0] + z.re * y[1];
}

impl StiffSource for ComplexSplit {
    fn dim(&self) -> usize {
        2
    }
    fn source(&self, y: &[f64], out: &mut [f64]) {
        cmul(self.z2, y, out);
    }
    fn source_jacobian(&self, _y: &[f64], out: &mut [f64]) {
        out[..4].copy_from_slice(&[self.z2.re, -self.z2.im, self.z2.im, self.z2.re]);
    }
}

impl SplitOde for ComplexSplit {
    fn explicit_rate(&self, y: &[f64], out: &mut [f64]) {
        cmul(self.z1, y, out);
    }
}

/// Classical RK4 on the mode ODE `u' = -i w v`, `v' = -i w u + (a u - v)/eps`.
pub fn rk4_mode(a: f64, eps: f64, k: i64, u0: Complex64, v0: Complex64, t: f64, dt: f64) -> (Complex64, Complex64) {
    let w = Complex64::new(0.0, -2.0 * PI * k as f64);
    let rate = |u: Complex64, v: Complex64| (w * v, w * u + (u * a - v) / eps);
    let steps = (t / dt).round() as usize;
    let h = t / steps as f64;
    let (mut u, mut v) = (u0, v0);
    for _ in 0..steps {
        let (k1u, k1v) = rate(u, v);
        let (k2u, k2v) = rate(u + k1u * (h / 2.0), v + k1v * (h / 2.0));
        let (k3u, k3v) = rate(u + k2u * (h / 2.0), v + k2v * (h / 2.0));
        let (k4u, k4v) = rate(u + k3u * h, v + k3v * h);
        u += (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * (h / 6.0);
        v += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
    }
    (u, v)
}

