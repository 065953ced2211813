//! Exact reference solutions and error functionals.
//!
//! The linear Jin–Xin system on the periodic unit interval is solved mode by
//! mode: each Fourier coefficient pair `(u^, v^)` obeys a 2x2 linear ODE whose
//! matrix exponential is evaluated in closed form.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::{Grid1D, SolutionField};

/// One Fourier mode `u^ e^{2 pi i k x}`, `v^ e^{2 pi i k x}`.
///
/// Real fields need the mode at `-k` with conjugate amplitudes as well.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierMode {
    pub k: i64,
    pub uhat: Complex64,
    pub vhat: Complex64,
}

impl FourierMode {
    /// `u0 = amp_u sin(2 pi k x)`, `v0 = amp_v sin(2 pi k x)` as the
    /// conjugate pair at `+k` and `-k`.
    pub fn sine_pair(k: i64, amp_u: f64, amp_v: f64) -> [FourierMode; 2] {
        assert!(k > 0, "sine pairs need k > 0");
        let half_i = Complex64::new(0.0, 0.5);
        [
            FourierMode {
                k,
                uhat: -half_i * amp_u,
                vhat: -half_i * amp_v,
            },
            FourierMode {
                k: -k,
                uhat: half_i * amp_u,
                vhat: half_i * amp_v,
            },
        ]
    }

    /// Constant (`k = 0`) mode.
    pub fn constant(u: f64, v: f64) -> FourierMode {
        FourierMode {
            k: 0,
            uhat: Complex64::new(u, 0.0),
            vhat: Complex64::new(v, 0.0),
        }
    }
}

/// `sinh(x)/x`, accurate near zero.
fn sinhc(x: Complex64) -> Complex64 {
    if x.norm() < 1e-3 {
        let x2 = x * x;
        Complex64::new(1.0, 0.0) + x2 / 6.0 * (Complex64::new(1.0, 0.0) + x2 / 20.0 * (1.0 + x2 / 42.0))
    } else {
        x.sinh() / x
    }
}

/// `exp(A t)` for `A = [[0, -i w], [-i w + a/eps, -1/eps]]`, row-major.
pub fn jinxin_mode_propagator(a: f64, eps: f64, k: i64, t: f64) -> [Complex64; 4] {
    let w = 2.0 * PI * k as f64;
    let b = Complex64::new(0.0, -w);
    let c = Complex64::new(a / eps, -w);
    let tr = Complex64::new(-1.0 / eps, 0.0);
    let det = -b * c;
    let half = tr * 0.5;
    let mut s = (half * half - det).sqrt();
    // pick the root that adds to tr/2 so the large eigenvalue is free of cancellation
    if (s * half.conj()).re < 0.0 {
        s = -s;
    }
    let mu1 = half + s;
    let mu2 = if mu1.norm() > 0.0 { det / mu1 } else { half - s };
    let spread = (mu1 - mu2) * 0.5;
    let one = Complex64::new(1.0, 0.0);

    if (spread * t).norm() <= 1.0 {
        // near-defective or short time: exp(m t)[cosh(s t) I + (A - m I) t sinhc(s t)]
        let em = (half * t).exp();
        let ch = (spread * t).cosh();
        let sh = sinhc(spread * t) * t;
        let a11 = Complex64::new(0.0, 0.0) - half;
        let a22 = tr - half;
        [
            em * (ch + a11 * sh),
            em * b * sh,
            em * c * sh,
            em * (ch + a22 * sh),
        ]
    } else {
        // eigenprojectors; A - mu2 I = [[-mu2, b], [c, mu1]], A - mu1 I = [[-mu1, b], [c, mu2]]
        let e1 = (mu1 * t).exp();
        let e2 = (mu2 * t).exp();
        let inv = one / (mu1 - mu2);
        [
            (e1 * (-mu2) - e2 * (-mu1)) * inv,
            (e1 - e2) * b * inv,
            (e1 - e2) * c * inv,
            (e1 * mu1 - e2 * mu2) * inv,
        ]
    }
}

/// Evolve a set of modes to time `t`.
pub fn jinxin_evolve_modes(a: f64, eps: f64, modes: &[FourierMode], t: f64) -> Vec<FourierMode> {
    modes
        .iter()
        .map(|m| {
            let p = jinxin_mode_propagator(a, eps, m.k, t);
            FourierMode {
                k: m.k,
                uhat: p[0] * m.uhat + p[1] * m.vhat,
                vhat: p[2] * m.uhat + p[3] * m.vhat,
            }
        })
        .collect()
}

/// Exact Jin–Xin solution at time `t`, sampled as point values at the cell
/// centres of `grid` (which must span a unit-length periodic domain).
pub fn jinxin_exact(a: f64, eps: f64, modes: &[FourierMode], t: f64, grid: &Grid1D) -> Result<SolutionField> {
    if (grid.length() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidGrid(format!(
            "Fourier oracle needs a unit-length domain, got length {}",
            grid.length()
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let evolved = jinxin_evolve_modes(a, eps, modes, t);
    let x0 = grid.x_left();
    let mut field = SolutionField::from_point_values(*grid, 2, |x, out| {
        let mut u = Complex64::new(0.0, 0.0);
        let mut v = Complex64::new(0.0, 0.0);
        for m in &evolved {
            let phase = Complex64::from_polar(1.0, 2.0 * PI * m.k as f64 * (x - x0));
            u += m.uhat * phase;
            v += m.vhat * phase;
        }
        out[0] = u.re;
        out[1] = v.re;
    });
    field.time = t;
    Ok(field)
}

/// Relaxed-limit solution `u = u0(x - a t)`, `v = a u` on a periodic domain,
/// sampled at cell centres.
pub fn advected_exact(ic: impl Fn(f64) -> f64, a: f64, t: f64, grid: &Grid1D) -> SolutionField {
    let (x0, len) = (grid.x_left(), grid.length());
    let mut field = SolutionField::from_point_values(*grid, 2, |x, out| {
        let xi = x0 + (x - x0 - a * t).rem_euclid(len);
        out[0] = ic(xi);
        out[1] = a * out[0];
    });
    field.time = t;
    field
}

/// Per-component `dx * sum_i |numeric_i - reference_i|`.
pub fn l1_error(numeric: &SolutionField, reference: &SolutionField) -> Result<Vec<f64>> {
    if !numeric.grid.same_as(&reference.grid) {
        return Err(Error::GridMismatch(format!(
            "numeric grid {:?} differs from reference grid {:?}",
            numeric.grid, reference.grid
        )));
    }
    if numeric.n_comp != reference.n_comp {
        return Err(Error::GridMismatch(format!(
            "{} vs {} components",
            numeric.n_comp, reference.n_comp
        )));
    }
    let d = numeric.n_comp;
    let dx = numeric.grid.dx();
    let mut err = vec![0.0; d];
    for (p, q) in numeric.cells().zip(reference.cells()) {
        for k in 0..d {
            err[k] += (p[k] - q[k]).abs();
        }
    }
    err.iter_mut().for_each(|e| *e *= dx);
    Ok(err)
}

/// `log2(e_coarse / e_fine)` for a grid ratio of two; NaN when either error
/// is not positive.
pub fn observed_order(e_coarse: f64, e_fine: f64) -> f64 {
    if e_coarse > 0.0 && e_fine > 0.0 {
        (e_coarse / e_fine).log2()
    } else {
        f64::NAN
    }
}
