//! Linear stability of the scheme on the split test equation
//! `y' = lambda1 y + lambda2 y`, with `z1 = lambda1 dt` treated explicitly and
//! `z2 = lambda2 dt` implicitly.
//!
//! `phi(z1, z2)` is the one-step amplification factor. Since it is analytic
//! in `z2` over the left half-plane, its maximum modulus there is attained on
//! the imaginary axis, which is what [`compute_s1`] samples.

use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::csv_io::{atomic_write, fmt_f64};
use crate::error::{Error, Result};

/// Boundary slack when deciding `|phi| <= 1`.
pub const REGION_TOLERANCE: f64 = 1e-12;

/// `[1 + z1 (2 + z1)/(2 - z2) - z1 z2/4] / (1 - z2 + z2^2/4)`.
pub fn phi(z1: Complex64, z2: Complex64) -> Result<Complex64> {
    let pole = Complex64::new(2.0, 0.0) - z2;
    if pole == Complex64::new(0.0, 0.0) {
        return Err(Error::StabilityPole(z2));
    }
    Ok(phi_unchecked(z1, z2))
}

#[inline]
fn phi_unchecked(z1: Complex64, z2: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    let num = one + z1 * (two + z1) / (two - z2) - z1 * z2 * 0.25;
    let den = one - z2 + z2 * z2 * 0.25;
    num / den
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilitySample {
    pub z1: Complex64,
    pub z2: Complex64,
    pub phi: Complex64,
    pub magnitude: f64,
}

impl StabilitySample {
    pub fn new(z1: Complex64, z2: Complex64) -> Result<Self> {
        let p = phi(z1, z2)?;
        Ok(Self {
            z1,
            z2,
            phi: p,
            magnitude: p.norm(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LStabilityReport {
    pub n_samples: usize,
    /// Largest `|phi(0, z2)|` over the samples.
    pub max_magnitude: f64,
    pub worst_z2: Complex64,
    /// `max(0, max_magnitude - 1)`.
    pub max_violation: f64,
    /// `|phi(0, z2)|` at the sample of largest modulus.
    pub far_field_magnitude: f64,
}

impl LStabilityReport {
    pub fn a_stable(&self) -> bool {
        self.max_violation <= REGION_TOLERANCE
    }
}

/// Report `|phi(0, z2)|` over the given left-half-plane samples.
pub fn check_l_stability(samples: &[Complex64]) -> LStabilityReport {
    let zero = Complex64::new(0.0, 0.0);
    let mut report = LStabilityReport {
        n_samples: samples.len(),
        max_magnitude: 0.0,
        worst_z2: zero,
        max_violation: 0.0,
        far_field_magnitude: f64::NAN,
    };
    let mut far = -1.0;
    for &z in samples {
        let m = phi_unchecked(zero, z).norm();
        if m > report.max_magnitude {
            report.max_magnitude = m;
            report.worst_z2 = z;
        }
        if z.norm() > far {
            far = z.norm();
            report.far_field_magnitude = m;
        }
    }
    report.max_violation = (report.max_magnitude - 1.0).max(0.0);
    report
}

/// `n_radius x n_angle` deterministic samples of the closed left half-plane:
/// log-spaced moduli in `[r_min, r_max]`, angles spread over `[pi/2, 3 pi/2]`.
pub fn left_half_plane_samples(n_radius: usize, n_angle: usize, r_min: f64, r_max: f64) -> Vec<Complex64> {
    assert!(n_radius >= 2 && n_angle >= 2 && r_min > 0.0 && r_max > r_min);
    let (l0, l1) = (r_min.ln(), r_max.ln());
    let mut out = Vec::with_capacity(n_radius * n_angle);
    for i in 0..n_radius {
        let r = (l0 + (l1 - l0) * i as f64 / (n_radius - 1) as f64).exp();
        for j in 0..n_angle {
            let theta = std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * j as f64 / (n_angle - 1) as f64;
            out.push(Complex64::from_polar(r, theta));
        }
    }
    out
}

/// Sampling ranges for a region in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionAxes {
    pub re_min: f64,
    pub re_max: f64,
    pub n_re: usize,
    pub im_min: f64,
    pub im_max: f64,
    pub n_im: usize,
}

impl Default for RegionAxes {
    fn default() -> Self {
        Self {
            re_min: -4.0,
            re_max: 2.0,
            n_re: 121,
            im_min: -4.0,
            im_max: 4.0,
            n_im: 161,
        }
    }
}

impl RegionAxes {
    pub fn validate(&self) -> Result<()> {
        if self.n_re < 1 || self.n_im < 1 || !(self.re_max >= self.re_min) || !(self.im_max >= self.im_min) {
            return Err(Error::InvalidParameter(format!("bad region axes {self:?}")));
        }
        if (self.n_re == 1) != (self.re_max == self.re_min) || (self.n_im == 1) != (self.im_max == self.im_min) {
            return Err(Error::InvalidParameter(format!(
                "single-point axes must have equal bounds: {self:?}"
            )));
        }
        Ok(())
    }

    fn coord(min: f64, max: f64, n: usize, i: usize) -> f64 {
        if n == 1 {
            min
        } else {
            min + (max - min) * i as f64 / (n - 1) as f64
        }
    }

    pub fn re(&self, i: usize) -> f64 {
        Self::coord(self.re_min, self.re_max, self.n_re, i)
    }

    pub fn im(&self, j: usize) -> f64 {
        Self::coord(self.im_min, self.im_max, self.n_im, j)
    }
}

/// Boolean mask over a rectangular sampling of the complex plane; row `j`
/// (imaginary index) is stored contiguously: `mask[j * n_re + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGrid {
    pub axes: RegionAxes,
    pub mask: Vec<bool>,
}

impl RegionGrid {
    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.axes.re(i), self.axes.im(j))
    }

    pub fn inside(&self, i: usize, j: usize) -> bool {
        self.mask[j * self.axes.n_re + i]
    }

    pub fn count_inside(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }
}

/// Evaluate `inside(z)` on every grid point, in parallel.
pub fn compute_region(axes: RegionAxes, inside: impl Fn(Complex64) -> bool + Sync) -> Result<RegionGrid> {
    axes.validate()?;
    let mask = (0..axes.n_re * axes.n_im)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % axes.n_re, idx / axes.n_re);
            inside(Complex64::new(axes.re(i), axes.im(j)))
        })
        .collect();
    Ok(RegionGrid { axes, mask })
}

/// Default upper end of the imaginary-axis sampling.
pub const DEFAULT_Y_MAX: f64 = 1e4;
/// Default number of log-spaced samples per sign of `y`.
pub const DEFAULT_N_Y: usize = 32_000;
const Y_MIN: f64 = 1e-4;

/// Log-spaced `y` values in `[1e-4, y_max]`.
pub fn imaginary_axis_samples(y_max: f64, n_y: usize) -> Result<Vec<f64>> {
    if !(y_max > Y_MIN) || n_y < 2 {
        return Err(Error::InvalidParameter(format!(
            "need y_max > {Y_MIN} and n_y >= 2, got {y_max}, {n_y}"
        )));
    }
    let (l0, l1) = (Y_MIN.ln(), y_max.ln());
    Ok((0..n_y)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (n_y - 1) as f64).exp())
        .collect())
}

/// `max |amp(z1, i y)|` over `y = 0` and `+-ys`. The `y -> inf` limit is zero
/// for both functions used here, so it never raises the maximum.
pub fn max_on_imaginary_axis(amp: impl Fn(Complex64, Complex64) -> Complex64, z1: Complex64, ys: &[f64]) -> f64 {
    let mut best = amp(z1, Complex64::new(0.0, 0.0)).norm();
    for &y in ys {
        best = best
            .max(amp(z1, Complex64::new(0.0, y)).norm())
            .max(amp(z1, Complex64::new(0.0, -y)).norm());
    }
    best
}

/// The region `S1 = { z1 : |phi(z1, z2)| <= 1 for every z2 in the closed
/// left half-plane }`, decided on the imaginary axis.
pub fn compute_s1(axes: RegionAxes, y_max: f64, n_y: usize) -> Result<RegionGrid> {
    if n_y < 1000 {
        return Err(Error::InvalidParameter(format!("n_y must be at least 1000, got {n_y}")));
    }
    let ys = imaginary_axis_samples(y_max, n_y)?;
    compute_region(axes, |z1| {
        max_on_imaginary_axis(phi_unchecked, z1, &ys) <= 1.0 + REGION_TOLERANCE
    })
}

/// `{ z2 : |phi(0, z2)| <= 1 }`; the pole at `z2 = 2` counts as outside.
pub fn compute_implicit_region(axes: RegionAxes) -> Result<RegionGrid> {
    let zero = Complex64::new(0.0, 0.0);
    compute_region(axes, |z2| match phi(zero, z2) {
        Ok(p) => p.norm() <= 1.0 + REGION_TOLERANCE,
        Err(_) => false,
    })
}

/// Write `re,im,inside` rows.
pub fn export_region_csv(region: &RegionGrid, path: &Path) -> Result<()> {
    let mut s = String::from("re,im,inside\n");
    for j in 0..region.axes.n_im {
        for i in 0..region.axes.n_re {
            let z = region.point(i, j);
            s.push_str(&format!(
                "{},{},{}\n",
                fmt_f64(z.re),
                fmt_f64(z.im),
                region.inside(i, j) as u8
            ));
        }
    }
    atomic_write(path, &s)
}

/// Parse a file written by [`export_region_csv`].
pub fn read_region_csv(path: &Path) -> Result<RegionGrid> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some(h) if h.trim() == "re,im,inside" => {}
        other => return Err(Error::Parse(format!("bad region header {other:?}"))),
    }
    let mut rows = Vec::new();
    for line in lines {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("bad region row `{line}`")));
        }
        let re: f64 = parts[0].trim().parse().map_err(|_| Error::Parse(format!("bad number in `{line}`")))?;
        let im: f64 = parts[1].trim().parse().map_err(|_| Error::Parse(format!("bad number in `{line}`")))?;
        let inside = match parts[2].trim() {
            "0" => false,
            "1" => true,
            other => return Err(Error::Parse(format!("bad mask value `{other}`"))),
        };
        rows.push((re, im, inside));
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty region file".into()));
    }
    let n_re = rows.iter().take_while(|r| r.1 == rows[0].1).count();
    if rows.len() % n_re != 0 {
        return Err(Error::Parse("ragged region grid".into()));
    }
    let n_im = rows.len() / n_re;
    let axes = RegionAxes {
        re_min: rows[0].0,
        re_max: rows[n_re - 1].0,
        n_re,
        im_min: rows[0].1,
        im_max: rows[rows.len() - 1].1,
        n_im,
    };
    axes.validate()?;
    Ok(RegionGrid {
        axes,
        mask: rows.into_iter().map(|r| r.2).collect(),
    })
}
