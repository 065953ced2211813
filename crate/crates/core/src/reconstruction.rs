//! MinMod-limited piecewise-linear reconstruction.
//!
//! Slopes are stored undivided: `u'_i ~ dx * u_x(x_i)`, so the reconstruction
//! inside cell `i` reads `L_i(x) = u_i + (x - x_i) u'_i / dx`.

/// `sgn(a) min(|a|, |b|)` when `a` and `b` share a sign, zero otherwise.
#[inline]
pub fn minmod(a: f64, b: f64) -> f64 {
    if a > 0.0 && b > 0.0 {
        a.min(b)
    } else if a < 0.0 && b < 0.0 {
        a.max(b)
    } else {
        0.0
    }
}

/// Limited undivided slopes for `n_cells` cells and `n_comp` components,
/// row-major like [`SolutionField`](crate::mesh::SolutionField).
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeField {
    pub n_cells: usize,
    pub n_comp: usize,
    pub values: Vec<f64>,
}

impl SlopeField {
    pub fn cell(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_comp..(i + 1) * self.n_comp]
    }
}

/// Component-wise MinMod slopes of a padded `m x d` array.
///
/// The outermost row on each side only serves as a neighbour, so the result
/// holds `m - 2` cells: result cell `i` is padded row `i + 1`.
pub fn limited_slopes(padded: &[f64], n_comp: usize) -> SlopeField {
    assert!(n_comp > 0 && padded.len() % n_comp == 0);
    let rows = padded.len() / n_comp;
    assert!(rows >= 3, "need at least one interior row");
    let d = n_comp;
    let mut values = Vec::with_capacity((rows - 2) * d);
    for r in 1..rows - 1 {
        for k in 0..d {
            let c = padded[r * d + k];
            let fwd = padded[(r + 1) * d + k] - c;
            let bwd = c - padded[(r - 1) * d + k];
            values.push(minmod(fwd, bwd));
        }
    }
    SlopeField {
        n_cells: rows - 2,
        n_comp: d,
        values,
    }
}

/// MinMod slopes of point flux values `F(U_i)`; same contract as
/// [`limited_slopes`].
pub fn flux_slopes(flux_values: &[f64], n_comp: usize) -> SlopeField {
    limited_slopes(flux_values, n_comp)
}

/// Value of the linear reconstruction of a cell at offset `xi = (x - x_i)/dx`
/// in `[-1/2, 1/2]`.
#[inline]
pub fn reconstruct(average: f64, slope: f64, xi: f64) -> f64 {
    average + xi * slope
}
