//! Uniform 1D grids, cell-average storage and ghost-cell handling.
//!
//! The central scheme alternates between two families of cells: the primal
//! cells centred at `x_i` and the staggered cells centred at `x_{i+1/2}`.
//! Both families hold exactly `N` cells; cell `j` of a staggered grid is
//! centred half a cell to the right of primal cell `j`.

use crate::error::{Error, Result};
use crate::reconstruction::minmod;

/// Smallest admissible number of cells (two ghost layers must fit).
pub const MIN_CELLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Primal,
    Staggered,
}

impl Parity {
    pub fn flipped(self) -> Self {
        match self {
            Parity::Primal => Parity::Staggered,
            Parity::Staggered => Parity::Primal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    Periodic,
    /// Zero-gradient extension of the outermost interior cell.
    Transmissive,
}

impl std::fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BoundaryKind::Periodic => "periodic",
            BoundaryKind::Transmissive => "transmissive",
        })
    }
}

impl std::str::FromStr for BoundaryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "periodic" => Ok(BoundaryKind::Periodic),
            "transmissive" | "outflow" => Ok(BoundaryKind::Transmissive),
            other => Err(Error::Parse(format!(
                "unknown boundary kind `{other}` (expected periodic|transmissive)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_left: f64,
    x_right: f64,
    n_cells: usize,
    dx: f64,
    parity: Parity,
}

impl Grid1D {
    /// Primal grid of `n_cells` uniform cells on `[x_left, x_right]`.
    pub fn new(x_left: f64, x_right: f64, n_cells: usize) -> Result<Self> {
        if !(x_left.is_finite() && x_right.is_finite()) || x_right <= x_left {
            return Err(Error::InvalidGrid(format!(
                "degenerate domain [{x_left}, {x_right}]"
            )));
        }
        if n_cells < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "n_cells = {n_cells} < {MIN_CELLS}; the stencil needs two ghost layers"
            )));
        }
        Ok(Self {
            x_left,
            x_right,
            n_cells,
            dx: (x_right - x_left) / n_cells as f64,
            parity: Parity::Primal,
        })
    }

    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.x_right
    }

    pub fn length(&self) -> f64 {
        self.x_right - self.x_left
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = parity;
        self
    }

    pub fn flipped(self) -> Self {
        let parity = self.parity.flipped();
        self.with_parity(parity)
    }

    /// Centre of cell `i`.
    pub fn center(&self, i: usize) -> f64 {
        let offset = match self.parity {
            Parity::Primal => 0.5,
            Parity::Staggered => 1.0,
        };
        self.x_left + (i as f64 + offset) * self.dx
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    /// Left and right edges of cell `i`.
    pub fn cell_bounds(&self, i: usize) -> (f64, f64) {
        let c = self.center(i);
        (c - 0.5 * self.dx, c + 0.5 * self.dx)
    }

    /// Same domain, resolution and parity.
    pub fn same_as(&self, other: &Grid1D) -> bool {
        let tol = 1e-12 * self.length().abs().max(1.0);
        self.n_cells == other.n_cells
            && self.parity == other.parity
            && (self.x_left - other.x_left).abs() <= tol
            && (self.x_right - other.x_right).abs() <= tol
    }
}

/// Cell averages of `n_comp` conserved variables on a grid, stored row-major
/// (`data[i * n_comp + k]` is component `k` of cell `i`).
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionField {
    pub grid: Grid1D,
    pub n_comp: usize,
    pub data: Vec<f64>,
    pub time: f64,
}

impl SolutionField {
    pub fn zeros(grid: Grid1D, n_comp: usize) -> Self {
        Self {
            grid,
            n_comp,
            data: vec![0.0; grid.n_cells() * n_comp],
            time: 0.0,
        }
    }

    pub fn from_data(grid: Grid1D, n_comp: usize, data: Vec<f64>) -> Result<Self> {
        if n_comp == 0 || data.len() != grid.n_cells() * n_comp {
            return Err(Error::GridMismatch(format!(
                "{} values cannot fill {} cells x {} components",
                data.len(),
                grid.n_cells(),
                n_comp
            )));
        }
        Ok(Self {
            grid,
            n_comp,
            data,
            time: 0.0,
        })
    }

    /// Fill every cell from a function of the cell centre.
    pub fn from_point_values(
        grid: Grid1D,
        n_comp: usize,
        mut f: impl FnMut(f64, &mut [f64]),
    ) -> Self {
        let mut field = Self::zeros(grid, n_comp);
        for i in 0..grid.n_cells() {
            let x = grid.center(i);
            f(x, field.cell_mut(i));
        }
        field
    }

    /// Fill every cell with the average of `f` over the cell, using a
    /// 5-point Gauss–Legendre rule per cell (exact for polynomials of
    /// degree 9).
    pub fn from_cell_averages(
        grid: Grid1D,
        n_comp: usize,
        mut f: impl FnMut(f64, &mut [f64]),
    ) -> Self {
        const NODES: [f64; 5] = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        const WEIGHTS: [f64; 5] = [
            0.236_926_885_056_189_1,
            0.478_628_670_499_366_5,
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_5,
            0.236_926_885_056_189_1,
        ];
        let mut field = Self::zeros(grid, n_comp);
        let mut tmp = vec![0.0; n_comp];
        let half = 0.5 * grid.dx();
        for i in 0..grid.n_cells() {
            let c = grid.center(i);
            let cell = field.cell_mut(i);
            for (node, w) in NODES.iter().zip(WEIGHTS) {
                f(c + half * node, &mut tmp);
                for (acc, v) in cell.iter_mut().zip(&tmp) {
                    *acc += 0.5 * w * v;
                }
            }
        }
        field
    }

    pub fn n_cells(&self) -> usize {
        self.grid.n_cells()
    }

    pub fn cell(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_comp..(i + 1) * self.n_comp]
    }

    pub fn cell_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n_comp..(i + 1) * self.n_comp]
    }

    pub fn cells(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.n_comp)
    }

    pub fn component(&self, k: usize) -> Vec<f64> {
        self.cells().map(|c| c[k]).collect()
    }

    /// `dx * sum_i data[i][k]`.
    pub fn total(&self, k: usize) -> f64 {
        self.grid.dx() * self.cells().map(|c| c[k]).sum::<f64>()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Copy `field` into an `(N + 2 width) x d` array with `width` ghost layers
/// on each side.
pub fn pad_with_ghosts(field: &SolutionField, bc: BoundaryKind, width: usize) -> Result<Vec<f64>> {
    if !(1..=2).contains(&width) {
        return Err(Error::InvalidParameter(format!(
            "ghost width must be 1 or 2, got {width}"
        )));
    }
    let n = field.n_cells();
    if n < MIN_CELLS {
        return Err(Error::InvalidGrid(format!(
            "n_cells = {n} < {MIN_CELLS}"
        )));
    }
    let d = field.n_comp;
    let mut out = Vec::with_capacity((n + 2 * width) * d);
    let source = |j: isize| -> usize {
        match bc {
            BoundaryKind::Periodic => j.rem_euclid(n as isize) as usize,
            BoundaryKind::Transmissive => j.clamp(0, n as isize - 1) as usize,
        }
    };
    for j in -(width as isize)..(n + width) as isize {
        out.extend_from_slice(field.cell(source(j)));
    }
    Ok(out)
}

/// Average a staggered field back onto the primal cells.
///
/// Each primal cell overlaps the right half of staggered cell `k-1` and the
/// left half of staggered cell `k`; both halves are integrated exactly
/// against the MinMod-limited linear reconstruction, which gives
/// `1/2 (w_{k-1} + w_k) + 1/8 (w'_{k-1} - w'_k)`. Constants are preserved and,
/// on periodic grids, so is `dx * sum`.
pub fn project_staggered_to_primal(field: &SolutionField, bc: BoundaryKind) -> Result<SolutionField> {
    if field.grid.parity() != Parity::Staggered {
        return Err(Error::GridMismatch(
            "projection expects a staggered field".into(),
        ));
    }
    let n = field.n_cells();
    let d = field.n_comp;
    let padded = pad_with_ghosts(field, bc, 2)?;
    // padded row r holds staggered cell r - 2
    let row = |r: usize, k: usize| padded[r * d + k];
    let slope = |r: usize, k: usize| {
        minmod(row(r + 1, k) - row(r, k), row(r, k) - row(r - 1, k))
    };
    let mut out = SolutionField::zeros(field.grid.with_parity(Parity::Primal), d);
    out.time = field.time;
    for i in 0..n {
        // primal i sits between staggered i-1 (row i+1) and i (row i+2)
        let (l, r) = (i + 1, i + 2);
        let cell = out.cell_mut(i);
        for (k, c) in cell.iter_mut().enumerate() {
            *c = 0.5 * (row(l, k) + row(r, k)) + 0.125 * (slope(l, k) - slope(r, k));
        }
    }
    Ok(out)
}
