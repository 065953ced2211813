//! Dense solves for the tiny per-cell systems (d <= MAX_DIM).

pub(crate) const MAX_DIM: usize = 4;

/// Solve `m x = b` in place by Gaussian elimination with partial pivoting.
/// `m` is row-major `n x n`. Returns `false` for a (numerically) singular
/// matrix.
pub(crate) fn solve_in_place(m: &mut [f64], b: &mut [f64], n: usize) -> bool {
    debug_assert!(m.len() >= n * n && b.len() >= n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap();
        let p = m[pivot * n + col];
        if p == 0.0 || !p.is_finite() {
            return false;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            b.swap(col, pivot);
        }
        for row in col + 1..n {
            let factor = m[row * n + col] / p;
            if factor != 0.0 {
                for k in col..n {
                    m[row * n + k] -= factor * m[col * n + k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= m[row * n + k] * b[k];
        }
        b[row] = acc / m[row * n + row];
    }
    b[..n].iter().all(|v| v.is_finite())
}

/// `out = a * x` for row-major `n x n` matrix `a`.
pub(crate) fn mat_vec(a: &[f64], x: &[f64], out: &mut [f64], n: usize) {
    for i in 0..n {
        out[i] = (0..n).map(|k| a[i * n + k] * x[k]).sum();
    }
}

/// `out = a * b` for row-major `n x n` matrices.
pub(crate) fn mat_mul(a: &[f64], b: &[f64], out: &mut [f64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = (0..n).map(|k| a[i * n + k] * b[k * n + j]).sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_permuted_system() {
        let mut m = [0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let x = [1.0, -2.0, 0.5];
        let mut b = [0.0; 3];
        mat_vec(&m, &x, &mut b, 3);
        assert!(solve_in_place(&mut m, &mut b, 3));
        for (u, v) in b.iter().zip(x) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_is_reported() {
        let mut m = [1.0, 2.0, 2.0, 4.0];
        let mut b = [1.0, 1.0];
        assert!(!solve_in_place(&mut m, &mut b, 2));
    }
}
