//! Dense least squares via Householder QR with column equilibration.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

/// Relative threshold on the diagonal of `R` below which the system is
/// treated as rank deficient.
pub const RANK_TOL: f64 = 1e-12;

/// Row-major builder for a tall system `A x ≈ b`.
#[derive(Clone, Debug, Default)]
pub struct System {
    cols: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl System {
    pub fn new(cols: usize) -> System {
        System {
            cols,
            a: Vec::new(),
            b: Vec::new(),
        }
    }

    pub fn push(&mut self, row: &[f64], rhs: f64) {
        debug_assert_eq!(row.len(), self.cols);
        self.a.extend_from_slice(row);
        self.b.push(rhs);
    }

    pub fn rows(&self) -> usize {
        self.b.len()
    }

    pub fn solve(&self) -> Option<Solution> {
        lstsq(self.rows(), self.cols, &self.a, &self.b)
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub x: Vec<f64>,
    /// Root-mean-square residual of the solved rows.
    pub rms: f64,
}

/// Least-squares solution of the row-major `rows × cols` system. Returns
/// `None` when there are fewer rows than unknowns or the scaled `R` factor
/// has a relative diagonal entry below [`RANK_TOL`].
pub fn lstsq(rows: usize, cols: usize, a: &[f64], b: &[f64]) -> Option<Solution> {
    if rows < cols || cols == 0 {
        return None;
    }
    let mut m = DMatrix::from_row_slice(rows, cols, a);
    let rhs = DVector::from_column_slice(b);
    let mut scale = alloc::vec![1.0; cols];
    for (j, s) in scale.iter_mut().enumerate() {
        let n = m.column(j).norm();
        if !(n > 0.0) || !n.is_finite() {
            return None;
        }
        *s = n;
        m.column_mut(j).scale_mut(1.0 / n);
    }
    let qr = m.clone().qr();
    let r = qr.r();
    let dmax = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..cols).any(|i| !(r[(i, i)].abs() > RANK_TOL * dmax)) {
        return None;
    }
    let mut y = rhs.clone();
    qr.q_tr_mul(&mut y);
    let y = y.rows(0, cols).into_owned();
    let z = r.solve_upper_triangular(&y)?;
    let resid = &m * &z - &rhs;
    let x: Vec<f64> = z.iter().zip(&scale).map(|(v, s)| v / s).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(Solution {
        x,
        rms: libm::sqrt(resid.norm_squared() / rows as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_a_line() {
        let mut s = System::new(2);
        for i in 0..10 {
            let x = i as f64;
            s.push(&[x, 1.0], 3.0 * x - 2.0);
        }
        let sol = s.solve().unwrap();
        assert!((sol.x[0] - 3.0).abs() < 1e-12 && (sol.x[1] + 2.0).abs() < 1e-12);
        assert!(sol.rms < 1e-12);
    }

    #[test]
    fn badly_scaled_columns() {
        let mut s = System::new(2);
        for i in 0..20 {
            let x = 1e-4 * i as f64;
            s.push(&[1e6 * x, 1e-3], 2.0 * x + 5e-3);
        }
        let sol = s.solve().unwrap();
        assert!((sol.x[0] - 2e-6).abs() < 1e-16);
        assert!((sol.x[1] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn rank_deficient() {
        let mut s = System::new(2);
        for i in 0..5 {
            let x = i as f64;
            s.push(&[x, 2.0 * x], x);
        }
        assert!(s.solve().is_none());
        assert!(System::new(3).solve().is_none());
    }
}
