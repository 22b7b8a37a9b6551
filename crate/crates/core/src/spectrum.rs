//! Dense symmetric eigenvalues, split by magnetisation sector when possible.

use nalgebra::{DMatrix, SymmetricEigen};

/// Off-sector entries below this are treated as zero when splitting by sector.
const SECTOR_LEAK_TOL: f64 = 1e-14;

const EIGEN_EPS: f64 = 1e-11;
const EIGEN_MAX_ITER: usize = 10_000;

/// Ascending eigenvalues of `(m + mᵀ)/2`.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "square matrix required");
    if n == 0 {
        return Vec::new();
    }
    if n.is_power_of_two() {
        let bits = n.trailing_zeros() as usize;
        if conserves_magnetisation(m) {
            return sector_eigenvalues(m, bits);
        }
    }
    dense_eigenvalues(m)
}

fn dense_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::try_new(sym.clone(), EIGEN_EPS * sym.amax().max(1.0), EIGEN_MAX_ITER)
        .map(|e| e.eigenvalues.iter().copied().collect())
        .filter(|ev: &Vec<f64>| consistent(&sym, ev))
        .unwrap_or_else(|| shifted_svd_eigenvalues(&sym));
    ev.sort_by(f64::total_cmp);
    ev
}

/// The QL solver occasionally returns a wrong spectrum on sparse blocks;
/// trace and Frobenius norm catch that.
fn consistent(sym: &DMatrix<f64>, ev: &[f64]) -> bool {
    let n = sym.nrows() as f64;
    let fro = sym.norm();
    let tol = 1e-9 * fro.max(f64::MIN_POSITIVE) * n;
    let tr: f64 = ev.iter().sum();
    let sq: f64 = ev.iter().map(|x| x * x).sum::<f64>().sqrt();
    ev.iter().all(|x| x.is_finite()) && (tr - sym.trace()).abs() <= tol && (sq - fro).abs() <= tol
}

/// Eigenvalues of a symmetric matrix as singular values of `sym + cI`, with
/// `c` large enough to make it positive semidefinite.
fn shifted_svd_eigenvalues(sym: &DMatrix<f64>) -> Vec<f64> {
    let n = sym.nrows();
    let c = sym.norm();
    let shifted = sym + DMatrix::<f64>::identity(n, n) * c;
    shifted.singular_values().iter().map(|s| s - c).collect()
}

fn conserves_magnetisation(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    for i in 0..n {
        let pi = (i as u64).count_ones();
        for j in 0..n {
            if (j as u64).count_ones() != pi && m[(i, j)].abs() > SECTOR_LEAK_TOL {
                return false;
            }
        }
    }
    true
}

fn sector_eigenvalues(m: &DMatrix<f64>, bits: usize) -> Vec<f64> {
    let mut ev = Vec::with_capacity(m.nrows());
    for ups in 0..=bits {
        let idx: Vec<usize> = (0..m.nrows())
            .filter(|i| (*i as u64).count_ones() as usize == ups)
            .collect();
        let block = DMatrix::from_fn(idx.len(), idx.len(), |a, b| m[(idx[a], idx[b])]);
        ev.extend(dense_eigenvalues(&block));
    }
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m).last().copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sector_split_matches_dense() {
        // A magnetisation-conserving 3-qubit matrix.
        let m = DMatrix::from_fn(8, 8, |i, j| {
            if (i as u32).count_ones() == (j as u32).count_ones() {
                1.0 / (1.0 + i as f64 + j as f64)
            } else {
                0.0
            }
        });
        let a = sector_eigenvalues(&m, 3);
        let b = dense_eigenvalues(&m);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn shifted_svd_matches_dense() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let mut a = shifted_svd_eigenvalues(&m);
        a.sort_by(f64::total_cmp);
        let b = dense_eigenvalues(&m);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12, "{a:?} {b:?}");
        }
        assert!(!consistent(&m, &[0.0, 0.0, 0.0]));
    }

    #[test]
    fn general_matrix_falls_back_to_dense() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let ev = symmetric_eigenvalues(&m);
        assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
    }
}
