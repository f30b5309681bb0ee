//! Small dense/sparse helpers shared by the simulation modules.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type RMatrix = DMatrix<f64>;
pub type CMatrix = DMatrix<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn sigma_x() -> RMatrix {
    RMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

/// Qubit basis order is (excited, ground), so `sigma_z = diag(+1, -1)`.
pub fn sigma_z() -> RMatrix {
    RMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0)],
    )
}

/// Bosonic annihilation operator truncated to `n` Fock levels.
pub fn annihilation(n: usize) -> RMatrix {
    let mut a = RMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = (k as f64).sqrt();
    }
    a
}

/// Field quadrature `a + a†` truncated to `n` Fock levels.
pub fn quadrature(n: usize) -> RMatrix {
    let a = annihilation(n);
    &a + a.transpose()
}

pub fn kron(a: &RMatrix, b: &RMatrix) -> RMatrix {
    a.kronecker(b)
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

pub fn max_asymmetry(m: &RMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in i + 1..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn max_hermitian_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Frobenius norm of `[a, b]`.
pub fn commutator_norm(a: &RMatrix, b: &RMatrix) -> f64 {
    (a * b - b * a).norm()
}

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
///
/// Each eigenvector is fixed by making its largest-magnitude component
/// positive (first such index on ties), so repeated calls agree bitwise.
pub fn symmetric_eigen(m: &RMatrix) -> Result<(Vec<f64>, RMatrix)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch { expected: n, actual: m.ncols() });
    }
    let asym = max_asymmetry(m);
    let scale = m.amax().max(1.0);
    if asym > 1e-12 * scale {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    if n == 0 {
        return Ok((Vec::new(), RMatrix::zeros(0, 0)));
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0).ok_or(Error::EigenFailure { dim: n })?;
    if eig.eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenFailure { dim: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = RMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let mut pivot = 0;
        for i in 1..n {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, col)] = sign * v[i];
        }
    }
    Ok((values, vectors))
}

/// Eigenvalues (ascending) and eigenvectors of a complex Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.nrows();
    let defect = max_hermitian_defect(m);
    if defect > 1e-10 * m.norm().max(1.0) {
        return Err(Error::NotHermitian { asymmetry: defect });
    }
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0).ok_or(Error::EigenFailure { dim: n })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    Ok((values, vectors))
}

/// `exp(-i H)` for a Hermitian `H` via its eigendecomposition.
pub fn expm_minus_i(h: &CMatrix) -> Result<CMatrix> {
    let (values, vectors) = hermitian_eigen(h)?;
    let n = values.len();
    let mut scaled = vectors.clone();
    for (j, &e) in values.iter().enumerate() {
        let phase = C64::from_polar(1.0, -e);
        for i in 0..n {
            scaled[(i, j)] *= phase;
        }
    }
    Ok(scaled * vectors.adjoint())
}

/// Compressed sparse row matrix with real entries.
///
/// Every Hamiltonian term in this crate is real in the product basis, so
/// the matvec multiplies real entries against complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Keeps entries with `|x| > drop_tol`.
    pub fn from_dense(m: &RMatrix, drop_tol: f64) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "CSR matrices are square");
        let dim = m.nrows();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            for j in 0..dim {
                let x = m[(i, j)];
                if x.abs() > drop_tol {
                    cols.push(j);
                    vals.push(x);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { dim, row_ptr, cols, vals }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; dim + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) outside dimension {dim}");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { dim, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `out += scale * self * x`
    pub fn mul_add(&self, scale: f64, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += x[self.cols[k]] * self.vals[k];
            }
            *o += acc * scale;
        }
    }

    pub fn to_dense(&self) -> RMatrix {
        let mut m = RMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] += self.vals[k];
            }
        }
        m
    }

    /// Largest absolute row sum, an upper bound on the spectral radius.
    pub fn row_sum_bound(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.vals[self.row_ptr[i]..self.row_ptr[i + 1]].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Pairwise (cascade) summation, deterministic for a fixed input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_matches_dense_product() {
        let m = RMatrix::from_row_slice(3, 3, &[1.0, 0.0, 2.0, 0.0, -1.0, 0.0, 2.0, 0.0, 0.5]);
        let csr = CsrMatrix::from_dense(&m, 0.0);
        assert_eq!(csr.nnz(), 5);
        let x = [C64::new(1.0, 1.0), C64::new(0.0, 2.0), C64::new(-1.0, 0.0)];
        let mut out = vec![C64::new(0.0, 0.0); 3];
        csr.mul_add(2.0, &x, &mut out);
        let expect = to_complex(&m) * nalgebra::DVector::from_column_slice(&x) * C64::new(2.0, 0.0);
        for i in 0..3 {
            assert!((out[i] - expect[i]).norm() < 1e-14);
        }
        assert_eq!(csr.to_dense(), m);
    }

    #[test]
    fn triplets_sum_duplicates() {
        let csr = CsrMatrix::from_triplets(2, vec![(1, 0, 1.0), (0, 1, 2.0), (1, 0, 0.5)]);
        assert_eq!(csr.to_dense(), RMatrix::from_row_slice(2, 2, &[0.0, 2.0, 1.5, 0.0]));
    }

    #[test]
    fn eigen_phase_convention_is_deterministic() {
        let m = RMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]);
        let (e1, v1) = symmetric_eigen(&m).unwrap();
        let (e2, v2) = symmetric_eigen(&m).unwrap();
        assert_eq!(e1, e2);
        assert_eq!(v1, v2);
        for c in 0..3 {
            let col = v1.column(c);
            let pivot = col.iamax();
            assert!(col[pivot] > 0.0);
        }
        assert!(e1.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_asymmetric() {
        let m = RMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(symmetric_eigen(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn expm_of_pauli() {
        let theta = 0.3;
        let h = to_complex(&sigma_x()) * C64::new(theta, 0.0);
        let u = expm_minus_i(&h).unwrap();
        assert!((u[(0, 0)] - C64::new(theta.cos(), 0.0)).norm() < 1e-14);
        assert!((u[(0, 1)] - C64::new(0.0, -theta.sin())).norm() < 1e-14);
    }

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|k| (k as f64).sin()).collect();
        let naive: f64 = xs.iter().sum();
        assert!((pairwise_sum(&xs) - naive).abs() < 1e-10);
    }
}
