//! Dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};

use crate::{Error, Result, C64};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Truncated annihilation operator `a` in a `dim`-level Fock space.
pub fn annihilation(dim: usize) -> CMatrix {
    let mut a = CMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// `max |M - M†|`.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Entries below this fraction of the largest one are zeroed before
/// diagonalisation; the eigenvalues move by at most `n` times this fraction.
const FLUSH_RELATIVE: f64 = 1e-30;

/// Copy with negligible entries zeroed. The Hermitian QR iteration overflows
/// on entries near the bottom of the exponent range.
fn flushed(m: &CMatrix) -> CMatrix {
    let top = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let floor = top * FLUSH_RELATIVE;
    m.map(|z| if z.norm() < floor { C64::new(0.0, 0.0) } else { z })
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(flushed(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(m.nrows(), m.ncols());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Smallest and largest eigenvalue of a Hermitian matrix.
pub fn hermitian_extremes(m: &CMatrix) -> (f64, f64) {
    let vals = flushed(m).symmetric_eigenvalues();
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Largest eigenvalue and its unit eigenvector.
pub fn top_eigenpair(m: &CMatrix) -> (f64, CVector) {
    let (vals, vecs) = hermitian_eigen(m);
    let last = vals.len() - 1;
    (vals[last], vecs.column(last).into_owned())
}

/// `exp(G)` for anti-Hermitian `G`, through the eigenbasis of `iG`.
pub fn expm_antihermitian(g: &CMatrix) -> CMatrix {
    let h = g.map(|z| z * C64::i());
    // iG is Hermitian; symmetrise against round-off
    let h = (&h + h.adjoint()).scale(0.5);
    let (vals, vecs) = hermitian_eigen(&h);
    let phases = DVector::from_iterator(vals.len(), vals.iter().map(|&l| C64::from_polar(1.0, -l)));
    let scaled = CMatrix::from_fn(vecs.nrows(), vecs.ncols(), |i, j| vecs[(i, j)] * phases[j]);
    scaled * vecs.adjoint()
}

/// Eigenvalues of a general complex square matrix via the Schur form.
pub fn general_eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    let n = m.nrows();
    let schur = Schur::try_new(m.clone(), 1e-14, 100 * n.max(10))
        .ok_or_else(|| Error::EigenSolver("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// Eigenvector for a known eigenvalue by shifted inverse iteration.
pub fn inverse_iteration(m: &CMatrix, lambda: C64) -> Result<CVector> {
    let n = m.nrows();
    let shift = lambda + C64::new(1e-10 * lambda.norm().max(1.0), 0.0);
    let shifted = m - CMatrix::identity(n, n) * shift;
    let lu = shifted.lu();
    let mut v = CVector::from_element(n, C64::new(1.0, 0.0) / (n as f64).sqrt());
    for i in 0..n {
        // break symmetry of the start vector
        v[i] += C64::new(1e-3 * ((i * 7919) % 97) as f64 / 97.0, 0.0);
    }
    for _ in 0..8 {
        let w = lu
            .solve(&v)
            .ok_or_else(|| Error::EigenSolver("singular shifted matrix".into()))?;
        let norm = w.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::EigenSolver("inverse iteration diverged".into()));
        }
        v = w / C64::new(norm, 0.0);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_zero_is_identity() {
        let e = expm_antihermitian(&CMatrix::zeros(4, 4));
        assert!((e - CMatrix::identity(4, 4)).norm() < 1e-14);
    }

    #[test]
    fn expm_is_unitary_and_matches_series() {
        let a = annihilation(6);
        let g = (a.adjoint() * C64::new(0.3, 0.1) - &a * C64::new(0.3, -0.1)).into_owned();
        let e = expm_antihermitian(&g);
        assert!((e.adjoint() * &e - CMatrix::identity(6, 6)).norm() < 1e-12);
        let mut series = CMatrix::identity(6, 6);
        let mut term = CMatrix::identity(6, 6);
        for k in 1..40 {
            term = term * &g / C64::new(k as f64, 0.0);
            series += &term;
        }
        assert!((e - series).norm() < 1e-12);
    }

    #[test]
    fn general_eigenvalues_of_rotation_block() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(0.0, 0.0), C64::new(-1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        );
        let mut ev = general_eigenvalues(&m).unwrap();
        ev.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((ev[0] - C64::new(0.0, -1.0)).norm() < 1e-12);
        assert!((ev[1] - C64::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn inverse_iteration_recovers_eigenvector() {
        let m = CMatrix::from_fn(5, 5, |i, j| C64::new(((i + 2 * j) % 5) as f64, 0.0) + if i == j { C64::new(3.0, 0.0) } else { C64::new(0.0, 0.0) });
        let ev = general_eigenvalues(&m).unwrap();
        let lam = ev.iter().copied().max_by(|a, b| a.re.total_cmp(&b.re)).unwrap();
        let v = inverse_iteration(&m, lam).unwrap();
        let resid = (&m * &v - &v * lam).norm();
        assert!(resid < 1e-8, "residual {resid}");
    }
}
