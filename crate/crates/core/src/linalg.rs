//! Small dense complex linear algebra helpers on top of `nalgebra`.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// Kronecker product `a ⊗ b`, row index `i * b.nrows() + k`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

/// `Re tr{a b}`, the Hilbert-Schmidt pairing for Hermitian arguments.
pub fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = a[(i, j)] * b[(j, i)];
            acc += x.re;
        }
    }
    acc
}

/// `Re tr{a† b}`.
pub fn frobenius_inner_re(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

pub fn frobenius_norm_sq(m: &CMatrix) -> f64 {
    m.iter().map(|x| x.norm_sqr()).sum()
}

/// Symmetrizes `m` to `(m + m†)/2`, cleaning round-off before an eigensolve.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = hermitian_part(m);
    let ev: DVector<f64> = h.symmetric_eigenvalues();
    let mut v: Vec<f64> = ev.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)[0]
}

pub fn max_eigenvalue(m: &CMatrix) -> f64 {
    *hermitian_eigenvalues(m).last().expect("non-empty matrix")
}

/// Trace norm `tr{√(M†M)}`, the sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values.iter().sum()
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    let n = m.nrows();
    if n != m.ncols() {
        return false;
    }
    for i in 0..n {
        for j in i..n {
            if (m[(i, j)] - m[(j, i)].conj()).norm() > tol {
                return false;
            }
        }
    }
    true
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// Qubit operator `(1 + a·σ)` scaled by `scale`.
pub fn bloch_operator(scale: f64, a: [f64; 3]) -> CMatrix {
    let m = identity(2) + pauli_x().scale(a[0]) + pauli_y().scale(a[1]) + pauli_z().scale(a[2]);
    m.scale(scale)
}

/// Orthonormal (Hilbert-Schmidt) basis of the d×d Hermitian matrices:
/// diagonal units, then symmetric and antisymmetric off-diagonal pairs.
pub fn hermitian_basis(d: usize) -> Vec<CMatrix> {
    let mut basis = Vec::with_capacity(d * d);
    for i in 0..d {
        let mut m = CMatrix::zeros(d, d);
        m[(i, i)] = c(1., 0.);
        basis.push(m);
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in (i + 1)..d {
            let mut m = CMatrix::zeros(d, d);
            m[(i, j)] = c(s, 0.);
            m[(j, i)] = c(s, 0.);
            basis.push(m);
            let mut m = CMatrix::zeros(d, d);
            m[(i, j)] = c(0., -s);
            m[(j, i)] = c(0., s);
            basis.push(m);
        }
    }
    basis
}

/// d×d matrix of i.i.d. standard complex Gaussians, `E|z|² = 1`.
pub fn ginibre_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re * s, im * s)
    })
}

/// Haar-random unitary: QR of a Ginibre matrix with the phases of R's
/// diagonal absorbed into Q so that R has a positive real diagonal.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let z = ginibre_matrix(d, rng);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let norm = rjj.norm();
        let phase = if norm > 0.0 { rjj / norm } else { c(1., 0.) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}


/// Coordinates of a Hermitian matrix in [`hermitian_basis`] order.
pub fn hermitian_coords(m: &CMatrix) -> Vec<f64> {
    let d = m.nrows();
    let s = std::f64::consts::SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        out.push(m[(i, i)].re);
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let z = m[(i, j)];
            out.push(z.re * s);
            out.push(-z.im * s);
        }
    }
    out
}

/// Inverse of [`hermitian_coords`].
pub fn hermitian_from_coords(d: usize, coords: &[f64]) -> CMatrix {
    debug_assert_eq!(coords.len(), d * d);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = c(coords[i], 0.);
    }
    let mut idx = d;
    for i in 0..d {
        for j in (i + 1)..d {
            let z = c(coords[idx] * s, -coords[idx + 1] * s);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            idx += 2;
        }
    }
    m
}

/// Whether the smallest eigenvalue of Hermitian `m` is at least `-tol`.
///
/// Cheap necessary conditions (diagonal entries and 2×2 principal minors of
/// `m + tol·1`) are tried before the eigensolve.
pub fn is_psd(m: &CMatrix, tol: f64) -> bool {
    let d = m.nrows();
    for i in 0..d {
        if m[(i, i)].re < -tol {
            return false;
        }
    }
    for i in 0..d {
        for j in (i + 1)..d {
            let a = m[(i, i)].re + tol;
            let b = m[(j, j)].re + tol;
            if a * b < m[(i, j)].norm_sqr() {
                return false;
            }
        }
    }
    min_eigenvalue(m) >= -tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hermitian_basis_is_orthonormal() {
        for d in 2..=4 {
            let b = hermitian_basis(d);
            assert_eq!(b.len(), d * d);
            for (i, x) in b.iter().enumerate() {
                assert!(is_hermitian(x, 1e-15));
                for (j, y) in b.iter().enumerate() {
                    let ip = trace_product_re(x, y);
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in 2..=4 {
            let u = haar_unitary(d, &mut rng);
            let err = (dagger(&u) * &u - identity(d)).norm();
            assert!(err < 1e-12, "d={d} err={err}");
        }
    }

    #[test]
    fn trace_norm_of_hermitian_is_sum_of_abs_eigenvalues() {
        let m = CMatrix::from_diagonal(&DVector::from_vec(vec![c(0.5, 0.), c(-0.25, 0.)]));
        assert!((trace_norm(&m) - 0.75).abs() < 1e-14);
    }

    #[test]
    fn coords_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = ginibre_matrix(3, &mut rng);
        let h = hermitian_part(&g);
        let back = hermitian_from_coords(3, &hermitian_coords(&h));
        assert!((back - &h).norm() < 1e-14);
        let basis = hermitian_basis(3);
        for (x, b) in hermitian_coords(&h).iter().zip(&basis) {
            assert!((x - trace_product_re(&h, b)).abs() < 1e-14);
        }
    }

    #[test]
    fn psd_prefilter_agrees_with_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let g = ginibre_matrix(4, &mut rng);
            let h = hermitian_part(&g) + identity(4).scale(0.8);
            assert_eq!(is_psd(&h, 1e-10), min_eigenvalue(&h) >= -1e-10);
        }
    }

    #[test]
    fn kron_ordering_is_row_major() {
        let z = pauli_z();
        let x = pauli_x();
        let zx = kron(&z, &x);
        assert_eq!(zx[(0, 1)], c(1., 0.));
        assert_eq!(zx[(2, 3)], c(-1., 0.));
    }
}
