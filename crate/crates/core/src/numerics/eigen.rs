//! Hermitian matrices and dominant eigenpair extraction by power iteration.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{norm_sqr, Scalar};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Iterations without convergence before the iteration operator is squared.
const SQUARE_EVERY: usize = 48;

/// Dense Hermitian matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix<T: Scalar> {
    dim: usize,
    entries: Vec<Complex<T>>,
}

impl<T: Scalar> HermitianMatrix<T> {
    /// Validates conjugate symmetry to a relative tolerance of the largest entry.
    pub fn new(dim: usize, entries: Vec<Complex<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("matrix dimension must be positive"));
        }
        if entries.len() != dim * dim {
            return Err(Error::validation(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::validation("matrix has non-finite entries"));
        }
        let scale = entries.iter().map(|z| z.norm()).fold(T::zero(), T::max);
        let tol = T::structural_tol() * scale.max(T::min_positive_value());
        for i in 0..dim {
            for j in i..dim {
                let d = (entries[i * dim + j] - entries[j * dim + i].conj()).norm();
                if d > tol {
                    return Err(Error::validation(format!(
                        "matrix is not Hermitian: |m[{i}][{j}] - conj(m[{j}][{i}])| = {d}"
                    )));
                }
            }
        }
        Ok(Self { dim, entries })
    }

    /// `Σ_j x_j x_jᴴ`, Hermitian by construction.
    pub fn gram_sum<'a, I>(dim: usize, vectors: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [Complex<T>]>,
    {
        let mut entries = vec![Complex::new(T::zero(), T::zero()); dim * dim];
        for x in vectors {
            if x.len() != dim {
                return Err(Error::validation(format!(
                    "gram_sum vector has length {}, expected {dim}",
                    x.len()
                )));
            }
            for i in 0..dim {
                let xi = x[i];
                let row = &mut entries[i * dim..(i + 1) * dim];
                for (m, xj) in row.iter_mut().zip(x) {
                    *m += xi * xj.conj();
                }
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![Complex::new(T::zero(), T::zero()); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Complex::new(T::one(), T::zero());
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.entries[i * self.dim + i].re).sum()
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        mat_vec(self.dim, &self.entries, v)
    }
}

fn mat_vec<T: Scalar>(dim: usize, m: &[Complex<T>], v: &[Complex<T>]) -> Vec<Complex<T>> {
    m.chunks_exact(dim)
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b)
        })
        .collect()
}

/// `M²` rescaled so its largest entry has unit modulus.
fn square_normalized<T: Scalar>(dim: usize, m: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut out = vec![Complex::new(T::zero(), T::zero()); dim * dim];
    for i in 0..dim {
        for k in 0..dim {
            let a = m[i * dim + k];
            if a.re == T::zero() && a.im == T::zero() {
                continue;
            }
            let (row_out, row_k) = (i * dim, k * dim);
            for j in 0..dim {
                out[row_out + j] += a * m[row_k + j];
            }
        }
    }
    let scale = out.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    if scale > T::zero() {
        for z in &mut out {
            *z = *z / scale;
        }
    }
    out
}

/// Fixed starting vector with quadratic phase `exp(jπφk²)/√n`, φ the golden ratio.
///
/// An all-ones start is exactly orthogonal to any steering vector whose phase
/// progression completes whole turns across the aperture, which is the common case
/// on a Fourier-spaced angle grid; a chirp has no such blind directions.
pub fn chirp_start<T: Scalar>(n: usize) -> Vec<Complex<T>> {
    let golden = 0.5 * (1.0 + 5f64.sqrt());
    let norm = T::lit(n as f64).sqrt().recip();
    (0..n)
        .map(|k| {
            let turns = (0.5 * golden * (k * k) as f64).fract();
            crate::scalar::phasor(T::lit(turns)) * norm
        })
        .collect()
}

/// Rotates `v` so its largest-magnitude entry (first one, on ties) is real positive.
fn normalize_phase<T: Scalar>(v: &mut [Complex<T>]) {
    let max = v.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    if max == T::zero() {
        return;
    }
    let cut = max * (T::one() - T::lit(1e-9).max(T::epsilon() * T::lit(100.0)));
    let pivot = v.iter().find(|z| z.norm() >= cut).copied().unwrap();
    let rot = pivot.conj() / pivot.norm();
    for z in v.iter_mut() {
        *z = *z * rot;
    }
}

/// Largest eigenvalue of a Hermitian positive semidefinite matrix with a unit eigenvector.
///
/// Power iteration from [`chirp_start`]. Convergence is declared when
/// `‖M·v − λ·v‖ ≤ tol·λ` for the Rayleigh quotient `λ`; when the spectral gap is
/// small the iteration operator is squared periodically so the contraction factor
/// `λ₂/λ₁` is raised to successively doubled powers. The returned vector has its
/// largest entry rotated to the positive real axis.
pub fn principal_eigenpair<T: Scalar>(
    m: &HermitianMatrix<T>,
    tol: T,
    max_iter: usize,
) -> Result<(T, Vec<Complex<T>>)> {
    if !(tol > T::zero()) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let dim = m.dim;
    let mut v = chirp_start::<T>(dim);
    let mut op: Option<Vec<Complex<T>>> = None;
    let mut residual = T::infinity();

    for iter in 0..max_iter.max(1) {
        let mv = m.mul_vec(&v);
        let lambda = v
            .iter()
            .zip(&mv)
            .map(|(a, b)| (a.conj() * b).re)
            .sum::<T>();
        residual = mv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b * lambda).norm_sqr())
            .sum::<T>()
            .sqrt();
        if residual <= tol * lambda.abs() {
            normalize_phase(&mut v);
            return Ok((lambda, v));
        }

        if iter > 0 && iter % SQUARE_EVERY == 0 {
            let base = op.as_deref().unwrap_or(&m.entries);
            op = Some(square_normalized(dim, base));
        }
        let next = match &op {
            Some(p) => mat_vec(dim, p, &v),
            None => mv,
        };
        let n = norm_sqr(&next).sqrt();
        if !(n > T::zero()) || !n.is_finite() {
            // v lies in the null space of the operator; restart from the next
            // basis direction not yet tried.
            let k = iter % dim;
            v = vec![Complex::new(T::zero(), T::zero()); dim];
            v[k] = Complex::new(T::one(), T::zero());
            continue;
        }
        v = next.into_iter().map(|z| z / n).collect();
    }
    Err(Error::Convergence {
        iterations: max_iter,
        residual: residual.as_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn symmetric_two_by_two() {
        let m = HermitianMatrix::new(2, vec![c(2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
        let (l, v) = principal_eigenpair(&m, 1e-12, 10_000).unwrap();
        assert!((l - 3.0).abs() < 1e-10);
        let s = 0.5f64.sqrt();
        assert!((v[0] - c(s, 0.0)).norm() < 1e-10 && (v[1] - c(s, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn identity_degenerate() {
        let m = HermitianMatrix::<f64>::identity(4);
        let (l, v) = principal_eigenpair(&m, 1e-10, 10_000).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
        assert!((norm_sqr(&v) - 1.0).abs() < 1e-12);
        let r: f64 = m.mul_vec(&v).iter().zip(&v).map(|(a, b)| (a - b * l).norm_sqr()).sum();
        assert!(r.sqrt() <= 1e-10 * l);
    }

    #[test]
    fn zero_matrix_has_zero_eigenvalue() {
        let m = HermitianMatrix::new(3, vec![c(0.0, 0.0); 9]).unwrap();
        let (l, v) = principal_eigenpair(&m, 1e-10, 100).unwrap();
        assert_eq!(l, 0.0);
        assert!((norm_sqr(&v) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let err = HermitianMatrix::new(2, vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(1.0, 0.0)]);
        assert!(matches!(err, Err(Error::Validation(_))));
        assert!(HermitianMatrix::<f64>::new(2, vec![c(1.0, 0.0); 3]).is_err());
    }

    #[test]
    fn convergence_error_reports_residual() {
        // Near-degenerate pair with one iteration allowed.
        let m = HermitianMatrix::new(2, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.999_999, 0.0)]).unwrap();
        match principal_eigenpair(&m, 1e-14, 1) {
            Err(Error::Convergence { iterations, residual }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 0.0);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn small_gap_converges_through_squaring() {
        let d = 100;
        let mut e = vec![c(0.0, 0.0); d * d];
        for i in 0..d {
            e[i * d + i] = c(1.0 - 1e-7 * i as f64, 0.0);
        }
        let m = HermitianMatrix::new(d, e).unwrap();
        let (l, v) = principal_eigenpair(&m, 1e-10, 10_000).unwrap();
        assert!((l - 1.0).abs() < 1e-12);
        assert!(v[0].norm() > 0.99);
    }

    #[test]
    fn phase_normalized() {
        let a: Vec<Complex<f64>> = (0..5).map(|k| crate::scalar::phasor(0.13 * k as f64)).collect();
        let m = HermitianMatrix::gram_sum(5, [a.as_slice()]).unwrap();
        let (l, v) = principal_eigenpair(&m, 1e-10, 10_000).unwrap();
        assert!((l - 5.0).abs() < 1e-9);
        assert!(v[0].im.abs() < 1e-12 && v[0].re > 0.0);
        for (vi, ai) in v.iter().zip(&a) {
            assert!((vi - ai / 5f64.sqrt()).norm() < 1e-9);
        }
    }
}
