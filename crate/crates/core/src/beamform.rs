//! Transmit beamforming weights and the per-bin channel vector.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::array::{ArrayGeometry, SpatialFrequency};
use crate::error::{Error, Result};
use crate::numerics::eigen::{principal_eigenpair, HermitianMatrix, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::scalar::{kron, norm_sqr, Scalar};

/// How the design matrix of the maximum-power beamformer is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignMatrix {
    /// `A = Σ conj(a_T)·a_Tᵀ`, whose principal eigenvector maximizes `a_Tᵀ·W·Wᴴ·conj(a_T)`.
    #[default]
    Conjugate,
    /// `A = Σ a_T·a_Tᴴ` as printed; its eigenvector is conjugated relative to the
    /// maximizer, so it only steers correctly when `a_T` is real.
    Literal,
}

/// `N_T × N_T` transmit weight matrix, row-major, with its power budget.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamWeights<T> {
    n_t: usize,
    w: Vec<Complex<T>>,
    total_power: T,
}

impl<T: Scalar> BeamWeights<T> {
    /// Wraps an arbitrary matrix; `total_power` is taken as `trace(W·Wᴴ)`.
    pub fn from_matrix(n_t: usize, w: Vec<Complex<T>>) -> Result<Self> {
        if n_t == 0 || w.len() != n_t * n_t {
            return Err(Error::validation(format!(
                "weight matrix for {n_t} antennas needs {} entries, got {}",
                n_t * n_t,
                w.len()
            )));
        }
        let total_power = norm_sqr(&w);
        Ok(Self { n_t, w, total_power })
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn total_power(&self) -> T {
        self.total_power
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.w[row * self.n_t + col]
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.w
    }

    /// `trace(W·Wᴴ)`, the Frobenius norm squared.
    pub fn trace_wwh(&self) -> T {
        norm_sqr(&self.w)
    }

    /// One past the last column of `W` holding a nonzero entry. Entries of `Wᵀ·a`
    /// beyond this index vanish for every steering vector.
    pub fn active_columns(&self) -> usize {
        let n = self.n_t;
        (0..n)
            .rev()
            .find(|&c| (0..n).any(|r| self.w[r * n + c] != Complex::new(T::zero(), T::zero())))
            .map_or(0, |c| c + 1)
    }

    /// `Wᵀ·a`.
    pub fn transpose_apply(&self, a: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.n_t;
        let mut out = vec![Complex::new(T::zero(), T::zero()); n];
        for (r, ar) in a.iter().enumerate().take(n) {
            let row = &self.w[r * n..(r + 1) * n];
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * ar;
            }
        }
        out
    }
}

/// `W = √(p_t/n_t)·I`: equal power on every antenna.
pub fn omni_weights<T: Scalar>(n_t: usize, p_t: T) -> Result<BeamWeights<T>> {
    if n_t == 0 {
        return Err(Error::domain("need at least one transmit antenna"));
    }
    if !(p_t > T::zero()) || !p_t.is_finite() {
        return Err(Error::domain(format!("transmit power must be positive, got {p_t}")));
    }
    let g = (p_t / T::lit(n_t as f64)).sqrt();
    let mut w = vec![Complex::new(T::zero(), T::zero()); n_t * n_t];
    for i in 0..n_t {
        w[i * n_t + i] = Complex::new(g, T::zero());
    }
    Ok(BeamWeights {
        n_t,
        w,
        total_power: p_t,
    })
}

/// Maximum-power design toward `selected`: `W = √p_t·v·e₁ᵀ` with `v` the principal
/// eigenvector of the design matrix.
pub fn max_power_weights<T: Scalar>(
    selected: &[SpatialFrequency<T>],
    geometry: &ArrayGeometry,
    p_t: T,
) -> Result<BeamWeights<T>> {
    max_power_weights_with(selected, geometry, p_t, DesignMatrix::Conjugate)
}

pub fn max_power_weights_with<T: Scalar>(
    selected: &[SpatialFrequency<T>],
    geometry: &ArrayGeometry,
    p_t: T,
    design: DesignMatrix,
) -> Result<BeamWeights<T>> {
    if selected.is_empty() {
        return Err(Error::domain("maximum-power design needs at least one selected bin"));
    }
    if !(p_t > T::zero()) || !p_t.is_finite() {
        return Err(Error::domain(format!("transmit power must be positive, got {p_t}")));
    }
    let n_t = geometry.n_t();
    let vectors: Vec<Vec<Complex<T>>> = selected
        .iter()
        .map(|&f| {
            let a = geometry.tx_steering(f);
            match design {
                DesignMatrix::Conjugate => a.into_iter().map(|z| z.conj()).collect(),
                DesignMatrix::Literal => a,
            }
        })
        .collect();
    let a = HermitianMatrix::gram_sum(n_t, vectors.iter().map(|v| v.as_slice()))?;
    let (_, v) = principal_eigenpair(&a, T::lit(DEFAULT_TOL).max(T::epsilon() * T::lit(64.0)), DEFAULT_MAX_ITER)?;

    let g = p_t.sqrt();
    let mut w = vec![Complex::new(T::zero(), T::zero()); n_t * n_t];
    for (i, vi) in v.iter().enumerate() {
        w[i * n_t] = vi * g;
    }
    Ok(BeamWeights {
        n_t,
        w,
        total_power: p_t,
    })
}

/// Transmit beampattern `a_Tᵀ·W·Wᴴ·conj(a_T) = ‖Wᵀ·a_T‖²`.
pub fn beampattern<T: Scalar>(wts: &BeamWeights<T>, f: SpatialFrequency<T>, geometry: &ArrayGeometry) -> T {
    norm_sqr(&wts.transpose_apply(&geometry.tx_steering(f)))
}

/// `h = (Wᵀ·a_T) ⊗ a_R`, length `N_T·N_R`; entry `t·N_R + r` pairs transmit
/// channel `t` with receive element `r`.
pub fn channel_vector<T: Scalar>(
    wts: &BeamWeights<T>,
    f: SpatialFrequency<T>,
    geometry: &ArrayGeometry,
) -> Vec<Complex<T>> {
    kron(&wts.transpose_apply(&geometry.tx_steering(f)), &geometry.rx_steering(f))
}
