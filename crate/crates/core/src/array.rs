//! Planar-array geometry, steering vectors and the spatial-frequency bin grid.
//!
//! Directions are handled as spatial frequencies `(ν_x, ν_y)`; the grid is laid out
//! directly in that domain. Planar steering vectors are ordered x-major,
//! `a = a_x ⊗ a_y`, and every consumer (channel vectors, clutter vectorization) uses
//! the same ordering.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{kron, phasor, Scalar};

/// Square transmit and receive uniform planar arrays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub tx_side: usize,
    pub rx_side: usize,
    /// Element spacing in wavelengths.
    pub spacing_wavelengths: f64,
}

impl ArrayGeometry {
    pub fn new(tx_side: usize, rx_side: usize, spacing_wavelengths: f64) -> Result<Self> {
        if tx_side == 0 || rx_side == 0 {
            return Err(Error::domain("array sides must be positive"));
        }
        if !(spacing_wavelengths > 0.0 && spacing_wavelengths.is_finite()) {
            return Err(Error::domain(format!(
                "element spacing must be positive, got {spacing_wavelengths}"
            )));
        }
        Ok(Self {
            tx_side,
            rx_side,
            spacing_wavelengths,
        })
    }

    /// Half-wavelength spacing.
    pub fn square(tx_side: usize, rx_side: usize) -> Result<Self> {
        Self::new(tx_side, rx_side, 0.5)
    }

    pub fn n_t(&self) -> usize {
        self.tx_side * self.tx_side
    }

    pub fn n_r(&self) -> usize {
        self.rx_side * self.rx_side
    }

    /// Number of spatial channels `N = N_T·N_R`.
    pub fn n(&self) -> usize {
        self.n_t() * self.n_r()
    }

    pub fn tx_steering<T: Scalar>(&self, f: SpatialFrequency<T>) -> Vec<Complex<T>> {
        steering_planar(self.tx_side, f)
    }

    pub fn rx_steering<T: Scalar>(&self, f: SpatialFrequency<T>) -> Vec<Complex<T>> {
        steering_planar(self.rx_side, f)
    }

    /// `(ν_x, ν_y) = (d/λ)·(sinθ·cosφ, sinθ·sinφ)`.
    pub fn angles_to_freq<T: Scalar>(&self, theta: T, phi: T) -> SpatialFrequency<T> {
        let d = T::lit(self.spacing_wavelengths);
        let s = theta.sin();
        SpatialFrequency {
            nu_x: d * s * phi.cos(),
            nu_y: d * s * phi.sin(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialFrequency<T> {
    pub nu_x: T,
    pub nu_y: T,
}

impl<T: Scalar> SpatialFrequency<T> {
    pub fn new(nu_x: T, nu_y: T) -> Self {
        Self { nu_x, nu_y }
    }

    /// True when both components lie in the unambiguous interval `[−0.5, 0.5)`.
    pub fn is_unambiguous(&self) -> bool {
        let h = T::lit(0.5);
        self.nu_x >= -h && self.nu_x < h && self.nu_y >= -h && self.nu_y < h
    }
}

/// Spatial frequency of direction `(θ, φ)` at half-wavelength spacing.
pub fn angles_to_freq<T: Scalar>(theta: T, phi: T) -> SpatialFrequency<T> {
    let s = T::lit(0.5) * theta.sin();
    SpatialFrequency {
        nu_x: s * phi.cos(),
        nu_y: s * phi.sin(),
    }
}

/// Uniform linear steering vector, entry `k` = `exp(j·2π·ν·k)`.
pub fn steering_axis<T: Scalar>(n: usize, nu: T) -> Vec<Complex<T>> {
    (0..n).map(|k| phasor(nu * T::lit(k as f64))).collect()
}

/// Planar steering vector `a_x(ν_x) ⊗ a_y(ν_y)` of length `side²`.
pub fn steering_planar<T: Scalar>(side: usize, f: SpatialFrequency<T>) -> Vec<Complex<T>> {
    kron(&steering_axis(side, f.nu_x), &steering_axis(side, f.nu_y))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin<T> {
    pub l: usize,
    pub i: usize,
    pub freq: SpatialFrequency<T>,
}

/// `L × I` grid of angle bins, row-major in `(l, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid<T> {
    bins: Vec<Bin<T>>,
    l_count: usize,
    i_count: usize,
    start: T,
    step: T,
}

/// Builds the grid with bin `(l, i)` at `(start + l·step, start + i·step)`.
pub fn make_grid<T: Scalar>(l_count: usize, i_count: usize, start: T, step: T) -> Result<AngleGrid<T>> {
    if l_count == 0 || i_count == 0 {
        return Err(Error::domain("grid dimensions must be positive"));
    }
    if !(step > T::zero()) && l_count.max(i_count) > 1 {
        return Err(Error::domain(format!("grid step must be positive, got {step}")));
    }
    let half = T::lit(0.5);
    let last = start + T::lit((l_count.max(i_count) - 1) as f64) * step;
    if start < -half || last >= half {
        return Err(Error::domain(format!(
            "grid [{start}, {last}] leaves the unambiguous interval [-0.5, 0.5)"
        )));
    }
    let mut bins = Vec::with_capacity(l_count * i_count);
    for l in 0..l_count {
        for i in 0..i_count {
            bins.push(Bin {
                l,
                i,
                freq: SpatialFrequency {
                    nu_x: start + T::lit(l as f64) * step,
                    nu_y: start + T::lit(i as f64) * step,
                },
            });
        }
    }
    Ok(AngleGrid {
        bins,
        l_count,
        i_count,
        start,
        step,
    })
}

impl<T: Scalar> AngleGrid<T> {
    pub fn bins(&self) -> &[Bin<T>] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn l_count(&self) -> usize {
        self.l_count
    }

    pub fn i_count(&self) -> usize {
        self.i_count
    }

    pub fn start(&self) -> T {
        self.start
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn index(&self, l: usize, i: usize) -> usize {
        l * self.i_count + i
    }

    /// Frequencies along the x axis (`l`), ascending.
    pub fn x_freqs(&self) -> Vec<T> {
        (0..self.l_count)
            .map(|l| self.start + T::lit(l as f64) * self.step)
            .collect()
    }

    /// Frequencies along the y axis (`i`), ascending.
    pub fn y_freqs(&self) -> Vec<T> {
        (0..self.i_count)
            .map(|i| self.start + T::lit(i as f64) * self.step)
            .collect()
    }

    /// Index of the bin centered at `f`, if any lies within `tol` on both axes.
    pub fn locate(&self, f: SpatialFrequency<T>, tol: T) -> Option<usize> {
        let snap = |nu: T, count: usize| -> Option<usize> {
            let pos = (nu - self.start) / self.step;
            let k = pos.round();
            if k < T::zero() || k >= T::lit(count as f64) {
                return None;
            }
            let center = self.start + k * self.step;
            ((nu - center).abs() <= tol).then(|| k.to_usize().unwrap())
        };
        let l = snap(f.nu_x, self.l_count)?;
        let i = snap(f.nu_y, self.i_count)?;
        Some(self.index(l, i))
    }
}
