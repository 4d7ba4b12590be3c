//! Robust Wald detection over the angle grid.
//!
//! The disturbance covariance is never formed. Everything the detector needs from
//! it is the quadratic form `hᴴΓ̂h`, which for the sample covariance of secondary
//! snapshots is `(1/K)·Σ_j |hᴴc_j|² + ε·‖h‖²`. Projections `hᴴx` for every bin at
//! once go through [`BinProjector`], which exploits the Kronecker/Fourier structure
//! of the channel vectors.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::array::{AngleGrid, ArrayGeometry};
use crate::beamform::{channel_vector, BeamWeights};
use crate::error::{Error, Result};
use crate::numerics::marcum_q1;
use crate::scalar::{dot_h, norm_sqr, phasor, Scalar};

/// Relative diagonal loading applied on top of the secondary-data estimate.
pub const DEFAULT_RELATIVE_LOADING: f64 = 1e-6;

/// Amplitude estimator feeding the detection-probability estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaMode {
    /// `hᴴy/‖h‖²`, the least-squares amplitude.
    #[default]
    Ls,
    /// `hᴴy/‖h‖`.
    PaperLiteral,
}

/// Secondary (target-free) snapshots plus diagonal loading.
#[derive(Debug, Clone)]
pub struct QuadFormEstimator<T> {
    secondary: Vec<Vec<Complex<T>>>,
    loading: T,
}

impl<T: Scalar> QuadFormEstimator<T> {
    pub fn new(secondary: Vec<Vec<Complex<T>>>, loading: T) -> Result<Self> {
        if !(loading >= T::zero()) || !loading.is_finite() {
            return Err(Error::domain(format!("loading must be finite and nonnegative, got {loading}")));
        }
        if let Some(first) = secondary.first() {
            let n = first.len();
            if let Some(bad) = secondary.iter().position(|c| c.len() != n) {
                return Err(Error::validation(format!(
                    "secondary snapshot {bad} has length {}, expected {n}",
                    secondary[bad].len()
                )));
            }
        }
        if secondary.is_empty() && loading == T::zero() {
            return Err(Error::DegenerateEstimator);
        }
        Ok(Self { secondary, loading })
    }

    /// Loading `ε = rel·(mean snapshot energy)/(snapshot length)`.
    pub fn with_relative_loading(secondary: Vec<Vec<Complex<T>>>, rel: T) -> Result<Self> {
        let len = secondary.first().map_or(0, |c| c.len());
        if secondary.is_empty() || len == 0 {
            return Err(Error::DegenerateEstimator);
        }
        let energy = secondary.iter().map(|c| norm_sqr(c)).sum::<T>() / T::lit(secondary.len() as f64);
        let loading = rel * energy / T::lit(len as f64);
        Self::new(secondary, loading)
    }

    pub fn secondary_count(&self) -> usize {
        self.secondary.len()
    }

    pub fn secondary(&self) -> &[Vec<Complex<T>>] {
        &self.secondary
    }

    pub fn loading(&self) -> T {
        self.loading
    }

    /// `hᴴΓ̂h` for one channel vector.
    pub fn quad_form(&self, h: &[Complex<T>]) -> Result<T> {
        quad_form(h, &self.secondary, self.loading)
    }
}

/// `(1/K)·Σ_j |hᴴc_j|² + ε·‖h‖²`, streaming over the snapshots.
///
/// Snapshots may be shorter than `h` when the trailing entries of `h` are zero
/// (only the leading transmit columns are generated); they may not be longer.
pub fn quad_form<T: Scalar>(h: &[Complex<T>], secondary: &[Vec<Complex<T>>], loading: T) -> Result<T> {
    if secondary.is_empty() && loading == T::zero() {
        return Err(Error::DegenerateEstimator);
    }
    let hn = norm_sqr(h);
    if hn == T::zero() {
        return Err(Error::domain("channel vector is zero"));
    }
    let mut acc = T::zero();
    for c in secondary {
        if c.len() > h.len() {
            return Err(Error::validation(format!(
                "snapshot length {} exceeds channel length {}",
                c.len(),
                h.len()
            )));
        }
        acc += dot_h(&h[..c.len()], c).norm_sqr();
    }
    let k = T::lit(secondary.len().max(1) as f64);
    Ok(acc / k + loading * hn)
}

/// `Λ = 2·|hᴴy|²/qf`.
pub fn wald_statistic<T: Scalar>(h: &[Complex<T>], y: &[Complex<T>], qf: T) -> Result<T> {
    if !(qf > T::zero()) {
        return Err(Error::domain(format!("quadratic form must be positive, got {qf}")));
    }
    if h.len() != y.len() {
        return Err(Error::validation(format!("h has length {}, y has {}", h.len(), y.len())));
    }
    Ok(T::lit(2.0) * dot_h(h, y).norm_sqr() / qf)
}

pub fn estimate_alpha<T: Scalar>(h: &[Complex<T>], y: &[Complex<T>], mode: AlphaMode) -> Complex<T> {
    alpha_from_projection(dot_h(h, y), norm_sqr(h), mode)
}

fn alpha_from_projection<T: Scalar>(z: Complex<T>, hn: T, mode: AlphaMode) -> Complex<T> {
    match mode {
        AlphaMode::Ls => z / hn,
        AlphaMode::PaperLiteral => z / hn.sqrt(),
    }
}

/// `ζ̂ = 2·|α̂|²·‖h‖⁴/qf`.
fn noncentrality<T: Scalar>(alpha: Complex<T>, hn: T, qf: T) -> T {
    T::lit(2.0) * alpha.norm_sqr() * hn * hn / qf
}

/// Asymptotic detection probability `Q₁(√ζ̂, √δ)`.
pub fn estimate_pd<T: Scalar>(h: &[Complex<T>], y: &[Complex<T>], qf: T, delta: T, mode: AlphaMode) -> Result<T> {
    if !(qf > T::zero()) {
        return Err(Error::domain(format!("quadratic form must be positive, got {qf}")));
    }
    let zeta = noncentrality(estimate_alpha(h, y, mode), norm_sqr(h), qf);
    marcum_q1(zeta.sqrt(), delta.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinRecord<T> {
    pub lambda: T,
    pub detected: bool,
    pub pd_hat: T,
    pub alpha_hat: Complex<T>,
}

/// Per-bin outcome of one pulse, in grid (row-major) order.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionMap<T> {
    pub records: Vec<BinRecord<T>>,
}

impl<T: Scalar> DetectionMap<T> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn detections(&self) -> usize {
        self.records.iter().filter(|r| r.detected).count()
    }

    pub fn lambdas(&self) -> Vec<T> {
        self.records.iter().map(|r| r.lambda).collect()
    }
}

fn dft_table<T: Scalar>(freqs: &[T], len: usize) -> Vec<Complex<T>> {
    // Row f: exp(−j2π·ν_f·m), m = 0..len.
    let mut t = Vec::with_capacity(freqs.len() * len);
    for &nu in freqs {
        t.extend((0..len).map(|m| phasor(-nu * T::lit(m as f64))));
    }
    t
}

/// Evaluates `Σ_{m,n} x[m·ny + n]·e^{−j2π(ν_l·m + ν_i·n)}` at every grid frequency pair.
fn planar_dft<T: Scalar>(
    x: &[Complex<T>],
    nx: usize,
    ny: usize,
    ex: &[Complex<T>],
    ey: &[Complex<T>],
    l_count: usize,
    i_count: usize,
    out: &mut [Complex<T>],
) {
    let zero = Complex::new(T::zero(), T::zero());
    let mut partial = vec![zero; nx * i_count];
    for m in 0..nx {
        let row = &x[m * ny..(m + 1) * ny];
        for i in 0..i_count {
            let e = &ey[i * ny..(i + 1) * ny];
            partial[m * i_count + i] = row.iter().zip(e).fold(zero, |acc, (a, b)| acc + a * b);
        }
    }
    for l in 0..l_count {
        let e = &ex[l * nx..(l + 1) * nx];
        let o = &mut out[l * i_count..(l + 1) * i_count];
        o.fill(zero);
        for (m, em) in e.iter().enumerate() {
            let p = &partial[m * i_count..(m + 1) * i_count];
            for (oi, pi) in o.iter_mut().zip(p) {
                *oi += em * pi;
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Structure<T> {
    /// `W = c·I`: `hᴴx = conj(c)·Σ D[m]·e^{−j2πν·m}` over the transmit/receive co-array.
    ScaledIdentity { c: Complex<T>, span: usize },
    /// General `W`: per active transmit column, a receive-aperture DFT weighted by
    /// `conj((Wᵀa_T)[t])`.
    Columns { active: usize, u: Vec<Complex<T>> },
}

/// Computes `h_bᴴ·x` for every grid bin `b` with `h_b = channel_vector(W, f_b)`.
#[derive(Debug, Clone)]
pub struct BinProjector<T> {
    geometry: ArrayGeometry,
    l_count: usize,
    i_count: usize,
    ex: Vec<Complex<T>>,
    ey: Vec<Complex<T>>,
    h_norm2: Vec<T>,
    structure: Structure<T>,
}

impl<T: Scalar> BinProjector<T> {
    pub fn new(grid: &AngleGrid<T>, wts: &BeamWeights<T>, geometry: &ArrayGeometry) -> Result<Self> {
        if wts.n_t() != geometry.n_t() {
            return Err(Error::validation(format!(
                "weights are {}x{} but the array has {} transmit elements",
                wts.n_t(),
                wts.n_t(),
                geometry.n_t()
            )));
        }
        let (xs, ys) = (grid.x_freqs(), grid.y_freqs());
        let n_r = T::lit(geometry.n_r() as f64);
        let n_t = wts.n_t();
        let diag = wts.get(0, 0);
        let zero = Complex::new(T::zero(), T::zero());
        let scaled_identity =
            (0..n_t).all(|r| (0..n_t).all(|c| wts.get(r, c) == if r == c { diag } else { zero }));

        let (structure, h_norm2, tabulated) = if scaled_identity {
            let span = geometry.tx_side + geometry.rx_side - 1;
            let hn = diag.norm_sqr() * T::lit(n_t as f64) * n_r;
            (Structure::ScaledIdentity { c: diag, span }, vec![hn; grid.len()], span)
        } else {
            let active = wts.active_columns().max(1);
            let mut u = Vec::with_capacity(grid.len() * active);
            let mut h_norm2 = Vec::with_capacity(grid.len());
            for b in grid.bins() {
                let ub = wts.transpose_apply(&geometry.tx_steering(b.freq));
                h_norm2.push(norm_sqr(&ub) * n_r);
                u.extend(ub[..active].iter().map(|z| z.conj()));
            }
            (Structure::Columns { active, u }, h_norm2, geometry.rx_side)
        };
        Ok(Self {
            geometry: geometry.clone(),
            l_count: grid.l_count(),
            i_count: grid.i_count(),
            ex: dft_table(&xs, tabulated),
            ey: dft_table(&ys, tabulated),
            h_norm2,
            structure,
        })
    }

    pub fn bins(&self) -> usize {
        self.l_count * self.i_count
    }

    /// `‖h_b‖²` per bin.
    pub fn h_norm2(&self) -> &[T] {
        &self.h_norm2
    }

    /// Snapshot length the projection reads: `N_R` times the transmit columns in use.
    pub fn required_len(&self) -> usize {
        match &self.structure {
            Structure::ScaledIdentity { .. } => self.geometry.n(),
            Structure::Columns { active, .. } => self.geometry.n_r() * active,
        }
    }

    /// `h_bᴴ·x` for all bins, written into `out` (length `L·I`).
    pub fn project_into(&self, x: &[Complex<T>], out: &mut [Complex<T>]) -> Result<()> {
        let need = self.required_len();
        if x.len() < need {
            return Err(Error::validation(format!(
                "snapshot has {} entries, projection needs {need}",
                x.len()
            )));
        }
        if out.len() != self.bins() {
            return Err(Error::validation("projection output has the wrong length"));
        }
        let (st, sr, n_r) = (self.geometry.tx_side, self.geometry.rx_side, self.geometry.n_r());
        let zero = Complex::new(T::zero(), T::zero());
        match &self.structure {
            Structure::ScaledIdentity { c, span } => {
                let mut d = vec![zero; span * span];
                for tx in 0..st {
                    for ty in 0..st {
                        let col = &x[(tx * st + ty) * n_r..(tx * st + ty + 1) * n_r];
                        for rx in 0..sr {
                            let drow = &mut d[(tx + rx) * span + ty..(tx + rx) * span + ty + sr];
                            for (dv, xv) in drow.iter_mut().zip(&col[rx * sr..(rx + 1) * sr]) {
                                *dv += xv;
                            }
                        }
                    }
                }
                planar_dft(&d, *span, *span, &self.ex, &self.ey, self.l_count, self.i_count, out);
                let cc = c.conj();
                for o in out.iter_mut() {
                    *o = *o * cc;
                }
            }
            Structure::Columns { active, u } => {
                out.fill(zero);
                let mut col_out = vec![zero; self.bins()];
                for t in 0..*active {
                    planar_dft(
                        &x[t * n_r..(t + 1) * n_r],
                        sr,
                        sr,
                        &self.ex,
                        &self.ey,
                        self.l_count,
                        self.i_count,
                        &mut col_out,
                    );
                    for (b, (o, r)) in out.iter_mut().zip(&col_out).enumerate() {
                        *o += u[b * active + t] * r;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn project(&self, x: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.bins()];
        self.project_into(x, &mut out)?;
        Ok(out)
    }

    /// `h_bᴴΓ̂h_b` for every bin from the estimator's snapshots.
    pub fn quad_forms(&self, est: &QuadFormEstimator<T>) -> Result<Vec<T>> {
        let bins = self.bins();
        let mut acc = vec![T::zero(); bins];
        let mut z = vec![Complex::new(T::zero(), T::zero()); bins];
        for c in est.secondary() {
            self.project_into(c, &mut z)?;
            for (a, zb) in acc.iter_mut().zip(&z) {
                *a += zb.norm_sqr();
            }
        }
        let k = T::lit(est.secondary_count().max(1) as f64);
        Ok(acc
            .iter()
            .zip(&self.h_norm2)
            .map(|(a, hn)| *a / k + est.loading() * *hn)
            .collect())
    }
}

/// Bins whose `‖h‖²` is below this fraction of the largest on the grid sit in a
/// transmit null; their projections are rounding noise.
pub const NULL_GAIN: f64 = 1e-12;

/// Record of a bin the current weights do not illuminate: no statistic, no
/// detection, and the no-signal detection probability `Q₁(0, √δ) = e^{−δ/2}`.
pub fn unilluminated_record<T: Scalar>(delta: T) -> Result<BinRecord<T>> {
    Ok(BinRecord {
        lambda: T::zero(),
        detected: false,
        pd_hat: marcum_q1(T::zero(), delta.sqrt())?,
        alpha_hat: Complex::new(T::zero(), T::zero()),
    })
}

/// Detection outcome of one bin from its projection `z = hᴴy`, `‖h‖²` and `qf`.
pub fn bin_record<T: Scalar>(z: Complex<T>, hn: T, qf: T, delta: T, mode: AlphaMode) -> Result<BinRecord<T>> {
    if !(qf > T::zero()) {
        return Err(Error::domain(format!("quadratic form must be positive, got {qf}")));
    }
    let lambda = T::lit(2.0) * z.norm_sqr() / qf;
    let alpha_hat = if hn > T::zero() {
        alpha_from_projection(z, hn, mode)
    } else {
        Complex::new(T::zero(), T::zero())
    };
    let zeta = match mode {
        AlphaMode::Ls => lambda,
        AlphaMode::PaperLiteral => noncentrality(alpha_hat, hn, qf),
    };
    Ok(BinRecord {
        lambda,
        detected: lambda > delta,
        pd_hat: marcum_q1(zeta.sqrt(), delta.sqrt())?,
        alpha_hat,
    })
}

fn null_floor<T: Scalar>(norms: &[T]) -> T {
    let peak = norms.iter().copied().fold(T::zero(), |a, b| if b > a { b } else { a });
    peak * T::lit(NULL_GAIN)
}

/// Runs the spatial filter bank: one Wald test per bin.
///
/// `signals[b]` is the snapshot of bin `b` in grid order. Snapshots and secondary
/// data may be truncated to [`BinProjector::required_len`] entries.
pub fn scan<T: Scalar>(
    grid: &AngleGrid<T>,
    signals: &[Vec<Complex<T>>],
    wts: &BeamWeights<T>,
    geometry: &ArrayGeometry,
    est: &QuadFormEstimator<T>,
    delta: T,
    mode: AlphaMode,
) -> Result<DetectionMap<T>> {
    let projector = BinProjector::new(grid, wts, geometry)?;
    scan_with(&projector, signals, est, delta, mode)
}

pub fn scan_with<T: Scalar>(
    projector: &BinProjector<T>,
    signals: &[Vec<Complex<T>>],
    est: &QuadFormEstimator<T>,
    delta: T,
    mode: AlphaMode,
) -> Result<DetectionMap<T>> {
    let bins = projector.bins();
    if signals.len() != bins {
        return Err(Error::validation(format!("expected {bins} bin signals, got {}", signals.len())));
    }
    let qf = projector.quad_forms(est)?;
    let floor = null_floor(&projector.h_norm2);
    let mut z = vec![Complex::new(T::zero(), T::zero()); bins];
    let mut records = Vec::with_capacity(bins);
    for (b, y) in signals.iter().enumerate() {
        if projector.h_norm2[b] <= floor {
            records.push(unilluminated_record(delta)?);
            continue;
        }
        projector.project_into(y, &mut z)?;
        records.push(bin_record(z[b], projector.h_norm2[b], qf[b], delta, mode)?);
    }
    Ok(DetectionMap { records })
}

/// Straightforward per-bin evaluation with explicit channel vectors; reference
/// for [`scan`].
pub fn scan_direct<T: Scalar>(
    grid: &AngleGrid<T>,
    signals: &[Vec<Complex<T>>],
    wts: &BeamWeights<T>,
    geometry: &ArrayGeometry,
    est: &QuadFormEstimator<T>,
    delta: T,
    mode: AlphaMode,
) -> Result<DetectionMap<T>> {
    if signals.len() != grid.len() {
        return Err(Error::validation(format!(
            "expected {} bin signals, got {}",
            grid.len(),
            signals.len()
        )));
    }
    let hs: Vec<_> = grid.bins().iter().map(|b| channel_vector(wts, b.freq, geometry)).collect();
    let norms: Vec<T> = hs.iter().map(|h| norm_sqr(h)).collect();
    let floor = null_floor(&norms);
    let mut records = Vec::with_capacity(grid.len());
    for ((h, hn), y) in hs.iter().zip(&norms).zip(signals) {
        if *hn <= floor {
            records.push(unilluminated_record(delta)?);
            continue;
        }
        let qf = est.quad_form(h)?;
        let z = dot_h(&h[..y.len()], y);
        records.push(bin_record(z, *hn, qf, delta, mode)?);
    }
    Ok(DetectionMap { records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{make_grid, SpatialFrequency};
    use crate::beamform::{max_power_weights, omni_weights};
    use crate::numerics::{chi2_threshold, Domain, RngStream};
    use rand::Rng;
    use rand_distr::StandardNormal;

    type C = Complex<f64>;

    fn gaussian(n: usize, rng: &mut RngStream) -> Vec<C> {
        let s = 0.5f64.sqrt();
        (0..n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                C::new(re * s, im * s)
            })
            .collect()
    }

    fn rng(i: u64) -> RngStream {
        RngStream::derive(2024, Domain::Test, &[i])
    }

    #[test]
    fn white_quad_form_matches_norm() {
        let mut r = rng(1);
        let h = gaussian(100, &mut r);
        let sec: Vec<Vec<C>> = (0..2000).map(|_| gaussian(100, &mut r)).collect();
        let q = quad_form(&h, &sec, 0.0).unwrap();
        let hn = norm_sqr(&h);
        assert!((q / hn - 1.0).abs() < 0.05, "{q} vs {hn}");
    }

    #[test]
    fn quad_form_edge_cases() {
        let h = vec![C::new(1.0, 0.0), C::new(0.0, 2.0)];
        assert!((quad_form(&h, &[], 0.1).unwrap() - 0.5).abs() < 1e-15);
        let c = vec![C::new(0.5, -1.0), C::new(3.0, 0.25)];
        let want = dot_h(&h, &c).norm_sqr();
        assert_eq!(quad_form(&h, &[c], 0.0).unwrap(), want);
        assert!(matches!(quad_form(&h, &[], 0.0), Err(Error::DegenerateEstimator)));
        assert!(matches!(QuadFormEstimator::<f64>::new(vec![], 0.0), Err(Error::DegenerateEstimator)));
    }

    #[test]
    fn quad_form_matches_dense_covariance() {
        let mut r = rng(2);
        for &n in &[1usize, 7, 32, 64] {
            let h = gaussian(n, &mut r);
            let sec: Vec<Vec<C>> = (0..40).map(|_| gaussian(n, &mut r)).collect();
            let eps = 0.3;
            let mut gamma = vec![C::new(0.0, 0.0); n * n];
            for c in &sec {
                for i in 0..n {
                    for j in 0..n {
                        gamma[i * n + j] += c[i] * c[j].conj() / sec.len() as f64;
                    }
                }
            }
            for i in 0..n {
                gamma[i * n + i] += eps;
            }
            let mut dense = C::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    dense += h[i].conj() * gamma[i * n + j] * h[j];
                }
            }
            let q = quad_form(&h, &sec, eps).unwrap();
            assert!((q - dense.re).abs() <= 1e-10 * dense.re, "n={n}: {q} vs {}", dense.re);
        }
    }

    #[test]
    fn wald_examples() {
        let mut r = rng(3);
        let h = gaussian(16, &mut r);
        let hn = norm_sqr(&h);
        assert!((wald_statistic(&h, &h, hn).unwrap() - 2.0 * hn).abs() < 1e-12 * hn);
        let y = vec![C::new(1.0, 0.0), C::new(1.0, 0.0)];
        let hp = vec![C::new(1.0, 0.0), C::new(-1.0, 0.0)];
        assert_eq!(wald_statistic(&hp, &y, 1.0).unwrap(), 0.0);
        let beta = C::new(0.3, -2.0);
        let y = gaussian(16, &mut r);
        let yb: Vec<C> = y.iter().map(|z| z * beta).collect();
        let (a, b) = (wald_statistic(&h, &y, 2.0).unwrap(), wald_statistic(&h, &yb, 2.0).unwrap());
        assert!((b - a * beta.norm_sqr()).abs() < 1e-12 * b);
        assert!(matches!(wald_statistic(&h, &y, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn alpha_examples() {
        let mut r = rng(4);
        let h = gaussian(10, &mut r);
        let y: Vec<C> = h.iter().map(|z| z * 3.0).collect();
        assert!((estimate_alpha(&h, &y, AlphaMode::Ls) - C::new(3.0, 0.0)).norm() < 1e-14);
        let lit = estimate_alpha(&h, &h, AlphaMode::PaperLiteral);
        assert!((lit - C::new(norm_sqr(&h).sqrt(), 0.0)).norm() < 1e-12);
        let hp = vec![C::new(1.0, 0.0), C::new(-1.0, 0.0)];
        let yp = vec![C::new(2.0, 1.0), C::new(2.0, 1.0)];
        assert_eq!(estimate_alpha(&hp, &yp, AlphaMode::Ls), C::new(0.0, 0.0));
        assert_eq!(estimate_alpha(&hp, &yp, AlphaMode::PaperLiteral), C::new(0.0, 0.0));
    }

    #[test]
    fn pd_examples() {
        let delta = chi2_threshold(1e-5f64).unwrap();
        let hp = vec![C::new(1.0, 0.0), C::new(-1.0, 0.0)];
        let yp = vec![C::new(2.0, 1.0), C::new(2.0, 1.0)];
        for mode in [AlphaMode::Ls, AlphaMode::PaperLiteral] {
            let pd = estimate_pd(&hp, &yp, 1.0, delta, mode).unwrap();
            assert!((pd - 1e-5).abs() < 1e-18);
        }
        // ζ̂ = 100: y = β·h with 2|β|²‖h‖⁴/qf = 100.
        let h = vec![C::new(1.0, 0.0); 4];
        let y: Vec<C> = h.iter().map(|z| z * 5.0).collect();
        let pd = estimate_pd(&h, &y, 2.0 * 25.0 * 16.0 / 100.0, delta, AlphaMode::Ls).unwrap();
        assert!(pd >= 0.999, "{pd}");
    }

    #[test]
    fn ls_noncentrality_equals_wald() {
        let mut r = rng(5);
        for _ in 0..100 {
            let h = gaussian(12, &mut r);
            let y = gaussian(12, &mut r);
            let qf: f64 = r.random_range(0.5..5.0);
            let zeta = noncentrality(estimate_alpha(&h, &y, AlphaMode::Ls), norm_sqr(&h), qf);
            let lambda = wald_statistic(&h, &y, qf).unwrap();
            assert!((zeta - lambda).abs() <= 1e-12 * lambda.max(1.0));
        }
    }

    fn random_weights(n: usize, r: &mut RngStream) -> BeamWeights<f64> {
        BeamWeights::from_matrix(n, gaussian(n * n, r)).unwrap()
    }

    #[test]
    fn projector_matches_direct_products() {
        let mut r = rng(6);
        let grid = make_grid(6, 5, -0.5f64, 0.17).unwrap();
        for &(st, sr) in &[(1usize, 1usize), (2, 3), (3, 2), (4, 4)] {
            let g = ArrayGeometry::square(st, sr).unwrap();
            let target = SpatialFrequency::new(0.18, -0.16);
            let designs = [
                omni_weights(g.n_t(), 1.7).unwrap(),
                max_power_weights(&[target], &g, 1.0).unwrap(),
                random_weights(g.n_t(), &mut r),
            ];
            for w in &designs {
                let p = BinProjector::new(&grid, w, &g).unwrap();
                let x = gaussian(g.n(), &mut r);
                let fast = p.project(&x).unwrap();
                for (b, bin) in grid.bins().iter().enumerate() {
                    let h = channel_vector(w, bin.freq, &g);
                    let want = dot_h(&h, &x);
                    assert!((fast[b] - want).norm() <= 1e-10 * (1.0 + want.norm()), "{st}x{sr} bin {b}");
                    assert!((p.h_norm2()[b] - norm_sqr(&h)).abs() <= 1e-10 * (1.0 + norm_sqr(&h)));
                }
            }
        }
    }

    #[test]
    fn rank_one_projection_reads_only_first_column() {
        let g = ArrayGeometry::square(3, 3).unwrap();
        let grid = make_grid(4, 4, -0.5f64, 0.25).unwrap();
        let w = max_power_weights(&[SpatialFrequency::new(0.25, 0.0)], &g, 1.0).unwrap();
        let p = BinProjector::new(&grid, &w, &g).unwrap();
        assert_eq!(p.required_len(), 9);
        let x = gaussian(g.n(), &mut rng(7));
        assert_eq!(p.project(&x[..9]).unwrap(), p.project(&x).unwrap());
    }

    fn setup() -> (ArrayGeometry, AngleGrid<f64>, QuadFormEstimator<f64>) {
        let g = ArrayGeometry::square(3, 3).unwrap();
        let grid = make_grid(5, 5, -0.5, 0.2).unwrap();
        let mut r = rng(8);
        let sec: Vec<Vec<C>> = (0..64).map(|_| gaussian(g.n(), &mut r)).collect();
        (g, grid, QuadFormEstimator::new(sec, 0.0).unwrap())
    }

    #[test]
    fn zero_signals_give_false_alarm_rate() {
        let (g, grid, est) = setup();
        let w = omni_weights(g.n_t(), 1.0).unwrap();
        let sig = vec![vec![C::new(0.0, 0.0); g.n()]; grid.len()];
        let delta = chi2_threshold(1e-5).unwrap();
        let m = scan(&grid, &sig, &w, &g, &est, delta, AlphaMode::Ls).unwrap();
        for rec in &m.records {
            assert_eq!(rec.lambda, 0.0);
            assert!(!rec.detected);
            assert!((rec.pd_hat - 1e-5).abs() < 1e-18);
        }
    }

    #[test]
    fn strong_bin_is_the_maximum_and_scan_is_deterministic() {
        let (g, grid, est) = setup();
        let w = omni_weights(g.n_t(), 1.0).unwrap();
        let mut r = rng(9);
        let mut sig: Vec<Vec<C>> = (0..grid.len()).map(|_| gaussian(g.n(), &mut r)).collect();
        let hot = 13;
        sig[hot] = channel_vector(&w, grid.bins()[hot].freq, &g).iter().map(|z| z * 10.0).collect();
        let delta = chi2_threshold(1e-5).unwrap();
        let m = scan(&grid, &sig, &w, &g, &est, delta, AlphaMode::Ls).unwrap();
        let lam = m.lambdas();
        let argmax = (0..lam.len()).max_by(|&a, &b| lam[a].total_cmp(&lam[b])).unwrap();
        assert_eq!(argmax, hot);
        assert!(m.records[hot].detected);
        assert_eq!(m, scan(&grid, &sig, &w, &g, &est, delta, AlphaMode::Ls).unwrap());
        let direct = scan_direct(&grid, &sig, &w, &g, &est, delta, AlphaMode::Ls).unwrap();
        for (a, b) in m.records.iter().zip(&direct.records) {
            assert!((a.lambda - b.lambda).abs() <= 1e-9 * (1.0 + b.lambda));
            assert_eq!(a.detected, b.detected);
        }
        assert!(matches!(
            scan(&grid, &sig[..3], &w, &g, &est, delta, AlphaMode::Ls),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn literal_alpha_changes_pd_not_lambda() {
        let (g, grid, est) = setup();
        let w = omni_weights(g.n_t(), 1.0).unwrap();
        let mut r = rng(10);
        let sig: Vec<Vec<C>> = (0..grid.len()).map(|_| gaussian(g.n(), &mut r)).collect();
        let delta = chi2_threshold(1e-2).unwrap();
        let a = scan(&grid, &sig, &w, &g, &est, delta, AlphaMode::Ls).unwrap();
        let b = scan(&grid, &sig, &w, &g, &est, delta, AlphaMode::PaperLiteral).unwrap();
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.lambda, y.lambda);
            assert!(y.pd_hat >= x.pd_hat);
        }
    }

    #[test]
    fn transmit_nulls_are_not_tested() {
        let geometry = ArrayGeometry::square(10, 2).unwrap();
        let grid = make_grid(20, 20, -0.5, 0.05).unwrap();
        let w = max_power_weights(&[SpatialFrequency::new(0.0, 0.0)], &geometry, 1.0).unwrap();
        let mut rng = RngStream::derive(31, Domain::Test, &[]);
        let n = geometry.n_r();
        let signals: Vec<Vec<C>> = (0..grid.len()).map(|_| gaussian(n, &mut rng)).collect();
        let est = QuadFormEstimator::new((0..8).map(|_| gaussian(n, &mut rng)).collect(), 0.0).unwrap();
        let delta = chi2_threshold(0.01).unwrap();
        let fast = scan(&grid, &signals, &w, &geometry, &est, delta, AlphaMode::Ls).unwrap();
        let slow = scan_direct(&grid, &signals, &w, &geometry, &est, delta, AlphaMode::Ls).unwrap();
        let null = grid.locate(SpatialFrequency::new(0.1, 0.0), 1e-9).unwrap();
        for map in [&fast, &slow] {
            let r = &map.records[null];
            assert_eq!((r.lambda, r.detected), (0.0, false));
            assert!((r.pd_hat - 0.01).abs() < 1e-12);
        }
        let lit = grid.locate(SpatialFrequency::new(0.0, 0.0), 1e-9).unwrap();
        assert!(fast.records[lit].lambda > 0.0);
    }
}
