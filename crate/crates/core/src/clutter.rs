//! Separable quarter-plane 2D AR disturbance with heavy-tailed complex-t innovations.
//!
//! The field is indexed `(n_x, n_y)` = (receive channel, transmit channel) and
//! vectorized column-major, so `vec(C)` lines up with the channel vector
//! `h = (Wᵀa_T) ⊗ a_R`. Generation walks the enlarged grid column by column; the
//! first `k` retained columns of a field therefore depend only on the first draws
//! of its stream, which lets callers generate just the transmit columns they use.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::array::{ArrayGeometry, SpatialFrequency};
use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::scalar::{phasor, Scalar};

/// Which closed form [`psd`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsdForm {
    /// `σ²_w·|1 − A(ν_x)·B(ν_y)|⁻²` with `A`, `B` the per-axis coefficient sums.
    #[default]
    ProductOfSums,
    /// `σ²_w·|1 − A(ν_x)|⁻²·|1 − B(ν_y)|⁻²`.
    Separable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceModel<T> {
    pub rho_x: Vec<Complex<T>>,
    pub rho_y: Vec<Complex<T>>,
    /// Tail parameter of the t innovations; both inverse-gamma texture parameters.
    pub shape: T,
    /// Innovation scale `σ²_w`.
    pub sigma_w2: T,
    pub psd_form: PsdForm,
}

/// `m·e^{−j2π·t}` for the (modulus, phase-in-turns) pairs used to state coefficients.
pub fn coefficient<T: Scalar>(modulus: T, turns: T) -> Complex<T> {
    phasor(-turns) * modulus
}

/// Coefficients shared by both axes of the reference scenario, as (modulus, turns).
pub const PAPER_COEFFS: [(f64, f64); 6] = [
    (0.5, 0.4),
    (0.6, 0.2),
    (0.7, 0.0),
    (0.4, 0.1),
    (0.5, 0.3),
    (0.6, 0.35),
];

impl<T: Scalar> DisturbanceModel<T> {
    pub fn new(rho_x: Vec<Complex<T>>, rho_y: Vec<Complex<T>>, shape: T, sigma_w2: T) -> Result<Self> {
        let m = Self {
            rho_x,
            rho_y,
            shape,
            sigma_w2,
            psd_form: PsdForm::ProductOfSums,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.shape > T::one()) || !self.shape.is_finite() {
            return Err(Error::domain(format!("innovation shape must exceed 1, got {}", self.shape)));
        }
        if !(self.sigma_w2 > T::zero()) || !self.sigma_w2.is_finite() {
            return Err(Error::domain(format!(
                "innovation scale must be positive, got {}",
                self.sigma_w2
            )));
        }
        if self
            .rho_x
            .iter()
            .chain(&self.rho_y)
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::domain("AR coefficients must be finite"));
        }
        Ok(())
    }

    /// White innovations only (`p = q = 0`).
    pub fn white(shape: T, sigma_w2: T) -> Result<Self> {
        Self::new(Vec::new(), Vec::new(), shape, sigma_w2)
    }

    pub fn p(&self) -> usize {
        self.rho_x.len()
    }

    pub fn q(&self) -> usize {
        self.rho_y.len()
    }

    /// Leading-edge burn-in, `4·max(p, q)`.
    pub fn default_burn_in(&self) -> usize {
        4 * self.p().max(self.q())
    }

    pub fn with_psd_form(mut self, form: PsdForm) -> Self {
        self.psd_form = form;
        self
    }
}

/// AR(6) on both axes with t innovations of shape 2 and unit scale.
pub fn paper_model<T: Scalar>() -> DisturbanceModel<T> {
    let rho: Vec<Complex<T>> = PAPER_COEFFS
        .iter()
        .map(|&(m, t)| coefficient(T::lit(m), T::lit(t)))
        .collect();
    DisturbanceModel {
        rho_x: rho.clone(),
        rho_y: rho,
        shape: T::lit(2.0),
        sigma_w2: T::one(),
        psd_form: PsdForm::ProductOfSums,
    }
}

/// Compound-Gaussian sampler: texture `τ ~ InvGamma(λ, λ)`, `w = √(τ·σ²_w)·g`.
#[derive(Debug, Clone)]
pub struct InnovationSampler<T> {
    texture: Gamma<f64>,
    half_scale: f64,
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Scalar> InnovationSampler<T> {
    pub fn new(model: &DisturbanceModel<T>) -> Result<Self> {
        model.validate()?;
        let shape = model.shape.as_f64();
        // τ = 1/G with G ~ Gamma(shape, scale = 1/shape).
        let texture = Gamma::new(shape, shape.recip())
            .map_err(|e| Error::domain(format!("invalid texture distribution: {e}")))?;
        Ok(Self {
            texture,
            half_scale: 0.5 * model.sigma_w2.as_f64(),
            _scalar: std::marker::PhantomData,
        })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex<T> {
        let tau = self.texture.sample(rng).recip();
        let amp = (tau * self.half_scale).sqrt();
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex::new(T::lit(amp * re), T::lit(amp * im))
    }
}

/// One circularly symmetric complex-t innovation.
pub fn sample_innovation<T: Scalar>(model: &DisturbanceModel<T>, rng: &mut RngStream) -> Result<Complex<T>> {
    Ok(InnovationSampler::new(model)?.sample(rng))
}

/// Disturbance matrix with `rows` receive and `cols` transmit channels, column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ClutterField<T> {
    rows: usize,
    cols: usize,
    values: Vec<Complex<T>>,
}

impl<T: Scalar> ClutterField<T> {
    pub fn from_column_major(rows: usize, cols: usize, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::validation(format!(
                "field of {rows}x{cols} needs {} values, got {}",
                rows * cols,
                values.len()
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.values[col * self.rows + row]
    }

    pub fn column(&self, col: usize) -> &[Complex<T>] {
        &self.values[col * self.rows..(col + 1) * self.rows]
    }

    /// `vec(C)`: columns stacked.
    pub fn as_vec(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<Complex<T>> {
        self.values
    }
}

/// Runs the quarter-plane recursion with caller-supplied innovations.
///
/// `c[x,y] = Σ_i ρ_x[i]·c[x−i,y] + Σ_j ρ_y[j]·c[x,y−j] + w[x,y]` on a
/// `(rows+burn_in) × (cols+burn_in)` grid with zero boundary, visiting cells column
/// by column (`innovation(x, y)` is called in that order). Returns the bottom-right
/// `rows × keep_cols` block, `keep_cols ≤ cols`; columns past `keep_cols` are never
/// computed.
pub fn run_recursion<T, F>(
    model: &DisturbanceModel<T>,
    rows: usize,
    cols: usize,
    keep_cols: usize,
    burn_in: usize,
    mut innovation: F,
) -> Result<ClutterField<T>>
where
    T: Scalar,
    F: FnMut(usize, usize) -> Complex<T>,
{
    if rows == 0 || cols == 0 {
        return Err(Error::domain("field dimensions must be positive"));
    }
    if keep_cols > cols {
        return Err(Error::domain(format!("cannot keep {keep_cols} of {cols} columns")));
    }
    let total_rows = rows + burn_in;
    let total_cols = keep_cols + burn_in;
    let zero = Complex::new(T::zero(), T::zero());
    let mut grid = vec![zero; total_rows * total_cols];
    let (rho_x, rho_y) = (&model.rho_x, &model.rho_y);

    let (p, q) = (rho_x.len(), rho_y.len());
    for y in 0..total_cols {
        let base = y * total_rows;
        for x in 0..total_rows {
            let mut acc = innovation(x, y);
            if x >= p && y >= q {
                // Interior: every tap is in range.
                let (past, cur) = grid.split_at_mut(base);
                let col = &cur[x - p..x];
                let mut ax = zero;
                for (r, v) in rho_x.iter().zip(col.iter().rev()) {
                    ax += r * v;
                }
                let mut ay = zero;
                for (j, r) in rho_y.iter().enumerate() {
                    ay += r * past[past.len() - (j + 1) * total_rows + x];
                }
                cur[x] = acc + (ax + ay);
                continue;
            }
            for (i, r) in rho_x.iter().enumerate().take(x) {
                acc += r * grid[base + x - i - 1];
            }
            for (j, r) in rho_y.iter().enumerate().take(y) {
                acc += r * grid[base - (j + 1) * total_rows + x];
            }
            grid[base + x] = acc;
        }
    }

    let mut values = Vec::with_capacity(rows * keep_cols);
    for y in burn_in..total_cols {
        let base = y * total_rows + burn_in;
        values.extend_from_slice(&grid[base..base + rows]);
    }
    ClutterField::from_column_major(rows, keep_cols, values)
}

/// Generates a `rows × cols` disturbance field with independent innovations per cell.
pub fn generate_field<T: Scalar>(
    model: &DisturbanceModel<T>,
    rows: usize,
    cols: usize,
    burn_in: usize,
    rng: &mut RngStream,
) -> Result<ClutterField<T>> {
    generate_field_columns(model, rows, cols, cols, burn_in, rng)
}

/// The first `keep_cols` columns of the field [`generate_field`] draws from the same stream.
pub fn generate_field_columns<T: Scalar>(
    model: &DisturbanceModel<T>,
    rows: usize,
    cols: usize,
    keep_cols: usize,
    burn_in: usize,
    rng: &mut RngStream,
) -> Result<ClutterField<T>> {
    let sampler = InnovationSampler::new(model)?;
    run_recursion(model, rows, cols, keep_cols, burn_in, |_, _| sampler.sample(rng))
}

/// One disturbance snapshot `c = vec(C)` of length `N`, `C` being `N_R × N_T`.
pub fn draw_disturbance<T: Scalar>(
    model: &DisturbanceModel<T>,
    geometry: &ArrayGeometry,
    rng: &mut RngStream,
) -> Result<Vec<Complex<T>>> {
    draw_disturbance_columns(model, geometry, geometry.n_t(), rng)
}

/// Leading `n_r·keep_cols` entries of the snapshot [`draw_disturbance`] would return.
pub fn draw_disturbance_columns<T: Scalar>(
    model: &DisturbanceModel<T>,
    geometry: &ArrayGeometry,
    keep_cols: usize,
    rng: &mut RngStream,
) -> Result<Vec<Complex<T>>> {
    let field = generate_field_columns(
        model,
        geometry.n_r(),
        geometry.n_t(),
        keep_cols,
        model.default_burn_in(),
        rng,
    )?;
    Ok(field.into_vec())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdValue<T> {
    pub value: T,
    /// The denominator vanished (below 1e-12); `value` is +∞.
    pub singular: bool,
}

fn coefficient_sum<T: Scalar>(rho: &[Complex<T>], nu: T) -> Complex<T> {
    rho.iter()
        .enumerate()
        .map(|(n, r)| r * phasor(-nu * T::lit((n + 1) as f64)))
        .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)
}

/// Power spectral density of the disturbance at `f`, in the model's [`PsdForm`].
pub fn psd<T: Scalar>(model: &DisturbanceModel<T>, f: SpatialFrequency<T>) -> PsdValue<T> {
    let one = Complex::new(T::one(), T::zero());
    let ax = coefficient_sum(&model.rho_x, f.nu_x);
    let ay = coefficient_sum(&model.rho_y, f.nu_y);
    let denom = match model.psd_form {
        PsdForm::ProductOfSums => (one - ax * ay).norm(),
        PsdForm::Separable => (one - ax).norm() * (one - ay).norm(),
    };
    if denom.as_f64() < 1e-12 {
        return PsdValue {
            value: T::infinity(),
            singular: true,
        };
    }
    PsdValue {
        value: model.sigma_w2 / (denom * denom),
        singular: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub stable_x: bool,
    pub stable_y: bool,
    /// Moduli of the roots of `1 − Σ ρ_{x,i} z^i`, ascending.
    pub root_moduli_x: Vec<f64>,
    pub root_moduli_y: Vec<f64>,
    /// `Σ|ρ_x| + Σ|ρ_y| < 1`: a sufficient condition for the joint 2D recursion
    /// to be bounded; per-axis stability alone does not imply it.
    pub joint_contractive: bool,
}

/// Roots of `Σ c_k z^k` (ascending coefficients) by Durand–Kerner iteration with
/// a final Newton polish on the original polynomial.
pub fn polynomial_roots(coeffs: &[Complex<f64>]) -> Vec<Complex<f64>> {
    let mut c: Vec<Complex<f64>> = coeffs.to_vec();
    while c.len() > 1 && c.last().is_some_and(|z| z.norm() == 0.0) {
        c.pop();
    }
    let degree = c.len().saturating_sub(1);
    if degree == 0 {
        return Vec::new();
    }
    let lead = c[degree];
    let monic: Vec<Complex<f64>> = c.iter().map(|z| z / lead).collect();
    let eval = |p: &[Complex<f64>], z: Complex<f64>| p.iter().rev().fold(Complex::new(0.0, 0.0), |acc, k| acc * z + k);
    let deriv = |p: &[Complex<f64>], z: Complex<f64>| {
        p.iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(Complex::new(0.0, 0.0), |acc, (k, a)| acc * z + a * k as f64)
    };

    // Cauchy bound on root moduli sets the radius of the starting circle.
    let radius = 1.0 + monic[..degree].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let seed = Complex::new(0.4, 0.9);
    let mut roots: Vec<Complex<f64>> = (0..degree).map(|k| seed.powu(k as u32) * radius / seed.norm().powi(k as i32)).collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for i in 0..degree {
            let zi = roots[i];
            let mut denom = Complex::new(1.0, 0.0);
            for (j, zj) in roots.iter().enumerate() {
                if j != i {
                    denom *= zi - zj;
                }
            }
            if denom.norm() == 0.0 {
                continue;
            }
            let step = eval(&monic, zi) / denom;
            roots[i] = zi - step;
            moved = moved.max(step.norm() / zi.norm().max(1.0));
        }
        if moved < 1e-15 {
            break;
        }
    }
    for z in &mut roots {
        for _ in 0..3 {
            let d = deriv(&monic, *z);
            if d.norm() == 0.0 {
                break;
            }
            *z -= eval(&monic, *z) / d;
        }
    }
    roots
}

fn axis_roots<T: Scalar>(rho: &[Complex<T>]) -> Vec<f64> {
    let mut coeffs = vec![Complex::new(1.0, 0.0)];
    coeffs.extend(rho.iter().map(|r| -Complex::new(r.re.as_f64(), r.im.as_f64())));
    let mut moduli: Vec<f64> = polynomial_roots(&coeffs).iter().map(|z| z.norm()).collect();
    moduli.sort_by(f64::total_cmp);
    moduli
}

/// Per-axis AR stability: all roots of `1 − Σ ρ_i z^i` strictly outside the unit disk.
pub fn stability_report<T: Scalar>(model: &DisturbanceModel<T>) -> StabilityReport {
    let root_moduli_x = axis_roots(&model.rho_x);
    let root_moduli_y = axis_roots(&model.rho_y);
    let outside = |m: &[f64]| m.iter().all(|&r| r > 1.0);
    let mass: f64 = model
        .rho_x
        .iter()
        .chain(&model.rho_y)
        .map(|z| z.norm().as_f64())
        .sum();
    StabilityReport {
        stable_x: outside(&root_moduli_x),
        stable_y: outside(&root_moduli_y),
        root_moduli_x,
        root_moduli_y,
        joint_contractive: mass < 1.0,
    }
}
