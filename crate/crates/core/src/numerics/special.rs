//! Marcum Q function and the χ²₂ threshold.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Beyond this separation between `a` and `b` the result is 0 or 1 to well below
/// the smallest positive double (`Q₁ ≤ exp(−(b−a)²/2)` for `b > a`, and the
/// mirrored bound for `a > b`).
const SEPARATION_CUTOFF: f64 = 40.0;

/// Exponentially scaled modified Bessel functions `I_k(x)·e^{−x}` for `k = 0..=kmax`.
///
/// Miller's backward recurrence `I_{k−1} = I_{k+1} + (2k/x)·I_k`, normalized with
/// `I₀ + 2·Σ_{k≥1} I_k = e^x`. The start index sits far enough above `kmax` that the
/// contamination from the arbitrary starting values is below rounding.
pub(crate) fn scaled_bessel_i<T: Scalar>(x: T, kmax: usize) -> Vec<T> {
    debug_assert!(x > T::zero());
    let start = (2 * kmax).max(kmax + (40.0 * kmax as f64).sqrt() as usize) + 16;
    let big = T::max_value().sqrt();
    let inv_big = big.recip();
    let two_over_x = T::lit(2.0) / x;

    let mut out = vec![T::zero(); kmax + 1];
    let mut next = T::zero(); // I_{k+1}
    let mut cur = T::one(); // I_k
    let mut norm = T::zero();
    for k in (1..=start).rev() {
        if k <= kmax {
            out[k] = cur;
        }
        norm += cur + cur;
        let prev = next + T::lit(k as f64) * two_over_x * cur;
        next = cur;
        cur = prev;
        if cur > big {
            cur = cur * inv_big;
            next = next * inv_big;
            norm = norm * inv_big;
            for v in out.iter_mut().skip(k.min(kmax + 1)) {
                *v = *v * inv_big;
            }
        }
    }
    out[0] = cur;
    norm += cur;
    let scale = norm.recip();
    for v in &mut out {
        *v = *v * scale;
    }
    out
}

/// First-order Marcum Q function `Q₁(a, b)`.
///
/// Evaluated from the Bessel series
/// `Q₁(a,b) = e^{−(a²+b²)/2} Σ_{k≥0} (a/b)^k I_k(ab)` when `a < b`, and from its
/// complement `1 − e^{−(a²+b²)/2} Σ_{k≥1} (b/a)^k I_k(ab)` when `a ≥ b`, so the
/// ratio raised to `k` never exceeds one. The Gaussian prefactor is folded into
/// exponentially scaled Bessel values, which keeps every term finite for any `ab`.
pub fn marcum_q1<T: Scalar>(a: T, b: T) -> Result<T> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::domain(format!("marcum_q1 needs finite arguments, got ({a}, {b})")));
    }
    if a < T::zero() || b < T::zero() {
        return Err(Error::domain(format!("marcum_q1 needs nonnegative arguments, got ({a}, {b})")));
    }
    let half = T::lit(0.5);
    if b == T::zero() {
        return Ok(T::one());
    }
    if a == T::zero() {
        return Ok((-half * b * b).exp());
    }
    let gap = b - a;
    let cutoff = T::lit(SEPARATION_CUTOFF);
    if gap > cutoff {
        return Ok(T::zero());
    }
    if -gap > cutoff {
        return Ok(T::one());
    }

    let x = a * b;
    let lower_branch = a < b;
    let ratio = if lower_branch { a / b } else { b / a };
    let pref = (-half * gap * gap).exp();

    if x < T::min_positive_value().sqrt() {
        // I₀ ≈ 1, I₁ ≈ x/2, higher orders vanish at this precision.
        let i0 = (-x).exp();
        let i1 = half * x * i0;
        let q = if lower_branch {
            pref * (i0 + ratio * i1)
        } else {
            T::one() - pref * ratio * i1
        };
        return Ok(q.max(T::zero()).min(T::one()));
    }

    // Orders past which terms fall below 1e-18 of the leading one, from the
    // Gaussian decay of I_k/I₀ ~ exp(−k²/2x) and the geometric factor ratio^k.
    let by_bessel = 9.1 * x.as_f64().sqrt() + 30.0;
    let by_ratio = if ratio < T::one() {
        41.5 / -ratio.as_f64().ln() + 30.0
    } else {
        f64::INFINITY
    };
    let kmax = by_bessel.min(by_ratio).ceil() as usize;
    let scaled = scaled_bessel_i(x, kmax);

    let eps = T::epsilon() * T::lit(0.25);
    let first = if lower_branch { 0 } else { 1 };
    let mut pow = if lower_branch { T::one() } else { ratio };
    let mut sum = T::zero();
    for k in first..=kmax {
        let term = pow * scaled[k];
        sum += term;
        if k + 1 > kmax || scaled[k] == T::zero() {
            break;
        }
        // Successive-term ratios only shrink with k, so the tail is bounded by a
        // geometric series with the current ratio.
        let rho = ratio * scaled[k + 1] / scaled[k];
        if rho < T::one() && term * rho <= eps * sum * (T::one() - rho) {
            break;
        }
        pow = pow * ratio;
    }

    let q = if lower_branch {
        pref * sum
    } else {
        T::one() - pref * sum
    };
    Ok(q.max(T::zero()).min(T::one()))
}

/// Detection threshold `δ = H⁻¹_{χ²₂}(1 − p_fa) = −2·ln(p_fa)`.
pub fn chi2_threshold<T: Scalar>(p_fa: T) -> Result<T> {
    if !(p_fa > T::zero() && p_fa <= T::one()) {
        return Err(Error::domain(format!("false-alarm probability must lie in (0, 1], got {p_fa}")));
    }
    Ok(-T::lit(2.0) * p_fa.ln())
}
