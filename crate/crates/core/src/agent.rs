//! Tabular SARSA over (detection count, number of bins to illuminate).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::detector::DetectionMap;
use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::scalar::Scalar;

/// Floor of the optional linear exploration schedule.
pub const EPSILON_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    /// Learning rate in (0, 1].
    pub alpha: f64,
    /// Discount factor in [0, 1).
    pub gamma: f64,
    /// Exploration probability in [0, 1].
    pub epsilon: f64,
    /// Largest state/action index `M`.
    pub m_max: usize,
    /// Decay ε linearly to [`EPSILON_FLOOR`] over the episode.
    pub epsilon_decay: bool,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            gamma: 0.8,
            epsilon: 0.1,
            m_max: 10,
            epsilon_decay: false,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::domain(format!("learning rate must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return Err(Error::domain(format!("discount must lie in [0, 1), got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::domain(format!("epsilon must lie in [0, 1], got {}", self.epsilon)));
        }
        if self.m_max == 0 {
            return Err(Error::domain("m_max must be at least 1"));
        }
        Ok(())
    }

    /// Exploration probability at `step` of `steps` (0-based).
    pub fn epsilon_at(&self, step: usize, steps: usize) -> f64 {
        if !self.epsilon_decay || steps <= 1 || self.epsilon <= EPSILON_FLOOR {
            return self.epsilon;
        }
        let frac = step.min(steps - 1) as f64 / (steps - 1) as f64;
        self.epsilon + (EPSILON_FLOOR - self.epsilon) * frac
    }
}

/// `(M+1) × (M+1)` action values, row = state, column = action.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable<T> {
    m_max: usize,
    q: Vec<T>,
}

impl<T: Scalar> QTable<T> {
    pub fn zeros(m_max: usize) -> Self {
        Self {
            m_max,
            q: vec![T::zero(); (m_max + 1) * (m_max + 1)],
        }
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn get(&self, s: usize, a: usize) -> T {
        self.q[s * (self.m_max + 1) + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: T) {
        let m = self.m_max;
        self.q[s * (m + 1) + a] = v;
    }

    pub fn row(&self, s: usize) -> &[T] {
        let m = self.m_max + 1;
        &self.q[s * m..(s + 1) * m]
    }

    /// Greedy action in state `s`, lowest index on ties.
    pub fn greedy(&self, s: usize) -> usize {
        let row = self.row(s);
        let mut best = 0;
        for (a, v) in row.iter().enumerate().skip(1) {
            if *v > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn values(&self) -> &[T] {
        &self.q
    }
}

/// Number of bins that fired, saturated at `m_max`.
pub fn observe_state<T: Scalar>(map: &DetectionMap<T>, m_max: usize) -> usize {
    map.detections().min(m_max)
}

/// ε-greedy choice; one uniform draw decides exploration, a second picks the
/// random action when exploring.
pub fn select_action<T: Scalar>(q: &QTable<T>, s: usize, epsilon: f64, rng: &mut RngStream) -> usize {
    let u: f64 = rng.random();
    if u < epsilon {
        rng.random_range(0..=q.m_max)
    } else {
        q.greedy(s)
    }
}

/// Indices of the `m` largest Wald statistics, ties in row-major bin order.
pub fn top_m_bins<T: Scalar>(map: &DetectionMap<T>, m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..map.len()).collect();
    idx.sort_by(|&a, &b| {
        map.records[b]
            .lambda
            .partial_cmp(&map.records[a].lambda)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.truncate(m.min(map.len()));
    idx
}

/// `Σ_{selected} P̂_D − Σ_{others} P̂_D` over the whole grid.
pub fn reward<T: Scalar>(map: &DetectionMap<T>, selected: &[usize]) -> T {
    let mut chosen = vec![false; map.len()];
    for &b in selected {
        chosen[b] = true;
    }
    map.records
        .iter()
        .zip(&chosen)
        .map(|(r, &c)| if c { r.pd_hat } else { -r.pd_hat })
        .sum()
}

/// `Q(s,a) ← Q(s,a) + α·(r + γ·Q(s′,a′) − Q(s,a))`.
pub fn sarsa_update<T: Scalar>(
    q: &mut QTable<T>,
    s: usize,
    a: usize,
    r: T,
    s_next: usize,
    a_next: usize,
    cfg: &AgentConfig,
) {
    let (alpha, gamma) = (T::lit(cfg.alpha), T::lit(cfg.gamma));
    let cur = q.get(s, a);
    let target = r + gamma * q.get(s_next, a_next);
    q.set(s, a, cur + alpha * (target - cur));
}
