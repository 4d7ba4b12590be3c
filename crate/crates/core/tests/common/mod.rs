//! Independent reference computations for the integration tests.
#![allow(dead_code)]

use cogradar::agent::{sarsa_update, select_action, AgentConfig, QTable};
use cogradar::numerics::{Domain, RngStream};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use num_complex::Complex64 as C;

/// Q₁(a, b) from the Poisson mixture of central chi-square tails:
/// `Σ_n Pois(n; a²/2) · P(χ²_{2(n+1)} > b²)`.
pub fn marcum_q1_poisson(a: f64, b: f64) -> f64 {
    let lam = a * a / 2.0;
    let x = b * b / 2.0;
    // P(χ²_{2(n+1)} > 2x) = e^{-x} Σ_{m=0}^{n} x^m/m!
    let mut tail_term = (-x).exp();
    let mut tail = tail_term;
    let mut pois = (-lam).exp();
    let mut total = pois * tail;
    for n in 1..400 {
        pois *= lam / n as f64;
        tail_term *= x / n as f64;
        tail += tail_term;
        total += pois * tail.min(1.0);
        if pois < 1e-300 && n as f64 > lam {
            break;
        }
    }
    total.min(1.0)
}

pub fn dense_from_entries(n: usize, entries: &[C]) -> DMatrix<C> {
    DMatrix::from_row_slice(n, n, entries)
}

/// Largest eigenvalue and its unit eigenvector of a Hermitian matrix, from the real
/// symmetric embedding `[[Re, −Im], [Im, Re]]`.
pub fn hermitian_top_eigen(m: &DMatrix<C>) -> (f64, Vec<C>) {
    let n = m.nrows();
    let mut r = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            r[(i, j)] = z.re;
            r[(i, j + n)] = -z.im;
            r[(i + n, j)] = z.im;
            r[(i + n, j + n)] = z.re;
        }
    }
    let eig = nalgebra::SymmetricEigen::new(r);
    let (k, &lam) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let col = eig.eigenvectors.column(k);
    let v: Vec<C> = (0..n).map(|i| C::new(col[i], col[i + n])).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    (lam, v.into_iter().map(|z| z / norm).collect())
}

/// `hᴴ Γ h` with `Γ = (1/K)Σ c cᴴ + εI` formed densely.
pub fn dense_quad_form(h: &[C], secondary: &[Vec<C>], loading: f64) -> f64 {
    let n = h.len();
    let mut g = DMatrix::<C>::identity(n, n) * C::new(loading, 0.0);
    let k = secondary.len().max(1) as f64;
    for c in secondary {
        let mut v = DVector::<C>::zeros(n);
        for (i, z) in c.iter().enumerate() {
            v[i] = *z;
        }
        g += &v * v.adjoint() / C::new(k, 0.0);
    }
    let hv = DVector::from_column_slice(h);
    (hv.adjoint() * g * hv)[(0, 0)].re
}

/// `exp(j2π·ν·k)` for each planar element by explicit double loop, `x` outer.
pub fn planar_steering_loops(side: usize, nu_x: f64, nu_y: f64) -> Vec<C> {
    let mut v = Vec::with_capacity(side * side);
    for x in 0..side {
        for y in 0..side {
            let ph = std::f64::consts::TAU * (nu_x * x as f64 + nu_y * y as f64);
            v.push(C::new(ph.cos(), ph.sin()));
        }
    }
    v
}

/// Moduli of the roots of `1 − Σ ρ_i z^i` from the companion matrix eigenvalues.
pub fn companion_root_moduli(rho: &[C]) -> Vec<f64> {
    let p = rho.len();
    // Roots of 1 − Σρ_i z^i are reciprocals of the roots of w^p − Σ ρ_i w^{p−i}.
    let mut comp = DMatrix::<C>::zeros(p, p);
    for i in 0..p {
        comp[(0, i)] = rho[i];
    }
    for i in 1..p {
        comp[(i, i - 1)] = C::new(1.0, 0.0);
    }
    let eig = comp.schur().eigenvalues().expect("complex Schur form is triangular");
    let mut m: Vec<f64> = eig.iter().map(|w| 1.0 / w.norm()).collect();
    m.sort_by(|a, b| a.partial_cmp(b).unwrap());
    m
}

/// Optimal policy of a finite deterministic MDP by value iteration.
pub fn value_iteration_policy(
    states: usize,
    actions: usize,
    next: impl Fn(usize, usize) -> usize,
    reward: impl Fn(usize, usize) -> f64,
    gamma: f64,
) -> Vec<usize> {
    let mut v = vec![0.0; states];
    for _ in 0..10_000 {
        let nv: Vec<f64> = (0..states)
            .map(|s| {
                (0..actions)
                    .map(|a| reward(s, a) + gamma * v[next(s, a)])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let delta = nv.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = nv;
        if delta < 1e-14 {
            break;
        }
    }
    (0..states)
        .map(|s| {
            (0..actions)
                .max_by(|&a, &b| {
                    let qa = reward(s, a) + gamma * v[next(s, a)];
                    let qb = reward(s, b) + gamma * v[next(s, b)];
                    qa.partial_cmp(&qb).unwrap()
                })
                .unwrap()
        })
        .collect()
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(|p, q| p.partial_cmp(q).unwrap());
    y.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / x.len() as f64 - j as f64 / y.len() as f64).abs());
    }
    d
}

/// One-sample KS distance against a continuous CDF.
pub fn ks_against(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut x = sample.to_vec();
    x.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two states, two actions; action `a` moves to state `a`, and switching state pays 1.
pub fn toy_next(_s: usize, a: usize) -> usize {
    a
}

pub fn toy_reward(s: usize, a: usize) -> f64 {
    if s != a {
        1.0
    } else {
        0.0
    }
}

/// SARSA with default parameters on the toy chain, from a seeded random start.
pub fn train_toy(seed: u64, steps: usize) -> QTable<f64> {
    let cfg = AgentConfig {
        m_max: 1,
        ..AgentConfig::default()
    };
    let mut rng = RngStream::derive(seed, Domain::Test, &[]);
    let mut q = QTable::zeros(1);
    let mut s = rng.random_range(0..2);
    let mut a = select_action(&q, s, cfg.epsilon, &mut rng);
    for _ in 0..steps {
        let (s2, r) = (toy_next(s, a), toy_reward(s, a));
        let a2 = select_action(&q, s2, cfg.epsilon, &mut rng);
        sarsa_update(&mut q, s, a, r, s2, a2, &cfg);
        s = s2;
        a = a2;
    }
    q
}
