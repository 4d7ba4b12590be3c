mod common;

use cogradar::agent::AgentConfig;
use cogradar::array::{steering_planar, ArrayGeometry, SpatialFrequency};
use cogradar::beamform::{beampattern, channel_vector, max_power_weights};
use cogradar::clutter::{coefficient, paper_model, stability_report};
use cogradar::detector::quad_form;
use cogradar::numerics::{chi2_threshold, marcum_q1, principal_eigenpair, Domain, HermitianMatrix, RngStream};
use num_complex::Complex64 as C;
use rand_distr::{Distribution, StandardNormal};

fn cn(rng: &mut RngStream) -> C {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C::new(re, im) / 2f64.sqrt()
}

#[test]
fn marcum_matches_poisson_mixture() {
    let mut worst = 0.0f64;
    for i in 0..20 {
        for j in 0..20 {
            let (a, b) = (i as f64 * 5.0 / 19.0, j as f64 * 5.0 / 19.0);
            let d = (marcum_q1(a, b).unwrap() - common::marcum_q1_poisson(a, b)).abs();
            worst = worst.max(d);
        }
    }
    assert!(worst <= 1e-10, "max deviation {worst:e}");
}

#[test]
fn marcum_far_tail_against_mixture() {
    for &(a, b) in &[(8.0, 3.0), (3.0, 8.0), (12.0, 12.5), (0.5, 9.0), (15.0, 14.0)] {
        let d = (marcum_q1(a, b).unwrap() - common::marcum_q1_poisson(a, b)).abs();
        assert!(d <= 1e-10, "({a}, {b}): {d:e}");
    }
}

#[test]
fn threshold_closed_form() {
    for p in [1e-5, 1e-3, 0.01, 0.5] {
        let d: f64 = chi2_threshold(p).unwrap();
        assert!((d + 2.0 * f64::ln(p)).abs() < 1e-12);
        // χ²₂ tail at the threshold is the false-alarm probability.
        assert!(((-d / 2.0).exp() - p).abs() < 1e-15);
    }
}

#[test]
fn eigenpair_matches_dense_solver() {
    let mut rng = RngStream::derive(21, Domain::Test, &[]);
    for (trial, n) in [2usize, 5, 16, 33, 64].into_iter().enumerate() {
        let vecs: Vec<Vec<C>> = (0..n / 2 + 2).map(|_| (0..n).map(|_| cn(&mut rng)).collect()).collect();
        let m = HermitianMatrix::gram_sum(n, vecs.iter().map(|v| v.as_slice())).unwrap();
        let (lam, v) = principal_eigenpair(&m, 1e-12, 100_000).unwrap();
        let (lam_ref, v_ref) = common::hermitian_top_eigen(&common::dense_from_entries(n, m.entries()));
        assert!((lam - lam_ref).abs() <= 1e-8 * lam_ref, "trial {trial}: {lam} vs {lam_ref}");
        let overlap: C = v.iter().zip(&v_ref).map(|(a, b)| a.conj() * b).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-8, "trial {trial}: |<v, v_ref>| = {}", overlap.norm());
    }
}

#[test]
fn quad_form_matches_dense_covariance() {
    let mut rng = RngStream::derive(22, Domain::Test, &[]);
    for n in [1usize, 4, 16, 64] {
        let h: Vec<C> = (0..n).map(|_| cn(&mut rng)).collect();
        let sec: Vec<Vec<C>> = (0..37).map(|_| (0..n).map(|_| cn(&mut rng) * 3.0).collect()).collect();
        for eps in [0.0, 0.25] {
            let a = quad_form(&h, &sec, eps).unwrap();
            let b = common::dense_quad_form(&h, &sec, eps);
            assert!((a - b).abs() <= 1e-10 * b.max(1.0), "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn planar_steering_matches_double_loop() {
    for side in 1..=4 {
        for &(x, y) in &[(0.0, 0.0), (0.25, -0.05), (-0.4, 0.35), (0.123, 0.456)] {
            let v = steering_planar(side, SpatialFrequency::new(x, y));
            let r = common::planar_steering_loops(side, x, y);
            assert_eq!(v.len(), r.len());
            for (a, b) in v.iter().zip(&r) {
                assert!((a - b).norm() < 1e-14, "side {side}");
            }
        }
    }
}

#[test]
fn channel_vector_norm_identity() {
    // ‖(Wᵀa_T) ⊗ a_R‖² = N_R · ‖Wᵀa_T‖².
    let g = ArrayGeometry::square(4, 3).unwrap();
    let f = SpatialFrequency::new(0.1, -0.3);
    let w = max_power_weights(&[f, SpatialFrequency::new(-0.2, 0.2)], &g, 1.0).unwrap();
    for &probe in &[f, SpatialFrequency::new(0.45, 0.0)] {
        let h = channel_vector(&w, probe, &g);
        let hn: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        assert!((hn - g.n_r() as f64 * beampattern(&w, probe, &g)).abs() < 1e-10);
    }
}

#[test]
fn ar_roots_match_companion_matrix() {
    let m = paper_model::<f64>();
    let rep = stability_report(&m);
    let oracle = common::companion_root_moduli(&m.rho_x);
    for (a, b) in rep.root_moduli_x.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
    assert!(!rep.stable_x && !rep.stable_y);
    let stable = vec![coefficient(0.5, 0.1), coefficient(0.2, 0.3)];
    let o = common::companion_root_moduli(&stable);
    assert!(o.iter().all(|&r| r > 1.0));
}

#[test]
fn sarsa_learns_toy_chain() {
    let optimal = common::value_iteration_policy(2, 2, common::toy_next, common::toy_reward, AgentConfig::default().gamma);
    assert_eq!(optimal, vec![1, 0]);
    for seed in 0..20 {
        let q = common::train_toy(seed, 10_000);
        assert_eq!(vec![q.greedy(0), q.greedy(1)], optimal, "seed {seed}");
    }
}
