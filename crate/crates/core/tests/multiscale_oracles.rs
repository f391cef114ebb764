//! Slow-path and exact-Gaussian oracles for the multiscale decomposition.

mod common;

use glx_core::harmonic;
use glx_core::lattice::{Domain, Field, Site};
use glx_core::multiscale::{self, EventParams, ScaleSchedule};
use glx_core::rng::{stream, CounterRng};
use glx_core::sampler;
use glx_core::stats;

/// Fast smoothed average vs an independent slow path that runs a separate
/// Dirichlet solve per radius (no kernels, no caches).
#[test]
fn smoothed_average_matches_dirichlet_slow_path() {
    let n_box = 128;
    let domain = Domain::make_box(n_box, Site::new(0, 0)).unwrap();
    let bc = Field::zeros(domain);
    let mut rng = CounterRng::root(0x51).substream(&[stream::DGFF, 0]);
    let snap = sampler::sample_dgff_exact(domain, &bc, &mut rng).unwrap();
    let schedule = ScaleSchedule::new(n_box, 0.5, 1, 3).unwrap();
    let x = Site::new(3, -4);
    let k = 2;
    for plus in [true, false] {
        let fast = multiscale::smoothed_average(&snap, x, k, plus, &schedule).unwrap();
        // Slow path.
        let rho = schedule.smoothing_width(k);
        let center = if plus {
            schedule.r_plus(k)
        } else {
            schedule.r_minus(k)
        };
        let lo = (center - rho).ceil() as i32;
        let hi = (center + rho).floor() as i32;
        let mut num = 0.0;
        let mut den = 0.0;
        for r in lo..=hi {
            let w = multiscale::bump((r as f64 - center) / rho) / rho;
            if w == 0.0 {
                continue;
            }
            let sub = domain.subbox(x, r).unwrap();
            let bvals: Vec<f64> = sub.boundary_sites().map(|s| snap.get(s)).collect();
            let solved = harmonic::solve_dirichlet(sub, &bvals).unwrap();
            num += w * solved.get(x);
            den += w;
        }
        let slow = num / den;
        assert!(
            (fast - slow).abs() < 1e-9,
            "plus={plus}: fast {fast:.12} vs slow {slow:.12}"
        );
    }
}

/// Monte Carlo increment variances match the exact quadratic form
/// `w^T (4I-A)^{-1} w` of the increment functional on exact DGFF snapshots.
#[test]
fn increment_variance_matches_exact_quadratic_form() {
    let n_box = 128;
    let omega = 0.5;
    let domain = Domain::make_box(n_box, Site::new(0, 0)).unwrap();
    let x = Site::new(0, 0);
    let schedule = ScaleSchedule::new(n_box, omega, 1, 3).unwrap();

    // Exact variance of I_1 = S_{2,+} - S_{1,-} under covariance (4I-A)^{-1}.
    let wp = multiscale::smoothed_average_functional(x, 2, true, &schedule).unwrap();
    let wm = multiscale::smoothed_average_functional(x, 1, false, &schedule).unwrap();
    let mut w: std::collections::HashMap<(i32, i32), f64> = std::collections::HashMap::new();
    for (s, v) in wp {
        *w.entry((s.x, s.y)).or_insert(0.0) += v;
    }
    for (s, v) in wm {
        *w.entry((s.x, s.y)).or_insert(0.0) -= v;
    }
    let idx = common::FastInteriorIndex::new(domain);
    let mut gv = vec![0.0; idx.sites.len()];
    for (&(sx, sy), &v) in &w {
        let i = idx.index(Site::new(sx, sy)).expect("functional site interior");
        gv[i] += v;
    }
    let sol = common::cg_neg_lap5(domain, &gv, 1e-12);
    let var_exact: f64 = gv.iter().zip(&sol).map(|(a, b)| a * b).sum();

    // Monte Carlo against the decomposition path.
    let bc = Field::zeros(domain);
    let root = CounterRng::root(0x77);
    let n = 3000;
    let params = EventParams::default();
    let mut xs = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = root.substream(&[stream::DGFF, 1, i as u64]);
        let snap = sampler::sample_dgff_exact(domain, &bc, &mut rng).unwrap();
        let dec = multiscale::decompose(&snap, x, 1, 2, omega, &params).unwrap();
        xs.push(dec.increment_at(1));
    }
    let got = stats::variance(&xs);
    let se = got * (2.0 / (n as f64 - 1.0)).sqrt();
    assert!(
        (got - var_exact).abs() < 3.5 * se,
        "Var(I_1): MC {got:.5} vs exact {var_exact:.5} (se {se:.5})"
    );
}

/// Gauss-Markov property: increments at distinct scales of the exact Gaussian
/// field are uncorrelated; the exact quadratic form vanishes.
#[test]
fn increments_uncorrelated_gaussian_exact() {
    let n_box = 256;
    let omega = 0.5;
    let domain = Domain::make_box(n_box, Site::new(0, 0)).unwrap();
    let x = Site::new(0, 0);
    let schedule = ScaleSchedule::new(n_box, omega, 1, 4).unwrap();
    let functional = |k: i32| {
        let wp = multiscale::smoothed_average_functional(x, k + 1, true, &schedule).unwrap();
        let wm = multiscale::smoothed_average_functional(x, k, false, &schedule).unwrap();
        let mut w: std::collections::HashMap<(i32, i32), f64> = std::collections::HashMap::new();
        for (s, v) in wp {
            *w.entry((s.x, s.y)).or_insert(0.0) += v;
        }
        for (s, v) in wm {
            *w.entry((s.x, s.y)).or_insert(0.0) -= v;
        }
        w
    };
    let idx = common::FastInteriorIndex::new(domain);
    let to_vec = |w: &std::collections::HashMap<(i32, i32), f64>| {
        let mut gv = vec![0.0; idx.sites.len()];
        for (&(sx, sy), &v) in w {
            gv[idx.index(Site::new(sx, sy)).unwrap()] += v;
        }
        gv
    };
    let w1 = to_vec(&functional(1));
    let w2 = to_vec(&functional(2));
    let w3 = to_vec(&functional(3));
    let sol1 = common::cg_neg_lap5(domain, &w1, 1e-12);
    let var1: f64 = w1.iter().zip(&sol1).map(|(a, b)| a * b).sum();
    for (name, wo) in [("I_2", &w2), ("I_3", &w3)] {
        let cross: f64 = wo.iter().zip(&sol1).map(|(a, b)| a * b).sum();
        let solo = common::cg_neg_lap5(domain, wo, 1e-12);
        let varo: f64 = wo.iter().zip(&solo).map(|(a, b)| a * b).sum();
        let corr = cross / (var1 * varo).sqrt();
        assert!(
            corr.abs() < 1e-8,
            "Corr(I_1, {name}) = {corr:.2e} should vanish"
        );
    }
}

/// Good-event frequencies on exact DGFF snapshots: rough failures are rare
/// and boundary-layer failures decrease as the scale grows.
#[test]
fn event_failure_frequencies() {
    let n_box = 128;
    let omega = 0.5;
    let domain = Domain::make_box(n_box, Site::new(0, 0)).unwrap();
    let bc = Field::zeros(domain);
    let root = CounterRng::root(0x33);
    let params = EventParams::default();
    let n = 1500;
    let mut rough_fail = [0usize; 3];
    let mut bdry_fail = [0usize; 3];
    for i in 0..n {
        let mut rng = root.substream(&[stream::DGFF, 3, i as u64]);
        let snap = sampler::sample_dgff_exact(domain, &bc, &mut rng).unwrap();
        let dec = multiscale::decompose(&snap, Site::new(0, 0), 1, 3, omega, &params).unwrap();
        for (j, k) in (1..=3).enumerate() {
            if !dec.rough_flags[j] {
                rough_fail[j] += 1;
            }
            if !multiscale::event_boundary_layer(
                &dec,
                k,
                &ScaleSchedule::new(n_box, omega, 1, 4).unwrap(),
                &params,
            ) {
                bdry_fail[j] += 1;
            }
        }
    }
    // Rough events: overwhelmingly good at every tested scale.
    for (j, &c) in rough_fail.iter().enumerate() {
        assert!(
            (c as f64 / n as f64) <= 1e-3,
            "rough failure at index {j}: {c}/{n}"
        );
    }
    // Boundary-layer failures decrease with the radius (larger r_k = smaller k).
    assert!(
        bdry_fail[0] <= bdry_fail[1] + 8 && bdry_fail[1] <= bdry_fail[2] + 8,
        "bdry failures not decreasing in r_k: {bdry_fail:?}"
    );
}
