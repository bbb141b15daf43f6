//! Monte Carlo checks that combine the sampling and transform modules. Gates
//! are 4 to 6 standard errors with fixed seeds.

use num_complex::Complex64;
use rkhs_transform::fourier::{
    mc_inner, oracle_covariance, oracle_moment, oracle_monomial_transform, semigroup_factor,
    transform_mc, PathFunctional,
};
use rkhs_transform::gaussian::{
    brownian_covariance, empirical_covariance, empirical_increment, empirical_moment, linspace,
    simulate_brownian, simulate_brownian_with, GaussianSampler, PathEnsemble, RngStream,
    SimOptions,
};
use rkhs_transform::kernel::gram;
use rkhs_transform::Kernel;

fn ensemble(seed: u64) -> PathEnsemble {
    simulate_brownian(&linspace(-2.0, 2.0, 9), 100_000, &RngStream::from_seed(seed)).unwrap()
}

#[test]
fn increment_stationarity() {
    let pe = ensemble(31);
    let g = pe.grid().to_vec();
    let pairs = [(0, 8), (1, 3), (2, 7), (4, 5), (0, 4), (3, 6), (5, 8), (1, 2), (6, 7), (2, 8)];
    for (i, j) in pairs {
        let e = empirical_increment(&pe, g[i], g[j]).unwrap();
        assert!(e.within((g[j] - g[i]).abs(), 4.0), "({}, {}): {e:?}", g[i], g[j]);
    }
}

#[test]
fn moment_ladder() {
    let pe = ensemble(32);
    for t in [-1.5, 1.0, 2.0] {
        for n in 1..=3 {
            let even = empirical_moment(&pe, t, 2 * n).unwrap();
            assert!(even.within(oracle_moment(n, t), 5.0), "t={t} n={n}: {even:?}");
            let odd = empirical_moment(&pe, t, 2 * n - 1).unwrap();
            assert!(odd.within(0.0, 5.0), "t={t} odd {n}: {odd:?}");
        }
    }
}

#[test]
fn cholesky_and_random_walk_agree() {
    let grid = [0.25, 0.5, 0.75, 1.0];
    let g = gram(&Kernel::BrownianMin, &grid).unwrap();
    let sampler = GaussianSampler::new(&g.entries, 1e-8).unwrap();
    let draws = sampler.sample_many(100_000, &RngStream::new(5, 1));
    let mut full = vec![0.0];
    full.extend(grid);
    let pe = simulate_brownian(&full, 100_000, &RngStream::new(5, 2)).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let a = rkhs_transform::gaussian::sample_covariance(&draws, i, j);
            let b = empirical_covariance(&pe, grid[i], grid[j]).unwrap();
            let combined = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
            assert!((a.mean - b.mean).abs() <= 6.0 * combined);
            assert!(b.within(brownian_covariance(grid[i], grid[j]), 4.0));
        }
    }
}

#[test]
fn ensembles_are_bitwise_reproducible() {
    let grid = linspace(-1.0, 1.0, 11);
    let r = RngStream::new(2024, 7);
    let a = simulate_brownian_with(&grid, 1001, &r, SimOptions { shards: 1, antithetic: false })
        .unwrap();
    let b = simulate_brownian_with(&grid, 1001, &r, SimOptions { shards: 7, antithetic: false })
        .unwrap();
    let mut bytes_a = Vec::new();
    let mut bytes_b = Vec::new();
    a.write_to(&mut bytes_a).unwrap();
    b.write_to(&mut bytes_b).unwrap();
    assert_eq!(bytes_a, bytes_b);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("paths.bin");
    a.save(&path).unwrap();
    assert_eq!(PathEnsemble::load(&path).unwrap(), a);
}

#[test]
fn fourier_isometry_on_a_time_grid() {
    let pe = ensemble(33);
    let times = [-1.5, -0.5, 0.0, 1.0, 2.0];
    for &s in &times {
        for &t in &times {
            let e = mc_inner(&pe, s, t).unwrap();
            assert!(e.within(Complex64::new(oracle_covariance(s, t), 0.0), 4.0), "({s},{t}): {e:?}");
            if s == t {
                assert_eq!(e.value(), Complex64::new(1.0, 0.0));
            }
        }
    }
}

#[test]
fn monomial_transforms_match_closed_form() {
    let grid = linspace(0.0, 2.0, 9);
    let pe = simulate_brownian(&grid, 100_000, &RngStream::from_seed(34)).unwrap();
    for n in 0..=4 {
        for s in [0.5, 1.0] {
            let f = PathFunctional::monomial(s, n);
            for t in [1.5, 2.0] {
                let est = transform_mc(&pe, &f, &[t]).unwrap();
                let oracle = oracle_monomial_transform(n, s, t).unwrap();
                assert!(est.estimates[0].within(oracle, 5.0), "n={n} s={s} t={t}");
            }
        }
    }
}

#[test]
fn semigroup_for_adapted_functionals() {
    let grid = linspace(0.0, 2.0, 9);
    let pe = simulate_brownian(&grid, 100_000, &RngStream::from_seed(35)).unwrap();
    let path_max = PathFunctional::custom("running-max-to-1", Some(1.0), |g, p| {
        let m = g.iter().zip(p).filter(|(t, _)| **t <= 1.0).map(|(_, x)| *x).fold(0.0, f64::max);
        Complex64::new(m, 0.0)
    });
    for f in [PathFunctional::monomial(1.0, 1), PathFunctional::monomial(0.5, 3), path_max] {
        let s = f.adapted_to.unwrap().max(1.0);
        let at_s = transform_mc(&pe, &f, &[s]).unwrap().estimates[0];
        for t in [1.5, 2.0] {
            let at_t = transform_mc(&pe, &f, &[t]).unwrap().estimates[0];
            let pred = semigroup_factor(at_s.value(), s, t, &f).unwrap();
            let combined = at_t.stderr() + (-0.5 * (t - s)).exp() * at_s.stderr();
            assert!((pred - at_t.value()).norm() <= 6.0 * combined, "{f:?} t={t}");
        }
    }
}
