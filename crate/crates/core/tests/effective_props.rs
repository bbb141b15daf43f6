use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rkhs_transform::effective::{kaczmarz_solve, ProjectionSequence, Schedule};
use rkhs_transform::linalg::norm_sq;

fn random_sequence(seed: u64, dim: usize, ranks: &[usize], schedule: Schedule) -> ProjectionSequence {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ProjectionSequence::random(dim, ranks, schedule, &mut rng).unwrap()
}

fn sequence_strategy() -> impl Strategy<Value = (ProjectionSequence, Vec<f64>)> {
    (1usize..9, any::<u64>(), prop::bool::ANY).prop_flat_map(|(dim, seed, cyclic)| {
        let ranks = prop::collection::vec(1..=dim, 1..6);
        let x = prop::collection::vec(-5.0..5.0f64, dim);
        (ranks, x).prop_map(move |(ranks, x)| {
            let schedule = if cyclic { Schedule::Cyclic } else { Schedule::Finite };
            (random_sequence(seed, dim, &ranks, schedule), x)
        })
    })
}

/// Rotation by a random orthogonal matrix from a QR factorization.
fn random_orthogonal(dim: usize, seed: u64) -> DMatrix<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut rng));
    a.qr().q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_identity((ps, x) in sequence_strategy(), n in 0usize..80) {
        let led = ps.energy_ledger(&x, n).unwrap();
        prop_assert!(led.max_residual() <= 1e-10 * norm_sq(&x).max(1e-300));
    }

    #[test]
    fn defect_norms_never_increase((ps, x) in sequence_strategy()) {
        let led = ps.energy_ledger(&x, 60).unwrap();
        let eps = 1e-12 * norm_sq(&x);
        for w in led.defect_norms.windows(2) {
            prop_assert!(w[1] <= w[0] + eps);
        }
    }

    #[test]
    fn synthesis_inverts_analysis_when_effective(seed in any::<u64>(), dim in 1usize..6, x in prop::collection::vec(-3.0..3.0f64, 6)) {
        let ps = ProjectionSequence::coordinate(dim, Schedule::Finite);
        let x = &x[..dim];
        let xi = ps.analysis(x, dim + 2).unwrap();
        let back = ps.synthesis(&xi).unwrap();
        for (a, b) in back.iter().zip(x) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let ps = random_sequence(seed, dim, &[dim], Schedule::Finite);
        let back = ps.synthesis(&ps.analysis(x, 3).unwrap()).unwrap();
        for (a, b) in back.iter().zip(x) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn effectiveness_matches_parseval(seed in any::<u64>(), dim in 2usize..6, drop in prop::bool::ANY) {
        // spanning rank-1 projections cycle to zero; dropping a direction
        // leaves a fixed subspace the sequence never reaches
        let ranks: Vec<usize> = if drop { vec![1; dim - 1] } else { vec![1; dim + 1] };
        let ps = random_sequence(seed, dim, &ranks, Schedule::Cyclic);
        let horizon = 4000;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        use rand_distr::{Distribution, StandardNormal};
        let trials: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let tol = 1e-12;
        let eff = ps.is_effective(&trials, tol, horizon).unwrap().effective;
        let parseval = ps.parseval_holds(&trials, tol, horizon).unwrap();
        prop_assert_eq!(eff, parseval);
        if drop {
            prop_assert!(!eff);
        }
    }

    #[test]
    fn conjugation_preserves_ledgers((ps, x) in sequence_strategy(), seed in any::<u64>()) {
        let u = random_orthogonal(ps.dim(), seed);
        let conj = ps.conjugate(&u).unwrap();
        let ux: Vec<f64> = (&u * DMatrix::from_column_slice(ps.dim(), 1, &x)).iter().copied().collect();
        let a = ps.energy_ledger(&x, 30).unwrap();
        let b = conj.energy_ledger(&ux, 30).unwrap();
        for (p, q) in a.defect_norms.iter().zip(&b.defect_norms) {
            prop_assert!((p - q).abs() <= 1e-10 * (1.0 + p.abs()));
        }
        for (p, q) in a.q_norms.iter().zip(&b.q_norms) {
            prop_assert!((p - q).abs() <= 1e-10 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn kaczmarz_equals_defect_walk(seed in any::<u64>(), dim in 1usize..7, sweeps in 1usize..20) {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..dim + 1)
            .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let x0: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let spans: Vec<Vec<Vec<f64>>> = rows.iter().map(|r| vec![r.clone()]).collect();
        let ps = ProjectionSequence::from_spans(dim, &spans, Schedule::Cyclic).unwrap();
        let n = sweeps * rows.len() - 1;
        let walk = ps.apply_defect(&x0, n).unwrap();
        let kz = kaczmarz_solve(&rows, &vec![0.0; rows.len()], &x0, sweeps).unwrap();
        prop_assert_eq!(walk, kz);
    }
}

#[test]
fn kaczmarz_converges_on_consistent_system() {
    let rows = vec![vec![2.0, 1.0, 0.0], vec![0.0, 1.0, -1.0], vec![1.0, 0.0, 3.0]];
    let sol = [1.0, -2.0, 0.5];
    let rhs: Vec<f64> = rows.iter().map(|r| r.iter().zip(&sol).map(|(a, b)| a * b).sum()).collect();
    let x = kaczmarz_solve(&rows, &rhs, &[0.0; 3], 500).unwrap();
    for (a, b) in x.iter().zip(&sol) {
        assert!((a - b).abs() < 1e-10);
    }
}
