use iwdro::lpsolver::{solve_lp, LinearProgram, LpStatus};
use iwdro::wasserstein::{
    intersection_nonempty, transport_cost_lp, wasserstein_distance, DiscreteDistribution, WassersteinBall,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scalar(values: &[f64], weights: &[f64]) -> DiscreteDistribution {
    DiscreteDistribution::from_scalars(values, weights.to_vec()).unwrap()
}

fn random_dist(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DiscreteDistribution {
    let supports: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    DiscreteDistribution::new(supports, raw.iter().map(|w| w / s).collect()).unwrap()
}

/// `max Σ a_i f_i + Σ b_j g_j  s.t.  f_i + g_j ≤ C_ij`, solved as an LP.
fn kantorovich_dual(mu: &DiscreteDistribution, nu: &DiscreteDistribution, p: i32) -> f64 {
    let (n1, n2) = (mu.len(), nu.len());
    let mut lp = LinearProgram::new(n1 + n2);
    for i in 0..n1 {
        lp.objective[i] = -mu.weights()[i];
        lp.set_free(i);
    }
    for j in 0..n2 {
        lp.objective[n1 + j] = -nu.weights()[j];
        lp.set_free(n1 + j);
    }
    for i in 0..n1 {
        for j in 0..n2 {
            let c: f64 = mu.supports()[i].iter().zip(&nu.supports()[j]).map(|(a, b)| (a - b).abs()).sum();
            lp.add_ub(&[(i, 1.0), (n1 + j, 1.0)], c.powi(p));
        }
    }
    let s = solve_lp(&lp).unwrap();
    assert_eq!(s.status, LpStatus::Optimal);
    -s.objective_value
}

#[test]
fn distance_to_itself_is_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for d in 1..=3 {
        let mu = random_dist(&mut rng, 5, d);
        for p in 1..=3 {
            assert!(wasserstein_distance(&mu, &mu, p).unwrap().abs() < 1e-9);
        }
    }
}

#[test]
fn point_masses() {
    let a = scalar(&[0.0], &[1.0]);
    let b = scalar(&[3.0], &[1.0]);
    assert!((wasserstein_distance(&a, &b, 1).unwrap() - 3.0).abs() < 1e-12);
    assert!((transport_cost_lp(&a, &b, 1).unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn two_point_versus_midpoint() {
    let mu = scalar(&[0.0, 2.0], &[0.5, 0.5]);
    let nu = scalar(&[1.0], &[1.0]);
    // Every unit of mass travels distance 1, whatever p is.
    for p in [1, 2] {
        assert!((wasserstein_distance(&mu, &nu, p).unwrap() - 1.0).abs() < 1e-12);
        assert!((transport_cost_lp(&mu, &nu, p).unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn l1_ground_metric_in_two_dimensions() {
    let a = DiscreteDistribution::dirac(vec![0.0, 0.0]).unwrap();
    let b = DiscreteDistribution::dirac(vec![1.0, -2.0]).unwrap();
    assert!((wasserstein_distance(&a, &b, 1).unwrap() - 3.0).abs() < 1e-9);
    assert!((wasserstein_distance(&a, &b, 2).unwrap() - 3.0).abs() < 1e-9);
}

#[test]
fn invalid_distributions_rejected() {
    assert!(DiscreteDistribution::from_scalars(&[0.0, 1.0], vec![0.5, 0.6]).is_err());
    assert!(DiscreteDistribution::from_scalars(&[0.0, 1.0], vec![1.5, -0.5]).is_err());
    assert!(DiscreteDistribution::new(vec![], vec![]).is_err());
    assert!(DiscreteDistribution::new(vec![vec![0.0], vec![0.0, 1.0]], vec![0.5, 0.5]).is_err());
    let a = scalar(&[0.0], &[1.0]);
    let b = DiscreteDistribution::dirac(vec![0.0, 0.0]).unwrap();
    assert!(wasserstein_distance(&a, &b, 1).is_err());
    assert!(WassersteinBall::new(a, -0.1, 1).is_err());
}

#[test]
fn intersection_examples() {
    let d0 = scalar(&[0.0], &[1.0]);
    let d3 = scalar(&[3.0], &[1.0]);
    let ball = |c: &DiscreteDistribution, r: f64| WassersteinBall::new(c.clone(), r, 1).unwrap();
    assert!(intersection_nonempty(&ball(&d0, 0.0), &ball(&d0, 0.0)).unwrap());
    assert!(!intersection_nonempty(&ball(&d0, 1.0), &ball(&d3, 1.0)).unwrap());
    assert!(intersection_nonempty(&ball(&d0, 2.0), &ball(&d3, 1.0)).unwrap());
    let mismatched = WassersteinBall::new(d3, 1.0, 2).unwrap();
    assert!(intersection_nonempty(&ball(&d0, 2.0), &mismatched).is_err());
}

#[test]
fn one_dimensional_closed_form_matches_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let n1 = rng.gen_range(1..8);
        let n2 = rng.gen_range(1..8);
        let mu = random_dist(&mut rng, n1, 1);
        let nu = random_dist(&mut rng, n2, 1);
        for p in 1..=3 {
            let closed = wasserstein_distance(&mu, &nu, p).unwrap().powi(p as i32);
            let lp = transport_cost_lp(&mu, &nu, p).unwrap();
            assert!((closed - lp).abs() <= 1e-9 * (1.0 + lp), "p={p}: {closed} vs {lp}");
        }
    }
}

#[test]
fn transportation_duality_gap_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..40 {
        let d = rng.gen_range(1..=3);
        let (n1, n2) = (rng.gen_range(1..6), rng.gen_range(1..6));
        let mu = random_dist(&mut rng, n1, d);
        let nu = random_dist(&mut rng, n2, d);
        for p in 1..=2 {
            let primal = transport_cost_lp(&mu, &nu, p).unwrap();
            let dual = kantorovich_dual(&mu, &nu, p as i32);
            assert!((primal - dual).abs() <= 1e-7, "{primal} vs {dual}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn symmetric(seed in 0u64..100_000, d in 1usize..=3, n1 in 1usize..=6, n2 in 1usize..=6, p in 1u32..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_dist(&mut rng, n1, d);
        let nu = random_dist(&mut rng, n2, d);
        let a = wasserstein_distance(&mu, &nu, p).unwrap();
        let b = wasserstein_distance(&nu, &mu, p).unwrap();
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn triangle_inequality(seed in 0u64..100_000, d in 1usize..=3, p in 1u32..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = |r: &mut ChaCha8Rng| r.gen_range(1..=6);
        let (k1, k2, k3) = (n(&mut rng), n(&mut rng), n(&mut rng));
        let mu = random_dist(&mut rng, k1, d);
        let nu = random_dist(&mut rng, k2, d);
        let rho = random_dist(&mut rng, k3, d);
        let direct = wasserstein_distance(&mu, &rho, p).unwrap();
        let via = wasserstein_distance(&mu, &nu, p).unwrap() + wasserstein_distance(&nu, &rho, p).unwrap();
        prop_assert!(direct <= via + 1e-7);
    }

    #[test]
    fn nondecreasing_in_order(seed in 0u64..100_000, d in 1usize..=3, n1 in 1usize..=6, n2 in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_dist(&mut rng, n1, d);
        let nu = random_dist(&mut rng, n2, d);
        let w1 = wasserstein_distance(&mu, &nu, 1).unwrap();
        let w2 = wasserstein_distance(&mu, &nu, 2).unwrap();
        let w3 = wasserstein_distance(&mu, &nu, 3).unwrap();
        prop_assert!(w1 <= w2 + 1e-9);
        prop_assert!(w2 <= w3 + 1e-9);
    }
}
