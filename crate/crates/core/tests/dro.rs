use iwdro::dro::*;
use iwdro::lpsolver::{solve_lp, LinearProgram, LpStatus};
use iwdro::wasserstein::{wasserstein_distance, DiscreteDistribution, WassersteinBall};
use iwdro::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cost(rng: &mut ChaCha8Rng, dy: usize, dz: usize) -> PiecewiseLinearCost {
    let s = rng.gen_range(1..=3);
    let mut u = || rng.gen_range(-1.0..1.0);
    let pieces = (0..s)
        .map(|_| AffinePiece {
            g_mat: (0..dy).map(|_| (0..dz).map(|_| u()).collect()).collect(),
            g_vec: (0..dy).map(|_| u()).collect(),
            q: (0..dz).map(|_| u()).collect(),
            q0: u(),
        })
        .collect();
    PiecewiseLinearCost::new(pieces).unwrap()
}

fn random_dist(rng: &mut ChaCha8Rng, n: usize, d: usize, shift: f64) -> DiscreteDistribution {
    let supports = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0) + shift).collect()).collect();
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = w.iter().sum();
    DiscreteDistribution::new(supports, w.iter().map(|v| v / total).collect()).unwrap()
}

fn unit_box(d: usize) -> Polyhedron {
    Polyhedron::boxed(&vec![-1.0; d], &vec![1.0; d]).unwrap()
}

/// A box holding every atom [`random_balls`] can produce.
fn outcome_box(d: usize) -> Polyhedron {
    Polyhedron::boxed(&vec![-2.0; d], &vec![2.0; d]).unwrap()
}

fn ball(center: DiscreteDistribution, radius: f64) -> WassersteinBall {
    WassersteinBall::new(center, radius, 1).unwrap()
}

/// Balls whose centres are pairwise within the sum of their radii.
fn random_balls(rng: &mut ChaCha8Rng, m: usize, d: usize) -> Vec<WassersteinBall> {
    random_balls_upto(rng, m, d, 4)
}

fn random_balls_upto(rng: &mut ChaCha8Rng, m: usize, d: usize, max_atoms: usize) -> Vec<WassersteinBall> {
    let centers: Vec<DiscreteDistribution> = (0..m)
        .map(|_| {
            let n = rng.gen_range(1..=max_atoms);
            let shift = rng.gen_range(-0.5..0.5);
            random_dist(rng, n, d, shift)
        })
        .collect();
    let mut radii: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..0.6)).collect();
    for a in 0..m {
        for b in 0..a {
            let w = wasserstein_distance(&centers[a], &centers[b], 1).unwrap();
            if radii[a] + radii[b] < w {
                radii[a] = w - radii[b] + rng.gen_range(0.0..0.3);
            }
        }
    }
    centers.into_iter().zip(radii).map(|(c, r)| ball(c, r)).collect()
}

/// `min_{z ∈ [-1,1]^dz} Σ_i w_i c(z, y_i)` as its own epigraph LP.
fn saa_value(cost: &PiecewiseLinearCost, dist: &DiscreteDistribution) -> f64 {
    let (dz, n) = (cost.dz(), dist.len());
    let mut lp = LinearProgram::new(dz + n);
    for j in 0..dz {
        lp.set_bounds(j, -1.0, 1.0);
    }
    for i in 0..n {
        lp.set_free(dz + i);
        lp.objective[dz + i] = dist.weights()[i];
    }
    for (i, y) in dist.supports().iter().enumerate() {
        for p in cost.pieces() {
            let mut row: Vec<(usize, f64)> = (0..dz)
                .map(|l| (l, p.q[l] + p.g_mat.iter().zip(y).map(|(r, yk)| r[l] * yk).sum::<f64>()))
                .collect();
            row.push((dz + i, -1.0));
            let rhs = -p.q0 - p.g_vec.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
            lp.add_ub(&row, rhs);
        }
    }
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    sol.objective_value
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn absolute_loss_point_mass_example() {
    let cost = PiecewiseLinearCost::absolute_loss();
    let y = Polyhedron::boxed(&[-2.0], &[2.0]).unwrap();
    let b = ball(DiscreteDistribution::dirac(vec![0.0]).unwrap(), 0.5);
    let sol = solve_single_ball(&cost, &Polyhedron::whole_space(1), &y, &b).unwrap();
    assert!(sol.decision[0].abs() < 1e-7);
    assert!((sol.worst_case_value - 0.5).abs() < 1e-8);
    // Primal side: half a unit of mass moved one unit, or any split, gives 0.5.
    let grid = oracle_grid(std::slice::from_ref(&b), &[-2.0], &[2.0], 50);
    let primal = worst_case_grid_oracle(&[0.0], &cost, &grid, std::slice::from_ref(&b)).unwrap();
    assert!((primal - 0.5).abs() < 1e-8);
}

#[test]
fn zero_radius_is_sample_average() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let (dy, dz) = (rng.gen_range(1..=3), rng.gen_range(1..=2));
        let cost = random_cost(&mut rng, dy, dz);
        let n = rng.gen_range(1..=6);
        let center = random_dist(&mut rng, n, dy, 0.0);
        let sol = solve_single_ball(&cost, &unit_box(dz), &Polyhedron::whole_space(dy), &ball(center.clone(), 0.0)).unwrap();
        let saa = saa_value(&cost, &center);
        assert!((sol.worst_case_value - saa).abs() < 1e-8, "{} vs {saa}", sol.worst_case_value);
    }
}

#[test]
fn collapsed_intersection_is_pointwise_minimum() {
    let cost = PiecewiseLinearCost::absolute_loss();
    let at = |v: f64| ball(DiscreteDistribution::dirac(vec![v]).unwrap(), 0.0);
    let sol = solve_iwdro(&cost, &Polyhedron::whole_space(1), &Polyhedron::whole_space(1), &at(1.3), &at(1.3)).unwrap();
    assert!(sol.worst_case_value.abs() < 1e-9);
    assert!((sol.decision[0] - 1.3).abs() < 1e-7);
}

#[test]
fn whole_space_single_ball_is_mean_plus_lipschitz_penalty() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let (dy, dz) = (rng.gen_range(1..=3), rng.gen_range(1..=2));
        let cost = random_cost(&mut rng, dy, dz);
        let n = rng.gen_range(1..=5);
        let center = random_dist(&mut rng, n, dy, 0.0);
        let eps = rng.gen_range(0.0..1.0);
        let z: Vec<f64> = (0..dz).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let lip = cost
            .pieces()
            .iter()
            .map(|p| p.slope(&z).iter().fold(0.0f64, |a, v| a.max(v.abs())))
            .fold(0.0f64, f64::max);
        let expected = cost.expected(&z, &center) + eps * lip;
        for form in [Formulation::Exact, Formulation::ExactFull, Formulation::Shared, Formulation::SharedFull] {
            let v = worst_case_value(&z, &cost, &Polyhedron::whole_space(dy), &[ball(center.clone(), eps)], form).unwrap();
            assert!(close(v, expected, 1e-8), "{form:?}: {v} vs {expected}");
        }
    }
}

#[test]
fn reduced_and_full_programs_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for case in 0..60 {
        let m = 1 + case % 3;
        let dy = 1 + (case / 3) % 2;
        let dz = rng.gen_range(1..=2);
        let cost = random_cost(&mut rng, dy, dz);
        // Keeps the three-ball multi-index programs small.
        let balls = random_balls_upto(&mut rng, m, dy, if m == 3 { 2 } else { 4 });
        let sets = [
            Polyhedron::whole_space(dy),
            Polyhedron::boxed(&vec![-1.2; dy], &vec![1.1; dy]).unwrap(),
            {
                let mut p = Polyhedron::boxed(&vec![-1.5; dy], &vec![1.5; dy]).unwrap();
                p.push(vec![1.0; dy], 1.0, false);
                p
            },
        ];
        for y in &sets {
            for (reduced, full) in [(Formulation::Exact, Formulation::ExactFull), (Formulation::Shared, Formulation::SharedFull)] {
                let a = solve_multi_ball_with(&cost, &unit_box(dz), y, &balls, reduced);
                let b = solve_multi_ball_with(&cost, &unit_box(dz), y, &balls, full);
                match (a, b) {
                    (Ok(a), Ok(b)) => assert!(
                        close(a.worst_case_value, b.worst_case_value, 1e-7),
                        "case {case} {reduced:?}: {} vs {}",
                        a.worst_case_value,
                        b.worst_case_value
                    ),
                    (Err(Error::EmptyAmbiguitySet(_)), Err(Error::EmptyAmbiguitySet(_))) => {}
                    (a, b) => panic!("case {case}: {a:?} vs {b:?}"),
                }
            }
        }
    }
}

#[test]
fn shared_slopes_bound_the_exact_value_from_above() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut strict = 0;
    for case in 0..40 {
        let dy = 1 + case % 2;
        let m = if case % 4 < 2 { 1 } else { 2 };
        let cost = random_cost(&mut rng, dy, 1);
        let balls = random_balls(&mut rng, m, dy);
        let y = outcome_box(dy);
        let z = [rng.gen_range(-1.0..1.0)];
        let exact = worst_case_value(&z, &cost, &y, &balls, Formulation::Exact).unwrap();
        let shared = worst_case_value(&z, &cost, &y, &balls, Formulation::Shared).unwrap();
        assert!(shared >= exact - 1e-7, "case {case}: {shared} < {exact}");
        if m == 1 {
            assert!(close(shared, exact, 1e-7));
        } else if shared > exact + 1e-4 {
            strict += 1;
        }
    }
    assert!(strict > 0, "sharing slopes never lost anything on two balls");
}

#[test]
fn dedicated_two_ball_program_matches_multi_ball() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..15 {
        let dy = rng.gen_range(1..=2);
        let cost = random_cost(&mut rng, dy, 1);
        let balls = random_balls(&mut rng, 2, dy);
        let y = outcome_box(dy);
        let lp = build_iwdro_lp(&cost, &unit_box(1), &y, &balls[0], &balls[1]).unwrap();
        let direct = solve_lp(&lp).unwrap();
        assert_eq!(direct.status, LpStatus::Optimal);
        let multi = solve_multi_ball(&cost, &unit_box(1), &y, &balls).unwrap();
        assert!(close(direct.objective_value, multi.worst_case_value, 1e-7));
    }
}

#[test]
fn one_ball_multi_ball_is_single_ball() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..10 {
        let cost = random_cost(&mut rng, 2, 2);
        let b = random_balls(&mut rng, 1, 2);
        let y = outcome_box(2);
        let single = solve_single_ball(&cost, &unit_box(2), &y, &b[0]).unwrap();
        let multi = solve_multi_ball(&cost, &unit_box(2), &y, &b).unwrap();
        assert_eq!(single, multi);
    }
}

#[test]
fn identical_balls_reduce_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..15 {
        let dy = rng.gen_range(1..=2);
        let cost = random_cost(&mut rng, dy, 1);
        let center = random_dist(&mut rng, 3, dy, 0.0);
        let eps = rng.gen_range(0.0..0.8);
        let b = ball(center, eps);
        for y in [Polyhedron::whole_space(dy), outcome_box(dy)] {
            let single = solve_single_ball(&cost, &unit_box(1), &y, &b).unwrap().worst_case_value;
            let two = solve_iwdro(&cost, &unit_box(1), &y, &b, &b).unwrap().worst_case_value;
            let three = solve_multi_ball(&cost, &unit_box(1), &y, &[b.clone(), b.clone(), b.clone()]).unwrap().worst_case_value;
            assert!(close(single, two, 1e-7) && close(single, three, 1e-7), "{single} {two} {three}");
        }
    }
}

#[test]
fn huge_second_radius_leaves_first_ball() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..15 {
        let dy = rng.gen_range(1..=2);
        let cost = random_cost(&mut rng, dy, 1);
        let mut balls = random_balls(&mut rng, 2, dy);
        balls[1].radius = 1e3;
        // On a bounded set every distribution is within diameter of any centre.
        let y = outcome_box(dy);
        let single = solve_single_ball(&cost, &unit_box(1), &y, &balls[0]).unwrap().worst_case_value;
        let two = solve_iwdro(&cost, &unit_box(1), &y, &balls[0], &balls[1]).unwrap().worst_case_value;
        assert!(close(single, two, 1e-7), "{single} vs {two}");
    }
}

#[test]
fn grid_oracle_matches_dual_on_breakpoint_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for case in 0..30 {
        let dy = 1 + case % 2;
        let m = 1 + case % 3;
        let cost = random_cost(&mut rng, dy, 1);
        let balls = random_balls(&mut rng, m, dy);
        let (lo, hi) = (vec![-1.8; dy], vec![1.9; dy]);
        let y = Polyhedron::boxed(&lo, &hi).unwrap();
        let sol = match solve_multi_ball(&cost, &unit_box(1), &y, &balls) {
            Ok(s) => s,
            Err(Error::EmptyAmbiguitySet(_)) => continue,
            Err(e) => panic!("{e}"),
        };
        let dual = worst_case_value(&sol.decision, &cost, &y, &balls, Formulation::ExactFull).unwrap();
        let coarse = worst_case_grid_oracle(&sol.decision, &cost, &[lo.clone(), hi.clone()], &balls).unwrap();
        let exact = worst_case_grid_oracle(&sol.decision, &cost, &oracle_grid(&balls, &lo, &hi, 0), &balls).unwrap();
        assert!(coarse <= dual + 1e-6);
        assert!(close(exact, dual, 1e-6), "case {case}: {exact} vs {dual}");
        assert!(close(sol.worst_case_value, dual, 1e-7));
    }
}

#[test]
fn grid_oracle_special_cases() {
    let cost = PiecewiseLinearCost::absolute_loss();
    let center = DiscreteDistribution::from_scalars(&[0.0, 1.0, 3.0], vec![0.2, 0.5, 0.3]).unwrap();
    let grid: Vec<Vec<f64>> = center.supports().to_vec();
    let b = ball(center.clone(), 0.0);
    let v = worst_case_grid_oracle(&[1.0], &cost, &grid, &[b]).unwrap();
    assert!((v - (0.2 * 1.0 + 0.3 * 2.0)).abs() < 1e-9);
    // A grid far from the centre cannot meet a small budget.
    let far = worst_case_grid_oracle(&[0.0], &cost, &[vec![10.0]], &[ball(center, 0.1)]).unwrap();
    assert_eq!(far, f64::NEG_INFINITY);
}

#[test]
fn grid_refinement_approaches_dual_from_below() {
    let cost = PiecewiseLinearCost::new(vec![
        AffinePiece { g_mat: vec![vec![0.0]], g_vec: vec![0.5], q: vec![0.0], q0: 0.0 },
        AffinePiece { g_mat: vec![vec![0.0]], g_vec: vec![-2.0], q: vec![0.0], q0: 0.3 },
    ])
    .unwrap();
    let balls = [
        ball(DiscreteDistribution::from_scalars(&[0.1, 0.7], vec![0.5, 0.5]).unwrap(), 0.3),
        ball(DiscreteDistribution::from_scalars(&[0.4], vec![1.0]).unwrap(), 0.35),
    ];
    let y = Polyhedron::boxed(&[-1.0], &[1.0]).unwrap();
    let dual = worst_case_value(&[0.0], &cost, &y, &balls, Formulation::Exact).unwrap();
    let mut last = f64::NEG_INFINITY;
    for points in [2, 3, 5, 9, 17] {
        let grid: Vec<Vec<f64>> = (0..points).map(|k| vec![-1.0 + 2.0 * k as f64 / (points - 1) as f64]).collect();
        let v = worst_case_grid_oracle(&[0.0], &cost, &grid, &balls).unwrap();
        assert!(v <= dual + 1e-9);
        assert!(v >= last - 1e-9, "nested grids must not lose value");
        last = v;
    }
}

#[test]
fn mixture_surrogate_endpoints_and_dominance() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let z_set = unit_box(1);
    for _ in 0..15 {
        let dy = rng.gen_range(1..=2);
        let cost = random_cost(&mut rng, dy, 1);
        let balls = random_balls(&mut rng, 2, dy);
        let y = outcome_box(dy);
        let (np, p) = (&balls[0].center, &balls[1].center);
        let (e1, e2) = (balls[0].radius, balls[1].radius);
        let at = |k: f64| solve_iwdro_apx(&cost, &z_set, &y, np, p, k, e1, e2).unwrap().worst_case_value;
        let single = |b: &WassersteinBall| solve_single_ball(&cost, &z_set, &y, b).unwrap().worst_case_value;
        assert!(close(at(1.0), single(&balls[0]), 1e-7));
        assert!(close(at(0.0), single(&balls[1]), 1e-7));
        let iw = solve_iwdro(&cost, &z_set, &y, &balls[0], &balls[1]).unwrap().worst_case_value;
        let kappa = rng.gen_range(0.0..1.0);
        assert!(iw <= at(kappa) + 1e-7);
    }
}

#[test]
fn empty_intersections_and_orders_are_refused() {
    let cost = PiecewiseLinearCost::absolute_loss();
    let y = Polyhedron::whole_space(1);
    let z = Polyhedron::whole_space(1);
    let a = ball(DiscreteDistribution::dirac(vec![0.0]).unwrap(), 1.0);
    let b = ball(DiscreteDistribution::dirac(vec![3.0]).unwrap(), 1.0);
    assert!(matches!(build_iwdro_lp(&cost, &z, &y, &a, &b), Err(Error::EmptyIntersection { .. })));
    assert!(matches!(solve_iwdro(&cost, &z, &y, &a, &b), Err(Error::EmptyIntersection { .. })));
    // Touching balls share exactly the laws on [0, 3] with mean 1; the
    // worst case for z = 1 puts mass 2/3 at 0 and 1/3 at 3.
    let touching = ball(DiscreteDistribution::dirac(vec![3.0]).unwrap(), 2.0);
    let v = worst_case_value(&[1.0], &cost, &y, &[a.clone(), touching.clone()], Formulation::Exact).unwrap();
    assert!((v - 4.0 / 3.0).abs() < 1e-7, "{v}");
    let squared = WassersteinBall::new(DiscreteDistribution::dirac(vec![0.0]).unwrap(), 1.0, 2).unwrap();
    assert!(matches!(solve_single_ball(&cost, &z, &y, &squared), Err(Error::UnsupportedOrder(2))));
}

#[test]
fn empty_intersection_on_the_outcome_set_is_reported() {
    let cost = PiecewiseLinearCost::absolute_loss();
    let mk = |v: f64, r: f64| ball(DiscreteDistribution::dirac(vec![v]).unwrap(), r);
    let balls = [mk(0.0, 1.0), mk(2.0, 1.0), mk(4.0, 3.0)];
    let y = Polyhedron::boxed(&[-1.0], &[5.0]).unwrap();
    assert!(solve_multi_ball(&cost, &Polyhedron::whole_space(1), &y, &balls).is_ok());
    // Within 1 of both δ₀ and δ₂ means supported on [0, 2] with mean 1; the
    // third ball then caps E|Y − 1| at 0.5.
    let balls = [mk(0.0, 1.0), mk(2.0, 1.0), mk(1.0, 0.5)];
    let v = worst_case_value(&[1.0], &cost, &y, &balls, Formulation::Exact).unwrap();
    assert!((v - 0.5).abs() < 1e-7, "{v}");
    // Two unit balls around δ(−1,0) and δ(1,0) touch along the segment
    // between them, which the half-plane y₂ ≥ 1 avoids.
    let cost = PiecewiseLinearCost::new(vec![AffinePiece {
        g_mat: vec![vec![0.0], vec![0.0]],
        g_vec: vec![1.0, 0.0],
        q: vec![0.0],
        q0: 0.0,
    }])
    .unwrap();
    let plane = Polyhedron::new(2, vec![vec![0.0, -1.0]], vec![-1.0], vec![false]).unwrap();
    let at = |p: [f64; 2]| ball(DiscreteDistribution::dirac(p.to_vec()).unwrap(), 1.0);
    for form in [Formulation::Exact, Formulation::Shared] {
        let r = solve_multi_ball_with(&cost, &Polyhedron::whole_space(1), &plane, &[at([-1.0, 0.0]), at([1.0, 0.0])], form);
        assert!(matches!(r, Err(Error::EmptyAmbiguitySet(_))), "{r:?}");
    }
}

#[test]
fn solutions_respect_decision_set_and_sign_of_multipliers() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let cost = PiecewiseLinearCost::mean_cvar(3, 0.05);
    let z_set = Polyhedron::simplex_prefix(4, 3);
    for _ in 0..10 {
        let balls = random_balls(&mut rng, 2, 3);
        let sol = solve_multi_ball(&cost, &z_set, &Polyhedron::whole_space(3), &balls).unwrap();
        assert!(z_set.contains(&sol.decision, 1e-7));
        assert!(sol.multipliers.iter().all(|l| *l >= 0.0));
        assert_eq!(sol.multipliers.len(), 2);
    }
}

#[test]
fn radius_sweep_matches_cold_solves() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cost = PiecewiseLinearCost::mean_cvar(3, 0.05);
    let z_set = Polyhedron::simplex_prefix(4, 3);
    let y = Polyhedron::whole_space(3);
    let c1 = random_dist(&mut rng, 12, 3, 0.0);
    let c2 = random_dist(&mut rng, 9, 3, 0.4);
    let mut sweep = RadiusSweep::new(&cost, &z_set, &y, &[c1.clone(), c2.clone()], Formulation::Shared).unwrap();
    let w = sweep.center_distance(0, 1);
    assert!((w - wasserstein_distance(&c1, &c2, 1).unwrap()).abs() < 1e-12);
    for (k1, k2) in [(0.1, 0.01), (0.5, 0.1), (0.9, 0.05), (0.3, 0.02), (0.975, 0.1)] {
        let radii = [k1 * (1.0 + k2) * w, (1.0 - k1) * (1.0 + k2) * w];
        let warm = sweep.solve(&radii).unwrap();
        let balls = [ball(c1.clone(), radii[0]), ball(c2.clone(), radii[1])];
        let cold = solve_multi_ball_with(&cost, &z_set, &y, &balls, Formulation::Shared).unwrap();
        assert!(close(warm.worst_case_value, cold.worst_case_value, 1e-9));
    }
    assert!(matches!(sweep.solve(&[0.2 * w, 0.2 * w]), Err(Error::EmptyIntersection { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn intersection_dominates_each_ball(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dy = rng.gen_range(1..=2);
        let cost = random_cost(&mut rng, dy, 1);
        let balls = random_balls(&mut rng, 2, dy);
        let y = outcome_box(dy);
        let iw = solve_iwdro(&cost, &unit_box(1), &y, &balls[0], &balls[1]).unwrap().worst_case_value;
        for b in &balls {
            let single = solve_single_ball(&cost, &unit_box(1), &y, b).unwrap().worst_case_value;
            prop_assert!(iw <= single + 1e-7);
        }
    }

    #[test]
    fn value_grows_with_radii(seed in 0u64..10_000, grow in 0.0f64..0.5, which in 0usize..2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dy = rng.gen_range(1..=2);
        let cost = random_cost(&mut rng, dy, 1);
        let mut balls = random_balls(&mut rng, 2, dy);
        let y = outcome_box(dy);
        let before = solve_multi_ball(&cost, &unit_box(1), &y, &balls).unwrap().worst_case_value;
        balls[which].radius += grow;
        let after = solve_multi_ball(&cost, &unit_box(1), &y, &balls).unwrap().worst_case_value;
        prop_assert!(after >= before - 1e-7);
    }
}
