use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topocon::consensus::{mixed_norm_sequence, AgentEnsemble, UpdatingMatrix};
use topocon::experiment::{gen_random_system, quantiles, SystemSpec};
use topocon::graph::{gen_rr, gen_ws};
use topocon::kaczmarz::{
    normalized_row_energy, row_energy_floor, run_schedule, verify_sequence_bounds,
};
use topocon::walks::{
    order_decay, product_mass_identity, walk_bound_dp, walk_bound_enum, walk_order,
};
use topocon::{GraphFamily, LinearSystem, Network};

fn system(n: usize, seed: u64) -> LinearSystem {
    gen_random_system(n, &SystemSpec::default(), seed).unwrap()
}

fn network(n: usize, p: f64, seed: u64) -> Network {
    GraphFamily::Er { p }.generate(n, seed).unwrap()
}

fn family() -> impl Strategy<Value = GraphFamily> {
    prop_oneof![
        (0.2f64..1.0).prop_map(|p| GraphFamily::Er { p }),
        (1usize..3, 0.0f64..1.0).prop_map(|(h, p)| GraphFamily::Ws { k: 2 * h, p }),
        (1usize..4).prop_map(|m| GraphFamily::Sf { m }),
        (2usize..5).prop_map(|k| GraphFamily::Rr { k }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projectors_are_orthogonal(n in 1usize..9, seed in any::<u64>()) {
        let sys = system(n, seed);
        for i in 0..n {
            let p = &sys.projectors()[i];
            prop_assert!((p * p - p).amax() < 1e-12);
            prop_assert!((p.transpose() - p).amax() < 1e-12);
            prop_assert!((p * sys.row(i)).amax() < 1e-12);
        }
    }

    #[test]
    fn phi_and_condition_chain(n in 1usize..9, seed in any::<u64>()) {
        let sys = system(n, seed);
        let s = (n as f64).sqrt() * sys.tau() * sys.inv_norm();
        prop_assert!((sys.phi() * s * s - 1.0).abs() < 1e-12);
        let c = sys.condition_numbers();
        let ratio = c.kappa_scaled / (n as f64).sqrt();
        prop_assert!(1.0 - 1e-12 <= ratio && ratio <= c.kappa * (1.0 + 1e-12));
        prop_assert!(sys.phi() <= 1.0 / (c.kappa * c.kappa) * (1.0 + 1e-12));
    }

    #[test]
    fn generated_networks_are_valid(n in 6usize..30, fam in family(), seed in any::<u64>()) {
        prop_assume!(fam.validate(n).is_ok());
        let net = fam.generate(n, seed).unwrap();
        prop_assert!(net.is_connected());
        for i in 0..n {
            prop_assert!(net.is_adjacent(i, i));
            for &j in net.neighbors(i) {
                prop_assert!(net.is_adjacent(j, i));
            }
        }
        match fam {
            GraphFamily::Ws { k, .. } => prop_assert_eq!(net.edge_count(), n * k / 2),
            GraphFamily::Rr { k } => prop_assert!(net.degrees().iter().all(|&d| d == k + 1)),
            _ => {}
        }
    }

    #[test]
    fn ws_and_rr_structure(n in 10usize..60, seed in any::<u64>()) {
        let ws = gen_ws(n, 4, 0.3, seed).unwrap();
        prop_assert_eq!(ws.edge_count(), 2 * n);
        let rr = gen_rr(n, 4, seed).unwrap();
        prop_assert!(rr.degrees().iter().all(|&d| d == 5));
    }

    #[test]
    fn consensus_keeps_rows_feasible(n in 2usize..7, seed in any::<u64>(), steps in 1usize..30) {
        let sys = system(n, seed);
        let net = network(n, 0.5, seed);
        let mut ens = AgentEnsemble::init(&sys, &net, 1.0, seed).unwrap();
        for _ in 0..steps {
            ens.advance();
        }
        for (i, x) in ens.states().iter().enumerate() {
            prop_assert!(sys.row_residual(i, x).abs() < 1e-9 * (1.0 + sys.b().amax()));
        }
        let still = AgentEnsemble::new(&sys, &net, vec![sys.x_star().clone(); n]).unwrap().step();
        for x in still.states() {
            prop_assert!((x - sys.x_star()).amax() < 1e-12);
        }
    }

    #[test]
    fn agent_iteration_equals_matrix_form(n in 2usize..7, seed in any::<u64>()) {
        let sys = system(n, seed);
        let net = network(n, 0.5, seed ^ 1);
        let m = UpdatingMatrix::build(&sys, &net).unwrap();
        let mut ens = AgentEnsemble::init(&sys, &net, 1.0, seed).unwrap();
        let mut y = ens.stacked_error();
        for _ in 0..50 {
            ens.advance();
            y = m.apply(&y);
            prop_assert!((ens.stacked_error() - &y).amax() < 1e-9);
        }
    }

    #[test]
    fn mixed_norm_never_increases(n in 2usize..6, seed in any::<u64>()) {
        let sys = system(n, seed);
        let net = network(n, 0.6, seed);
        let seq = mixed_norm_sequence(&sys, &net, 10 * n).unwrap();
        prop_assert!(seq[0] <= 1.0 + 1e-12);
        for w in seq.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        prop_assert!(seq.iter().any(|&v| v < 1.0));
    }

    #[test]
    fn order_is_monotone_under_extension(n in 1usize..6, walk in prop::collection::vec(0usize..6, 1..40)) {
        let walk: Vec<usize> = walk.into_iter().map(|v| v % n).collect();
        let mut prev = 0;
        for len in 1..=walk.len() {
            let d = walk_order(&walk[..len], n);
            prop_assert!(d.order >= prev);
            prop_assert_eq!(d.order, d.cut_positions.len());
            prev = d.order;
        }
    }

    #[test]
    fn order_is_reversal_invariant(n in 1usize..6, walk in prop::collection::vec(0usize..6, 1..40)) {
        let walk: Vec<usize> = walk.into_iter().map(|v| v % n).collect();
        let mut rev = walk.clone();
        rev.reverse();
        prop_assert_eq!(walk_order(&walk, n).order, walk_order(&rev, n).order);
    }

    #[test]
    fn closed_subwalks_are_minimal_covers(n in 2usize..6, walk in prop::collection::vec(0usize..6, 1..40)) {
        let walk: Vec<usize> = walk.into_iter().map(|v| v % n).collect();
        let d = walk_order(&walk, n);
        let mut start = 0;
        for &cut in &d.cut_positions {
            let sub = &walk[start..=cut];
            let mut seen: Vec<usize> = sub.to_vec();
            seen.sort_unstable();
            seen.dedup();
            prop_assert_eq!(seen.len(), n);
            let mut prefix: Vec<usize> = sub[..sub.len() - 1].to_vec();
            prefix.sort_unstable();
            prefix.dedup();
            prop_assert!(prefix.len() < n);
            start = cut;
        }
        prop_assert_eq!(d.residual_start, start);
    }

    #[test]
    fn dp_matches_enumeration(n in 2usize..5, t in 0usize..7, seed in any::<u64>(), phi in 0.0f64..1.0) {
        let net = network(n, 0.6, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y0: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
        for i in 0..n {
            let a = walk_bound_enum(&net, i, t, phi, &y0).unwrap();
            let b = walk_bound_dp(&net, i, t, phi, &y0).unwrap();
            prop_assert!((a.bound - b.bound).abs() < 1e-12);
            prop_assert_eq!(a.mass_by_order.len(), b.mass_by_order.len());
            for (x, y) in a.mass_by_order.iter().zip(&b.mass_by_order) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            prop_assert!((a.total_mass() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bound_is_non_increasing_in_phi(n in 2usize..5, t in 0usize..9, seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let net = network(n, 0.6, seed);
        let y0 = vec![1.0; n];
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let x = walk_bound_dp(&net, 0, t, lo, &y0).unwrap().bound;
        let y = walk_bound_dp(&net, 0, t, hi, &y0).unwrap().bound;
        prop_assert!(y <= x + 1e-15);
    }

    #[test]
    fn decay_factor_in_unit_interval(phi in 0.0f64..1.0, n in 1usize..200, r in 0usize..50) {
        let d = order_decay(phi, n, r);
        prop_assert!(d <= 1.0);
        // Positive unless the exact value is below the smallest double.
        let log = n as f64 * r as f64 / 2.0 * (1.0 - phi).ln();
        prop_assert!(d > 0.0 || log < -700.0);
    }

    #[test]
    fn walk_bound_dominates_consensus_error(n in 2usize..6, seed in any::<u64>()) {
        let sys = system(n, seed);
        let net = network(n, 0.5, seed ^ 2);
        let mut ens = AgentEnsemble::init(&sys, &net, 1.0, seed).unwrap();
        let y0 = ens.errors();
        for t in 0..=6 {
            ens.advance();
            let eps = ens.errors();
            for i in 0..n {
                let bound = walk_bound_dp(&net, i, t, sys.phi(), &y0).unwrap().bound;
                prop_assert!(eps[i] <= bound * (1.0 + 1e-9) + 1e-12, "i={} t={} {} > {}", i, t, eps[i], bound);
            }
        }
    }

    #[test]
    fn kaczmarz_is_pythagorean_and_non_expansive(n in 2usize..7, seed in any::<u64>(), len in 1usize..60) {
        let sys = system(n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let schedule: Vec<usize> = (0..len).map(|_| rng.random_range(0..n)).collect();
        let z0 = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let report = verify_sequence_bounds(&sys, &z0, &schedule).unwrap();
        if let Some(env) = report.envelope {
            prop_assert!(report.final_error <= env * report.initial_error * (1.0 + 1e-12) + 1e-15);
        }
        let mut z = z0.clone();
        for &j in &schedule {
            let z1 = run_schedule(&sys, &z, &[j]).unwrap().z_final;
            let lhs = (&z1 - &z).norm_squared() + (&z1 - sys.x_star()).norm_squared();
            let rhs = (&z - sys.x_star()).norm_squared();
            // z - x* loses about eps |z| |z - x*| to cancellation.
            let scale = rhs.max((&z - sys.x_star()).norm() * (z.norm() + sys.x_star().norm()));
            prop_assert!((lhs - rhs).abs() <= 1e-12 * scale, "{} vs {}", lhs, rhs);
            z = z1;
        }
    }

    #[test]
    fn row_energy_floor_holds(n in 1usize..8, seed in any::<u64>()) {
        let sys = system(n, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
            let e = normalized_row_energy(&sys, &x).unwrap();
            prop_assert!(e >= row_energy_floor(&sys, &x) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn quantiles_are_ordered(samples in prop::collection::vec(0.0f64..10.0, 1..50)) {
        let q = quantiles(&samples).unwrap();
        prop_assert!(q.min <= q.q1 && q.q1 <= q.median && q.median <= q.q3 && q.q3 <= q.max);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mass_identity_holds(n in 1usize..9, t in 0usize..9, seed in any::<u64>(), p in 0.3f64..1.0) {
        let net = network(n.max(2), p, seed);
        let n = net.n();
        // Enumeration is capped; the DP carries the same mass for larger cases.
        if (n as f64).powf(t as f64) <= 2e5 {
            for i in 0..n {
                prop_assert!((product_mass_identity(&net, i, t).unwrap() - 1.0).abs() < 1e-12);
            }
        }
        let r = walk_bound_dp(&net, 0, t, 0.5, &vec![1.0; n]).unwrap();
        prop_assert!((r.total_mass() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn single_vertex_network_is_trivial() {
    let net = Network::complete(1);
    let sys = LinearSystem::new(DMatrix::from_element(1, 1, 2.0), DVector::from_element(1, 4.0)).unwrap();
    assert_eq!(product_mass_identity(&net, 0, 3).unwrap(), 1.0);
    assert_eq!(sys.phi(), 1.0);
}
