//! Randomized invariant checks over generated instances.

use proptest::prelude::*;

use benders_ttf::columns::{local_cost, skeleton_cost, Skeleton};
use benders_ttf::model::{
    generate_instance, instance_from_json, instance_to_json, DetId, PartId, PricingMode,
    SolverConfig,
};
use benders_ttf::pricing::{price_local, price_skeleton, PotentialVector};
use benders_ttf::rounding::{check_solution, round_two_stage};
use benders_ttf::bcg::run_bcg;

fn unit_floats(n: usize, seed: u64) -> Vec<f64> {
    // Cheap deterministic pseudo-random stream in [-1, 1).
    let mut state = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1);
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 52) as f64 - 1.0
        })
        .collect()
}

proptest! {
    #[test]
    fn pairwise_costs_are_symmetric(seed in 0u64..300) {
        let inst = generate_instance(4, 3, 1.0, seed);
        let n = inst.n_detections();
        for a in 0..n {
            for b in 0..n {
                prop_assert_eq!(inst.phi(DetId(a), DetId(b)), inst.phi(DetId(b), DetId(a)));
            }
        }
    }

    #[test]
    fn instance_json_round_trips(seed in 0u64..200) {
        let inst = generate_instance(3, 3, 2.0, seed);
        let text = instance_to_json(&inst);
        let back = instance_from_json(&text).unwrap();
        prop_assert_eq!(instance_to_json(&back), text);
    }

    #[test]
    fn skeleton_order_does_not_change_cost(seed in 0u64..200) {
        let inst = generate_instance(3, 2, 1.0, seed);
        // One detection per part, listed both ways round.
        let fwd = vec![DetId(0), DetId(2), DetId(4)];
        let rev: Vec<DetId> = fwd.iter().rev().copied().collect();
        let a = Skeleton::new(&inst, fwd).unwrap();
        let b = Skeleton::new(&inst, rev).unwrap();
        prop_assert_eq!(&a.members, &b.members);
        prop_assert_eq!(a.cost, b.cost);
    }

    #[test]
    fn skeleton_pricing_value_decomposes(seed in 0u64..150, dseed in 0u64..50) {
        let inst = generate_instance(3, 3, 1.0, seed);
        let delta = PotentialVector::new(unit_floats(inst.n_detections(), dseed));
        for &d in inst.dets_of_part(PartId(0)) {
            let (members, value) = price_skeleton(&inst, &delta, d).unwrap();
            let base = skeleton_cost(&inst, &members).unwrap();
            let shift: f64 = members.iter().map(|m| delta.delta[m.0]).sum();
            prop_assert!((value - (base + shift)).abs() < 1e-9);
            prop_assert!(members.contains(&d));
        }
    }

    #[test]
    fn local_pricing_value_decomposes(seed in 0u64..150, lseed in 0u64..50) {
        let inst = generate_instance(2, 4, 1.0, seed);
        let n = inst.n_detections();
        let lam1: Vec<f64> = unit_floats(n, lseed).iter().map(|v| v.abs()).collect();
        let lam2: Vec<f64> = unit_floats(n, lseed + 1).iter().map(|v| v.abs()).collect();
        let lam3: Vec<f64> = unit_floats(n, lseed + 2).iter().map(|v| v.abs()).collect();
        for p in 0..inst.n_parts() {
            for &d in inst.dets_of_part(PartId(p)) {
                let (set, value) = price_local(
                    &inst, PartId(p), &lam1, &lam2, &lam3, d,
                    PricingMode::ExactEnumeration, usize::MAX,
                ).unwrap();
                let base = local_cost(&inst, PartId(p), d, &set).unwrap();
                let duals: f64 = lam2[d.0] + lam3[d.0]
                    + set.iter().map(|l| lam1[l.0] + lam2[l.0]).sum::<f64>();
                prop_assert!((value - (base + duals)).abs() < 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rounded_solutions_verify_and_dominate_lp(seed in 0u64..1000) {
        let inst = generate_instance(3, 3, 1.0, seed);
        let config = SolverConfig::default();
        let out = run_bcg(&inst, &config).unwrap();
        let rounded = round_two_stage(&inst, &out.pool, &out.rows, &config).unwrap();
        check_solution(&inst, &rounded.solution).unwrap();
        prop_assert!(rounded.solution.objective >= out.master.objective - 1e-6);
        prop_assert!(rounded.solution.objective <= 1e-9);
    }
}
