//! Property tests for the structural invariants.

mod common;

use common::*;
use convint_core::constraint::{
    distance_to_constraint, hull_box_admits, hull_margin, sample_constraint, SphereLattice,
};
use convint_core::field::{deserialize, serialize, CompositeField, Sampling};
use convint_core::geometry::{
    hausdorff_distance, hull_membership, interior_margin, segment_direction, PointCloud,
    SegmentSearch, FEASIBILITY_TOL,
};
use convint_core::waves::{make_wave, wave_eval};
use proptest::collection::vec;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cloud(dim: usize, max: usize) -> impl Strategy<Value = PointCloud> {
    vec(vec(-2.0f64..2.0, dim), 1..max).prop_map(|p| PointCloud::new(p).unwrap())
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn unit(v: &[f64]) -> Option<Vec<f64>> {
    let n = norm(v);
    (n > 1e-3).then(|| v.iter().map(|x| x / n).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hausdorff_is_a_metric(a in cloud(3, 12), b in cloud(3, 12), c in cloud(3, 12)) {
        let ab = hausdorff_distance(&a, &b).unwrap();
        prop_assert_eq!(hausdorff_distance(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(ab, hausdorff_distance(&b, &a).unwrap());
        let ac = hausdorff_distance(&a, &c).unwrap();
        let cb = hausdorff_distance(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12);
    }

    #[test]
    fn distance_has_the_constraint_symmetries(
        z in vec(-2.0f64..2.0, 5),
        f in 0.05f64..2.0,
        angle in 0.0f64..std::f64::consts::TAU,
    ) {
        let base = distance_to_constraint(&z, f);
        // (u, m, b) → (−u, m, −b) maps K onto itself
        let flipped = [-z[0], z[1], z[2], -z[3], -z[4]];
        prop_assert!((distance_to_constraint(&flipped, f) - base).abs() < 1e-12 * (1.0 + base));
        // so does a common rotation of m and b
        let (c, s) = (angle.cos(), angle.sin());
        let rotated = [
            z[0],
            c * z[1] - s * z[2],
            s * z[1] + c * z[2],
            c * z[3] - s * z[4],
            s * z[3] + c * z[4],
        ];
        prop_assert!((distance_to_constraint(&rotated, f) - base).abs() < 1e-10 * (1.0 + base));
    }

    #[test]
    fn distance_is_one_lipschitz(
        z in vec(-2.0f64..2.0, 7),
        w in vec(-2.0f64..2.0, 7),
        f in 0.05f64..2.0,
    ) {
        let gap = (distance_to_constraint(&z, f) - distance_to_constraint(&w, f)).abs();
        prop_assert!(gap <= dist(&z, &w) + 1e-12);
    }

    #[test]
    fn distance_lower_bounds_sampled_points(z in vec(-2.0f64..2.0, 5), f in 0.05f64..2.0) {
        let lattice = SphereLattice::new(2, 16, None).unwrap();
        let cloud = sample_constraint(f, &lattice).unwrap();
        prop_assert!(distance_to_constraint(&z, f) <= cloud.distance_to(&z) + 1e-12);
    }

    #[test]
    fn hull_margin_implies_the_box(z in vec(-1.5f64..1.5, 5), f in 0.1f64..1.5) {
        let lattice = SphereLattice::new(2, 24, Some(2)).unwrap();
        if hull_margin(&z, f, &lattice).is_some() {
            prop_assert!(hull_box_admits(&z, f));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hull_margin_is_sound(
        z in vec(-0.4f64..0.4, 5),
        f in 0.3f64..1.5,
        dir in vec(-1.0f64..1.0, 5),
        scale in 0.0f64..0.99,
    ) {
        let lattice = SphereLattice::new(2, 16, Some(4)).unwrap();
        let cloud = sample_constraint(f, &lattice).unwrap();
        if let (Some(r), Some(v)) = (hull_margin(&z, f, &lattice), unit(&dir)) {
            let p: Vec<f64> = z.iter().zip(&v).map(|(a, b)| a + scale * r * b).collect();
            prop_assert!(hull_membership(&p, &cloud, FEASIBILITY_TOL).unwrap().is_some());
        }
    }

    #[test]
    fn segments_meet_the_length_bound(
        n in 2usize..6,
        seed in 0u64..1000,
        weights in vec(0.05f64..1.0, 14),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<f64>> = (0..n + 3).map(|_| normal_vec(&mut rng, n)).collect();
        let cloud = PointCloud::new(pts.clone()).unwrap();
        let w = &weights[..pts.len()];
        let total: f64 = w.iter().sum();
        let z: Vec<f64> = (0..n)
            .map(|j| pts.iter().zip(w).map(|(p, wi)| p[j] * wi).sum::<f64>() / total)
            .collect();
        prop_assume!(interior_margin(&z, &cloud).is_ok_and(|m| m > 1e-6));
        let s = segment_direction(&z, &cloud, &SegmentSearch { seed, ..Default::default() }).unwrap();
        prop_assert!(norm(&s.zbar) * 2.0 * n as f64 >= cloud.distance_to(&z));
        for sign in [1.0, -1.0] {
            let end: Vec<f64> = z.iter().zip(&s.zbar).map(|(a, b)| a + sign * b).collect();
            prop_assert!(interior_margin(&end, &cloud).unwrap() > 0.0);
        }
    }

    #[test]
    fn waves_are_positively_homogeneous(
        zbar in vec(-1.0f64..1.0, 5),
        c in 0.1f64..10.0,
        k in 1u32..6,
        offset in vec(-0.9f64..0.9, 3),
    ) {
        prop_assume!(norm(&zbar) > 1e-3 && zbar[0].abs() > 1e-3);
        let center = [0.2, 0.1, -0.3];
        let w1 = make_wave(&zbar, &center, 0.5, k, 2).unwrap();
        let scaled: Vec<f64> = zbar.iter().map(|v| c * v).collect();
        let w2 = make_wave(&scaled, &center, 0.5, k, 2).unwrap();
        let y: Vec<f64> = center.iter().zip(&offset).map(|(a, b)| a + 0.5 * b / 3f64.sqrt()).collect();
        let (a, b) = (wave_eval(&w1, &y), wave_eval(&w2, &y));
        for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((c * p - q).abs() <= 1e-10 * c * (1.0 + p.abs()));
        }
    }

    #[test]
    fn waves_vanish_outside_their_ball_and_peak_at_zbar(
        zbar in vec(-1.0f64..1.0, 7),
        k in 1u32..6,
        dir in vec(-1.0f64..1.0, 4),
        rho in 1.0f64..3.0,
    ) {
        prop_assume!(norm(&zbar) > 1e-3);
        let center = [0.0, 0.5, 0.5, 0.5];
        let w = make_wave(&zbar, &center, 0.3, k, 3).unwrap();
        let at_center = wave_eval(&w, &center);
        for (a, b) in at_center.as_slice().iter().zip(&zbar) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
        if let Some(v) = unit(&dir) {
            let y: Vec<f64> = center.iter().zip(&v).map(|(c, e)| c + 0.3 * rho * e).collect();
            prop_assert!(wave_eval(&w, &y).is_zero());
        }
    }

    #[test]
    fn fields_round_trip_and_vanish_outside_u(
        specs in vec((vec(-1.0f64..1.0, 5), vec(0.2f64..0.8, 3), 0.05f64..0.2, 1u32..5), 0..6),
        probe in vec(-0.5f64..1.5, 3),
    ) {
        let waves = specs
            .iter()
            .filter(|(z, ..)| norm(z) > 1e-3 && z[0].abs() > 1e-3)
            .map(|(z, c, r, k)| make_wave(z, c, *r, *k, 2).unwrap())
            .collect();
        let field = CompositeField::new(bump_params(), Sampling::default_for(2, Some(1)), waves).unwrap();
        let back = deserialize(field_bytes(&field).as_slice()).unwrap();
        prop_assert_eq!(&back, &field);
        let mut again = Vec::new();
        serialize(&back, &mut again).unwrap();
        prop_assert_eq!(again, field_bytes(&field));
        if !field.params().in_u(&probe) {
            prop_assert!(field.eval(&probe).is_zero());
        }
    }
}
