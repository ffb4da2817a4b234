use kingflow::harness::datasets::{precision_support, rotate_dataset};
use kingflow::manifold::fisher_estimate;
use kingflow::projection::project_delta_limit;
use kingflow::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn points(n: usize, d: usize) -> impl Strategy<Value = ParticleSet> {
    prop::collection::vec(-3.0f64..3.0, n * d).prop_map(move |v| ParticleSet::from_flat(v, d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fisher_is_symmetric_psd(x in points(12, 2)) {
        let map = FeatureMap::gaussian_quadratic(2).unwrap();
        let f = fisher_estimate(&map, &x, 0.0).unwrap().matrix;
        prop_assert!((&f - f.transpose()).amax() <= 1e-12 * f.amax().max(1.0));
        let min = f.clone().symmetric_eigen().eigenvalues.min();
        prop_assert!(min >= -1e-9 * f.amax().max(1.0));
    }

    #[test]
    fn mean_statistic_ignores_order(x in points(10, 2), seed in 0u64..1000) {
        let map = FeatureMap::gaussian_quadratic(2).unwrap();
        let mut idx: Vec<usize> = (0..10).collect();
        idx.rotate_left((seed % 10) as usize);
        idx.swap(0, (seed % 7) as usize);
        let a = map.mean_statistic(&x).unwrap();
        let b = map.mean_statistic(&x.select(&idx)).unwrap();
        prop_assert!((a - b).amax() < 1e-12);
    }

    #[test]
    fn mmd_symmetric_and_zero_on_self(a in points(8, 2), b in points(9, 2), bw in 0.3f64..3.0) {
        let ab = mmd(&a, &b, Some(bw)).unwrap().value;
        let ba = mmd(&b, &a, Some(bw)).unwrap().value;
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(ab >= 0.0);
        prop_assert!(mmd(&a, &a, Some(bw)).unwrap().value.abs() < 1e-7);
    }

    #[test]
    fn w2_triangle_inequality(
        m in prop::collection::vec(-2.0f64..2.0, 6),
        s in prop::collection::vec(0.3f64..2.0, 6),
        c in prop::collection::vec(-0.2f64..0.2, 3),
    ) {
        let mean = |i: usize| DVector::from_vec(vec![m[2 * i], m[2 * i + 1]]);
        let cov = |i: usize| DMatrix::from_row_slice(2, 2, &[s[2 * i], c[i], c[i], s[2 * i + 1]]);
        let d = |i: usize, j: usize| gaussian_w2(&mean(i), &cov(i), &mean(j), &cov(j)).unwrap();
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-8);
        prop_assert!(d(0, 0) < 1e-6);
        prop_assert!((d(0, 1) - d(1, 0)).abs() < 1e-8);
    }

    #[test]
    fn drift_equivariant_under_permutation(x in points(8, 1), shift in 0.5f64..2.0, k in 1usize..8) {
        let y = x.map_points(|s, o| o[0] = s[0] + shift);
        let map = FeatureMap::gaussian_quadratic(1).unwrap();
        let kern = KernelSpec::RbfScalar { bandwidth: 1.0 };
        let mut idx: Vec<usize> = (0..8).collect();
        idx.rotate_left(k);
        let xp = x.select(&idx);
        let h = solve_king_drift(&map, &kern, &x, &y, 0.1, 1e-3).unwrap().eval(&x).unwrap();
        let hp = solve_king_drift(&map, &kern, &xp, &y, 0.1, 1e-3).unwrap().eval(&xp).unwrap();
        for (i, &p) in idx.iter().enumerate() {
            prop_assert!((hp[(i, 0)] - h[(p, 0)]).abs() < 1e-8 * (1.0 + h.amax()));
        }
    }

    #[test]
    fn projection_limit_is_linear_in_velocity(
        x in points(10, 2),
        v in prop::collection::vec(-1.0f64..1.0, 20),
        w in prop::collection::vec(-1.0f64..1.0, 20),
        a in -2.0f64..2.0,
    ) {
        let map = FeatureMap::gaussian_quadratic(2).unwrap();
        let v = DMatrix::from_row_slice(10, 2, &v);
        let w = DMatrix::from_row_slice(10, 2, &w);
        let dv = project_delta_limit(&map, &x, &v, 1e-6).unwrap().delta;
        let dw = project_delta_limit(&map, &x, &w, 1e-6).unwrap().delta;
        let comb = project_delta_limit(&map, &x, &(&v * a + &w), 1e-6).unwrap().delta;
        let expect = dv * a + dw;
        prop_assert!((&comb - &expect).amax() <= 1e-6 * (1.0 + expect.amax()));
    }

    #[test]
    fn rotations_compose(x in points(6, 2), a in -180.0f64..180.0, b in -180.0f64..180.0) {
        let two = rotate_dataset(&rotate_dataset(&x, a).unwrap(), b).unwrap();
        let one = rotate_dataset(&x, a + b).unwrap();
        for (p, q) in two.iter().zip(one.iter()) {
            prop_assert!((p[0] - q[0]).abs() < 1e-10 && (p[1] - q[1]).abs() < 1e-10);
        }
        let back = rotate_dataset(&rotate_dataset(&x, a).unwrap(), -a).unwrap();
        for (p, q) in back.iter().zip(x.iter()) {
            prop_assert!((p[0] - q[0]).abs() < 1e-10 && (p[1] - q[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn precision_support_symmetric(x in points(20, 4), thr in 0.01f64..1.0) {
        let s = precision_support(&x, thr).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                prop_assert_eq!(s[i][j], s[j][i]);
            }
        }
    }
}
