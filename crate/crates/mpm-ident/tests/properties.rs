//! Property tests over randomized inputs: decomposition identities,
//! transform bijectivity, flow-file round-trips.

use proptest::prelude::*;

use mpm_ident::constitutive::ParamKey;
use mpm_ident::flow::{read_flo, write_flo, FlowField};
use mpm_ident::identify::transform;
use mpm_ident::math::{rotation_from_axis_angle, svd3, Mat3, Scalar, Vec3};

fn finite_entry() -> impl Strategy<Value = f64> {
    prop_oneof![
        -3.0..3.0f64,
        -0.1..0.1f64,
        Just(0.0),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// U Σ Vᵀ reconstructs the input within 1e-8 relative Frobenius error,
    /// with proper rotations and descending singular values.
    #[test]
    fn svd_reconstructs_random_matrices(
        entries in proptest::array::uniform9(finite_entry())
    ) {
        let m = Mat3::from_rows(
            [entries[0], entries[1], entries[2]],
            [entries[3], entries[4], entries[5]],
            [entries[6], entries[7], entries[8]],
        );
        let svd = svd3(&m).unwrap();
        let rec = svd.reconstruct();
        let scale = m.frobenius_norm().val.max(1e-12);
        let err = (rec - m).frobenius_norm().val;
        prop_assert!(err / scale < 1e-8, "reconstruction error {}", err / scale);

        let s = svd.sigma;
        prop_assert!(s.x.val >= s.y.val && s.y.val >= s.z.val);
        for u in [&svd.u, &svd.v] {
            let det = u.determinant().val;
            prop_assert!((det - 1.0).abs() < 1e-8, "det {det}");
        }
    }

    /// Composed stretches and rotations with condition numbers up to 1e6
    /// still reconstruct.
    #[test]
    fn svd_handles_wide_condition_range(
        angle1 in -3.0..3.0f64,
        angle2 in -3.0..3.0f64,
        log_smin in -6.0..0.0f64,
        smax in 0.5..4.0f64,
    ) {
        let r1 = rotation_from_axis_angle([0.3, 1.0, -0.2], angle1);
        let r2 = rotation_from_axis_angle([-0.8, 0.1, 0.5], angle2);
        let smin = smax * 10f64.powf(log_smin);
        let d = Mat3::from_diag(Vec3::from_f64(smax, (smax + smin) / 2.0, smin));
        let m = r1 * d * r2;
        let svd = svd3(&m).unwrap();
        let err = (svd.reconstruct() - m).frobenius_norm().val;
        prop_assert!(err / m.frobenius_norm().val < 1e-8);
    }

    /// Unconstrained transforms are bijections: round trips land within
    /// 1e-12 relative and outputs always satisfy the physical bounds.
    #[test]
    fn transforms_round_trip(
        log_value in -4.0..8.0f64,
        nu in 0.001..0.499f64,
        theta in 0.5..89.5f64,
    ) {
        for key in [ParamKey::Young, ParamKey::Eta, ParamKey::Mu, ParamKey::Kappa, ParamKey::YieldStress] {
            let x = 10f64.powf(log_value);
            let back = transform::from_unconstrained(key, transform::to_unconstrained(key, x));
            prop_assert!(((back - x) / x).abs() < 1e-12);
        }
        let back = transform::from_unconstrained(
            ParamKey::Poisson,
            transform::to_unconstrained(ParamKey::Poisson, nu),
        );
        prop_assert!((back - nu).abs() < 1e-12 * nu.max(1e-3));
        prop_assert!(back > 0.0 && back < 0.5);

        let back = transform::from_unconstrained(
            ParamKey::FrictionAngle,
            transform::to_unconstrained(ParamKey::FrictionAngle, theta),
        );
        prop_assert!(((back - theta) / theta).abs() < 1e-12);
        prop_assert!(back > 0.0 && back < 90.0);
    }

    /// Writing then reading a .flo file preserves every stored value and the
    /// validity mask bit for bit (values are f32 by format).
    #[test]
    fn flo_round_trip_preserves_fields(
        w in 1usize..12,
        h in 1usize..12,
        seed in any::<u32>(),
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.flo");
        let mut field = FlowField::new(w, h);
        let mut s = seed as u64 + 1;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 40) as f32 / 1024.0 - 8.0
        };
        for idx in 0..w * h {
            if idx % 3 != 2 {
                field.u[idx] = Scalar::new(next() as f64);
                field.v[idx] = Scalar::new(next() as f64);
                field.valid[idx] = true;
            }
        }
        write_flo(&field, &path).unwrap();
        let back = read_flo(&path).unwrap();
        prop_assert_eq!(back.width, w);
        prop_assert_eq!(back.height, h);
        prop_assert_eq!(&back.valid, &field.valid);
        for idx in 0..w * h {
            prop_assert_eq!(back.u[idx].val, field.u[idx].val);
            prop_assert_eq!(back.v[idx].val, field.v[idx].val);
        }
    }
}
