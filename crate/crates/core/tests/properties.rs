use nalgebra::Matrix2;
use nogo_core::channels::{canonical_form, compose, validate, GaussianChannel};
use nogo_core::entanglement::{entanglement_degradation, nu_minus, partial_transpose};
use nogo_core::gecc::{degradation_of_code, GECCode};
use nogo_core::search::{search, SearchConfig, SearchMethod};
use nogo_core::symplectic::{
    apply_symplectic, partial_trace, random_symplectic, symplectic_eigenvalues_general, tensor, tmsv_covariance,
    CovarianceMatrix,
};
use proptest::prelude::*;

/// Thermal product state pushed through a random symplectic.
fn state(n: usize, v: f64, r_max: f64, seed: u64) -> CovarianceMatrix {
    let thermal = CovarianceMatrix::thermal(n, v).unwrap();
    apply_symplectic(&random_symplectic(n, r_max, seed).unwrap(), &thermal).unwrap()
}

fn scale(g: &CovarianceMatrix) -> f64 {
    g.matrix().abs().max().max(1.0)
}

prop_compose! {
    /// Completely positive channel: `N` rotated with eigenvalues whose
    /// product is at least `(det M - 1)^2`.
    fn channel()(
        m in prop::array::uniform4(-1.5f64..1.5),
        tilt in -1.0f64..1.0,
        slack in 0.0f64..1.0,
        theta in 0.0f64..std::f64::consts::PI,
        offset in 0.0f64..0.5,
    ) -> GaussianChannel {
        let m = Matrix2::new(m[0], m[1], m[2], m[3]);
        let floor = (m.determinant() - 1.0).abs() + offset;
        let (a, b) = (floor * tilt.exp(), floor * (-tilt).exp() * (1.0 + slack));
        let rot = Matrix2::new(theta.cos(), -theta.sin(), theta.sin(), theta.cos());
        let n = rot * Matrix2::new(a, 0.0, 0.0, b) * rot.transpose();
        GaussianChannel::new(m, (n + n.transpose()) * 0.5).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symplectic_action_preserves_physicality(n in 1usize..4, v in 1.0f64..5.0, seed: u64, seed2: u64) {
        let g = state(n, v, 1.0, seed);
        prop_assert!(g.is_physical());
        let h = apply_symplectic(&random_symplectic(n, 1.0, seed2).unwrap(), &g).unwrap();
        prop_assert!(h.is_physical());
    }

    #[test]
    fn symplectic_eigenvalues_are_invariant(n in 1usize..4, v in 1.0f64..5.0, seed: u64, seed2: u64) {
        let g = state(n, v, 1.0, seed);
        let h = apply_symplectic(&random_symplectic(n, 1.0, seed2).unwrap(), &g).unwrap();
        let a = g.symplectic_eigenvalues().unwrap();
        let b = h.symplectic_eigenvalues().unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-8 * scale(&h), "{a:?} vs {b:?}");
            prop_assert!((x - v).abs() < 1e-8 * scale(&h));
        }
    }

    #[test]
    fn tensor_and_partial_trace_preserve_physicality(v in 1.0f64..3.0, seed: u64, seed2: u64, keep in 0usize..3) {
        let joint = tensor(&state(2, v, 0.8, seed), &state(1, v, 0.8, seed2));
        prop_assert!(joint.is_physical());
        let reduced = partial_trace(&joint, &[keep]).unwrap();
        prop_assert!(reduced.is_physical());
        prop_assert_eq!(reduced.matrix(), &joint.matrix().view((2 * keep, 2 * keep), (2, 2)).into_owned());
    }

    #[test]
    fn channels_preserve_physicality(t in channel(), r in 0.0f64..3.0) {
        let out = t.apply(&tmsv_covariance(r).unwrap(), 1).unwrap();
        prop_assert!(out.min_physical_eigenvalue() > -1e-9 * scale(&out));
    }

    #[test]
    fn composition_stays_completely_positive(a in channel(), b in channel()) {
        let c = compose(&b, &a);
        let report = validate(c.m(), c.n());
        prop_assert!(report.is_valid(), "{report:?}");
    }

    #[test]
    fn canonical_form_preserves_determinants(t in channel()) {
        let cf = canonical_form(&t).unwrap();
        let p = &cf.channel_prime;
        let tol = 1e-9 * t.m().abs().max().max(t.n().abs().max()).powi(2).max(1.0);
        prop_assert!((p.det_m() - t.det_m()).abs() < tol);
        prop_assert!((p.det_n() - t.det_n()).abs() < tol * t.det_n().max(1.0));
        prop_assert!((cf.reconstructed_m(&t) - p.m()).abs().max() < 1e-9 * t.m().abs().max().max(1.0));
        let (d0, d1) = (entanglement_degradation(&t).unwrap().d, entanglement_degradation(p).unwrap().d);
        prop_assert!((d0 - d1).abs() < 1e-8);
    }

    #[test]
    fn closed_form_nu_minus_matches_general_solver(v1 in 1.0f64..4.0, v2 in 1.0f64..4.0, seed: u64) {
        let g = tensor(&CovarianceMatrix::thermal(1, v1).unwrap(), &CovarianceMatrix::thermal(1, v2).unwrap());
        let g = apply_symplectic(&random_symplectic(2, 1.5, seed).unwrap(), &g).unwrap();
        let general = symplectic_eigenvalues_general(&partial_transpose(g.matrix()).unwrap())
            .unwrap()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        prop_assert!((nu_minus(&g).unwrap() - general).abs() < 1e-8 * general.max(1.0));
    }

    #[test]
    fn no_code_lowers_degradation(t in channel(), n in 1usize..4, seed: u64) {
        let code = GECCode::new(
            random_symplectic(n, 1.5, seed).unwrap(),
            random_symplectic(n, 1.5, seed.wrapping_add(1)).unwrap(),
        ).unwrap();
        let base = entanglement_degradation(&t).unwrap().d;
        if let Ok(d) = degradation_of_code(&code, &t) {
            prop_assert!(d >= base - 1e-6, "D_GC = {d} < D = {base}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn search_is_deterministic(t in channel(), seed: u64, nm: bool) {
        let method = if nm { SearchMethod::NelderMeadMultistart } else { SearchMethod::Random };
        let cfg = SearchConfig::new(2, 60, seed, method);
        let a = search(&t, &cfg).unwrap();
        let b = search(&t, &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(!a.violated);
        prop_assert!(a.evaluations <= 60);
    }
}
