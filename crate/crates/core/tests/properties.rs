use holoq::biorth::{build_frame, expand, pseudo_norm, reconstruct, FrameOptions};
use holoq::geometry::{link, phase_distance};
use holoq::linalg::{eigen_2x2, eigen_general, multiplicity_report, CMatrix, C64};
use holoq::models::ModelHandle;
use proptest::prelude::*;

fn c64() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn matrix(n: usize) -> impl Strategy<Value = CMatrix> {
    prop::collection::vec(c64(), n * n).prop_map(move |v| CMatrix::from_vec(n, v).unwrap())
}

fn nonzero() -> impl Strategy<Value = C64> {
    (0.2..5.0f64, 0.0..std::f64::consts::TAU).prop_map(|(m, a)| C64::from_polar(m, a))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn algebraic_multiplicities_sum_to_dimension(n in 1usize..6, seed in matrix(5)) {
        let data: Vec<C64> = seed.as_slice().iter().copied().cycle().take(n * n).collect();
        let m = CMatrix::from_vec(n, data).unwrap();
        let rep = multiplicity_report(&m, 1e-8, 1e-10).unwrap();
        prop_assert_eq!(rep.clusters.iter().map(|c| c.eta).sum::<usize>(), n);
        for c in &rep.clusters {
            prop_assert!(c.zeta >= 1 && c.zeta <= c.eta);
        }
    }

    #[test]
    fn two_by_two_fast_path_matches_general(m in matrix(2)) {
        let fast = eigen_2x2(&m);
        let general = eigen_general(&m).unwrap();
        let mut a = fast.values.clone();
        let mut b = general.values.clone();
        let key = |z: &C64| (z.re, z.im);
        a.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        b.sort_by(|x, y| key(x).partial_cmp(&key(y)).unwrap());
        let scale = 1.0 + m.frobenius_norm();
        for (x, y) in a.iter().zip(&b) {
            // Near-degenerate pairs split as sqrt(eps), so compare loosely there.
            prop_assert!((x - y).norm() < 1e-6 * scale, "{} vs {}", x, y);
        }
    }

    #[test]
    fn frames_reconstruct_states(m in matrix(3), psi in prop::collection::vec(c64(), 3)) {
        let Ok(frame) = build_frame(&m, &FrameOptions::default()) else { return Ok(()); };
        prop_assume!(frame.min_gap() > 1e-3);
        let e = expand(&frame, &psi).unwrap();
        let back = reconstruct(&frame, &e.contravariant);
        let err: f64 = back.iter().zip(&psi).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-8 * (1.0 + frame.metric().max_abs()), "reconstruction error {}", err);
        let pn = pseudo_norm(&frame, &psi).unwrap();
        let direct: f64 = e.contravariant.iter().map(|c| c.norm_sqr()).sum();
        prop_assert!((pn - direct).abs() < 1e-8 * (1.0 + direct));
    }

    #[test]
    fn triangle_phase_is_gauge_invariant(
        p in prop::array::uniform3(-0.3..0.3f64),
        f in prop::array::uniform3(nonzero()),
    ) {
        let model = ModelHandle::bdg();
        let pts = [[p[0], p[1], 1.0], [p[0] + 0.05, p[1], 1.0], [p[0], p[1] + 0.05, 1.02]];
        let frames: Vec<_> =
            pts.iter().map(|r| build_frame(&model.hamiltonian(r), &FrameOptions::default()).unwrap()).collect();
        let moved: Vec<_> = frames.iter().zip(f).map(|(fr, g)| fr.with_band_gauge(0, g).unwrap()).collect();
        let loop_sum = |fs: &[holoq::biorth::BiorthFrame]| {
            C64::i() * (link(&fs[0], &fs[1], 0) + link(&fs[1], &fs[2], 0) + link(&fs[2], &fs[0], 0))
        };
        prop_assert!(phase_distance(loop_sum(&frames), loop_sum(&moved)) < 1e-10);
    }
}
