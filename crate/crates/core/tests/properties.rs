//! Randomized invariants across the public API.

use num_complex::Complex64;
use proptest::prelude::*;

use wlp_core::dirac::{dirac_residual, exact_spinors, ExactFamily};
use wlp_core::eisenstein::{eisenstein_lattice, EisensteinParams};
use wlp_core::immersion::{integrate_immersion, PathSpec, PathStyle};
use wlp_core::moebius::{
    apply, compose, inverse, reduce_to_fundamental_domain, FundamentalDomainSpec, MoebiusMap,
    UpperHalfPoint,
};
use wlp_core::specfun::{gamma, zeta};
use wlp_core::Grid;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Random modular-group element as a word in the generators.
fn gamma_strategy() -> impl Strategy<Value = MoebiusMap> {
    prop::collection::vec(0u8..3, 0..8).prop_map(|word| {
        let gens = [
            MoebiusMap::translation(),
            inverse(&MoebiusMap::translation()),
            MoebiusMap::inversion(),
        ];
        word.iter()
            .fold(MoebiusMap::identity(), |acc, &g| compose(&acc, &gens[g as usize]))
    })
}

fn point_strategy() -> impl Strategy<Value = UpperHalfPoint> {
    ((-3.0..3.0f64), (0.05..4.0f64))
        .prop_map(|(x, y)| UpperHalfPoint::new(x, y).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moebius_maps_preserve_the_upper_half_plane(
        g in gamma_strategy(),
        z in point_strategy(),
    ) {
        let w = apply(&g, &z);
        prop_assert!(w.y() > 0.0);
        // round trip through the inverse returns to z
        let back = apply(&inverse(&g), &w);
        let scale = z.x().abs().max(z.y()).max(1.0);
        prop_assert!((back.x() - z.x()).abs() < 1e-9 * scale);
        prop_assert!((back.y() - z.y()).abs() < 1e-9 * scale);
    }

    #[test]
    fn composition_is_associative(
        g1 in gamma_strategy(),
        g2 in gamma_strategy(),
        g3 in gamma_strategy(),
    ) {
        let lhs = compose(&compose(&g1, &g2), &g3);
        let rhs = compose(&g1, &compose(&g2, &g3));
        // sign-normalized entries, so equality is entrywise
        prop_assert!((lhs.a - rhs.a).abs() < 1e-9);
        prop_assert!((lhs.b - rhs.b).abs() < 1e-9);
        prop_assert!((lhs.c - rhs.c).abs() < 1e-9);
        prop_assert!((lhs.d - rhs.d).abs() < 1e-9);
    }

    #[test]
    fn reduction_lands_in_the_domain_and_gamma_realizes_it(z in point_strategy()) {
        let spec = FundamentalDomainSpec::modular_standard(5.0).unwrap();
        let (w, g) = reduce_to_fundamental_domain(&z).unwrap();
        prop_assert!(spec.contains(&w, 1e-9) || w.y() >= 1.0);
        prop_assert!(w.x().abs() <= 0.5 + 1e-9);
        prop_assert!(w.x() * w.x() + w.y() * w.y() >= 1.0 - 1e-9);
        let moved = apply(&g, &z);
        let scale = w.y().max(1.0);
        prop_assert!((moved.x() - w.x()).abs() < 1e-9 * scale);
        prop_assert!((moved.y() - w.y()).abs() < 1e-9 * scale);
        // reduction is idempotent up to roundoff
        let (w2, _) = reduce_to_fundamental_domain(&w).unwrap();
        prop_assert!((w2.y() - w.y()).abs() < 1e-9 * scale);
    }

    #[test]
    fn exact_families_solve_the_dirac_system(
        re in -1.0..1.0f64,
        im in -1.0..1.0f64,
        power in 0u32..3,
        u0 in 0.3..1.5f64,
    ) {
        prop_assume!(re * re + im * im > 0.01);
        let grid = Grid::new(0.0, 0.0, 24, 24, 1.0 / 23.0).unwrap();
        for fam in [
            ExactFamily::ZeroUHolo { coeff: c(re, im), power },
            ExactFamily::ZeroUAntiholo { coeff: c(re, im), power },
            ExactFamily::ConstUExponential {
                u0,
                lambda: c(1.0, 0.0),
                amplitude: c(re, im),
            },
        ] {
            let (sp, u) = exact_spinors(fam, grid.clone()).unwrap();
            let (r1, r2) = dirac_residual(&sp, &u).unwrap();
            let scale = sp.psi.max_abs().max(sp.phi.max_abs()).max(1e-6);
            prop_assert!(r1.max(r2) < 5e-2 * scale, "residual {r1:e}/{r2:e}");
        }
    }

    #[test]
    fn immersion_is_translation_equivariant_in_basepoint(
        re in -1.0..1.0f64,
        im in -1.0..1.0f64,
    ) {
        prop_assume!(re * re + im * im > 0.01);
        let grid = Grid::new(0.0, 0.0, 17, 17, 1.0 / 16.0).unwrap();
        let (sp, _) = exact_spinors(
            ExactFamily::ConstUExponential {
                u0: 1.0,
                lambda: c(1.0, 0.0),
                amplitude: c(re, im),
            },
            grid,
        )
        .unwrap();
        let s0 = integrate_immersion(&sp, &PathSpec::new((0, 0), PathStyle::XThenY)).unwrap();
        let s1 = integrate_immersion(&sp, &PathSpec::new((5, 7), PathStyle::XThenY)).unwrap();
        // same surface, rigidly translated: differences are constant
        let k0 = s0.grid.idx(3, 3);
        let (t1, t2, t3) = (
            s0.x1.samples[k0] - s1.x1.samples[k0],
            s0.x2.samples[k0] - s1.x2.samples[k0],
            s0.x3.samples[k0] - s1.x3.samples[k0],
        );
        for k in 0..s0.grid.len() {
            prop_assert!((s0.x1.samples[k] - s1.x1.samples[k] - t1).abs() < 1e-7);
            prop_assert!((s0.x2.samples[k] - s1.x2.samples[k] - t2).abs() < 1e-7);
            prop_assert!((s0.x3.samples[k] - s1.x3.samples[k] - t3).abs() < 1e-7);
        }
    }

    #[test]
    fn gamma_satisfies_the_recurrence(re in 0.5..4.0f64, im in -3.0..3.0f64) {
        let s = c(re, im);
        let lhs = gamma(s + 1.0).unwrap().value;
        let rhs = s * gamma(s).unwrap().value;
        prop_assert!((lhs - rhs).norm() < 1e-10 * rhs.norm().max(1.0));
    }

    #[test]
    fn zeta_matches_a_brute_force_sum(re in 1.8..4.0f64, im in -2.0..2.0f64) {
        let s = c(re, im);
        let fast = zeta(s).unwrap().value;
        // direct Dirichlet sum with an integral tail bound
        let n = 20_000u64;
        let mut acc = c(0.0, 0.0);
        for k in 1..=n {
            acc += (-s * (k as f64).ln()).exp();
        }
        let tail = (n as f64).powf(1.0 - re) / (re - 1.0);
        prop_assert!((fast - acc).norm() < 2.0 * tail + 1e-12);
    }

    #[test]
    fn parsed_complex_numbers_round_trip(re in -100.0..100.0f64, im in -100.0..100.0f64) {
        let text = if im >= 0.0 {
            format!("{re:e}+{im:e}i")
        } else {
            format!("{re:e}{im:e}i")
        };
        let got = wlp_core::cli::parse_complex(&text).unwrap();
        prop_assert_eq!(got, c(re, im));
    }
}

proptest! {
    // the Eisenstein lattice sum is the slowest oracle; fewer cases
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn eisenstein_lattice_is_translation_invariant(
        x in -0.5..0.5f64,
        y in 0.6..2.0f64,
        sr in 1.3..2.5f64,
    ) {
        let p = EisensteinParams::new(c(sr, 0.0), 60, 8).unwrap();
        let z = UpperHalfPoint::new(x, y).unwrap();
        let zt = UpperHalfPoint::new(x + 1.0, y).unwrap();
        let a = eisenstein_lattice(&z, &p).unwrap();
        let b = eisenstein_lattice(&zt, &p).unwrap();
        prop_assert!(
            (a.value - b.value).norm() <= 1e-12 * a.value.norm().max(1.0),
            "gap {:e}",
            (a.value - b.value).norm()
        );
    }
}
