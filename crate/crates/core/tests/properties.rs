mod common;

use std::f64::consts::PI;

use diffeo_commutators::cohomology::GOLDEN;
use diffeo_commutators::diffeo::c0_distance;
use diffeo_commutators::foliation::{foliation_factors, leaf_preservation_error, split, FoliationSpec};
use diffeo_commutators::fragmentation::{fragment, AnnulusCover, PartitionOfUnity};
use diffeo_commutators::grid::{from_spectral, lift, to_spectral};
use diffeo_commutators::interp::Interp;
use diffeo_commutators::leafwise::{curry, decompose_leafwise, leafwise_herman, uncurry, LeafwiseConfig};
use diffeo_commutators::mobius::{boundary_displacement, mobius_rotation_commutator};
use diffeo_commutators::{
    c1_norm, commutator, compose, herman_map, herman_solve, invert, make_diffeo, solve_cohomological,
    twisted_difference, DisplacementField, GridSpec, HermanConfig, SpectralField, TorusDiffeo,
};
use proptest::prelude::*;

fn herman_cfg() -> HermanConfig {
    HermanConfig {
        tol: 1e-9,
        trust_region: 0.2,
        ..HermanConfig::default()
    }
}

fn circle_map(grid: GridSpec, eps: f64, phase: f64) -> TorusDiffeo {
    make_diffeo(DisplacementField::from_fn(grid, |x| {
        [
            eps * ((2.0 * PI * (x[0] + phase)).sin() + 0.3 * (4.0 * PI * x[0]).cos()),
            0.0,
        ]
    }))
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn compose_with_identity_is_exact(seed in any::<u64>(), c1 in 0.001..0.1f64) {
        let grid = GridSpec::new(2, 32).unwrap();
        let f = common::torus_input(grid, seed, c1);
        let id = TorusDiffeo::identity(grid);
        let (left, right) = (compose(&id, &f).unwrap(), compose(&f, &id).unwrap());
        prop_assert_eq!(left.field(), f.field());
        prop_assert_eq!(right.field(), f.field());
    }

    #[test]
    fn right_inverse_law(seed in any::<u64>(), c1 in 0.001..0.1f64) {
        let grid = GridSpec::new(2, 64).unwrap();
        let f = common::torus_input(grid, seed, c1);
        let e = c0_distance(&compose(&f, &invert(&f).unwrap()).unwrap(), &TorusDiffeo::identity(grid));
        prop_assert!(e < 1e-6, "{}", e);
    }

    #[test]
    fn associativity_within_interpolation(a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let grid = GridSpec::new(2, 64).unwrap();
        let (f, g, h) = (
            common::torus_input(grid, a, 0.02),
            common::torus_input(grid, b, 0.02),
            common::torus_input(grid, c, 0.02),
        );
        let left = compose(&compose(&f, &g).unwrap(), &h).unwrap();
        let right = compose(&f, &compose(&g, &h).unwrap()).unwrap();
        prop_assert!(c0_distance(&left, &right) < 1e-8);
    }

    #[test]
    fn bracket_inverse_law(a in any::<u64>(), b in any::<u64>(), c1 in 0.001..0.05f64) {
        let grid = GridSpec::new(2, 64).unwrap();
        let (g, h) = (common::torus_input(grid, a, c1), common::torus_input(grid, b, c1));
        let prod = compose(&commutator(&g, &h).unwrap(), &commutator(&h, &g).unwrap()).unwrap();
        prop_assert!(c0_distance(&prod, &TorusDiffeo::identity(grid)) < 1e-8);
    }

    #[test]
    fn spectral_round_trip(seed in any::<u64>()) {
        let grid = GridSpec::new(2, 32).unwrap();
        let f = common::torus_input(grid, seed, 0.05);
        let back = from_spectral(&to_spectral(f.field()), grid).unwrap();
        let d = back.axpby(1.0, f.field(), -1.0).unwrap().sup_norm();
        prop_assert!(d < 1e-12);
    }

    #[test]
    fn cohomological_round_trip_and_linearity(a in any::<u64>(), b in any::<u64>(), s in -2.0..2.0f64, l in -1e-3..1e-3f64) {
        let grid = GridSpec::new(2, 64).unwrap();
        let gamma = common::gamma(2);
        let mut x1 = to_spectral(&common::trig_field(grid, a).map(|_, v| [1e-3 * v[0], 1e-3 * v[1]]));
        let mut x2 = to_spectral(&common::trig_field(grid, b).map(|_, v| [1e-3 * v[0], 1e-3 * v[1]]));
        for x in [&mut x1, &mut x2] {
            for c in 0..2 {
                x.component_mut(c)[0] = 0.0.into();
            }
        }
        let y1 = twisted_difference(&x1, &[l, -l], &gamma.gamma);
        let y2 = twisted_difference(&x2, &[0.5 * l, l], &gamma.gamma);
        let s1 = solve_cohomological(&y1, &gamma).unwrap();
        let back = twisted_difference(&s1.x, &s1.lambda, &gamma.gamma);
        prop_assert!(spectral_gap(&back, &y1) < 1e-10);
        prop_assert!((s1.lambda[0] - l).abs() < 1e-10 && (s1.lambda[1] + l).abs() < 1e-10);

        let s2 = solve_cohomological(&y2, &gamma).unwrap();
        let mixed = combine(&y1, s, &y2, 1.0);
        let sm = solve_cohomological(&mixed, &gamma).unwrap();
        prop_assert!(spectral_gap(&sm.x, &combine(&s1.x, s, &s2.x, 1.0)) < 1e-10);
        for c in 0..2 {
            prop_assert!((sm.lambda[c] - (s * s1.lambda[c] + s2.lambda[c])).abs() < 1e-10);
        }
    }

    #[test]
    fn cohomological_translation_equivariance(a in any::<u64>(), d0 in 0.0..1.0f64, d1 in 0.0..1.0f64) {
        let grid = GridSpec::new(2, 64).unwrap();
        let gamma = common::gamma(2);
        let y = to_spectral(&common::trig_field(grid, a).map(|_, v| [1e-3 * v[0], 1e-3 * v[1]]));
        let base = solve_cohomological(&y, &gamma).unwrap();
        let moved = solve_cohomological(&y.shifted(&[d0, d1]), &gamma).unwrap();
        prop_assert!(spectral_gap(&moved.x, &base.x.shifted(&[d0, d1])) < 1e-10);
        for c in 0..2 {
            prop_assert!((moved.lambda[c] - base.lambda[c]).abs() < 1e-10);
        }
    }

    #[test]
    fn herman_solution_recomposes(eps in 1e-4..1e-2f64, phase in 0.0..1.0f64) {
        let grid = GridSpec::new(1, 256).unwrap();
        let f = circle_map(grid, eps, phase);
        let gamma = common::gamma(1);
        let sol = herman_solve(&f, &gamma, &herman_cfg()).unwrap();
        let r = c0_distance(&herman_map(&sol.lambda, &sol.h, &gamma.gamma).unwrap(), &f);
        prop_assert!(r <= 1e-9, "{}", r);
        prop_assert_eq!(r, sol.residual);
        prop_assert!(sol.iterations <= 8);
    }

    #[test]
    fn mobius_bracket_is_boundary_rotation(theta in -0.05..0.05f64) {
        let pair = mobius_rotation_commutator(theta).unwrap();
        let c = pair.commutator();
        let err = (0..400)
            .map(|i| lift(boundary_displacement(&c, i as f64 / 400.0) - theta).abs())
            .fold(0.0, f64::max);
        prop_assert!(err <= 1e-9);
    }

    #[test]
    fn split_reconstructs_and_is_bounded(a in -1.0..1.0f64, b in -1.0..1.0f64, t in 0.0..1.0f64, c in 0.01..0.2f64) {
        let cs = split([a, b], t, c);
        let specs = FoliationSpec::triple(c).unwrap();
        let x: f64 = (0..3).map(|i| cs[i] * specs[i].dh(t)).sum();
        let y: f64 = cs.iter().sum();
        prop_assert!((x - a).abs() < 1e-12 && (y - b).abs() < 1e-12);
        let bound = a.abs() / (2.0 * PI * c);
        prop_assert!(cs[1].abs() <= bound + 1e-15 && cs[2].abs() <= bound + 1e-15);
    }

    #[test]
    fn curry_uncurry_round_trip(seed in any::<u64>(), mu in -2e-3..2e-3f64) {
        let grid = GridSpec::new(2, 64).unwrap();
        let taper = common::annulus_taper();
        let modes = common::random_modes(seed);
        let f = TorusDiffeo::structured(
            DisplacementField::from_fn(grid, |p| {
                let wobble: f64 = modes.iter().map(|&(k, a, ph, _)| a * (2.0 * PI * (k[1] * p[1] + ph)).sin()).sum();
                [0.0, taper.chi(p[0]) * (mu + 5e-4 * wobble)]
            }),
            Interp::default(),
        )
        .unwrap()
        .masked(taper.support());
        let back = uncurry(&curry(&f, 1e-8).unwrap()).unwrap();
        prop_assert!(back.field().component(0).iter().all(|&v| v == 0.0));
        let d = back.field().axpby(1.0, f.field(), -1.0).unwrap().sup_norm();
        prop_assert!(d <= 1e-12);
    }

    #[test]
    fn fragmentation_laws(seed in any::<u64>(), c1 in 0.001..0.05f64) {
        let grid = GridSpec::new(2, 64).unwrap();
        let f = common::torus_input(grid, seed, c1);
        let (cover, pou) = (AnnulusCover::default(), PartitionOfUnity::default());
        let (f1, f2) = fragment(&f, &cover, &pou).unwrap();
        prop_assert!(c0_distance(&compose(&f1, &f2).unwrap(), &f) < 1e-12);
        prop_assert!(f1.first_node_outside(&pou.support(0)).is_none());
        prop_assert!(f2.first_node_outside(&pou.support(1)).is_none());
        prop_assert!(c1_norm(&f1) <= 10.0 * c1_norm(&f) && c1_norm(&f2) <= 10.0 * c1_norm(&f));
    }
}

fn combine(a: &SpectralField, s: f64, b: &SpectralField, t: f64) -> SpectralField {
    let mut out = a.clone();
    for c in 0..a.grid().dim() {
        for (o, (x, y)) in out.component_mut(c).iter_mut().zip(a.component(c).iter().zip(b.component(c))) {
            *o = x * s + y * t;
        }
    }
    out
}

fn spectral_gap(a: &SpectralField, b: &SpectralField) -> f64 {
    let grid = a.grid();
    from_spectral(a, grid)
        .unwrap()
        .axpby(1.0, &from_spectral(b, grid).unwrap(), -1.0)
        .unwrap()
        .sup_norm()
}

#[test]
fn right_inverse_converges_under_doubling() {
    let u = |x: [f64; 2]| {
        [
            0.01 * (2.0 * PI * (x[0] + x[1])).sin(),
            0.008 * (2.0 * PI * x[0]).cos() * (4.0 * PI * x[1]).cos(),
        ]
    };
    // measured against the analytic map, so interpolation error is visible
    let errs: Vec<f64> = [16, 32, 64, 128]
        .iter()
        .map(|&n| {
            let grid = GridSpec::new(2, n).unwrap();
            let inv = invert(&make_diffeo(DisplacementField::from_fn(grid, u)).unwrap()).unwrap();
            (0..grid.len())
                .map(|idx| {
                    let x = grid.point(idx);
                    let v = inv.field().get(idx);
                    let y = [x[0] + v[0], x[1] + v[1]];
                    let uy = u(y);
                    lift(y[0] + uy[0] - x[0]).abs().max(lift(y[1] + uy[1] - x[1]).abs())
                })
                .fold(0.0, f64::max)
        })
        .collect();
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "{errs:?}");
    }
    let order = (errs[1] / errs[3]).log2() / 2.0;
    assert!(order >= 4.0, "order {order}: {errs:?}");
}

#[test]
fn loss_of_derivatives_is_bounded() {
    let grid = GridSpec::new(1, 512).unwrap();
    let gamma = common::gamma(1);
    let s = 4.0;
    let mut y = SpectralField::zeros(grid);
    for k in 1..256i64 {
        let v = (k as f64).powf(-s);
        y.set(0, &[k], v.into()).unwrap();
        y.set(0, &[-k], v.into()).unwrap();
    }
    let sol = solve_cohomological(&y, &gamma).unwrap();
    for k in 1..256i64 {
        let x = sol.x.get(0, &[k]).unwrap().norm();
        let bound = (k as f64).powf(-s + gamma.tau) / gamma.c_emp;
        assert!(x <= bound * (1.0 + 1e-12), "k = {k}: {x} > {bound}");
    }
}

#[test]
fn herman_iterations_shrink_with_eps() {
    let grid = GridSpec::new(1, 256).unwrap();
    let gamma = common::gamma(1);
    let iters: Vec<usize> = (0..10)
        .map(|j| {
            let eps = 1e-2 * (1e-2f64).powf(j as f64 / 9.0);
            herman_solve(&circle_map(grid, eps, 0.1), &gamma, &herman_cfg()).unwrap().iterations
        })
        .collect();
    for w in iters.windows(2) {
        assert!(w[1] <= w[0], "{iters:?}");
    }
    assert!(iters[0] <= 8, "{iters:?}");
}

#[test]
fn herman_dependence_is_lipschitz() {
    let grid = GridSpec::new(1, 256).unwrap();
    let gamma = common::gamma(1);
    let f = circle_map(grid, 1e-3, 0.0);
    let w = DisplacementField::from_fn(grid, |x| [(6.0 * PI * x[0]).cos(), 0.0]);
    let base = herman_solve(&f, &gamma, &herman_cfg()).unwrap();
    let ratios: Vec<f64> = [1e-4, 5e-5, 2.5e-5]
        .iter()
        .map(|&d| {
            let g = make_diffeo(f.field().axpby(1.0, &w, d).unwrap()).unwrap();
            let sol = herman_solve(&g, &gamma, &herman_cfg()).unwrap();
            ((sol.lambda[0] - base.lambda[0]).abs() + c0_distance(&sol.h, &base.h)) / d
        })
        .collect();
    for w in ratios.windows(2) {
        assert!((w[0] - w[1]).abs() <= 0.2 * w[0], "{ratios:?}");
    }
}

#[test]
fn leaves_are_independent() {
    let grid = GridSpec::new(2, 64).unwrap();
    let taper = common::annulus_taper();
    let f = TorusDiffeo::structured(
        DisplacementField::from_fn(grid, |p| [0.0, taper.chi(p[0]) * (1e-3 + 1e-3 * (2.0 * PI * p[1]).sin())]),
        Interp::default(),
    )
    .unwrap()
    .masked(taper.support());
    let family = curry(&f, 1e-8).unwrap();
    let gamma = common::gamma(1);
    let cfg = herman_cfg();
    let together = leafwise_herman(&family, &gamma, &cfg).unwrap();
    for j in (0..family.len()).rev() {
        let leaf = family.leaf(j);
        if leaf.is_identity() {
            continue;
        }
        let alone = herman_solve(leaf, &gamma, &cfg).unwrap();
        assert_eq!(alone.lambda[0], together.lambda[j]);
        assert_eq!(alone.h.field(), together.h[j].field());
    }
}

#[test]
fn leafwise_factors_have_exact_support() {
    let grid = GridSpec::new(2, 128).unwrap();
    let taper = common::annulus_taper();
    let f = TorusDiffeo::structured(
        DisplacementField::from_fn(grid, |p| [0.0, taper.chi(p[0]) * (1e-3 + 5e-4 * (2.0 * PI * p[1]).cos())]),
        Interp::default(),
    )
    .unwrap()
    .masked(taper.support());
    let dec = decompose_leafwise(&f, &common::gamma(1), &LeafwiseConfig::default()).unwrap();
    for spec in [None, Some(FoliationSpec::new(2, 0.04).unwrap())] {
        for (g, h) in dec.pairs(spec.as_ref()).unwrap() {
            for m in [&g, &h] {
                let s = m.support().expect("declared support");
                assert!(m.first_node_outside(&s).is_none());
            }
        }
    }
}

#[test]
fn foliation_factors_stay_in_dilated_support() {
    let grid = GridSpec::new(2, 128).unwrap();
    for seed in 0..3 {
        let f = common::annulus_input(grid, seed, 0.01);
        let dec = foliation_factors(&f, 0.04, 0.02).unwrap();
        let s = dec.factor_support().unwrap();
        for (i, g) in dec.factors.iter().enumerate() {
            assert!(g.first_node_outside(&s).is_none());
            assert!(leaf_preservation_error(g, &FoliationSpec::new(i + 1, 0.04).unwrap()) < 1e-8);
        }
    }
}

#[test]
fn golden_scan_constant_is_positive() {
    let cert = diffeo_commutators::certify_diophantine(&[GOLDEN], 2.0, 2000).unwrap();
    assert!(cert.c_emp > 0.0);
}
