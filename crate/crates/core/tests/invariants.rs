//! Property tests on the public API: privacy bounds, determinism, domain
//! constraints and precision agreement.

use ldp_drift::diffusion_sim::{simulate_panel, SimulationOptions, TimeGrid};
use ldp_drift::estimator::{estimate, v_n_at, EstimateOptions, ThetaGrid};
use ldp_drift::model::SeparableModel;
use ldp_drift::privacy::{
    privatize, privatize_aggregate, verify_ldp_views, ChannelParams, ClipKind, ClipProfile, NoiseMode, PrivacyBudget,
};
use ldp_drift::spline::hermite_interpolate;
use ldp_drift::{KnotVector32, KnotVector64};
use proptest::prelude::*;

fn params(steps: usize, grid_len: usize, a: usize, alpha: f64, noise: NoiseMode, shift: f64) -> ChannelParams {
    ChannelParams::new(
        ThetaGrid::new(grid_len, shift).unwrap(),
        a,
        PrivacyBudget::constant(steps, alpha).unwrap(),
        ClipProfile::new(ClipKind::Smooth, 1.0 / steps as f64, steps).unwrap(),
        noise,
    )
    .unwrap()
}

fn clip_kind() -> impl Strategy<Value = ClipKind> {
    prop_oneof![Just(ClipKind::Smooth), Just(ClipKind::Hard)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn clipped_values_are_bounded_odd_and_exact_inside(kind in clip_kind(), tau in 0.01f64..5.0, x in -50.0f64..50.0) {
        let c = ClipProfile::with_tau(kind, tau).unwrap();
        let y = c.apply(x);
        prop_assert!(y.abs() <= c.sup() + 1e-15);
        prop_assert_eq!(c.apply(-x), -y);
        if x.abs() <= tau {
            prop_assert_eq!(y, x);
        }
    }

    #[test]
    fn log_ratio_never_exceeds_the_budget(
        alphas in prop::collection::vec(0.05f64..20.0, 1..6),
        grid_len in 2usize..6,
        a in 1usize..4,
        raw in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 20),
    ) {
        let steps = alphas.len();
        let p = ChannelParams::new(
            ThetaGrid::deterministic(grid_len).unwrap(),
            a,
            PrivacyBudget::new(alphas.clone()).unwrap(),
            ClipProfile::new(ClipKind::Smooth, 1.0 / steps as f64, steps.max(2)).unwrap(),
            NoiseMode::PerCell,
        )
        .unwrap();
        let w = p.width();
        let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..4)
            .map(|r| {
                let cell = |f: fn(&(f64, f64)) -> f64| (0..w).map(|i| f(&raw[(r * 5 + i) % raw.len()])).collect();
                (cell(|t| t.0), cell(|t| t.1))
            })
            .collect();
        let worst = verify_ldp_views(&p, &pairs).unwrap();
        for (w, alpha) in worst.iter().zip(&alphas) {
            prop_assert!(*w <= alpha + 1e-12, "{w} > {alpha}");
        }
    }

    #[test]
    fn v_n_is_nonnegative_and_vanishes_on_the_grid(len in 2usize..12, shift in 0.0f64..1.0, a in 1usize..5, u in 0.0f64..1.0) {
        let g = ThetaGrid::new(len, shift).unwrap();
        let (lo, hi) = g.domain();
        let theta = lo + u * (hi - lo);
        prop_assert!(v_n_at(theta, &g, a).unwrap() >= 0.0);
        let l = (u * (len - 1) as f64).floor() as usize;
        prop_assert!(v_n_at(g.point(l), &g, a).unwrap().abs() < 1e-12);
    }

    #[test]
    fn f32_interpolant_tracks_f64(a in 1usize..4, lambda in 1usize..6, coeffs in prop::collection::vec(-2.0f64..2.0, 4), x in 0.0f64..1.0) {
        let k64 = KnotVector64::new(a, lambda, 0.0, 1.0 / lambda as f64).unwrap();
        let k32 = KnotVector32::new(a, lambda, 0.0, 1.0 / lambda as f32).unwrap();
        // data of a cubic: values and derivatives at every knot
        let poly = |t: f64, k: usize| -> f64 {
            let d: [f64; 4] = match k {
                0 => [coeffs[0], coeffs[1] * t, coeffs[2] * t * t, coeffs[3] * t * t * t],
                1 => [0.0, coeffs[1], 2.0 * coeffs[2] * t, 3.0 * coeffs[3] * t * t],
                2 => [0.0, 0.0, 2.0 * coeffs[2], 6.0 * coeffs[3] * t],
                3 => [0.0, 0.0, 0.0, 6.0 * coeffs[3]],
                _ => [0.0; 4],
            };
            d.iter().sum()
        };
        let data: Vec<f64> = k64.points().iter().flat_map(|&t| (0..=a).map(move |k| poly(t, k))).collect();
        let s64 = hermite_interpolate(&data, &k64).unwrap();
        let data32: Vec<f32> = data.iter().map(|&v| v as f32).collect();
        let s32 = hermite_interpolate(&data32, &k32).unwrap();
        prop_assert!((s64.eval(x) - s32.eval(x as f32) as f64).abs() < 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn estimate_is_deterministic_and_stays_in_the_domain(seed in any::<u64>(), shift in 0.0f64..1.0, alpha in 0.2f64..20.0) {
        let model = SeparableModel::sine();
        let grid = TimeGrid::new(1.0, 40).unwrap();
        let panel = simulate_panel(&model, 0.5, 50, grid, &SimulationOptions::default(), seed).unwrap();
        let p = params(40, 5, 2, alpha, NoiseMode::AggregateInLaw, shift);
        let opts = EstimateOptions::default();
        let first = estimate(&panel, &model, &p, &opts, seed).unwrap();
        let again = estimate(&panel, &model, &p, &opts, seed).unwrap();
        prop_assert_eq!(first.theta_hat, again.theta_hat);
        let (lo, hi) = p.grid.domain();
        prop_assert!(first.theta_hat >= lo && first.theta_hat <= hi);
    }

    #[test]
    fn simulated_paths_do_not_depend_on_the_panel_size(seed in any::<u64>(), small in 1usize..10, extra in 1usize..10) {
        let model = SeparableModel::sine();
        let grid = TimeGrid::new(2.0, 25).unwrap();
        let opts = SimulationOptions::default();
        let a = simulate_panel(&model, 0.3, small, grid, &opts, seed).unwrap();
        let b = simulate_panel(&model, 0.3, small + extra, grid, &opts, seed).unwrap();
        for i in 0..small {
            prop_assert_eq!(a.path(i), b.path(i));
        }
    }

    #[test]
    fn streamed_aggregate_matches_the_full_release(seed in any::<u64>(), alpha in 0.5f64..5.0) {
        let model = SeparableModel::tanh();
        let grid = TimeGrid::new(1.0, 20).unwrap();
        let panel = simulate_panel(&model, 0.5, 15, grid, &SimulationOptions::default(), seed).unwrap();
        let p = params(20, 4, 2, alpha, NoiseMode::PerCell, 0.0);
        let full = privatize(&panel, &model, &p, seed).unwrap().aggregate();
        let streamed = privatize_aggregate(&panel, &model, &p, seed).unwrap();
        for (x, y) in full.sums.iter().zip(&streamed.sums) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn grid_points_locate_to_themselves() {
    for len in 2..40 {
        for s in 0..200 {
            let g = ThetaGrid::new(len, s as f64 / 200.0).unwrap();
            for l in 0..len {
                assert_eq!(g.locate(g.point(l)).unwrap(), l, "len {len} shift {s} l {l}");
            }
        }
    }
}

#[test]
fn estimate_at_the_upper_domain_edge_is_clamped() {
    let model = SeparableModel::sine();
    let grid = TimeGrid::new(1.0, 40).unwrap();
    let seed = 5132570907111463491;
    let panel = simulate_panel(&model, 0.5, 50, grid, &SimulationOptions::default(), seed).unwrap();
    let p = params(40, 5, 2, 2.368102582833081, NoiseMode::AggregateInLaw, 0.6802355539207501);
    let hat = estimate(&panel, &model, &p, &EstimateOptions::default(), seed).unwrap().theta_hat;
    let (lo, hi) = p.grid.domain();
    assert!((lo..=hi).contains(&hat), "{hat} outside [{lo}, {hi}]");
}
