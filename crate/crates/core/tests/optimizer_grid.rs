//! The canonical non-convex objective: a mid-campaign deal (20 clicks
//! banked, 5 still required, 3000 visits left, ctr 0.002, payout 15)
//! against a single uniform[0, 0.1] competitor. The expected profit over
//! the bid axis has a boundary maximum at zero bid and an interior one near
//! 0.0774, so any local method seeded badly parks at the wrong hill.

use dealbid_core::{
    bid_objective, multi_start_maximize, BidBounds, Deal, OptimizerConfig, PaymentModel,
    StateSnapshot, SumMode, WinModel,
};

fn canonical_objective() -> impl Fn(f64) -> f64 {
    let deal = Deal::new(25, 3000, 15.0, 0.002).unwrap();
    let win = WinModel::uniform(0.0, 0.1, 2).unwrap();
    let snap = StateSnapshot { clicks: 20, remaining_required: 5, remaining_visits: 3000 };
    move |b: f64| bid_objective(&deal, snap, b, &win, &PaymentModel::FirstPrice, SumMode::Exact)
}

fn strict_local_maxima(values: &[f64]) -> Vec<usize> {
    (0..values.len())
        .filter(|&i| {
            (i == 0 || values[i] > values[i - 1])
                && (i == values.len() - 1 || values[i] > values[i + 1])
        })
        .collect()
}

#[test]
fn canonical_objective_has_two_strict_local_maxima() {
    let f = canonical_objective();
    let grid: Vec<f64> = (0..1000).map(|i| 0.1 * i as f64 / 999.0).collect();
    let values: Vec<f64> = grid.iter().map(|&b| f(b)).collect();

    let maxima = strict_local_maxima(&values);
    assert_eq!(maxima, vec![0, 773], "expected a boundary and an interior maximum");
    assert_eq!(values[0], 0.0);
    assert!((grid[773] - 0.07737737737737738).abs() < 1e-15);
    assert!((values[773] - 16.267221134888217).abs() < 1e-9 * 16.27);

    // The valley between the two hills is deep: descent from the interior
    // optimum cannot reach the boundary hill and vice versa.
    let trough = values
        .iter()
        .skip(1)
        .take(700)
        .cloned()
        .fold(f64::INFINITY, f64::min);
    assert!(trough < -2.0);
}

#[test]
fn multi_start_beats_the_dense_grid() {
    let f = canonical_objective();
    let bounds = BidBounds::new(0.0, 0.1).unwrap();
    let cfg = OptimizerConfig::default();

    let dense_max = (0..=10_000)
        .map(|i| f(0.1 * i as f64 / 10_000.0))
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((dense_max - 16.267228408780483).abs() < 1e-9 * dense_max);

    let starts: Vec<f64> = (0..8).map(|i| 0.1 * (i as f64 + 0.5) / 8.0).collect();
    let mut g = |b: f64| f(b);
    let (best_bid, best_val) = multi_start_maximize(&mut g, bounds, &starts, &cfg).unwrap();
    assert!(
        best_val >= dense_max - (1e-6 * dense_max.abs()).max(1e-8),
        "multi-start {best_val} fell below dense grid {dense_max}"
    );
    assert!((best_bid - 0.0774).abs() < 1e-3);
}

#[test]
fn single_start_in_the_wrong_basin_stalls_at_the_boundary_hill() {
    let f = canonical_objective();
    let bounds = BidBounds::new(0.0, 0.1).unwrap();
    let cfg = OptimizerConfig::default();

    // All starts in the left basin: the optimizer converges to the zero-bid
    // hill, missing ~16.3 of value. This is the failure multi-start exists
    // to prevent, so it must be observable.
    let mut g = |b: f64| f(b);
    let (_, stuck) = multi_start_maximize(&mut g, bounds, &[0.005], &cfg).unwrap();
    assert!(stuck <= 1e-6, "left-basin start unexpectedly escaped: {stuck}");
}

#[test]
fn multi_start_matches_dense_grids_on_randomized_instances() {
    let cfg = OptimizerConfig::default();
    let mut rng = dealbid_core::rng::stream(77, &["grid-instances"]);
    use rand::Rng;

    for case in 0..40 {
        let m = rng.random_range(0..=30u64);
        let u = rng.random_range(200..=5000u64);
        let ctr = rng.random_range(0.001..0.05);
        let rho = rng.random_range(0.5..20.0);
        let n = rng.random_range(2..=5u32);
        let hi = rng.random_range(0.02..0.15);
        let clicks = rng.random_range(0..=m);

        let deal = Deal::new(m, u, rho, ctr).unwrap();
        let win = WinModel::uniform(0.0, hi, n).unwrap();
        let snap = StateSnapshot {
            clicks,
            remaining_required: m - clicks,
            remaining_visits: u,
        };
        let f = |b: f64| {
            bid_objective(&deal, snap, b, &win, &PaymentModel::FirstPrice, SumMode::Auto)
        };
        let bounds = win.bid_bounds().unwrap();
        let grid_max = (0..=10_000)
            .map(|i| f(bounds.lo() + bounds.width() * i as f64 / 10_000.0))
            .fold(f64::NEG_INFINITY, f64::max);

        let starts: Vec<f64> = (0..8)
            .map(|_| rng.random_range(bounds.lo()..=bounds.hi()))
            .collect();
        let mut g = |b: f64| f(b);
        let (_, best) = multi_start_maximize(&mut g, bounds, &starts, &cfg).unwrap();
        assert!(
            best >= grid_max - (1e-6 * grid_max.abs()).max(1e-8),
            "case {case}: multi-start {best} below grid {grid_max} \
             (m={m} u={u} ctr={ctr} rho={rho} n={n} hi={hi})"
        );
    }
}
