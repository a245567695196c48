mod common;

use common::{brute_force_grid, golden_truth, lattice, oracle_reasonable, oracle_select, parse_plain_csv, rng, OracleCell};
use nestces::grid::select_best;
use nestces::{
    default_init, expand_grid, grid_search, lm_fit, CesParams, FreeMask, GridError, GridOptions, LmOptions, LmOutcome,
    LmStatus, RhoGrid, Scale, Segment, SigmaSource, SsrSurface, SurfaceCell, SurfaceFormat,
};
use proptest::prelude::*;
use rand::Rng;

fn assert_values(got: &[f64], want: &[f64]) {
    assert_eq!(got.len(), want.len(), "{got:?} vs {want:?}");
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 1e-12, "{got:?} vs {want:?}");
    }
}

#[test]
fn documented_expansions() {
    let g = |t: &[(f64, f64, f64)]| expand_grid(&RhoGrid::from_triples(t).unwrap()).unwrap();
    assert_values(&g(&[(0.0, 1.0, 0.5)]), &[0.0, 0.5, 1.0]);
    assert_values(&g(&[(-0.9, 1.25, 0.64)]), &[-0.9, -0.26, 0.38, 1.02]);
    assert_values(&g(&[(-1.0, 1.0, 0.40)]), &[-1.0, -0.6, -0.2, 0.2, 0.6, 1.0]);
}

#[test]
fn presets_match_hand_lattices() {
    let mut v1: Vec<f64> = [(-0.9, 1.25, 0.64), (1.68, 1.72, 0.88), (1.86, 10.0, 0.94)]
        .iter()
        .flat_map(|&(a, b, s)| lattice(a, b, s))
        .collect();
    v1.sort_by(f64::total_cmp);
    assert_eq!(v1.len(), 14);
    assert_values(&expand_grid(&RhoGrid::rho_vec1()).unwrap(), &v1);
    assert_values(
        &v1[4..],
        &[1.68, 1.86, 2.80, 3.74, 4.68, 5.62, 6.56, 7.50, 8.44, 9.38],
    );

    let v2 = expand_grid(&RhoGrid::rho_vec2()).unwrap();
    assert_values(&v2, &[-1.0, -0.6, -0.2, 0.2, 0.6, 1.0, 1.68, 10.0, 10.88]);
}

#[test]
fn overlapping_segments_merge() {
    let g = RhoGrid::from_triples(&[(0.0, 1.0, 0.25), (0.5, 1.5, 0.5), (0.3, 0.3, 1.0)]).unwrap();
    assert_values(&expand_grid(&g).unwrap(), &[0.0, 0.25, 0.3, 0.5, 0.75, 1.0, 1.5]);
}

#[test]
fn segment_validation() {
    assert!(Segment::new(1.0, 0.0, 0.1).is_err());
    assert!(Segment::new(0.0, 1.0, 0.0).is_err());
    assert!(Segment::new(0.0, 1.0, -0.5).is_err());
    assert!(Segment::new(f64::NAN, 1.0, 0.5).is_err());
    assert!(matches!(expand_grid(&RhoGrid::new(vec![])), Err(GridError::EmptyGrid)));
}

fn golden() -> Vec<nestces::Observation> {
    parse_plain_csv(common::golden_csv())
}

#[test]
fn single_cell_is_one_fit() {
    let data = golden();
    let opts = GridOptions::default();
    let res = grid_search(&data, &RhoGrid::single(0.5), &RhoGrid::single(1.2), &opts).unwrap();
    let direct = lm_fit(
        &data,
        &default_init(&data, 0.5, 1.2),
        &FreeMask::shares(),
        Scale::Levels,
        &LmOptions::default(),
    )
    .unwrap();
    assert_eq!(res.best_unconstrained.outcome, direct);
    assert_eq!(res.best_reasonable.as_ref().unwrap().outcome, direct);
    assert_eq!(res.surface.len(), 1);
    assert_eq!(res.surface.cells[0].neg_ssr, Some(-direct.rss));
}

#[test]
fn default_init_matches_mean_ratio() {
    let data = golden();
    let init = default_init(&data, 0.5, 1.2);
    assert_eq!(init, common::cold_init(&data, 0.5, 1.2));
    assert_eq!((init.share_delta, init.share_delta1, init.rho, init.rho1), (0.5, 0.5, 0.5, 1.2));
}

#[test]
fn truth_cell_wins_on_noiseless_fixture() {
    let data = golden();
    let rho = RhoGrid::from_triples(&[(-0.3, 1.3, 0.4)]).unwrap();
    let rho1 = RhoGrid::from_triples(&[(0.4, 2.0, 0.4)]).unwrap();
    let res = grid_search(&data, &rho, &rho1, &GridOptions::default()).unwrap();
    let b = &res.best_unconstrained;
    assert_eq!((b.rho1, b.rho), (1.2, 0.5));
    assert!(b.outcome.rss <= 1e-12);
    let (i, j) = res.surface.argmax().unwrap();
    assert_eq!((res.surface.rho1_values[i], res.surface.rho_values[j]), (1.2, 0.5));
    for c in &res.surface.cells {
        assert!(c.neg_ssr.unwrap() <= 0.0);
    }
}

fn check_against_oracle(data: &[nestces::Observation], rho1: &[f64], rho: &[f64], warm: bool, scale: Scale) {
    let seg = |v: &[f64]| RhoGrid::new(v.iter().map(|&x| Segment::new(x, x, 1.0).unwrap()).collect());
    let opts = GridOptions {
        scale,
        warm_start: warm,
        ..GridOptions::default()
    };
    let res = grid_search(data, &seg(rho), &seg(rho1), &opts).unwrap();
    let cells = brute_force_grid(data, rho1, rho, scale, &LmOptions::default(), warm);
    assert_eq!(cells.len(), res.surface.len());
    for (c, s) in cells.iter().zip(&res.surface.cells) {
        assert_eq!(c.outcome, s.fit);
    }
    let same = |got: &nestces::BestCell, want: &OracleCell| {
        assert_eq!((got.rho1, got.rho), (want.rho1, want.rho));
        assert_eq!(got.outcome.rss.to_bits(), want.outcome.as_ref().unwrap().rss.to_bits());
    };
    same(&res.best_unconstrained, oracle_select(&cells, |_| true).unwrap());
    match (&res.best_reasonable, oracle_select(&cells, |c| oracle_reasonable(c.rho))) {
        (Some(got), Some(want)) => same(got, want),
        (None, None) => {}
        (got, want) => panic!("{got:?} vs {want:?}"),
    }
}

#[test]
fn matches_exhaustive_refit() {
    let mut g = rng(77);
    for round in 0..6 {
        let truth = common::random_params(&mut g, (-0.8, 2.0), (-0.8, 2.0));
        let data = common::noisy_data(&truth, 12, (0.5, 50.0), 0.1, &mut g);
        let mut axis = |n: usize| {
            let mut v: Vec<f64> = (0..n).map(|_| (g.random_range(-0.9f64..3.0) * 100.0).round() / 100.0).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let (rho1, rho) = (axis(5), axis(5));
        let scale = if round % 2 == 0 { Scale::Levels } else { Scale::Logs };
        check_against_oracle(&data, &rho1, &rho, false, scale);
        check_against_oracle(&data, &rho1, &rho, true, scale);
    }
}

#[test]
fn parallel_equals_cold_sequential() {
    let data = common::noisy_data(&golden_truth(), 30, (0.5, 50.0), 0.05, &mut rng(4));
    let grid = RhoGrid::from_triples(&[(-0.5, 1.5, 0.5)]).unwrap();
    let cold = GridOptions {
        warm_start: false,
        ..GridOptions::default()
    };
    let par = GridOptions {
        parallel: true,
        ..GridOptions::default()
    };
    let a = grid_search(&data, &grid, &grid, &cold).unwrap();
    let b = grid_search(&data, &grid, &grid, &par).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.surface.export(SurfaceFormat::LongCsv), b.surface.export(SurfaceFormat::LongCsv));
}

#[test]
fn cold_cells_are_independent() {
    let data = common::noisy_data(&golden_truth(), 30, (0.5, 50.0), 0.05, &mut rng(6));
    let opts = GridOptions {
        warm_start: false,
        ..GridOptions::default()
    };
    let full = grid_search(
        &data,
        &RhoGrid::from_triples(&[(-0.5, 1.5, 0.5)]).unwrap(),
        &RhoGrid::from_triples(&[(0.2, 1.4, 0.4)]).unwrap(),
        &opts,
    )
    .unwrap();
    let s = &full.surface;
    for (i, &r1) in s.rho1_values.iter().enumerate() {
        for (j, &r) in s.rho_values.iter().enumerate() {
            let alone = grid_search(&data, &RhoGrid::single(r), &RhoGrid::single(r1), &opts).unwrap();
            assert_eq!(alone.surface.cells[0], *s.cell(i, j));
        }
    }
}

#[test]
fn sigma_filter_prefers_reasonable_cell() {
    let truth = CesParams::new(2.0, 0.6, 0.4, -0.9, 1.2);
    let data = common::noiseless_data(&truth, 80, (1.0, 5.0), &mut rng(21));
    let rho = RhoGrid::from_triples(&[(-0.9, 1.25, 0.64)]).unwrap();
    let res = grid_search(&data, &rho, &RhoGrid::single(1.2), &GridOptions::default()).unwrap();
    assert_eq!(res.best_unconstrained.rho, -0.9);
    let reasonable = res.best_reasonable.as_ref().unwrap();
    assert!((reasonable.rho - 0.38).abs() < 1e-12);
    assert!(oracle_reasonable(reasonable.rho));

    let cells = brute_force_grid(&data, &[1.2], &res.surface.rho_values, Scale::Levels, &LmOptions::default(), true);
    let want = oracle_select(&cells, |c| oracle_reasonable(c.rho)).unwrap();
    assert_eq!(want.rho, reasonable.rho);

    let inner = GridOptions {
        sigma_source: SigmaSource::Inner,
        ..GridOptions::default()
    };
    let res = grid_search(&data, &rho, &RhoGrid::single(1.2), &inner).unwrap();
    // σ from ρ₁ = 1.2 is reasonable everywhere, so both rules agree
    assert_eq!(res.best_reasonable.unwrap().rho, -0.9);
}

#[test]
fn too_few_observations() {
    let data = &golden()[..3];
    let g = RhoGrid::single(0.5);
    assert!(matches!(
        grid_search(data, &g, &g, &GridOptions::default()),
        Err(GridError::TooFewObservations(3))
    ));
}

fn fake_outcome(rss: f64) -> LmOutcome {
    LmOutcome {
        params: CesParams::new(1.0, 0.5, 0.5, 0.0, 0.0),
        rss,
        iterations: 1,
        status: LmStatus::ConvergedRss,
        rss_trace: vec![rss],
    }
}

fn fake_surface(rho1: Vec<f64>, rho: Vec<f64>, rss: &[Option<f64>]) -> SsrSurface {
    let cells = rss
        .iter()
        .map(|r| SurfaceCell {
            neg_ssr: r.map(|v| -v),
            status: if r.is_some() {
                LmStatus::ConvergedRss
            } else {
                LmStatus::InadmissibleStart
            },
            fit: r.map(fake_outcome),
        })
        .collect();
    SsrSurface {
        rho1_values: rho1,
        rho_values: rho,
        cells,
    }
}

#[test]
fn ties_go_to_smaller_rho_then_rho1() {
    let rho1 = vec![0.0, 1.0, 2.0];
    let rho = vec![-0.5, 0.5, 1.5];
    #[rustfmt::skip]
    let rss = [
        Some(3.0), Some(1.0), Some(1.0),
        Some(2.0), Some(1.0), None,
        Some(1.0), Some(5.0), Some(1.0),
    ];
    let s = fake_surface(rho1.clone(), rho.clone(), &rss);
    let cells: Vec<OracleCell> = rss
        .iter()
        .enumerate()
        .map(|(k, r)| OracleCell {
            rho1: rho1[k / 3],
            rho: rho[k % 3],
            outcome: r.map(fake_outcome),
        })
        .collect();
    let got = select_best(&s, |_, _| true).unwrap();
    let want = oracle_select(&cells, |_| true).unwrap();
    assert_eq!((got.rho1, got.rho), (want.rho1, want.rho));
    assert_eq!((got.rho1, got.rho), (2.0, -0.5));
    let got = select_best(&s, |_, r| oracle_reasonable(r)).unwrap();
    assert_eq!((got.rho1, got.rho), (0.0, 0.5));
}

#[test]
fn long_csv_single_cell() {
    let s = fake_surface(vec![0.5], vec![1.2], &[Some(0.30)]);
    assert_eq!(s.export(SurfaceFormat::LongCsv), "rho1,rho,neg_ssr,status\n0.5,1.2,-0.3,ConvergedRss\n");
}

#[test]
fn long_csv_order_and_missing() {
    let s = fake_surface(vec![0.0, 1.0], vec![-1.0, 2.0], &[Some(1.0), Some(2.0), None, Some(4.0)]);
    let text = s.export(SurfaceFormat::LongCsv);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(
        rows,
        ["0,-1,-1,ConvergedRss", "0,2,-2,ConvergedRss", "1,-1,,InadmissibleStart", "1,2,-4,ConvergedRss"]
    );
    assert_eq!(s.export(SurfaceFormat::Matrix), "rho1\\rho,-1,2\n0,-1,-2\n1,,-4\n");
}

proptest! {
    #[test]
    fn long_csv_round_trip(
        rows in 1usize..5,
        cols in 1usize..5,
        seed in any::<u64>(),
    ) {
        let mut g = rng(seed);
        let rho1: Vec<f64> = (0..rows).map(|i| i as f64 * 0.37 - 0.9).collect();
        let rho: Vec<f64> = (0..cols).map(|j| j as f64 * 1.1 + 1e-3).collect();
        let rss: Vec<Option<f64>> = (0..rows * cols)
            .map(|_| if g.random_bool(0.2) { None } else { Some(g.random_range(0.0f64..1.0) * 10f64.powi(g.random_range(-20..5))) })
            .collect();
        let s = fake_surface(rho1, rho, &rss);
        let back = SsrSurface::from_long_csv(&s.export(SurfaceFormat::LongCsv)).unwrap();
        prop_assert_eq!(&back.rho1_values, &s.rho1_values);
        prop_assert_eq!(&back.rho_values, &s.rho_values);
        for (a, b) in back.cells.iter().zip(&s.cells) {
            prop_assert_eq!(a.neg_ssr.map(f64::to_bits), b.neg_ssr.map(f64::to_bits));
            prop_assert_eq!(a.status, b.status);
        }
    }
}
