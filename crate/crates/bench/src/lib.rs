//! Criterion benchmarks for model evaluation, the Jacobian, single fits and
//! grid searches on the seed-7 synthetic dataset.

use std::hint::black_box;

use criterion::{BenchmarkId, Criterion};
use nestces::{
    eval_ces, generate, grid_search, jacobian, lm_fit, CesParams, FreeMask, GridOptions, LmOptions, Observation,
    RhoGrid, Scale, SynthSpec,
};

pub fn dataset(n: usize, noise_sigma: f64) -> Vec<Observation> {
    let spec = SynthSpec {
        true_params: CesParams::new(2.0, 0.6, 0.4, 0.5, 1.2),
        n,
        k_range: (0.5, 50.0),
        l_range: (0.5, 50.0),
        noise_sigma,
        noise_kind: Default::default(),
        seed: 7,
    };
    generate(&spec).expect("valid spec").observations
}

pub fn benchmarks(c: &mut Criterion) {
    let data = dataset(200, 0.01);
    let truth = CesParams::new(2.0, 0.6, 0.4, 0.5, 1.2);

    c.bench_function("eval_ces", |b| {
        b.iter(|| {
            data.iter()
                .map(|o| eval_ces(black_box(&truth), o.capital, o.labor).unwrap())
                .sum::<f64>()
        })
    });

    c.bench_function("jacobian_n200_p5", |b| {
        b.iter(|| jacobian(black_box(&truth), &data, &FreeMask::all(), Scale::Levels).unwrap())
    });

    let mut fits = c.benchmark_group("lm_fit");
    for scale in [Scale::Levels, Scale::Logs] {
        let init = CesParams::new(1.0, 0.5, 0.5, 0.5, 1.2);
        fits.bench_with_input(BenchmarkId::new("shares", format!("{scale:?}")), &scale, |b, &s| {
            b.iter(|| lm_fit(&data, black_box(&init), &FreeMask::shares(), s, &LmOptions::default()).unwrap())
        });
    }
    fits.finish();

    let mut grids = c.benchmark_group("grid_search");
    grids.sample_size(10);
    let rho = RhoGrid::rho_vec1();
    for (name, warm, parallel) in [("warm", true, false), ("cold", false, false), ("parallel", false, true)] {
        let opts = GridOptions {
            warm_start: warm,
            parallel,
            ..GridOptions::default()
        };
        grids.bench_function(name, |b| b.iter(|| grid_search(&data, &rho, &rho, black_box(&opts)).unwrap()));
    }
    grids.finish();
}
