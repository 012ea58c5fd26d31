//! Benchmarks of the hot kernels: the per-frequency eigenfunction march,
//! the dense distorted synthesis, the split-step propagator, and the
//! discrete-mode projection. Fixtures are desk scale so a full pass
//! stays in seconds.

use criterion::{criterion_group, criterion_main, Criterion};
use ctm_core::decompose::apply_pc;
use ctm_core::dft::forward_ghat;
use ctm_core::evolve::{evolve_u, EvolveOptions};
use ctm_core::field::{FrequencyPair, SpinorField};
use ctm_core::grid::{Grid1D, KGrid};
use ctm_core::jost::{solve_jost, solve_scattering, JostKind, JostOptions, ScatteringData};
use ctm_core::spectrum::{discrete_eigens, DiscreteSpectrum};
use ctm_core::track::{ModelConfig, Profile, SolitonTrack};
use num_complex::Complex64;
use std::hint::black_box;

fn grid() -> Grid1D {
    Grid1D::new(-60.0, 60.0, 1024).unwrap()
}

fn kgrid() -> KGrid {
    KGrid::new(16.0, 256).unwrap()
}

fn well() -> SolitonTrack {
    SolitonTrack::stationary(1.0, Profile::sech2(-2.0, 1.0), Profile::zero())
}

fn table() -> ScatteringData {
    solve_scattering(&well(), &grid(), &kgrid(), &JostOptions::default()).unwrap()
}

// band-limited argument with no mass near the excluded band
fn pair() -> FrequencyPair {
    FrequencyPair::from_fn(kgrid(), |k| {
        let guard = (1.0 - (-k * k / 0.16).exp()).powi(8);
        let env = guard * (-(k - 3.0) * (k - 3.0)).exp();
        [
            Complex64::new(env, 0.0),
            Complex64::new(0.0, 0.5) * guard * (-(k + 3.0) * (k + 3.0)).exp(),
        ]
    })
}

fn pair_config() -> ModelConfig {
    let mk = |v: f64, y: f64| SolitonTrack {
        omega: 1.0,
        v,
        y,
        gamma: 0.0,
        profile_u: Profile::sech2(-2.0, 1.0),
        profile_w: Profile::zero(),
    };
    ModelConfig {
        tracks: vec![mk(1.0, 15.0), mk(-1.0, -15.0)],
        l_sep: 1.0,
        c_sep: 0.1,
        t_final: 0.5,
        dt: 1e-3,
    }
}

fn bench_jost_march(c: &mut Criterion) {
    let g = grid();
    let tr = well();
    let opts = JostOptions::default();
    c.bench_function("jost_single_frequency", |b| {
        b.iter(|| solve_jost(&tr, black_box(2.5), JostKind::F, &g, &opts).unwrap())
    });
}

fn bench_synthesis(c: &mut Criterion) {
    let data = table();
    let u = pair();
    c.bench_function("distorted_synthesis", |b| {
        b.iter(|| forward_ghat(black_box(&u), &data))
    });
}

fn bench_split_step(c: &mut Criterion) {
    let g = grid();
    let cfg = pair_config();
    let psi0 = SpinorField::from_fn(g, |x| {
        [
            Complex64::new((-(x * x) / 16.0).exp(), 0.0) * Complex64::from_polar(1.0, 3.0 * x),
            Complex64::default(),
        ]
    });
    let opts = EvolveOptions::with_dt(1e-3);
    c.bench_function("split_step_10", |b| {
        b.iter(|| evolve_u(black_box(&psi0), 0.0, 0.01, &cfg, &opts).unwrap())
    });
}

fn bench_mode_projection(c: &mut Criterion) {
    let g = grid();
    let cfg = pair_config();
    let spectra: Vec<DiscreteSpectrum> =
        cfg.tracks.iter().map(|_| discrete_eigens(&well(), &g).unwrap()).collect();
    let f = SpinorField::from_fn(g, |x| {
        [
            Complex64::new((-(x - 10.0) * (x - 10.0) / 9.0).exp(), 0.1),
            Complex64::new(0.2, (-(x + 10.0) * (x + 10.0) / 9.0).exp()),
        ]
    });
    c.bench_function("discrete_mode_projection", |b| {
        b.iter(|| apply_pc(black_box(&f), 0.0, &cfg, &spectra).unwrap())
    });
}

criterion_group!(
    kernels,
    bench_jost_march,
    bench_synthesis,
    bench_split_step,
    bench_mode_projection
);
criterion_main!(kernels);
