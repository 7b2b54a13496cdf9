use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use gevrey_bench::{vorticity_2d, vorticity_3d};
use gevrey_core::diagnostics::fit_radius;
use gevrey_core::dynamics::{nonlinear_term, ModelKind, ModelParams, Stepper, TauContext, FlowState};
use gevrey_core::inequality::{convection_pairing_2d, pairings_3d, Route};
use gevrey_core::littlewood_paley::{bony_decompose, CutoffPair};
use gevrey_core::operators::velocity_from_vorticity;
use gevrey_core::transform::{to_physical, to_spectral};

fn transforms(c: &mut Criterion) {
    let w2 = velocity_from_vorticity(&vorticity_2d(64), 0.0).unwrap();
    let w3 = vorticity_3d(32, 8.0);
    c.bench_function("roundtrip_2d_n64_vector", |b| {
        b.iter(|| to_spectral(&to_physical(black_box(&w2))).unwrap())
    });
    c.bench_function("roundtrip_3d_n32_vector", |b| {
        b.iter(|| to_spectral(&to_physical(black_box(&w3))).unwrap())
    });
}

fn dynamics(c: &mut Criterion) {
    let w2 = vorticity_2d(64);
    let w3 = vorticity_3d(32, 8.0).scale(0.01);
    let sg = ModelParams::new(ModelKind::SecondGrade, 0.1, 0.5);
    c.bench_function("nonlinear_2d_n64", |b| b.iter(|| nonlinear_term(black_box(&w2), &sg).unwrap()));
    c.bench_function("nonlinear_3d_n32", |b| b.iter(|| nonlinear_term(black_box(&w3), &sg).unwrap()));

    let st2 = FlowState::new(w2.clone(), 0.27);
    let step2 = Stepper::new(w2.grid(), &sg, 1e-3).unwrap();
    c.bench_function("lawson_step_2d_n64", |b| b.iter(|| step2.step(black_box(&st2), &TauContext::default()).unwrap()));
    let st3 = FlowState::new(w3.clone(), 0.1);
    let step3 = Stepper::new(w3.grid(), &sg, 5e-3).unwrap();
    let mut g = c.benchmark_group("slow");
    g.sample_size(10);
    g.bench_function("lawson_step_3d_n32", |b| b.iter(|| step3.step(black_box(&st3), &TauContext::default()).unwrap()));
    g.finish();
}

fn diagnostics(c: &mut Criterion) {
    let w2 = vorticity_2d(64);
    c.bench_function("fit_radius_2d_n64", |b| b.iter(|| fit_radius(black_box(&w2), 1.0, None).unwrap()));
    let f = vorticity_2d(64).map_symbol(|_, n| if n <= 10.0 { 1.0 } else { 0.0 });
    let h = f.map_symbol(|_, n| n.min(3.0));
    c.bench_function("bony_2d_n64", |b| b.iter(|| bony_decompose(black_box(&f), &h, &CutoffPair::default()).unwrap()));
}

fn pairings(c: &mut Criterion) {
    let w2 = vorticity_2d(32).map_symbol(|_, n| if n <= 10.0 { 1.0 } else { 0.0 });
    let mut g = c.benchmark_group("pairings");
    g.sample_size(10);
    g.bench_function("convection_2d_pseudospectral", |b| {
        b.iter(|| convection_pairing_2d(black_box(&w2), 0.5, 0.05, 1.0, Route::Pseudospectral).unwrap())
    });
    g.bench_function("convection_2d_brute_force", |b| {
        b.iter(|| convection_pairing_2d(black_box(&w2), 0.5, 0.05, 1.0, Route::BruteForce).unwrap())
    });
    let w3 = vorticity_3d(32, 4.0);
    g.bench_function("pairings_3d_pseudospectral", |b| {
        b.iter(|| pairings_3d(black_box(&w3), 0.1, 1.0, 1.0, Route::Pseudospectral).unwrap())
    });
    g.finish();
}

criterion_group!(benches, transforms, dynamics, diagnostics, pairings);
criterion_main!(benches);
