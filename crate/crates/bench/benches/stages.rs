use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kkbeam_bench::{scene, SOUND_SPEED};
use kkbeam_core::beamform::{build_das_luts, build_kk_luts, das, kk};
use kkbeam_core::compress::shear_sum_spectra;
use kkbeam_core::spectral::rf_spectra;
use kkbeam_core::{AnalyticRf, CompressedRf};

fn stages(c: &mut Criterion) {
    let s = scene();
    let (array, params) = (s.rf.array(), s.rf.params());
    let mut g = c.benchmark_group("stages");
    g.sample_size(10);

    g.bench_function("reorg_fft", |b| b.iter(|| rf_spectra(&s.rf)));
    let spectra = rf_spectra(&s.rf);
    let mut masked = spectra.clone();
    masked.apply_analytic_mask();
    g.bench_function("hilbert", |b| {
        b.iter_batched(
            || spectra.clone(),
            |mut v| {
                v.apply_analytic_mask();
                v
            },
            criterion::BatchSize::LargeInput,
        )
    });
    g.bench_function("ifft/das", |b| {
        b.iter(|| {
            masked
                .into_analytic::<f32>(array, params)
                .expect("consistent dims")
        })
    });
    let analytic: AnalyticRf<f32> = masked
        .into_analytic(array, params)
        .expect("consistent dims");
    let das_luts = build_das_luts(&s.config.grid, array, params);
    g.bench_function("beamform/das", |b| {
        b.iter(|| das(&analytic, &das_luts, &s.config).expect("matching geometry"))
    });

    for rx in &s.receive {
        let m = rx.len();
        g.bench_with_input(BenchmarkId::new("compress", m), rx, |b, rx| {
            b.iter(|| shear_sum_spectra(&masked, array, rx, SOUND_SPEED).expect("matching array"))
        });
        let sheared = shear_sum_spectra(&masked, array, rx, SOUND_SPEED).expect("matching array");
        g.bench_with_input(BenchmarkId::new("ifft/kk", m), rx, |b, rx| {
            b.iter(|| {
                sheared
                    .into_compressed::<f32>(rx, array, params)
                    .expect("consistent dims")
            })
        });
        let comp: CompressedRf<f32> = sheared
            .into_compressed(rx, array, params)
            .expect("consistent dims");
        let luts = build_kk_luts(&s.config.grid, params.transmit_angles(), rx, SOUND_SPEED);
        g.bench_with_input(BenchmarkId::new("beamform/kk", m), &comp, |b, comp| {
            b.iter(|| kk(comp, &luts, &s.config).expect("matching geometry"))
        });
    }
    g.finish();
}

criterion_group!(benches, stages);
criterion_main!(benches);
