use criterion::{black_box, criterion_group, criterion_main, Criterion};
use heralded_core::{
    beat_note_analysis, default_time_grid, fourier_to_time_fft, herald_waveform, make_frequency_bin, make_lorentzian,
    DecayDirection, HeraldedArm,
};

fn waveforms(c: &mut Criterion) {
    let lor = make_lorentzian(1.0, DecayDirection::DecayOnPhoton1).unwrap();
    let tg = default_time_grid(&lor).unwrap();
    let bins = make_frequency_bin(5.0, 0.0, None, 1.0).unwrap();
    let bin_grid = default_time_grid(&bins).unwrap();
    let bin_wf = herald_waveform(&bins, HeraldedArm::Photon1, &bin_grid).unwrap();

    let mut group = c.benchmark_group("waveform");
    group.sample_size(10);
    group.bench_function("direct_lorentzian", |b| {
        b.iter(|| herald_waveform(black_box(&lor), HeraldedArm::Photon1, &tg).unwrap())
    });
    group.bench_function("fft_lorentzian", |b| {
        b.iter(|| fourier_to_time_fft(black_box(lor.samples()), lor.grid(), 8192).unwrap())
    });
    group.bench_function("beat_note", |b| {
        b.iter(|| beat_note_analysis(black_box(&bin_wf)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, waveforms);
criterion_main!(benches);
