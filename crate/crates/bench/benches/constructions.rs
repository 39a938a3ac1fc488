use std::sync::Arc;

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use tgalab::bases::blockwise::default_block_target;
use tgalab::{
    blockwise_t, blockwise_witness, build_blockwise, build_kt, k_lower, kt_witness,
    perturbed_growth, BlockOrder, SearchBudget, Weight, WeightRule,
};

fn constructions(c: &mut Criterion) {
    let mut g = c.benchmark_group("constructions");
    g.sample_size(10);
    g.bench_function("kt_tables_M30", |b| {
        b.iter(|| build_kt(2.0, black_box(30)).unwrap())
    });
    let (t, _, basis) = build_kt(2.0, 40).unwrap();
    g.bench_function("kt_witness_ratio_m40", |b| {
        b.iter(|| {
            kt_witness(&t, black_box(40))
                .unwrap()
                .evaluate(&basis)
                .unwrap()
        })
    });
    let budget = SearchBudget {
        trials: 200,
        exhaustive_signs_max: 8,
        ..SearchBudget::default()
    };
    g.bench_function("kt_k_lower_m20_200_trials", |b| {
        b.iter(|| k_lower(&basis, black_box(20), &budget).unwrap())
    });
    let ms: Vec<usize> = (2..=2000).collect();
    g.bench_function("perturbed_growth_m2000", |b| {
        b.iter(|| perturbed_growth(2.0, 2.0, &WeightRule::power(2.0), black_box(&ms)).unwrap())
    });
    let tt = blockwise_t(default_block_target, 8).unwrap();
    let last = tt[8];
    let bw = build_blockwise(
        2.0,
        2.0,
        Arc::new(Weight::power(2.0, last).unwrap()),
        tt,
        last,
    )
    .unwrap();
    g.bench_function("blockwise_certificate_k8", |b| {
        b.iter(|| {
            blockwise_witness(&bw, black_box(8), &BlockOrder::Identity)
                .unwrap()
                .f
                .evaluate(&bw)
                .unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, constructions);
criterion_main!(benches);
