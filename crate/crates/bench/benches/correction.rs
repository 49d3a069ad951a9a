//! Microbenchmarks for the three hot paths: token alignment, a scripted
//! full-mode pipeline run, and the hallucination classifier.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use rllm_bench::{classifier_pairs, full_mode_backend, mandarin_pair, scripted_corpus};
use rllm_core::{
    align_tokens, classify, run_corpus, tokenize, ClassifierConfig, Client, Language,
    PipelineConfig, PromptSet,
};

fn bench_alignment(c: &mut Criterion) {
    let mut group = c.benchmark_group("alignment");
    for &len in &[10usize, 40, 160] {
        let (reference, hypothesis) = mandarin_pair(len);
        let r = tokenize(&reference, Language::Mandarin);
        let h = tokenize(&hypothesis, Language::Mandarin);
        group.throughput(Throughput::Elements(len as u64));
        group.bench_function(format!("mandarin_{len}"), |b| {
            b.iter(|| align_tokens(black_box(&r.tokens), black_box(&h.tokens)))
        });
    }
    group.finish();
}

fn bench_pipeline(c: &mut Criterion) {
    let corpus = scripted_corpus(32);
    let config = PipelineConfig::default();
    let prompts = PromptSet::builtin(Language::Mandarin).expect("builtin prompts");
    // Scripted replies are consumed, so each iteration gets a fresh client.
    c.bench_function("pipeline/full_mode_32", |b| {
        b.iter_batched(
            || Client::scripted(full_mode_backend(&corpus)),
            |client| run_corpus(&corpus, &config, &client, &prompts, None).expect("scripted run"),
            BatchSize::SmallInput,
        )
    });
}

fn bench_classifier(c: &mut Criterion) {
    let pairs = classifier_pairs();
    let config = ClassifierConfig::default();
    c.bench_function("classifier/mixed_pairs", |b| {
        b.iter(|| {
            for (input, output, reference) in &pairs {
                black_box(classify(input, output, reference.as_deref(), &config));
            }
        })
    });
}

criterion_group!(benches, bench_alignment, bench_pipeline, bench_classifier);
criterion_main!(benches);
