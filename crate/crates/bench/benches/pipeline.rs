use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use ecl_bench::{bench_corpus, bench_episode, bench_spec};
use ecl_core::dataset::build_episode;
use ecl_core::model::{normalize_answer, Method};
use ecl_core::perturb::{apply_all_wrong, apply_flip};
use ecl_core::prompt::{render_prompt, MethodSpec, Stage};

fn bench_build_episode(c: &mut Criterion) {
    let (pool, rest) = bench_corpus();
    let spec = bench_spec(4, 5);
    c.bench_function("build_episode_p4_t5", |b| {
        b.iter(|| build_episode(black_box(&rest[0]), black_box(&pool), black_box(&spec)).unwrap())
    });
    let spec8 = bench_spec(4, 8);
    c.bench_function("build_episode_p4_t8", |b| {
        b.iter(|| build_episode(black_box(&rest[1]), black_box(&pool), black_box(&spec8)).unwrap())
    });
}

fn bench_render(c: &mut Criterion) {
    let episode = bench_episode();
    let one_stage = MethodSpec::new(Method::OneStage);
    c.bench_function("render_one_stage_prompt", |b| {
        b.iter(|| render_prompt(black_box(&one_stage), Stage::One, black_box(&episode), None, None).unwrap())
    });
    let ecl_e = MethodSpec::new(Method::EclE);
    let profile = "Peer summary: the fourth player answered everything correctly.";
    c.bench_function("render_stage2_prompt", |b| {
        b.iter(|| {
            render_prompt(
                black_box(&ecl_e),
                Stage::Two,
                black_box(&episode),
                Some(black_box(profile)),
                None,
            )
            .unwrap()
        })
    });
}

fn bench_parse(c: &mut Criterion) {
    let completion = "<think>\nLong deliberation over every option, considering each claim in \
                      turn before settling.\n</think>\n\nFirst I leaned towards (B), then \
                      reconsidered.\n\nThe best answer is: \"(F) frequency\"";
    c.bench_function("normalize_answer", |b| {
        b.iter(|| normalize_answer(black_box(completion)).unwrap())
    });
}

fn bench_perturb(c: &mut Criterion) {
    let episode = bench_episode();
    c.bench_function("apply_flip", |b| b.iter(|| apply_flip(black_box(&episode)).unwrap()));
    c.bench_function("apply_all_wrong", |b| {
        b.iter(|| apply_all_wrong(black_box(&episode)).unwrap())
    });
}

criterion_group!(benches, bench_build_episode, bench_render, bench_parse, bench_perturb);
criterion_main!(benches);
