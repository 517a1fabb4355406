//! Shared benchmark fixtures.

use ecl_core::dataset::{build_episode, EpisodeSpec};
use ecl_core::fixtures;
use ecl_core::model::{Episode, QaInstance, Setting, Variant};

pub fn bench_corpus() -> (Vec<QaInstance>, Vec<QaInstance>) {
    let corpus = fixtures::synthetic_corpus(120, 10, 17);
    let (pool, rest) = corpus.split_at(60);
    (pool.to_vec(), rest.to_vec())
}

pub fn bench_spec(num_peers: usize, history_length: usize) -> EpisodeSpec {
    EpisodeSpec {
        num_peers,
        history_length,
        setting: Setting::Adversarial,
        variant: Variant::MaReasoning,
        seed: 17,
        peer_pool: None,
    }
}

pub fn bench_episode() -> Episode {
    let (pool, rest) = bench_corpus();
    build_episode(&rest[0], &pool, &bench_spec(4, 5)).expect("bench episode builds")
}
