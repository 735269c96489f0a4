mod common;

use std::path::PathBuf;

use cribo_core::corpus::{render_documents, shard_name};
use cribo_core::dedup::{global_dedup, DedupOptions, FingerprintWidth};

fn write_shards(dir: &std::path::Path, shards: &[Vec<Vec<String>>]) -> Vec<PathBuf> {
    shards
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let p = dir.join(format!("in-{i}.txt"));
            std::fs::write(&p, render_documents(s)).unwrap();
            p
        })
        .collect()
}

#[test]
fn planted_corpora_match_brute_force() {
    for seed in 0..6u64 {
        let shards = common::planted_shards(seed);
        let want = common::brute_force_dedup(&shards);
        let dir = tempfile::tempdir().unwrap();
        let inputs = write_shards(dir.path(), &shards);
        for (k, opts) in [
            DedupOptions::default(),
            DedupOptions {
                width: FingerprintWidth::Bits128,
                mem_cap: 512,
                workers: 3,
                spill_dir: Some(dir.path().to_path_buf()),
            },
        ]
        .into_iter()
        .enumerate()
        {
            let out = dir.path().join(format!("out-{k}"));
            let stats = global_dedup(&inputs, &out, &opts).unwrap();
            let got: Vec<String> = (0..shards.len())
                .map(|i| std::fs::read_to_string(out.join(shard_name(i))).unwrap())
                .collect();
            assert_eq!(got, want, "seed {seed}, options {k}");
            let input: usize = shards.iter().flatten().map(Vec::len).sum();
            let kept: usize = want.iter().map(|s| s.lines().filter(|l| !l.is_empty()).count()).sum();
            assert_eq!(stats.input_sentences as usize, input);
            assert_eq!((stats.input_sentences - stats.removed_sentences) as usize, kept);
        }
    }
}
