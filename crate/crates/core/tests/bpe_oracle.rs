mod common;

use cribo_core::bpe::{train_bpe, BpeConfig, BpeVocab};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn merges_as_bytes(v: &BpeVocab) -> Vec<(Vec<u8>, Vec<u8>)> {
    v.merges()
        .iter()
        .map(|&(a, b)| (v.token_bytes(a).unwrap().to_vec(), v.token_bytes(b).unwrap().to_vec()))
        .collect()
}

#[test]
fn classic_example_matches_oracle() {
    let texts = vec![b"aaabdaaabac".to_vec()];
    let cfg = BpeConfig { vocab_size: 259, min_frequency: 1 };
    let v = train_bpe(&texts, &cfg).unwrap();
    let want = common::naive_bpe(&texts, 259, 1);
    assert_eq!(merges_as_bytes(&v), want);
    assert_eq!(
        want,
        vec![
            (b"a".to_vec(), b"a".to_vec()),
            (b"aa".to_vec(), b"a".to_vec()),
            (b"aaa".to_vec(), b"b".to_vec()),
        ]
    );
}

#[test]
fn duplicate_expansions_are_never_merged() {
    // "ab"+"c" and "a"+"bc" would both spell "abc".
    let texts = vec![b"abc abc abc bc bc bc bc ab ab ab ab ab".to_vec()];
    let v = train_bpe(&texts, &BpeConfig { vocab_size: 300, min_frequency: 1 }).unwrap();
    let mut seen = std::collections::HashSet::new();
    for id in 0..v.vocab_size() as u32 {
        assert!(seen.insert(v.token_bytes(id).unwrap().to_vec()));
    }
    assert_eq!(merges_as_bytes(&v), common::naive_bpe(&texts, 300, 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trainer_matches_oracle(seed in any::<u64>(), extra in 0usize..120, min_frequency in 1u64..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let texts = common::random_bpe_corpus(&mut rng, 3000);
        prop_assume!(!texts.is_empty());
        let cfg = BpeConfig { vocab_size: 256 + extra, min_frequency };
        let v = train_bpe(&texts, &cfg).unwrap();
        prop_assert_eq!(merges_as_bytes(&v), common::naive_bpe(&texts, cfg.vocab_size, min_frequency));
    }

    #[test]
    fn roundtrip_any_string(s in "\\PC*", seed in 0u64..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let texts = common::random_bpe_corpus(&mut rng, 2000);
        prop_assume!(!texts.is_empty());
        let v = train_bpe(&texts, &BpeConfig { vocab_size: 400, min_frequency: 1 }).unwrap();
        prop_assert_eq!(v.decode(&v.encode(&s)).unwrap(), s.as_bytes());
    }
}
