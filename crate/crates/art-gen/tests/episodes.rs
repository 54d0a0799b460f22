use art_gen::{gen_art_dataset, gen_art_episode, split_vocab, ArtManifest, ArtTask, GlyphVocab};
use svrt_gen::read_container;

#[test]
fn datasets_flatten_episodes_into_labeled_stimulus_groups() {
    let dir = tempfile::tempdir().unwrap();
    for task in ArtTask::ALL {
        let splits =
            gen_art_dataset(dir.path(), task, 50, (8, 4), 7, 21, true, 80).unwrap();
        assert_eq!(splits.len(), 2);
        for (split, episodes) in splits.iter().zip([8usize, 4]) {
            assert_eq!(split.episodes, episodes);
            let ds = read_container(&split.data).unwrap();
            let per = task.stimuli_per_episode();
            assert_eq!(ds.len(), episodes * per);
            let manifest: ArtManifest =
                serde_json::from_reader(std::fs::File::open(&split.manifest).unwrap()).unwrap();
            assert_eq!(manifest.stimuli_per_episode as usize, per);
            assert_eq!(manifest.episodes as usize, episodes);
            assert_eq!(
                manifest.answer_distribution.iter().sum::<u32>() as usize,
                episodes
            );
            let spread = manifest.answer_distribution.iter().max().unwrap()
                - manifest.answer_distribution.iter().min().unwrap();
            assert!(spread <= 1, "{task} {split:?} answers unbalanced: {manifest:?}");
            for episode in 0..episodes {
                let label = ds.labels[episode * per];
                assert!((label as usize) < task.choices());
                for s in 0..per {
                    assert_eq!(ds.labels[episode * per + s], label);
                }
            }
        }
    }
}

#[test]
fn dataset_generation_is_bit_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = gen_art_dataset(a.path(), ArtTask::Rmts, 85, (6, 2), 3, 9, true, 80).unwrap();
    let second = gen_art_dataset(b.path(), ArtTask::Rmts, 85, (6, 2), 3, 9, true, 80).unwrap();
    for (x, y) in first.iter().zip(&second) {
        assert_eq!(std::fs::read(&x.data).unwrap(), std::fs::read(&y.data).unwrap());
    }
    let c = tempfile::tempdir().unwrap();
    let third = gen_art_dataset(c.path(), ArtTask::Rmts, 85, (6, 2), 3, 10, true, 80).unwrap();
    assert_ne!(
        std::fs::read(&first[0].data).unwrap(),
        std::fs::read(&third[0].data).unwrap()
    );
}

#[test]
fn train_and_test_glyphs_never_mix_under_a_holdout() {
    let vocab = GlyphVocab::generate(7);
    let regime = split_vocab(95, 7).unwrap();
    for seed in 0..12u64 {
        let train = gen_art_episode(ArtTask::Sd, &vocab, &regime.train, (seed % 2) as u8, seed, true, 80)
            .unwrap();
        for p in train.layout.iter().flatten() {
            assert!(regime.train.contains(&p.glyph));
            assert!(!regime.test.contains(&p.glyph));
        }
        let test = gen_art_episode(ArtTask::Sd, &vocab, &regime.test, (seed % 2) as u8, seed, true, 80)
            .unwrap();
        for p in test.layout.iter().flatten() {
            assert!(regime.test.contains(&p.glyph));
        }
    }
}

#[test]
fn stimuli_are_distinct_across_choices() {
    let vocab = GlyphVocab::generate(7);
    let pool: Vec<usize> = (0..100).collect();
    let ep = gen_art_episode(ArtTask::Dist3, &vocab, &pool, 0, 5, false, 80).unwrap();
    for i in 0..ep.stimuli.len() {
        for j in (i + 1)..ep.stimuli.len() {
            assert_ne!(ep.stimuli[i], ep.stimuli[j], "stimuli {i} and {j} render identically");
        }
    }
}
