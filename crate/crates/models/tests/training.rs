use braglab_core::featurizers::FusionLexicon;
use braglab_core::{BraggingLabel, Task};
use braglab_models::{
    evaluate, evaluate_subset, learning_curve, train, train_seed, Arch, Dataset, Error, Example, ModelConfig,
    SCRATCH_ENCODER,
};
use rand::{Rng, SeedableRng};

const BRAG: [&str; 6] = ["won", "award", "proud", "promoted", "finally", "best"];
const PLAIN: [&str; 6] = ["weather", "rain", "bus", "coffee", "monday", "traffic"];
const FILLER: [&str; 8] = ["the", "a", "today", "so", "i", "my", "it", "is"];

fn synthetic(n: usize, seed: u64, prefix: &str) -> Vec<Example> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let brag = i % 3 == 0;
            let len = rng.random_range(3..9);
            let mut toks: Vec<String> = (0..len).map(|_| FILLER[rng.random_range(0..FILLER.len())].into()).collect();
            let cue = if brag { BRAG } else { PLAIN };
            toks.insert(rng.random_range(0..toks.len()), cue[rng.random_range(0..6)].into());
            let label = if brag { BraggingLabel::Achievement } else { BraggingLabel::NotBragging };
            Example::new(format!("{prefix}{i}"), toks, label)
        })
        .collect()
}

fn dataset() -> Dataset {
    Dataset {
        train: synthetic(90, 1, "tr"),
        dev: synthetic(30, 2, "dv"),
        test: synthetic(30, 3, "te"),
    }
}

fn small(arch: Arch) -> ModelConfig {
    let mut c = ModelConfig::new(arch, Task::Binary);
    c.hidden_size = 16;
    c.embedding_dim = 16;
    c.encoder_layers = 1;
    c.encoder_heads = 2;
    c.max_seq_len = 12;
    c.batch_size = 8;
    c.epochs = 6;
    c.seeds = vec![13];
    c.encoder_name = SCRATCH_ENCODER.into();
    if arch != Arch::BigruAtt {
        c.learning_rate = 3e-3;
    }
    c
}


#[test]
fn majority_predicts_most_frequent_class_with_lexicographic_ties() {
    let data = dataset();
    let config = ModelConfig::new(Arch::Majority, Task::Binary);
    let m = train_seed(&config, &data.train, &data.dev, 0).unwrap();
    let p = m.predict_examples(&data.test).unwrap();
    assert!(p.iter().all(|p| m.labels[p.label] == "NOT_BRAGGING"));

    let tie = vec![
        Example::new("a", vec!["x".into()], BraggingLabel::Trait),
        Example::new("b", vec!["x".into()], BraggingLabel::Achievement),
    ];
    let config = ModelConfig::new(Arch::Majority, Task::SevenClass);
    let m = train_seed(&config, &tie, &[], 0).unwrap();
    let p = m.predict(&[&["y".to_string()][..]]).unwrap();
    assert_eq!(m.labels[p[0].label], "ACHIEVEMENT");
}

#[test]
fn lr_bow_learns_and_round_trips() {
    let data = dataset();
    let config = small(Arch::LrBow);
    let models = train(&config, &data).unwrap();
    let report = evaluate(&models, &data.test).unwrap();
    assert!(report.mean.f1 > 90.0, "{}", report.mean.f1);

    let dir = tempfile::tempdir().unwrap();
    models[0].save(dir.path()).unwrap();
    let back = braglab_models::TrainedModel::load(dir.path()).unwrap();
    assert_eq!(back.predict_examples(&data.test).unwrap(), models[0].predict_examples(&data.test).unwrap());
}

fn check_neural(config: &ModelConfig) {
    let data = dataset();
    let a = train_seed(config, &data.train, &data.dev, 13).unwrap();
    let b = train_seed(config, &data.train, &data.dev, 13).unwrap();
    let pa = a.predict_examples(&data.test).unwrap();
    assert_eq!(pa, b.predict_examples(&data.test).unwrap(), "same seed must reproduce");

    for p in &pa {
        let s: f64 = p.probabilities.iter().sum();
        assert!((s - 1.0).abs() < 1e-6, "{s}");
    }

    // One post at a time gives the same answer as a full batch.
    for (e, p) in data.test.iter().zip(&pa).take(10) {
        let single = a.predict(&[e.tokens.as_slice()]).unwrap();
        assert_eq!(single[0].label, p.label);
        for (x, y) in single[0].probabilities.iter().zip(&p.probabilities) {
            assert!((x - y).abs() < 1e-6, "{x} vs {y}");
        }
    }

    // The restored parameters are those of the epoch with the lowest dev loss.
    let dev_p = a.predict_examples(&data.dev).unwrap();
    let gold: Vec<usize> = data.dev.iter().map(|e| Task::Binary.class_of(e.label)).collect();
    let loss = dev_p.iter().zip(&gold).map(|(p, &g)| -p.probabilities[g].ln()).sum::<f64>() / gold.len() as f64;
    let best = a.training_log.iter().map(|l| l.dev_loss).fold(f64::INFINITY, f64::min);
    assert!((loss - best).abs() < 1e-4, "{loss} vs {best}");

    let dir = tempfile::tempdir().unwrap();
    a.save(dir.path()).unwrap();
    let back = braglab_models::TrainedModel::load(dir.path()).unwrap();
    assert_eq!(back.predict_examples(&data.test).unwrap(), pa, "reload must be bit-identical");
    assert_eq!(back.training_log, a.training_log);
}

#[test]
fn bigru_is_deterministic_and_reloads() {
    check_neural(&small(Arch::BigruAtt));
}

#[test]
fn scratch_transformer_is_deterministic_and_reloads() {
    check_neural(&small(Arch::Transformer));
}

#[test]
fn mag_transformer_is_deterministic_and_reloads() {
    let mut c = small(Arch::TransformerMag);
    c.fusion_lexicon = Some(FusionLexicon::Nrc);
    c.projection_dim = 200;
    check_neural(&c);
}

#[test]
fn bigru_learns_the_cue_words() {
    let data = dataset();
    let mut config = small(Arch::BigruAtt);
    config.epochs = 30;
    config.patience = 30;
    let models = train(&config, &data).unwrap();
    let report = evaluate(&models, &data.test).unwrap();
    assert!(report.mean.f1 > 80.0, "{} {:?}", report.mean.f1, models[0].training_log);
}

#[test]
fn early_stopping_respects_patience() {
    let data = dataset();
    let mut config = small(Arch::BigruAtt);
    config.epochs = 30;
    config.patience = 1;
    config.learning_rate = 0.05;
    let m = train_seed(&config, &data.train, &data.dev, 42).unwrap();
    let log = &m.training_log;
    if log.len() < 30 {
        let last = log[log.len() - 1].dev_loss;
        let prev = log[..log.len() - 1].iter().map(|l| l.dev_loss).fold(f64::INFINITY, f64::min);
        assert!(last >= prev);
    }
}

#[test]
fn empty_partitions_are_rejected() {
    let data = dataset();
    let config = small(Arch::BigruAtt);
    assert!(matches!(train_seed(&config, &[], &data.dev, 1), Err(Error::InvalidInput(_))));
    assert!(matches!(train_seed(&config, &data.train, &[], 1), Err(Error::InvalidInput(_))));
}

#[test]
fn single_class_training_set_is_degenerate_for_lr() {
    let one: Vec<Example> = synthetic(30, 4, "x").into_iter().filter(|e| e.label == BraggingLabel::NotBragging).collect();
    let config = small(Arch::LrBow);
    assert!(matches!(train_seed(&config, &one, &[], 1), Err(Error::DegenerateTraining(_))));
}

#[test]
fn mismatched_labels_are_reported() {
    let data = dataset();
    let m = train_seed(&small(Arch::Majority), &data.train, &[], 1).unwrap();
    let seven = Task::SevenClass.class_names();
    assert!(matches!(m.check_labels(&seven), Err(Error::LabelMismatch { .. })));
}

#[test]
fn subset_evaluation_and_learning_curve() {
    let data = dataset();
    let config = small(Arch::LrBow);
    let models = train(&config, &data).unwrap();
    let ids: Vec<String> = data.test.iter().take(12).map(|e| e.id.clone()).collect();
    let sub = evaluate_subset(&models, &data.test, &ids).unwrap();
    assert_eq!(sub.n, 12);
    assert!(evaluate_subset(&models, &data.test, &["nope".into()]).is_err());

    let curve = learning_curve(&config, &data, &[0.25, 0.5, 1.0], 13).unwrap();
    assert_eq!(curve.len(), 3);
    assert!(curve.windows(2).all(|w| w[0].train_size < w[1].train_size));
    let full = train_seed(&config, &data.train, &data.dev, 13).unwrap();
    let full_report = evaluate(&[full], &data.test).unwrap();
    assert!((curve[2].macro_f1 - full_report.mean.f1).abs() < 1e-9);
    assert!(learning_curve(&config, &data, &[0.5, 0.25], 13).is_err());
}

#[test]
fn learning_curve_skips_classes_without_examples() {
    let mut data = dataset();
    data.train.push(Example::new("rare", vec!["trip".into()], BraggingLabel::Trait));
    let mut config = small(Arch::LrBow);
    config.task = Task::SevenClass;
    let curve = learning_curve(&config, &data, &[0.1, 1.0], 5).unwrap();
    assert_eq!(curve[0].skipped_classes.contains(&"TRAIT".to_string()), true);
    assert!(!curve[0].per_class_f1.contains_key("TRAIT"));
    assert!(curve[1].per_class_f1.contains_key("TRAIT"));
}

#[test]
fn unknown_pretrained_encoder_is_reported() {
    let data = dataset();
    let mut config = small(Arch::Transformer);
    config.encoder_name = "no/such-encoder".into();
    std::env::set_var("BRAGLAB_MODEL_DIR", "/nonexistent");
    assert!(matches!(train_seed(&config, &data.train, &data.dev, 1), Err(Error::EncoderNotFound(_))));
}
