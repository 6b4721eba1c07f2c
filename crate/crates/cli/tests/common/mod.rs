#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use braglab_core::corpus::{write_corpus, Post, Source};
use braglab_core::BraggingLabel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const BIN: &str = env!("CARGO_BIN_EXE_braglab");

const CUES: [(BraggingLabel, &[&str]); 7] = [
    (BraggingLabel::Achievement, &["finally got the offer", "won the final", "passed my exam", "finished the marathon"]),
    (BraggingLabel::Action, &["cooked dinner for everyone", "going to build a shed", "painted the whole house"]),
    (BraggingLabel::Feeling, &["so happy and blessed", "absolutely chuffed", "feeling amazing"]),
    (BraggingLabel::Trait, &["i am the kindest", "i'm so smart", "my patience is endless"]),
    (BraggingLabel::Possession, &["bought a new car", "my new bedroom", "own three houses"]),
    (BraggingLabel::Affiliation, &["proud of my team", "my family is amazing", "our club won"]),
    (BraggingLabel::NotBragging, &["the bus is late again", "what a rainy day", "anyone watching the game", "need more coffee", "@jim well done mate"]),
];

const FILLER: [&str; 10] = ["today", "lol", "honestly", "again", "this week", "haha", "so", "really", "!", "now"];

fn text(rng: &mut ChaCha8Rng, label: BraggingLabel) -> String {
    let cues = CUES.iter().find(|(l, _)| *l == label).unwrap().1;
    let mut t = cues[rng.random_range(0..cues.len())].to_string();
    for _ in 0..rng.random_range(0..3) {
        t.push(' ');
        t.push_str(FILLER[rng.random_range(0..FILLER.len())]);
    }
    t
}

fn pick_label(rng: &mut ChaCha8Rng, not_bragging: f64) -> BraggingLabel {
    if rng.random_bool(not_bragging) {
        BraggingLabel::NotBragging
    } else {
        BraggingLabel::BRAGGING_TYPES[rng.random_range(0..6)]
    }
}

/// A labelled corpus: keyword-sampled training posts and randomly sampled
/// dev/test posts, with engagement and author counts.
pub fn corpus(n_keyword: usize, n_random: usize, seed: u64) -> Vec<Post> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut posts = Vec::new();
    for i in 0..n_keyword + n_random {
        let (source, nb) = if i < n_keyword { (Source::Keyword, 0.55) } else { (Source::Random, 0.85) };
        let label = pick_label(&mut rng, nb);
        let mut p = Post::new(format!("t{i:05}"), format!("{} #{i}", text(&mut rng, label)), source).with_label(label);
        p.follower_count = rng.random_range(0..2000);
        p.friend_count = rng.random_range(0..2000);
        let base = if label.is_bragging() { 3.0 } else { 1.0 };
        p.favorite_count = (base * rng.random_range(0.0..4.0f64)).round() as u64;
        p.retweet_count = rng.random_range(0..3);
        posts.push(p);
    }
    posts
}

pub fn write(dir: &Path, name: &str, posts: &[Post]) -> PathBuf {
    let p = dir.join(name);
    write_corpus(&p, posts).unwrap();
    p
}

pub fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("BRAGLAB_DATA_DIR").output().unwrap()
}

/// Runs a command that must succeed and returns its run directory.
pub fn run_ok(args: &[&str]) -> PathBuf {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    PathBuf::from(String::from_utf8(out.stdout).unwrap().trim())
}

pub fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}
