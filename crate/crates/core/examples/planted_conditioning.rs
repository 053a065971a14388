//! Trains on a corpus whose high- and low-rated reviews use disjoint marker
//! words, then counts markers in text generated at ratings 1 and 0. A
//! chi-squared test decides whether the ratings steer generation.
//!
//! ```text
//! cargo run --release --example planted_conditioning -- [N_REVIEWS] [EPOCHS]
//! ```

use revgen::corpus::write_reviews;
use revgen::harness::{conditioning_test, load_corpus, planted_corpus, run_training, ExperimentConfig};
use revgen::model::{ModelDims, TrainConfig};

fn main() -> revgen::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(600, |s| s.parse().expect("N_REVIEWS"));
    let epochs: usize = args.next().map_or(4, |s| s.parse().expect("EPOCHS"));

    let dir = std::env::temp_dir().join("revgen_planted");
    std::fs::create_dir_all(&dir).map_err(|e| revgen::Error::Io { path: dir.clone(), source: e })?;
    let corpus = dir.join("planted.jsonl");
    write_reviews(&corpus, &planted_corpus(1, n)?)?;

    let config = ExperimentConfig {
        dims: ModelDims { hidden: 48, layers: 2 },
        train: TrainConfig {
            batch_size: 8,
            lr: 3e-3,
            ..TrainConfig::default()
        },
        epochs,
        snapshot_every: epochs,
        max_len: 120,
        seed: 1,
        ..ExperimentConfig::new(&corpus)
    };
    let records = load_corpus(&config)?;
    let run = run_training(&config, &records, &dir)?;
    for r in &run.reports {
        println!("{r}");
    }
    print!("{}", conditioning_test(&config, &run.params, 50)?);
    Ok(())
}
