//! Blends one user's average ratings with one item's average ratings for
//! several alpha values and generates a review for each blend, all from the
//! same seed. The user leans positive and the item negative, so the marker
//! words shift as alpha moves from 1 to 0.
//!
//! ```text
//! cargo run --release --example alpha_sweep
//! ```

use revgen::corpus::write_reviews;
use revgen::generator::{average_profile, blend_ratings, ProfileKey};
use revgen::harness::{alpha_experiment, load_corpus, planted_corpus, run_training, samples_text, ExperimentConfig};
use revgen::model::{ModelDims, TrainConfig};

fn main() -> revgen::Result<()> {
    let dir = std::env::temp_dir().join("revgen_alpha_sweep");
    std::fs::create_dir_all(&dir).map_err(|e| revgen::Error::Io { path: dir.clone(), source: e })?;
    let corpus = dir.join("planted.jsonl");
    write_reviews(&corpus, &planted_corpus(2, 800)?)?;

    let config = ExperimentConfig {
        dims: ModelDims { hidden: 48, layers: 2 },
        train: TrainConfig {
            batch_size: 8,
            lr: 3e-3,
            ..TrainConfig::default()
        },
        epochs: 4,
        snapshot_every: 4,
        alphas: vec![1.0, 0.75, 0.5, 0.25, 0.0],
        max_len: 120,
        seed: 2,
        ..ExperimentConfig::new(&corpus)
    };
    let records = load_corpus(&config)?;
    let run = run_training(&config, &records, &dir)?;

    // even user ids lean positive in the planted corpus; pick the most
    // negative item
    let user = "u0";
    let item = records
        .iter()
        .map(|r| r.item_id.as_str())
        .min_by(|a, b| {
            let score = |id| average_profile(&records, ProfileKey::Item(id)).map(|p| p.means.values()[4]).unwrap_or(1.0);
            score(a).total_cmp(&score(b))
        })
        .unwrap_or("b0")
        .to_string();
    let u = average_profile(&records, ProfileKey::User(user))?;
    let i = average_profile(&records, ProfileKey::Item(&item))?;
    for &alpha in &config.alphas {
        println!("alpha={alpha}: ratings {:.2?}", blend_ratings(&u, &i, alpha)?.values());
    }
    println!();
    print!("{}", samples_text(&alpha_experiment(&config, &run.params, &records, user, &item)?));
    Ok(())
}
