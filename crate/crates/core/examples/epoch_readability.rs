//! Readability of generated reviews as training progresses, against ten
//! reference reviews from the corpus, followed by the final-epoch ratios.
//! Writes the same files as `revgen experiment`.
//!
//! ```text
//! cargo run --release --example epoch_readability -- [OUT_DIR] [N_REVIEWS] [EPOCHS]
//! ```

use std::path::PathBuf;

use revgen::corpus::write_reviews;
use revgen::harness::{desk_corpus, run_experiment, ExperimentConfig};
use revgen::model::{ModelDims, TrainConfig};
use revgen::readability::METRIC_NAMES;

fn main() -> revgen::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "epoch_readability_out".into()));
    let n: usize = args.next().map_or(600, |s| s.parse().expect("N_REVIEWS"));
    let epochs: usize = args.next().map_or(4, |s| s.parse().expect("EPOCHS"));
    std::fs::create_dir_all(&out).map_err(|e| revgen::Error::Io { path: out.clone(), source: e })?;
    let corpus = out.join("desk.jsonl");
    write_reviews(&corpus, &desk_corpus(7, n)?)?;

    let config = ExperimentConfig {
        dims: ModelDims { hidden: 64, layers: 2 },
        train: TrainConfig {
            batch_size: 16,
            lr: 3e-3,
            ..TrainConfig::default()
        },
        epochs,
        seed: 1,
        ..ExperimentConfig::new(&corpus)
    };
    let summary = run_experiment(&config, &out, false)?;

    print!("epoch");
    for m in METRIC_NAMES {
        print!(" {m:>7}");
    }
    println!();
    for row in &summary.curve.rows {
        print!("{:>5}", row.epoch);
        for v in row.generated.values() {
            print!(" {v:>7.2}");
        }
        println!();
    }
    print!("  ref");
    for v in summary.curve.reference.values() {
        print!(" {v:>7.2}");
    }
    println!("\n\n{}", summary.relative.to_csv());
    println!("{}/8 metrics within 20% of the reference", summary.relative.within(0.2));
    println!("sample from the last epoch: {:?}", summary.curve.rows.last().map(|r| &r.texts[0]));
    Ok(())
}
