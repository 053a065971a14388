//! Writes the two synthetic corpora used by the experiments and prints their
//! sizes.
//!
//! ```text
//! cargo run --release --example synthetic_corpora -- [OUT_DIR] [N_DESK] [N_PLANTED]
//! ```

use std::path::PathBuf;

use revgen::corpus::{corpus_stats, write_reviews};
use revgen::harness::{desk_corpus, planted_corpus};

fn main() -> revgen::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "corpora".into()));
    let n_desk: usize = args.next().map_or(2000, |s| s.parse().expect("N_DESK"));
    let n_planted: usize = args.next().map_or(2000, |s| s.parse().expect("N_PLANTED"));
    std::fs::create_dir_all(&out).map_err(|e| revgen::Error::Io { path: out.clone(), source: e })?;

    for (name, reviews) in [
        ("desk.jsonl", desk_corpus(7, n_desk)?),
        ("planted.jsonl", planted_corpus(7, n_planted)?),
    ] {
        let path = out.join(name);
        write_reviews(&path, &reviews)?;
        println!("{}:\n{}", path.display(), corpus_stats(&reviews));
        println!("  e.g. {}\n", reviews[0].text);
    }
    Ok(())
}
