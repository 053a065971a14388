//! Review file to training batches: load, normalize, filter, build the
//! vocabulary, encode and cut into truncated-BPTT lanes.
//!
//! ```text
//! cargo run --example corpus_pipeline -- [REVIEWS.jsonl]
//! ```
//!
//! Without an argument a small synthetic file is written to a temp dir.

use revgen::corpus::{
    build_vocabulary, category_counts, corpus_stats, encode_stream, load_reviews, make_batches, prepare_records,
    write_reviews, CorpusOptions,
};
use revgen::harness::desk_corpus;

fn main() -> revgen::Result<()> {
    let tmp = std::env::temp_dir().join("revgen_corpus_pipeline.jsonl");
    let path = match std::env::args().nth(1) {
        Some(p) => p.into(),
        None => {
            write_reviews(&tmp, &desk_corpus(3, 200)?)?;
            tmp
        }
    };

    let raw = load_reviews(&path)?;
    println!("{}:\n{}", path.display(), corpus_stats(&raw));

    let records = prepare_records(&raw, &CorpusOptions::default())?;
    println!("{} of {} reviews pass the length filter", records.len(), raw.len());
    for (category, n) in category_counts(&records) {
        println!("  {category:<12} {n}");
    }

    let vocab = build_vocabulary(&records)?;
    let chars: String = vocab.chars().iter().collect();
    println!("vocabulary: {} symbols ({} characters + START + END): {chars:?}", vocab.size(), vocab.chars().len());

    let stream = encode_stream(&records, &vocab)?;
    let batches = make_batches(&stream, 8, 64)?;
    println!(
        "{} tokens -> {} batches of 8 lanes, {} training pairs",
        stream.len(),
        batches.len(),
        batches.iter().map(|b| b.token_count()).sum::<usize>()
    );
    Ok(())
}
