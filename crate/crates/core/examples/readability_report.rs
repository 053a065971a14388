//! Scores texts with the eight readability metrics and prints the CSV that
//! `revgen score` would emit. Pass texts as arguments or use the built-in
//! samples.
//!
//! ```text
//! cargo run --example readability_report -- "The cat sat." "A longer sentence, with commas."
//! ```

use revgen::readability::{compute_stats, corpus_report};

fn main() -> revgen::Result<()> {
    let mut texts: Vec<String> = std::env::args().skip(1).collect();
    if texts.is_empty() {
        texts = vec![
            "The cat sat.".into(),
            "Pours a deep amber with a finger of off-white head. Smells of toffee and dark fruit.".into(),
            "Extraordinarily complicated beverage with unbelievable complexity.".into(),
        ];
    }
    for (i, t) in texts.iter().enumerate() {
        println!("text {}: {:?}", i + 1, compute_stats(t)?);
    }
    let report = corpus_report(&texts)?;
    print!("\n{}", report.to_csv());
    println!("\nstd dev: {:?}", report.std_dev.values());
    Ok(())
}
