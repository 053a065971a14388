//! Saves a model with its optimizer state, reloads it, and shows that the
//! reloaded model generates exactly the same text. Also shows how a damaged
//! file is rejected.
//!
//! ```text
//! cargo run --example checkpoint_roundtrip
//! ```

use revgen::corpus::{RatingVector, Vocabulary};
use revgen::generator::{generate, GenerationContext};
use revgen::model::{load_checkpoint, save_checkpoint, AdamConfig, ModelDims, ModelParams, OptimizerState};
use revgen::ndmath::Prng;

fn main() -> revgen::Result<()> {
    let vocab = Vocabulary::from_chars(" .abcdehlmnorst".chars().collect())?;
    let params = ModelParams::init(vocab, ModelDims { hidden: 32, layers: 2 }, &mut Prng::new(4))?;
    let optimizer = OptimizerState::new(&params.weights, AdamConfig::default());

    let path = std::env::temp_dir().join("revgen_example.ckpt");
    save_checkpoint(&params, Some(&optimizer), &path)?;
    let loaded = load_checkpoint(&path)?;
    println!(
        "{} bytes, {} weights, identical: {}",
        std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0),
        loaded.params.weights.len(),
        loaded.params == params
    );

    let ctx = GenerationContext {
        seed: 9,
        max_len: 60,
        ..GenerationContext::new(RatingVector::splat(0.7)?)
    };
    let a = generate(&params, &ctx)?;
    let b = generate(&loaded.params, &ctx)?;
    println!("same sample from both: {} ({:?})", a == b, a.text);

    let mut bytes = std::fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    std::fs::write(&path, &bytes).unwrap();
    match load_checkpoint(&path) {
        Err(e) => println!("corrupted copy rejected: {e} (exit code {})", e.exit_code()),
        Ok(_) => println!("corruption went unnoticed"),
    }
    Ok(())
}
