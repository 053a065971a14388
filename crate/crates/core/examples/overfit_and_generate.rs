//! Memorizes three short reviews, then regenerates each one greedily from its
//! rating vector alone.
//!
//! ```text
//! cargo run --release --example overfit_and_generate
//! ```

use revgen::corpus::{build_vocabulary, encode_stream, make_batches, RatingVector, ReviewRecord};
use revgen::generator::{generate, GenerationContext};
use revgen::model::{evaluate_loss, ModelDims, ModelParams, TrainConfig, Trainer};
use revgen::ndmath::Prng;

fn main() -> revgen::Result<()> {
    let reviews = [
        ("bright and bitter, loads of pine.", 1.0),
        ("sweet caramel malt, soft finish.", 0.5),
        ("stale and watery, skip it.", 0.0),
    ];
    let records = reviews
        .iter()
        .enumerate()
        .map(|(i, (text, r))| {
            Ok(ReviewRecord {
                user_id: format!("u{i}"),
                item_id: format!("b{i}"),
                ratings: RatingVector::splat(*r)?,
                text: text.to_string(),
                category: None,
            })
        })
        .collect::<revgen::Result<Vec<_>>>()?;

    let vocab = build_vocabulary(&records)?;
    let batches = make_batches(&encode_stream(&records, &vocab)?, 1, 32)?;
    let params = ModelParams::init(vocab, ModelDims { hidden: 64, layers: 2 }, &mut Prng::new(3))?;
    let config = TrainConfig {
        batch_size: 1,
        seq_len: 32,
        keep_prob: 1.0,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(params, config)?;
    for epoch in 1..=400 {
        let report = trainer.train_epoch(&batches)?;
        if epoch % 50 == 0 {
            println!("{report}");
        }
        if report.mean_loss < 0.05 && evaluate_loss(&trainer.params, &batches, true)? < 0.05 {
            println!("converged at epoch {epoch}");
            break;
        }
    }

    for r in &records {
        let out = generate(&trainer.params, &GenerationContext::greedy(r.ratings))?;
        let mark = if out.text == r.text { "ok " } else { "MISS" };
        println!("{mark} ratings={:?} -> {:?}", r.ratings.values()[0], out.text);
    }
    Ok(())
}
