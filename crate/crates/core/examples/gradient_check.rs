//! Checks the hand-written backward pass against central finite differences
//! on a small random model, including a state reset halfway through.
//!
//! ```text
//! cargo run --release --example gradient_check
//! ```

use revgen::corpus::{RatingVector, Vocabulary};
use revgen::model::{context_encode, gradient_check, GradCheckTolerance, ModelDims, ModelParams};
use revgen::ndmath::Prng;

fn main() -> revgen::Result<()> {
    let vocab = Vocabulary::from_chars(" abcdefgh".chars().collect())?;
    let v = vocab.size();
    let mut rng = Prng::new(1);
    let params = ModelParams::init(vocab, ModelDims { hidden: 8, layers: 2 }, &mut rng)?;

    let start = params.vocab.start_index();
    let end = params.vocab.end_index();
    let seq = [start, 1, 4, 0, 2, end, start, 7, 3, 8, 5, 6, end];
    let aux = RatingVector::new([0.8, 0.6, 0.4, 0.2, 1.0])?;
    let inputs = seq[..seq.len() - 1]
        .iter()
        .map(|&c| context_encode(c, &aux, v))
        .collect::<revgen::Result<Vec<_>>>()?;
    let resets: Vec<bool> = seq[..seq.len() - 1].iter().map(|&c| c == start).collect();

    let tol = GradCheckTolerance::default();
    let report = gradient_check(&params, &inputs, &params.zero_state(), &resets, &seq[1..], tol)?;
    println!("{report}");
    if let Some((tensor, offset, analytic, numeric)) = report.worst {
        println!("worst component: tensor {tensor}[{offset}] analytic {analytic:.6e} numeric {numeric:.6e}");
    }
    println!("{}", if report.passed() { "gradients agree" } else { "GRADIENT MISMATCH" });
    Ok(())
}
