use revgen::corpus::{RatingVector, Vocabulary};
use revgen::model::{context_encode, gradient_check, GradCheckTolerance, LstmState, ModelDims, ModelParams};
use revgen::ndmath::{Prng, Vector};

fn setup(layers: usize, seed: u64) -> (ModelParams, Vec<Vector>, Vec<bool>, Vec<usize>) {
    let vocab = Vocabulary::from_chars("abcdefgh ".chars().collect::<std::collections::BTreeSet<_>>().into_iter().collect()).unwrap();
    let mut rng = Prng::new(seed);
    let params = ModelParams::init(vocab, ModelDims { hidden: 8, layers }, &mut rng).unwrap();
    let v = params.vocab_size();
    let start = params.vocab.start_index();
    let mut seq = vec![start];
    seq.extend((0..12).map(|_| rng.below(v - 2)));
    seq[6] = start;
    let aux = RatingVector::new([0.3, 0.1, 0.9, 0.5, 0.7]).unwrap();
    let inputs = seq[..12].iter().map(|&c| context_encode(c, &aux, v).unwrap()).collect();
    let resets = seq[..12].iter().map(|&c| c == start).collect();
    (params, inputs, resets, seq[1..].to_vec())
}

#[test]
fn analytic_gradients_match_finite_differences() {
    for (layers, seed) in [(1, 1), (2, 2), (3, 3)] {
        let (params, inputs, resets, targets) = setup(layers, seed);
        let report =
            gradient_check(&params, &inputs, &params.zero_state(), &resets, &targets, GradCheckTolerance::default())
                .unwrap();
        assert!(report.passed(), "layers={layers}: {report}");
    }
}

#[test]
fn gradients_hold_from_a_nonzero_initial_state() {
    let (params, inputs, _, targets) = setup(2, 4);
    let mut rng = Prng::new(40);
    let mut init: LstmState = params.zero_state();
    for layer in &mut init.layers {
        for x in layer.c.iter_mut().chain(layer.h.iter_mut()) {
            *x = rng.uniform(-0.8, 0.8);
        }
    }
    let no_resets = vec![false; inputs.len()];
    let report =
        gradient_check(&params, &inputs, &init, &no_resets, &targets, GradCheckTolerance::default()).unwrap();
    assert!(report.passed(), "{report}");
}
