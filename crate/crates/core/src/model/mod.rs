//! Rating-conditioned stacked LSTM over characters.
//!
//! Every step consumes `[one_hot(char); ratings]`, runs it through `layers`
//! LSTM cells of width `hidden`, and projects the top hidden state to one
//! logit per vocabulary symbol. Gradients are derived by hand
//! (see [`forward`]) and checked against finite differences in the tests.

mod cell;
pub mod checkpoint;
pub mod forward;
pub mod gradcheck;
pub mod optim;
pub mod train;

pub use cell::{context_encode, lstm_cell_step, rnn_cell_step, LstmStep};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub(crate) use forward::step_logits;
pub use forward::{
    backward_bptt, forward_sequence, forward_sequence_with, sequence_loss, ForwardCache,
    ForwardOptions, ForwardPass,
};
pub use gradcheck::{gradient_check, GradCheckReport, GradCheckTolerance};
pub use optim::{adam_step, clip_global_norm, dropout_mask, AdamConfig, OptimizerState};
pub use train::{evaluate_loss, EpochReport, TrainConfig, Trainer};

use crate::corpus::{Vocabulary, AUX_DIM};
use crate::error::{Error, Result};
use crate::ndmath::{Matrix, Prng, Vector};

/// Weights of one LSTM layer. Gate matrices act on `[input; previous hidden]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub w_f: Matrix,
    pub w_i: Matrix,
    pub w_c: Matrix,
    pub w_o: Matrix,
    pub b_f: Vector,
    pub b_i: Vector,
    pub b_c: Vector,
    pub b_o: Vector,
}

impl LayerParams {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        let w = Matrix::zeros(hidden, input + hidden);
        let b = Vector::zeros(hidden);
        LayerParams {
            w_f: w.clone(),
            w_i: w.clone(),
            w_c: w.clone(),
            w_o: w,
            b_f: b.clone(),
            b_i: b.clone(),
            b_c: b.clone(),
            b_o: b,
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_f.rows()
    }

    /// Width of the non-recurrent input.
    pub fn input_width(&self) -> usize {
        self.w_f.cols() - self.w_f.rows()
    }

    fn check(&self) -> Result<()> {
        let shape = self.w_f.shape();
        for w in [&self.w_i, &self.w_c, &self.w_o] {
            if w.shape() != shape {
                return Err(Error::shape("LayerParams", format!("{shape:?}"), format!("{:?}", w.shape())));
            }
        }
        for b in [&self.b_f, &self.b_i, &self.b_c, &self.b_o] {
            if b.len() != shape.0 {
                return Err(Error::shape("LayerParams bias", shape.0, b.len()));
            }
        }
        if shape.1 <= shape.0 {
            return Err(Error::Validation("gate matrices must have input columns".into()));
        }
        Ok(())
    }
}

/// Every trainable array of the model. Also used for gradients and
/// optimizer moments, which share its shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights {
    pub layers: Vec<LayerParams>,
    pub w_y: Matrix,
    pub b_y: Vector,
}

/// Gradient of the loss with respect to each entry of [`Weights`].
pub type Gradients = Weights;

impl Weights {
    pub fn zeros(input: usize, dims: ModelDims, output: usize) -> Self {
        let layers = (0..dims.layers)
            .map(|l| LayerParams::zeros(if l == 0 { input } else { dims.hidden }, dims.hidden))
            .collect();
        Weights {
            layers,
            w_y: Matrix::zeros(output, dims.hidden),
            b_y: Vector::zeros(output),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.fill(0.0);
        z
    }

    pub fn fill(&mut self, value: f64) {
        for s in self.slices_mut() {
            s.fill(value);
        }
    }

    /// Arrays in serialization order: per layer `w_f, w_i, w_c, w_o, b_f,
    /// b_i, b_c, b_o`, then `w_y`, `b_y`.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 8 + 2);
        for l in &self.layers {
            out.extend([l.w_f.data(), l.w_i.data(), l.w_c.data(), l.w_o.data()]);
            out.extend([l.b_f.as_slice(), l.b_i.as_slice(), l.b_c.as_slice(), l.b_o.as_slice()]);
        }
        out.push(self.w_y.data());
        out.push(self.b_y.as_slice());
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.layers.len() * 8 + 2);
        for l in &mut self.layers {
            out.push(l.w_f.data_mut());
            out.push(l.w_i.data_mut());
            out.push(l.w_c.data_mut());
            out.push(l.w_o.data_mut());
            out.push(l.b_f.as_mut_slice());
            out.push(l.b_i.as_mut_slice());
            out.push(l.b_c.as_mut_slice());
            out.push(l.b_o.as_mut_slice());
        }
        out.push(self.w_y.data_mut());
        out.push(self.b_y.as_mut_slice());
        out
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn same_shape(&self, other: &Weights) -> bool {
        let a = self.slices();
        let b = other.slices();
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.len() == y.len())
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|x| x.is_finite()))
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Weights, scale: f64) {
        for (dst, src) in self.slices_mut().into_iter().zip(other.slices()) {
            crate::ndmath::axpy(scale, src, dst);
        }
    }

    pub fn norm(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub(crate) fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for s in self.slices() {
            for x in s {
                h = (h ^ x.to_bits()).wrapping_mul(0x0000_0100_0000_01B3);
            }
        }
        h
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelDims {
    pub hidden: usize,
    pub layers: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims {
            hidden: 128,
            layers: 2,
        }
    }
}

/// A full model: vocabulary, dimensions and weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub vocab: Vocabulary,
    pub aux_dim: usize,
    pub hidden: usize,
    pub weights: Weights,
}

impl ModelParams {
    /// All-zero weights.
    pub fn zeros(vocab: Vocabulary, dims: ModelDims) -> Result<Self> {
        check_dims(dims)?;
        let v = vocab.size();
        Ok(ModelParams {
            weights: Weights::zeros(v + AUX_DIM, dims, v),
            vocab,
            aux_dim: AUX_DIM,
            hidden: dims.hidden,
        })
    }

    /// Uniform `[-s, s]` weights with `s = 1/sqrt(fan_in)`; forget-gate
    /// biases start at 1, all other biases at 0.
    pub fn init(vocab: Vocabulary, dims: ModelDims, rng: &mut Prng) -> Result<Self> {
        let mut p = ModelParams::zeros(vocab, dims)?;
        for layer in &mut p.weights.layers {
            let (rows, cols) = layer.w_f.shape();
            let s = 1.0 / (cols as f64).sqrt();
            layer.w_f = Matrix::uniform(rows, cols, s, rng);
            layer.w_i = Matrix::uniform(rows, cols, s, rng);
            layer.w_c = Matrix::uniform(rows, cols, s, rng);
            layer.w_o = Matrix::uniform(rows, cols, s, rng);
            layer.b_f.fill(1.0);
        }
        let (rows, cols) = p.weights.w_y.shape();
        p.weights.w_y = Matrix::uniform(rows, cols, 1.0 / (cols as f64).sqrt(), rng);
        Ok(p)
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            hidden: self.hidden,
            layers: self.weights.layers.len(),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.size()
    }

    pub fn input_width(&self) -> usize {
        self.vocab.size() + self.aux_dim
    }

    /// Checks the shape invariants tying layers, vocabulary and output
    /// projection together.
    pub fn validate(&self) -> Result<()> {
        if self.weights.layers.is_empty() {
            return Err(Error::Validation("model needs at least one layer".into()));
        }
        for (l, layer) in self.weights.layers.iter().enumerate() {
            layer.check()?;
            let expect_in = if l == 0 { self.input_width() } else { self.hidden };
            if layer.hidden() != self.hidden || layer.input_width() != expect_in {
                return Err(Error::shape(
                    "ModelParams layer",
                    format!("{}x{}", self.hidden, expect_in + self.hidden),
                    format!("{:?}", layer.w_f.shape()),
                ));
            }
        }
        let v = self.vocab_size();
        if self.weights.w_y.shape() != (v, self.hidden) || self.weights.b_y.len() != v {
            return Err(Error::shape(
                "ModelParams output",
                format!("{v}x{}", self.hidden),
                format!("{:?}", self.weights.w_y.shape()),
            ));
        }
        Ok(())
    }

    pub fn zero_state(&self) -> LstmState {
        LstmState::zeros(self.weights.layers.len(), self.hidden)
    }
}

fn check_dims(dims: ModelDims) -> Result<()> {
    if dims.hidden == 0 || dims.layers == 0 {
        return Err(Error::Validation("hidden size and layer count must be positive".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerState {
    pub c: Vector,
    pub h: Vector,
}

/// Cell and hidden state of every layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmState {
    pub layers: Vec<LayerState>,
}

impl LstmState {
    pub fn zeros(layers: usize, hidden: usize) -> Self {
        LstmState {
            layers: (0..layers)
                .map(|_| LayerState {
                    c: Vector::zeros(hidden),
                    h: Vector::zeros(hidden),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab(n: usize) -> Vocabulary {
        Vocabulary::from_chars(('a'..).take(n).collect()).unwrap()
    }

    #[test]
    fn shapes_follow_vocab_and_dims() {
        let p = ModelParams::init(vocab(4), ModelDims { hidden: 3, layers: 2 }, &mut Prng::new(1)).unwrap();
        p.validate().unwrap();
        assert_eq!(p.weights.layers[0].w_f.shape(), (3, 6 + 5 + 3));
        assert_eq!(p.weights.layers[1].w_o.shape(), (3, 6));
        assert_eq!(p.weights.w_y.shape(), (6, 3));
        assert!(p.weights.layers.iter().all(|l| l.b_f.iter().all(|&b| b == 1.0)));
        assert!(p.weights.layers.iter().all(|l| l.b_i.iter().all(|&b| b == 0.0)));
        let s = 1.0 / 14f64.sqrt();
        assert!(p.weights.layers[0].w_c.data().iter().all(|x| x.abs() <= s));
    }

    #[test]
    fn validate_rejects_mismatched_output() {
        let mut p = ModelParams::zeros(vocab(4), ModelDims { hidden: 3, layers: 1 }).unwrap();
        p.weights.w_y = Matrix::zeros(5, 3);
        assert!(p.validate().is_err());
        assert!(ModelParams::zeros(vocab(2), ModelDims { hidden: 0, layers: 1 }).is_err());
    }

    #[test]
    fn init_is_seeded() {
        let dims = ModelDims { hidden: 4, layers: 2 };
        let a = ModelParams::init(vocab(3), dims, &mut Prng::new(9)).unwrap();
        let b = ModelParams::init(vocab(3), dims, &mut Prng::new(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.weights.fingerprint(), b.weights.fingerprint());
    }
}
