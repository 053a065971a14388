//! Forward pass over a sequence and its exact gradient (backpropagation
//! through time).
//!
//! Per layer and step, with `z = [x; h_prev]`:
//!
//! ```text
//! f = σ(W_f z + b_f)   i = σ(W_i z + b_i)   g = tanh(W_c z + b_c)   o = σ(W_o z + b_o)
//! c = f ⊙ c_prev + i ⊙ g
//! h = o ⊙ tanh(c)
//! ```
//!
//! Layer `l > 0` takes `x = h^{l-1} ⊙ m^{l-1}` where `m` is an optional
//! dropout mask; the output projection takes `h^{L-1} ⊙ m^{L-1}`. The
//! unmasked `h` is what recurs to the next step.

use crate::error::{Error, Result};
use crate::ndmath::{axpy, softmax_in_place, Vector, PROB_FLOOR};

use crate::corpus::RatingVector;

use super::cell::{concat, encode_into, step_raw, LstmStep};
use super::{Gradients, LayerState, LstmState, ModelParams};

#[derive(Clone, Copy, Debug, Default)]
pub struct ForwardOptions<'a> {
    /// `resets[t]` zeroes every layer's state right before step `t`.
    pub resets: Option<&'a [bool]>,
    /// `dropout[t][l]` multiplies layer `l`'s output on its way up at step `t`.
    pub dropout: Option<&'a [Vec<Vector>]>,
}

#[derive(Clone, Debug)]
struct StepCache {
    layers: Vec<LstmStep>,
    reset: bool,
    masks: Option<Vec<Vector>>,
    /// Input to the output projection.
    top: Vec<f64>,
    probs: Vec<f64>,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    fingerprint: u64,
    input_width: usize,
    steps: Vec<StepCache>,
}

impl ForwardCache {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Output distribution at step `t`.
    pub fn probs(&self, t: usize) -> &[f64] {
        &self.steps[t].probs
    }

    /// Summed (not averaged) cross-entropy against `targets`.
    pub fn loss_sum(&self, targets: &[usize]) -> Result<f64> {
        if targets.len() != self.steps.len() {
            return Err(Error::shape("loss_sum", self.steps.len(), targets.len()));
        }
        targets
            .iter()
            .zip(&self.steps)
            .map(|(&t, s)| {
                s.probs
                    .get(t)
                    .map(|p| -p.max(PROB_FLOOR).ln())
                    .ok_or(Error::Index {
                        index: t,
                        len: s.probs.len(),
                    })
            })
            .sum()
    }
}

#[derive(Clone, Debug)]
pub struct ForwardPass {
    pub logits: Vec<Vector>,
    pub final_state: LstmState,
    pub cache: ForwardCache,
}

pub fn forward_sequence(params: &ModelParams, inputs: &[Vector], init: &LstmState) -> Result<ForwardPass> {
    forward_sequence_with(params, inputs, init, ForwardOptions::default())
}

pub fn forward_sequence_with(
    params: &ModelParams,
    inputs: &[Vector],
    init: &LstmState,
    opts: ForwardOptions<'_>,
) -> Result<ForwardPass> {
    params.validate()?;
    let width = params.input_width();
    let n_layers = params.weights.layers.len();
    let hidden = params.hidden;
    if let Some(x) = inputs.iter().find(|x| x.len() != width) {
        return Err(Error::shape("forward_sequence input", width, x.len()));
    }
    if init.layers.len() != n_layers
        || init.layers.iter().any(|s| s.c.len() != hidden || s.h.len() != hidden)
    {
        return Err(Error::shape(
            "forward_sequence state",
            format!("{n_layers} layers of {hidden}"),
            format!("{} layers", init.layers.len()),
        ));
    }
    if let Some(r) = opts.resets {
        if r.len() != inputs.len() {
            return Err(Error::shape("forward_sequence resets", inputs.len(), r.len()));
        }
    }
    if let Some(d) = opts.dropout {
        let bad = d.len() != inputs.len()
            || d.iter().any(|m| m.len() != n_layers || m.iter().any(|v| v.len() != hidden));
        if bad {
            return Err(Error::shape(
                "forward_sequence dropout",
                format!("{} steps x {n_layers} layers x {hidden}", inputs.len()),
                format!("{} steps", d.len()),
            ));
        }
    }

    let w = &params.weights;
    let mut state = init.clone();
    let mut logits = Vec::with_capacity(inputs.len());
    let mut steps = Vec::with_capacity(inputs.len());
    for (t, x) in inputs.iter().enumerate() {
        let reset = opts.resets.is_some_and(|r| r[t]);
        if reset {
            state = params.zero_state();
        }
        let masks = opts.dropout.map(|d| d[t].clone());
        let mut layer_steps = Vec::with_capacity(n_layers);
        let mut below: Vec<f64> = x.as_slice().to_vec();
        for (l, layer) in w.layers.iter().enumerate() {
            let st = &state.layers[l];
            let s = step_raw(layer, concat(&below, &st.h), &st.c);
            below = s.h.clone();
            if let Some(m) = &masks {
                for (b, mk) in below.iter_mut().zip(m[l].iter()) {
                    *b *= mk;
                }
            }
            state.layers[l] = LayerState {
                c: s.c.clone().into(),
                h: s.h.clone().into(),
            };
            layer_steps.push(s);
        }
        let mut out = w.b_y.as_slice().to_vec();
        w.w_y.matvec_acc(&below, &mut out);
        let mut probs = out.clone();
        softmax_in_place(&mut probs);
        logits.push(out.into());
        steps.push(StepCache {
            layers: layer_steps,
            reset,
            masks,
            top: below,
            probs,
        });
    }
    Ok(ForwardPass {
        logits,
        final_state: state,
        cache: ForwardCache {
            fingerprint: w.fingerprint(),
            input_width: width,
            steps,
        },
    })
}

/// Advances `state` by one inference step (no dropout, no cache) and
/// returns the logits. Shapes are assumed valid.
pub(crate) fn step_logits(params: &ModelParams, token: usize, aux: &RatingVector, state: &mut LstmState) -> Vec<f64> {
    let w = &params.weights;
    let mut below = vec![0.0; params.input_width()];
    encode_into(token, aux, params.vocab_size(), &mut below);
    for (layer, st) in w.layers.iter().zip(state.layers.iter_mut()) {
        let s = step_raw(layer, concat(&below, &st.h), &st.c);
        st.c = s.c.into();
        below = s.h;
        st.h = below.clone().into();
    }
    let mut out = w.b_y.as_slice().to_vec();
    w.w_y.matvec_acc(&below, &mut out);
    out
}

/// Mean cross-entropy of `softmax(logits[t])` against `targets[t]`.
pub fn sequence_loss(logits: &[Vector], targets: &[usize]) -> Result<f64> {
    if logits.len() != targets.len() {
        return Err(Error::shape("sequence_loss", logits.len(), targets.len()));
    }
    if logits.is_empty() {
        return Err(Error::Validation("sequence_loss of an empty sequence".into()));
    }
    let mut total = 0.0;
    for (l, &t) in logits.iter().zip(targets) {
        if t >= l.len() {
            return Err(Error::Index { index: t, len: l.len() });
        }
        let mut p = l.as_slice().to_vec();
        softmax_in_place(&mut p);
        total += -p[t].max(PROB_FLOOR).ln();
    }
    Ok(total / targets.len() as f64)
}

/// Gradient of [`sequence_loss`] (the per-step mean) for the pass that
/// produced `cache`.
pub fn backward_bptt(params: &ModelParams, cache: &ForwardCache, targets: &[usize]) -> Result<Gradients> {
    if cache.is_empty() {
        return Err(Error::Validation("backward over an empty sequence".into()));
    }
    let mut grads = params.weights.zeros_like();
    backward_accumulate(params, cache, targets, 1.0 / targets.len() as f64, &mut grads)?;
    Ok(grads)
}

/// Adds `scale * ∂(Σ_t loss_t)/∂θ` into `grads`.
pub(crate) fn backward_accumulate(
    params: &ModelParams,
    cache: &ForwardCache,
    targets: &[usize],
    scale: f64,
    grads: &mut Gradients,
) -> Result<()> {
    let w = &params.weights;
    if cache.fingerprint != w.fingerprint() || cache.input_width != params.input_width() {
        return Err(Error::Validation(
            "forward cache does not belong to these parameters".into(),
        ));
    }
    if targets.len() != cache.steps.len() {
        return Err(Error::shape("backward_bptt targets", cache.steps.len(), targets.len()));
    }
    if !grads.same_shape(w) {
        return Err(Error::Validation("gradient buffer shape differs from parameters".into()));
    }
    let v = params.vocab_size();
    if let Some(&t) = targets.iter().find(|&&t| t >= v) {
        return Err(Error::Index { index: t, len: v });
    }

    let n_layers = w.layers.len();
    let hidden = params.hidden;
    let mut dh_next = vec![vec![0.0; hidden]; n_layers];
    let mut dc_next = vec![vec![0.0; hidden]; n_layers];
    let mut dlogits = vec![0.0; v];
    let mut da = [vec![0.0; hidden], vec![0.0; hidden], vec![0.0; hidden], vec![0.0; hidden]];

    for (step, &target) in cache.steps.iter().zip(targets).rev() {
        for (d, p) in dlogits.iter_mut().zip(&step.probs) {
            *d = scale * p;
        }
        dlogits[target] -= scale;
        grads.w_y.add_outer(&dlogits, &step.top);
        axpy(1.0, &dlogits, &mut grads.b_y);

        let mut dh_above = vec![0.0; hidden];
        w.w_y.tmatvec_acc(&dlogits, 0, &mut dh_above);
        if let Some(m) = &step.masks {
            for (d, mk) in dh_above.iter_mut().zip(m[n_layers - 1].iter()) {
                *d *= mk;
            }
        }

        for l in (0..n_layers).rev() {
            let s = &step.layers[l];
            let layer = &w.layers[l];
            let in_w = layer.input_width();
            let [da_f, da_i, da_g, da_o] = &mut da;
            let mut dc_prev = vec![0.0; hidden];
            for k in 0..hidden {
                let dh = dh_above[k] + dh_next[l][k];
                let dc = dh * s.o[k] * (1.0 - s.tanh_c[k] * s.tanh_c[k]) + dc_next[l][k];
                da_o[k] = dh * s.tanh_c[k] * s.o[k] * (1.0 - s.o[k]);
                da_f[k] = dc * s.c_prev[k] * s.f[k] * (1.0 - s.f[k]);
                da_i[k] = dc * s.g[k] * s.i[k] * (1.0 - s.i[k]);
                da_g[k] = dc * s.i[k] * (1.0 - s.g[k] * s.g[k]);
                dc_prev[k] = dc * s.f[k];
            }

            let g = &mut grads.layers[l];
            g.w_f.add_outer(da_f, &s.z);
            g.w_i.add_outer(da_i, &s.z);
            g.w_c.add_outer(da_g, &s.z);
            g.w_o.add_outer(da_o, &s.z);
            axpy(1.0, da_f, &mut g.b_f);
            axpy(1.0, da_i, &mut g.b_i);
            axpy(1.0, da_g, &mut g.b_c);
            axpy(1.0, da_o, &mut g.b_o);

            // Layer 0's input is data, so only the recurrent columns matter.
            let col_start = if l == 0 { in_w } else { 0 };
            let mut dz = vec![0.0; in_w + hidden - col_start];
            layer.w_f.tmatvec_acc(da_f, col_start, &mut dz);
            layer.w_i.tmatvec_acc(da_i, col_start, &mut dz);
            layer.w_c.tmatvec_acc(da_g, col_start, &mut dz);
            layer.w_o.tmatvec_acc(da_o, col_start, &mut dz);

            let dh_prev = dz.split_off(dz.len() - hidden);
            if l > 0 {
                dh_above = dz;
                if let Some(m) = &step.masks {
                    for (d, mk) in dh_above.iter_mut().zip(m[l - 1].iter()) {
                        *d *= mk;
                    }
                }
            }
            dh_next[l] = dh_prev;
            dc_next[l] = dc_prev;
        }

        if step.reset {
            for l in 0..n_layers {
                dh_next[l].fill(0.0);
                dc_next[l].fill(0.0);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{RatingVector, Vocabulary};
    use crate::model::{context_encode, lstm_cell_step, ModelDims};
    use crate::ndmath::{Matrix, Prng};

    fn vocab(n: usize) -> Vocabulary {
        Vocabulary::from_chars(('a'..).take(n).collect()).unwrap()
    }

    fn inputs(p: &ModelParams, tokens: &[usize], aux: f64) -> Vec<Vector> {
        let aux = RatingVector::splat(aux).unwrap();
        tokens
            .iter()
            .map(|&c| context_encode(c, &aux, p.vocab_size()).unwrap())
            .collect()
    }

    #[test]
    fn single_step_is_cell_plus_projection() {
        let p = ModelParams::init(vocab(5), ModelDims { hidden: 4, layers: 1 }, &mut Prng::new(2)).unwrap();
        let x = inputs(&p, &[3], 0.4);
        let pass = forward_sequence(&p, &x, &p.zero_state()).unwrap();
        let (_, h) = lstm_cell_step(&p.weights.layers[0], &x[0], &Vector::zeros(4), &Vector::zeros(4)).unwrap();
        let mut expect = p.weights.b_y.as_slice().to_vec();
        p.weights.w_y.matvec_acc(&h, &mut expect);
        assert_eq!(pass.logits[0].as_slice(), expect.as_slice());
    }

    #[test]
    fn two_steps_equal_chained_single_steps() {
        let p = ModelParams::init(vocab(6), ModelDims { hidden: 5, layers: 2 }, &mut Prng::new(4)).unwrap();
        let x = inputs(&p, &[1, 4], 0.7);
        let both = forward_sequence(&p, &x, &p.zero_state()).unwrap();
        let first = forward_sequence(&p, &x[..1], &p.zero_state()).unwrap();
        let second = forward_sequence(&p, &x[1..], &first.final_state).unwrap();
        assert_eq!(both.logits[0], first.logits[0]);
        assert_eq!(both.logits[1], second.logits[0]);
        assert_eq!(both.final_state, second.final_state);
    }

    #[test]
    fn zero_model_is_uniform() {
        let p = ModelParams::zeros(vocab(9), ModelDims { hidden: 3, layers: 2 }).unwrap();
        let x = inputs(&p, &[0, 1, 2, 3], 1.0);
        let pass = forward_sequence(&p, &x, &p.zero_state()).unwrap();
        for t in 0..4 {
            for &q in pass.cache.probs(t) {
                assert_eq!(q, 1.0 / 11.0);
            }
        }
        let loss = sequence_loss(&pass.logits, &[5, 6, 7, 10]).unwrap();
        assert!((loss - 11f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn loss_matches_direct_log_probability() {
        let p = ModelParams::init(vocab(4), ModelDims { hidden: 3, layers: 2 }, &mut Prng::new(8)).unwrap();
        let x = inputs(&p, &[4, 0, 1, 2], 0.3);
        let targets = [0, 1, 2, 5];
        let pass = forward_sequence(&p, &x, &p.zero_state()).unwrap();
        let direct: f64 = pass
            .logits
            .iter()
            .zip(targets)
            .map(|(l, t)| {
                let lse = l.iter().map(|v| v.exp()).sum::<f64>().ln();
                lse - l[t]
            })
            .sum::<f64>()
            / 4.0;
        let loss = sequence_loss(&pass.logits, &targets).unwrap();
        assert!((loss - direct).abs() < 1e-12);
        assert!((pass.cache.loss_sum(&targets).unwrap() / 4.0 - direct).abs() < 1e-12);
    }

    #[test]
    fn output_bias_gradient_is_mean_residual() {
        let p = ModelParams::init(vocab(5), ModelDims { hidden: 4, layers: 2 }, &mut Prng::new(5)).unwrap();
        let x = inputs(&p, &[5, 0, 3, 2, 2], 0.9);
        let targets = [0, 3, 2, 2, 6];
        let pass = forward_sequence(&p, &x, &p.zero_state()).unwrap();
        let g = backward_bptt(&p, &pass.cache, &targets).unwrap();
        for j in 0..p.vocab_size() {
            let expect: f64 = (0..5)
                .map(|t| pass.cache.probs(t)[j] - if targets[t] == j { 1.0 } else { 0.0 })
                .sum::<f64>()
                / 5.0;
            assert!((g.b_y[j] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn single_step_has_no_recurrent_gradient() {
        // With one step from a zero state, the recurrent (h_prev) columns
        // multiply zeros and must receive zero gradient.
        let p = ModelParams::init(vocab(5), ModelDims { hidden: 4, layers: 2 }, &mut Prng::new(6)).unwrap();
        let x = inputs(&p, &[1], 0.2);
        let pass = forward_sequence(&p, &x, &p.zero_state()).unwrap();
        let g = backward_bptt(&p, &pass.cache, &[2]).unwrap();
        for layer in &g.layers {
            let in_w = layer.input_width();
            for m in [&layer.w_f, &layer.w_i, &layer.w_c, &layer.w_o] {
                for r in 0..m.rows() {
                    assert!(m.row(r)[in_w..].iter().all(|&v| v == 0.0));
                }
            }
            // c_prev = 0, so the forget gate gets nothing either
            assert!(layer.b_f.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut p = ModelParams::init(vocab(3), ModelDims { hidden: 2, layers: 1 }, &mut Prng::new(1)).unwrap();
        let x = inputs(&p, &[0, 1], 0.5);
        let pass = forward_sequence(&p, &x, &p.zero_state()).unwrap();
        assert!(backward_bptt(&p, &pass.cache, &[1]).is_err());
        p.weights.b_y[0] += 1.0;
        assert!(matches!(
            backward_bptt(&p, &pass.cache, &[1, 2]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn aux_changes_logits_when_aux_columns_nonzero() {
        let mut p = ModelParams::zeros(vocab(3), ModelDims { hidden: 2, layers: 1 }).unwrap();
        p.weights.w_y = Matrix::new(5, 2, vec![1.0; 10]).unwrap();
        p.weights.w_y.set(0, 0, -1.0);
        let aux_col = p.vocab_size() + 2;
        p.weights.layers[0].w_c.set(0, aux_col, 0.8);
        p.weights.layers[0].b_i.fill(1.0);
        p.weights.layers[0].b_o.fill(1.0);
        let a = forward_sequence(&p, &inputs(&p, &[0], 0.0), &p.zero_state()).unwrap();
        let b = forward_sequence(&p, &inputs(&p, &[0], 1.0), &p.zero_state()).unwrap();
        assert_ne!(a.logits[0], b.logits[0]);
    }

    #[test]
    fn rejects_wrong_input_width() {
        let p = ModelParams::zeros(vocab(3), ModelDims { hidden: 2, layers: 1 }).unwrap();
        let bad = vec![Vector::zeros(4)];
        assert!(matches!(
            forward_sequence(&p, &bad, &p.zero_state()),
            Err(Error::Shape { .. })
        ));
    }
}
