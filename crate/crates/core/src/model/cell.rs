use crate::corpus::RatingVector;
use crate::error::{Error, Result};
use crate::ndmath::{sigmoid_scalar, Matrix, Vector};

use super::LayerParams;

/// `[one_hot(char_index); aux]`.
pub fn context_encode(char_index: usize, aux: &RatingVector, vocab_size: usize) -> Result<Vector> {
    if char_index >= vocab_size {
        return Err(Error::Index {
            index: char_index,
            len: vocab_size,
        });
    }
    let mut out = Vector::zeros(vocab_size + aux.values().len());
    encode_into(char_index, aux, vocab_size, &mut out);
    Ok(out)
}

pub(crate) fn encode_into(char_index: usize, aux: &RatingVector, vocab_size: usize, out: &mut [f64]) {
    out.fill(0.0);
    out[char_index] = 1.0;
    out[vocab_size..].copy_from_slice(aux.values());
}

/// Intermediate values of one LSTM step, kept for the backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmStep {
    /// `[x; h_prev]`
    pub z: Vec<f64>,
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    /// candidate cell value
    pub g: Vec<f64>,
    pub o: Vec<f64>,
    pub c_prev: Vec<f64>,
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

/// Runs one cell on a prepared `z = [x; h_prev]`. No shape checks.
pub(crate) fn step_raw(p: &LayerParams, z: Vec<f64>, c_prev: &[f64]) -> LstmStep {
    let n = p.hidden();
    let mut f = p.b_f.as_slice().to_vec();
    let mut i = p.b_i.as_slice().to_vec();
    let mut g = p.b_c.as_slice().to_vec();
    let mut o = p.b_o.as_slice().to_vec();
    p.w_f.matvec_acc(&z, &mut f);
    p.w_i.matvec_acc(&z, &mut i);
    p.w_c.matvec_acc(&z, &mut g);
    p.w_o.matvec_acc(&z, &mut o);
    let mut c = vec![0.0; n];
    let mut tanh_c = vec![0.0; n];
    let mut h = vec![0.0; n];
    for k in 0..n {
        f[k] = sigmoid_scalar(f[k]);
        i[k] = sigmoid_scalar(i[k]);
        g[k] = g[k].tanh();
        o[k] = sigmoid_scalar(o[k]);
        c[k] = f[k] * c_prev[k] + i[k] * g[k];
        tanh_c[k] = c[k].tanh();
        h[k] = o[k] * tanh_c[k];
    }
    LstmStep {
        z,
        f,
        i,
        g,
        o,
        c_prev: c_prev.to_vec(),
        c,
        tanh_c,
        h,
    }
}

pub(crate) fn concat(x: &[f64], h: &[f64]) -> Vec<f64> {
    let mut z = Vec::with_capacity(x.len() + h.len());
    z.extend_from_slice(x);
    z.extend_from_slice(h);
    z
}

/// One LSTM step; returns the new `(cell, hidden)` pair.
pub fn lstm_cell_step(
    params: &LayerParams,
    x: &Vector,
    prev_c: &Vector,
    prev_h: &Vector,
) -> Result<(Vector, Vector)> {
    params.check()?;
    let n = params.hidden();
    if x.len() != params.input_width() {
        return Err(Error::shape("lstm_cell_step input", params.input_width(), x.len()));
    }
    if prev_c.len() != n || prev_h.len() != n {
        return Err(Error::shape(
            "lstm_cell_step state",
            n,
            format!("c={} h={}", prev_c.len(), prev_h.len()),
        ));
    }
    let s = step_raw(params, concat(x, prev_h), prev_c);
    Ok((s.c.into(), s.h.into()))
}

/// Plain recurrent cell `h = tanh(W_x x + W_h h_prev)`, kept as a baseline.
pub fn rnn_cell_step(w_x: &Matrix, w_h: &Matrix, x: &Vector, prev_h: &Vector) -> Result<Vector> {
    if w_x.cols() != x.len() || w_h.cols() != prev_h.len() || w_x.rows() != w_h.rows() {
        return Err(Error::shape(
            "rnn_cell_step",
            format!("W_x {:?}, W_h {:?}", w_x.shape(), w_h.shape()),
            format!("x {}, h {}", x.len(), prev_h.len()),
        ));
    }
    let mut out = vec![0.0; w_x.rows()];
    w_x.matvec_acc(x, &mut out);
    w_h.matvec_acc(prev_h, &mut out);
    Ok(out.into_iter().map(f64::tanh).collect::<Vec<_>>().into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        x.to_vec().into()
    }

    #[test]
    fn context_encode_examples() {
        let aux = RatingVector::new([0.5, 0.5, 0.75, 1.0, 0.25]).unwrap();
        let x = context_encode(1, &aux, 3).unwrap();
        assert_eq!(x.as_slice(), &[0.0, 1.0, 0.0, 0.5, 0.5, 0.75, 1.0, 0.25]);

        let zero = RatingVector::splat(0.0).unwrap();
        let x = context_encode(0, &zero, 7).unwrap();
        assert_eq!(x.len(), 12);
        assert!(x[7..].iter().all(|&a| a == 0.0));

        assert!(matches!(context_encode(3, &zero, 3), Err(Error::Index { .. })));
    }

    #[test]
    fn zero_weights_cell() {
        let p = LayerParams::zeros(2, 3);
        let (c, h) = lstm_cell_step(&p, &v(&[1.0, -1.0]), &Vector::zeros(3), &v(&[0.3, 0.2, 0.1])).unwrap();
        assert_eq!(c.as_slice(), &[0.0; 3]);
        assert_eq!(h.as_slice(), &[0.0; 3]);

        let prev_c = v(&[2.0, -1.0, 0.4]);
        let (c, h) = lstm_cell_step(&p, &v(&[1.0, -1.0]), &prev_c, &Vector::zeros(3)).unwrap();
        for k in 0..3 {
            assert_eq!(c[k], 0.5 * prev_c[k]);
            assert_eq!(h[k], 0.5 * (0.5 * prev_c[k]).tanh());
        }
    }

    #[test]
    fn scalar_cell_matches_frozen_oracle() {
        // Values frozen from a standalone scalar calculation of the gate
        // equations with x = 0.8, c_prev = 0.5, h_prev = -0.4.
        let m = |a: f64, b: f64| Matrix::new(1, 2, vec![a, b]).unwrap();
        let p = LayerParams {
            w_f: m(0.5, -0.3),
            w_i: m(-0.2, 0.4),
            w_c: m(0.7, 0.1),
            w_o: m(0.3, 0.6),
            b_f: v(&[0.1]),
            b_i: v(&[0.0]),
            b_c: v(&[-0.1]),
            b_o: v(&[0.2]),
        };
        let (c, h) = lstm_cell_step(&p, &v(&[0.8]), &v(&[0.5]), &v(&[-0.4])).unwrap();
        assert!((c[0] - 0.4920882806155695).abs() < 1e-15);
        assert!((h[0] - 0.2506540899138858).abs() < 1e-15);
    }

    #[test]
    fn cell_shape_errors() {
        let p = LayerParams::zeros(2, 3);
        assert!(lstm_cell_step(&p, &v(&[1.0]), &Vector::zeros(3), &Vector::zeros(3)).is_err());
        assert!(lstm_cell_step(&p, &v(&[1.0, 0.0]), &Vector::zeros(2), &Vector::zeros(3)).is_err());
    }

    #[test]
    fn gates_stay_in_range() {
        let mut rng = crate::ndmath::Prng::new(3);
        let mut p = LayerParams::zeros(4, 5);
        p.w_f = Matrix::uniform(5, 9, 4.0, &mut rng);
        p.w_i = Matrix::uniform(5, 9, 4.0, &mut rng);
        p.w_c = Matrix::uniform(5, 9, 4.0, &mut rng);
        p.w_o = Matrix::uniform(5, 9, 4.0, &mut rng);
        let z: Vec<f64> = (0..9).map(|_| rng.uniform(-3.0, 3.0)).collect();
        let s = step_raw(&p, z, &[0.1, -0.2, 0.3, 2.0, -5.0]);
        for k in 0..5 {
            for g in [s.f[k], s.i[k], s.o[k]] {
                assert!(g > 0.0 && g < 1.0);
            }
            assert!(s.g[k] > -1.0 && s.g[k] < 1.0);
        }
    }

    #[test]
    fn rnn_cell_examples() {
        let z = Matrix::zeros(2, 3);
        let h = rnn_cell_step(&z, &Matrix::zeros(2, 2), &v(&[1.0, 2.0, 3.0]), &v(&[0.5, 0.5])).unwrap();
        assert_eq!(h.as_slice(), &[0.0, 0.0]);

        let w_x = Matrix::new(2, 1, vec![0.3, -0.7]).unwrap();
        let a = rnn_cell_step(&w_x, &Matrix::zeros(2, 2), &v(&[1.0]), &v(&[0.9, -0.9])).unwrap();
        let b = rnn_cell_step(&w_x, &Matrix::zeros(2, 2), &v(&[1.0]), &v(&[-3.0, 4.0])).unwrap();
        assert_eq!(a, b);

        // frozen scalar oracle: tanh(0.9*0.5 - 0.6*0.3)
        let w_x = Matrix::new(1, 1, vec![0.9]).unwrap();
        let w_h = Matrix::new(1, 1, vec![-0.6]).unwrap();
        let h = rnn_cell_step(&w_x, &w_h, &v(&[0.5]), &v(&[0.3])).unwrap();
        assert!((h[0] - 0.2636248354722033).abs() < 1e-15);

        assert!(rnn_cell_step(&w_x, &w_h, &v(&[0.5, 1.0]), &v(&[0.3])).is_err());
    }
}
