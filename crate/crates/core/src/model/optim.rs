use crate::error::{Error, Result};
use crate::ndmath::{Prng, Vector};

use super::{Gradients, Weights};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates for every parameter plus the step count.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Weights,
    pub v: Weights,
}

impl OptimizerState {
    pub fn new(like: &Weights, config: AdamConfig) -> Self {
        OptimizerState {
            config,
            step: 0,
            m: like.zeros_like(),
            v: like.zeros_like(),
        }
    }
}

/// One bias-corrected adaptive-moment update, in place.
pub fn adam_step(weights: &mut Weights, grads: &Gradients, opt: &mut OptimizerState, lr: f64) -> Result<()> {
    if !weights.same_shape(grads) || !weights.same_shape(&opt.m) || !weights.same_shape(&opt.v) {
        return Err(Error::shape(
            "adam_step",
            format!("{} parameters", weights.len()),
            format!("{} gradients", grads.len()),
        ));
    }
    opt.step += 1;
    let AdamConfig { beta1, beta2, eps } = opt.config;
    let t = opt.step as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    let params = weights.slices_mut();
    let ms = opt.m.slices_mut();
    let vs = opt.v.slices_mut();
    for (((p, g), m), v) in params.into_iter().zip(grads.slices()).zip(ms).zip(vs) {
        for k in 0..p.len() {
            m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
            v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
            let m_hat = m[k] / bc1;
            let v_hat = v[k] / bc2;
            p[k] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

/// Rescales `grads` so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    let norm = grads.norm();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for sl in grads.slices_mut() {
            sl.iter_mut().for_each(|x| *x *= s);
        }
    }
    norm
}

/// Inverted-dropout mask: each entry is `1/keep_prob` with probability
/// `keep_prob`, else 0.
pub fn dropout_mask(rng: &mut Prng, width: usize, keep_prob: f64) -> Result<Vector> {
    if !(keep_prob > 0.0 && keep_prob <= 1.0) {
        return Err(Error::Validation(format!("keep_prob {keep_prob} not in (0, 1]")));
    }
    if keep_prob == 1.0 {
        return Ok(vec![1.0; width].into());
    }
    let scale = 1.0 / keep_prob;
    Ok((0..width)
        .map(|_| if rng.chance(keep_prob) { scale } else { 0.0 })
        .collect::<Vec<_>>()
        .into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LayerParams;
    use crate::ndmath::Matrix;

    fn scalar(x: f64) -> Weights {
        Weights {
            layers: Vec::<LayerParams>::new(),
            w_y: Matrix::new(1, 1, vec![x]).unwrap(),
            b_y: Vector::zeros(0),
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut w = scalar(0.7);
        let g = scalar(0.0);
        let mut opt = OptimizerState::new(&w, AdamConfig::default());
        adam_step(&mut w, &g, &mut opt, 0.1).unwrap();
        assert_eq!(w.w_y.get(0, 0), 0.7);
        assert_eq!(opt.step, 1);
    }

    #[test]
    fn first_step_moves_by_lr() {
        for g in [3.0, -0.01, 250.0] {
            let mut w = scalar(0.0);
            let mut opt = OptimizerState::new(&w, AdamConfig::default());
            adam_step(&mut w, &scalar(g), &mut opt, 0.002).unwrap();
            let moved = w.w_y.get(0, 0);
            assert!((moved.abs() - 0.002).abs() < 1e-8, "{moved}");
            assert_eq!(moved.signum(), -g.signum());
        }
    }

    #[test]
    fn three_step_trace_matches_frozen_oracle() {
        // theta0 = 1, grads 0.5, -0.2, 0.1, lr 0.01, default betas/eps;
        // frozen from a standalone scalar calculation.
        let expect = [0.9900000002, 0.9865439418116511, 0.9827500240835696];
        let mut w = scalar(1.0);
        let mut opt = OptimizerState::new(&w, AdamConfig::default());
        for (g, e) in [0.5, -0.2, 0.1].into_iter().zip(expect) {
            adam_step(&mut w, &scalar(g), &mut opt, 0.01).unwrap();
            assert!((w.w_y.get(0, 0) - e).abs() < 1e-14);
        }
        assert_eq!(opt.step, 3);
    }

    #[test]
    fn shape_mismatch() {
        let mut w = scalar(1.0);
        let g = Weights {
            layers: vec![],
            w_y: Matrix::zeros(2, 1),
            b_y: Vector::zeros(0),
        };
        let mut opt = OptimizerState::new(&w, AdamConfig::default());
        assert!(adam_step(&mut w, &g, &mut opt, 0.1).is_err());
    }

    #[test]
    fn clipping() {
        let mut g = Weights {
            layers: vec![],
            w_y: Matrix::new(1, 2, vec![3.0, 4.0]).unwrap(),
            b_y: Vector::zeros(0),
        };
        assert_eq!(clip_global_norm(&mut g, 10.0), 5.0);
        assert_eq!(g.w_y.data(), &[3.0, 4.0]);
        assert_eq!(clip_global_norm(&mut g, 1.0), 5.0);
        assert!((g.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dropout_examples() {
        let mut rng = Prng::new(11);
        assert!(dropout_mask(&mut rng, 8, 1.0).unwrap().iter().all(|&m| m == 1.0));
        assert!(dropout_mask(&mut rng, 8, 0.0).is_err());
        assert!(dropout_mask(&mut rng, 8, 1.5).is_err());

        let m = dropout_mask(&mut rng, 100_000, 0.8).unwrap();
        let zeros = m.iter().filter(|&&x| x == 0.0).count() as f64 / 1e5;
        assert!((0.19..=0.21).contains(&zeros), "{zeros}");
        let mean = m.iter().sum::<f64>() / 1e5;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
        assert!(m.iter().all(|&x| x == 0.0 || x == 1.25));
    }
}
