//! Central finite-difference check of [`backward_bptt`].

use std::fmt;

use crate::error::Result;
use crate::ndmath::Vector;

use super::forward::{backward_bptt, forward_sequence_with, sequence_loss, ForwardOptions};
use super::{LstmState, ModelParams};

/// A component passes when `|a - n| <= abs_floor` or
/// `|a - n| / max(|a|, |n|) < rel_tol`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheckTolerance {
    pub epsilon: f64,
    pub rel_tol: f64,
    pub abs_floor: f64,
}

impl Default for GradCheckTolerance {
    fn default() -> Self {
        GradCheckTolerance {
            epsilon: 1e-5,
            rel_tol: 1e-4,
            abs_floor: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub failures: usize,
    /// Largest relative error among components above the absolute floor.
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// (tensor index in `Weights::slices` order, offset, analytic, numeric)
    pub worst: Option<(usize, usize, f64, f64)>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.checked > 0
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "checked={} failures={} max_rel={:.3e} max_abs={:.3e}",
            self.checked, self.failures, self.max_rel_error, self.max_abs_error
        )
    }
}

fn loss(params: &ModelParams, inputs: &[Vector], init: &LstmState, resets: &[bool], targets: &[usize]) -> Result<f64> {
    let opts = ForwardOptions {
        resets: Some(resets),
        dropout: None,
    };
    sequence_loss(&forward_sequence_with(params, inputs, init, opts)?.logits, targets)
}

/// Compares the analytic gradient of the mean sequence loss with central
/// differences, one parameter at a time.
pub fn gradient_check(
    params: &ModelParams,
    inputs: &[Vector],
    init: &LstmState,
    resets: &[bool],
    targets: &[usize],
    tol: GradCheckTolerance,
) -> Result<GradCheckReport> {
    let opts = ForwardOptions {
        resets: Some(resets),
        dropout: None,
    };
    let pass = forward_sequence_with(params, inputs, init, opts)?;
    let analytic = backward_bptt(params, &pass.cache, targets)?;
    let analytic: Vec<Vec<f64>> = analytic.slices().into_iter().map(<[f64]>::to_vec).collect();

    let mut probe = params.clone();
    let mut report = GradCheckReport {
        checked: 0,
        failures: 0,
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        worst: None,
    };
    for (t, grad) in analytic.iter().enumerate() {
        for (k, &a) in grad.iter().enumerate() {
            let orig = probe.weights.slices_mut()[t][k];
            probe.weights.slices_mut()[t][k] = orig + tol.epsilon;
            let up = loss(&probe, inputs, init, resets, targets)?;
            probe.weights.slices_mut()[t][k] = orig - tol.epsilon;
            let down = loss(&probe, inputs, init, resets, targets)?;
            probe.weights.slices_mut()[t][k] = orig;

            let n = (up - down) / (2.0 * tol.epsilon);
            let abs = (a - n).abs();
            report.checked += 1;
            report.max_abs_error = report.max_abs_error.max(abs);
            if abs <= tol.abs_floor {
                continue;
            }
            let rel = abs / a.abs().max(n.abs());
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst = Some((t, k, a, n));
            }
            if rel >= tol.rel_tol {
                report.failures += 1;
            }
        }
    }
    Ok(report)
}
