//! Text generation from a trained model, conditioned on a rating vector.
//!
//! Generation primes the model with START and the chosen ratings from a
//! zero state, then repeatedly samples (or takes the argmax of) the next
//! symbol and feeds it back with the same ratings until END or `max_len`.

use crate::corpus::{RatingVector, Review, ReviewRecord, Symbol, AUX_DIM};
use crate::error::{Error, Result};
use crate::model::{step_logits, ModelParams};
use crate::ndmath::{argmax, sample_unchecked, softmax_in_place, Prng};

pub const DEFAULT_MAX_LEN: usize = 600;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeMode {
    Sampled,
    Greedy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationContext {
    pub aux: RatingVector,
    pub temperature: f64,
    pub max_len: usize,
    pub seed: u64,
    pub mode: DecodeMode,
}

impl GenerationContext {
    pub fn new(aux: RatingVector) -> Self {
        GenerationContext {
            aux,
            temperature: 1.0,
            max_len: DEFAULT_MAX_LEN,
            seed: 0,
            mode: DecodeMode::Sampled,
        }
    }

    pub fn greedy(aux: RatingVector) -> Self {
        GenerationContext {
            mode: DecodeMode::Greedy,
            ..GenerationContext::new(aux)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Validation(format!(
                "temperature {} must be positive",
                self.temperature
            )));
        }
        if self.max_len == 0 {
            return Err(Error::Validation("max_len must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generated {
    pub text: String,
    /// END was never produced; `text` stopped at `max_len`.
    pub truncated: bool,
}

pub fn generate(params: &ModelParams, ctx: &GenerationContext) -> Result<Generated> {
    ctx.validate()?;
    params.validate()?;
    if params.aux_dim != AUX_DIM {
        return Err(Error::Validation(format!(
            "model expects {} auxiliary values, generation supplies {AUX_DIM}",
            params.aux_dim
        )));
    }
    let vocab = &params.vocab;
    let start = vocab.start_index();
    let mut rng = Prng::new(ctx.seed);
    let mut state = params.zero_state();
    let mut token = start;
    let mut text = String::new();
    let mut emitted = 0;
    while emitted < ctx.max_len {
        let mut logits = step_logits(params, token, &ctx.aux, &mut state);
        // START only ever opens a review.
        logits[start] = f64::NEG_INFINITY;
        let next = match ctx.mode {
            DecodeMode::Greedy => argmax(&logits).expect("nonempty vocabulary"),
            DecodeMode::Sampled => {
                for l in logits.iter_mut() {
                    *l /= ctx.temperature;
                }
                softmax_in_place(&mut logits);
                sample_unchecked(&logits, &mut rng)
            }
        };
        match vocab.symbol(next) {
            Some(Symbol::Char(c)) => text.push(c),
            Some(Symbol::End) => {
                return Ok(Generated {
                    text,
                    truncated: false,
                })
            }
            _ => unreachable!("START is masked and indices are in range"),
        }
        emitted += 1;
        token = next;
    }
    Ok(Generated {
        text,
        truncated: true,
    })
}

/// Mean normalized ratings of one user or one item.
#[derive(Clone, Debug, PartialEq)]
pub struct RatingProfile {
    pub means: RatingVector,
    pub count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileKey<'a> {
    User(&'a str),
    Item(&'a str),
}

pub fn average_profile(records: &[ReviewRecord], key: ProfileKey<'_>) -> Result<RatingProfile> {
    let mut sum = [0.0; AUX_DIM];
    let mut count = 0;
    for r in records {
        let hit = match key {
            ProfileKey::User(id) => r.user_id() == id,
            ProfileKey::Item(id) => r.item_id() == id,
        };
        if hit {
            for (s, v) in sum.iter_mut().zip(r.ratings.values()) {
                *s += v;
            }
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::NotFound(match key {
            ProfileKey::User(id) => format!("user {id:?}"),
            ProfileKey::Item(id) => format!("item {id:?}"),
        }));
    }
    // clamp guards the [0,1] invariant against summation rounding
    let means = sum.map(|s| (s / count as f64).clamp(0.0, 1.0));
    Ok(RatingProfile {
        means: RatingVector::new(means)?,
        count,
    })
}

/// `alpha * user + (1 - alpha) * item`, componentwise.
pub fn blend_ratings(user: &RatingProfile, item: &RatingProfile, alpha: f64) -> Result<RatingVector> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Validation(format!("alpha {alpha} not in [0, 1]")));
    }
    let u = user.means.values();
    let b = item.means.values();
    let mut out = [0.0; AUX_DIM];
    for k in 0..AUX_DIM {
        out[k] = (alpha * u[k] + (1.0 - alpha) * b[k]).clamp(u[k].min(b[k]), u[k].max(b[k]));
    }
    RatingVector::new(out)
}

/// One generation per alpha, all with the same seed and decoding settings.
pub fn alpha_sweep(
    params: &ModelParams,
    user: &RatingProfile,
    item: &RatingProfile,
    alphas: &[f64],
    base: &GenerationContext,
) -> Result<Vec<(f64, Generated)>> {
    if alphas.is_empty() {
        return Err(Error::Validation("alpha list is empty".into()));
    }
    alphas
        .iter()
        .map(|&alpha| {
            let ctx = GenerationContext {
                aux: blend_ratings(user, item, alpha)?,
                ..base.clone()
            };
            Ok((alpha, generate(params, &ctx)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;
    use crate::model::ModelDims;
    use proptest::prelude::*;

    fn rec(user: &str, item: &str, r: [f64; 5]) -> ReviewRecord {
        ReviewRecord {
            user_id: user.into(),
            item_id: item.into(),
            ratings: RatingVector::new(r).unwrap(),
            text: "t".into(),
            category: None,
        }
    }

    fn profile(v: f64) -> RatingProfile {
        RatingProfile {
            means: RatingVector::splat(v).unwrap(),
            count: 1,
        }
    }

    fn model(seed: u64) -> ModelParams {
        let vocab = Vocabulary::from_chars("abc .".chars().collect::<std::collections::BTreeSet<_>>().into_iter().collect()).unwrap();
        ModelParams::init(vocab, ModelDims { hidden: 8, layers: 2 }, &mut Prng::new(seed)).unwrap()
    }

    #[test]
    fn average_profile_examples() {
        let v = [0.1, 0.2, 0.3, 0.4, 0.5];
        let p = average_profile(&[rec("u", "i", v)], ProfileKey::User("u")).unwrap();
        assert_eq!(p.means.values(), &v);
        assert_eq!(p.count, 1);

        let recs = [rec("u", "a", [0.0; 5]), rec("u", "b", [1.0; 5])];
        let p = average_profile(&recs, ProfileKey::User("u")).unwrap();
        assert_eq!(p.means.values(), &[0.5; 5]);

        let recs = [
            rec("u1", "x", [0.25, 0.5, 0.75, 1.0, 0.0]),
            rec("u2", "x", [0.75, 0.5, 0.25, 0.0, 1.0]),
            rec("u1", "y", [1.0, 1.0, 1.0, 1.0, 1.0]),
        ];
        let p = average_profile(&recs, ProfileKey::Item("x")).unwrap();
        assert_eq!(p.means.values(), &[0.5, 0.5, 0.5, 0.5, 0.5]);
        assert_eq!(p.count, 2);
        let p = average_profile(&recs, ProfileKey::User("u1")).unwrap();
        assert_eq!(p.means.values(), &[0.625, 0.75, 0.875, 1.0, 0.5]);

        assert!(matches!(
            average_profile(&recs, ProfileKey::User("nobody")),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn blend_examples() {
        let user = RatingProfile {
            means: RatingVector::new([0.9, 0.8, 0.7, 0.6, 0.5]).unwrap(),
            count: 3,
        };
        let item = RatingProfile {
            means: RatingVector::new([0.1, 0.2, 0.3, 0.4, 0.5]).unwrap(),
            count: 2,
        };
        assert_eq!(blend_ratings(&user, &item, 1.0).unwrap(), user.means);
        assert_eq!(blend_ratings(&user, &item, 0.0).unwrap(), item.means);
        assert_eq!(
            blend_ratings(&profile(1.0), &profile(0.0), 0.5).unwrap(),
            RatingVector::splat(0.5).unwrap()
        );
        assert!(blend_ratings(&user, &item, 1.5).is_err());
        assert!(blend_ratings(&user, &item, -0.1).is_err());
    }

    #[test]
    fn generation_respects_length_and_markers() {
        let p = model(1);
        for seed in 0..20 {
            let ctx = GenerationContext {
                max_len: 1,
                seed,
                ..GenerationContext::new(RatingVector::splat(0.5).unwrap())
            };
            let g = generate(&p, &ctx).unwrap();
            assert!(g.text.chars().count() <= 1);
        }
        let ctx = GenerationContext {
            max_len: 0,
            ..GenerationContext::new(RatingVector::splat(0.5).unwrap())
        };
        assert!(generate(&p, &ctx).is_err());
    }

    #[test]
    fn greedy_is_deterministic_and_matches_tiny_temperature() {
        let p = model(2);
        let aux = RatingVector::new([0.2, 0.9, 0.4, 0.6, 1.0]).unwrap();
        let g = GenerationContext {
            max_len: 40,
            ..GenerationContext::greedy(aux)
        };
        let a = generate(&p, &g).unwrap();
        assert_eq!(a, generate(&p, &g).unwrap());
        let cold = GenerationContext {
            temperature: 1e-6,
            mode: DecodeMode::Sampled,
            seed: 99,
            ..g.clone()
        };
        assert_eq!(generate(&p, &cold).unwrap(), a);
    }

    #[test]
    fn sampled_output_is_seeded() {
        let p = model(3);
        let ctx = GenerationContext {
            max_len: 50,
            seed: 12,
            ..GenerationContext::new(RatingVector::splat(0.3).unwrap())
        };
        assert_eq!(generate(&p, &ctx).unwrap(), generate(&p, &ctx).unwrap());
    }

    #[test]
    fn sweep_orders_and_degenerates() {
        let p = model(4);
        let base = GenerationContext {
            max_len: 30,
            seed: 5,
            ..GenerationContext::new(RatingVector::splat(0.0).unwrap())
        };
        let same = profile(0.7);
        let out = alpha_sweep(&p, &same, &same, &[1.0, 0.5, 0.0], &base).unwrap();
        assert_eq!(out.iter().map(|(a, _)| *a).collect::<Vec<_>>(), [1.0, 0.5, 0.0]);
        assert!(out.windows(2).all(|w| w[0].1 == w[1].1));
        assert!(alpha_sweep(&p, &same, &same, &[], &base).is_err());
        assert!(alpha_sweep(&p, &same, &same, &[2.0], &base).is_err());
    }

    proptest! {
        #[test]
        fn blend_is_convex(u in prop::array::uniform5(0.0f64..=1.0), b in prop::array::uniform5(0.0f64..=1.0), alpha in 0.0f64..=1.0) {
            let user = RatingProfile { means: RatingVector::new(u).unwrap(), count: 1 };
            let item = RatingProfile { means: RatingVector::new(b).unwrap(), count: 1 };
            let r = blend_ratings(&user, &item, alpha).unwrap();
            for k in 0..5 {
                prop_assert!(r.values()[k] >= u[k].min(b[k]) && r.values()[k] <= u[k].max(b[k]));
            }
        }

        #[test]
        fn generated_text_has_no_markers(seed in 0u64..500, max_len in 1usize..60) {
            let p = model(seed % 7);
            let ctx = GenerationContext { max_len, seed, ..GenerationContext::new(RatingVector::splat(0.5).unwrap()) };
            let g = generate(&p, &ctx).unwrap();
            prop_assert!(g.text.chars().count() <= max_len);
            prop_assert!(g.text.chars().all(|c| p.vocab.index_of(c).is_some()));
        }
    }
}
