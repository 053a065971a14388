//! Synthetic review corpora with known structure.

use crate::corpus::{RawRatings, RawReview};
use crate::error::{Error, Result};
use crate::ndmath::Prng;

pub const POSITIVE_MARKERS: [&str; 5] = ["superb", "lovely", "delicious", "excellent", "wonderful"];
pub const NEGATIVE_MARKERS: [&str; 5] = ["awful", "stale", "watery", "bland", "harsh"];
const PLANTED_NOUNS: [&str; 6] = ["head", "aroma", "body", "malt", "hops", "color"];

pub const MIN_PLANTED: usize = 100;

/// High-rated reviews use only positive markers, low-rated ones only
/// negative markers. Each user leans one way; 80% of their reviews follow
/// the leaning.
pub fn planted_corpus(seed: u64, n_reviews: usize) -> Result<Vec<RawReview>> {
    if n_reviews < MIN_PLANTED {
        return Err(Error::Validation(format!(
            "planted corpus needs at least {MIN_PLANTED} reviews, got {n_reviews}"
        )));
    }
    let mut rng = Prng::new(seed);
    let n_users = (n_reviews / 8).max(2);
    let n_items = (n_reviews / 16).max(2);
    let mut out = Vec::with_capacity(n_reviews);
    for _ in 0..n_reviews {
        let user = rng.below(n_users);
        let item = rng.below(n_items);
        let leans_positive = user % 2 == 0;
        let positive = leans_positive == rng.chance(0.8);
        let (markers, levels) = if positive {
            (&POSITIVE_MARKERS, [4.0, 4.5, 5.0])
        } else {
            (&NEGATIVE_MARKERS, [1.0, 1.5, 2.0])
        };
        let mut ratings = [0.0; 5];
        for r in &mut ratings {
            *r = *rng.choose(&levels);
        }
        let m = |rng: &mut Prng| *rng.choose(markers);
        let n = |rng: &mut Prng| *rng.choose(&PLANTED_NOUNS);
        let text = format!(
            "a {} beer with a {} {}, {} {} and a {} {}.",
            m(&mut rng),
            m(&mut rng),
            n(&mut rng),
            m(&mut rng),
            n(&mut rng),
            m(&mut rng),
            n(&mut rng),
        );
        out.push(RawReview {
            user_id: format!("u{user}"),
            item_id: format!("b{item}"),
            ratings: RawRatings::from_array(ratings),
            text,
            category: None,
        });
    }
    Ok(out)
}

const COLORS: [&str; 8] = [
    "golden", "pale straw", "deep amber", "copper", "hazy orange", "dark brown", "jet black", "ruby",
];
const CLARITY: [&str; 4] = ["clear", "hazy", "cloudy", "brilliant"];
const HEADS: [&str; 5] = ["thin white", "finger of off-white", "thick tan", "fluffy beige", "modest khaki"];
const RETENTION: [&str; 4] = [
    "fades quickly",
    "leaves some lacing on the glass",
    "sticks around for a while",
    "settles into a thin collar",
];
const NOTES: [&str; 16] = [
    "citrus", "pine", "caramel", "toffee", "roasted malt", "chocolate", "coffee", "grapefruit",
    "bread", "honey", "banana", "clove", "dark fruit", "biscuit", "grass", "vanilla",
];
const STYLES: [&str; 8] = [
    "IPA", "stout", "porter", "pale ale", "lager", "wheat beer", "saison", "brown ale",
];
const BODY: [&str; 3] = ["light", "medium", "full"];
const CARBONATION: [&str; 3] = ["soft", "moderate", "lively"];

fn quality_words(level: usize) -> &'static [&'static str] {
    match level {
        0 => &["disappointing", "mediocre", "unpleasant", "forgettable"],
        1 => &["decent", "solid", "pleasant", "reasonable"],
        _ => &["wonderful", "excellent", "outstanding", "delicious"],
    }
}

fn level(raw: f64) -> usize {
    if raw < 2.5 {
        0
    } else if raw < 4.0 {
        1
    } else {
        2
    }
}

fn article(word: &str) -> &'static str {
    if word.starts_with(['a', 'e', 'i', 'o', 'u']) {
        "an"
    } else {
        "a"
    }
}

fn verdict(level: usize) -> &'static str {
    ["avoid in the future", "happily drink again", "seek out again and again"][level]
}

/// Beer-review-like texts built from a small grammar whose adjectives track
/// the per-aspect ratings. Texts run two to five sentences.
pub fn desk_corpus(seed: u64, n_reviews: usize) -> Result<Vec<RawReview>> {
    if n_reviews == 0 {
        return Err(Error::Validation("desk corpus needs at least one review".into()));
    }
    let mut rng = Prng::new(seed);
    let n_users = (n_reviews / 4).max(1);
    let n_items = (n_reviews / 8).max(1);
    let mut out = Vec::with_capacity(n_reviews);
    for _ in 0..n_reviews {
        let base = 1.0 + rng.below(9) as f64 * 0.5;
        let mut ratings = [0.0; 5];
        for r in &mut ratings {
            let jitter = rng.below(3) as f64 * 0.5 - 0.5;
            *r = (base + jitter).clamp(1.0, 5.0);
        }
        let [appearance, aroma, palate, taste, overall] = ratings.map(level);
        let mut sentences = Vec::new();

        sentences.push(format!(
            "Pours a {} {} color with a {} head that {}.",
            rng.choose(&CLARITY),
            rng.choose(&COLORS),
            rng.choose(&HEADS),
            rng.choose(&RETENTION)
        ));
        if appearance == 0 && rng.chance(0.5) {
            sentences.push("Not much to look at in the glass.".into());
        }
        if rng.chance(0.8) {
            let q = rng.choose(quality_words(aroma));
            sentences.push(if rng.chance(0.5) {
                format!(
                    "The aroma is {q} with notes of {}, {} and a little {}.",
                    rng.choose(&NOTES),
                    rng.choose(&NOTES),
                    rng.choose(&NOTES)
                )
            } else {
                format!("Smells of {} and {}, quite {q} overall.", rng.choose(&NOTES), rng.choose(&NOTES))
            });
        }
        if rng.chance(0.6) {
            sentences.push(format!(
                "Mouthfeel is {} bodied with {} carbonation and a {} finish.",
                rng.choose(&BODY),
                rng.choose(&CARBONATION),
                rng.choose(quality_words(palate))
            ));
        }
        if rng.chance(0.8) {
            sentences.push(format!(
                "The taste is {} with {} up front and {} on the back end.",
                rng.choose(quality_words(taste)),
                rng.choose(&NOTES),
                rng.choose(&NOTES)
            ));
        }
        let q = rng.choose(quality_words(overall));
        sentences.push(format!(
            "Overall {} {q} {} that I would {}.",
            article(q),
            rng.choose(&STYLES),
            verdict(overall)
        ));
        out.push(RawReview {
            user_id: format!("u{}", rng.below(n_users)),
            item_id: format!("b{}", rng.below(n_items)),
            ratings: RawRatings::from_array(ratings),
            text: sentences.join(" "),
            category: Some(rng.choose(&STYLES).to_string()),
        });
    }
    Ok(out)
}
