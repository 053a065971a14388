//! Corpus statistics on a fixture shaped like the beer-review sample: 4,999
//! reviews by 2,815 users over 1,372 beers.

use std::process::Command;

use revgen::corpus::{corpus_stats, load_reviews, write_reviews, RawRatings, RawReview};

const USERS: usize = 2815;
const ITEMS: usize = 1372;
const REVIEWS: usize = 4999;

fn fixture() -> Vec<RawReview> {
    (0..REVIEWS)
        .map(|i| RawReview {
            user_id: format!("user{}", i % USERS),
            item_id: format!("beer{}", (i * 3) % ITEMS),
            ratings: RawRatings::from_array([1.0 + (i % 9) as f64 * 0.5; 5]),
            text: format!("Review number {i}. Pours a clear amber with a modest head and a malty nose."),
            category: None,
        })
        .collect()
}

#[test]
fn stats_match_the_fixture_counts() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table1.jsonl");
    write_reviews(&path, &fixture()).unwrap();

    let stats = corpus_stats(&load_reviews(&path).unwrap());
    assert_eq!((stats.users, stats.items, stats.reviews), (USERS, ITEMS, REVIEWS));

    let out = Command::new(env!("CARGO_BIN_EXE_revgen"))
        .args(["stats", "--corpus", &path.display().to_string()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "# Users    2,815\n# Beers    1,372\n# Reviews  4,999\n"
    );
}
