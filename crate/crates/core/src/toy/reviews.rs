//! Seeded generator of short restaurant-review titles and a matching
//! sentiment lexicon. Used by the examples, the CLI defaults and the test
//! fixtures.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Lexicon;
use crate::model::TokenSequence;

const POSITIVE: &[(&str, f64)] = &[
    ("great", 1.6),
    ("amazing", 1.8),
    ("excellent", 2.0),
    ("delicious", 1.7),
    ("friendly", 1.2),
    ("fantastic", 1.8),
    ("awesome", 1.6),
    ("perfect", 1.9),
    ("wonderful", 1.7),
    ("tasty", 1.1),
    ("fresh", 0.9),
    ("lovely", 1.3),
    ("best", 1.5),
    ("nice", 0.8),
    ("good", 1.0),
];

const NEGATIVE: &[(&str, f64)] = &[
    ("terrible", -1.9),
    ("awful", -1.8),
    ("horrible", -2.0),
    ("bland", -1.1),
    ("rude", -1.5),
    ("disgusting", -2.0),
    ("worst", -1.9),
    ("bad", -1.2),
    ("cold", -0.8),
    ("overpriced", -1.0),
    ("slow", -0.9),
    ("dirty", -1.4),
    ("mediocre", -1.0),
    ("stale", -1.2),
    ("poor", -1.3),
];

const FUNCTION_WORDS: &[(&str, f64)] = &[
    ("not", -1.5),
    ("never", -1.2),
    ("definitely", 1.0),
    ("recommend", 0.5),
    ("love", 1.5),
    ("hate", -1.6),
    ("worth", 1.0),
    ("disappointed", -1.5),
];

const NOUNS: &[&str] = &[
    "food", "service", "staff", "place", "pizza", "coffee", "prices", "atmosphere", "burger",
    "sushi", "waiter", "menu", "dessert", "portions", "drinks",
];

const INTENSIFIERS: &[&str] = &["really", "very", "so", "pretty", "quite"];

/// The sentiment lexicon matching [`generate`]'s vocabulary.
pub fn lexicon() -> Lexicon {
    Lexicon::from_pairs(
        POSITIVE
            .iter()
            .chain(NEGATIVE)
            .chain(FUNCTION_WORDS)
            .map(|&(w, v)| (w, v)),
    )
}

/// `n` pre-tokenized review titles, reproducible for a given seed.
pub fn generate(n: usize, seed: u64) -> Vec<TokenSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sentence(&mut rng)).collect()
}

fn adj(rng: &mut impl Rng, positive: bool) -> &'static str {
    let pool = if positive { POSITIVE } else { NEGATIVE };
    pool.choose(rng).unwrap().0
}

fn noun(rng: &mut impl Rng) -> &'static str {
    NOUNS.choose(rng).unwrap()
}

fn sentence(rng: &mut impl Rng) -> TokenSequence {
    let pos: bool = rng.gen_bool(0.5);
    let mut w: Vec<&str> = Vec::with_capacity(10);
    match rng.gen_range(0..11) {
        0 => {
            w.extend(["the", noun(rng), "was"]);
            if rng.gen_bool(0.5) {
                w.push(INTENSIFIERS.choose(rng).unwrap());
            }
            w.extend([adj(rng, pos), "."]);
        }
        1 => w.extend([adj(rng, pos), noun(rng), "and", adj(rng, pos), noun(rng), "."]),
        2 => {
            let modal = if pos { "definitely" } else { ["not", "never"][rng.gen_range(0..2)] };
            w.extend(["i", "would", modal, "recommend", "this", "place", "."]);
        }
        3 => w.extend([adj(rng, pos), noun(rng), "."]),
        4 => {
            let second = rng.gen_bool(0.7) ^ pos;
            w.extend(["the", noun(rng), "was", adj(rng, pos), "but", "the"]);
            w.extend([noun(rng), "was", adj(rng, second), "."]);
        }
        5 => w.extend(["would", if pos { "definitely" } else { "not" }, "recommend", "."]),
        6 => w.extend([adj(rng, pos), noun(rng), ",", adj(rng, pos), noun(rng), "."]),
        7 => w.extend(["i", if pos { "love" } else { "hate" }, "this", noun(rng), "."]),
        8 => {
            if !pos {
                w.push("not");
            }
            w.extend(["worth", "the", ["money", "wait", "price"][rng.gen_range(0..3)], "."]);
        }
        9 => {
            w.extend(["so", if pos { "good" } else { "disappointed" }, "with", "the"]);
            w.extend([noun(rng), "."]);
        }
        _ => {
            let modal = if pos { "definitely" } else { "never" };
            w.extend(["will", modal, "come", "back", "again", "."]);
        }
    }
    TokenSequence::from_tokens_unchecked(w.into_iter().map(str::to_owned).collect())
}
