//! Place a word where the surrounding context makes it most likely.

use proxplain::edition::{best_edition, best_placement, ContextModel, DEFAULT_EPSILON};
use proxplain::toy::{reviews, LexiconBlackBox};
use proxplain::{PredictedClass, TokenSequence};

fn main() -> proxplain::Result<()> {
    let texts: Vec<TokenSequence> = [
        "i would definitely recommend this place .",
        "would definitely recommend .",
        "the staff was not friendly .",
        "not worth the money .",
    ]
    .iter()
    .map(|t| TokenSequence::parse(t))
    .collect();
    let ctx = ContextModel::build(&texts, 2, DEFAULT_EPSILON);
    let blackbox = LexiconBlackBox::new(reviews::lexicon());

    let query = TokenSequence::parse("would not recommend .");
    for word in ["definitely", "not", "worth"] {
        let p = best_placement(&query, word, &ctx, true)?;
        println!("{word:>10}: {:?} at {} -> {}", p.op, p.position, p.apply(&query, word));
    }
    let e = best_edition(&query, "definitely", &ctx, &blackbox, PredictedClass::Negative)?;
    println!("edition: {} (p_pos {:.3}, flipped {})", e.edited, e.new_confidence.p_pos, e.flipped);
    Ok(())
}
