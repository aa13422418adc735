//! Explain one review title against the in-process toy backend.
//!
//!     cargo run --example explain_review -- "the pizza was cold ."

use proxplain::toy::{reviews, ToyBackend, ToyDecoderKind, DEFAULT_DIM};
use proxplain::{Explainer, ExplainerConfig, TokenSequence};

fn main() -> proxplain::Result<()> {
    let text = std::env::args().nth(1).unwrap_or_else(|| "the food was great .".into());
    let (toy, corpus) = ToyBackend::build(
        reviews::lexicon(),
        reviews::generate(400, 1),
        DEFAULT_DIM,
        ToyDecoderKind::CorpusNearest,
    )?;
    let explainer = Explainer::new(&corpus, toy.models(), ExplainerConfig::default())?;
    let ex = explainer.explain(&TokenSequence::parse(&text), 7, 0)?;

    println!("{} -> {} (p_pos {:.3})", ex.query, ex.class.as_str(), ex.prediction.p_pos);
    println!("intrinsic:");
    for w in ex.intrinsic() {
        println!("  {:>12} {:+.3}", w.token, w.weight);
    }
    println!("extrinsic:");
    for w in ex.extrinsic() {
        println!("  {:>12} {:+.3}", w.token, w.weight);
    }
    for (label, set) in [("factuals", &ex.factuals), ("counterfactuals", &ex.counterfactuals)] {
        println!("{label}:");
        for n in set {
            println!("  {:.3}  {}", n.confidence.p_pos, n.text);
        }
    }
    println!("editions:");
    for e in &ex.editions {
        println!("  {:<7} {:<40} flipped={}", e.op.as_str(), e.edited.to_string(), e.flipped);
    }
    Ok(())
}
