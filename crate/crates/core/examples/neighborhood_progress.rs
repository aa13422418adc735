//! Watch landmarks close in on the decision boundary, round by round.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use proxplain::toy::{reviews, ToyBackend, ToyDecoderKind};
use proxplain::{construct, NeighborhoodConfig, TokenSequence};

fn main() -> proxplain::Result<()> {
    let (toy, corpus) = ToyBackend::build(
        reviews::lexicon(),
        reviews::generate(600, 2),
        32,
        ToyDecoderKind::CorpusNearest,
    )?;
    let query = TokenSequence::parse("terrible service and rude staff .");
    let config = NeighborhoodConfig { k: 15, n: 60, ..NeighborhoodConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let nb = construct(&query, &corpus, &config, toy.models(), &mut rng)?;

    println!("seed landmarks: min distance {:.4}", nb.stats.seed_min_distance);
    for (i, t) in nb.stats.trace.iter().enumerate() {
        println!(
            "round {i}: landmark min {:.4}  best counterfactual {:.4}  new neighbors {}",
            t.landmark_min_distance, t.best_counterfactual_distance, t.new_neighbors
        );
    }
    println!(
        "{} factuals, {} counterfactuals, {} decode calls",
        nb.factuals.len(),
        nb.counterfactuals.len(),
        nb.stats.decode_calls
    );
    Ok(())
}
