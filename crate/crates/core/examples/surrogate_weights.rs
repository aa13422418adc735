//! Weighted ridge on a tiny bag-of-words table, then word importances for a
//! real neighborhood.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use proxplain::surrogate::{self, extract_importances, weighted_ridge, SurrogateConfig};
use proxplain::toy::{reviews, ToyBackend, ToyDecoderKind};
use proxplain::{construct, NeighborhoodConfig, TokenSequence};

fn main() -> proxplain::Result<()> {
    // columns: great, cold; target is p_pos
    let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![0.0, 0.0]];
    let targets = [0.9, 0.1, 0.5, 0.5];
    let weights = [1.0, 1.0, 0.5, 0.25];
    let (coef, intercept) = weighted_ridge(&rows, &targets, &weights, 0.01)?;
    println!("great {:+.3}  cold {:+.3}  intercept {:.3}", coef[0], coef[1], intercept);

    let (toy, corpus) = ToyBackend::build(
        reviews::lexicon(),
        reviews::generate(400, 5),
        32,
        ToyDecoderKind::CorpusNearest,
    )?;
    let query = TokenSequence::parse("cold pizza but friendly staff .");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let nb = construct(&query, &corpus, &NeighborhoodConfig::default(), toy.models(), &mut rng)?;
    let neighbors: Vec<_> = nb.all().cloned().collect();
    let model = surrogate::fit(&neighbors, &nb.pivot, &query, SurrogateConfig::default())?;
    for w in extract_importances(&model, &query, nb.query_class).all().iter().take(10) {
        println!("{:>12} {:+.3} {:?} {:?}", w.token, w.weight, w.origin, w.supports);
    }
    Ok(())
}
