//! Trade closeness for diversity when picking exemplars.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use proxplain::exemplars::{mean_pairwise_diversity, select, ExemplarConfig};
use proxplain::toy::{reviews, ToyBackend, ToyDecoderKind};
use proxplain::{construct, NeighborhoodConfig, TokenSequence};

fn main() -> proxplain::Result<()> {
    let (toy, corpus) = ToyBackend::build(
        reviews::lexicon(),
        reviews::generate(500, 9),
        32,
        ToyDecoderKind::CorpusNearest,
    )?;
    let query = TokenSequence::parse("the pasta was delicious .");
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let nb = construct(&query, &corpus, &NeighborhoodConfig::default(), toy.models(), &mut rng)?;

    for lambda in [0.0, 0.5, 1.0] {
        let picked = select(&nb.factuals, &nb.pivot, &ExemplarConfig { lambda, set_size: 4 })?;
        let div = mean_pairwise_diversity(&picked, &nb.pivot)?;
        println!("lambda {lambda:.1}  diversity {div:.3}");
        for n in &picked {
            println!("    {:.3}  {}", n.distance_to_pivot, n.text);
        }
    }
    Ok(())
}
