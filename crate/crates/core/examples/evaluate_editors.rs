//! Compare explanation-guided edits with random edits on held-out reviews.

use proxplain::evaluation::{evaluate, EvaluationConfig};
use proxplain::toy::{reviews, ToyBackend, ToyDecoderKind};
use proxplain::{Explainer, ExplainerConfig};

fn main() -> proxplain::Result<()> {
    let (toy, corpus) = ToyBackend::build(
        reviews::lexicon(),
        reviews::generate(500, 1),
        32,
        ToyDecoderKind::CorpusNearest,
    )?;
    let explainer = Explainer::new(&corpus, toy.models(), ExplainerConfig::default())?;
    let test = reviews::generate(20, 77);
    let report = evaluate(&test, &explainer, &EvaluationConfig::default(), 5)?;

    for (name, m) in [("guided", &report.guided), ("baseline", &report.baseline)] {
        let a = &m.aggregate;
        println!(
            "{name:>8}: completeness {:.3} ± {:.3}  compactness {:.3} ± {:.3}",
            a.completeness.mean, a.completeness.std, a.compactness.mean, a.compactness.std
        );
    }
    if let Some(c) = report.guided.correctness {
        println!("correctness (compactness gain at raised threshold): {c:+.3}");
    }
    Ok(())
}
