//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Every oracle below is computed from scratch in this file and shares no
//! code with the library beyond its public data types.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use proxplain::edition::{best_edition, ContextModel, EditOp};
use proxplain::evaluation::{evaluate, EditionAggregate, EditionRow, EvaluationConfig};
use proxplain::exemplars::{select_indices, ExemplarConfig};
use proxplain::neighborhood::seed_landmarks;
use proxplain::surrogate::{fit, weighted_ridge, SurrogateConfig};
use proxplain::toy::{reviews, HexCodec, LatentLinearBlackBox, Lexicon, LexiconBlackBox, ToyBackend, ToyDecoderKind};
use proxplain::{
    cli, construct, interpolate, BlackBox, ConfidenceVector, Corpus, CorpusEntry, Error, Explainer,
    ExplainerConfig, LatentVector, Models, Neighbor, NeighborhoodConfig, PredictedClass, TokenSequence,
};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- oracles

fn o_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn o_cos_dist(a: &[f64], b: &[f64]) -> f64 {
    let c = o_dot(a, b) / (o_dot(a, a).sqrt() * o_dot(b, b).sqrt());
    (1.0 - c).clamp(0.0, 2.0)
}

fn gaussian(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = o_dot(&v, &v).sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn lv(v: &[f64]) -> LatentVector {
    LatentVector::new(v.to_vec()).unwrap()
}

fn neighbor(text: TokenSequence, z: &[f64], p_pos: f64, pivot: &[f64]) -> Neighbor {
    let confidence = ConfidenceVector::from_positive(p_pos).unwrap();
    Neighbor {
        text,
        latent: lv(z),
        class: confidence.class(),
        confidence,
        distance_to_pivot: o_cos_dist(z, pivot),
    }
}

/// Gaussian elimination with partial pivoting.
fn o_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = ((r + 1)..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Intercept-augmented weighted normal equations, intercept unpenalized.
/// Returns (intercept, coefficients).
fn o_ridge(rows: &[Vec<f64>], y: &[f64], w: &[f64], ridge: f64) -> (f64, Vec<f64>) {
    let p = rows[0].len() + 1;
    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![0.0; p];
    for ((row, yi), wi) in rows.iter().zip(y).zip(w) {
        let x: Vec<f64> = std::iter::once(1.0).chain(row.iter().copied()).collect();
        for i in 0..p {
            b[i] += wi * x[i] * yi;
            for j in 0..p {
                a[i][j] += wi * x[i] * x[j];
            }
        }
    }
    for (i, row) in a.iter_mut().enumerate().skip(1) {
        row[i] += ridge;
    }
    let beta = o_solve(a, b);
    (beta[0], beta[1..].to_vec())
}

/// `P(w | u)` counted directly from the texts.
fn o_prob(texts: &[Vec<String>], l: usize, w: &str, u: &str) -> f64 {
    let (mut occ, mut hit) = (0.0, 0.0);
    for t in texts {
        for (i, tok) in t.iter().enumerate() {
            if tok != u {
                continue;
            }
            occ += 1.0;
            let lo = i.saturating_sub(l);
            let hi = (i + l).min(t.len() - 1);
            if (lo..=hi).any(|j| j != i && t[j] == w) {
                hit += 1.0;
            }
        }
    }
    if occ == 0.0 {
        0.0
    } else {
        hit / occ
    }
}

fn o_score(texts: &[Vec<String>], l: usize, eps: f64, edited: &[String], pos: usize) -> f64 {
    let lo = pos.saturating_sub(l);
    let hi = (pos + l).min(edited.len() - 1);
    (lo..=hi)
        .filter(|&i| i != pos)
        .map(|i| (o_prob(texts, l, &edited[pos], &edited[i]) + eps).ln())
        .sum()
}

/// Greedy exemplar choice, rescoring every candidate from scratch each step.
fn o_greedy(cands: &[Vec<f64>], pivot: &[f64], lambda: f64, size: usize) -> Vec<usize> {
    let dist: Vec<f64> = cands.iter().map(|z| o_cos_dist(z, pivot)).collect();
    let delta: Vec<Vec<f64>> = cands.iter().map(|z| z.iter().zip(pivot).map(|(a, b)| a - b).collect()).collect();
    let pair = |i: usize, j: usize| {
        if delta[i].iter().all(|x| *x == 0.0) || delta[j].iter().all(|x| *x == 0.0) {
            0.0
        } else {
            o_cos_dist(&delta[i], &delta[j])
        }
    };
    let mut chosen: Vec<usize> = Vec::new();
    while chosen.len() < size.min(cands.len()) {
        let m = chosen.len() as f64;
        let mut best: Option<(usize, f64)> = None;
        for i in 0..cands.len() {
            if chosen.contains(&i) {
                continue;
            }
            let div = if chosen.is_empty() {
                0.0
            } else {
                let mut set = chosen.clone();
                set.push(i);
                let mut s = 0.0;
                for a in 0..set.len() {
                    for b in (a + 1)..set.len() {
                        s += pair(set[a], set[b]);
                    }
                }
                s / ((m * m + m) / 2.0)
            };
            let r = (1.0 - lambda) * -dist[i] + lambda * div;
            let better = match best {
                None => true,
                Some((bi, br)) => r > br || (r == br && dist[i] < dist[bi]),
            };
            if better {
                best = Some((i, r));
            }
        }
        chosen.push(best.unwrap().0);
    }
    chosen
}

// --------------------------------------------------------------- criteria

fn interpolation_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_end: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    let mut slowest = Duration::ZERO;
    for _ in 0..100 {
        let (zp, zq) = (gaussian(&mut rng, 64), gaussian(&mut rng, 64));
        let (a, b) = (lv(&zp), lv(&zq));
        let t = Instant::now();
        let pts = interpolate(&a, &b, 10).unwrap();
        slowest = slowest.max(t.elapsed());
        if pts.len() != 11 {
            return Err(format!("{} points", pts.len()));
        }
        for c in 0..64 {
            worst_end = worst_end.max((pts[0][c] - zp[c]).abs()).max((pts[10][c] - zq[c]).abs());
            let step = (zq[c] - zp[c]) / 10.0;
            for i in 0..10 {
                worst_gap = worst_gap.max((pts[i + 1][c] - pts[i][c] - step).abs());
            }
        }
    }
    check(
        worst_end <= 1e-12 && worst_gap <= 1e-9 && slowest < Duration::from_millis(1),
        format!("endpoint err {worst_end:.1e}, gap err {worst_gap:.1e}, slowest call {slowest:?}"),
    )
}

fn seeding_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let t = Instant::now();
    for case in 0..50 {
        let dim = rng.gen_range(2..16);
        let size = rng.gen_range(2..=500);
        let mut entries = Vec::with_capacity(size);
        for i in 0..size {
            let class = if i == 0 {
                PredictedClass::Negative
            } else if rng.gen_bool(0.5) {
                PredictedClass::Positive
            } else {
                PredictedClass::Negative
            };
            entries.push(CorpusEntry {
                text: TokenSequence::parse(&format!("e{i}")),
                latent: lv(&gaussian(&mut rng, dim)),
                class,
            });
        }
        let pivot = gaussian(&mut rng, dim);
        let corpus = Corpus::from_entries(entries.clone()).unwrap();
        let got = seed_landmarks(&lv(&pivot), PredictedClass::Positive, &corpus, 25).unwrap();

        let mut oracle: Vec<(f64, usize)> = entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.class == PredictedClass::Negative)
            .map(|(i, e)| (o_cos_dist(e.latent.as_slice(), &pivot), i))
            .collect();
        oracle.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        oracle.truncate(25);
        let got_ids: Vec<String> = got.landmarks().iter().map(|l| l.text.to_string()).collect();
        let want_ids: Vec<String> = oracle.iter().map(|(_, i)| format!("e{i}")).collect();
        if got_ids != want_ids {
            return Err(format!("corpus {case}: {got_ids:?} != {want_ids:?}"));
        }
        for (l, (d, _)) in got.landmarks().iter().zip(&oracle) {
            if (l.distance_to_pivot - d).abs() > 1e-12 {
                return Err(format!("corpus {case}: distance {} vs {d}", l.distance_to_pivot));
            }
        }
    }
    let el = t.elapsed();
    check(el < Duration::from_secs(1), format!("50 corpora identical to brute-force sort in {el:?}"))
}

fn progressive_improvement() -> Outcome {
    const DIM: usize = 64;
    let t = Instant::now();
    let mut constructed = Vec::new();
    let mut seeded = Vec::new();
    let mut wins = 0;
    for run in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + run);
        let codec = Arc::new(HexCodec::new(DIM));
        let w = unit(gaussian(&mut rng, DIM));
        let bb = LatentLinearBlackBox::new(codec.clone(), lv(&w), 0.0, 10.0).unwrap();
        let z0 = unit(gaussian(&mut rng, DIM));
        let along = o_dot(&w, &z0);
        let pivot: Vec<f64> = z0.iter().zip(&w).map(|(z, wi)| z - along * wi + 0.3 * wi).collect();
        let texts: Vec<TokenSequence> = (0..300)
            .map(|_| codec.text_of(&lv(&unit(gaussian(&mut rng, DIM)))).unwrap())
            .collect();
        let corpus = Corpus::build(texts, codec.as_ref(), &bb).unwrap();
        let models = Models::new(codec.as_ref(), codec.as_ref(), &bb);
        let query = codec.text_of(&lv(&pivot)).unwrap();
        let nb = construct(&query, &corpus, &NeighborhoodConfig::default(), models, &mut rng)
            .map_err(|e| format!("run {run}: {e}"))?;
        let best = nb.counterfactuals[0].distance_to_pivot;
        let seed = nb.seeds.landmarks()[0].clone();
        constructed.push(best);
        seeded.push(seed.distance_to_pivot);

        // uniform sampler in the ball reaching the closest seed, same decode budget
        let radius = seed.latent.as_slice().iter().zip(&pivot).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let mut sampled = f64::INFINITY;
        for _ in 0..nb.stats.decode_calls {
            let dir = unit(gaussian(&mut rng, DIM));
            let r = radius * rng.gen::<f64>().powf(1.0 / DIM as f64);
            let z: Vec<f64> = pivot.iter().zip(&dir).map(|(p, d)| p + r * d).collect();
            if o_dot(&w, &z) < 0.0 {
                sampled = sampled.min(o_cos_dist(&z, &pivot));
            }
        }
        if best <= sampled {
            wins += 1;
        }
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        (v[9] + v[10]) / 2.0
    };
    let (mc, ms) = (median(&mut constructed), median(&mut seeded));
    let el = t.elapsed();
    check(
        mc <= 0.5 * ms && wins >= 15 && el < Duration::from_secs(30),
        format!("median closest counterfactual {mc:.4} vs seed {ms:.4} (ratio {:.3}), beats random sampler {wins}/20, {el:?}", mc / ms),
    )
}

fn surrogate_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let t = Instant::now();
    let vocab: Vec<String> = (0..8).map(|i| format!("w{i}")).collect();
    let mut worst: f64 = 0.0;
    let mut fixtures = 0;
    while fixtures < 100 {
        let dim = 6;
        let pivot = gaussian(&mut rng, dim);
        let query = TokenSequence::new(vocab[..3].iter().cloned()).unwrap();
        let rows = rng.gen_range(20..60);
        let mut neighbors = Vec::new();
        for _ in 0..rows {
            let toks: Vec<String> = vocab.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
            if toks.is_empty() {
                continue;
            }
            let z: Vec<f64> = pivot.iter().map(|p| p + 0.4 * rng.sample::<f64, _>(StandardNormal)).collect();
            neighbors.push(neighbor(TokenSequence::new(toks).unwrap(), &z, rng.gen(), &pivot));
        }
        // every feature must vary, or the intercept and that feature trade off
        let present: Vec<Vec<bool>> = neighbors.iter().map(|n| vocab.iter().map(|v| n.text.contains(v)).collect()).collect();
        if (0..vocab.len()).any(|j| present.iter().all(|r| r[j]) || present.iter().all(|r| !r[j])) {
            continue;
        }
        fixtures += 1;
        let cfg = SurrogateConfig::default();
        let model = fit(&neighbors, &lv(&pivot), &query, cfg).map_err(|e| e.to_string())?;

        let x: Vec<Vec<f64>> = present.iter().map(|r| r.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()).collect();
        let y: Vec<f64> = neighbors.iter().map(|n| n.confidence.p_pos).collect();
        let wts: Vec<f64> = neighbors
            .iter()
            .map(|n| {
                let d = o_cos_dist(n.latent.as_slice(), &pivot);
                (-(d * d) / (cfg.sigma * cfg.sigma)).exp()
            })
            .collect();
        let (c0, coef) = o_ridge(&x, &y, &wts, cfg.ridge);
        worst = worst.max((model.intercept - c0).abs());
        for (tok, c) in vocab.iter().zip(&coef) {
            worst = worst.max((model.coefficient(tok).unwrap() - c).abs());
        }
    }
    // planted noiseless linear targets
    let mut worst_plant: f64 = 0.0;
    for _ in 0..100 {
        let p = rng.gen_range(2..8);
        let n = rng.gen_range(3 * p..6 * p);
        let b: Vec<f64> = (0..p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c: f64 = rng.gen_range(-1.0..1.0);
        let mut x: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| f64::from(rng.gen_bool(0.5))).collect()).collect();
        // guarantee full column rank: identity block plus the all-zero row
        for (j, row) in x.iter_mut().take(p).enumerate() {
            row.iter_mut().enumerate().for_each(|(k, v)| *v = f64::from(j == k));
        }
        x[p].iter_mut().for_each(|v| *v = 0.0);
        let y: Vec<f64> = x.iter().map(|r| c + o_dot(r, &b)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
        let (coef, icpt) = weighted_ridge(&x, &y, &w, 1e-9).map_err(|e| e.to_string())?;
        worst_plant = worst_plant.max((icpt - c).abs());
        for (a, e) in coef.iter().zip(&b) {
            worst_plant = worst_plant.max((a - e).abs());
        }
    }
    let el = t.elapsed();
    check(
        worst <= 1e-6 && worst_plant <= 1e-6 && el < Duration::from_secs(5),
        format!("max |coef - oracle| {worst:.1e} on 100 fixtures, planted recovery err {worst_plant:.1e}, {el:?}"),
    )
}

fn exemplar_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = Instant::now();
    let mut cases = 0;
    for size in 1..=8 {
        for _ in 0..60 {
            let dim = rng.gen_range(2..6);
            let pivot = gaussian(&mut rng, dim);
            let mut zs: Vec<Vec<f64>> = (0..size).map(|_| gaussian(&mut rng, dim)).collect();
            if size > 2 && rng.gen_bool(0.2) {
                zs[rng.gen_range(0..size)] = pivot.clone();
            }
            if size > 2 && rng.gen_bool(0.2) {
                zs[1] = zs[0].clone();
            }
            let cands: Vec<Neighbor> = zs
                .iter()
                .enumerate()
                .map(|(i, z)| neighbor(TokenSequence::parse(&format!("c{i}")), z, 0.2, &pivot))
                .collect();
            for lambda in [0.0, 0.3, 0.5, 1.0] {
                let cfg = ExemplarConfig { lambda, set_size: 3 };
                let got = select_indices(&cands, &lv(&pivot), &cfg).map_err(|e| e.to_string())?;
                let want = o_greedy(&zs, &pivot, lambda, 3);
                if got != want {
                    return Err(format!("size {size}, lambda {lambda}: {got:?} != {want:?}"));
                }
                if lambda == 0.0 {
                    let mut by_dist: Vec<usize> = (0..size).collect();
                    by_dist.sort_by(|&a, &b| o_cos_dist(&zs[a], &pivot).total_cmp(&o_cos_dist(&zs[b], &pivot)));
                    by_dist.truncate(3);
                    if got != by_dist {
                        return Err(format!("lambda 0 is not a distance sort: {got:?} vs {by_dist:?}"));
                    }
                }
                cases += 1;
            }
        }
    }
    let el = t.elapsed();
    check(el < Duration::from_secs(5), format!("{cases} selections equal the rescoring oracle, {el:?}"))
}

fn edition_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let t = Instant::now();
    let words: Vec<String> = ["a", "b", "c", "d", "e", "f"].iter().map(|s| s.to_string()).collect();
    let lexicon = Lexicon::from_pairs(words.iter().map(|w| (w.as_str(), rng.gen_range(-2.0..2.0))));
    let bb = LexiconBlackBox::new(lexicon);
    let mut replaced = 0;
    for case in 0..200 {
        let l = rng.gen_range(1..=3);
        let eps = 1e-6;
        let texts: Vec<Vec<String>> = (0..rng.gen_range(1..8))
            .map(|_| (0..rng.gen_range(1..8)).map(|_| words.choose(&mut rng).unwrap().clone()).collect())
            .collect();
        let query: Vec<String> = (0..rng.gen_range(1..6)).map(|_| words.choose(&mut rng).unwrap().clone()).collect();
        let word = words.choose(&mut rng).unwrap().clone();
        let seqs: Vec<TokenSequence> = texts.iter().map(|t| TokenSequence::new(t.clone()).unwrap()).collect();
        let ctx = ContextModel::build(&seqs, l, eps);
        let q = TokenSequence::new(query.clone()).unwrap();
        let original = bb.predict(&q).unwrap().class();
        let got = best_edition(&q, &word, &ctx, &bb, original).map_err(|e| e.to_string())?;

        let mut best: Option<(f64, EditOp, usize, Vec<String>)> = None;
        for i in 0..=query.len() {
            let mut cands = vec![(EditOp::Insert, {
                let mut e = query.clone();
                e.insert(i, word.clone());
                e
            })];
            if i < query.len() {
                let mut e = query.clone();
                e[i] = word.clone();
                cands.push((EditOp::Replace, e));
            }
            for (op, edited) in cands {
                let score = o_score(&texts, l, eps, &edited, i);
                if best.as_ref().is_none_or(|b| score > b.0) {
                    best = Some((score, op, i, edited));
                }
            }
        }
        let (score, op, pos, edited) = best.unwrap();
        let flipped = bb.predict(&TokenSequence::new(edited.clone()).unwrap()).unwrap().class() != original;
        if (got.op, got.position) != (op, pos) || got.edited.tokens() != edited.as_slice() || got.flipped != flipped {
            return Err(format!("case {case}: got {:?}@{} {}, want {op:?}@{pos} {}", got.op, got.position, got.edited, edited.join(" ")));
        }
        if (got.score - score).abs() > 1e-12 {
            return Err(format!("case {case}: score {} vs {score}", got.score));
        }
        replaced += usize::from(op == EditOp::Replace);
    }
    let el = t.elapsed();
    check(
        el < Duration::from_secs(5),
        format!("200 fixtures match exhaustive enumeration ({replaced} replacements), {el:?}"),
    )
}

fn table_one_fixture() -> Outcome {
    let t = Instant::now();
    let (backend, corpus) = ToyBackend::build(
        reviews::lexicon(),
        reviews::generate(600, 1),
        proxplain::toy::DEFAULT_DIM,
        ToyDecoderKind::CorpusNearest,
    )
    .map_err(|e| e.to_string())?;
    let planted = [
        TokenSequence::parse("would definitely recommend ."),
        TokenSequence::parse("i would definitely recommend this place ."),
    ];
    let ctx = ContextModel::build(&planted, 2, 1e-6);
    let explainer = Explainer::new(&corpus, backend.models(), ExplainerConfig::default())
        .map_err(|e| e.to_string())?
        .with_context(ctx);
    let query = TokenSequence::parse("would not recommend .");
    let ex = explainer.explain(&query, 7, 0).map_err(|e| e.to_string())?;
    let hit = ex
        .editions
        .iter()
        .find(|e| e.edited.to_string() == "would definitely recommend .");
    let el = t.elapsed();
    let listed: Vec<String> = ex.editions.iter().map(|e| format!("{} ({})", e.edited, e.op.as_str())).collect();
    check(
        ex.class == PredictedClass::Negative
            && hit.is_some_and(|e| e.flipped && e.new_confidence.class() == PredictedClass::Positive)
            && el < Duration::from_secs(10),
        format!("editions {listed:?}, {el:?}"),
    )
}

fn evaluation_ordering() -> Outcome {
    let t = Instant::now();
    let (backend, corpus) = ToyBackend::build(
        reviews::lexicon(),
        reviews::generate(600, 1),
        proxplain::toy::DEFAULT_DIM,
        ToyDecoderKind::CorpusNearest,
    )
    .map_err(|e| e.to_string())?;
    let explainer = Explainer::new(&corpus, backend.models(), ExplainerConfig::default()).map_err(|e| e.to_string())?;
    let tests = reviews::generate(200, 99);
    let cfg = EvaluationConfig { eta: 0.1, ..Default::default() };
    let report = evaluate(&tests, &explainer, &cfg, 3).map_err(|e| e.to_string())?;
    let g = report.guided.aggregate.completeness.mean;
    let b = report.baseline.aggregate.completeness.mean;
    let d = report.guided.correctness.unwrap();
    let el = t.elapsed();
    check(
        g > b && d >= 0.0 && report.failures.is_empty() && el < Duration::from_secs(300),
        format!(
            "completeness guided {g:.3} vs baseline {b:.3}, delta_eta {d:+.3}, failures {}, {el:?}",
            report.failures.len()
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = dir.path().join("corpus.txt");
    let input = dir.path().join("input.txt");
    let join = |ts: Vec<TokenSequence>| ts.iter().map(|t| format!("{t}\n")).collect::<String>();
    std::fs::write(&corpus, join(reviews::generate(300, 5))).unwrap();
    std::fs::write(&input, join(reviews::generate(12, 6))).unwrap();
    let c = corpus.to_str().unwrap();
    let i = input.to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["explain", "--corpus", c, "--seed", "7", "great food ."],
        vec!["explain", "--corpus", c, "--seed", "7", "--input", i],
        vec!["explain", "--corpus", c, "--seed", "7", "--input", i, "--pretty", "--jobs", "2"],
        vec!["explain", "--corpus", c, "--seed", "9", "--toy-decoder", "greedy", "--k", "5", "--s", "4", "the service was rude ."],
        vec!["evaluate", "--corpus", c, "--seed", "11", i],
        vec!["evaluate", "--corpus", c, "--seed", "11", "--pretty", "--jobs", "3", i],
    ];
    let run = |args: &[&str]| {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = cli::run(std::iter::once("proxplain").chain(args.iter().copied()), &mut out, &mut err);
        (code, out)
    };
    for args in &commands {
        let (c1, o1) = run(args);
        let (c2, o2) = run(args);
        if c1 != 0 || c2 != 0 || o1 != o2 || o1.is_empty() {
            return Err(format!("{args:?}: exit {c1}/{c2}, identical {}", o1 == o2));
        }
    }
    // order and bytes do not depend on the worker count
    let (_, serial) = run(&["explain", "--corpus", c, "--seed", "7", "--input", i, "--jobs", "1"]);
    let (_, parallel) = run(&["explain", "--corpus", c, "--seed", "7", "--input", i, "--jobs", "4"]);
    check(serial == parallel, format!("{} commands byte-identical on repeat, worker count irrelevant", commands.len()))
}

fn degenerate_handling() -> Outcome {
    // single-class corpus
    let lexicon = reviews::lexicon();
    let positives: Vec<TokenSequence> = ["great food .", "amazing pizza .", "i love this place ."]
        .iter()
        .map(|s| TokenSequence::parse(s))
        .collect();
    let (backend, corpus) =
        ToyBackend::build(lexicon.clone(), positives, 16, ToyDecoderKind::CorpusNearest).map_err(|e| e.to_string())?;
    let seeding = construct(
        &TokenSequence::parse("tasty coffee ."),
        &corpus,
        &NeighborhoodConfig::default(),
        backend.models(),
        &mut ChaCha8Rng::seed_from_u64(0),
    );
    let single_class = matches!(seeding, Err(Error::CannotSeedLandmarks { .. }));

    // one-token queries, both decoders
    let mut one_token = Vec::new();
    for kind in [ToyDecoderKind::CorpusNearest, ToyDecoderKind::GreedyBagOfWords] {
        let (backend, corpus) = ToyBackend::build(lexicon.clone(), reviews::generate(300, 2), 32, kind).map_err(|e| e.to_string())?;
        let ex = Explainer::new(&corpus, backend.models(), ExplainerConfig::default()).unwrap();
        for w in ["great", "terrible", "food", ".", "unseenword"] {
            let r = catch_unwind(AssertUnwindSafe(|| ex.explain(&TokenSequence::parse(w), 1, 0).map(|_| ())));
            one_token.push(match r {
                Ok(Ok(())) => "ok",
                Ok(Err(_)) => "error",
                Err(_) => "panic",
            });
        }
        let r = catch_unwind(AssertUnwindSafe(|| {
            let cfg = EvaluationConfig::default();
            evaluate(&[TokenSequence::parse("great"), TokenSequence::parse("bad")], &ex, &cfg, 1).map(|_| ())
        }));
        one_token.push(if r.is_err() { "panic" } else { "ok" });
    }
    let no_panic = !one_token.contains(&"panic");

    // zero-operation rows
    let rows = vec![
        EditionRow { index: 0, query: "a".into(), edited: "a".into(), confidence_drop: 0.0, operations: 0 },
        EditionRow { index: 1, query: "b".into(), edited: "c".into(), confidence_drop: 0.5, operations: 2 },
        EditionRow { index: 2, query: "d".into(), edited: "e".into(), confidence_drop: 0.3, operations: 1 },
    ];
    let agg = EditionAggregate::of(&rows);
    let zero_ops = agg.completeness.count == 3
        && (agg.completeness.mean - 0.8 / 3.0).abs() < 1e-15
        && agg.compactness.count == 2
        && (agg.compactness.mean - 0.275).abs() < 1e-15;

    check(
        single_class && no_panic && zero_ops,
        format!(
            "single-class seeding error {single_class}, one-token runs {one_token:?}, zero-op rows excluded from compactness only {zero_ops}"
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("interpolation exactness", interpolation_exactness),
        ("landmark seeding oracle", seeding_oracle),
        ("progressive improvement", progressive_improvement),
        ("surrogate oracle", surrogate_oracle),
        ("exemplar oracle", exemplar_oracle),
        ("edition oracle", edition_oracle),
        ("table I fixture", table_one_fixture),
        ("evaluation ordering", evaluation_ordering),
        ("determinism", determinism),
        ("degenerate handling", degenerate_handling),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = catch_unwind(f).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
