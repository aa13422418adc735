//! Write seeded toy review titles, one per line.
//!
//!     cargo run --example toy_corpus -- 600 1 > corpus.txt

fn main() {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(500, |a| a.parse().expect("count"));
    let seed: u64 = args.next().map_or(1, |a| a.parse().expect("seed"));
    for text in proxplain::toy::reviews::generate(n, seed) {
        println!("{text}");
    }
}
