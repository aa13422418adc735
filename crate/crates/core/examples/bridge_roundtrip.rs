//! Talk to a model server over NDJSON; here the server is the toy backend
//! running on a thread behind an in-memory pipe.

use std::io::BufReader;
use std::time::Duration;

use proxplain::bridge::{serve, BridgeClient};
use proxplain::toy::{reviews, ToyBackend, ToyDecoderKind};
use proxplain::{BlackBox, Decoder, Encoder, TokenSequence};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (to_server_r, to_server_w) = std::io::pipe()?;
    let (to_client_r, to_client_w) = std::io::pipe()?;
    std::thread::spawn(move || {
        let (toy, _) =
            ToyBackend::build(reviews::lexicon(), reviews::generate(200, 1), 16, ToyDecoderKind::CorpusNearest)
                .expect("toy backend");
        let m = toy.models();
        serve(BufReader::new(to_server_r), to_client_w, m.encoder, m.decoder, m.blackbox).expect("serve");
    });

    let client = BridgeClient::connect(to_client_r, to_server_w, Duration::from_secs(10))?;
    println!("latent dim {}, deterministic {}", client.latent_dim(), client.is_deterministic());
    let texts = vec![TokenSequence::parse("great food ."), TokenSequence::parse("rude staff .")];
    let latents = client.encode_batch(&texts)?;
    for ((t, p), d) in texts.iter().zip(client.predict_batch(&texts)?).zip(client.decode_batch(&latents)?) {
        println!("{:<14} p_pos {:.3}  decodes to {d}", t.to_string(), p.p_pos);
    }
    Ok(())
}
