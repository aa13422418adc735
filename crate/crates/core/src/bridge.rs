//! Client for models served by another process over newline-delimited JSON.
//!
//! Requests and responses are single-line objects:
//!
//! ```text
//! {"id":1,"op":"info"}                      {"id":1,"ok":true,"latent_dim":128,"deterministic":true}
//! {"id":2,"op":"encode","texts":[..]}       {"id":2,"ok":true,"vectors":[[..],..]}
//! {"id":3,"op":"decode","vectors":[[..]]}   {"id":3,"ok":true,"texts":[..]}
//! {"id":4,"op":"predict","texts":[..]}      {"id":4,"ok":true,"scores":[[p_pos,p_neg],..]}
//!                                           {"id":N,"ok":false,"error":".."}
//! ```
//!
//! Floats go over the wire with 9 significant digits.

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde_json::{json, Map, Value};

use crate::error::{BridgeError, Error, Result};
use crate::geometry::LatentVector;
use crate::model::{BlackBox, ConfidenceVector, Decoder, Encoder, TokenSequence};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

/// Round to 9 significant digits.
pub fn wire_float(x: f64) -> f64 {
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn wire_vector(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| json!(wire_float(x))).collect())
}

struct Connection {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
    broken: bool,
}

pub struct BridgeClient {
    conn: Mutex<Connection>,
    child: Mutex<Option<Child>>,
    timeout: Duration,
    latent_dim: usize,
    deterministic: bool,
}

impl BridgeClient {
    /// Handshake over an existing transport.
    pub fn connect<R, W>(reader: R, writer: W, timeout: Duration) -> Result<Self>
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(reader).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let mut client = BridgeClient {
            conn: Mutex::new(Connection {
                writer: Box::new(writer),
                lines: rx,
                next_id: 1,
                broken: false,
            }),
            child: Mutex::new(None),
            timeout,
            latent_dim: 0,
            deterministic: true,
        };
        let (dim, det) = client.handshake()?;
        client.latent_dim = dim;
        client.deterministic = det;
        Ok(client)
    }

    /// Launch `command` through `sh -c` and talk over its stdin/stdout.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(BridgeError::Transport)?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let client = match BridgeClient::connect(stdout, stdin, timeout) {
            Ok(c) => c,
            Err(e) => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(e);
            }
        };
        *client.child.lock().unwrap() = Some(child);
        Ok(client)
    }

    pub fn deterministic(&self) -> bool {
        self.deterministic
    }

    /// Ask the server for its latent dimension and determinism flag.
    pub fn handshake(&self) -> Result<(usize, bool)> {
        let resp = self.request("info", None)?;
        let dim = resp
            .get("latent_dim")
            .and_then(Value::as_u64)
            .filter(|&d| d > 0)
            .ok_or_else(|| protocol("info reply lacks a positive latent_dim"))?;
        let det = resp
            .get("deterministic")
            .and_then(Value::as_bool)
            .ok_or_else(|| protocol("info reply lacks deterministic"))?;
        Ok((dim as usize, det))
    }

    fn request(&self, op: &str, payload: Option<(&str, Value)>) -> Result<Map<String, Value>> {
        let mut conn = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        if conn.broken {
            return Err(BridgeError::Closed.into());
        }
        let id = conn.next_id;
        conn.next_id += 1;
        let mut req = Map::new();
        req.insert("id".into(), json!(id));
        req.insert("op".into(), json!(op));
        if let Some((key, value)) = payload {
            req.insert(key.into(), value);
        }
        let mut line = Value::Object(req).to_string();
        line.push('\n');
        let sent = conn
            .writer
            .write_all(line.as_bytes())
            .and_then(|_| conn.writer.flush());
        if let Err(e) = sent {
            conn.broken = true;
            return Err(BridgeError::Transport(e).into());
        }
        let reply = match conn.lines.recv_timeout(self.timeout) {
            Ok(Ok(l)) => l,
            Ok(Err(e)) => {
                conn.broken = true;
                return Err(BridgeError::Transport(e).into());
            }
            Err(RecvTimeoutError::Timeout) => {
                conn.broken = true;
                return Err(BridgeError::Timeout(self.timeout).into());
            }
            Err(RecvTimeoutError::Disconnected) => {
                conn.broken = true;
                return Err(BridgeError::Closed.into());
            }
        };
        drop(conn);
        let value: Value = serde_json::from_str(&reply)
            .map_err(|e| protocol(&format!("malformed reply {reply:?}: {e}")))?;
        let Value::Object(obj) = value else {
            return Err(protocol("reply is not an object"));
        };
        if obj.get("id").and_then(Value::as_u64) != Some(id) {
            self.conn.lock().unwrap_or_else(|p| p.into_inner()).broken = true;
            return Err(protocol(&format!("reply id {:?} does not match request {id}", obj.get("id"))));
        }
        match obj.get("ok").and_then(Value::as_bool) {
            Some(true) => Ok(obj),
            Some(false) => {
                let msg = obj.get("error").and_then(Value::as_str).unwrap_or("");
                if msg.is_empty() {
                    Err(protocol("failure reply without an error message"))
                } else {
                    Err(BridgeError::Server(msg.to_owned()).into())
                }
            }
            None => Err(protocol("reply lacks ok")),
        }
    }

    fn field<'v>(obj: &'v Map<String, Value>, key: &str, expected: usize) -> Result<&'v Vec<Value>> {
        let arr = obj
            .get(key)
            .and_then(Value::as_array)
            .ok_or_else(|| protocol(&format!("reply lacks {key}")))?;
        if arr.len() != expected {
            return Err(protocol(&format!("{key}: expected {expected} items, got {}", arr.len())));
        }
        Ok(arr)
    }
}

fn protocol(msg: &str) -> Error {
    BridgeError::Protocol(msg.to_owned()).into()
}

fn texts_value(texts: &[TokenSequence]) -> Value {
    Value::Array(texts.iter().map(|t| json!(t.to_string())).collect())
}

fn numbers(v: &Value, what: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| protocol(&format!("{what} is not an array")))?
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| protocol(&format!("{what} holds a non-number"))))
        .collect()
}

impl Encoder for BridgeClient {
    fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    fn encode_batch(&self, texts: &[TokenSequence]) -> Result<Vec<LatentVector>> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let resp = self.request("encode", Some(("texts", texts_value(texts))))?;
        BridgeClient::field(&resp, "vectors", texts.len())?
            .iter()
            .map(|v| {
                let z = numbers(v, "vector")?;
                if z.len() != self.latent_dim {
                    return Err(Error::DimensionMismatch { expected: self.latent_dim, found: z.len() });
                }
                LatentVector::new(z)
            })
            .collect()
    }
}

impl Decoder for BridgeClient {
    fn decode_batch(&self, latents: &[LatentVector]) -> Result<Vec<TokenSequence>> {
        if latents.is_empty() {
            return Ok(Vec::new());
        }
        let vectors = Value::Array(latents.iter().map(|z| wire_vector(z.as_slice())).collect());
        let resp = self.request("decode", Some(("vectors", vectors)))?;
        BridgeClient::field(&resp, "texts", latents.len())?
            .iter()
            .map(|t| {
                let s = t.as_str().ok_or_else(|| protocol("text is not a string"))?;
                Ok(TokenSequence::parse(s))
            })
            .collect()
    }

    fn is_deterministic(&self) -> bool {
        self.deterministic
    }
}

impl BlackBox for BridgeClient {
    fn predict_batch(&self, texts: &[TokenSequence]) -> Result<Vec<ConfidenceVector>> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let resp = self.request("predict", Some(("texts", texts_value(texts))))?;
        BridgeClient::field(&resp, "scores", texts.len())?
            .iter()
            .map(|pair| match numbers(pair, "score")?.as_slice() {
                [p, n] => ConfidenceVector::from_pair(*p, *n),
                _ => Err(protocol("score is not a [p_pos, p_neg] pair")),
            })
            .collect()
    }
}

impl Drop for BridgeClient {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.lock().unwrap_or_else(|p| p.into_inner()).take() {
            // closing stdin lets a well-behaved server exit on its own
            let conn = self.conn.get_mut().unwrap_or_else(|p| p.into_inner());
            conn.writer = Box::new(std::io::sink());
            if child.try_wait().ok().flatten().is_none() {
                thread::sleep(Duration::from_millis(20));
                if child.try_wait().ok().flatten().is_none() {
                    let _ = child.kill();
                }
            }
            let _ = child.wait();
        }
    }
}

/// Answer bridge requests from `reader` on `writer` until end of input.
/// Bad records get an `ok:false` reply; the loop keeps going.
pub fn serve<R: BufRead, W: Write>(
    reader: R,
    mut writer: W,
    encoder: &dyn Encoder,
    decoder: &dyn Decoder,
    blackbox: &dyn BlackBox,
) -> std::io::Result<()> {
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = answer(&line, encoder, decoder, blackbox);
        writeln!(writer, "{reply}")?;
        writer.flush()?;
    }
    Ok(())
}

fn answer(line: &str, encoder: &dyn Encoder, decoder: &dyn Decoder, blackbox: &dyn BlackBox) -> Value {
    let req: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return json!({"id": null, "ok": false, "error": format!("malformed request: {e}")}),
    };
    let id = req.get("id").cloned().unwrap_or(Value::Null);
    let fail = |msg: String| json!({"id": id.clone(), "ok": false, "error": msg});
    let texts = || -> std::result::Result<Vec<TokenSequence>, String> {
        req.get("texts")
            .and_then(Value::as_array)
            .ok_or("missing texts")?
            .iter()
            .map(|t| t.as_str().map(TokenSequence::parse).ok_or("text is not a string"))
            .collect::<std::result::Result<_, _>>()
            .map_err(str::to_owned)
    };
    let result: std::result::Result<(&str, Value), String> = match req.get("op").and_then(Value::as_str) {
        Some("info") => {
            return json!({
                "id": id,
                "ok": true,
                "latent_dim": encoder.latent_dim(),
                "deterministic": decoder.is_deterministic(),
            })
        }
        Some("encode") => texts().and_then(|ts| {
            let zs = encoder.encode_batch(&ts).map_err(|e| e.to_string())?;
            Ok(("vectors", Value::Array(zs.iter().map(|z| wire_vector(z.as_slice())).collect())))
        }),
        Some("decode") => (|| {
            let zs = req
                .get("vectors")
                .and_then(Value::as_array)
                .ok_or("missing vectors")?
                .iter()
                .map(|v| {
                    let xs = numbers(v, "vector").map_err(|e| e.to_string())?;
                    LatentVector::new(xs).map_err(|e| e.to_string())
                })
                .collect::<std::result::Result<Vec<_>, String>>()?;
            let ts = decoder.decode_batch(&zs).map_err(|e| e.to_string())?;
            Ok(("texts", texts_value(&ts)))
        })(),
        Some("predict") => texts().and_then(|ts| {
            let ps = blackbox.predict_batch(&ts).map_err(|e| e.to_string())?;
            Ok((
                "scores",
                Value::Array(ps.iter().map(|p| json!([wire_float(p.p_pos), wire_float(p.p_neg)])).collect()),
            ))
        }),
        Some(other) => Err(format!("unsupported op {other:?}")),
        None => Err("missing op".to_owned()),
    };
    match result {
        Ok((key, value)) => {
            let mut obj = Map::new();
            obj.insert("id".into(), id);
            obj.insert("ok".into(), json!(true));
            obj.insert(key.into(), value);
            Value::Object(obj)
        }
        Err(msg) => fail(msg),
    }
}
