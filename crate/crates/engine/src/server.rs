//! Socket service. One listener serves newline-delimited JSON over TCP and
//! the same messages over a WebSocket upgrade (detected by a leading `GET`).

use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{broadcast, mpsc};
use tokio::time::MissedTickBehavior;
use tokio_tungstenite::tungstenite::Message;

use crate::engine::{Ingest, Scorer};
use crate::schema::{decode_pcm, parse_inbound, Inbound, MarkerMessage, Outbound};
use crate::EngineError;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub tick: Duration,
    /// Capacity of the fan-out queue; slow subscribers skip what they miss.
    pub queue: usize,
    /// Session marker log, `t_seconds,label`.
    pub markers_csv: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig { tick: Duration::from_secs(1), queue: 256, markers_csv: None }
    }
}

struct Shared {
    ingest: Mutex<Ingest>,
    tx: broadcast::Sender<Outbound>,
    markers_csv: Option<PathBuf>,
}

fn append_marker(path: &PathBuf, m: &MarkerMessage) -> Result<(), EngineError> {
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    if fresh {
        w.write_record(["t_seconds", "label"])?;
    }
    w.write_record([format!("{}", m.t), m.label.clone()])?;
    f.write_all(&w.into_inner().map_err(|e| EngineError::Io(e.into_error()))?)?;
    Ok(())
}

/// Applies one inbound line; returns a reply for the sender only.
fn handle_line(shared: &Shared, line: &str) -> Option<Outbound> {
    if line.trim().is_empty() {
        return None;
    }
    let res = match parse_inbound(line) {
        Ok(Inbound::Audio { fs, pcm }) => decode_pcm(&pcm).and_then(|x| {
            let mut ingest = shared.ingest.lock().expect("ingest lock");
            ingest.push(&x, fs).map(|_| ())
        }),
        Ok(Inbound::Marker { label }) => {
            let m = shared.ingest.lock().expect("ingest lock").marker(label);
            let logged = match &shared.markers_csv {
                Some(p) => append_marker(p, &m),
                None => Ok(()),
            };
            let _ = shared.tx.send(Outbound::Marker(m));
            logged
        }
        Err(e) => Err(e),
    };
    res.err().map(|e| Outbound::error(e.to_string()))
}

async fn tick_loop(shared: Arc<Shared>, scorer: Scorer, period: Duration) {
    let mut interval = tokio::time::interval(period);
    interval.set_missed_tick_behavior(MissedTickBehavior::Skip);
    let mut last_t = f64::NEG_INFINITY;
    loop {
        interval.tick().await;
        let snap = {
            let mut ingest = shared.ingest.lock().expect("ingest lock");
            if ingest.t() <= last_t || ingest.is_empty() {
                continue;
            }
            ingest.snapshot()
        };
        last_t = snap.t;
        let scorer = scorer.clone();
        let msg = match tokio::task::spawn_blocking(move || scorer.score(&snap)).await {
            Ok(Ok(m)) => Outbound::Score(m),
            Ok(Err(e)) => Outbound::error(e.to_string()),
            Err(e) => Outbound::error(format!("scoring task failed: {e}")),
        };
        let _ = shared.tx.send(msg);
    }
}

async fn next_outbound(rx: &mut broadcast::Receiver<Outbound>) -> Option<Outbound> {
    loop {
        match rx.recv().await {
            Ok(m) => return Some(m),
            Err(broadcast::error::RecvError::Lagged(_)) => continue,
            Err(broadcast::error::RecvError::Closed) => return None,
        }
    }
}

async fn serve_ndjson(stream: TcpStream, shared: Arc<Shared>) -> Result<(), EngineError> {
    let (read, mut write) = stream.into_split();
    let mut rx = shared.tx.subscribe();
    let (reply_tx, mut reply_rx) = mpsc::channel::<Outbound>(16);
    let writer = tokio::spawn(async move {
        loop {
            let msg = tokio::select! {
                m = next_outbound(&mut rx) => m,
                m = reply_rx.recv() => m,
            };
            let Some(msg) = msg else { break };
            let mut line = msg.to_line();
            line.push('\n');
            if write.write_all(line.as_bytes()).await.is_err() {
                break;
            }
        }
    });
    let mut lines = BufReader::new(read).lines();
    while let Some(line) = lines.next_line().await? {
        if let Some(reply) = handle_line(&shared, &line) {
            if reply_tx.send(reply).await.is_err() {
                break;
            }
        }
    }
    writer.abort();
    Ok(())
}

async fn serve_ws(stream: TcpStream, shared: Arc<Shared>) -> Result<(), EngineError> {
    let ws = tokio_tungstenite::accept_async(stream).await.map_err(|e| EngineError::Protocol(e.to_string()))?;
    let (mut sink, mut source) = ws.split();
    let mut rx = shared.tx.subscribe();
    loop {
        tokio::select! {
            m = next_outbound(&mut rx) => {
                let Some(m) = m else { break };
                if sink.send(Message::Text(m.to_line())).await.is_err() {
                    break;
                }
            }
            frame = source.next() => {
                match frame {
                    Some(Ok(Message::Text(t))) => {
                        if let Some(reply) = handle_line(&shared, &t) {
                            if sink.send(Message::Text(reply.to_line())).await.is_err() {
                                break;
                            }
                        }
                    }
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => {}
                }
            }
        }
    }
    Ok(())
}

async fn handle_connection(stream: TcpStream, shared: Arc<Shared>) -> Result<(), EngineError> {
    let mut first = [0u8; 1];
    if stream.peek(&mut first).await? == 0 {
        return Ok(());
    }
    if first[0] == b'G' {
        serve_ws(stream, shared).await
    } else {
        serve_ndjson(stream, shared).await
    }
}

/// Accepts connections until the task is dropped or the listener fails.
pub async fn serve(listener: TcpListener, scorer: Scorer, cfg: ServerConfig) -> Result<(), EngineError> {
    let (tx, _) = broadcast::channel(cfg.queue.max(1));
    let shared = Arc::new(Shared { ingest: Mutex::new(Ingest::new()), tx, markers_csv: cfg.markers_csv.clone() });
    let ticker = tokio::spawn(tick_loop(shared.clone(), scorer, cfg.tick));
    let res = loop {
        match listener.accept().await {
            Ok((stream, _)) => {
                let shared = shared.clone();
                tokio::spawn(async move {
                    let _ = handle_connection(stream, shared).await;
                });
            }
            Err(e) => break Err(EngineError::Io(e)),
        }
    };
    ticker.abort();
    res
}
