//! End-device client: sends concise prompts and collects responses.

use std::collections::BTreeMap;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use synergy_core::protocol::{Frame, PromptEnvelope};
use thiserror::Error;
use tokio::net::TcpStream;

use crate::net::{write_frames, FrameReader, WireError};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("cannot connect to {addr}: {source}")]
    Connect {
        addr: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("connection closed after {received} of {expected} responses")]
    Closed { received: usize, expected: usize },
    #[error("timed out after {received} of {expected} responses")]
    Timeout { received: usize, expected: usize },
    #[error("unexpected response: {0}")]
    Protocol(String),
}

/// A prompt to send and the base station it claims to come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutgoingPrompt {
    pub bs_id: String,
    pub text: String,
}

/// One prompt per line, optionally prefixed by `bs_id` and a tab. Blank
/// lines and `#` comments are skipped.
pub fn parse_prompt_file(text: &str, default_bs: &str) -> Vec<OutgoingPrompt> {
    text.lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| match l.split_once('\t') {
            Some((bs, text)) if !bs.trim().is_empty() => OutgoingPrompt {
                bs_id: bs.trim().to_string(),
                text: text.to_string(),
            },
            _ => OutgoingPrompt {
                bs_id: default_bs.to_string(),
                text: l.trim_start_matches('\t').to_string(),
            },
        })
        .collect()
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Sends every prompt on one connection without waiting, then collects one
/// response per prompt. Request ids are `1..=n` in input order; responses
/// come back in that order.
pub async fn send_prompts(
    addr: &str,
    prompts: &[OutgoingPrompt],
    timeout: Duration,
) -> Result<Vec<PromptEnvelope>, ClientError> {
    let stream = TcpStream::connect(addr).await.map_err(|source| ClientError::Connect {
        addr: addr.to_string(),
        source,
    })?;
    let _ = stream.set_nodelay(true);
    let (rd, mut wr) = stream.into_split();
    let created = now_ms();
    let frames: Vec<Frame> = prompts
        .iter()
        .enumerate()
        .map(|(i, p)| Frame::Envelope(PromptEnvelope::concise(i as u64 + 1, p.text.clone(), p.bs_id.clone(), created)))
        .collect();
    write_frames(&mut wr, &frames).await?;
    let expected = prompts.len();
    let mut got: BTreeMap<u64, PromptEnvelope> = BTreeMap::new();
    let mut reader = FrameReader::new(rd);
    let collect = async {
        while got.len() < expected {
            match reader.next().await? {
                Some(Frame::Envelope(env)) => {
                    if env.request_id == 0 || env.request_id > expected as u64 {
                        return Err(ClientError::Protocol(format!("unknown request id {}", env.request_id)));
                    }
                    if got.insert(env.request_id, env).is_some() {
                        return Err(ClientError::Protocol("two responses for one request".into()));
                    }
                }
                Some(Frame::Batch { .. }) => {}
                None => {
                    return Err(ClientError::Closed {
                        received: got.len(),
                        expected,
                    })
                }
            }
        }
        Ok(())
    };
    match tokio::time::timeout(timeout, collect).await {
        Ok(r) => r?,
        Err(_) => {
            return Err(ClientError::Timeout {
                received: got.len(),
                expected,
            })
        }
    }
    Ok(got.into_values().collect())
}
