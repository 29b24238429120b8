use thiserror::Error;

use super::envelope::{DedupKey, EnvelopeError, PromptEnvelope, Stage};

/// Largest accepted frame body (1 MiB).
pub const MAX_FRAME_BODY: usize = 1 << 20;
/// Largest batch a header may announce.
pub const MAX_BATCH: u32 = 4096;

const LEN_PREFIX: usize = 4;
const BATCH_FIELD: &str = "batch";
const FIELDS: [&str; 7] = [
    "request_id",
    "stage",
    "origin_bs_id",
    "terminated_at_edge",
    "created_unix_ms",
    "dedup_key",
    "text",
];

/// One unit on the wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Frame {
    Envelope(PromptEnvelope),
    /// The next `count` envelope frames form one batch.
    Batch { count: u32 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("incomplete frame: need {needed} more bytes")]
    Incomplete { needed: usize },
    #[error("frame body of {len} bytes exceeds the {MAX_FRAME_BODY}-byte limit")]
    Oversize { len: usize },
    #[error("malformed frame at byte {offset}: {reason}")]
    Malformed { offset: usize, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("invalid envelope: {0}")]
    Invalid(#[from] EnvelopeError),
    #[error("frame body of {len} bytes exceeds the {MAX_FRAME_BODY}-byte limit")]
    Oversize { len: usize },
    #[error("batch count {0} outside 1..={MAX_BATCH}")]
    BatchCount(u32),
}

fn escape_into(out: &mut String, value: &str) {
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
}

fn envelope_body(env: &PromptEnvelope) -> String {
    let mut body = String::with_capacity(env.text.len() + 160);
    body.push_str(&format!("request_id={}\n", env.request_id));
    body.push_str(&format!("stage={}\n", env.stage));
    body.push_str("origin_bs_id=");
    escape_into(&mut body, &env.origin_bs_id);
    body.push('\n');
    body.push_str(&format!("terminated_at_edge={}\n", env.terminated_at_edge));
    body.push_str(&format!("created_unix_ms={}\n", env.created_unix_ms));
    body.push_str(&format!("dedup_key={}\n", env.dedup_key));
    body.push_str("text=");
    escape_into(&mut body, &env.text);
    body.push('\n');
    body
}

fn with_prefix(body: &[u8]) -> Result<Vec<u8>, EncodeError> {
    if body.len() > MAX_FRAME_BODY {
        return Err(EncodeError::Oversize { len: body.len() });
    }
    let mut out = Vec::with_capacity(LEN_PREFIX + body.len());
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(body);
    Ok(out)
}

/// Encodes one envelope as a complete frame.
pub fn encode(env: &PromptEnvelope) -> Result<Vec<u8>, EncodeError> {
    env.validate()?;
    with_prefix(envelope_body(env).as_bytes())
}

pub fn encode_frame(frame: &Frame) -> Result<Vec<u8>, EncodeError> {
    match frame {
        Frame::Envelope(env) => encode(env),
        Frame::Batch { count } => {
            if *count == 0 || *count > MAX_BATCH {
                return Err(EncodeError::BatchCount(*count));
            }
            with_prefix(format!("{BATCH_FIELD}={count}\n").as_bytes())
        }
    }
}

/// Decodes one envelope frame from the front of `bytes`, returning it and
/// the number of bytes consumed.
pub fn decode(bytes: &[u8]) -> Result<(PromptEnvelope, usize), DecodeError> {
    match decode_frame(bytes)? {
        (Frame::Envelope(env), n) => Ok((env, n)),
        (Frame::Batch { .. }, _) => Err(DecodeError::Malformed {
            offset: LEN_PREFIX,
            reason: "expected an envelope, found a batch header".into(),
        }),
    }
}

/// Decodes any frame from the front of `bytes`.
pub fn decode_frame(bytes: &[u8]) -> Result<(Frame, usize), DecodeError> {
    if bytes.len() < LEN_PREFIX {
        return Err(DecodeError::Incomplete {
            needed: LEN_PREFIX - bytes.len(),
        });
    }
    let len = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]) as usize;
    if len > MAX_FRAME_BODY {
        return Err(DecodeError::Oversize { len });
    }
    let total = LEN_PREFIX + len;
    if bytes.len() < total {
        return Err(DecodeError::Incomplete {
            needed: total - bytes.len(),
        });
    }
    let frame = parse_body(&bytes[LEN_PREFIX..total])?;
    Ok((frame, total))
}

fn malformed(body_offset: usize, reason: impl Into<String>) -> DecodeError {
    DecodeError::Malformed {
        offset: LEN_PREFIX + body_offset,
        reason: reason.into(),
    }
}

struct BodyReader<'a> {
    body: &'a str,
    pos: usize,
}

impl<'a> BodyReader<'a> {
    /// Reads `key=value\n`, returning the raw value and its body offset.
    fn field(&mut self, key: &str) -> Result<(&'a str, usize), DecodeError> {
        let rest = &self.body[self.pos..];
        let Some(after_key) = rest.strip_prefix(key).and_then(|r| r.strip_prefix('=')) else {
            return Err(malformed(self.pos, format!("expected field `{key}=`")));
        };
        let value_at = self.pos + key.len() + 1;
        let Some(nl) = after_key.find('\n') else {
            return Err(malformed(value_at, format!("unterminated `{key}` line")));
        };
        self.pos = value_at + nl + 1;
        Ok((&after_key[..nl], value_at))
    }
}

fn parse_u64(value: &str, at: usize, key: &str) -> Result<u64, DecodeError> {
    let canonical = !value.is_empty()
        && value.bytes().all(|b| b.is_ascii_digit())
        && (value == "0" || !value.starts_with('0'));
    if !canonical {
        return Err(malformed(at, format!("`{key}` must be a canonical decimal integer")));
    }
    value
        .parse()
        .map_err(|_| malformed(at, format!("`{key}` overflows u64")))
}

fn unescape(value: &str, at: usize) -> Result<String, DecodeError> {
    let mut out = String::with_capacity(value.len());
    let mut chars = value.char_indices();
    while let Some((i, c)) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some((_, 'n')) => out.push('\n'),
                Some((_, 'r')) => out.push('\r'),
                Some((_, '\\')) => out.push('\\'),
                _ => return Err(malformed(at + i, "invalid escape sequence")),
            },
            '\r' => return Err(malformed(at + i, "raw carriage return in value")),
            c => out.push(c),
        }
    }
    Ok(out)
}

fn parse_body(raw: &[u8]) -> Result<Frame, DecodeError> {
    let body = std::str::from_utf8(raw)
        .map_err(|e| malformed(e.valid_up_to(), "body is not valid UTF-8"))?;
    let mut r = BodyReader { body, pos: 0 };

    if body.starts_with("batch=") {
        let (v, at) = r.field(BATCH_FIELD)?;
        let count = parse_u64(v, at, BATCH_FIELD)?;
        if count == 0 || count > u64::from(MAX_BATCH) {
            return Err(malformed(at, format!("batch count outside 1..={MAX_BATCH}")));
        }
        if r.pos != body.len() {
            return Err(malformed(r.pos, "trailing data after batch header"));
        }
        return Ok(Frame::Batch { count: count as u32 });
    }

    let [f_id, f_stage, f_origin, f_term, f_created, f_key, f_text] = FIELDS;
    let (v, at) = r.field(f_id)?;
    let request_id = parse_u64(v, at, f_id)?;
    let (v, at) = r.field(f_stage)?;
    let stage: Stage = v
        .parse()
        .map_err(|_| malformed(at, "stage must be concise, comprehensive or response"))?;
    let (v, origin_at) = r.field(f_origin)?;
    let origin_bs_id = unescape(v, origin_at)?;
    let (v, at) = r.field(f_term)?;
    let terminated_at_edge = match v {
        "true" => true,
        "false" => false,
        _ => return Err(malformed(at, "terminated_at_edge must be true or false")),
    };
    let (v, at) = r.field(f_created)?;
    let created_unix_ms = parse_u64(v, at, f_created)?;
    let (v, key_at) = r.field(f_key)?;
    if v.len() != 16 || !v.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
        return Err(malformed(key_at, "dedup_key must be 16 lowercase hex digits"));
    }
    let dedup_key = DedupKey(u64::from_str_radix(v, 16).expect("checked hex"));
    let (v, text_at) = r.field(f_text)?;
    let text = unescape(v, text_at)?;
    if r.pos != body.len() {
        return Err(malformed(r.pos, "trailing data after last field"));
    }

    let env = PromptEnvelope {
        request_id,
        stage,
        text,
        origin_bs_id,
        terminated_at_edge,
        created_unix_ms,
        dedup_key,
    };
    env.validate().map_err(|e| {
        let at = match e {
            EnvelopeError::EmptyText { .. } => text_at,
            EnvelopeError::EmptyOrigin => origin_at,
            _ => key_at,
        };
        malformed(at, e.to_string())
    })?;
    Ok(Frame::Envelope(env))
}

/// Incremental decoder for a byte stream carrying back-to-back frames.
///
/// A malformed frame is skipped (its length prefix is trusted) and reported;
/// an oversize prefix poisons the stream because no boundary can be found.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    poisoned: bool,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn extend(&mut self, data: &[u8]) {
        if !self.poisoned {
            self.buf.extend_from_slice(data);
        }
    }

    /// Next complete frame, `Ok(None)` if more bytes are needed.
    pub fn next_frame(&mut self) -> Result<Option<Frame>, DecodeError> {
        if self.poisoned {
            return Err(DecodeError::Malformed {
                offset: 0,
                reason: "stream poisoned by an earlier oversize frame".into(),
            });
        }
        match decode_frame(&self.buf) {
            Ok((frame, n)) => {
                self.buf.drain(..n);
                Ok(Some(frame))
            }
            Err(DecodeError::Incomplete { .. }) => Ok(None),
            Err(e @ DecodeError::Oversize { .. }) => {
                self.poisoned = true;
                self.buf.clear();
                Err(e)
            }
            Err(e) => {
                let len = u32::from_be_bytes([self.buf[0], self.buf[1], self.buf[2], self.buf[3]])
                    as usize;
                self.buf.drain(..LEN_PREFIX + len);
                Err(e)
            }
        }
    }

    /// Bytes held that do not yet form a complete frame.
    pub fn pending(&self) -> usize {
        self.buf.len()
    }

    /// True once an oversize prefix has been seen; every later call fails.
    pub fn is_poisoned(&self) -> bool {
        self.poisoned
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hi() -> PromptEnvelope {
        PromptEnvelope::concise(7, "hi", "bs-1", 1_700_000_000_000)
    }

    #[test]
    fn round_trip_hi() {
        let bytes = encode(&hi()).unwrap();
        let (back, n) = decode(&bytes).unwrap();
        assert_eq!(back, hi());
        assert_eq!(n, bytes.len());
    }

    #[test]
    fn short_input_needs_more() {
        assert_eq!(
            decode(&[0, 0, 0]),
            Err(DecodeError::Incomplete { needed: 1 })
        );
        let bytes = encode(&hi()).unwrap();
        assert_eq!(
            decode(&bytes[..bytes.len() - 3]),
            Err(DecodeError::Incomplete { needed: 3 })
        );
    }

    #[test]
    fn oversize_rejected_from_prefix_alone() {
        let len = (MAX_FRAME_BODY as u32 + 1).to_be_bytes();
        assert_eq!(
            decode(&len),
            Err(DecodeError::Oversize {
                len: MAX_FRAME_BODY + 1
            })
        );
        let env = PromptEnvelope::concise(1, "x".repeat(MAX_FRAME_BODY), "bs", 0);
        assert!(matches!(encode(&env), Err(EncodeError::Oversize { .. })));
    }

    #[test]
    fn malformed_reports_offset() {
        let mut bytes = encode(&hi()).unwrap();
        // corrupt the stage value
        let body = String::from_utf8(bytes[4..].to_vec()).unwrap();
        let at = body.find("concise").unwrap();
        bytes[4 + at] = b'C';
        match decode(&bytes) {
            Err(DecodeError::Malformed { offset, .. }) => assert_eq!(offset, 4 + at),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn key_mismatch_rejected() {
        let mut env = hi();
        env.dedup_key = DedupKey(1);
        let body = envelope_body(&env);
        let frame = with_prefix(body.as_bytes()).unwrap();
        assert!(matches!(decode(&frame), Err(DecodeError::Malformed { .. })));
    }

    #[test]
    fn escapes_survive() {
        let env = PromptEnvelope::new(
            u64::MAX,
            Stage::Response,
            "line one\nline two\\\r end",
            "bs\n2",
            0,
        );
        let bytes = encode(&env).unwrap();
        assert_eq!(decode(&bytes).unwrap().0, env);
    }

    #[test]
    fn batch_header() {
        let bytes = encode_frame(&Frame::Batch { count: 3 }).unwrap();
        assert_eq!(&bytes[4..], b"batch=3\n");
        assert_eq!(decode_frame(&bytes).unwrap().0, Frame::Batch { count: 3 });
        assert!(decode(&bytes).is_err());
        assert!(encode_frame(&Frame::Batch { count: 0 }).is_err());
    }

    #[test]
    fn streaming_decoder_byte_at_a_time() {
        let envs: Vec<_> = (0..5)
            .map(|i| PromptEnvelope::concise(i, format!("prompt {i}"), "bs-9", i))
            .collect();
        let stream: Vec<u8> = envs.iter().flat_map(|e| encode(e).unwrap()).collect();
        let mut dec = FrameDecoder::new();
        let mut out = Vec::new();
        for b in stream {
            dec.extend(&[b]);
            while let Some(Frame::Envelope(e)) = dec.next_frame().unwrap() {
                out.push(e);
            }
        }
        assert_eq!(out, envs);
        assert_eq!(dec.pending(), 0);
    }

    #[test]
    fn decoder_skips_malformed_frame() {
        let good = encode(&hi()).unwrap();
        let mut bad = good.clone();
        bad[4] = b'X';
        let mut dec = FrameDecoder::new();
        dec.extend(&bad);
        dec.extend(&good);
        assert!(dec.next_frame().is_err());
        assert_eq!(dec.next_frame().unwrap(), Some(Frame::Envelope(hi())));
    }
}
