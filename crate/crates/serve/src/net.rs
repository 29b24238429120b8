use std::io;

use synergy_core::protocol::{encode_frame, DecodeError, EncodeError, Frame, FrameDecoder};
use thiserror::Error;
use tokio::io::{AsyncRead, AsyncReadExt, AsyncWrite, AsyncWriteExt};

#[derive(Debug, Error)]
pub enum WireError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("decode: {0}")]
    Decode(#[from] DecodeError),
    #[error("encode: {0}")]
    Encode(#[from] EncodeError),
}

pub(crate) struct FrameReader<R> {
    rd: R,
    decoder: FrameDecoder,
    buf: Vec<u8>,
}

impl<R: AsyncRead + Unpin> FrameReader<R> {
    pub(crate) fn new(rd: R) -> Self {
        FrameReader {
            rd,
            decoder: FrameDecoder::new(),
            buf: vec![0; 16 * 1024],
        }
    }

    /// Next frame, or `None` on a clean end of stream.
    pub(crate) async fn next(&mut self) -> Result<Option<Frame>, WireError> {
        loop {
            if let Some(frame) = self.decoder.next_frame()? {
                return Ok(Some(frame));
            }
            let n = self.rd.read(&mut self.buf).await?;
            if n == 0 {
                if self.decoder.pending() > 0 {
                    return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "stream ended mid-frame").into());
                }
                return Ok(None);
            }
            self.decoder.extend(&self.buf[..n]);
        }
    }
}

pub(crate) async fn write_frames<W: AsyncWrite + Unpin>(w: &mut W, frames: &[Frame]) -> Result<usize, WireError> {
    let mut bytes = Vec::new();
    for f in frames {
        bytes.extend(encode_frame(f)?);
    }
    w.write_all(&bytes).await?;
    w.flush().await?;
    Ok(bytes.len())
}
