//! Plain-text counters and the tiny HTTP endpoint that exposes them.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::TcpListener;

macro_rules! counters {
    ($name:ident, $snap:ident { $($field:ident),* $(,)? }) => {
        #[derive(Debug, Default)]
        pub struct $name {
            $(pub $field: AtomicU64,)*
        }

        #[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
        pub struct $snap {
            $(pub $field: u64,)*
        }

        impl $name {
            pub fn snapshot(&self) -> $snap {
                $snap { $($field: self.$field.load(Ordering::SeqCst),)* }
            }

            /// One `name value` line per counter.
            pub fn render(&self) -> String {
                let s = self.snapshot();
                let mut out = String::new();
                $(out.push_str(&format!("{} {}\n", stringify!($field), s.$field));)*
                out
            }
        }
    };
}

counters!(EdgeMetrics, EdgeSnapshot {
    requests,
    dedup_hits,
    local_terminations,
    forwarded_batches,
    forwarded_prompts,
    upstream_bytes,
    responses,
    errors,
    unknown_bs,
    degraded_enhancements,
});

counters!(CloudMetrics, CloudSnapshot {
    batches,
    prompts,
    responses,
    errors,
});

pub(crate) fn bump(c: &AtomicU64) {
    c.fetch_add(1, Ordering::SeqCst);
}

pub(crate) fn add(c: &AtomicU64, n: u64) {
    c.fetch_add(n, Ordering::SeqCst);
}

/// Parses `name value` lines as produced by `render`.
pub fn parse_metrics(text: &str) -> Vec<(String, u64)> {
    text.lines()
        .filter_map(|l| {
            let (k, v) = l.split_once(' ')?;
            Some((k.to_string(), v.trim().parse().ok()?))
        })
        .collect()
}

/// Answers every HTTP GET with the current counters until the listener
/// fails.
pub async fn serve_metrics<F>(listener: TcpListener, render: Arc<F>)
where
    F: Fn() -> String + Send + Sync + 'static,
{
    while let Ok((mut stream, _)) = listener.accept().await {
        let render = render.clone();
        tokio::spawn(async move {
            let mut buf = vec![0u8; 8192];
            let mut n = 0;
            while n < buf.len() {
                match stream.read(&mut buf[n..]).await {
                    Ok(0) | Err(_) => break,
                    Ok(k) => n += k,
                }
                if buf[..n].windows(4).any(|w| w == b"\r\n\r\n") {
                    break;
                }
            }
            let head = String::from_utf8_lossy(&buf[..n]);
            let (status, body) = if head.starts_with("GET ") {
                ("200 OK", render())
            } else {
                ("405 Method Not Allowed", String::new())
            };
            let resp = format!(
                "HTTP/1.1 {status}\r\nContent-Type: text/plain; charset=utf-8\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.write_all(resp.as_bytes()).await;
            let _ = stream.shutdown().await;
        });
    }
}
