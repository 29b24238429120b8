use super::envelope::DedupKey;

/// Canonical form used for duplicate detection: lowercase, runs of
/// whitespace collapsed to one space, leading/trailing whitespace and
/// trailing punctuation removed.
pub fn normalize_for_dedup(text: &str) -> String {
    let lowered = text.to_lowercase();
    let mut out = lowered.split_whitespace().collect::<Vec<_>>().join(" ");
    while let Some(c) = out.chars().next_back() {
        if c.is_whitespace() || is_punctuation(c) {
            out.pop();
        } else {
            break;
        }
    }
    out
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '…' | '。' | '，' | '、' | '？' | '！' | '¿' | '¡' | '»' | '«' | '“' | '”' | '‘' | '’'
        )
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Hash of the normalized text. Distinct texts that collide are treated as
/// duplicates.
pub fn dedup_key(text: &str) -> DedupKey {
    DedupKey(fnv1a64(normalize_for_dedup(text).as_bytes()))
}
