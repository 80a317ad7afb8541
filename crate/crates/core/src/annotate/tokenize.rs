//! Whitespace tokenization with punctuation peeling.
//!
//! Leading and trailing punctuation become single-character tokens; hyphens
//! and apostrophes inside a word do not split it.

/// Returns tokens plus their byte offsets `(start, end)` into `text`.
pub fn tokenize(text: &str) -> (Vec<String>, Vec<(usize, usize)>) {
    let mut tokens = Vec::new();
    let mut offsets = Vec::new();
    for (chunk_start, chunk) in split_whitespace_indices(text) {
        peel_chunk(chunk_start, chunk, &mut tokens, &mut offsets);
    }
    (tokens, offsets)
}

fn split_whitespace_indices(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split_whitespace()
        .map(move |chunk| (chunk.as_ptr() as usize - text.as_ptr() as usize, chunk))
}

fn peel_chunk(
    base: usize,
    chunk: &str,
    tokens: &mut Vec<String>,
    offsets: &mut Vec<(usize, usize)>,
) {
    let mut start = 0;
    let mut end = chunk.len();
    let mut leading: Vec<(usize, usize)> = Vec::new();
    let mut trailing: Vec<(usize, usize)> = Vec::new();

    while start < end {
        let c = chunk[start..].chars().next().unwrap();
        if c.is_alphanumeric() {
            break;
        }
        leading.push((start, start + c.len_utf8()));
        start += c.len_utf8();
    }
    while end > start {
        let c = chunk[..end].chars().next_back().unwrap();
        if c.is_alphanumeric() {
            break;
        }
        trailing.push((end - c.len_utf8(), end));
        end -= c.len_utf8();
    }
    trailing.reverse();

    for (s, e) in leading {
        tokens.push(chunk[s..e].to_string());
        offsets.push((base + s, base + e));
    }
    if start < end {
        tokens.push(chunk[start..end].to_string());
        offsets.push((base + start, base + end));
    }
    for (s, e) in trailing {
        tokens.push(chunk[s..e].to_string());
        offsets.push((base + s, base + e));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(text: &str) -> Vec<String> {
        tokenize(text).0
    }

    #[test]
    fn trailing_period_splits() {
        assert_eq!(toks("3D virtual reality."), vec!["3D", "virtual", "reality", "."]);
    }

    #[test]
    fn hyphenated_stays_whole() {
        assert_eq!(toks("state-of-the-art"), vec!["state-of-the-art"]);
    }

    #[test]
    fn internal_apostrophe_kept() {
        assert_eq!(toks("don't stop"), vec!["don't", "stop"]);
    }

    #[test]
    fn wrapping_punctuation_peels() {
        assert_eq!(toks("(innovation)"), vec!["(", "innovation", ")"]);
        assert_eq!(toks("\"quote,\""), vec!["\"", "quote", ",", "\""]);
    }

    #[test]
    fn pure_punctuation_chunk() {
        assert_eq!(toks("--"), vec!["-", "-"]);
    }

    #[test]
    fn offsets_slice_back_to_tokens() {
        let text = "  (Open  innovation), really.";
        let (tokens, offsets) = tokenize(text);
        for (tok, (s, e)) in tokens.iter().zip(&offsets) {
            assert_eq!(&text[*s..*e], tok);
        }
    }

    #[test]
    fn offsets_strictly_increasing() {
        let (_, offsets) = tokenize("a b-c (d) e.");
        for pair in offsets.windows(2) {
            assert!(pair[0].1 <= pair[1].0);
            assert!(pair[0].0 < pair[0].1);
        }
    }

    #[test]
    fn empty_and_whitespace() {
        assert!(toks("").is_empty());
        assert!(toks("   \t\n").is_empty());
    }
}
