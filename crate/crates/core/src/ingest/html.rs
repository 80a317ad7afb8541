//! Charset sniffing and tolerant tag-scoped text extraction.
//!
//! The parser never fails on malformed markup: unknown constructs are
//! skipped, unclosed elements close at end of input, and entities that do
//! not parse stay literal. Extraction collects the flattened text of every
//! element whose tag is in the allowed set, attributing nested text to the
//! nearest allowed ancestor.

use std::collections::BTreeSet;

use super::IngestError;

/// Decodes HTML bytes: a `<meta charset>` declaration wins, then a byte-order
/// mark, then strict UTF-8.
pub fn decode_html(bytes: &[u8]) -> Result<String, IngestError> {
    if let Some(charset) = sniff_meta_charset(bytes) {
        return match charset.as_str() {
            "utf-8" | "utf8" => std::str::from_utf8(bytes)
                .map(|s| s.to_string())
                .map_err(|_| IngestError::Encoding("invalid utf-8 despite meta charset".into())),
            "iso-8859-1" | "latin-1" | "latin1" | "windows-1252" | "cp1252" => {
                Ok(bytes.iter().map(|b| *b as char).collect())
            }
            other => Err(IngestError::Encoding(format!("unsupported charset {other:?}"))),
        };
    }
    if bytes.starts_with(&[0xEF, 0xBB, 0xBF]) {
        return std::str::from_utf8(&bytes[3..])
            .map(|s| s.to_string())
            .map_err(|_| IngestError::Encoding("invalid utf-8 after BOM".into()));
    }
    if bytes.starts_with(&[0xFF, 0xFE]) {
        return decode_utf16(&bytes[2..], true);
    }
    if bytes.starts_with(&[0xFE, 0xFF]) {
        return decode_utf16(&bytes[2..], false);
    }
    std::str::from_utf8(bytes)
        .map(|s| s.to_string())
        .map_err(|_| IngestError::Encoding("document is not valid utf-8".into()))
}

fn decode_utf16(bytes: &[u8], little_endian: bool) -> Result<String, IngestError> {
    if !bytes.len().is_multiple_of(2) {
        return Err(IngestError::Encoding("odd utf-16 byte length".into()));
    }
    let units: Vec<u16> = bytes
        .chunks_exact(2)
        .map(|c| {
            if little_endian {
                u16::from_le_bytes([c[0], c[1]])
            } else {
                u16::from_be_bytes([c[0], c[1]])
            }
        })
        .collect();
    String::from_utf16(&units).map_err(|_| IngestError::Encoding("invalid utf-16".into()))
}

/// Scans the first kilobyte (ASCII-compatible) for `charset=` inside a meta
/// tag.
fn sniff_meta_charset(bytes: &[u8]) -> Option<String> {
    let head: String = bytes
        .iter()
        .take(1024)
        .map(|b| (*b as char).to_ascii_lowercase())
        .collect();
    let mut rest = head.as_str();
    while let Some(start) = rest.find("<meta") {
        let tag_end = rest[start..].find('>').map(|i| start + i).unwrap_or(rest.len());
        let tag = &rest[start..tag_end];
        if let Some(pos) = tag.find("charset=") {
            let value = &tag[pos + "charset=".len()..];
            let value = value.trim_start_matches(['"', '\'']);
            let end = value
                .find(['"', '\'', ' ', '/', ';'])
                .unwrap_or(value.len());
            let charset = value[..end].trim().to_string();
            if !charset.is_empty() {
                return Some(charset);
            }
        }
        rest = &rest[tag_end..];
        if rest.is_empty() {
            break;
        }
    }
    None
}

const VOID_TAGS: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param",
    "source", "track", "wbr",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedText {
    pub tag: String,
    pub text: String,
}

#[derive(Debug, Clone, Default)]
pub struct ExtractedDoc {
    /// `lang` attribute of the `<html>` element, when present.
    pub declared_lang: Option<String>,
    /// Whitespace-normalized text of each allowed element, document order.
    pub texts: Vec<TaggedText>,
}

/// Pulls the flattened text of every allowed element out of the markup.
pub fn extract_tagged_text(html: &str, allowed: &BTreeSet<String>) -> ExtractedDoc {
    let mut doc = ExtractedDoc::default();
    // Open allowed elements: (sequence number, tag, accumulated text).
    let mut open: Vec<(usize, String, String)> = Vec::new();
    let mut finished: Vec<(usize, String, String)> = Vec::new();
    let mut sequence = 0usize;

    let bytes = html.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'<' {
            let end = html[i..].find('<').map(|j| i + j).unwrap_or(html.len());
            if let Some((_, _, buf)) = open.last_mut() {
                buf.push_str(&decode_entities(&html[i..end]));
            }
            i = end;
            continue;
        }
        if html[i..].starts_with("<!--") {
            i = html[i..].find("-->").map(|j| i + j + 3).unwrap_or(html.len());
            continue;
        }
        if html[i..].starts_with("<!") || html[i..].starts_with("<?") {
            i = html[i..].find('>').map(|j| i + j + 1).unwrap_or(html.len());
            continue;
        }
        let Some(tag_close) = html[i..].find('>') else {
            break; // truncated tag at end of input
        };
        let raw_tag = &html[i + 1..i + tag_close];
        i += tag_close + 1;

        if let Some(name) = raw_tag.strip_prefix('/') {
            let name = name.trim().to_ascii_lowercase();
            // Tolerant close: pop up to and including the nearest matching
            // open element; unmatched closers are ignored.
            if let Some(pos) = open.iter().rposition(|(_, t, _)| *t == name) {
                while open.len() > pos {
                    finished.push(open.pop().unwrap());
                }
            }
            continue;
        }

        let self_closing = raw_tag.ends_with('/');
        let raw_tag = raw_tag.trim_end_matches('/');
        let name_end = raw_tag
            .find(|c: char| c.is_whitespace())
            .unwrap_or(raw_tag.len());
        let name = raw_tag[..name_end].to_ascii_lowercase();
        if name.is_empty() {
            continue;
        }
        let attrs = &raw_tag[name_end..];

        if name == "html" && doc.declared_lang.is_none() {
            if let Some(lang) = attr_value(attrs, "lang") {
                doc.declared_lang = Some(lang.to_ascii_lowercase());
            }
        }
        if name == "script" || name == "style" {
            let closer = format!("</{name}");
            i = html[i..]
                .to_ascii_lowercase()
                .find(&closer)
                .map(|j| {
                    let after = i + j;
                    html[after..].find('>').map(|k| after + k + 1).unwrap_or(html.len())
                })
                .unwrap_or(html.len());
            continue;
        }
        if VOID_TAGS.contains(&name.as_str()) || self_closing {
            if name == "br" {
                if let Some((_, _, buf)) = open.last_mut() {
                    buf.push(' ');
                }
            }
            continue;
        }
        if allowed.contains(&name) {
            open.push((sequence, name, String::new()));
            sequence += 1;
        }
    }
    while let Some(element) = open.pop() {
        finished.push(element);
    }

    finished.sort_by_key(|(seq, _, _)| *seq);
    for (_, tag, buf) in finished {
        let text = buf.split_whitespace().collect::<Vec<_>>().join(" ");
        if !text.is_empty() {
            doc.texts.push(TaggedText { tag, text });
        }
    }
    doc
}

fn attr_value<'a>(attrs: &'a str, name: &str) -> Option<&'a str> {
    let lower = attrs.to_ascii_lowercase();
    let mut search = 0;
    while let Some(rel) = lower[search..].find(name) {
        let pos = search + rel;
        let after = &attrs[pos + name.len()..];
        let boundary_ok = pos == 0
            || !lower.as_bytes()[pos - 1].is_ascii_alphanumeric() && lower.as_bytes()[pos - 1] != b'-';
        if boundary_ok {
            let trimmed = after.trim_start();
            if let Some(value_part) = trimmed.strip_prefix('=') {
                let value_part = value_part.trim_start();
                return Some(match value_part.chars().next() {
                    Some(q @ ('"' | '\'')) => {
                        let inner = &value_part[1..];
                        &inner[..inner.find(q).unwrap_or(inner.len())]
                    }
                    _ => {
                        &value_part[..value_part
                            .find(|c: char| c.is_whitespace())
                            .unwrap_or(value_part.len())]
                    }
                });
            }
        }
        search = pos + name.len();
    }
    None
}

fn decode_entities(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find('&') {
        out.push_str(&rest[..pos]);
        rest = &rest[pos..];
        let semi = rest[..rest.len().min(12)].find(';');
        match semi {
            Some(end) => {
                let entity = &rest[1..end];
                let decoded = match entity {
                    "amp" => Some('&'),
                    "lt" => Some('<'),
                    "gt" => Some('>'),
                    "quot" => Some('"'),
                    "apos" => Some('\''),
                    "nbsp" => Some(' '),
                    _ => entity
                        .strip_prefix("#x")
                        .or_else(|| entity.strip_prefix("#X"))
                        .and_then(|h| u32::from_str_radix(h, 16).ok())
                        .or_else(|| entity.strip_prefix('#').and_then(|d| d.parse().ok()))
                        .and_then(char::from_u32),
                };
                match decoded {
                    Some(c) => {
                        out.push(c);
                        rest = &rest[end + 1..];
                    }
                    None => {
                        out.push('&');
                        rest = &rest[1..];
                    }
                }
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn allowed() -> BTreeSet<String> {
        ["p", "title", "h1", "h2"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn collects_allowed_tags_in_document_order() {
        let html = "<html><head><title>Our research</title></head><body>\
<h1>Innovation lab</h1><div>skip this</div><p>First paragraph.</p><p>Second.</p></body></html>";
        let doc = extract_tagged_text(html, &allowed());
        let tags: Vec<&str> = doc.texts.iter().map(|t| t.tag.as_str()).collect();
        assert_eq!(tags, vec!["title", "h1", "p", "p"]);
        assert_eq!(doc.texts[2].text, "First paragraph.");
    }

    #[test]
    fn nested_markup_flattens_to_nearest_allowed_ancestor() {
        let html = "<p>Our <b>innovation</b> lab <span>grows</span>.</p>";
        let doc = extract_tagged_text(html, &allowed());
        assert_eq!(doc.texts.len(), 1);
        assert_eq!(doc.texts[0].text, "Our innovation lab grows.");
    }

    #[test]
    fn script_and_style_content_is_skipped() {
        let html = "<p>keep</p><script>var x = '<p>not text</p>';</script><style>p{}</style><p>also keep</p>";
        let doc = extract_tagged_text(html, &allowed());
        assert_eq!(doc.texts.len(), 2);
    }

    #[test]
    fn malformed_markup_never_fails() {
        let html = "<p>unclosed paragraph <h1>heading</p> stray</h1 ... <p>ok</p><";
        let doc = extract_tagged_text(html, &allowed());
        assert!(!doc.texts.is_empty());
    }

    #[test]
    fn entities_decode() {
        let html = "<p>R&amp;D &lt;works&gt; &#233;nergie &#x2014; ok&nbsp;fine &unknown;</p>";
        let doc = extract_tagged_text(html, &allowed());
        assert_eq!(doc.texts[0].text, "R&D <works> énergie — ok fine &unknown;");
    }

    #[test]
    fn html_lang_attribute_is_captured() {
        for html in [
            "<html lang=\"en\"><p>text</p></html>",
            "<html lang='EN'><p>text</p></html>",
            "<html lang=en><p>text</p></html>",
        ] {
            let doc = extract_tagged_text(html, &allowed());
            assert_eq!(doc.declared_lang.as_deref(), Some("en"), "{html}");
        }
    }

    #[test]
    fn br_becomes_whitespace() {
        let html = "<p>line one<br>line two</p>";
        let doc = extract_tagged_text(html, &allowed());
        assert_eq!(doc.texts[0].text, "line one line two");
    }

    #[test]
    fn decode_utf8_plain_and_bom() {
        assert_eq!(decode_html("héllo".as_bytes()).unwrap(), "héllo");
        let mut with_bom = vec![0xEF, 0xBB, 0xBF];
        with_bom.extend("héllo".as_bytes());
        assert_eq!(decode_html(&with_bom).unwrap(), "héllo");
    }

    #[test]
    fn decode_meta_charset_latin1() {
        let mut bytes = b"<meta charset=\"iso-8859-1\"><p>caf".to_vec();
        bytes.push(0xE9); // é in latin-1
        bytes.extend(b"</p>");
        let decoded = decode_html(&bytes).unwrap();
        assert!(decoded.contains("café"));
    }

    #[test]
    fn decode_meta_charset_utf8_with_invalid_bytes_errors() {
        let bytes = b"<meta charset=utf-8><p>\xFF\xFE</p>".to_vec();
        assert!(decode_html(&bytes).is_err());
    }

    #[test]
    fn undecodable_document_errors() {
        let bytes = vec![0xC3, 0x28, 0xA0, 0xA1];
        assert!(decode_html(&bytes).is_err());
    }

    #[test]
    fn decode_utf16_little_endian() {
        let text = "ok été";
        let mut bytes = vec![0xFF, 0xFE];
        for unit in text.encode_utf16() {
            bytes.extend(unit.to_le_bytes());
        }
        assert_eq!(decode_html(&bytes).unwrap(), text);
    }

    #[test]
    fn repeated_identical_paragraphs_all_extracted() {
        // Deduplication happens at passage level, not here.
        let html = "<p>same text</p><p>same text</p>";
        let doc = extract_tagged_text(html, &allowed());
        assert_eq!(doc.texts.len(), 2);
    }
}
