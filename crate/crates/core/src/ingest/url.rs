//! URL parsing and the keep/drop filter.

use serde::{Deserialize, Serialize};

use super::FilterRules;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedUrl {
    pub scheme: String,
    pub host: String,
    pub path: String,
    pub query: Option<String>,
}

impl ParsedUrl {
    /// Number of non-empty path segments; the homepage has depth zero.
    pub fn path_depth(&self) -> usize {
        self.path.split('/').filter(|s| !s.is_empty()).count()
    }
}

/// Minimal syntactic parse: `scheme://host[/path][?query][#fragment]`.
pub fn parse_url(raw: &str) -> Option<ParsedUrl> {
    let raw = raw.trim();
    let (scheme, rest) = raw.split_once("://")?;
    if scheme.is_empty()
        || !scheme.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
        || !scheme
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'))
    {
        return None;
    }
    let rest = rest.split('#').next().unwrap_or(rest);
    let (host_part, tail) = match rest.find(['/', '?']) {
        Some(i) => (&rest[..i], &rest[i..]),
        None => (rest, ""),
    };
    let host = host_part.split('@').next_back().unwrap_or(host_part);
    if host.is_empty() || host.contains(char::is_whitespace) {
        return None;
    }
    let (path, query) = match tail.split_once('?') {
        Some((p, q)) => (p, Some(q.to_string())),
        None => (tail, None),
    };
    let path = if path.is_empty() { "/" } else { path };
    Some(ParsedUrl {
        scheme: scheme.to_ascii_lowercase(),
        host: host.to_ascii_lowercase(),
        path: path.to_string(),
        query,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "decision", content = "reason")]
pub enum UrlDecision {
    Keep,
    Drop(DropReason),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "detail")]
pub enum DropReason {
    Malformed,
    Excluded(String),
    TooDeep { depth: usize, max_depth: usize },
}

/// Pure decision over (url, rules): malformed URLs drop, any exclusion
/// substring in the path or query (case-insensitive) drops, and with
/// homepage targeting enabled, paths deeper than `max_depth` drop.
pub fn filter_url(url: &str, rules: &FilterRules) -> UrlDecision {
    let Some(parsed) = parse_url(url) else {
        return UrlDecision::Drop(DropReason::Malformed);
    };
    let mut haystack = parsed.path.to_ascii_lowercase();
    if let Some(query) = &parsed.query {
        haystack.push('?');
        haystack.push_str(&query.to_ascii_lowercase());
    }
    for exclude in &rules.url_excludes {
        let needle = exclude.to_ascii_lowercase();
        if !needle.is_empty() && haystack.contains(&needle) {
            return UrlDecision::Drop(DropReason::Excluded(exclude.clone()));
        }
    }
    if rules.homepage_only {
        let depth = parsed.path_depth();
        if depth > rules.max_depth {
            return UrlDecision::Drop(DropReason::TooDeep { depth, max_depth: rules.max_depth });
        }
    }
    UrlDecision::Keep
}
