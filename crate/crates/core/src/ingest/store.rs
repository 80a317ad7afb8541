//! The persisted corpus: one passage per JSON line plus a per-language
//! statistics table and the skip log.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::digest::fnv1a64_hex;

use super::{IngestError, Passage, SkippedDoc, SourceManifest};

pub const PASSAGES_FILE: &str = "passages.jsonl";
pub const STATS_FILE: &str = "stats.tsv";
pub const SKIPPED_FILE: &str = "skipped.tsv";
const STATS_HEADER: &str = "Langues\tURLs\tSecteurs\tTokens";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LangStats {
    pub lang: String,
    pub url_count: usize,
    pub sector_count: usize,
    pub token_count: usize,
}

#[derive(Debug, Clone, Default)]
pub struct CorpusStore {
    pub passages: Vec<Passage>,
    pub skipped: Vec<SkippedDoc>,
    pub stats: Vec<LangStats>,
}

impl CorpusStore {
    pub fn build(
        passages: Vec<Passage>,
        skipped: Vec<SkippedDoc>,
        manifest: &SourceManifest,
    ) -> CorpusStore {
        let sector_of: BTreeMap<&str, &str> = manifest
            .entries
            .iter()
            .map(|e| (e.doc_id.as_str(), e.sector.as_str()))
            .collect();
        // Per language: distinct docs, distinct sectors, token total.
        let mut rows: BTreeMap<&str, (std::collections::BTreeSet<&str>, std::collections::BTreeSet<&str>, usize)> =
            BTreeMap::new();
        for passage in &passages {
            let row = rows.entry(passage.lang.as_str()).or_default();
            row.0.insert(passage.doc_id.as_str());
            if let Some(sector) = sector_of.get(passage.doc_id.as_str()) {
                row.1.insert(sector);
            }
            row.2 += passage.text.split_whitespace().count();
        }
        let mut stats: Vec<LangStats> = rows
            .into_iter()
            .map(|(lang, (docs, sectors, tokens))| LangStats {
                lang: lang.to_string(),
                url_count: docs.len(),
                sector_count: sectors.len(),
                token_count: tokens,
            })
            .collect();
        stats.sort_by(|a, b| {
            b.sector_count
                .cmp(&a.sector_count)
                .then(b.url_count.cmp(&a.url_count))
                .then(a.lang.cmp(&b.lang))
        });
        CorpusStore { passages, skipped, stats }
    }

    pub fn write_dir(&self, dir: &Path) -> Result<(), IngestError> {
        std::fs::create_dir_all(dir)?;
        let mut passages = io::BufWriter::new(std::fs::File::create(dir.join(PASSAGES_FILE))?);
        for passage in &self.passages {
            serde_json::to_writer(&mut passages, passage)?;
            writeln!(passages)?;
        }
        passages.flush()?;

        let mut stats = io::BufWriter::new(std::fs::File::create(dir.join(STATS_FILE))?);
        writeln!(stats, "{STATS_HEADER}")?;
        for row in &self.stats {
            writeln!(
                stats,
                "{}\t{}\t{}\t{}",
                row.lang, row.url_count, row.sector_count, row.token_count
            )?;
        }
        stats.flush()?;

        let mut skipped = io::BufWriter::new(std::fs::File::create(dir.join(SKIPPED_FILE))?);
        writeln!(skipped, "doc_id\treason")?;
        for skip in &self.skipped {
            writeln!(skipped, "{}\t{}", skip.doc_id, skip.reason)?;
        }
        skipped.flush()?;
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<CorpusStore, IngestError> {
        let mut passages = Vec::new();
        let file = std::fs::File::open(dir.join(PASSAGES_FILE))?;
        for line in io::BufReader::new(file).lines() {
            let line = line?;
            if !line.trim().is_empty() {
                passages.push(serde_json::from_str(&line)?);
            }
        }
        let mut stats = Vec::new();
        let stats_text = std::fs::read_to_string(dir.join(STATS_FILE))?;
        for (idx, line) in stats_text.lines().enumerate() {
            if idx == 0 || line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(IngestError::Manifest(format!("stats row {} malformed", idx + 1)));
            }
            let parse = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| IngestError::Manifest(format!("stats row {} malformed", idx + 1)))
            };
            stats.push(LangStats {
                lang: cols[0].to_string(),
                url_count: parse(cols[1])?,
                sector_count: parse(cols[2])?,
                token_count: parse(cols[3])?,
            });
        }
        let mut skipped = Vec::new();
        if let Ok(text) = std::fs::read_to_string(dir.join(SKIPPED_FILE)) {
            for (idx, line) in text.lines().enumerate() {
                if idx == 0 || line.trim().is_empty() {
                    continue;
                }
                if let Some((doc_id, reason)) = line.split_once('\t') {
                    skipped.push(SkippedDoc {
                        doc_id: doc_id.to_string(),
                        reason: reason.to_string(),
                    });
                }
            }
        }
        Ok(CorpusStore { passages, skipped, stats })
    }

    /// Content digest over the passage stream and statistics table.
    pub fn digest(&self) -> String {
        let mut buf = Vec::new();
        for passage in &self.passages {
            serde_json::to_writer(&mut buf, passage).expect("in-memory serialization");
            buf.push(b'\n');
        }
        for row in &self.stats {
            buf.extend(
                format!("{}\t{}\t{}\t{}\n", row.lang, row.url_count, row.sector_count, row.token_count)
                    .as_bytes(),
            );
        }
        fnv1a64_hex(&buf)
    }

    pub fn stats_header() -> &'static str {
        STATS_HEADER
    }
}

#[cfg(test)]
mod tests {
    use crate::ingest::{DocKind, ManifestEntry, SourceKind};

    use super::*;

    fn passage(doc_id: &str, lang: &str, text: &str) -> Passage {
        Passage {
            doc_id: doc_id.to_string(),
            tag: "p".to_string(),
            text: text.to_string(),
            lang: lang.to_string(),
            lang_confidence: 0.95,
            source_kind: SourceKind::Web,
        }
    }

    fn entry(doc_id: &str, sector: &str) -> ManifestEntry {
        ManifestEntry {
            doc_id: doc_id.to_string(),
            path: "/nope".into(),
            url: format!("https://{doc_id}.com/"),
            company: doc_id.to_uppercase(),
            sector: sector.to_string(),
            kind: DocKind::Html,
        }
    }

    #[test]
    fn stats_shape_and_ordering() {
        let manifest = SourceManifest {
            entries: vec![entry("a", "Communications"), entry("b", "Construction"), entry("c", "Communications")],
        };
        let passages = vec![
            passage("a", "en", "one two three"),
            passage("b", "en", "four five"),
            passage("c", "fr", "six sept huit neuf"),
        ];
        let store = CorpusStore::build(passages, vec![], &manifest);
        assert_eq!(store.stats.len(), 2);
        // en: 2 urls, 2 sectors, 5 tokens; fr: 1 url, 1 sector, 4 tokens.
        assert_eq!(store.stats[0].lang, "en");
        assert_eq!(store.stats[0].url_count, 2);
        assert_eq!(store.stats[0].sector_count, 2);
        assert_eq!(store.stats[0].token_count, 5);
        assert_eq!(store.stats[1].lang, "fr");
    }

    #[test]
    fn header_matches_published_column_order() {
        assert_eq!(CorpusStore::stats_header(), "Langues\tURLs\tSecteurs\tTokens");
    }

    #[test]
    fn empty_store_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let store = CorpusStore::build(vec![], vec![], &SourceManifest::default());
        store.write_dir(dir.path()).unwrap();
        let back = CorpusStore::read_dir(dir.path()).unwrap();
        assert!(back.passages.is_empty());
        assert!(back.stats.is_empty());
    }

    #[test]
    fn write_read_digest_stable() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = SourceManifest { entries: vec![entry("a", "Communications")] };
        let store = CorpusStore::build(
            vec![passage("a", "en", "innovation talk here")],
            vec![SkippedDoc { doc_id: "z".into(), reason: "io_error: missing".into() }],
            &manifest,
        );
        store.write_dir(dir.path()).unwrap();
        let bytes_first = std::fs::read(dir.path().join(PASSAGES_FILE)).unwrap();
        store.write_dir(dir.path()).unwrap();
        let bytes_second = std::fs::read(dir.path().join(PASSAGES_FILE)).unwrap();
        assert_eq!(bytes_first, bytes_second);

        let back = CorpusStore::read_dir(dir.path()).unwrap();
        assert_eq!(back.digest(), store.digest());
        assert_eq!(back.skipped.len(), 1);
    }
}
