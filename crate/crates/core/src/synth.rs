//! Synthetic corpus generation: documents with planted multi-token terms,
//! a matching gold lexicon, and an embedding fixture whose geometry keeps
//! term-bearing blocks above the similarity gate. Everything derives from
//! one seed, so benchmarks are reproducible end to end.

use std::collections::BTreeSet;
use std::io;
use std::path::{Path, PathBuf};

use crate::ingest::{DocKind, ManifestEntry, SourceManifest, DEFAULT_KEYWORDS};
use crate::lexicon::Category;
use crate::rng::Rng;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub web_docs: usize,
    pub pdf_docs: usize,
    /// Planted multi-token terms, spread evenly over the six categories.
    pub terms: usize,
    pub sentences_per_doc: (usize, usize),
    /// Filler tokens per sentence, before the keyword and any planted term.
    pub filler_tokens: (usize, usize),
    /// Probability that a sentence carries a planted term.
    pub term_sentence_prob: f64,
    pub embed_dim: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            web_docs: 120,
            pdf_docs: 80,
            terms: 30,
            sentences_per_doc: (3, 5),
            filler_tokens: (4, 6),
            term_sentence_prob: 0.5,
            embed_dim: 12,
            seed: 20240501,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthDoc {
    pub doc_id: String,
    pub file_name: String,
    pub kind: DocKind,
    pub url: String,
    pub company: String,
    pub sector: String,
    pub content: String,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub docs: Vec<SynthDoc>,
    pub lexicon_tsv: String,
    pub embeddings_txt: String,
    /// The planted terms with their categories.
    pub terms: Vec<(String, Category)>,
}

#[derive(Debug, Clone)]
pub struct SynthPaths {
    pub manifest: PathBuf,
    pub lexicon: PathBuf,
    pub embeddings: PathBuf,
}

const SECTORS: &[&str] = &[
    "Communications",
    "Logiciels informatiques",
    "Construction",
    "Banque, assurances et services financiers",
    "Fabrication de meubles",
    "Commerce de détail",
];

/// Pronounceable pseudo-word: two or three consonant-vowel syllables.
fn make_word(rng: &mut Rng) -> String {
    const C: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
    const V: &[&str] = &["a", "e", "i", "o", "u"];
    let syllables = 2 + rng.below(2);
    let mut word = String::new();
    for _ in 0..syllables {
        word.push_str(C[rng.below(C.len())]);
        word.push_str(V[rng.below(V.len())]);
    }
    word
}

fn fresh_word(rng: &mut Rng, taken: &mut BTreeSet<String>) -> String {
    loop {
        let word = make_word(rng);
        if taken.insert(word.clone()) {
            return word;
        }
    }
}

pub fn generate(config: &SynthConfig) -> SynthCorpus {
    let root = Rng::new(config.seed);
    let mut vocab_rng = root.derive("vocab");
    let mut taken: BTreeSet<String> = DEFAULT_KEYWORDS.iter().map(|s| s.to_string()).collect();

    // Planted terms: disjoint word pairs/triples per category so no term
    // nests inside or overlaps another.
    let mut terms: Vec<(String, Category)> = Vec::new();
    let mut term_words: Vec<(String, Category)> = Vec::new();
    for i in 0..config.terms {
        let category = Category::ALL[i % Category::ALL.len()];
        let width = if i % 5 == 4 { 3 } else { 2 };
        let words: Vec<String> = (0..width)
            .map(|_| fresh_word(&mut vocab_rng, &mut taken))
            .collect();
        for w in &words {
            term_words.push((w.clone(), category));
        }
        terms.push((words.join(" "), category));
    }

    let distractors: Vec<String> = (0..60)
        .map(|_| fresh_word(&mut vocab_rng, &mut taken))
        .collect();

    let mut embed_rng = root.derive("embeddings");
    let embeddings_txt = build_embeddings(config, &term_words, &distractors, &mut embed_rng);

    let mut lexicon_tsv = String::from("surface\tcategory\n");
    for (term, category) in &terms {
        lexicon_tsv.push_str(&format!("{term}\t{}\n", category.code()));
    }

    let mut docs = Vec::new();
    let mut doc_rng = root.derive("docs");
    let mut term_cursor = 0usize;
    for d in 0..config.web_docs + config.pdf_docs {
        let is_web = d < config.web_docs;
        let kind = if is_web { DocKind::Html } else { DocKind::Text };
        let doc_id = if is_web { format!("web{d:04}") } else { format!("pdf{d:04}") };
        let body = make_document(
            config,
            &terms,
            &distractors,
            &mut doc_rng,
            &mut term_cursor,
        );
        let content = match kind {
            DocKind::Html => format!(
                "<html lang=\"en\"><head><title>{} overview</title></head><body><p>{body}</p></body></html>",
                doc_id
            ),
            DocKind::Text => body,
        };
        docs.push(SynthDoc {
            file_name: format!("{doc_id}.{}", if is_web { "html" } else { "txt" }),
            url: format!("https://{doc_id}.example/"),
            company: doc_id.to_uppercase(),
            sector: SECTORS[d % SECTORS.len()].to_string(),
            doc_id,
            kind,
            content,
        });
    }

    SynthCorpus { docs, lexicon_tsv, embeddings_txt, terms }
}

fn make_document(
    config: &SynthConfig,
    terms: &[(String, Category)],
    distractors: &[String],
    rng: &mut Rng,
    term_cursor: &mut usize,
) -> String {
    let (lo, hi) = config.sentences_per_doc;
    let sentence_count = lo + rng.below(hi - lo + 1);
    let mut sentences = Vec::new();
    for _ in 0..sentence_count {
        let (flo, fhi) = config.filler_tokens;
        let mut tokens: Vec<String> = (0..flo + rng.below(fhi - flo + 1))
            .map(|_| distractors[rng.below(distractors.len())].clone())
            .collect();
        // One seed keyword per sentence keeps the paragraph past the filter.
        let keyword = DEFAULT_KEYWORDS[rng.below(DEFAULT_KEYWORDS.len())];
        tokens.insert(rng.below(tokens.len() + 1), keyword.to_string());
        if rng.next_f64() < config.term_sentence_prob {
            // Round-robin planting keeps every term frequent.
            let (term, _) = &terms[*term_cursor % terms.len()];
            *term_cursor += 1;
            let at = rng.below(tokens.len() + 1);
            for (j, word) in term.split(' ').enumerate() {
                tokens.insert(at + j, word.to_string());
            }
        }
        let mut sentence = tokens.join(" ");
        sentence.push('.');
        let mut chars = sentence.chars();
        let first = chars.next().unwrap().to_uppercase().collect::<String>();
        sentences.push(format!("{first}{}", chars.as_str()));
    }
    sentences.join(" ")
}

/// Every word shares a base component; term words add a category direction.
/// Term vectors therefore stay well above the 0.5 gate against any block
/// from this corpus.
fn build_embeddings(
    config: &SynthConfig,
    term_words: &[(String, Category)],
    distractors: &[String],
    rng: &mut Rng,
) -> String {
    let dim = config.embed_dim.max(8);
    let mut rows: Vec<(String, Vec<f64>)> = Vec::new();
    let base_vector = |rng: &mut Rng| {
        let mut v = vec![0.0; dim];
        v[0] = 1.0;
        for slot in v.iter_mut().skip(7) {
            *slot = rng.uniform(-0.15, 0.15);
        }
        v
    };
    for word in DEFAULT_KEYWORDS.iter().map(|s| s.to_string()).chain(distractors.iter().cloned()) {
        rows.push((word, base_vector(rng)));
    }
    for (word, category) in term_words {
        let mut v = base_vector(rng);
        let topic = 1 + Category::ALL.iter().position(|c| c == category).unwrap();
        v[topic] = 0.6;
        rows.push((word.clone(), v));
    }
    let mut out = format!("{} {dim}\n", rows.len());
    for (word, vector) in rows {
        out.push_str(&word);
        for x in vector {
            out.push_str(&format!(" {x}"));
        }
        out.push('\n');
    }
    out
}

impl SynthCorpus {
    pub fn manifest(&self, base: &Path) -> SourceManifest {
        SourceManifest {
            entries: self
                .docs
                .iter()
                .map(|doc| ManifestEntry {
                    doc_id: doc.doc_id.clone(),
                    path: base.join(&doc.file_name),
                    url: doc.url.clone(),
                    company: doc.company.clone(),
                    sector: doc.sector.clone(),
                    kind: doc.kind,
                })
                .collect(),
        }
    }

    /// Writes documents, manifest.json, lexicon.tsv, and embeddings.txt.
    pub fn write_to(&self, dir: &Path) -> io::Result<SynthPaths> {
        let docs_dir = dir.join("docs");
        std::fs::create_dir_all(&docs_dir)?;
        for doc in &self.docs {
            std::fs::write(docs_dir.join(&doc.file_name), &doc.content)?;
        }
        let manifest_path = dir.join("manifest.json");
        let manifest = self.manifest(&docs_dir);
        std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
        let lexicon_path = dir.join("lexicon.tsv");
        std::fs::write(&lexicon_path, &self.lexicon_tsv)?;
        let embeddings_path = dir.join("embeddings.txt");
        std::fs::write(&embeddings_path, &self.embeddings_txt)?;
        Ok(SynthPaths {
            manifest: manifest_path,
            lexicon: lexicon_path,
            embeddings: embeddings_path,
        })
    }
}

#[cfg(test)]
mod tests {
    use std::io::Cursor;

    use crate::embed::EmbeddingStore;
    use crate::lexicon::Lexicon;
    use crate::normalize::Normalizer;

    use super::*;

    #[test]
    fn generation_is_deterministic() {
        let config = SynthConfig { web_docs: 5, pdf_docs: 3, ..Default::default() };
        let a = generate(&config);
        let b = generate(&config);
        assert_eq!(a.lexicon_tsv, b.lexicon_tsv);
        assert_eq!(a.embeddings_txt, b.embeddings_txt);
        assert_eq!(a.docs.len(), b.docs.len());
        for (x, y) in a.docs.iter().zip(&b.docs) {
            assert_eq!(x.content, y.content);
        }
    }

    #[test]
    fn terms_are_multi_token_and_categorized() {
        let corpus = generate(&SynthConfig { web_docs: 2, pdf_docs: 2, ..Default::default() });
        assert_eq!(corpus.terms.len(), 30);
        for (term, _) in &corpus.terms {
            assert!(term.split(' ').count() >= 2);
        }
        let categories: BTreeSet<Category> = corpus.terms.iter().map(|(_, c)| *c).collect();
        assert_eq!(categories.len(), 6);
    }

    #[test]
    fn lexicon_and_embeddings_parse() {
        let corpus = generate(&SynthConfig { web_docs: 2, pdf_docs: 2, ..Default::default() });
        let lexicon = Lexicon::load(Cursor::new(corpus.lexicon_tsv.as_bytes()), Normalizer::new())
            .unwrap();
        assert_eq!(lexicon.len(), 30);
        let store = EmbeddingStore::load(Cursor::new(corpus.embeddings_txt.as_bytes())).unwrap();
        assert!(store.len() > 60);
        for (term, _) in &corpus.terms {
            for word in term.split(' ') {
                assert!(store.get(word).is_some(), "missing embedding for {word}");
            }
        }
    }

    #[test]
    fn no_term_nests_or_overlaps_another() {
        let corpus = generate(&SynthConfig::default());
        let token_seqs: Vec<Vec<&str>> = corpus
            .terms
            .iter()
            .map(|(t, _)| t.split(' ').collect())
            .collect();
        for (i, a) in token_seqs.iter().enumerate() {
            for (j, b) in token_seqs.iter().enumerate() {
                if i == j {
                    continue;
                }
                // No shared words at all, so no nesting and no overlap.
                for w in a {
                    assert!(!b.contains(w), "terms {i} and {j} share {w}");
                }
            }
        }
    }

    #[test]
    fn documents_round_trip_to_disk() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = generate(&SynthConfig { web_docs: 3, pdf_docs: 2, ..Default::default() });
        let paths = corpus.write_to(dir.path()).unwrap();
        assert!(paths.manifest.exists());
        assert!(paths.lexicon.exists());
        assert!(paths.embeddings.exists());
        let manifest = SourceManifest::load(&paths.manifest).unwrap();
        assert_eq!(manifest.entries.len(), 5);
        for entry in &manifest.entries {
            assert!(entry.path.exists(), "{:?}", entry.path);
        }
    }
}
