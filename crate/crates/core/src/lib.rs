//! Domain lexicon construction: corpus filtering and annotation against a
//! gold lexicon, similarity-gated context blocks, from-scratch CNN and CRF
//! sequence taggers, and gated extraction of new candidate terms.
//!
//! The `lexiforge` binary in the companion crate drives these modules as a
//! staged pipeline; everything here is usable as a library and is
//! deterministic under a fixed seed.

pub mod annotate;
pub mod blocks;
pub mod cvalue;
pub mod digest;
pub mod embed;
pub mod eval;
pub mod extract;
pub mod ingest;
pub mod lexicon;
pub mod normalize;
pub mod pipeline;
pub mod rng;
pub mod split;
pub mod synth;
pub mod tagger;
