//! Co-occurrence filter: a paragraph is dropped when every word of some
//! evaluation triple appears in it.
//!
//! The index maps each normalized word to the triples that require it. While
//! scanning a paragraph each triple keeps a countdown of words still missing;
//! a triple fires when its countdown reaches zero. Counters are reset lazily
//! with a per-paragraph generation stamp, so the cost per paragraph is linear
//! in its word count plus the postings touched.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::text::{for_each_word, join_paragraphs, split_paragraphs, TokenCounter};
use crate::triple::{KnowledgeTriple, TripleSet};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FilterError {
    #[error("cannot build a match index from an empty triple set")]
    EmptyTripleSet,
    #[error("triple #{0} has no words after normalization")]
    NoWords(usize),
}

/// Immutable word -> triples index.
#[derive(Debug, Clone)]
pub struct MatchIndex {
    word_ids: HashMap<String, u32>,
    postings: Vec<Vec<u32>>,
    required: Vec<u32>,
}

fn triple_words(t: &KnowledgeTriple) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut buf = String::new();
    for field in [t.subject.as_str(), t.relation.as_str(), t.object.as_str()] {
        for_each_word(field, &mut buf, |w| {
            if !out.iter().any(|x| x == w) {
                out.push(String::from(w));
            }
        });
    }
    out
}

impl MatchIndex {
    pub fn build(ts: &TripleSet) -> Result<Self, FilterError> {
        if ts.is_empty() {
            return Err(FilterError::EmptyTripleSet);
        }
        let mut word_ids: HashMap<String, u32> = HashMap::new();
        let mut postings: Vec<Vec<u32>> = Vec::new();
        let mut required = Vec::with_capacity(ts.len());
        for (i, t) in ts.iter().enumerate() {
            let ws = triple_words(t);
            if ws.is_empty() {
                return Err(FilterError::NoWords(i));
            }
            required.push(ws.len() as u32);
            for w in ws {
                let next = postings.len() as u32;
                let id = *word_ids.entry(w).or_insert(next);
                if id == next {
                    postings.push(Vec::new());
                }
                postings[id as usize].push(i as u32);
            }
        }
        Ok(Self { word_ids, postings, required })
    }

    pub fn triple_count(&self) -> usize {
        self.required.len()
    }

    /// Triples (by index) that require `word`; `word` must already be normalized.
    pub fn triples_for(&self, word: &str) -> &[u32] {
        self.word_ids
            .get(word)
            .map(|&id| self.postings[id as usize].as_slice())
            .unwrap_or(&[])
    }

    /// Number of distinct words triple `i` needs.
    pub fn required_words(&self, i: usize) -> u32 {
        self.required[i]
    }

    pub fn matcher(&self) -> Matcher<'_> {
        Matcher {
            index: self,
            generation: 0,
            word_stamp: vec![0; self.postings.len()],
            triple_stamp: vec![0; self.required.len()],
            remaining: vec![0; self.required.len()],
            buf: String::new(),
            hits: Vec::new(),
        }
    }
}

/// Per-thread scratch state for scanning paragraphs against a [`MatchIndex`].
pub struct Matcher<'a> {
    index: &'a MatchIndex,
    generation: u32,
    word_stamp: Vec<u32>,
    triple_stamp: Vec<u32>,
    remaining: Vec<u32>,
    buf: String,
    hits: Vec<u32>,
}

impl Matcher<'_> {
    /// Indices of every triple whose words all occur in `paragraph`, ascending.
    pub fn matches(&mut self, paragraph: &str) -> &[u32] {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.word_stamp.iter_mut().for_each(|s| *s = 0);
            self.triple_stamp.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
        let gen = self.generation;
        self.hits.clear();
        let index = self.index;
        let word_stamp = &mut self.word_stamp;
        let triple_stamp = &mut self.triple_stamp;
        let remaining = &mut self.remaining;
        let hits = &mut self.hits;
        for_each_word(paragraph, &mut self.buf, |w| {
            let Some(&id) = index.word_ids.get(w) else { return };
            let id = id as usize;
            if word_stamp[id] == gen {
                return;
            }
            word_stamp[id] = gen;
            for &t in &index.postings[id] {
                let t = t as usize;
                if triple_stamp[t] != gen {
                    triple_stamp[t] = gen;
                    remaining[t] = index.required[t];
                }
                remaining[t] -= 1;
                if remaining[t] == 0 {
                    hits.push(t as u32);
                }
            }
        });
        self.hits.sort_unstable();
        &self.hits
    }

    pub fn is_leaky(&mut self, paragraph: &str) -> bool {
        !self.matches(paragraph).is_empty()
    }
}

/// Running totals for a filter pass. Merging is associative and commutative.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FilterStats {
    pub paragraphs_in: u64,
    pub paragraphs_removed: u64,
    pub tokens_in: u64,
    pub tokens_out: u64,
    /// Paragraphs removed on account of each triple (a paragraph may count for several).
    pub per_triple_hits: Vec<u64>,
}

impl FilterStats {
    pub fn new(triple_count: usize) -> Self {
        Self { per_triple_hits: vec![0; triple_count], ..Self::default() }
    }

    pub fn merge(&mut self, other: &FilterStats) {
        self.paragraphs_in += other.paragraphs_in;
        self.paragraphs_removed += other.paragraphs_removed;
        self.tokens_in += other.tokens_in;
        self.tokens_out += other.tokens_out;
        if self.per_triple_hits.len() < other.per_triple_hits.len() {
            self.per_triple_hits.resize(other.per_triple_hits.len(), 0);
        }
        for (a, b) in self.per_triple_hits.iter_mut().zip(&other.per_triple_hits) {
            *a += b;
        }
    }
}

/// Filter one document. Returns the kept paragraphs joined by a blank line,
/// or `None` when nothing survives. Kept paragraphs are byte-identical to the input.
pub fn filter_document<C: TokenCounter>(
    text: &str,
    matcher: &mut Matcher<'_>,
    counter: &C,
    stats: &mut FilterStats,
) -> Option<String> {
    if stats.per_triple_hits.len() < matcher.index.triple_count() {
        stats.per_triple_hits.resize(matcher.index.triple_count(), 0);
    }
    let mut kept: Vec<&str> = Vec::new();
    for p in split_paragraphs(text) {
        let tokens = counter.count(p);
        stats.paragraphs_in += 1;
        stats.tokens_in += tokens;
        let hits = matcher.matches(p);
        if hits.is_empty() {
            stats.tokens_out += tokens;
            kept.push(p);
        } else {
            stats.paragraphs_removed += 1;
            for &h in hits {
                stats.per_triple_hits[h as usize] += 1;
            }
        }
    }
    if kept.is_empty() {
        None
    } else {
        Some(join_paragraphs(&kept))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::WhitespaceTokens;
    use alloc::collections::BTreeSet;

    fn ts(rows: &[(&str, &str, &str)]) -> TripleSet {
        TripleSet::new(
            rows.iter()
                .map(|(s, r, o)| KnowledgeTriple::parse_permissive(s, r, o).unwrap())
                .collect(),
        )
    }

    #[test]
    fn index_decomposition() {
        let idx = MatchIndex::build(&ts(&[("bottle", "material", "glass")])).unwrap();
        for w in ["bottle", "material", "glass"] {
            assert_eq!(idx.triples_for(w), &[0]);
        }
        assert_eq!(idx.required_words(0), 3);

        let idx = MatchIndex::build(&ts(&[("bottle", "material", "glass"), ("window", "material", "glass")])).unwrap();
        assert_eq!(idx.triples_for("glass"), &[0, 1]);
    }

    #[test]
    fn multiword_subject_matches_naive_split() {
        let idx = MatchIndex::build(&ts(&[("New York", "location", "United States")])).unwrap();
        // naive oracle: split on non-alphanumerics, lowercase, dedupe
        let mut expected = BTreeSet::new();
        for field in ["New York", "location", "United States"] {
            for w in field.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
                expected.insert(w.to_lowercase());
            }
        }
        assert_eq!(idx.required_words(0) as usize, expected.len());
        for w in &expected {
            assert_eq!(idx.triples_for(w), &[0]);
        }
    }

    #[test]
    fn empty_and_wordless() {
        assert_eq!(MatchIndex::build(&TripleSet::default()).unwrap_err(), FilterError::EmptyTripleSet);
        let bad = ts(&[("a", "color", "b"), ("--", "_", "!!")]);
        assert_eq!(MatchIndex::build(&bad).unwrap_err(), FilterError::NoWords(1));
    }

    #[test]
    fn removal_examples() {
        let idx = MatchIndex::build(&ts(&[("bottle", "material", "glass")])).unwrap();
        let mut m = idx.matcher();
        assert!(m.is_leaky("A bottle made of glass is a material marvel."));
        assert!(!m.is_leaky("A bottle of water."));
        assert!(!m.is_leaky("Glasses of material near a bottle."));
        assert!(m.is_leaky("GLASS? Bottle; MATERIAL."));
    }

    #[test]
    fn document_filtering_and_stats() {
        let idx = MatchIndex::build(&ts(&[("bottle", "material", "glass")])).unwrap();
        let mut m = idx.matcher();
        let mut stats = FilterStats::new(1);
        let doc = "A bottle of water.\n\nA bottle made of glass is a material marvel.\n\nEnd  here.";
        let out = filter_document(doc, &mut m, &WhitespaceTokens, &mut stats).unwrap();
        assert_eq!(out, "A bottle of water.\n\nEnd  here.");
        assert_eq!(stats.paragraphs_in, 3);
        assert_eq!(stats.paragraphs_removed, 1);
        assert_eq!(stats.tokens_in - stats.tokens_out, 9);
        assert_eq!(stats.per_triple_hits, vec![1]);

        let mut empty = FilterStats::new(1);
        assert_eq!(filter_document("", &mut m, &WhitespaceTokens, &mut empty), None);
        assert_eq!(empty, FilterStats::new(1));
    }

    #[test]
    fn stats_merge_is_associative() {
        let a = FilterStats { paragraphs_in: 1, paragraphs_removed: 1, tokens_in: 5, tokens_out: 0, per_triple_hits: vec![1, 0] };
        let b = FilterStats { paragraphs_in: 2, paragraphs_removed: 0, tokens_in: 3, tokens_out: 3, per_triple_hits: vec![0, 0] };
        let c = FilterStats { paragraphs_in: 4, paragraphs_removed: 2, tokens_in: 9, tokens_out: 4, per_triple_hits: vec![1, 2] };
        let mut left = a.clone();
        left.merge(&b);
        left.merge(&c);
        let mut bc = b.clone();
        bc.merge(&c);
        let mut right = a.clone();
        right.merge(&bc);
        assert_eq!(left, right);
    }
}
