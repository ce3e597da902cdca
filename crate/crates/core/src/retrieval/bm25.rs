use super::corpus::Passage;
use super::tokenize::tokenize;
use crate::dataset::FoodId;
use crate::fsutil;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader};
use std::path::Path;

pub const INDEX_FORMAT: &str = "flavorbench-bm25";
pub const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("cannot build an index over an empty corpus")]
    EmptyCorpus,
    #[error("invalid BM25 parameters k1={k1}, b={b} (need k1 > 0 and 0 <= b <= 1)")]
    InvalidParams { k1: f64, b: f64 },
    #[error("passage {0} appears more than once")]
    DuplicatePassage(FoodId),
    #[error("index file {path}: {message}")]
    Format { path: String, message: String },
    #[error("index file {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// A passage with its retrieval score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPassage {
    pub food_id: FoodId,
    pub text: String,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub food_id: FoodId,
    pub tf: u32,
}

/// Okapi BM25 inverted index over demonstration passages.
#[derive(Debug, Clone, PartialEq)]
pub struct Bm25Index {
    params: Bm25Params,
    /// Sorted by food id.
    passages: Vec<Passage>,
    lengths: Vec<u32>,
    avg_len: f64,
    /// Postings hold passage positions, ascending.
    postings: BTreeMap<String, Vec<(u32, u32)>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    format: String,
    version: u32,
    k1: f64,
    b: f64,
    documents: usize,
    corpus_hash: String,
}

impl Bm25Index {
    pub fn build(corpus: &[Passage], params: Bm25Params) -> Result<Self, IndexError> {
        if corpus.is_empty() {
            return Err(IndexError::EmptyCorpus);
        }
        if !(params.k1 > 0.0 && (0.0..=1.0).contains(&params.b)) {
            return Err(IndexError::InvalidParams { k1: params.k1, b: params.b });
        }
        let mut passages = corpus.to_vec();
        passages.sort();
        if let Some(w) = passages.windows(2).find(|w| w[0].food_id == w[1].food_id) {
            return Err(IndexError::DuplicatePassage(w[0].food_id));
        }
        let mut lengths = Vec::with_capacity(passages.len());
        let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
        for (pos, p) in passages.iter().enumerate() {
            let tokens = tokenize(&p.text);
            lengths.push(tokens.len() as u32);
            let mut tf: BTreeMap<String, u32> = BTreeMap::new();
            for t in tokens {
                *tf.entry(t).or_insert(0) += 1;
            }
            for (t, n) in tf {
                postings.entry(t).or_default().push((pos as u32, n));
            }
        }
        let avg_len = lengths.iter().map(|&l| l as f64).sum::<f64>() / lengths.len() as f64;
        Ok(Self { params, passages, lengths, avg_len, postings })
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn average_length(&self) -> f64 {
        self.avg_len
    }

    pub fn document_frequency(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    /// Postings for `term`, ascending by food id.
    pub fn postings(&self, term: &str) -> Vec<Posting> {
        self.postings
            .get(term)
            .map(|ps| {
                ps.iter().map(|&(pos, tf)| Posting { food_id: self.passages[pos as usize].food_id, tf }).collect()
            })
            .unwrap_or_default()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.passages.len() as f64;
        let df = self.document_frequency(term) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// Top `k` passages sharing at least one term with `query`, by
    /// descending score then ascending food id. Repeated query terms count once.
    pub fn retrieve(&self, query: &str, k: usize) -> Vec<ScoredPassage> {
        let mut seen = BTreeSet::new();
        let mut scores: BTreeMap<u32, f64> = BTreeMap::new();
        let Bm25Params { k1, b } = self.params;
        for term in tokenize(query) {
            if !seen.insert(term.clone()) {
                continue;
            }
            let Some(list) = self.postings.get(&term) else { continue };
            let idf = self.idf(&term);
            for &(pos, tf) in list {
                let tf = tf as f64;
                let dl = self.lengths[pos as usize] as f64;
                let s = idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / self.avg_len));
                *scores.entry(pos).or_insert(0.0) += s;
            }
        }
        let mut ranked: Vec<(u32, f64)> = scores.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked
            .into_iter()
            .take(k)
            .map(|(pos, score)| {
                let p = &self.passages[pos as usize];
                ScoredPassage { food_id: p.food_id, text: p.text.clone(), score }
            })
            .collect()
    }

    /// SHA-256 over the sorted passages.
    pub fn corpus_hash(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.passages {
            h.update(p.food_id.to_string().as_bytes());
            h.update([0]);
            h.update(p.text.as_bytes());
            h.update([b'\n']);
        }
        crate::dataset::hex_digest(&h.finalize())
    }

    /// Header line then one passage per line. Postings are rebuilt on load.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = Header {
            format: INDEX_FORMAT.to_string(),
            version: INDEX_VERSION,
            k1: self.params.k1,
            b: self.params.b,
            documents: self.passages.len(),
            corpus_hash: self.corpus_hash(),
        };
        let mut out = fsutil::to_jsonl([&header]).expect("header serializes");
        out.extend(fsutil::to_jsonl(&self.passages).expect("passages serialize"));
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        fsutil::write_atomic(path, &self.to_bytes())
            .map_err(|source| IndexError::Io { path: path.display().to_string(), source })
    }

    pub fn load(path: &Path) -> Result<Self, IndexError> {
        let display = path.display().to_string();
        let format_err = |message: String| IndexError::Format { path: display.clone(), message };
        let file = std::fs::File::open(path).map_err(|source| IndexError::Io { path: display.clone(), source })?;
        let mut lines = BufReader::new(file).lines();
        let first = lines
            .next()
            .ok_or_else(|| format_err("empty file".into()))?
            .map_err(|source| IndexError::Io { path: display.clone(), source })?;
        let header: Header = serde_json::from_str(&first).map_err(|e| format_err(format!("header: {e}")))?;
        if header.format != INDEX_FORMAT || header.version != INDEX_VERSION {
            return Err(format_err(format!("unsupported format {} v{}", header.format, header.version)));
        }
        let mut passages = Vec::with_capacity(header.documents);
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|source| IndexError::Io { path: display.clone(), source })?;
            if line.trim().is_empty() {
                continue;
            }
            let p: Passage = serde_json::from_str(&line).map_err(|e| format_err(format!("line {}: {e}", i + 2)))?;
            passages.push(p);
        }
        if passages.len() != header.documents {
            return Err(format_err(format!("header says {} documents, found {}", header.documents, passages.len())));
        }
        let index = Self::build(&passages, Bm25Params { k1: header.k1, b: header.b })?;
        if index.corpus_hash() != header.corpus_hash {
            return Err(format_err("corpus hash mismatch".into()));
        }
        Ok(index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(id: FoodId, text: &str) -> Passage {
        Passage { food_id: id, text: text.to_string() }
    }

    #[test]
    fn single_passage() {
        let idx = Bm25Index::build(&[p(1, "Food: Apple. Molecules: Hexanal, Ethyl acetate.")], Bm25Params::default())
            .unwrap();
        assert!(idx.terms().all(|t| idx.document_frequency(t) == 1));
        let hits = idx.retrieve("Food: Apple. Molecules: Hexanal, Ethyl acetate.", 3);
        assert_eq!(hits.len(), 1);
        assert!(hits[0].score > 0.0);
        assert!(idx.retrieve("vanillin", 3).is_empty());
    }

    #[test]
    fn build_errors() {
        assert!(matches!(Bm25Index::build(&[], Bm25Params::default()), Err(IndexError::EmptyCorpus)));
        let bad = Bm25Params { k1: 0.0, b: 0.75 };
        assert!(matches!(Bm25Index::build(&[p(1, "a")], bad), Err(IndexError::InvalidParams { .. })));
        let dup = [p(1, "a"), p(1, "b")];
        assert!(matches!(Bm25Index::build(&dup, Bm25Params::default()), Err(IndexError::DuplicatePassage(1))));
    }

    #[test]
    fn ties_break_by_id_and_postings_sorted() {
        let idx = Bm25Index::build(&[p(9, "x y"), p(2, "x y"), p(5, "z")], Bm25Params::default()).unwrap();
        let hits = idx.retrieve("x", 10);
        assert_eq!(hits.iter().map(|h| h.food_id).collect::<Vec<_>>(), [2, 9]);
        assert_eq!(hits[0].score, hits[1].score);
        assert_eq!(idx.postings("x").iter().map(|p| p.food_id).collect::<Vec<_>>(), [2, 9]);
        assert!((idx.average_length() - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn file_round_trip() {
        let idx =
            Bm25Index::build(&[p(1, "alpha beta"), p(2, "beta gamma gamma")], Bm25Params { k1: 1.5, b: 0.6 }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("index.jsonl");
        idx.save(&path).unwrap();
        let back = Bm25Index::load(&path).unwrap();
        assert_eq!(back, idx);
        assert_eq!(back.retrieve("gamma beta", 2), idx.retrieve("gamma beta", 2));
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("gamma gamma", "gamma")).unwrap();
        assert!(matches!(Bm25Index::load(&path), Err(IndexError::Format { .. })));
    }
}
