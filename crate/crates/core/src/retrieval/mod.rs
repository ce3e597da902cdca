//! Demonstration retrieval over train-split passages.
//!
//! Each train food becomes a passage `Food: {name}. Molecules: {...}.`.
//! [`Bm25Index`] ranks passages lexically; [`DenseRetriever`] ranks them by
//! embeddings from an external service. Both implement [`DemoRetriever`].

mod bm25;
mod corpus;
mod dense;
mod tokenize;

pub use bm25::{Bm25Index, Bm25Params, IndexError, Posting, ScoredPassage, INDEX_FORMAT, INDEX_VERSION};
pub use corpus::{build_corpus, mfp_query, mpc_query, passage_text, Passage};
pub use dense::{
    embed_retrieve, DenseError, DenseIndex, DenseRetriever, EmbeddingConfig, EmbeddingService, HttpEmbeddingService,
};
pub use tokenize::tokenize;

/// Default number of demonstrations per prompt.
pub const DEFAULT_K: usize = 3;

/// Source of ranked demonstrations for prompt assembly.
pub trait DemoRetriever: Send + Sync {
    fn name(&self) -> &'static str;
    fn top_k(&self, query: &str, k: usize) -> Result<Vec<ScoredPassage>, DenseError>;
}

impl DemoRetriever for Bm25Index {
    fn name(&self) -> &'static str {
        "bm25"
    }

    fn top_k(&self, query: &str, k: usize) -> Result<Vec<ScoredPassage>, DenseError> {
        Ok(self.retrieve(query, k))
    }
}

impl DemoRetriever for DenseRetriever {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn top_k(&self, query: &str, k: usize) -> Result<Vec<ScoredPassage>, DenseError> {
        self.index.retrieve(self.service.as_ref(), query, k)
    }
}
