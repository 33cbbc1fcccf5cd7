#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "maui/error.hpp"

namespace maui {

struct DocumentEmbedding {
  std::string author_id;
  std::string doc_id;
  std::vector<double> vector;
};

// One author's documents plus the haystack/query split, when assigned.
// `haystack` and `query` hold indices into `vectors`; docs outside both
// lists exist but take no part in a run.
struct AuthorDocs {
  std::string author_id;
  std::vector<std::string> doc_ids;
  std::vector<std::vector<double>> vectors;
  std::vector<std::size_t> haystack;
  std::vector<std::size_t> query;
};

enum class StoreFormat { kJsonl, kBinary };

// Validated population of per-document embeddings, authors sorted by id,
// every vector unit-norm. Construct through from_documents() or
// load_store(); split assignment only through with_split().
class EmbeddingStore {
 public:
  static EmbeddingStore from_documents(std::vector<DocumentEmbedding> docs);

  std::size_t dimension() const { return dimension_; }
  std::size_t author_count() const { return authors_.size(); }
  std::size_t document_count() const { return document_count_; }
  bool split() const { return split_; }
  const std::vector<AuthorDocs>& authors() const { return authors_; }

  bool has_author(std::string_view id) const;
  std::size_t author_index(std::string_view id) const;  // DataError if absent
  const AuthorDocs& author(std::string_view id) const;

  std::vector<std::string> author_ids() const;
  // Authors whose query split holds at least min_docs documents.
  std::vector<std::string> eligible_query_authors(std::size_t min_docs) const;

  // New store with per-author (haystack, query) document indices applied.
  // Lists must be disjoint, in range, duplicate-free; haystack nonempty.
  EmbeddingStore with_split(
      const std::vector<std::pair<std::vector<std::size_t>,
                                  std::vector<std::size_t>>>& splits) const;

  // Content hash over ids and exact vector bits; split state excluded.
  std::uint64_t checksum() const;

 private:
  EmbeddingStore() = default;

  std::size_t dimension_ = 0;
  std::size_t document_count_ = 0;
  bool split_ = false;
  std::vector<AuthorDocs> authors_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// JSONL: one object per line with keys author_id, doc_id, vector.
// Binary: JSON manifest (dimension/count/dtype/data/records) next to a raw
// little-endian float32 row-major file; persisted stores carry no split.
EmbeddingStore load_store(const std::string& path, StoreFormat format);
void write_store(const EmbeddingStore& store, const std::string& path,
                 StoreFormat format);

struct SplitResult {
  EmbeddingStore store;
  std::vector<std::string> dropped;  // authors with too few documents
};

// Randomly assigns haystack_docs + query_docs of each author's documents,
// per-author streams derived from seed so results do not depend on author
// order. Authors without enough documents are dropped and reported; an
// empty result store is a DataError.
SplitResult split_documents(const EmbeddingStore& store,
                            std::size_t haystack_docs,
                            std::size_t query_docs, std::uint64_t seed);

// Mean of unit vectors, renormalized. Near-zero mean (norm < 1e-12) is a
// DataError: opposed documents cancel and no direction is representable.
std::vector<double> aggregate_author(
    std::span<const std::vector<double>> vectors);

struct AuthorEmbedding {
  std::string author_id;
  std::vector<double> vector;
};

// One embedding per author from its haystack-split docs, sorted by id.
std::vector<AuthorEmbedding> build_haystack(const EmbeddingStore& store);

struct Query {
  std::string author_id;  // true author
  std::string query_id;
  std::vector<double> vector;
};

// docs_per_query value meaning "aggregate all of the author's query docs".
inline constexpr std::size_t kAllQueryDocs = 0;

// Builds queries_per_author queries per listed author by aggregating
// docs_per_query sampled query-split docs (kAllQueryDocs: single query
// over all of them, queries_per_author must be 1). Per-author streams
// derived from seed.
std::vector<Query> sample_queries(const EmbeddingStore& store,
                                  const std::vector<std::string>& author_ids,
                                  std::size_t queries_per_author,
                                  std::size_t docs_per_query,
                                  std::uint64_t seed);

}  // namespace maui
