#include "maui/store.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "maui/rng.hpp"
#include "maui/util.hpp"

namespace maui {

namespace {

using nlohmann::json;

double vector_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void check_vector(const DocumentEmbedding& doc, std::size_t dimension) {
  if (doc.vector.size() != dimension) {
    throw DataError("document " + doc.author_id + "/" + doc.doc_id +
                    ": dimension " + num_to_string(std::uint64_t(doc.vector.size())) +
                    " != " + num_to_string(std::uint64_t(dimension)));
  }
  for (double x : doc.vector) {
    if (!std::isfinite(x)) {
      throw DataError("document " + doc.author_id + "/" + doc.doc_id +
                      ": non-finite component");
    }
  }
}

void append_le64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}

}  // namespace

EmbeddingStore EmbeddingStore::from_documents(std::vector<DocumentEmbedding> docs) {
  if (docs.empty()) throw DataError("store: no documents");
  const std::size_t dimension = docs.front().vector.size();
  if (dimension < 2) throw DataError("store: dimension must be at least 2");

  EmbeddingStore store;
  store.dimension_ = dimension;
  store.document_count_ = docs.size();

  for (auto& doc : docs) {
    check_vector(doc, dimension);
    const double norm = vector_norm(doc.vector);
    if (norm < 1e-12) {
      throw DataError("document " + doc.author_id + "/" + doc.doc_id +
                      ": zero vector");
    }
    // Leave already-unit vectors untouched so persisted values survive a
    // round trip bit-for-bit.
    if (std::fabs(norm - 1.0) > 1e-6) {
      for (double& x : doc.vector) x /= norm;
    }
    auto [it, inserted] =
        store.index_.try_emplace(doc.author_id, store.authors_.size());
    if (inserted) {
      store.authors_.push_back(AuthorDocs{doc.author_id, {}, {}, {}, {}});
    }
    AuthorDocs& author = store.authors_[it->second];
    if (std::find(author.doc_ids.begin(), author.doc_ids.end(), doc.doc_id) !=
        author.doc_ids.end()) {
      throw DataError("duplicate document " + doc.author_id + "/" + doc.doc_id);
    }
    author.doc_ids.push_back(std::move(doc.doc_id));
    author.vectors.push_back(std::move(doc.vector));
  }

  std::sort(store.authors_.begin(), store.authors_.end(),
            [](const AuthorDocs& a, const AuthorDocs& b) {
              return a.author_id < b.author_id;
            });
  for (std::size_t i = 0; i < store.authors_.size(); ++i) {
    store.index_[store.authors_[i].author_id] = i;
  }
  return store;
}

bool EmbeddingStore::has_author(std::string_view id) const {
  return index_.find(id) != index_.end();
}

std::size_t EmbeddingStore::author_index(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw DataError("unknown author " + std::string(id));
  return it->second;
}

const AuthorDocs& EmbeddingStore::author(std::string_view id) const {
  return authors_[author_index(id)];
}

std::vector<std::string> EmbeddingStore::author_ids() const {
  std::vector<std::string> out;
  out.reserve(authors_.size());
  for (const auto& a : authors_) out.push_back(a.author_id);
  return out;
}

std::vector<std::string> EmbeddingStore::eligible_query_authors(
    std::size_t min_docs) const {
  if (!split_) throw DataError("store has no haystack/query split");
  std::vector<std::string> out;
  for (const auto& a : authors_) {
    if (a.query.size() >= std::max<std::size_t>(min_docs, 1)) {
      out.push_back(a.author_id);
    }
  }
  return out;
}

EmbeddingStore EmbeddingStore::with_split(
    const std::vector<std::pair<std::vector<std::size_t>,
                                std::vector<std::size_t>>>& splits) const {
  if (splits.size() != authors_.size()) {
    throw ConfigError("split table size does not match author count");
  }
  EmbeddingStore out = *this;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    AuthorDocs& author = out.authors_[i];
    const auto& [haystack, query] = splits[i];
    if (haystack.empty()) {
      throw DataError("author " + author.author_id + ": empty haystack split");
    }
    std::vector<char> seen(author.vectors.size(), 0);
    auto take = [&](const std::vector<std::size_t>& idx) {
      for (std::size_t d : idx) {
        if (d >= author.vectors.size()) {
          throw DataError("author " + author.author_id +
                          ": split index out of range");
        }
        if (seen[d]) {
          throw DataError("author " + author.author_id +
                          ": split lists overlap");
        }
        seen[d] = 1;
      }
    };
    take(haystack);
    take(query);
    author.haystack = haystack;
    author.query = query;
  }
  out.split_ = true;
  return out;
}

std::uint64_t EmbeddingStore::checksum() const {
  std::string buf;
  append_le64(buf, dimension_);
  std::uint64_t h = fnv1a(buf);
  for (const auto& author : authors_) {
    h = fnv1a(author.author_id, h);
    h = fnv1a(std::string_view("\0", 1), h);
    for (std::size_t i = 0; i < author.doc_ids.size(); ++i) {
      h = fnv1a(author.doc_ids[i], h);
      h = fnv1a(std::string_view("\0", 1), h);
      std::string bits;
      bits.reserve(author.vectors[i].size() * 8);
      for (double x : author.vectors[i]) {
        append_le64(bits, std::bit_cast<std::uint64_t>(x));
      }
      h = fnv1a(bits, h);
    }
  }
  return h;
}

namespace {

std::vector<double> parse_vector_field(const json& rec, const std::string& where) {
  const auto it = rec.find("vector");
  if (it == rec.end() || !it->is_array()) {
    throw DataError(where + ": missing or non-array \"vector\"");
  }
  std::vector<double> v;
  v.reserve(it->size());
  for (const auto& x : *it) {
    if (!x.is_number()) throw DataError(where + ": non-numeric vector entry");
    v.push_back(x.get<double>());
  }
  return v;
}

std::string parse_string_field(const json& rec, const char* key,
                               const std::string& where) {
  const auto it = rec.find(key);
  if (it == rec.end() || !it->is_string()) {
    throw DataError(where + ": missing or non-string \"" + key + "\"");
  }
  return it->get<std::string>();
}

EmbeddingStore load_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::vector<DocumentEmbedding> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path + ":" + num_to_string(std::uint64_t(line_no));
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!rec.is_object()) throw DataError(where + ": record is not an object");
    docs.push_back(DocumentEmbedding{parse_string_field(rec, "author_id", where),
                                     parse_string_field(rec, "doc_id", where),
                                     parse_vector_field(rec, where)});
  }
  if (docs.empty()) throw DataError(path + ": no records");
  return EmbeddingStore::from_documents(std::move(docs));
}

std::filesystem::path raw_path_for(const std::filesystem::path& manifest,
                                   const std::string& data_name) {
  return manifest.parent_path() / data_name;
}

EmbeddingStore load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  if (!manifest.is_object()) throw DataError(path + ": manifest is not an object");
  for (const char* key : {"dimension", "count", "dtype", "data", "records"}) {
    if (!manifest.contains(key)) {
      throw DataError(path + ": manifest missing \"" + std::string(key) + "\"");
    }
  }
  if (!manifest["dtype"].is_string() ||
      manifest["dtype"].get<std::string>() != "f32") {
    throw DataError(path + ": unsupported dtype");
  }
  if (!manifest["dimension"].is_number_unsigned() ||
      !manifest["count"].is_number_unsigned()) {
    throw DataError(path + ": dimension/count must be non-negative integers");
  }
  const std::size_t dimension = manifest["dimension"].get<std::size_t>();
  const std::size_t count = manifest["count"].get<std::size_t>();
  if (!manifest["records"].is_array() || manifest["records"].size() != count) {
    throw DataError(path + ": records length does not match count");
  }
  if (!manifest["data"].is_string()) {
    throw DataError(path + ": \"data\" must be a file name");
  }

  const auto raw_path =
      raw_path_for(path, manifest["data"].get<std::string>());
  std::ifstream raw(raw_path, std::ios::binary);
  if (!raw) throw DataError("cannot open " + raw_path.string());
  std::string bytes((std::istreambuf_iterator<char>(raw)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() != count * dimension * 4) {
    throw DataError(raw_path.string() + ": size " +
                    num_to_string(std::uint64_t(bytes.size())) +
                    " does not match count*dimension*4");
  }

  std::vector<DocumentEmbedding> docs;
  docs.reserve(count);
  const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t r = 0; r < count; ++r) {
    const json& rec = manifest["records"][r];
    const std::string where = path + " record " + num_to_string(std::uint64_t(r));
    if (!rec.is_object()) throw DataError(where + ": not an object");
    DocumentEmbedding doc;
    doc.author_id = parse_string_field(rec, "author_id", where);
    doc.doc_id = parse_string_field(rec, "doc_id", where);
    doc.vector.resize(dimension);
    for (std::size_t c = 0; c < dimension; ++c) {
      std::uint32_t u = 0;
      for (int b = 0; b < 4; ++b) {
        u |= std::uint32_t(p[(r * dimension + c) * 4 + b]) << (8 * b);
      }
      doc.vector[c] = double(std::bit_cast<float>(u));
    }
    docs.push_back(std::move(doc));
  }
  return EmbeddingStore::from_documents(std::move(docs));
}

void write_jsonl(const EmbeddingStore& store, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  for (const auto& author : store.authors()) {
    for (std::size_t i = 0; i < author.doc_ids.size(); ++i) {
      json rec;
      rec["author_id"] = author.author_id;
      rec["doc_id"] = author.doc_ids[i];
      rec["vector"] = author.vectors[i];
      out << rec.dump() << '\n';
    }
  }
  if (!out) throw DataError("write failed for " + path);
}

void write_binary(const EmbeddingStore& store, const std::string& path) {
  std::filesystem::path manifest_path(path);
  if (manifest_path.extension() == ".f32") {
    throw ConfigError("binary manifest path must not end in .f32");
  }
  std::filesystem::path raw_rel = manifest_path.filename();
  raw_rel.replace_extension(".f32");

  json manifest;
  manifest["dimension"] = store.dimension();
  manifest["count"] = store.document_count();
  manifest["dtype"] = "f32";
  manifest["data"] = raw_rel.string();
  json records = json::array();
  std::string bytes;
  bytes.reserve(store.document_count() * store.dimension() * 4);
  for (const auto& author : store.authors()) {
    for (std::size_t i = 0; i < author.doc_ids.size(); ++i) {
      records.push_back(
          {{"author_id", author.author_id}, {"doc_id", author.doc_ids[i]}});
      for (double x : author.vectors[i]) {
        const std::uint32_t u = std::bit_cast<std::uint32_t>(float(x));
        for (int b = 0; b < 4; ++b) {
          bytes.push_back(char((u >> (8 * b)) & 0xff));
        }
      }
    }
  }
  manifest["records"] = std::move(records);

  std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << manifest.dump(2) << '\n';
  if (!out) throw DataError("write failed for " + path);

  const auto raw_abs = manifest_path.parent_path() / raw_rel;
  std::ofstream rawout(raw_abs, std::ios::binary | std::ios::trunc);
  if (!rawout) throw DataError("cannot write " + raw_abs.string());
  rawout.write(bytes.data(), std::streamsize(bytes.size()));
  if (!rawout) throw DataError("write failed for " + raw_abs.string());
}

}  // namespace

EmbeddingStore load_store(const std::string& path, StoreFormat format) {
  switch (format) {
    case StoreFormat::kJsonl:
      return load_jsonl(path);
    case StoreFormat::kBinary:
      return load_binary(path);
  }
  throw ConfigError("unknown store format");
}

void write_store(const EmbeddingStore& store, const std::string& path,
                 StoreFormat format) {
  switch (format) {
    case StoreFormat::kJsonl:
      write_jsonl(store, path);
      return;
    case StoreFormat::kBinary:
      write_binary(store, path);
      return;
  }
  throw ConfigError("unknown store format");
}

SplitResult split_documents(const EmbeddingStore& store,
                            std::size_t haystack_docs,
                            std::size_t query_docs, std::uint64_t seed) {
  if (haystack_docs < 1) throw ConfigError("haystack_docs must be at least 1");

  std::vector<DocumentEmbedding> kept;
  std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>>
      splits;
  std::vector<std::string> dropped;

  for (const auto& author : store.authors()) {
    if (author.doc_ids.size() < haystack_docs + query_docs) {
      dropped.push_back(author.author_id);
      continue;
    }
    // Per-author stream keyed on the id: the assignment for one author
    // never depends on which other authors are present.
    Rng rng(mix_seed(seed, fnv1a(author.author_id)));
    auto picked = rng.sample_indices(author.doc_ids.size(),
                                     haystack_docs + query_docs);
    std::vector<std::size_t> h(picked.begin(), picked.begin() + haystack_docs);
    std::vector<std::size_t> q(picked.begin() + haystack_docs, picked.end());
    std::sort(h.begin(), h.end());
    std::sort(q.begin(), q.end());
    for (std::size_t i = 0; i < author.doc_ids.size(); ++i) {
      kept.push_back(DocumentEmbedding{author.author_id, author.doc_ids[i],
                                       author.vectors[i]});
    }
    splits.emplace_back(std::move(h), std::move(q));
  }

  if (kept.empty()) {
    throw DataError("split leaves no authors (every author has fewer than " +
                    num_to_string(std::uint64_t(haystack_docs + query_docs)) +
                    " documents)");
  }
  auto rebuilt = EmbeddingStore::from_documents(std::move(kept));
  SplitResult result{rebuilt.with_split(splits), std::move(dropped)};
  return result;
}

std::vector<double> aggregate_author(
    std::span<const std::vector<double>> vectors) {
  if (vectors.empty()) throw DataError("aggregate over zero documents");
  const std::size_t dimension = vectors.front().size();
  std::vector<double> mean(dimension, 0.0);
  for (const auto& v : vectors) {
    if (v.size() != dimension) {
      throw DataError("aggregate over mixed dimensions");
    }
    for (std::size_t i = 0; i < dimension; ++i) mean[i] += v[i];
  }
  for (double& x : mean) x /= double(vectors.size());
  const double norm = vector_norm(mean);
  if (norm < 1e-12) {
    throw DataError("degenerate aggregate: documents cancel to zero mean");
  }
  for (double& x : mean) x /= norm;
  return mean;
}

std::vector<AuthorEmbedding> build_haystack(const EmbeddingStore& store) {
  if (!store.split()) throw DataError("store has no haystack/query split");
  std::vector<AuthorEmbedding> out;
  out.reserve(store.author_count());
  for (const auto& author : store.authors()) {
    std::vector<std::vector<double>> docs;
    docs.reserve(author.haystack.size());
    for (std::size_t i : author.haystack) docs.push_back(author.vectors[i]);
    out.push_back(AuthorEmbedding{author.author_id, aggregate_author(docs)});
  }
  return out;
}

std::vector<Query> sample_queries(const EmbeddingStore& store,
                                  const std::vector<std::string>& author_ids,
                                  std::size_t queries_per_author,
                                  std::size_t docs_per_query,
                                  std::uint64_t seed) {
  if (!store.split()) throw DataError("store has no haystack/query split");
  if (queries_per_author < 1) {
    throw ConfigError("queries_per_author must be at least 1");
  }
  if (docs_per_query == kAllQueryDocs && queries_per_author != 1) {
    throw ConfigError(
        "aggregating all query docs implies one query per author");
  }

  std::vector<Query> out;
  out.reserve(author_ids.size() * queries_per_author);
  for (const auto& id : author_ids) {
    const AuthorDocs& author = store.author(id);
    if (author.query.empty()) {
      throw DataError("author " + id + ": no query-split documents");
    }
    Rng rng(mix_seed(seed, fnv1a(id)));
    for (std::size_t q = 0; q < queries_per_author; ++q) {
      std::vector<std::vector<double>> docs;
      if (docs_per_query == kAllQueryDocs) {
        for (std::size_t i : author.query) docs.push_back(author.vectors[i]);
      } else {
        if (author.query.size() < docs_per_query) {
          throw DataError("author " + id + ": only " +
                          num_to_string(std::uint64_t(author.query.size())) +
                          " query docs, need " +
                          num_to_string(std::uint64_t(docs_per_query)));
        }
        auto picked = rng.sample_indices(author.query.size(), docs_per_query);
        std::sort(picked.begin(), picked.end());
        for (std::size_t i : picked) {
          docs.push_back(author.vectors[author.query[i]]);
        }
      }
      out.push_back(Query{id, id + "#q" + num_to_string(std::uint64_t(q)),
                          aggregate_author(docs)});
    }
  }
  return out;
}

}  // namespace maui
