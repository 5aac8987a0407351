#pragma once

// Embedding storage (NFTE files), an exact cosine top-k index, and the
// neighbor-price coherence statistics built on it.
//
// NFTE layout, little-endian:
//   "NFTE" | version u32 = 1 | count u64 | dim u64
//   count x ( id_len u16 | id bytes (UTF-8) | dim x f32 )

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "nftf/analytics.hpp"
#include "nftf/parallel.hpp"
#include "nftf/types.hpp"

namespace nftf {

struct EmbeddingError : std::runtime_error {
  EmbeddingError(std::string kind_, const std::string& detail)
      : std::runtime_error(kind_ + ": " + detail), kind(std::move(kind_)) {}
  std::string kind;  // bad-magic, bad-version, truncated, duplicate-id, zero-vector, dim-mismatch, ...
};

struct EmbeddingSet {
  std::uint64_t dim = 0;
  std::vector<TokenId> ids;   // file order
  std::vector<float> values;  // ids.size() x dim, row-major

  std::size_t size() const { return ids.size(); }
  const float* row(std::size_t i) const { return values.data() + i * dim; }

  void add(TokenId id, const std::vector<float>& v) {
    if (v.size() != dim) throw EmbeddingError("dim-mismatch", id.str() + " has " + std::to_string(v.size()) + " values");
    ids.push_back(std::move(id));
    values.insert(values.end(), v.begin(), v.end());
  }
};

namespace detail {

static_assert(std::endian::native == std::endian::little, "NFTE I/O assumes a little-endian host");

template <typename T>
void put_le(std::ostream& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.write(buf, sizeof(T));
}

class ByteReader {
 public:
  explicit ByteReader(std::string bytes) : bytes_(std::move(bytes)) {}

  template <typename T>
  T take(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string take_string(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void take_floats(float* out, std::size_t n, const char* what) {
    need(n * sizeof(float), what);
    std::memcpy(out, bytes_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw EmbeddingError("truncated", std::string("file ends inside ") + what);
  }

  std::string bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline void write_embeddings(std::ostream& out, const EmbeddingSet& set) {
  out.write("NFTE", 4);
  detail::put_le<std::uint32_t>(out, 1);
  detail::put_le<std::uint64_t>(out, set.size());
  detail::put_le<std::uint64_t>(out, set.dim);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& id = set.ids[i].str();
    if (id.size() > 0xFFFF) throw EmbeddingError("id-too-long", id.substr(0, 32));
    detail::put_le<std::uint16_t>(out, std::uint16_t(id.size()));
    out.write(id.data(), std::streamsize(id.size()));
    out.write(reinterpret_cast<const char*>(set.row(i)), std::streamsize(set.dim * sizeof(float)));
  }
}

inline void write_embeddings(const std::string& path, const EmbeddingSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_embeddings(out, set);
}

/// Reads and validates an NFTE stream. When `expected_dim` is given the
/// header must match it.
inline EmbeddingSet read_embeddings(std::istream& in, std::optional<std::uint64_t> expected_dim = std::nullopt) {
  detail::ByteReader r(std::string(std::istreambuf_iterator<char>(in), {}));
  if (r.take_string(4, "magic") != "NFTE") throw EmbeddingError("bad-magic", "expected \"NFTE\"");
  const auto version = r.take<std::uint32_t>("version");
  if (version != 1) throw EmbeddingError("bad-version", "unsupported version " + std::to_string(version));
  const auto count = r.take<std::uint64_t>("count");
  const auto dim = r.take<std::uint64_t>("dim");
  if (dim == 0) throw EmbeddingError("dim-mismatch", "dim must be positive");
  if (expected_dim && dim != *expected_dim)
    throw EmbeddingError("dim-mismatch", "file dim " + std::to_string(dim) + ", expected " + std::to_string(*expected_dim));
  // each record needs at least 2 + 4*dim bytes
  if (count > r.remaining() / (2 + 4 * dim)) throw EmbeddingError("truncated", "count exceeds file size");

  EmbeddingSet set;
  set.dim = dim;
  set.ids.reserve(count);
  set.values.resize(count * dim);
  std::set<std::string> seen;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = r.take<std::uint16_t>("record id length");
    std::string id = r.take_string(len, "record id");
    if (id.empty()) throw EmbeddingError("bad-id", "record " + std::to_string(i) + " has an empty id");
    if (!seen.insert(id).second) throw EmbeddingError("duplicate-id", id);
    float* row = set.values.data() + i * dim;
    r.take_floats(row, dim, "record vector");
    double norm2 = 0;
    for (std::uint64_t d = 0; d < dim; ++d) {
      if (!std::isfinite(row[d])) throw EmbeddingError("non-finite", id);
      norm2 += double(row[d]) * double(row[d]);
    }
    if (norm2 == 0) throw EmbeddingError("zero-vector", id);
    try {
      set.ids.push_back(TokenId::parse(id));
    } catch (const FormatError& e) {
      throw EmbeddingError("bad-id", e.what());
    }
  }
  if (r.remaining() != 0) throw EmbeddingError("trailing-data", std::to_string(r.remaining()) + " bytes after last record");
  return set;
}

inline EmbeddingSet load_embeddings(const std::string& path, std::optional<std::uint64_t> expected_dim = std::nullopt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_embeddings(in, expected_dim);
}

// ---------------------------------------------------------------------------
// Index

/// Exact flat cosine index: unit-normalized rows, dot products accumulated
/// in double.
class SimIndex {
 public:
  explicit SimIndex(const EmbeddingSet& set) : dim_(set.dim), ids_(set.ids), unit_(set.values.size()) {
    if (set.size() == 0) throw std::invalid_argument("build_index: empty embedding set");
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (!position_.emplace(ids_[i], i).second) throw EmbeddingError("duplicate-id", ids_[i].str());
      normalize(set.row(i), unit_.data() + i * dim_, ids_[i].str());
    }
  }

  std::uint64_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<TokenId>& ids() const { return ids_; }
  const float* unit_row(std::size_t i) const { return unit_.data() + i * dim_; }

  std::optional<std::size_t> position(const TokenId& id) const {
    const auto it = position_.find(id);
    if (it == position_.end()) return std::nullopt;
    return it->second;
  }

  /// Cosine similarity between two indexed rows.
  double similarity(std::size_t a, std::size_t b) const { return dot(unit_row(a), unit_row(b)); }

  double dot(const float* a, const float* b) const {
    double s = 0;
    for (std::uint64_t d = 0; d < dim_; ++d) s += double(a[d]) * double(b[d]);
    return s;
  }

  /// Unit-normalizes `v` (length dim) into float storage.
  std::vector<float> normalized(const std::vector<float>& v) const {
    if (v.size() != dim_)
      throw EmbeddingError("dim-mismatch", "query has " + std::to_string(v.size()) + " values, index has " + std::to_string(dim_));
    std::vector<float> out(dim_);
    normalize(v.data(), out.data(), "query");
    return out;
  }

 private:
  void normalize(const float* in, float* out, const std::string& what) const {
    double norm2 = 0;
    for (std::uint64_t d = 0; d < dim_; ++d) norm2 += double(in[d]) * double(in[d]);
    if (!(norm2 > 0) || !std::isfinite(norm2)) throw EmbeddingError("zero-vector", what);
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::uint64_t d = 0; d < dim_; ++d) out[d] = float(double(in[d]) * inv);
  }

  std::uint64_t dim_;
  std::vector<TokenId> ids_;
  std::vector<float> unit_;
  std::map<TokenId, std::size_t> position_;
};

inline SimIndex build_index(const EmbeddingSet& set) { return SimIndex(set); }

struct Neighbor {
  TokenId id;
  double similarity = 0;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct KnnResult {
  std::vector<Neighbor> neighbors;
  bool truncated = false;  // fewer than k items were available
};

namespace detail {

inline KnnResult top_k(const SimIndex& index, const float* unit_query, std::size_t k, std::optional<std::size_t> exclude) {
  if (k < 1) throw std::invalid_argument("query_knn: k must be >= 1");
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i)
    if (!exclude || *exclude != i) scored.emplace_back(index.dot(unit_query, index.unit_row(i)), i);
  const auto& ids = index.ids();
  auto better = [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return ids[a.second] < ids[b.second];
  };
  KnnResult out;
  out.truncated = k > scored.size();
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + std::ptrdiff_t(take), scored.end(), better);
  for (std::size_t i = 0; i < take; ++i) out.neighbors.push_back({ids[scored[i].second], scored[i].first});
  return out;
}

}  // namespace detail

/// Top-k items by cosine similarity to an indexed item, excluding itself.
/// Ties are broken by ascending id.
inline KnnResult query_knn(const SimIndex& index, const TokenId& query, std::size_t k) {
  const auto pos = index.position(query);
  if (!pos) throw std::invalid_argument("query_knn: unknown id '" + query.str() + "'");
  return detail::top_k(index, index.unit_row(*pos), k, pos);
}

/// Top-k items by cosine similarity to an arbitrary vector.
inline KnnResult query_knn(const SimIndex& index, const std::vector<float>& query, std::size_t k) {
  const auto unit = index.normalized(query);
  return detail::top_k(index, unit.data(), k, std::nullopt);
}

// ---------------------------------------------------------------------------
// Prices

using PriceMap = std::map<TokenId, EthAmount>;

/// "token_id,price_eth" rows; a header row with those names is optional.
inline PriceMap read_prices_csv(std::istream& in) {
  PriceMap out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line == "token_id,price_eth") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw FormatError("prices line " + std::to_string(lineno) + ": expected 'token_id,price_eth'");
    try {
      auto id = TokenId::parse(line.substr(0, comma));
      if (!out.emplace(id, EthAmount::parse(line.substr(comma + 1))).second)
        throw FormatError("duplicate token id '" + id.str() + "'");
    } catch (const FormatError& e) {
      throw FormatError("prices line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline void write_prices_csv(std::ostream& out, const PriceMap& prices) {
  out << "token_id,price_eth\n";
  for (const auto& [id, p] : prices) out << id.str() << ',' << p.to_string() << '\n';
}

/// Price of each NFT's first settled auction.
inline PriceMap first_settle_prices(const Ledger& ledger) {
  PriceMap out;
  for (const auto& [nft, h] : ledger.histories)
    for (const auto& a : reconstruct_auctions(h))
      if (a.settled) {
        out.emplace(nft, *a.settle_price);
        break;
      }
  return out;
}

// ---------------------------------------------------------------------------
// Coherence

inline const std::vector<int>& coherence_percentiles() {
  static const std::vector<int> p{50, 80, 90, 95, 99};
  return p;
}

/// Nearest-rank percentile of an ascending list: element ceil(p/100 * n).
template <typename T>
const T& nearest_rank(const std::vector<T>& sorted, int p) {
  if (sorted.empty()) throw std::invalid_argument("percentile of empty list");
  std::size_t rank = (std::size_t(p) * sorted.size() + 99) / 100;
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

struct CoherenceRow {
  TokenId id;
  EthAmount own_price;
  // exact values in attoether
  Rational neighbor_mean;
  Rational abs_gap;       // |own - neighbor_mean|
  Rational baseline_gap;  // |own - mean of all other indexed prices|
  bool within = false;
  bool baseline_within = false;
};

struct CoherenceStats {
  std::size_t k = 0;
  EthAmount threshold;
  bool truncated = false;  // some query had fewer than k neighbors
  std::vector<CoherenceRow> per_query;  // index order
  std::uint64_t within_count = 0;
  std::uint64_t baseline_within_count = 0;
  double fraction_within = 0;
  double baseline_fraction_within = 0;
  std::vector<std::pair<int, Rational>> gap_percentiles;
  std::vector<std::pair<int, Rational>> baseline_gap_percentiles;
};

inline constexpr std::size_t kDefaultNeighbors = 5;

inline CoherenceStats neighbor_price_report(const SimIndex& index, const PriceMap& prices, std::size_t k = kDefaultNeighbors,
                                            EthAmount threshold = EthAmount::from_eth(1)) {
  if (k < 1) throw std::invalid_argument("neighbor_price_report: k must be >= 1");
  if (index.size() < 2) throw std::invalid_argument("neighbor_price_report: need at least 2 indexed items");
  std::vector<EthAmount> own(index.size());
  u128 total = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto it = prices.find(index.ids()[i]);
    if (it == prices.end()) throw std::invalid_argument("neighbor_price_report: no price for '" + index.ids()[i].str() + "'");
    own[i] = it->second;
    total += it->second.atto;
  }

  CoherenceStats out;
  out.k = k;
  out.threshold = threshold;
  out.per_query.resize(index.size());
  std::vector<char> truncated(index.size(), 0);
  const Rational limit = Rational::of(threshold);
  const auto n_other = i128(index.size() - 1);
  parallel_for(index.size(), [&](std::size_t i) {
    const auto knn = query_knn(index, index.ids()[i], k);
    truncated[i] = knn.truncated;
    u128 sum = 0;
    for (const auto& nb : knn.neighbors) sum += prices.at(nb.id).atto;
    CoherenceRow row;
    row.id = index.ids()[i];
    row.own_price = own[i];
    row.neighbor_mean = Rational(i128(sum), i128(knn.neighbors.size()));
    row.abs_gap = abs(Rational::of(own[i]) - row.neighbor_mean);
    row.baseline_gap = abs(Rational::of(own[i]) - Rational(i128(total - own[i].atto), n_other));
    row.within = row.abs_gap <= limit;
    row.baseline_within = row.baseline_gap <= limit;
    out.per_query[i] = std::move(row);
  });

  std::vector<Rational> gaps, base;
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto& row = out.per_query[i];
    out.truncated = out.truncated || truncated[i];
    out.within_count += row.within;
    out.baseline_within_count += row.baseline_within;
    gaps.push_back(row.abs_gap);
    base.push_back(row.baseline_gap);
  }
  out.fraction_within = ratio(out.within_count, index.size());
  out.baseline_fraction_within = ratio(out.baseline_within_count, index.size());
  std::sort(gaps.begin(), gaps.end());
  std::sort(base.begin(), base.end());
  for (int p : coherence_percentiles()) {
    out.gap_percentiles.emplace_back(p, nearest_rank(gaps, p));
    out.baseline_gap_percentiles.emplace_back(p, nearest_rank(base, p));
  }
  return out;
}

struct PriceEstimate {
  Rational exact;   // attoether
  EthAmount price;  // floor of exact
  std::vector<Neighbor> neighbors;
  bool truncated = false;
};

/// Mean price of the k items most similar to `query`.
inline PriceEstimate estimate_price(const SimIndex& index, const PriceMap& prices, const std::vector<float>& query,
                                    std::size_t k = kDefaultNeighbors) {
  auto knn = query_knn(index, query, k);
  u128 sum = 0;
  for (const auto& nb : knn.neighbors) {
    const auto it = prices.find(nb.id);
    if (it == prices.end()) throw std::invalid_argument("estimate_price: no price for '" + nb.id.str() + "'");
    sum += it->second.atto;
  }
  PriceEstimate est;
  const auto n = u128(knn.neighbors.size());
  est.exact = Rational(i128(sum), i128(n));
  est.price = EthAmount::from_atto(sum / n);
  est.neighbors = std::move(knn.neighbors);
  est.truncated = knn.truncated;
  return est;
}

}  // namespace nftf
