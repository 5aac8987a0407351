#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "nftf/similarity.hpp"
#include "similarity_fixtures.hpp"

using namespace nftf;
using namespace nftf::test;

namespace {

EmbeddingSet make_set(std::uint64_t dim, std::vector<std::pair<std::string, std::vector<float>>> rows) {
  EmbeddingSet s;
  s.dim = dim;
  for (auto& [id, v] : rows) s.add(TokenId::parse(id), v);
  return s;
}

std::string nfte_bytes(const EmbeddingSet& s) {
  std::ostringstream out;
  write_embeddings(out, s);
  return out.str();
}

std::string read_error(const std::string& bytes) {
  std::istringstream in(bytes);
  try {
    read_embeddings(in);
  } catch (const EmbeddingError& e) {
    return e.kind;
  }
  return "ok";
}

}  // namespace

TEST(SimIndex, NormalizesRows) {
  const auto idx = build_index(make_set(2, {{"x", {3, 4}}}));
  EXPECT_FLOAT_EQ(idx.unit_row(0)[0], 0.6f);
  EXPECT_FLOAT_EQ(idx.unit_row(0)[1], 0.8f);
}

TEST(SimIndex, CosineOfDiagonal) {
  const auto idx = build_index(make_set(2, {{"x", {1, 0}}}));
  const auto r = query_knn(idx, std::vector<float>{1, 1}, 1);
  ASSERT_EQ(r.neighbors.size(), 1u);
  EXPECT_NEAR(r.neighbors[0].similarity, 0.7071, 1e-4);
}

TEST(SimIndex, TiesByAscendingId) {
  const auto idx = build_index(make_set(3, {{"b", {1, 0, 0}}, {"a", {0, 1, 0}}, {"c", {0, 0, 1}}}));
  const auto r = query_knn(idx, std::vector<float>{1, 1, 1}, 3);
  ASSERT_EQ(r.neighbors.size(), 3u);
  EXPECT_EQ(r.neighbors[0].id.str(), "a");
  EXPECT_EQ(r.neighbors[1].id.str(), "b");
  EXPECT_EQ(r.neighbors[2].id.str(), "c");
}

TEST(SimIndex, QueryByIdExcludesSelf) {
  const auto idx = build_index(make_set(2, {{"p", {1, 2}}, {"q", {1, 2}}, {"r", {-1, 0}}}));
  const auto r = query_knn(idx, TokenId::parse("p"), 5);
  ASSERT_EQ(r.neighbors.size(), 2u);
  EXPECT_TRUE(r.truncated);
  EXPECT_EQ(r.neighbors[0].id.str(), "q");
  EXPECT_NEAR(r.neighbors[0].similarity, 1.0, 1e-6);
  EXPECT_THROW(query_knn(idx, TokenId::parse("zz"), 1), std::invalid_argument);
  EXPECT_THROW(query_knn(idx, TokenId::parse("p"), 0), std::invalid_argument);
}

TEST(SimIndex, RejectsBadQueries) {
  const auto idx = build_index(make_set(2, {{"p", {1, 2}}}));
  try {
    query_knn(idx, std::vector<float>{0, 0}, 1);
    FAIL();
  } catch (const EmbeddingError& e) {
    EXPECT_EQ(e.kind, "zero-vector");
  }
  try {
    query_knn(idx, std::vector<float>{1, 2, 3}, 1);
    FAIL();
  } catch (const EmbeddingError& e) {
    EXPECT_EQ(e.kind, "dim-mismatch");
  }
}

TEST(SimIndex, MatchesBruteForce) {
  std::mt19937_64 rng(8);
  const auto set = random_embeddings(rng, 300, 16);
  const auto idx = build_index(set);
  for (std::size_t q = 0; q < 30; ++q) {
    EXPECT_EQ(check_knn(set, std::vector<float>(set.row(q), set.row(q) + 16), std::ptrdiff_t(q), 10,
                        query_knn(idx, set.ids[q], 10)),
              "");
  }
}

TEST(SimIndex, ScaleInvariant) {
  std::mt19937_64 rng(9);
  const auto set = random_embeddings(rng, 200, 8);
  const auto idx = build_index(set);
  std::vector<float> q(set.row(5), set.row(5) + 8);
  const auto base = query_knn(idx, q, 7);
  for (float s : {0.001f, 3.0f, 1000.0f}) {
    std::vector<float> scaled = q;
    for (auto& x : scaled) x *= s;
    const auto r = query_knn(idx, scaled, 7);
    ASSERT_EQ(r.neighbors.size(), base.neighbors.size());
    for (std::size_t i = 0; i < r.neighbors.size(); ++i) {
      EXPECT_EQ(r.neighbors[i].id, base.neighbors[i].id);
      EXPECT_NEAR(r.neighbors[i].similarity, base.neighbors[i].similarity, 1e-6);
    }
  }
}

TEST(Nfte, RoundTrip) {
  const auto set = make_set(3, {{"a", {1, 2, 3}}, {"bb", {-1.5f, 0, 1e-3f}}});
  std::istringstream in(nfte_bytes(set));
  const auto back = read_embeddings(in, 3);
  EXPECT_EQ(back.ids, set.ids);
  EXPECT_EQ(back.values, set.values);
  EXPECT_EQ(nfte_bytes(set).size(), 4 + 4 + 8 + 8 + (2 + 1 + 12) + (2 + 2 + 12));
}

TEST(Nfte, Errors) {
  const auto good = nfte_bytes(make_set(2, {{"a", {1, 2}}, {"b", {3, 4}}}));
  EXPECT_EQ(read_error(good), "ok");
  EXPECT_EQ(read_error("NFTX" + good.substr(4)), "bad-magic");
  std::string v2 = good;
  v2[4] = 2;
  EXPECT_EQ(read_error(v2), "bad-version");
  EXPECT_EQ(read_error(good.substr(0, good.size() - 1)), "truncated");
  EXPECT_EQ(read_error(good.substr(0, 10)), "truncated");
  EXPECT_EQ(read_error(good + "x"), "trailing-data");
  EXPECT_EQ(read_error(nfte_bytes(make_set(2, {{"a", {1, 2}}, {"a", {3, 4}}}))), "duplicate-id");
  EXPECT_EQ(read_error(nfte_bytes(make_set(2, {{"a", {0, 0}}}))), "zero-vector");
  EXPECT_EQ(read_error(nfte_bytes(make_set(2, {{"a", {NAN, 1}}}))), "non-finite");
  // same layout as a one-record file with id "a", but id_len = 0
  std::string empty_id = nfte_bytes(make_set(2, {{"a", {1, 1}}}));
  empty_id[24] = 0;
  empty_id.erase(26, 1);
  EXPECT_EQ(read_error(empty_id), "bad-id");

  std::istringstream in(good);
  try {
    read_embeddings(in, 3);
    FAIL();
  } catch (const EmbeddingError& e) {
    EXPECT_EQ(e.kind, "dim-mismatch");
  }
}

TEST(Prices, CsvRoundTrip) {
  std::istringstream in("token_id,price_eth\nx,1.5\ny,0.25\n");
  const auto p = read_prices_csv(in);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p.at(TokenId::parse("x")), eth("1.5"));
  std::ostringstream out;
  write_prices_csv(out, p);
  EXPECT_EQ(out.str(), "token_id,price_eth\nx,1.5\ny,0.25\n");

  std::istringstream dup("x,1\nx,2\n");
  EXPECT_THROW(read_prices_csv(dup), FormatError);
  std::istringstream bad("x;1\n");
  EXPECT_THROW(read_prices_csv(bad), FormatError);
}

TEST(Coherence, NearestRank) {
  const std::vector<int> v{10, 20, 30, 40, 50};
  EXPECT_EQ(nearest_rank(v, 50), 30);
  EXPECT_EQ(nearest_rank(v, 80), 40);
  EXPECT_EQ(nearest_rank(v, 99), 50);
  EXPECT_EQ(nearest_rank(std::vector<int>{7}, 50), 7);
}

TEST(Coherence, HandPricedFixture) {
  const auto f = coherence_fixture();
  const auto idx = build_index(f.set);
  const auto r = neighbor_price_report(idx, f.prices, 3, eth("1"));
  const Rational E = Rational::of(eth("1"));  // one ether in attoether

  std::map<std::string, Rational> gap;
  for (const auto& row : r.per_query) gap[row.id.str()] = row.abs_gap;
  EXPECT_EQ(gap["a0"], E * Rational(8, 3));
  EXPECT_EQ(gap["a1"], E * Rational(4, 3));
  EXPECT_EQ(gap["a2"], Rational(0));
  EXPECT_EQ(gap["a3"], E * Rational(4));
  for (const char* id : {"b0", "b1", "b2", "b3"}) EXPECT_EQ(gap[id], Rational(0));
  for (const char* id : {"c0", "c1", "c2", "c3"}) EXPECT_EQ(gap[id], E * Rational(2, 3));

  EXPECT_EQ(r.within_count, 9u);
  EXPECT_DOUBLE_EQ(r.fraction_within, 0.75);
  EXPECT_FALSE(r.truncated);
  const std::vector<std::pair<int, Rational>> want{
      {50, E * Rational(2, 3)}, {80, E * Rational(4, 3)}, {90, E * Rational(8, 3)}, {95, E * 4}, {99, E * 4}};
  EXPECT_EQ(r.gap_percentiles, want);

  // baseline: mean of the other eleven prices (total 56)
  std::map<std::string, Rational> base;
  for (const auto& row : r.per_query) base[row.id.str()] = row.baseline_gap;
  EXPECT_EQ(base["a0"], E * 4);
  EXPECT_EQ(base["a3"], E * Rational(16, 11));
  EXPECT_EQ(base["b2"], E * Rational(64, 11));
  EXPECT_EQ(base["c0"], E * Rational(50, 11));
  EXPECT_EQ(base["c3"], E * Rational(38, 11));
  EXPECT_EQ(r.baseline_within_count, 0u);
  const std::vector<std::pair<int, Rational>> want_base{
      {50, E * 4}, {80, E * Rational(64, 11)}, {90, E * Rational(64, 11)}, {95, E * Rational(64, 11)}, {99, E * Rational(64, 11)}};
  EXPECT_EQ(r.baseline_gap_percentiles, want_base);
}

TEST(Coherence, NeedsPricesAndTwoItems) {
  const auto f = coherence_fixture();
  const auto idx = build_index(f.set);
  auto missing = f.prices;
  missing.erase(TokenId::parse("b1"));
  EXPECT_THROW(neighbor_price_report(idx, missing, 3), std::invalid_argument);
  const auto one = build_index(make_set(2, {{"a", {1, 0}}}));
  EXPECT_THROW(neighbor_price_report(one, f.prices, 3), std::invalid_argument);
  const auto wide = neighbor_price_report(idx, f.prices, 20);
  EXPECT_TRUE(wide.truncated);
}

TEST(Estimate, MeanOfNeighbors) {
  const auto f = coherence_fixture();
  const auto idx = build_index(f.set);
  const auto e2 = estimate_price(idx, f.prices, at_angle(0, 1), 2);
  EXPECT_EQ(e2.price, eth("1.5"));
  const auto e4 = estimate_price(idx, f.prices, at_angle(1.5, 5), 4);
  EXPECT_EQ(e4.price, eth("3"));
  // 2.5 / 3 ether does not divide evenly
  const auto e3 = estimate_price(idx, f.prices, at_angle(240, 1), 3);
  EXPECT_EQ(e3.exact, Rational::of(eth("2.5")) * Rational(1, 3));
  EXPECT_EQ(e3.price, eth("0.833333333333333333"));
  EXPECT_EQ(e3.neighbors.size(), 3u);
  EXPECT_FALSE(e3.truncated);
}
