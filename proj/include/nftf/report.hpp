#pragma once

// JSON and CSV renderings of analysis results, plus the report envelope that
// records tool version, input digests and the effective configuration.
// Output is deterministic: ordered keys, no wall-clock data.

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "nftf/analytics.hpp"
#include "nftf/graph.hpp"
#include "nftf/null_model.hpp"
#include "nftf/similarity.hpp"
#include "nftf/synthgen.hpp"

namespace nftf {

inline constexpr const char* kToolName = "nftf";
inline constexpr const char* kToolVersion = "0.1.0";

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Scalars

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  std::ostringstream out;
  for (unsigned i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), {}};
}

/// An attoether rational as decimal ETH (18 digits, truncated, zeros trimmed).
inline std::string eth_string(const Rational& atto) {
  std::string s = (atto / Rational(i128(EthAmount::kAttoPerEth))).to_decimal(18);
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

inline std::string rational_string(const Rational& r) {
  return EthAmount::u128_to_string(u128(r.num() < 0 ? -r.num() : r.num())).insert(0, r.num() < 0 ? "-" : "") + "/" +
         EthAmount::u128_to_string(u128(r.den()));
}

inline std::string duration_string(Seconds s) {
  if (s == kUnbounded) return "inf";
  if (s == 0) return "0s";
  if (s % kDay == 0) return std::to_string(s / kDay) + "d";
  if (s % kHour == 0) return std::to_string(s / kHour) + "h";
  if (s % kMinute == 0) return std::to_string(s / kMinute) + "m";
  return std::to_string(s) + "s";
}

/// Parses "30s", "15m", "1h", "5d", "inf" or a bare number of seconds.
inline Seconds parse_duration(const std::string& text) {
  if (text == "inf") return kUnbounded;
  if (text.empty()) throw FormatError("empty duration");
  Seconds unit = 1;
  std::string digits = text;
  switch (text.back()) {
    case 's': unit = 1; digits.pop_back(); break;
    case 'm': unit = kMinute; digits.pop_back(); break;
    case 'h': unit = kHour; digits.pop_back(); break;
    case 'd': unit = kDay; digits.pop_back(); break;
    default: break;
  }
  if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
    throw FormatError("bad duration '" + text + "'");
  return Seconds(std::stoll(digits)) * unit;
}

template <typename T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

inline Json finite_or_string(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

// ---------------------------------------------------------------------------
// Envelope

struct InputDigest {
  std::string name;  // file name only, so reports do not depend on directories
  std::string sha256;
};

inline InputDigest digest_file(const std::string& path) {
  std::string name = path;
  if (const auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
  return {name, sha256_hex(read_file_bytes(path))};
}

inline Json make_report(const std::string& kind, const std::vector<InputDigest>& inputs, const Json& config,
                        Json result) {
  Json j;
  j["report"] = kind;
  j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  Json in = Json::array();
  for (const auto& d : inputs) in.push_back({{"name", d.name}, {"sha256", d.sha256}});
  j["inputs"] = in;
  j["config"] = config;
  j["result"] = std::move(result);
  return j;
}

// ---------------------------------------------------------------------------
// Event-model results

inline Json to_json(const ValidationError& e) {
  return {{"nft", e.nft}, {"rule", e.rule}, {"tx", e.tx}, {"detail", e.detail}};
}

inline Json to_json(const ParseError& e) { return {{"line", e.line}, {"cause", e.cause}}; }

// ---------------------------------------------------------------------------
// Analytics

inline Json to_json(const ActivitySeries& a) {
  auto counts = [&](const std::map<std::string, std::uint64_t>& m) {
    Json j = Json::object();
    for (const auto& [k, v] : m) j[a.granularity == Granularity::HourOfDay ? std::to_string(std::stoi(k)) : k] = v;
    return j;
  };
  return {{"granularity", a.granularity == Granularity::Monthly ? "monthly" : "hour_of_day"},
          {"mint_counts", counts(a.mint_counts)},
          {"bid_counts", counts(a.bid_counts)}};
}

inline void write_csv(std::ostream& out, const ActivitySeries& a) {
  out << "bucket,mints,bids\n";
  std::set<std::string> keys;
  for (const auto& [k, _] : a.mint_counts) keys.insert(k);
  for (const auto& [k, _] : a.bid_counts) keys.insert(k);
  for (const auto& k : keys) {
    const auto m = a.mint_counts.count(k) ? a.mint_counts.at(k) : 0;
    const auto b = a.bid_counts.count(k) ? a.bid_counts.at(k) : 0;
    out << (a.granularity == Granularity::HourOfDay ? std::to_string(std::stoi(k)) : k) << ',' << m << ',' << b << '\n';
  }
}

inline Json to_json(const FunnelStats& f) {
  return {{"first_listed", f.first_listed},
          {"first_sold", f.first_sold},
          {"relisted_after_sale", f.relisted_after_sale},
          {"second_sold", f.second_sold},
          {"first_success_rate", f.first_success_rate},
          {"relist_rate", f.relist_rate},
          {"second_success_rate", f.second_success_rate}};
}

inline void write_csv(std::ostream& out, const FunnelStats& f) {
  out << "metric,value\n";
  const Json j = to_json(f);
  for (const auto& [k, v] : j.items()) out << k << ',' << v.dump() << '\n';
}

inline Json to_json(const ResaleRecord& r) {
  return {{"nft", r.nft.str()},
          {"first_settle", r.first_settle.to_string()},
          {"second_list", r.second_list.to_string()},
          {"pct_change", r.pct_change.to_decimal(6)},
          {"pct_change_exact", rational_string(r.pct_change)},
          {"second_sold", r.second_sold},
          {"second_settle", r.second_settle ? Json(r.second_settle->to_string()) : Json(nullptr)}};
}

inline Json to_json(const std::vector<ResaleRecord>& rs) {
  Json arr = Json::array();
  for (const auto& r : rs) arr.push_back(to_json(r));
  return {{"count", rs.size()}, {"records", arr}};
}

inline void write_csv(std::ostream& out, const std::vector<ResaleRecord>& rs) {
  out << "nft,first_settle,second_list,pct_change,second_sold,second_settle\n";
  for (const auto& r : rs)
    out << r.nft.str() << ',' << r.first_settle.to_string() << ',' << r.second_list.to_string() << ','
        << r.pct_change.to_decimal(6) << ',' << (r.second_sold ? "true" : "false") << ','
        << (r.second_settle ? r.second_settle->to_string() : "") << '\n';
}

inline Json to_json(const GapHistogram& h) {
  Json buckets = Json::array();
  Seconds lo = 0;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    buckets.push_back({{"lo", duration_string(lo)},
                       {"hi", duration_string(h.bucket_edges[i])},
                       {"count", h.counts[i]},
                       {"fraction", h.fractions[i].to_double()},
                       {"fraction_exact", rational_string(h.fractions[i])}});
    lo = h.bucket_edges[i];
  }
  return {{"total_pairs", h.total()}, {"buckets", buckets}};
}

inline void write_csv(std::ostream& out, const GapHistogram& h) {
  out << "lo,hi,count,fraction\n";
  Seconds lo = 0;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out << duration_string(lo) << ',' << duration_string(h.bucket_edges[i]) << ',' << h.counts[i] << ','
        << Json(h.fractions[i].to_double()).dump() << '\n';
    lo = h.bucket_edges[i];
  }
}

inline Json to_json(const InvitePurchaseScan& s) {
  Json arr = Json::array();
  for (const auto& c : s.candidates)
    arr.push_back({{"seller", c.seller.str()},
                   {"buyer", c.buyer.str()},
                   {"nft", c.nft.str()},
                   {"settle_price", c.settle_price.to_string()},
                   {"winning_bid_ts", c.winning_bid_ts.to_string()},
                   {"settle_ts", c.settle_ts.to_string()},
                   {"invite_ts", c.invite_ts.to_string()}});
  return {{"count", s.candidates.size()},
          {"empty", s.empty},
          {"mean_price", s.mean_price.to_string()},
          {"candidates", arr}};
}

inline void write_csv(std::ostream& out, const InvitePurchaseScan& s) {
  out << "seller,buyer,nft,settle_price,winning_bid_ts,settle_ts,invite_ts\n";
  for (const auto& c : s.candidates)
    out << c.seller.str() << ',' << c.buyer.str() << ',' << c.nft.str() << ',' << c.settle_price.to_string() << ','
        << c.winning_bid_ts.to_string() << ',' << c.settle_ts.to_string() << ',' << c.invite_ts.to_string() << '\n';
}

inline Json to_json(const TransferBreakdown& t) {
  return {{"transferred_total", t.transferred_total},
          {"transferred_ever_sold", t.transferred_ever_sold},
          {"fraction", t.fraction}};
}

inline void write_csv(std::ostream& out, const TransferBreakdown& t) {
  out << "transferred_total,transferred_ever_sold,fraction\n"
      << t.transferred_total << ',' << t.transferred_ever_sold << ',' << Json(t.fraction).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Graph

/// Metrics keyed by the conventional table row names.
inline Json to_json(const GraphMetrics& m) {
  return {{"Nodes", m.nodes},
          {"Edges", m.edges},
          {"Connected Components", m.connected_components},
          {"Average Degree", optional_json(m.average_degree)},
          {"Maximum Degree", m.max_degree},
          {"Diameter", optional_json(m.diameter)},
          {"Average Path Length", optional_json(m.average_path_length)},
          {"Density", optional_json(m.density)},
          {"Clustering Coefficient", optional_json(m.clustering_coefficient)},
          {"Degree Assortativity", optional_json(m.degree_assortativity)},
          {"Transitivity", m.transitivity}};
}

inline void write_csv(std::ostream& out, const GraphMetrics& graph, const GraphMetrics& lcc) {
  out << "metric,graph,largest_component\n";
  const Json a = to_json(graph), b = to_json(lcc);
  for (const auto& [k, v] : a.items()) out << k << ',' << v.dump() << ',' << b.at(k).dump() << '\n';
}

inline Json to_json(const std::vector<AplPoint>& pts) {
  Json arr = Json::array();
  for (const auto& p : pts) arr.push_back({{"nodes", p.node_count}, {"apl", p.apl}});
  return arr;
}

inline void write_csv(std::ostream& out, const std::vector<AplPoint>& pts) {
  out << "nodes,apl\n";
  for (const auto& p : pts) out << p.node_count << ',' << Json(p.apl).dump() << '\n';
}

inline Json to_json(const NullModelResult& n) {
  return {{"nodes", n.nodes},
          {"edges", n.edges},
          {"replicates", n.replicates},
          {"seed", n.seed},
          {"mean_clustering", n.mean_clustering},
          {"std_clustering", n.std_clustering}};
}

inline Json to_json(const SmallWorldReport& r) {
  return {{"observed", to_json(r.observed)},
          {"null_model", to_json(r.null_model)},
          {"clustering_ratio", finite_or_string(r.clustering_ratio)},
          {"ratio_threshold", r.ratio_threshold},
          {"verdict", r.verdict}};
}

// ---------------------------------------------------------------------------
// Similarity

inline Json to_json(const KnnResult& r) {
  Json arr = Json::array();
  for (const auto& n : r.neighbors) arr.push_back({{"id", n.id.str()}, {"similarity", n.similarity}});
  return {{"truncated", r.truncated}, {"neighbors", arr}};
}

inline Json to_json(const CoherenceStats& s) {
  auto pct = [](const std::vector<std::pair<int, Rational>>& v) {
    Json j = Json::object();
    for (const auto& [p, r] : v) j["p" + std::to_string(p)] = eth_string(r);
    return j;
  };
  return {{"k", s.k},
          {"threshold", s.threshold.to_string()},
          {"queries", s.per_query.size()},
          {"truncated", s.truncated},
          {"within_count", s.within_count},
          {"fraction_within", s.fraction_within},
          {"baseline_within_count", s.baseline_within_count},
          {"baseline_fraction_within", s.baseline_fraction_within},
          {"gap_percentiles", pct(s.gap_percentiles)},
          {"baseline_gap_percentiles", pct(s.baseline_gap_percentiles)}};
}

inline void write_csv(std::ostream& out, const CoherenceStats& s) {
  out << "id,own_price,neighbor_mean,abs_gap,baseline_gap,within,baseline_within\n";
  for (const auto& r : s.per_query)
    out << r.id.str() << ',' << r.own_price.to_string() << ',' << eth_string(r.neighbor_mean) << ','
        << eth_string(r.abs_gap) << ',' << eth_string(r.baseline_gap) << ',' << (r.within ? "true" : "false") << ','
        << (r.baseline_within ? "true" : "false") << '\n';
}

// ---------------------------------------------------------------------------
// Synthetic generation

inline Json to_json(const SynthConfig& c) {
  Json clusters = Json::array();
  for (const auto& cl : c.transfer_clusters) clusters.push_back({{"size", cl.size}, {"transfers", cl.transfers}});
  return {{"seed", c.seed},
          {"n_creators", c.n_creators},
          {"n_collectors", c.n_collectors},
          {"n_nfts", c.n_nfts},
          {"first_sale_rate", c.first_sale_rate},
          {"relist_rate", c.relist_rate},
          {"second_sale_rate", c.second_sale_rate},
          {"planted_collusions", c.planted_collusions},
          {"planted_quick_relists", c.planted_quick_relists},
          {"noise_invites", c.noise_invites},
          {"transfer_clusters", clusters},
          {"time_start", c.time_start.to_string()},
          {"time_end", c.time_end.to_string()}};
}

/// Reads a config object; absent keys keep their defaults.
inline SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("seed", c.seed);
  get("n_creators", c.n_creators);
  get("n_collectors", c.n_collectors);
  get("n_nfts", c.n_nfts);
  get("first_sale_rate", c.first_sale_rate);
  get("relist_rate", c.relist_rate);
  get("second_sale_rate", c.second_sale_rate);
  get("planted_collusions", c.planted_collusions);
  get("planted_quick_relists", c.planted_quick_relists);
  get("noise_invites", c.noise_invites);
  if (j.contains("transfer_clusters"))
    for (const auto& cl : j.at("transfer_clusters"))
      c.transfer_clusters.push_back({cl.at("size").get<std::uint64_t>(), cl.at("transfers").get<std::uint64_t>()});
  if (j.contains("time_start")) c.time_start = Timestamp::parse(j.at("time_start").get<std::string>());
  if (j.contains("time_end")) c.time_end = Timestamp::parse(j.at("time_end").get<std::string>());
  for (const auto& [key, _] : j.items()) {
    if (!to_json(c).contains(key)) throw FormatError("unknown synth config key '" + key + "'");
  }
  return c;
}

inline Json to_json(const GroundTruth& t) {
  Json coll = Json::array(), quick = Json::array(), edges = Json::array();
  for (const auto& c : t.collusion_pairs)
    coll.push_back({{"seller", c.seller.str()}, {"buyer", c.buyer.str()}, {"nft", c.nft.str()}});
  for (const auto& q : t.quick_relist_nfts) quick.push_back({{"nft", q.nft.str()}, {"gap_seconds", q.gap}});
  for (const auto& e : t.transfer_edges)
    edges.push_back({{"from", e.from.str()}, {"to", e.to.str()}, {"count", e.count}});
  return {{"collusion_pairs", coll},
          {"quick_relist_nfts", quick},
          {"expected_funnel", to_json(t.expected_funnel)},
          {"transfer_edges", edges},
          {"cluster_sizes", t.cluster_sizes}};
}

}  // namespace nftf
