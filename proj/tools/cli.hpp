#pragma once

// nftf command-line front end. `run` is separate from main so tests can
// drive every subcommand in-process.
//
// Exit codes: 0 success, 1 validation or analysis failure, 2 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nftf/nftf.hpp"

namespace nftf::cli {

inline constexpr std::uint64_t kDefaultSeed = 20210301;
inline constexpr std::uint64_t kDefaultReplicates = 10000;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Formats {
  bool json = true;
  bool csv = true;
};

inline Formats parse_formats(const std::vector<std::string>& names) {
  Formats f{false, false};
  for (const auto& n : names) {
    if (n == "json") f.json = true;
    else if (n == "csv") f.csv = true;
    else throw UsageError("unknown format '" + n + "' (expected json or csv)");
  }
  return f;
}

class Output {
 public:
  Output(std::string dir, Formats formats) : dir_(std::move(dir)), formats_(formats) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw UsageError("cannot create output directory " + dir_ + ": " + ec.message());
  }

  void json(const std::string& name, const Json& j) {
    if (formats_.json) write(name + ".json", j.dump(2) + "\n");
  }

  template <typename Fn>
  void csv(const std::string& name, Fn&& fn) {
    if (!formats_.csv) return;
    std::ostringstream s;
    fn(s);
    write(name + ".csv", s.str());
  }

  void write(const std::string& file, const std::string& content) {
    const auto path = std::filesystem::path(dir_) / file;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    written_.push_back(file);
  }

  const std::vector<std::string>& written() const { return written_; }

 private:
  std::string dir_;
  Formats formats_;
  std::vector<std::string> written_;
};

inline void require_file(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) throw UsageError("input file not found: " + path);
}

struct LoadedLog {
  Ledger ledger;
  std::size_t parse_errors = 0;
  std::size_t validation_errors = 0;
};

/// Parses and builds a ledger. In strict mode any problem is a
/// ValidationFailure; fail-soft drops bad lines and histories.
inline LoadedLog load_ledger(const std::string& path, bool fail_soft, std::ostream& err) {
  require_file(path);
  std::ifstream in(path, std::ios::binary);
  auto parsed = parse_event_log(in);
  for (const auto& e : parsed.errors) err << path << ":" << e.line << ": " << e.cause << "\n";
  if (!parsed.errors.empty() && !fail_soft)
    throw ValidationFailure(std::to_string(parsed.errors.size()) + " malformed event line(s)");
  auto built = build_ledger(parsed.events, fail_soft ? BuildMode::FailSoft : BuildMode::Strict);
  for (const auto& e : built.errors)
    err << "invalid history " << e.nft << ": " << e.rule << " at " << e.tx << (e.detail.empty() ? "" : " (" + e.detail + ")") << "\n";
  if (!built.ledger) throw ValidationFailure(std::to_string(built.errors.size()) + " invalid histories");
  return {std::move(*built.ledger), parsed.errors.size(), built.errors.size()};
}

inline std::vector<Seconds> parse_edges(const std::string& text) {
  std::vector<Seconds> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(parse_duration(item));
    } catch (const FormatError& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"nftf: forensics over NFT marketplace event logs"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::string events, out_dir, embeddings, prices, queries, query_id, config_path, buckets = "1h,1d,5d,30d,inf",
                                                                                   max_gap, apl_order = "first-transfer";
  std::vector<std::string> formats{"json", "csv"};
  bool fail_soft = false, no_apl = false;
  std::uint64_t replicates = kDefaultReplicates, seed = kDefaultSeed;
  std::optional<std::uint64_t> seed_override;
  std::size_t k = kDefaultNeighbors;
  std::string threshold = "1";
  double ratio_threshold = kDefaultSmallWorldThreshold;
  std::uint64_t dim = 0;

  auto* validate = app.add_subcommand("validate", "parse and strictly validate an event log");
  validate->add_option("--events", events, "event log (JSONL)")->required();
  validate->add_option("--out", out_dir, "write validation.json here");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--events", events, "event log (JSONL)")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_flag("--fail-soft", fail_soft, "drop invalid lines and histories instead of failing");
    sub->add_option("--format", formats, "report formats: json, csv")->delimiter(',');
  };

  auto* stats = app.add_subcommand("stats", "activity, funnel, resale, gaps, invite-purchase and transfer stats");
  add_common(stats);
  stats->add_option("--buckets", buckets, "unlist-relist gap bucket upper edges");
  stats->add_option("--max-invite-gap", max_gap, "max time from winning bid to invite (e.g. 30d)");

  auto* graph = app.add_subcommand("graph", "transfer graph metrics, largest component, edge list, APL progression");
  add_common(graph);
  graph->add_option("--apl-order", apl_order, "node order for APL progression: first-transfer or id")
      ->check(CLI::IsMember({"first-transfer", "id"}));
  graph->add_flag("--no-apl", no_apl, "skip the APL progression");

  auto* smallworld = app.add_subcommand("smallworld", "Erdos-Renyi null model and small-world verdict");
  add_common(smallworld);
  smallworld->add_option("--replicates", replicates, "random graphs to sample")->check(CLI::PositiveNumber);
  smallworld->add_option("--seed", seed, "base seed");
  smallworld->add_option("--threshold", ratio_threshold, "minimum clustering ratio for the verdict");

  auto* simindex = app.add_subcommand("simindex", "embedding index: build, query, coherence, estimate");
  simindex->require_subcommand(1);
  auto add_index = [&](CLI::App* sub) {
    sub->add_option("--embeddings", embeddings, "NFTE embedding file")->required();
    sub->add_option("--dim", dim, "expected embedding dimension");
  };
  auto add_prices = [&](CLI::App* sub) {
    auto* p = sub->add_option("--prices", prices, "CSV token_id,price_eth");
    auto* e = sub->add_option("--events", events, "derive first-settle prices from an event log");
    p->excludes(e);
    sub->add_flag("--fail-soft", fail_soft, "with --events: drop invalid histories");
  };
  auto* sbuild = simindex->add_subcommand("build", "load, validate and index embeddings");
  add_index(sbuild);
  sbuild->add_option("--out", out_dir, "write index.json here");
  auto* squery = simindex->add_subcommand("query", "top-k neighbors of an indexed id");
  add_index(squery);
  squery->add_option("--id", query_id, "token id")->required();
  squery->add_option("--k", k, "neighbors")->check(CLI::PositiveNumber);
  squery->add_option("--out", out_dir, "write query.json here");
  auto* scoh = simindex->add_subcommand("coherence", "neighbor-price coherence report");
  add_index(scoh);
  add_prices(scoh);
  scoh->add_option("--k", k, "neighbors")->check(CLI::PositiveNumber);
  scoh->add_option("--threshold", threshold, "price gap threshold in ETH");
  scoh->add_option("--out", out_dir, "output directory")->required();
  scoh->add_option("--format", formats, "report formats: json, csv")->delimiter(',');
  auto* sest = simindex->add_subcommand("estimate", "price estimates for query vectors");
  add_index(sest);
  add_prices(sest);
  sest->add_option("--queries", queries, "NFTE file of query vectors")->required();
  sest->add_option("--k", k, "neighbors")->check(CLI::PositiveNumber);
  sest->add_option("--out", out_dir, "output directory")->required();
  sest->add_option("--format", formats, "report formats: json, csv")->delimiter(',');

  auto* synth = app.add_subcommand("synth", "generate a synthetic event log with planted patterns");
  synth->add_option("--config", config_path, "JSON config (absent keys use defaults)");
  synth->add_option("--seed", seed_override, "override the config seed");
  synth->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    const Formats fmt = parse_formats(formats);

    if (validate->parsed()) {
      require_file(events);
      std::ifstream in(events, std::ios::binary);
      const auto parsed = parse_event_log(in);
      const auto built = build_ledger(parsed.events, BuildMode::Strict);
      const std::size_t total = parsed.errors.size() + built.errors.size();
      for (const auto& e : parsed.errors) out << "line " << e.line << "\tparse\t" << e.cause << "\n";
      for (const auto& e : built.errors)
        out << "nft " << e.nft << "\t" << e.rule << "\t" << e.tx << (e.detail.empty() ? "" : "\t" + e.detail) << "\n";
      out << parsed.events.size() << " events, " << total << " errors\n";
      if (!out_dir.empty()) {
        Output o(out_dir, fmt);
        Json pe = Json::array(), ve = Json::array();
        for (const auto& e : parsed.errors) pe.push_back(to_json(e));
        for (const auto& e : built.errors) ve.push_back(to_json(e));
        o.json("validation", make_report("validation", {digest_file(events)}, Json::object(),
                                         {{"events", parsed.events.size()},
                                          {"parse_errors", pe},
                                          {"validation_errors", ve},
                                          {"histories", built.ledger ? built.ledger->histories.size() : 0}}));
      }
      return total == 0 ? 0 : 1;
    }

    if (stats->parsed()) {
      const auto edges = parse_edges(buckets);
      std::optional<Seconds> gap;
      if (!max_gap.empty()) {
        try {
          gap = parse_duration(max_gap);
        } catch (const FormatError& e) {
          throw UsageError(e.what());
        }
      }
      const auto log = load_ledger(events, fail_soft, err);
      const std::vector<InputDigest> inputs{digest_file(events)};
      Json cfg{{"fail_soft", fail_soft}, {"buckets", buckets}, {"max_invite_gap", max_gap.empty() ? Json(nullptr) : Json(max_gap)}};
      Output o(out_dir, fmt);

      const auto monthly = activity_series(log.ledger, Granularity::Monthly);
      const auto hourly = activity_series(log.ledger, Granularity::HourOfDay);
      o.json("activity_monthly", make_report("activity_monthly", inputs, cfg, to_json(monthly)));
      o.csv("activity_monthly", [&](std::ostream& s) { write_csv(s, monthly); });
      o.json("activity_hourly", make_report("activity_hourly", inputs, cfg, to_json(hourly)));
      o.csv("activity_hourly", [&](std::ostream& s) { write_csv(s, hourly); });

      const auto funnel = auction_funnel_stats(log.ledger);
      o.json("funnel", make_report("funnel", inputs, cfg, to_json(funnel)));
      o.csv("funnel", [&](std::ostream& s) { write_csv(s, funnel); });

      const auto resale = resale_price_changes(log.ledger);
      o.json("resale", make_report("resale", inputs, cfg, to_json(resale)));
      o.csv("resale", [&](std::ostream& s) { write_csv(s, resale); });

      GapHistogram gaps;
      try {
        gaps = unlist_relist_gaps(log.ledger, edges);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      o.json("gaps", make_report("gaps", inputs, cfg, to_json(gaps)));
      o.csv("gaps", [&](std::ostream& s) { write_csv(s, gaps); });

      const auto scan = detect_invite_purchases(log.ledger, gap);
      o.json("collusion", make_report("collusion", inputs, cfg, to_json(scan)));
      o.csv("collusion", [&](std::ostream& s) { write_csv(s, scan); });

      const auto tb = transferred_sold_breakdown(log.ledger);
      o.json("transfers", make_report("transfers", inputs, cfg, to_json(tb)));
      o.csv("transfers", [&](std::ostream& s) { write_csv(s, tb); });

      out << log.ledger.histories.size() << " NFTs: first success " << Json(funnel.first_success_rate).dump()
          << ", relist " << Json(funnel.relist_rate).dump() << ", second success "
          << Json(funnel.second_success_rate).dump() << "; " << scan.candidates.size()
          << " invite-after-purchase candidates; " << gaps.total() << " unlist-relist pairs\n";
      return 0;
    }

    if (graph->parsed()) {
      const auto log = load_ledger(events, fail_soft, err);
      const std::vector<InputDigest> inputs{digest_file(events)};
      Json cfg{{"fail_soft", fail_soft}, {"apl_order", no_apl ? Json(nullptr) : Json(apl_order)}};
      Output o(out_dir, fmt);
      const auto g = build_transfer_graph(log.ledger);
      const auto gm = graph_metrics(g);
      Json result{{"graph", to_json(gm)}};
      GraphMetrics lm;
      if (!g.nodes.empty()) {
        const auto lcc = largest_component(g);
        lm = graph_metrics(lcc);
        std::ostringstream lcc_edges;
        write_edge_list(lcc_edges, lcc);
        o.write("lcc_edges.txt", lcc_edges.str());
      }
      result["largest_component"] = to_json(lm);
      result["component_sizes"] = component_sizes(g);
      o.json("metrics", make_report("graph_metrics", inputs, cfg, result));
      o.csv("metrics", [&](std::ostream& s) { write_csv(s, gm, lm); });
      std::ostringstream edges_txt;
      write_edge_list(edges_txt, g);
      o.write("edges.txt", edges_txt.str());
      if (!no_apl) {
        std::vector<AccountId> order;
        if (apl_order == "id") order.assign(g.nodes.begin(), g.nodes.end());
        else order = first_transfer_order(log.ledger, g);
        const auto pts = apl_progression(g, order);
        o.json("apl_progression", make_report("apl_progression", inputs, cfg, to_json(pts)));
        o.csv("apl_progression", [&](std::ostream& s) { write_csv(s, pts); });
      }
      out << gm.nodes << " nodes, " << gm.edges << " edges, " << gm.connected_components << " components\n";
      return 0;
    }

    if (smallworld->parsed()) {
      const auto log = load_ledger(events, fail_soft, err);
      const auto g = build_transfer_graph(log.ledger);
      if (g.edges.empty()) throw ValidationFailure("transfer graph has no edges");
      Output o(out_dir, fmt);
      const auto rep = small_world_report(g, replicates, seed, ratio_threshold);
      Json cfg{{"fail_soft", fail_soft}, {"replicates", replicates}, {"seed", seed}, {"threshold", ratio_threshold}};
      o.json("smallworld", make_report("smallworld", {digest_file(events)}, cfg, to_json(rep)));
      out << "clustering ratio " << finite_or_string(rep.clustering_ratio).dump() << ", verdict "
          << (rep.verdict ? "small-world" : "not small-world") << "\n";
      return 0;
    }

    if (simindex->parsed()) {
      require_file(embeddings);
      const auto set = dim > 0 ? load_embeddings(embeddings, dim) : load_embeddings(embeddings);
      const SimIndex index(set);
      std::vector<InputDigest> inputs{digest_file(embeddings)};

      auto load_prices = [&]() -> PriceMap {
        if (!prices.empty()) {
          require_file(prices);
          inputs.push_back(digest_file(prices));
          std::ifstream in(prices, std::ios::binary);
          return read_prices_csv(in);
        }
        if (!events.empty()) {
          inputs.push_back(digest_file(events));
          return first_settle_prices(load_ledger(events, fail_soft, err).ledger);
        }
        throw UsageError("one of --prices or --events is required");
      };

      if (sbuild->parsed()) {
        out << index.size() << " vectors, dim " << index.dim() << "\n";
        if (!out_dir.empty()) {
          Output o(out_dir, fmt);
          Json ids = Json::array();
          for (const auto& id : index.ids()) ids.push_back(id.str());
          o.json("index", make_report("index", inputs, {{"dim", index.dim()}}, {{"count", index.size()}, {"dim", index.dim()}, {"ids", ids}}));
        }
        return 0;
      }
      if (squery->parsed()) {
        const auto r = query_knn(index, TokenId::parse(query_id), k);
        for (const auto& n : r.neighbors) out << n.id.str() << "\t" << Json(n.similarity).dump() << "\n";
        if (r.truncated) err << "only " << r.neighbors.size() << " neighbors available\n";
        if (!out_dir.empty()) {
          Output o(out_dir, fmt);
          o.json("query", make_report("query", inputs, {{"id", query_id}, {"k", k}}, to_json(r)));
        }
        return 0;
      }
      if (scoh->parsed()) {
        const auto price_map = load_prices();
        EthAmount limit;
        try {
          limit = EthAmount::parse(threshold);
        } catch (const FormatError& e) {
          throw UsageError(e.what());
        }
        // the index covers sold NFTs only
        EmbeddingSet sold;
        sold.dim = set.dim;
        for (std::size_t i = 0; i < set.size(); ++i)
          if (price_map.count(set.ids[i])) sold.add(set.ids[i], std::vector<float>(set.row(i), set.row(i) + set.dim));
        const std::size_t skipped = set.size() - sold.size();
        if (!events.empty() && sold.size() == 0) throw ValidationFailure("no embedded NFT has a settled sale");
        const auto stats_r = neighbor_price_report(events.empty() ? index : SimIndex(sold), price_map, k, limit);
        Output o(out_dir, fmt);
        Json cfg{{"k", k}, {"threshold", limit.to_string()}, {"price_source", prices.empty() ? "events" : "csv"}, {"unpriced_skipped", skipped}};
        o.json("coherence", make_report("coherence", inputs, cfg, to_json(stats_r)));
        o.csv("coherence", [&](std::ostream& s) { write_csv(s, stats_r); });
        out << "fraction within " << limit.to_string() << " ETH: " << Json(stats_r.fraction_within).dump()
            << " (baseline " << Json(stats_r.baseline_fraction_within).dump() << ")\n";
        return 0;
      }
      if (sest->parsed()) {
        const auto price_map = load_prices();
        require_file(queries);
        const auto qset = load_embeddings(queries, index.dim());
        inputs.push_back(digest_file(queries));
        Json arr = Json::array();
        std::ostringstream csv;
        csv << "query,estimate,truncated\n";
        for (std::size_t i = 0; i < qset.size(); ++i) {
          const auto est = estimate_price(index, price_map, std::vector<float>(qset.row(i), qset.row(i) + qset.dim), k);
          Json nb = Json::array();
          for (const auto& n : est.neighbors) nb.push_back(n.id.str());
          arr.push_back({{"query", qset.ids[i].str()}, {"estimate", eth_string(est.exact)}, {"truncated", est.truncated}, {"neighbors", nb}});
          csv << qset.ids[i].str() << ',' << eth_string(est.exact) << ',' << (est.truncated ? "true" : "false") << '\n';
          out << qset.ids[i].str() << "\t" << eth_string(est.exact) << "\n";
        }
        Output o(out_dir, fmt);
        o.json("estimates", make_report("estimates", inputs, {{"k", k}}, arr));
        o.csv("estimates", [&](std::ostream& s) { s << csv.str(); });
        return 0;
      }
    }

    if (synth->parsed()) {
      SynthConfig cfg;
      std::vector<InputDigest> inputs;
      if (!config_path.empty()) {
        require_file(config_path);
        try {
          cfg = synth_config_from_json(nlohmann::json::parse(read_file_bytes(config_path)));
        } catch (const nlohmann::json::exception& e) {
          throw UsageError(std::string("bad synth config: ") + e.what());
        } catch (const FormatError& e) {
          throw UsageError(std::string("bad synth config: ") + e.what());
        }
        inputs.push_back(digest_file(config_path));
      }
      if (seed_override) cfg.seed = *seed_override;
      SynthOutput gen;
      try {
        gen = generate(cfg);
      } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("infeasible synth config: ") + e.what());
      }
      Output o(out_dir, Formats{});
      std::string log;
      for (const auto& line : gen.lines()) log += line + "\n";
      o.write("events.jsonl", log);
      o.json("ground_truth", make_report("ground_truth", inputs, to_json(cfg), to_json(gen.truth)));
      out << gen.events.size() << " events written\n";
      return 0;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationFailure& e) {
    err << "validation failed: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace nftf::cli
