#pragma once

// Synthetic event-log generator with planted, recoverable patterns.
//
// Every generated log is valid under strict ledger building. Patterns:
//   collusion pairs   a dedicated buyer wins a creator's auction with a single
//                     bid and is invited by that creator afterwards
//   quick relists     list, unlist, relist again within the hour
//   transfer clusters disjoint account groups that only transfer among
//                     themselves; each cluster forms one weak component
// Noise invites are sent at the start of the time range, before any bid, so
// they never qualify as invite-after-purchase.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "nftf/analytics.hpp"
#include "nftf/event.hpp"
#include "nftf/ledger.hpp"
#include "nftf/null_model.hpp"
#include "nftf/types.hpp"

namespace nftf {

struct ClusterSpec {
  std::uint64_t size = 0;       // accounts in the cluster, >= 2
  std::uint64_t transfers = 0;  // internal transfers, >= size - 1
};

struct SynthConfig {
  std::uint64_t seed = 7;
  std::uint64_t n_creators = 8;
  std::uint64_t n_collectors = 20;
  std::uint64_t n_nfts = 40;
  double first_sale_rate = 0.4;
  double relist_rate = 0.3;
  double second_sale_rate = 0.3;
  std::uint64_t planted_collusions = 0;
  std::uint64_t planted_quick_relists = 0;
  std::uint64_t noise_invites = 0;
  std::vector<ClusterSpec> transfer_clusters;
  Timestamp time_start = Timestamp::parse("2021-02-01T00:00:00Z");
  Timestamp time_end = Timestamp::parse("2021-12-31T00:00:00Z");
};

struct PlantedCollusion {
  AccountId seller;
  AccountId buyer;
  TokenId nft;
  friend auto operator<=>(const PlantedCollusion&, const PlantedCollusion&) = default;
};

struct PlantedRelist {
  TokenId nft;
  Seconds gap = 0;
  friend bool operator==(const PlantedRelist&, const PlantedRelist&) = default;
};

struct PlantedEdge {
  AccountId from;
  AccountId to;
  std::uint64_t count = 0;
  friend bool operator==(const PlantedEdge&, const PlantedEdge&) = default;
};

struct GroundTruth {
  std::vector<PlantedCollusion> collusion_pairs;
  std::vector<PlantedRelist> quick_relist_nfts;
  FunnelStats expected_funnel;
  std::vector<PlantedEdge> transfer_edges;
  std::vector<std::uint64_t> cluster_sizes;
};

struct SynthOutput {
  std::vector<Event> events;  // sorted by (ts, tx)
  GroundTruth truth;

  std::vector<std::string> lines() const {
    std::vector<std::string> out;
    out.reserve(events.size());
    for (const auto& ev : events) out.push_back(serialize_event(ev));
    return out;
  }
};

/// Span of one NFT's scripted activity is below this bound.
inline constexpr Seconds kSynthNftSpan = 50 * kDay;

inline void validate_synth_config(const SynthConfig& c) {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(name) + " must be in [0,1]");
  };
  prob(c.first_sale_rate, "first_sale_rate");
  prob(c.relist_rate, "relist_rate");
  prob(c.second_sale_rate, "second_sale_rate");
  if (c.planted_collusions + c.planted_quick_relists > c.n_nfts)
    throw std::invalid_argument("planted collusions + quick relists exceed n_nfts");
  if (c.n_nfts > 0 && c.n_creators == 0) throw std::invalid_argument("n_creators must be >= 1");
  if (c.n_nfts > 0 && c.n_collectors < 2) throw std::invalid_argument("n_collectors must be >= 2");
  if (c.noise_invites > 0 && (c.n_creators == 0 || c.n_collectors == 0))
    throw std::invalid_argument("noise invites need creators and collectors");
  for (const auto& cl : c.transfer_clusters) {
    if (cl.size < 2) throw std::invalid_argument("transfer cluster size must be >= 2");
    if (cl.transfers + 1 < cl.size) throw std::invalid_argument("transfer cluster needs >= size-1 transfers to connect");
  }
  if (c.time_end - c.time_start < kSynthNftSpan + 2 * kDay)
    throw std::invalid_argument("time range must span at least 52 days");
}

namespace detail {

class SynthBuilder {
 public:
  explicit SynthBuilder(const SynthConfig& c) : cfg_(c), rng_(c.seed) {}

  SynthOutput run() {
    validate_synth_config(cfg_);
    make_accounts();

    std::vector<std::uint64_t> order(cfg_.n_nfts);
    for (std::uint64_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::uint64_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_below(rng_, i)]);
    std::vector<char> collude(cfg_.n_nfts, 0), quick(cfg_.n_nfts, 0);
    for (std::uint64_t j = 0; j < cfg_.planted_collusions; ++j) collude[order[j]] = 1;
    for (std::uint64_t j = 0; j < cfg_.planted_quick_relists; ++j) quick[order[cfg_.planted_collusions + j]] = 1;

    for (std::uint64_t i = 0; i < cfg_.n_nfts; ++i) script_nft(i, collude[i], quick[i]);
    for (std::size_t c = 0; c < cfg_.transfer_clusters.size(); ++c) script_cluster(c);
    for (std::uint64_t i = 0; i < cfg_.noise_invites; ++i) {
      const auto& s = creators_[uniform_below(rng_, creators_.size())];
      const auto& b = collectors_[uniform_below(rng_, collectors_.size())];
      push(std::nullopt, EventKind::Invite, cfg_.time_start, s, std::nullopt, b);
    }

    std::stable_sort(pending_.begin(), pending_.end(), [](const Pending& a, const Pending& b) {
      return std::tie(a.ev.ts, a.order) < std::tie(b.ev.ts, b.order);
    });
    SynthOutput out;
    const int width = 8;
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      std::string id = std::to_string(i + 1);
      pending_[i].ev.tx = "tx" + std::string(std::size_t(std::max(0, width - int(id.size()))), '0') + id;
      out.events.push_back(std::move(pending_[i].ev));
    }
    truth_.expected_funnel = FunnelStats::from_counts(listed_, sold_, relisted_, resold_);
    std::sort(truth_.collusion_pairs.begin(), truth_.collusion_pairs.end());
    std::map<std::pair<AccountId, AccountId>, std::uint64_t> edges;
    for (const auto& e : truth_.transfer_edges) edges[{e.from, e.to}] += e.count;
    truth_.transfer_edges.clear();
    for (const auto& [k, n] : edges) truth_.transfer_edges.push_back({k.first, k.second, n});
    out.truth = std::move(truth_);
    return out;
  }

 private:
  struct Pending {
    Event ev;
    std::uint64_t order = 0;
  };

  // -- randomness ----------------------------------------------------------

  Seconds between(Seconds lo, Seconds hi) { return lo + Seconds(uniform_below(rng_, std::uint64_t(hi - lo + 1))); }
  bool chance(double p) { return uniform_unit(rng_) < p; }

  /// Log-uniform over [0.01, 10] ETH rounded to 4 decimals.
  EthAmount sample_price() {
    const double lo = std::log(0.01), hi = std::log(10.0);
    const double x = std::exp(lo + uniform_unit(rng_) * (hi - lo));
    const auto units = std::max<long long>(100, std::llround(x * 1e4));
    return EthAmount::from_atto(u128(units) * u128(100'000'000'000'000ULL));
  }

  /// A time on a uniformly chosen day with an hour-of-day bias toward
  /// 16:00-20:59 UTC.
  Timestamp biased_time(Timestamp lo, Timestamp hi) {
    static constexpr int kWeights[24] = {2, 1, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 4, 4, 4, 4, 8, 8, 8, 8, 8, 4, 4, 3};
    const Seconds first_day = lo.utc_seconds / kDay + 1, last_day = hi.utc_seconds / kDay - 1;
    const Seconds day = between(first_day, last_day);
    int total = 0;
    for (int w : kWeights) total += w;
    auto pick = int(uniform_below(rng_, std::uint64_t(total)));
    int hour = 0;
    while (pick >= kWeights[hour]) pick -= kWeights[hour++];
    return Timestamp{day * kDay + hour * kHour + between(0, kHour - 1)};
  }

  // -- accounts ------------------------------------------------------------

  AccountId make_account(std::uint64_t role, std::uint64_t i) {
    std::uint64_t state = splitmix64(cfg_.seed ^ (role << 56) ^ i);
    std::string hex = "0x";
    static constexpr char kDigits[] = "0123456789abcdef";
    while (hex.size() < 42) {
      state = splitmix64(state);
      for (int nib = 0; nib < 16 && hex.size() < 42; ++nib) hex += kDigits[(state >> (4 * nib)) & 0xF];
    }
    auto id = AccountId::parse(hex);
    if (!used_.insert(id).second) throw std::logic_error("synthetic account collision");
    return id;
  }

  void make_accounts() {
    for (std::uint64_t i = 0; i < cfg_.n_creators; ++i) creators_.push_back(make_account(1, i));
    for (std::uint64_t i = 0; i < cfg_.n_collectors; ++i) collectors_.push_back(make_account(2, i));
    for (std::uint64_t i = 0; i < cfg_.planted_collusions; ++i) colluders_.push_back(make_account(3, i));
  }

  const AccountId& collector_other_than(const AccountId& who) {
    while (true) {
      const auto& c = collectors_[uniform_below(rng_, collectors_.size())];
      if (c != who) return c;
    }
  }

  // -- events --------------------------------------------------------------

  void push(std::optional<TokenId> nft, EventKind kind, Timestamp ts, const AccountId& actor,
            std::optional<EthAmount> price = std::nullopt, std::optional<AccountId> to = std::nullopt) {
    Event ev;
    ev.ts = ts;
    ev.kind = kind;
    ev.actor = actor;
    ev.nft = std::move(nft);
    ev.price = price;
    ev.to = std::move(to);
    pending_.push_back({std::move(ev), seq_++});
  }

  struct Sale {
    AccountId winner;
    EthAmount price;
    Timestamp winning_bid;
    Timestamp settled;
  };

  /// Bids on an open listing and settles it. `buyer` forces a single
  /// winning bid from that account.
  Sale run_auction(const TokenId& nft, const AccountId& seller, EthAmount reserve, Timestamp listed,
                   std::optional<AccountId> buyer = std::nullopt) {
    static constexpr u128 kTick = 100'000'000'000'000ULL;  // 0.0001 ETH
    Timestamp t = listed + between(10 * kMinute, 3 * kDay);
    std::optional<Timestamp> end;
    std::vector<std::pair<AccountId, EthAmount>> bids;
    const std::uint64_t n_bids = buyer ? 1 : 1 + uniform_below(rng_, 4);
    EthAmount amount = reserve;
    for (std::uint64_t b = 0; b < n_bids; ++b) {
      if (b > 0) {
        const bool late = chance(0.3);
        const Seconds room = (*end - t) - 1;
        if (room < kMinute) break;
        t = late ? *end - between(1, std::min<Seconds>(room, kExtensionWindow - 1))
                 : t + between(kMinute, std::min<Seconds>(room, 20 * kHour));
        const auto units = (amount.atto / kTick) + 1 + uniform_below(rng_, 5000);
        amount = EthAmount::from_atto(units * kTick);
      } else {
        const auto units = (reserve.atto + kTick - 1) / kTick + uniform_below(rng_, 3000);
        amount = EthAmount::from_atto(units * kTick);
      }
      const AccountId& bidder = buyer ? *buyer : collector_other_than(seller);
      push(nft, EventKind::Bid, t, bidder, amount);
      end = advance_auction_end(end, t);
      bids.emplace_back(bidder, amount);
    }
    const Timestamp settled = *end + between(kMinute, 2 * kDay);
    const AccountId winner = bids.back().first;
    push(nft, EventKind::Settle, settled, chance(0.5) ? seller : winner);
    return {winner, bids.back().second, t, settled};
  }

  void script_nft(std::uint64_t i, bool collude, bool quick) {
    const TokenId nft = TokenId::parse("nft-" + std::to_string(i + 1));
    const AccountId creator = creators_[uniform_below(rng_, creators_.size())];
    Timestamp t = biased_time(cfg_.time_start, cfg_.time_end - kSynthNftSpan);
    push(nft, EventKind::Mint, t, creator);

    EthAmount reserve = sample_price();
    t = t + between(kMinute, 3 * kDay);
    push(nft, EventKind::List, t, creator, reserve);
    ++listed_;

    if (quick) {
      t = t + between(10 * kMinute, 6 * kHour);
      push(nft, EventKind::Unlist, t, creator);
      const Seconds gap = between(kMinute, kHour - kMinute);
      t = t + gap;
      reserve = sample_price();
      push(nft, EventKind::List, t, creator, reserve);
      truth_.quick_relist_nfts.push_back({nft, gap});
    }

    if (!collude && !chance(cfg_.first_sale_rate)) {
      // unsold; maybe withdrawn and put back up days later
      if (chance(0.5)) {
        t = t + between(kHour, 2 * kDay);
        push(nft, EventKind::Unlist, t, creator);
        if (chance(0.5)) {
          t = t + between(2 * kDay, 20 * kDay);
          push(nft, EventKind::List, t, creator, sample_price());
        }
      }
      return;
    }

    std::optional<AccountId> buyer;
    if (collude) buyer = colluders_[collusions_done_++];
    const Sale first = run_auction(nft, creator, reserve, t, buyer);
    ++sold_;
    t = first.settled;
    if (collude) {
      const Timestamp invite = first.winning_bid + between(kHour, 3 * kDay);
      push(std::nullopt, EventKind::Invite, invite, creator, std::nullopt, first.winner);
      truth_.collusion_pairs.push_back({creator, first.winner, nft});
      t = std::max(t, invite);
    }

    if (!chance(cfg_.relist_rate)) return;
    ++relisted_;
    t = t + between(kHour, 5 * kDay);
    const EthAmount relist_price = sample_price();
    push(nft, EventKind::List, t, first.winner, relist_price);
    if (chance(cfg_.second_sale_rate)) {
      run_auction(nft, first.winner, relist_price, t);
      ++resold_;
    } else if (chance(0.5)) {
      push(nft, EventKind::Unlist, t + between(kHour, 3 * kDay), first.winner);
    }
  }

  void script_cluster(std::size_t c) {
    const auto& spec = cfg_.transfer_clusters[c];
    std::vector<AccountId> members;
    for (std::uint64_t j = 0; j < spec.size; ++j) members.push_back(make_account(4 + c, j));
    truth_.cluster_sizes.push_back(spec.size);

    const std::string prefix = "cluster-" + std::to_string(c + 1) + "-";
    // a chain through every member connects the cluster
    const TokenId chain = TokenId::parse(prefix + "chain");
    Timestamp t = biased_time(cfg_.time_start, cfg_.time_end - kSynthNftSpan);
    push(chain, EventKind::Mint, t, members[0]);
    for (std::uint64_t j = 1; j < spec.size; ++j) {
      t = t + between(kHour, 2 * kDay);
      push(chain, EventKind::Transfer, t, members[j - 1], std::nullopt, members[j]);
      truth_.transfer_edges.push_back({members[j - 1], members[j], 1});
    }
    for (std::uint64_t x = 0; x + spec.size - 1 < spec.transfers; ++x) {
      const TokenId nft = TokenId::parse(prefix + std::to_string(x + 1));
      const auto from = uniform_below(rng_, spec.size);
      auto to = uniform_below(rng_, spec.size - 1);
      if (to >= from) ++to;
      Timestamp tm = biased_time(cfg_.time_start, cfg_.time_end - kSynthNftSpan);
      push(nft, EventKind::Mint, tm, members[from]);
      push(nft, EventKind::Transfer, tm + between(kMinute, 5 * kDay), members[from], std::nullopt, members[to]);
      truth_.transfer_edges.push_back({members[from], members[to], 1});
    }
  }

  const SynthConfig& cfg_;
  std::mt19937_64 rng_;
  std::set<AccountId> used_;
  std::vector<AccountId> creators_, collectors_, colluders_;
  std::size_t collusions_done_ = 0;
  std::vector<Pending> pending_;
  std::uint64_t seq_ = 0;
  std::uint64_t listed_ = 0, sold_ = 0, relisted_ = 0, resold_ = 0;
  GroundTruth truth_;
};

}  // namespace detail

/// Generates a strictly valid event log and the ground truth of its
/// planted patterns. Deterministic for a given config.
inline SynthOutput generate(const SynthConfig& config) { return detail::SynthBuilder(config).run(); }

}  // namespace nftf
