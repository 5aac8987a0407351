#pragma once

// Marketplace statistics over a validated Ledger: activity series, the
// first/second auction funnel, resale price changes, unlist-relist gaps,
// invite-after-purchase detection and the transferred-NFT sale breakdown.
//
// "Sold" always means a settled auction. A sale epoch is the run of listings
// up to and including a settle; the first epoch starts at the first listing.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nftf/ledger.hpp"
#include "nftf/types.hpp"

namespace nftf {

// ---------------------------------------------------------------------------
// Activity

enum class Granularity { Monthly, HourOfDay };

/// Mint and bid counts per bucket. Monthly keys are "YYYY-MM"; hour-of-day
/// keys are the UTC hour zero-padded to two digits so map order is numeric.
struct ActivitySeries {
  Granularity granularity = Granularity::Monthly;
  std::map<std::string, std::uint64_t> mint_counts;
  std::map<std::string, std::uint64_t> bid_counts;

  friend bool operator==(const ActivitySeries&, const ActivitySeries&) = default;
};

inline std::string activity_bucket(Timestamp ts, Granularity g) {
  if (g == Granularity::Monthly) return ts.month_key();
  const int h = ts.hour_of_day();
  return std::string{char('0' + h / 10), char('0' + h % 10)};
}

inline ActivitySeries activity_series(const Ledger& ledger, Granularity g) {
  ActivitySeries out;
  out.granularity = g;
  for (const auto& [_, h] : ledger.histories) {
    for (const auto& ev : h.events) {
      if (ev.kind == EventKind::Mint) ++out.mint_counts[activity_bucket(ev.ts, g)];
      if (ev.kind == EventKind::Bid) ++out.bid_counts[activity_bucket(ev.ts, g)];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Funnel

struct FunnelStats {
  std::uint64_t first_listed = 0;
  std::uint64_t first_sold = 0;
  std::uint64_t relisted_after_sale = 0;
  std::uint64_t second_sold = 0;
  double first_success_rate = 0;
  double relist_rate = 0;
  double second_success_rate = 0;

  static FunnelStats from_counts(std::uint64_t listed, std::uint64_t sold, std::uint64_t relisted,
                                 std::uint64_t resold) {
    FunnelStats f{listed, sold, relisted, resold};
    f.first_success_rate = ratio(sold, listed);
    f.relist_rate = ratio(relisted, sold);
    f.second_success_rate = ratio(resold, relisted);
    return f;
  }

  friend bool operator==(const FunnelStats&, const FunnelStats&) = default;
};

namespace detail {

/// Position of the first settled listing, if any.
inline std::optional<std::size_t> first_sale(const std::vector<Listing>& ls) {
  for (std::size_t i = 0; i < ls.size(); ++i)
    if (ls[i].outcome == ListingOutcome::Settled) return i;
  return std::nullopt;
}

inline std::optional<std::size_t> next_sale(const std::vector<Listing>& ls, std::size_t after) {
  for (std::size_t i = after + 1; i < ls.size(); ++i)
    if (ls[i].outcome == ListingOutcome::Settled) return i;
  return std::nullopt;
}

}  // namespace detail

inline FunnelStats auction_funnel_stats(const Ledger& ledger) {
  std::uint64_t listed = 0, sold = 0, relisted = 0, resold = 0;
  for (const auto& [_, h] : ledger.histories) {
    const auto ls = reconstruct_listings(h);
    if (ls.empty()) continue;
    ++listed;
    const auto first = detail::first_sale(ls);
    if (!first) continue;
    ++sold;
    if (*first + 1 >= ls.size()) continue;
    ++relisted;
    if (detail::next_sale(ls, *first)) ++resold;
  }
  return FunnelStats::from_counts(listed, sold, relisted, resold);
}

// ---------------------------------------------------------------------------
// Resale price changes

struct ResaleRecord {
  TokenId nft;
  EthAmount first_settle;
  EthAmount second_list;
  Rational pct_change;  // (second_list - first_settle) / first_settle * 100
  bool second_sold = false;
  std::optional<EthAmount> second_settle;

  friend bool operator==(const ResaleRecord&, const ResaleRecord&) = default;
};

inline Rational percent_change(EthAmount from, EthAmount to) {
  return (Rational::of(to) - Rational::of(from)) * Rational(100) / Rational::of(from);
}

/// One record per NFT whose first sale was followed by another listing,
/// sorted by pct_change ascending (ties by token id).
inline std::vector<ResaleRecord> resale_price_changes(const Ledger& ledger) {
  std::vector<ResaleRecord> out;
  for (const auto& [nft, h] : ledger.histories) {
    const auto ls = reconstruct_listings(h);
    const auto first = detail::first_sale(ls);
    if (!first || *first + 1 >= ls.size()) continue;
    ResaleRecord r;
    r.nft = nft;
    r.first_settle = ls[*first].bids.back().amount;
    r.second_list = ls[*first + 1].reserve;
    r.pct_change = percent_change(r.first_settle, r.second_list);
    if (const auto again = detail::next_sale(ls, *first)) {
      r.second_sold = true;
      r.second_settle = ls[*again].bids.back().amount;
    }
    out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.pct_change < b.pct_change; });
  return out;
}

// ---------------------------------------------------------------------------
// Unlist-relist gaps

inline constexpr Seconds kUnbounded = std::numeric_limits<Seconds>::max();

/// Bucket upper bounds; bucket i is [edge[i-1], edge[i]) with edge[-1] = 0.
inline std::vector<Seconds> default_gap_edges() { return {kHour, kDay, 5 * kDay, 30 * kDay, kUnbounded}; }

struct GapHistogram {
  std::vector<Seconds> bucket_edges;
  std::vector<std::uint64_t> counts;
  std::vector<Rational> fractions;

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }

  friend bool operator==(const GapHistogram&, const GapHistogram&) = default;
};

/// Gap between each Unlist and the next List of the same NFT.
inline std::vector<Seconds> unlist_relist_gap_values(const Ledger& ledger) {
  std::vector<Seconds> gaps;
  for (const auto& [_, h] : ledger.histories) {
    const Event* unlist = nullptr;
    for (const auto& ev : h.events) {
      if (ev.kind == EventKind::Unlist) unlist = &ev;
      else if (ev.kind == EventKind::List && unlist) {
        gaps.push_back(ev.ts - unlist->ts);
        unlist = nullptr;
      }
    }
  }
  return gaps;
}

/// Histogram of unlist-relist gaps. Edges must be strictly increasing and
/// positive; when the last edge is finite an unbounded bucket is appended.
inline GapHistogram unlist_relist_gaps(const Ledger& ledger, std::vector<Seconds> edges = default_gap_edges()) {
  if (edges.empty()) throw std::invalid_argument("gap bucket edges must be nonempty");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i] <= 0) throw std::invalid_argument("gap bucket edges must be positive");
    if (i > 0 && edges[i] <= edges[i - 1]) throw std::invalid_argument("gap bucket edges must be strictly increasing");
  }
  if (edges.back() != kUnbounded) edges.push_back(kUnbounded);

  GapHistogram out;
  out.bucket_edges = edges;
  out.counts.assign(edges.size(), 0);
  for (Seconds gap : unlist_relist_gap_values(ledger)) {
    const auto it = std::upper_bound(edges.begin(), edges.end(), gap);
    // The last edge is unbounded, so every gap below it lands in a bucket.
    ++out.counts[std::min<std::size_t>(std::size_t(it - edges.begin()), edges.size() - 1)];
  }
  const auto total = out.total();
  for (auto c : out.counts) out.fractions.push_back(total == 0 ? Rational(0) : Rational(i128(c), i128(total)));
  return out;
}

// ---------------------------------------------------------------------------
// Invite after purchase

struct CollusionCandidate {
  AccountId seller;
  AccountId buyer;
  TokenId nft;
  EthAmount settle_price;
  Timestamp settle_ts;
  Timestamp winning_bid_ts;
  Timestamp invite_ts;

  friend bool operator==(const CollusionCandidate&, const CollusionCandidate&) = default;
};

struct InvitePurchaseScan {
  std::vector<CollusionCandidate> candidates;
  EthAmount mean_price;  // floor of the exact mean, in attoether
  bool empty = true;
};

/// A settled auction sold by S and won by B is a candidate when S invited B
/// strictly after B's winning bid (and within max_gap of it, when given).
/// The earliest qualifying invite is reported.
inline InvitePurchaseScan detect_invite_purchases(const Ledger& ledger, std::optional<Seconds> max_gap = std::nullopt) {
  std::map<std::pair<AccountId, AccountId>, std::vector<Timestamp>> invites;
  for (const auto& inv : ledger.invites) invites[{inv.inviter, inv.invitee}].push_back(inv.ts);

  InvitePurchaseScan out;
  for (const auto& [nft, h] : ledger.histories) {
    for (const auto& a : reconstruct_auctions(h)) {
      if (!a.settled) continue;
      const auto it = invites.find({a.seller, *a.winner});
      if (it == invites.end()) continue;
      const Timestamp bid_ts = a.winning_bid().ts;
      for (Timestamp t : it->second) {  // sorted ascending
        if (t <= bid_ts) continue;
        if (max_gap && t - bid_ts > *max_gap) break;
        out.candidates.push_back({a.seller, *a.winner, nft, *a.settle_price, *a.settle_ts, bid_ts, t});
        break;
      }
    }
  }
  if (!out.candidates.empty()) {
    u128 sum = 0;
    for (const auto& c : out.candidates) sum += c.settle_price.atto;
    out.mean_price = EthAmount::from_atto(sum / out.candidates.size());
    out.empty = false;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transferred NFTs

struct TransferBreakdown {
  std::uint64_t transferred_total = 0;
  std::uint64_t transferred_ever_sold = 0;
  double fraction = 0;

  friend bool operator==(const TransferBreakdown&, const TransferBreakdown&) = default;
};

inline TransferBreakdown transferred_sold_breakdown(const Ledger& ledger) {
  TransferBreakdown out;
  for (const auto& [_, h] : ledger.histories) {
    bool transferred = false, sold = false;
    for (const auto& ev : h.events) {
      transferred = transferred || ev.kind == EventKind::Transfer;
      sold = sold || ev.kind == EventKind::Settle;
    }
    if (!transferred) continue;
    ++out.transferred_total;
    if (sold) ++out.transferred_ever_sold;
  }
  out.fraction = ratio(out.transferred_ever_sold, out.transferred_total);
  return out;
}

}  // namespace nftf
