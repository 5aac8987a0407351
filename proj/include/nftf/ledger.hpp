#pragma once

// Per-NFT validation against the marketplace rules, auction reconstruction
// and the Ledger that groups a parsed event log by token.
//
// Rules enforced while replaying one NFT's events in (ts, tx) order:
//   mint      first event, exactly once; actor becomes creator and owner
//   list      by the owner, no open listing, no unsettled auction
//   unlist    by the owner, open listing with zero bids
//   bid       open listing; first bid >= reserve, later bids > previous;
//             strictly before the computed auction end
//   settle    at or after the auction end, by seller or winner, once;
//             ownership moves to the winner
//   transfer  by the owner while nothing is listed; ownership moves to `to`
//
// The auction starts at the first bid and ends 24h later. A bid arriving
// within the last 15 minutes moves the end to bid time + 15 minutes.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "nftf/event.hpp"
#include "nftf/parallel.hpp"
#include "nftf/types.hpp"

namespace nftf {

inline constexpr Seconds kAuctionDuration = 24 * kHour;
inline constexpr Seconds kExtensionWindow = 15 * kMinute;

/// Auction end after a bid at `bid_ts`, given the end computed so far
/// (nullopt before the first bid).
inline Timestamp advance_auction_end(std::optional<Timestamp> end, Timestamp bid_ts) {
  if (!end) return bid_ts + kAuctionDuration;
  if (bid_ts > *end - kExtensionWindow) return std::max(*end, bid_ts + kExtensionWindow);
  return *end;
}

struct ValidationError {
  std::string nft;   // empty for events without a token
  std::string rule;  // e.g. "bid-without-listing"
  std::string tx;    // offending event
  std::string detail;

  friend bool operator==(const ValidationError&, const ValidationError&) = default;
};

/// Thrown by validate_history.
struct HistoryRejected : std::runtime_error {
  explicit HistoryRejected(ValidationError e)
      : std::runtime_error(e.nft + ": " + e.rule + " at " + e.tx + (e.detail.empty() ? "" : " (" + e.detail + ")")),
        error(std::move(e)) {}
  ValidationError error;
};

struct OwnerChange {
  Timestamp ts;
  AccountId owner;
  friend bool operator==(const OwnerChange&, const OwnerChange&) = default;
};

struct NftHistory {
  TokenId nft;
  AccountId creator;
  std::vector<Event> events;
  std::vector<OwnerChange> owner_timeline;

  /// Owner at time t: the last ownership change at or before t.
  std::optional<AccountId> owner_at(Timestamp t) const {
    std::optional<AccountId> out;
    for (const auto& c : owner_timeline) {
      if (c.ts > t) break;
      out = c.owner;
    }
    return out;
  }

  friend bool operator==(const NftHistory&, const NftHistory&) = default;
};

struct BidRecord {
  Timestamp ts;
  AccountId bidder;
  EthAmount amount;
  std::string tx;
  friend bool operator==(const BidRecord&, const BidRecord&) = default;
};

enum class ListingOutcome {
  Unlisted,   // withdrawn before any bid
  Open,       // still listed at end of log, no bids
  Unsettled,  // received bids, no settle in the log
  Settled,
};

/// One listing, from its List event to whatever closed it.
struct Listing {
  AccountId seller;
  EthAmount reserve;
  Timestamp listed_at;
  std::string list_tx;
  std::vector<BidRecord> bids;
  std::optional<Timestamp> end;        // set once bids exist
  std::optional<Timestamp> closed_at;  // unlist or settle time
  std::optional<AccountId> settled_by;
  ListingOutcome outcome = ListingOutcome::Open;

  friend bool operator==(const Listing&, const Listing&) = default;
};

struct AuctionRecord {
  TokenId nft;
  AccountId seller;
  int index = 0;  // 1 = first bid-receiving auction of this NFT
  EthAmount reserve;
  std::vector<BidRecord> bids;
  Timestamp start;
  Timestamp end;
  std::optional<AccountId> winner;
  std::optional<EthAmount> settle_price;
  bool settled = false;
  std::optional<Timestamp> settle_ts;

  const BidRecord& winning_bid() const { return bids.back(); }

  friend bool operator==(const AuctionRecord&, const AuctionRecord&) = default;
};

namespace detail {

/// Replays one NFT's events through the rule set.
class HistoryReplay {
 public:
  explicit HistoryReplay(TokenId nft) : nft_(std::move(nft)) {}

  void apply(const Event& ev) {
    if (!minted_ && ev.kind != EventKind::Mint) fail("mint-not-first", ev);
    switch (ev.kind) {
      case EventKind::Mint: on_mint(ev); break;
      case EventKind::List: on_list(ev); break;
      case EventKind::Unlist: on_unlist(ev); break;
      case EventKind::Bid: on_bid(ev); break;
      case EventKind::Settle: on_settle(ev); break;
      case EventKind::Transfer: on_transfer(ev); break;
      case EventKind::Invite: fail("invite-in-history", ev); break;
    }
  }

  const AccountId& creator() const { return creator_; }
  const std::vector<OwnerChange>& timeline() const { return timeline_; }
  const std::vector<Listing>& listings() const { return listings_; }

 private:
  [[noreturn]] void fail(const char* rule, const Event& ev, std::string detail = {}) const {
    throw HistoryRejected(ValidationError{nft_.str(), rule, ev.tx, std::move(detail)});
  }

  Listing* open_listing() {
    if (listings_.empty()) return nullptr;
    auto& l = listings_.back();
    return (l.outcome == ListingOutcome::Open || l.outcome == ListingOutcome::Unsettled) ? &l : nullptr;
  }

  void on_mint(const Event& ev) {
    if (minted_) fail("duplicate-mint", ev);
    minted_ = true;
    creator_ = owner_ = ev.actor;
    timeline_.push_back({ev.ts, ev.actor});
  }

  void on_list(const Event& ev) {
    if (const Listing* l = open_listing())
      fail(l->bids.empty() ? "already-listed" : "list-during-auction", ev);
    if (ev.actor != owner_) fail("list-by-non-owner", ev);
    Listing l;
    l.seller = ev.actor;
    l.reserve = *ev.price;
    l.listed_at = ev.ts;
    l.list_tx = ev.tx;
    listings_.push_back(std::move(l));
  }

  void on_unlist(const Event& ev) {
    Listing* l = open_listing();
    if (!l) fail("unlist-without-listing", ev);
    if (!l->bids.empty()) fail("unlist-after-bid", ev);
    if (ev.actor != owner_) fail("unlist-by-non-owner", ev);
    l->outcome = ListingOutcome::Unlisted;
    l->closed_at = ev.ts;
  }

  void on_bid(const Event& ev) {
    Listing* l = open_listing();
    if (!l) fail("bid-without-listing", ev);
    const EthAmount amount = *ev.price;
    if (l->bids.empty()) {
      if (amount < l->reserve)
        fail("bid-below-reserve", ev, amount.to_string() + " < " + l->reserve.to_string());
    } else {
      if (ev.ts >= *l->end) fail("bid-after-end", ev, "auction ended " + l->end->to_string());
      if (amount <= l->bids.back().amount)
        fail("bid-not-higher", ev, amount.to_string() + " <= " + l->bids.back().amount.to_string());
    }
    l->end = advance_auction_end(l->end, ev.ts);
    l->bids.push_back({ev.ts, ev.actor, amount, ev.tx});
    l->outcome = ListingOutcome::Unsettled;
  }

  void on_settle(const Event& ev) {
    Listing* l = open_listing();
    if (!l || l->bids.empty()) fail("settle-without-auction", ev);
    if (ev.ts < *l->end) fail("settle-before-end", ev, "auction ends " + l->end->to_string());
    const AccountId& winner = l->bids.back().bidder;
    if (ev.actor != l->seller && ev.actor != winner) fail("settle-by-third-party", ev);
    l->outcome = ListingOutcome::Settled;
    l->closed_at = ev.ts;
    l->settled_by = ev.actor;
    owner_ = winner;
    timeline_.push_back({ev.ts, winner});
  }

  void on_transfer(const Event& ev) {
    if (const Listing* l = open_listing())
      fail(l->bids.empty() ? "transfer-while-listed" : "transfer-during-auction", ev);
    if (ev.actor != owner_) fail("transfer-by-non-owner", ev);
    owner_ = *ev.to;
    timeline_.push_back({ev.ts, *ev.to});
  }

  TokenId nft_;
  bool minted_ = false;
  AccountId creator_;
  AccountId owner_;
  std::vector<OwnerChange> timeline_;
  std::vector<Listing> listings_;
};

}  // namespace detail

/// Validates one NFT's events (already sorted by (ts, tx), one token).
/// Throws HistoryRejected on the first violated rule.
inline NftHistory validate_history(std::vector<Event> events) {
  if (events.empty()) throw std::invalid_argument("validate_history: no events");
  const TokenId nft = events.front().nft.value_or(TokenId{});
  detail::HistoryReplay replay(nft);
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& ev = events[i];
    if (ev.nft != events.front().nft)
      throw HistoryRejected({nft.str(), "mixed-tokens", ev.tx, "events of another token"});
    if (i > 0 && !event_before(events[i - 1], ev))
      throw HistoryRejected({nft.str(), "unordered-events", ev.tx, "events must be sorted by (ts, tx)"});
    replay.apply(ev);
  }
  return NftHistory{nft, replay.creator(), std::move(events), replay.timeline()};
}

/// Every listing of a valid history, in order, including ones without bids.
inline std::vector<Listing> reconstruct_listings(const NftHistory& history) {
  detail::HistoryReplay replay(history.nft);
  for (const auto& ev : history.events) replay.apply(ev);
  return replay.listings();
}

/// One record per listing that received at least one bid.
inline std::vector<AuctionRecord> reconstruct_auctions(const NftHistory& history) {
  std::vector<AuctionRecord> out;
  int index = 0;
  for (auto& l : reconstruct_listings(history)) {
    if (l.bids.empty()) continue;
    AuctionRecord a;
    a.nft = history.nft;
    a.seller = l.seller;
    a.index = ++index;
    a.reserve = l.reserve;
    a.start = l.bids.front().ts;
    a.end = *l.end;
    a.winner = l.bids.back().bidder;
    a.settled = l.outcome == ListingOutcome::Settled;
    if (a.settled) {
      a.settle_price = l.bids.back().amount;
      a.settle_ts = l.closed_at;
    }
    a.bids = std::move(l.bids);
    out.push_back(std::move(a));
  }
  return out;
}

struct InviteRecord {
  Timestamp ts;
  AccountId inviter;
  AccountId invitee;
  std::string tx;
  friend bool operator==(const InviteRecord&, const InviteRecord&) = default;
};

struct Ledger {
  std::map<TokenId, NftHistory> histories;
  std::vector<InviteRecord> invites;  // sorted by (ts, tx)
  std::set<AccountId> accounts;

  friend bool operator==(const Ledger&, const Ledger&) = default;
};

enum class BuildMode {
  Strict,    // any error: no ledger
  FailSoft,  // invalid histories are dropped and reported
};

struct LedgerBuild {
  std::optional<Ledger> ledger;
  std::vector<ValidationError> errors;  // ordered by token id, then tx
};

inline LedgerBuild build_ledger(const std::vector<Event>& events, BuildMode mode = BuildMode::Strict) {
  LedgerBuild out;

  std::map<std::string, std::size_t> tx_seen;
  std::set<std::string> bad_tokens;
  for (const auto& ev : events) {
    if (++tx_seen[ev.tx] == 2) {
      const std::string nft = ev.nft ? ev.nft->str() : std::string{};
      out.errors.push_back({nft, "duplicate-tx", ev.tx, "tx id appears more than once"});
      if (ev.nft) bad_tokens.insert(nft);
    }
  }

  Ledger ledger;
  std::map<TokenId, std::vector<Event>> grouped;
  for (const auto& ev : events) {
    ledger.accounts.insert(ev.actor);
    if (ev.to) ledger.accounts.insert(*ev.to);
    if (ev.kind == EventKind::Invite)
      ledger.invites.push_back({ev.ts, ev.actor, *ev.to, ev.tx});
    else
      grouped[*ev.nft].push_back(ev);
  }
  std::sort(ledger.invites.begin(), ledger.invites.end(), [](const auto& a, const auto& b) {
    return a.ts != b.ts ? a.ts < b.ts : a.tx < b.tx;
  });

  std::vector<std::pair<TokenId, std::vector<Event>>> work(grouped.begin(), grouped.end());
  std::vector<std::optional<NftHistory>> histories(work.size());
  std::vector<std::optional<ValidationError>> failures(work.size());
  parallel_for(work.size(), [&](std::size_t i) {
    auto& evs = work[i].second;
    std::sort(evs.begin(), evs.end(), event_before);
    try {
      histories[i] = validate_history(evs);
    } catch (const HistoryRejected& e) {
      failures[i] = e.error;
    }
  });

  for (std::size_t i = 0; i < work.size(); ++i) {
    if (failures[i]) out.errors.push_back(*failures[i]);
    else if (!bad_tokens.count(work[i].first.str())) ledger.histories.emplace(work[i].first, std::move(*histories[i]));
  }
  std::stable_sort(out.errors.begin(), out.errors.end(), [](const auto& a, const auto& b) {
    return a.nft != b.nft ? a.nft < b.nft : a.tx < b.tx;
  });

  if (mode == BuildMode::Strict && !out.errors.empty()) return out;
  out.ledger = std::move(ledger);
  return out;
}

}  // namespace nftf
