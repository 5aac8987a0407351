#pragma once

// Builders for hand-written event fixtures.

#include <string>
#include <vector>

#include "nftf/nftf.hpp"

namespace nftf::test {

/// "0x" followed by 40 copies of `c` (a hex digit).
inline AccountId acct(char c) { return AccountId::parse("0x" + std::string(40, c)); }

inline Timestamp at(const char* iso) { return Timestamp::parse(iso); }

inline EthAmount eth(const char* s) { return EthAmount::parse(s); }

/// Sequential builder: every call stamps a fresh tx id in call order.
class Script {
 public:
  explicit Script(std::string nft = "n1", std::string tx_prefix = "t") : nft_(std::move(nft)), prefix_(std::move(tx_prefix)) {}

  Script& mint(Timestamp ts, AccountId who) { return add(EventKind::Mint, ts, who); }
  Script& list(Timestamp ts, AccountId who, const char* price) { return add(EventKind::List, ts, who, eth(price)); }
  Script& unlist(Timestamp ts, AccountId who) { return add(EventKind::Unlist, ts, who); }
  Script& bid(Timestamp ts, AccountId who, const char* price) { return add(EventKind::Bid, ts, who, eth(price)); }
  Script& settle(Timestamp ts, AccountId who) { return add(EventKind::Settle, ts, who); }
  Script& transfer(Timestamp ts, AccountId from, AccountId to) {
    return add(EventKind::Transfer, ts, from, std::nullopt, to);
  }
  Script& invite(Timestamp ts, AccountId from, AccountId to) {
    Event ev;
    ev.tx = next_tx();
    ev.ts = ts;
    ev.kind = EventKind::Invite;
    ev.actor = from;
    ev.to = to;
    events_.push_back(ev);
    return *this;
  }

  const std::vector<Event>& events() const { return events_; }
  Script& append(const Script& other) {
    events_.insert(events_.end(), other.events_.begin(), other.events_.end());
    return *this;
  }

 private:
  std::string next_tx() {
    std::string n = std::to_string(++count_);
    return prefix_ + std::string(4 - std::min<std::size_t>(4, n.size()), '0') + n;
  }

  Script& add(EventKind kind, Timestamp ts, AccountId who, std::optional<EthAmount> price = std::nullopt,
              std::optional<AccountId> to = std::nullopt) {
    Event ev;
    ev.tx = next_tx();
    ev.ts = ts;
    ev.kind = kind;
    ev.actor = std::move(who);
    ev.nft = TokenId::parse(nft_);
    ev.price = price;
    ev.to = std::move(to);
    events_.push_back(std::move(ev));
    return *this;
  }

  std::string nft_;
  std::string prefix_;
  int count_ = 0;
  std::vector<Event> events_;
};

inline Ledger must_build(const std::vector<Event>& events) {
  auto b = build_ledger(events, BuildMode::Strict);
  if (!b.ledger) throw std::runtime_error("fixture failed validation: " + b.errors.front().rule + " at " + b.errors.front().tx);
  return std::move(*b.ledger);
}

}  // namespace nftf::test
