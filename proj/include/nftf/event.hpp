#pragma once

// Marketplace events and the newline-delimited JSON event log.
//
// One record per line, fields exactly {tx, ts, kind, actor, nft?, price?, to?}:
//   list, bid          require price
//   transfer, invite   require to
//   invite             carries no nft; every other kind requires nft
// Fields that do not belong to a kind are rejected.

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nftf/types.hpp"

namespace nftf {

enum class EventKind { Mint, List, Unlist, Bid, Settle, Transfer, Invite };

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Mint: return "mint";
    case EventKind::List: return "list";
    case EventKind::Unlist: return "unlist";
    case EventKind::Bid: return "bid";
    case EventKind::Settle: return "settle";
    case EventKind::Transfer: return "transfer";
    case EventKind::Invite: return "invite";
  }
  return "?";
}

inline std::optional<EventKind> parse_kind(std::string_view s) {
  for (auto k : {EventKind::Mint, EventKind::List, EventKind::Unlist, EventKind::Bid, EventKind::Settle,
                 EventKind::Transfer, EventKind::Invite})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline bool kind_requires_price(EventKind k) { return k == EventKind::List || k == EventKind::Bid; }
inline bool kind_requires_to(EventKind k) { return k == EventKind::Transfer || k == EventKind::Invite; }
inline bool kind_requires_nft(EventKind k) { return k != EventKind::Invite; }

struct Event {
  std::string tx;
  Timestamp ts;
  EventKind kind = EventKind::Mint;
  AccountId actor;
  std::optional<TokenId> nft;
  std::optional<EthAmount> price;
  std::optional<AccountId> to;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Sort key used everywhere events are ordered: (ts, tx).
inline bool event_before(const Event& a, const Event& b) {
  if (a.ts != b.ts) return a.ts < b.ts;
  return a.tx < b.tx;
}

struct ParseError {
  std::size_t line = 0;  // 1-based
  std::string cause;

  friend bool operator==(const ParseError&, const ParseError&) = default;
};

struct ParsedLog {
  std::vector<Event> events;
  std::vector<ParseError> errors;
};

/// Parses one JSON record. Throws FormatError describing the first problem.
inline Event parse_event(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("record is not a JSON object");

  static constexpr std::string_view kFields[] = {"tx", "ts", "kind", "actor", "nft", "price", "to"};
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (auto f : kFields) known = known || key == f;
    if (!known) throw FormatError("unknown field '" + key + "'");
  }

  auto str_field = [&](const char* name) -> std::optional<std::string> {
    auto it = j.find(name);
    if (it == j.end()) return std::nullopt;
    if (!it->is_string()) throw FormatError(std::string("field '") + name + "' must be a string");
    return it->get<std::string>();
  };
  auto required = [&](const char* name) {
    auto v = str_field(name);
    if (!v) throw FormatError(std::string("missing ") + name);
    return *v;
  };

  Event ev;
  ev.tx = required("tx");
  if (ev.tx.empty()) throw FormatError("tx must be nonempty");
  ev.ts = Timestamp::parse(required("ts"));
  const std::string kind = required("kind");
  const auto k = parse_kind(kind);
  if (!k) throw FormatError("unknown kind '" + kind + "'");
  ev.kind = *k;
  ev.actor = AccountId::parse(required("actor"));

  const auto nft = str_field("nft");
  const auto price = str_field("price");
  const auto to = str_field("to");

  if (kind_requires_nft(ev.kind) && !nft) throw FormatError("missing nft");
  if (!kind_requires_nft(ev.kind) && nft) throw FormatError("nft not allowed for " + kind);
  if (kind_requires_price(ev.kind) && !price) throw FormatError("missing price");
  if (!kind_requires_price(ev.kind) && price) throw FormatError("price not allowed for " + kind);
  if (kind_requires_to(ev.kind) && !to) throw FormatError("missing to");
  if (!kind_requires_to(ev.kind) && to) throw FormatError("to not allowed for " + kind);

  if (nft) ev.nft = TokenId::parse(*nft);
  if (price) ev.price = EthAmount::parse(*price);
  if (to) ev.to = AccountId::parse(*to);
  return ev;
}

/// Parses a whole log. Never aborts: bad lines become ParseErrors.
/// Blank lines are skipped.
inline ParsedLog parse_event_log(std::istream& in) {
  ParsedLog out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.events.push_back(parse_event(line));
    } catch (const FormatError& e) {
      out.errors.push_back({lineno, e.what()});
    }
  }
  return out;
}

/// One JSON record with fields in canonical order, no trailing newline.
inline std::string serialize_event(const Event& ev) {
  nlohmann::ordered_json j;
  j["tx"] = ev.tx;
  j["ts"] = ev.ts.to_string();
  j["kind"] = std::string(to_string(ev.kind));
  j["actor"] = ev.actor.str();
  if (ev.nft) j["nft"] = ev.nft->str();
  if (ev.price) j["price"] = ev.price->to_string();
  if (ev.to) j["to"] = ev.to->str();
  return j.dump();
}

}  // namespace nftf
