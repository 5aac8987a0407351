#pragma once

// Hand-written single-NFT event sequences with their expected verdicts.

#include <optional>
#include <string>
#include <vector>

#include "support.hpp"

namespace nftf::test {

struct StateCase {
  std::string name;
  std::vector<Event> events;
  std::optional<std::string> rule;  // nullopt = accepted
  std::string tx;                   // offending tx when rejected
  std::optional<AccountId> final_owner;
};

inline std::vector<StateCase> state_machine_cases() {
  const auto A = acct('a'), B = acct('b'), C = acct('c'), D = acct('d');
  const Timestamp t0 = at("2021-03-01T10:00:00Z");
  const Timestamp t1 = at("2021-03-01T12:00:00Z");
  std::vector<StateCase> cases;

  auto ok = [&](std::string name, const Script& s, AccountId owner) {
    cases.push_back({std::move(name), s.events(), std::nullopt, "", owner});
  };
  auto bad = [&](std::string name, const Script& s, std::string rule, std::string tx) {
    cases.push_back({std::move(name), s.events(), std::move(rule), std::move(tx), std::nullopt});
  };

  ok("happy path: single bid, settle 25h later",
     Script().mint(t0, A).list(t0 + 60, A, "0.5").bid(t1, B, "0.5").settle(t1 + 25 * kHour, A), B);

  ok("happy path: extended auction settled by winner exactly at end",
     Script()
         .mint(t0, A)
         .list(t0 + 60, A, "1")
         .bid(t1, B, "1")
         .bid(t1 + 23 * kHour + 55 * kMinute, C, "1.5")
         .settle(t1 + 24 * kHour + 10 * kMinute, C),
     C);

  ok("happy path: unlist, relist, sell, new owner transfers",
     Script()
         .mint(t0, A)
         .list(t0 + 60, A, "2")
         .unlist(t0 + 120, A)
         .list(t0 + 180, A, "1.5")
         .bid(t1, B, "1.6")
         .settle(t1 + kAuctionDuration, B)
         .transfer(t1 + 2 * kAuctionDuration, B, D),
     D);

  ok("happy path: chain of transfers",
     Script().mint(t0, A).transfer(t1, A, B).transfer(t1 + 60, B, C).transfer(t1 + 120, C, A), A);

  ok("happy path: resale by the first buyer",
     Script()
         .mint(t0, A)
         .list(t0 + 60, A, "0.666")
         .bid(t1, B, "0.666")
         .settle(t1 + kAuctionDuration, A)
         .list(t1 + 2 * kAuctionDuration, B, "50")
         .bid(t1 + 3 * kAuctionDuration, C, "50")
         .settle(t1 + 5 * kAuctionDuration, B),
     C);

  bad("bid before any listing", Script().mint(t0, A).bid(t1, B, "1"), "bid-without-listing", "t0002");

  bad("settle before the extended end",
      Script()
          .mint(t0, A)
          .list(t0 + 60, A, "1")
          .bid(t1, B, "1")
          .bid(t1 + 23 * kHour + 50 * kMinute, C, "2")
          .settle(t1 + 24 * kHour + 1 * kMinute, A),
      "settle-before-end", "t0005");

  bad("transfer during a live auction",
      Script().mint(t0, A).list(t0 + 60, A, "1").bid(t1, B, "1").transfer(t1 + kHour, A, D),
      "transfer-during-auction", "t0004");

  bad("unlist after a bid", Script().mint(t0, A).list(t0 + 60, A, "1").bid(t1, B, "1").unlist(t1 + 60, A),
      "unlist-after-bid", "t0004");

  bad("first bid below reserve", Script().mint(t0, A).list(t0 + 60, A, "1").bid(t1, B, "0.99"), "bid-below-reserve",
      "t0003");

  bad("bid not above the previous bid",
      Script().mint(t0, A).list(t0 + 60, A, "1").bid(t1, B, "1.2").bid(t1 + 60, C, "1.2"), "bid-not-higher", "t0004");

  bad("bid at the auction end",
      Script().mint(t0, A).list(t0 + 60, A, "1").bid(t1, B, "1").bid(t1 + kAuctionDuration, C, "2"),
      "bid-after-end", "t0004");

  bad("listing by someone other than the owner", Script().mint(t0, A).list(t0 + 60, B, "1"), "list-by-non-owner",
      "t0002");

  bad("second mint", Script().mint(t0, A).mint(t0 + 60, A), "duplicate-mint", "t0002");

  bad("event before mint", Script().list(t0, A, "1").mint(t0 + 60, A), "mint-not-first", "t0001");

  bad("settle by a third party",
      Script().mint(t0, A).list(t0 + 60, A, "1").bid(t1, B, "1").settle(t1 + kAuctionDuration, D),
      "settle-by-third-party", "t0004");

  bad("listing twice", Script().mint(t0, A).list(t0 + 60, A, "1").list(t0 + 120, A, "2"), "already-listed", "t0003");

  bad("relist while the previous auction awaits settlement",
      Script().mint(t0, A).list(t0 + 60, A, "1").bid(t1, B, "1").list(t1 + 2 * kAuctionDuration, A, "3"),
      "list-during-auction", "t0004");

  bad("transfer by a non-owner", Script().mint(t0, A).transfer(t1, B, C), "transfer-by-non-owner", "t0002");

  bad("settling twice",
      Script()
          .mint(t0, A)
          .list(t0 + 60, A, "1")
          .bid(t1, B, "1")
          .settle(t1 + kAuctionDuration, A)
          .settle(t1 + kAuctionDuration + 60, B),
      "settle-without-auction", "t0005");

  bad("previous owner lists after the sale",
      Script()
          .mint(t0, A)
          .list(t0 + 60, A, "1")
          .bid(t1, B, "1")
          .settle(t1 + kAuctionDuration, A)
          .list(t1 + 2 * kAuctionDuration, A, "1"),
      "list-by-non-owner", "t0005");

  bad("transfer while listed", Script().mint(t0, A).list(t0 + 60, A, "1").transfer(t1, A, B), "transfer-while-listed",
      "t0003");

  bad("unlist with nothing listed", Script().mint(t0, A).unlist(t1, A), "unlist-without-listing", "t0002");

  return cases;
}

}  // namespace nftf::test
