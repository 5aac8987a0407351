#include <gtest/gtest.h>

#include "nftf/analytics.hpp"
#include "support.hpp"

using namespace nftf;
using namespace nftf::test;

namespace {

const AccountId A = acct('a'), B = acct('b'), C = acct('c'), D = acct('d');
const Timestamp T0 = at("2021-03-01T00:00:00Z");

/// Mint, list at `reserve`, one bid at `price`, settle by the seller.
Script& sell(Script& s, Timestamp t, AccountId seller, AccountId buyer, const char* price) {
  return s.list(t, seller, price).bid(t + 60, buyer, price).settle(t + 60 + kAuctionDuration, seller);
}

}  // namespace

TEST(Activity, MonthlyAndHourly) {
  Script s1("n1", "a"), s2("n2", "b");
  s1.mint(at("2021-03-05T16:10:00Z"), A).list(at("2021-03-06T00:00:00Z"), A, "1").bid(at("2021-04-01T17:00:00Z"), B, "1");
  s2.mint(at("2021-04-02T16:59:59Z"), C);
  Script all;
  all.append(s1).append(s2);
  const auto ledger = must_build(all.events());

  const auto monthly = activity_series(ledger, Granularity::Monthly);
  EXPECT_EQ(monthly.mint_counts, (std::map<std::string, std::uint64_t>{{"2021-03", 1}, {"2021-04", 1}}));
  EXPECT_EQ(monthly.bid_counts, (std::map<std::string, std::uint64_t>{{"2021-04", 1}}));

  const auto hourly = activity_series(ledger, Granularity::HourOfDay);
  EXPECT_EQ(hourly.mint_counts, (std::map<std::string, std::uint64_t>{{"16", 2}}));
  EXPECT_EQ(hourly.bid_counts, (std::map<std::string, std::uint64_t>{{"17", 1}}));
}

TEST(Funnel, TwoSoldOneRelistedNoneResold) {
  Script n1("n1", "a"), n2("n2", "b"), n3("n3", "c");
  n1.mint(T0, A);
  sell(n1, T0 + kHour, A, B, "1");
  n1.list(T0 + 5 * kDay, B, "2");
  n2.mint(T0, C);
  sell(n2, T0 + kHour, C, D, "0.5");
  n3.mint(T0, D).list(T0 + kHour, D, "9");
  Script all;
  all.append(n1).append(n2).append(n3);
  const auto f = auction_funnel_stats(must_build(all.events()));
  EXPECT_EQ(f.first_listed, 3u);
  EXPECT_EQ(f.first_sold, 2u);
  EXPECT_EQ(f.relisted_after_sale, 1u);
  EXPECT_EQ(f.second_sold, 0u);
  EXPECT_DOUBLE_EQ(f.first_success_rate, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(f.relist_rate, 0.5);
  EXPECT_DOUBLE_EQ(f.second_success_rate, 0.0);
}

TEST(Funnel, SoldAfterUnlistCountsAsFirstSale) {
  Script s;
  s.mint(T0, A).list(T0 + 60, A, "5").unlist(T0 + 120, A);
  sell(s, T0 + kHour, A, B, "1");
  sell(s, T0 + 5 * kDay, B, C, "2");
  const auto f = auction_funnel_stats(must_build(s.events()));
  EXPECT_EQ(f, FunnelStats::from_counts(1, 1, 1, 1));
}

TEST(Funnel, EmptyLedger) {
  const auto f = auction_funnel_stats(Ledger{});
  EXPECT_EQ(f.first_listed, 0u);
  EXPECT_EQ(f.first_success_rate, 0.0);
}

TEST(Resale, PercentChanges) {
  Script n1("n1", "a"), n2("n2", "b");
  n1.mint(T0, A);
  sell(n1, T0 + kHour, A, B, "0.666");
  n1.list(T0 + 3 * kDay, B, "50");
  n2.mint(T0, C);
  sell(n2, T0 + kHour, C, D, "2");
  n2.list(T0 + 3 * kDay, D, "1").bid(T0 + 4 * kDay, A, "1").settle(T0 + 6 * kDay, D);
  Script all;
  all.append(n1).append(n2);
  const auto rs = resale_price_changes(must_build(all.events()));
  ASSERT_EQ(rs.size(), 2u);
  // sorted ascending
  EXPECT_EQ(rs[0].nft.str(), "n2");
  EXPECT_EQ(rs[0].pct_change, Rational(-50));
  EXPECT_TRUE(rs[0].second_sold);
  EXPECT_EQ(*rs[0].second_settle, eth("1"));
  EXPECT_EQ(rs[1].nft.str(), "n1");
  // (50 - 0.666) / 0.666 * 100 = 4933400 / 666
  EXPECT_EQ(rs[1].pct_change, Rational(4933400, 666));
  EXPECT_EQ(rs[1].pct_change.to_decimal(6), "7407.507507");
  EXPECT_FALSE(rs[1].second_sold);
}

TEST(Gaps, CustomBuckets) {
  Script n1("n1", "a"), n2("n2", "b"), n3("n3", "c");
  n1.mint(T0, A).list(T0 + 60, A, "1").unlist(T0 + 120, A).list(T0 + 120 + 30 * kMinute, A, "1");
  n2.mint(T0, B).list(T0 + 60, B, "1").unlist(T0 + 120, B).list(T0 + 120 + 2 * kDay, B, "1");
  n3.mint(T0, C).list(T0 + 60, C, "1").unlist(T0 + 120, C).list(T0 + 120 + 6 * kDay, C, "1");
  Script all;
  all.append(n1).append(n2).append(n3);
  const auto ledger = must_build(all.events());

  const auto h = unlist_relist_gaps(ledger, {kHour, 5 * kDay, kUnbounded});
  EXPECT_EQ(h.counts, (std::vector<std::uint64_t>{1, 1, 1}));
  EXPECT_EQ(h.fractions[0], Rational(1, 3));

  const auto d = unlist_relist_gaps(ledger);
  EXPECT_EQ(d.counts, (std::vector<std::uint64_t>{1, 0, 1, 1, 0}));

  // a finite last edge gains an unbounded bucket
  const auto f = unlist_relist_gaps(ledger, {kHour, kDay});
  EXPECT_EQ(f.bucket_edges.back(), kUnbounded);
  EXPECT_EQ(f.counts, (std::vector<std::uint64_t>{1, 0, 2}));

  EXPECT_THROW(unlist_relist_gaps(ledger, {kDay, kHour}), std::invalid_argument);
  EXPECT_THROW(unlist_relist_gaps(ledger, {}), std::invalid_argument);
  EXPECT_THROW(unlist_relist_gaps(ledger, {0, kHour}), std::invalid_argument);
}

TEST(Gaps, BoundaryGoesToUpperBucket) {
  Script s;
  s.mint(T0, A).list(T0 + 60, A, "1").unlist(T0 + 120, A).list(T0 + 120 + kHour, A, "1");
  const auto h = unlist_relist_gaps(must_build(s.events()));
  EXPECT_EQ(h.counts[0], 0u);
  EXPECT_EQ(h.counts[1], 1u);
}

TEST(Invites, StrictlyAfterWinningBid) {
  Script n1("n1", "a"), n2("n2", "b"), n3("n3", "c");
  n1.mint(T0, A);
  sell(n1, T0 + kHour, A, B, "1");  // winning bid at T0+1h+60
  n2.mint(T0, C);
  sell(n2, T0 + kHour, C, D, "2");
  n3.mint(T0, A);
  sell(n3, T0 + 2 * kHour, A, C, "4");
  Script inv("unused", "i");
  inv.invite(T0 + kHour + 60, A, B)    // same second as the bid: not after
      .invite(T0 + 3 * kHour, A, B)    // qualifies
      .invite(T0 + 4 * kHour, A, B)    // later duplicate, ignored
      .invite(T0 + 5 * kHour, D, C)    // wrong direction
      .invite(T0 + 10 * kDay, A, C);   // qualifies unless a max gap applies
  Script all;
  all.append(n1).append(n2).append(n3).append(inv);
  const auto ledger = must_build(all.events());

  const auto scan = detect_invite_purchases(ledger);
  ASSERT_EQ(scan.candidates.size(), 2u);
  EXPECT_EQ(scan.candidates[0].nft.str(), "n1");
  EXPECT_EQ(scan.candidates[0].invite_ts, T0 + 3 * kHour);
  EXPECT_EQ(scan.candidates[1].nft.str(), "n3");
  EXPECT_EQ(scan.mean_price, eth("2.5"));
  EXPECT_FALSE(scan.empty);

  const auto bounded = detect_invite_purchases(ledger, 7 * kDay);
  ASSERT_EQ(bounded.candidates.size(), 1u);
  EXPECT_EQ(bounded.mean_price, eth("1"));
}

TEST(Invites, MeanFloorsToAttoether) {
  Script n1("n1", "a"), n2("n2", "b");
  n1.mint(T0, A);
  sell(n1, T0 + kHour, A, B, "0.000000000000000001");
  n2.mint(T0, A);
  sell(n2, T0 + kHour, A, B, "0.000000000000000002");
  Script inv("unused", "i");
  inv.invite(T0 + 2 * kHour, A, B);
  Script all;
  all.append(n1).append(n2).append(inv);
  const auto scan = detect_invite_purchases(must_build(all.events()));
  ASSERT_EQ(scan.candidates.size(), 2u);
  EXPECT_EQ(scan.mean_price.atto, u128(1));
}

TEST(Invites, EmptyScan) {
  const auto scan = detect_invite_purchases(Ledger{});
  EXPECT_TRUE(scan.empty);
  EXPECT_TRUE(scan.candidates.empty());
}

TEST(Transfers, FractionEverSold) {
  Script n1("n1", "a"), n2("n2", "b"), n3("n3", "c");
  n1.mint(T0, A).transfer(T0 + 60, A, B);
  n2.mint(T0, A);
  sell(n2, T0 + kHour, A, B, "1");
  n2.transfer(T0 + 3 * kDay, B, C);
  n3.mint(T0, C);
  sell(n3, T0 + kHour, C, D, "1");
  Script all;
  all.append(n1).append(n2).append(n3);
  const auto t = transferred_sold_breakdown(must_build(all.events()));
  EXPECT_EQ(t.transferred_total, 2u);
  EXPECT_EQ(t.transferred_ever_sold, 1u);
  EXPECT_DOUBLE_EQ(t.fraction, 0.5);
}
