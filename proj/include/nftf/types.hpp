#pragma once

// Core value types shared by every nftf module: account and token ids,
// exact ETH amounts, UTC timestamps and an exact rational for ratios.

#include <chrono>
#include <cstdio>
#include <compare>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nftf {

using u128 = unsigned __int128;
using i128 = __int128;

/// Raised for malformed scalar input (ids, amounts, timestamps).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// AccountId

/// Canonical Ethereum account: "0x" followed by 40 lowercase hex digits.
class AccountId {
 public:
  AccountId() = default;

  static AccountId parse(std::string_view s) {
    if (s.size() != 42 || s[0] != '0' || s[1] != 'x')
      throw FormatError("account must be 0x + 40 hex chars: '" + std::string(s) + "'");
    for (std::size_t i = 2; i < s.size(); ++i) {
      const char c = s[i];
      const bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
      if (!ok) throw FormatError("account is not canonical lowercase hex: '" + std::string(s) + "'");
    }
    AccountId id;
    id.value_ = std::string(s);
    return id;
  }

  const std::string& str() const { return value_; }
  bool empty() const { return value_.empty(); }

  friend auto operator<=>(const AccountId&, const AccountId&) = default;
  friend bool operator==(const AccountId&, const AccountId&) = default;

 private:
  std::string value_;
};

// ---------------------------------------------------------------------------
// TokenId

class TokenId {
 public:
  TokenId() = default;

  static TokenId parse(std::string_view s) {
    if (s.empty()) throw FormatError("token id must be nonempty");
    TokenId id;
    id.value_ = std::string(s);
    return id;
  }

  const std::string& str() const { return value_; }

  friend auto operator<=>(const TokenId&, const TokenId&) = default;
  friend bool operator==(const TokenId&, const TokenId&) = default;

 private:
  std::string value_;
};

// ---------------------------------------------------------------------------
// EthAmount

/// An amount of ether held as an integer count of attoether (1e-18 ETH).
struct EthAmount {
  static constexpr u128 kAttoPerEth = 1'000'000'000'000'000'000ULL;

  u128 atto = 0;

  static constexpr EthAmount from_atto(u128 v) { return EthAmount{v}; }
  static constexpr EthAmount from_eth(std::uint64_t whole) { return EthAmount{u128(whole) * kAttoPerEth}; }

  /// Parses a plain decimal ETH string such as "0.666" or "50".
  /// At most 18 fractional digits; no sign, exponent or whitespace.
  static EthAmount parse(std::string_view s) {
    if (s.empty()) throw FormatError("empty amount");
    const auto dot = s.find('.');
    const std::string_view whole = s.substr(0, dot);
    const std::string_view frac = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
    if (whole.empty()) throw FormatError("amount needs an integer part: '" + std::string(s) + "'");
    if (dot != std::string_view::npos && frac.empty())
      throw FormatError("amount has a trailing dot: '" + std::string(s) + "'");
    if (frac.size() > 18) throw FormatError("amount has more than 18 fractional digits: '" + std::string(s) + "'");

    constexpr u128 kMax = ~u128(0);
    u128 value = 0;
    auto push = [&](char c) {
      if (c < '0' || c > '9') throw FormatError("amount is not a decimal number: '" + std::string(s) + "'");
      const u128 d = u128(c - '0');
      if (value > (kMax - d) / 10) throw FormatError("amount overflows: '" + std::string(s) + "'");
      value = value * 10 + d;
    };
    for (char c : whole) push(c);
    for (char c : frac) push(c);
    for (std::size_t i = frac.size(); i < 18; ++i) {
      if (value > kMax / 10) throw FormatError("amount overflows: '" + std::string(s) + "'");
      value *= 10;
    }
    return EthAmount{value};
  }

  /// Decimal ETH, trailing fractional zeros trimmed ("0.666", "50", "0").
  std::string to_string() const {
    std::string whole = u128_to_string(atto / kAttoPerEth);
    u128 frac = atto % kAttoPerEth;
    if (frac == 0) return whole;
    std::string digits(18, '0');
    for (int i = 17; i >= 0; --i) {
      digits[std::size_t(i)] = char('0' + int(frac % 10));
      frac /= 10;
    }
    while (!digits.empty() && digits.back() == '0') digits.pop_back();
    return whole + "." + digits;
  }

  double to_double() const { return double(atto) / double(kAttoPerEth); }

  static std::string u128_to_string(u128 v) {
    if (v == 0) return "0";
    std::string out;
    while (v > 0) {
      out.insert(out.begin(), char('0' + int(v % 10)));
      v /= 10;
    }
    return out;
  }

  friend constexpr EthAmount operator+(EthAmount a, EthAmount b) { return EthAmount{a.atto + b.atto}; }
  friend constexpr EthAmount operator-(EthAmount a, EthAmount b) { return EthAmount{a.atto - b.atto}; }
  friend constexpr auto operator<=>(const EthAmount&, const EthAmount&) = default;
  friend constexpr bool operator==(const EthAmount&, const EthAmount&) = default;
};

// ---------------------------------------------------------------------------
// Timestamp / Duration

/// Whole seconds.
using Seconds = std::int64_t;

inline constexpr Seconds kMinute = 60;
inline constexpr Seconds kHour = 3600;
inline constexpr Seconds kDay = 86400;

/// Seconds since the Unix epoch, UTC. Serialized as "YYYY-MM-DDTHH:MM:SSZ".
struct Timestamp {
  Seconds utc_seconds = 0;

  static Timestamp parse(std::string_view s) {
    // YYYY-MM-DDTHH:MM:SSZ
    if (s.size() != 20 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' || s[16] != ':' ||
        s[19] != 'Z')
      throw FormatError("timestamp must be ISO-8601 UTC 'YYYY-MM-DDTHH:MM:SSZ': '" + std::string(s) + "'");
    auto num = [&](std::size_t pos, std::size_t len) {
      int v = 0;
      for (std::size_t i = pos; i < pos + len; ++i) {
        if (s[i] < '0' || s[i] > '9') throw FormatError("timestamp has a non-digit: '" + std::string(s) + "'");
        v = v * 10 + (s[i] - '0');
      }
      return v;
    };
    using namespace std::chrono;
    const year_month_day ymd{year{num(0, 4)}, month{unsigned(num(5, 2))}, day{unsigned(num(8, 2))}};
    const int hh = num(11, 2), mm = num(14, 2), ss = num(17, 2);
    if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59)
      throw FormatError("timestamp out of range: '" + std::string(s) + "'");
    const Seconds days = sys_days{ymd}.time_since_epoch().count();
    return Timestamp{days * kDay + hh * kHour + mm * kMinute + ss};
  }

  std::string to_string() const {
    using namespace std::chrono;
    Seconds days = utc_seconds / kDay;
    Seconds rem = utc_seconds % kDay;
    if (rem < 0) {
      rem += kDay;
      --days;
    }
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()), int(rem / kHour), int(rem % kHour / kMinute), int(rem % kMinute));
    return buf;
  }

  /// "YYYY-MM" bucket key.
  std::string month_key() const { return to_string().substr(0, 7); }

  int hour_of_day() const {
    Seconds rem = utc_seconds % kDay;
    if (rem < 0) rem += kDay;
    return int(rem / kHour);
  }

  friend constexpr Timestamp operator+(Timestamp t, Seconds d) { return Timestamp{t.utc_seconds + d}; }
  friend constexpr Timestamp operator-(Timestamp t, Seconds d) { return Timestamp{t.utc_seconds - d}; }
  friend constexpr Seconds operator-(Timestamp a, Timestamp b) { return a.utc_seconds - b.utc_seconds; }
  friend constexpr auto operator<=>(const Timestamp&, const Timestamp&) = default;
  friend constexpr bool operator==(const Timestamp&, const Timestamp&) = default;
};

// ---------------------------------------------------------------------------
// Rational

/// Exact signed fraction over 128-bit integers, always reduced with den > 0.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(i128 num, i128 den = 1) : num_(num), den_(den) { normalize(); }

  static Rational of(EthAmount a) { return Rational(i128(a.atto), 1); }

  constexpr i128 num() const { return num_; }
  constexpr i128 den() const { return den_; }
  constexpr int sign() const { return num_ > 0 ? 1 : (num_ < 0 ? -1 : 0); }

  double to_double() const { return double(num_) / double(den_); }

  /// Decimal rendering with `digits` fractional digits, truncated toward zero.
  std::string to_decimal(int digits) const {
    const bool neg = num_ < 0;
    u128 n = u128(neg ? -num_ : num_);
    const u128 d = u128(den_);
    std::string out = (neg ? "-" : "") + EthAmount::u128_to_string(n / d);
    u128 rem = n % d;
    if (digits > 0) {
      out += '.';
      for (int i = 0; i < digits; ++i) {
        rem *= 10;
        out += char('0' + int(rem / d));
        rem %= d;
      }
    }
    if (out == "-0" || out.rfind("-0.", 0) == 0) {
      bool all_zero = out.find_first_not_of("-0.") == std::string::npos;
      if (all_zero) out.erase(0, 1);
    }
    return out;
  }

  friend constexpr Rational operator+(Rational a, Rational b) {
    return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
  }
  friend constexpr Rational operator-(Rational a, Rational b) {
    return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
  }
  friend constexpr Rational operator*(Rational a, Rational b) { return Rational(a.num_ * b.num_, a.den_ * b.den_); }
  friend constexpr Rational operator/(Rational a, Rational b) { return Rational(a.num_ * b.den_, a.den_ * b.num_); }
  friend constexpr Rational abs(Rational a) { return Rational(a.num_ < 0 ? -a.num_ : a.num_, a.den_); }

  friend constexpr bool operator==(const Rational&, const Rational&) = default;
  friend constexpr std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    const i128 l = a.num_ * b.den_, r = b.num_ * a.den_;
    return l < r ? std::strong_ordering::less : (l > r ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

 private:
  static constexpr i128 gcd(i128 a, i128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
      const i128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  constexpr void normalize() {
    if (den_ == 0) throw std::domain_error("rational with zero denominator");
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    const i128 g = gcd(num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  i128 num_ = 0;
  i128 den_ = 1;
};

/// count / total as a double in [0,1]; 0 when total is 0.
inline double ratio(std::uint64_t count, std::uint64_t total) {
  return total == 0 ? 0.0 : double(count) / double(total);
}

}  // namespace nftf
