#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace moa {

/// Non-negative amount of money in integer micro-USD. Sums are exact.
class Money {
 public:
  constexpr Money() = default;
  static constexpr Money from_micros(std::int64_t micros) { return Money(micros); }

  constexpr std::int64_t micros() const noexcept { return micros_; }
  constexpr double usd() const noexcept { return static_cast<double>(micros_) / 1e6; }
  /// Decimal USD with six fractional digits, e.g. "0.001350".
  std::string to_string() const;

  constexpr Money& operator+=(Money other) noexcept {
    micros_ += other.micros_;
    return *this;
  }
  friend constexpr Money operator+(Money a, Money b) noexcept { return a += b; }
  friend constexpr auto operator<=>(Money, Money) = default;

 private:
  constexpr explicit Money(std::int64_t micros) : micros_(micros) {}
  std::int64_t micros_ = 0;
};

}  // namespace moa
