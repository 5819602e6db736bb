#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mmlpt {

/// Opaque flow identifier. Load balancers treat distinct values as
/// independent uniform draws.
struct FlowId {
  std::uint64_t value = 0;

  constexpr auto operator<=>(const FlowId&) const = default;
};

class AddressError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Interface identifier. Values below 2^32 are IPv4 addresses; stars
/// (non-responsive hops) are synthetic and live above that range, scoped to
/// a trace id and a hop, so they never compare equal to a real interface.
class Address {
 public:
  constexpr Address() = default;

  static constexpr Address ipv4(std::uint32_t value) { return Address{value}; }

  static constexpr Address star(std::uint32_t trace_id, int hop) {
    return Address{kStarBit | (static_cast<std::uint64_t>(trace_id) << 16) |
                   (static_cast<std::uint64_t>(hop) & 0xffffu)};
  }

  constexpr bool is_star() const { return (raw_ & kStarBit) != 0; }
  constexpr std::uint64_t raw() const { return raw_; }
  constexpr std::uint32_t v4() const { return static_cast<std::uint32_t>(raw_); }

  std::string to_string() const {
    if (is_star()) {
      return "*:" + std::to_string((raw_ >> 16) & 0xffffffffu) + ":" + std::to_string(raw_ & 0xffffu);
    }
    const auto v = v4();
    return std::to_string(v >> 24) + "." + std::to_string((v >> 16) & 0xff) + "." +
           std::to_string((v >> 8) & 0xff) + "." + std::to_string(v & 0xff);
  }

  /// Accepts dotted quads and the "*:<trace>:<hop>" star form produced by
  /// to_string().
  static Address parse(std::string_view text) {
    if (!text.empty() && text.front() == '*') {
      std::uint32_t trace = 0;
      int hop = 0;
      const auto colon = text.find(':', 2);
      if (text.size() < 5 || text[1] != ':' || colon == std::string_view::npos ||
          !parse_number(text.substr(2, colon - 2), trace) || !parse_number(text.substr(colon + 1), hop)) {
        throw AddressError("malformed star address: " + std::string(text));
      }
      return star(trace, hop);
    }
    std::uint32_t value = 0;
    std::size_t pos = 0;
    for (int octet = 0; octet < 4; ++octet) {
      const auto end = octet == 3 ? text.size() : text.find('.', pos);
      unsigned part = 0;
      if (end == std::string_view::npos || !parse_number(text.substr(pos, end - pos), part) || part > 255) {
        throw AddressError("malformed IPv4 address: " + std::string(text));
      }
      value = (value << 8) | part;
      pos = end + 1;
    }
    return ipv4(value);
  }

  constexpr auto operator<=>(const Address&) const = default;

 private:
  static constexpr std::uint64_t kStarBit = std::uint64_t{1} << 63;

  constexpr explicit Address(std::uint64_t raw) : raw_(raw) {}

  template <typename T>
  static bool parse_number(std::string_view s, T& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
  }

  std::uint64_t raw_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, const Address& a) { return os << a.to_string(); }

}  // namespace mmlpt

template <>
struct std::hash<mmlpt::Address> {
  std::size_t operator()(const mmlpt::Address& a) const noexcept { return std::hash<std::uint64_t>{}(a.raw()); }
};

template <>
struct std::hash<mmlpt::FlowId> {
  std::size_t operator()(const mmlpt::FlowId& f) const noexcept { return std::hash<std::uint64_t>{}(f.value); }
};
