// SPDX-License-Identifier: Apache-2.0
//
// Shared domain types: page sizes, virtual addresses, address ranges,
// and the seeded RNG every module draws from.

#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace hpsim {

// Simulated virtual addresses are canonical 48-bit values.
using VirtAddr = std::uint64_t;

inline constexpr VirtAddr kAddrSpaceLimit = 1ull << 48;
inline constexpr std::uint64_t kBaseFrameBytes = 4096;
inline constexpr unsigned kMaxOrder = 13;  // 32 MiB = 4 KiB << 13

// The page-size menu is closed: exactly these four sizes exist.
enum class PageSize : std::uint8_t { Base4K = 0, Huge64K = 1, Huge2M = 2, Huge32M = 3 };

inline constexpr std::array<PageSize, 4> kPageSizes = {
    PageSize::Base4K, PageSize::Huge64K, PageSize::Huge2M, PageSize::Huge32M};
inline constexpr std::array<PageSize, 3> kHugeSizes = {
    PageSize::Huge64K, PageSize::Huge2M, PageSize::Huge32M};

constexpr unsigned order_of(PageSize s) {
  constexpr std::array<unsigned, 4> orders = {0, 4, 9, 13};
  return orders[static_cast<std::size_t>(s)];
}

constexpr std::uint64_t bytes_of(PageSize s) { return kBaseFrameBytes << order_of(s); }

constexpr std::uint64_t frames_of(PageSize s) { return 1ull << order_of(s); }

constexpr std::string_view name_of(PageSize s) {
  constexpr std::array<std::string_view, 4> names = {"4k", "64k", "2m", "32m"};
  return names[static_cast<std::size_t>(s)];
}

inline std::optional<PageSize> page_size_from_order(unsigned order) {
  for (PageSize s : kPageSizes)
    if (order_of(s) == order) return s;
  return std::nullopt;
}

constexpr VirtAddr align_down(VirtAddr addr, std::uint64_t bytes) {
  return addr & ~(bytes - 1);  // bytes is a power of two
}

constexpr VirtAddr align_down(VirtAddr addr, PageSize s) { return align_down(addr, bytes_of(s)); }

constexpr VirtAddr align_up(VirtAddr addr, std::uint64_t bytes) {
  return (addr + bytes - 1) & ~(bytes - 1);
}

constexpr VirtAddr align_up(VirtAddr addr, PageSize s) { return align_up(addr, bytes_of(s)); }

// Half-open [start, end), 4 KiB aligned on both ends.
struct AddrRange {
  VirtAddr start = 0;
  VirtAddr end = 0;

  constexpr bool valid() const {
    return start < end && end <= kAddrSpaceLimit &&
           align_down(start, kBaseFrameBytes) == start && align_down(end, kBaseFrameBytes) == end;
  }
  constexpr std::uint64_t size_bytes() const { return end - start; }
  constexpr bool contains(VirtAddr addr) const { return addr >= start && addr < end; }
  constexpr bool contains(const AddrRange& other) const {
    return other.start >= start && other.end <= end;
  }
  constexpr bool intersects(const AddrRange& other) const {
    return start < other.end && other.start < end;
  }
  friend constexpr bool operator==(const AddrRange&, const AddrRange&) = default;
};

// Rejected argument values, from any module.
class InvalidParam : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Parse error carrying the 1-based line number of the offending input line.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Deterministic RNG. mt19937_64 is fully specified by the standard and the
// value mappings below avoid std distributions, whose outputs vary across
// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, n). n must be nonzero. Fixed-point multiply keeps the
  // mapping identical on every platform; the bias is n / 2^64.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Uniform in [0, 1) with 53 bits of resolution.
  double next_real01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

// Fans one master seed out to per-component streams. splitmix64 output of
// (master + salt); salts are small fixed constants per consumer.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) {
  std::uint64_t z = master + salt * 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Seed salts, one per randomness consumer.
inline constexpr std::uint64_t kSeedSaltTrace = 1;
inline constexpr std::uint64_t kSeedSaltFragment = 2;
inline constexpr std::uint64_t kSeedSaltMonitor = 3;

// Unsigned integer parsing used by every text format: decimal or 0x hex,
// underscores ignored in hex digits.
inline std::optional<std::uint64_t> parse_u64(std::string_view text) {
  if (text.empty()) return std::nullopt;
  bool hex = false;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    hex = true;
    text.remove_prefix(2);
  }
  std::string digits;
  digits.reserve(text.size());
  for (char c : text) {
    if (hex && c == '_') continue;
    digits.push_back(c);
  }
  if (digits.empty()) return std::nullopt;
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value,
                                   hex ? 16 : 10);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
  return value;
}

inline std::optional<double> parse_double(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

inline std::string format_hex(std::uint64_t value) {
  char buf[19];  // "0x" + 16 digits
  buf[0] = '0';
  buf[1] = 'x';
  auto [ptr, ec] = std::to_chars(buf + 2, buf + sizeof(buf), value, 16);
  (void)ec;
  return std::string(buf, ptr);
}

// Shortest round-trip decimal form ("0.2" stays "0.2", 1.0 prints "1").
inline std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace hpsim
