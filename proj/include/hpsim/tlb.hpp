// SPDX-License-Identifier: Apache-2.0
//
// Fully associative translation cache with strict LRU replacement.  Entries
// are keyed by (page base, page size); a lookup hit refreshes recency, a miss
// charges a page-table walk and installs the translation, evicting the least
// recently used entry when full.

#pragma once

#include <cstdint>
#include <list>
#include <unordered_map>

#include "hpsim/core.hpp"

namespace hpsim {

struct TlbParams {
  std::size_t entries = 64;
  std::uint64_t walk_cycles = 200;
  std::uint64_t hit_cycles = 0;

  bool operator==(const TlbParams&) const = default;
};

struct TlbStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t hit_cycles_total = 0;
  std::uint64_t walk_cycles_total = 0;

  bool operator==(const TlbStats&) const = default;
};

class Tlb {
 public:
  explicit Tlb(TlbParams params);

  // Translates one access to a page mapped at `size`.  Returns the cycles
  // charged for this access (hit or walk cost) and updates the statistics.
  std::uint64_t access(VirtAddr vaddr, PageSize size);

  // Drops every entry whose page intersects [range.start, range.end).
  void invalidate_range(AddrRange range);

  void clear();

  std::size_t size() const { return lru_.size(); }
  const TlbParams& params() const { return params_; }
  const TlbStats& stats() const { return stats_; }

  // True when (page base, size) is currently cached; does not touch recency.
  bool contains(VirtAddr vaddr, PageSize size) const;

 private:
  // Key packs the page tag and the size index so one map serves all sizes.
  static std::uint64_t key_of(VirtAddr base, PageSize size);

  struct Entry {
    VirtAddr base;
    PageSize size;
  };

  TlbParams params_;
  std::list<Entry> lru_;  // front = most recently used
  std::unordered_map<std::uint64_t, std::list<Entry>::iterator> index_;
  TlbStats stats_;
};

}  // namespace hpsim
