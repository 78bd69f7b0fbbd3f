// SPDX-License-Identifier: Apache-2.0
//
// Region-based working-set monitor.  The monitored extent is partitioned into
// contiguous regions; every sampling tick one random page per region is probed
// against the set of pages touched in the elapsed window, approximating the
// region's access frequency without per-page bookkeeping.  Periodic
// aggregation publishes a snapshot, merges regions with similar counts, and
// randomly splits survivors so hot boundaries can be rediscovered.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "hpsim/core.hpp"

namespace hpsim {

struct MonitorConfig {
  std::uint64_t sampling_interval = 1000;  // accesses per sampling tick
  std::uint32_t aggregation_ticks = 20;    // ticks per published snapshot
  std::size_t min_regions = 10;
  std::size_t max_regions = 500;
  std::uint32_t merge_threshold = 2;  // max |nr delta| for merge / age growth
  std::uint64_t seed = 0;

  bool operator==(const MonitorConfig&) const = default;
};

struct MonitorRegion {
  AddrRange range;
  std::uint32_t nr_accesses = 0;  // positive probes in the current window
  std::uint32_t age = 0;          // consecutive aggregations with stable nr

  bool operator==(const MonitorRegion&) const = default;
};

struct MonitorSnapshot {
  std::uint64_t taken_at = 0;  // total accesses recorded when published
  std::uint32_t aggregation_interval = 0;  // ticks contributing to nr
  std::vector<MonitorRegion> regions;

  bool operator==(const MonitorSnapshot&) const = default;
};

class AddressOutsideExtent : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Byte-weighted mean of nr/aggregation_interval over the regions that
// intersect `range`.  Throws AddressOutsideExtent when nothing intersects.
double access_frequency(const MonitorSnapshot& snapshot, AddrRange range);

std::string snapshot_csv(const MonitorSnapshot& snapshot);
MonitorSnapshot parse_snapshot_csv(const std::string& text);

class Monitor {
 public:
  Monitor(MonitorConfig config, AddrRange extent);

  // Feeds one access; runs a sampling tick every sampling_interval accesses
  // and publishes a snapshot every aggregation_ticks ticks.  Addresses
  // outside the extent still count toward the tick clock but never match a
  // probe.
  void record_access(VirtAddr vaddr);

  const std::optional<MonitorSnapshot>& latest() const { return latest_; }
  const std::vector<MonitorRegion>& regions() const { return regions_; }
  AddrRange extent() const { return extent_; }
  std::uint64_t accesses_recorded() const { return accesses_; }
  std::uint64_t ticks_run() const { return ticks_; }
  std::size_t effective_min_regions() const { return effective_min_; }

  // Invariant walk: regions partition the extent in order, boundaries are
  // page-aligned, and the count respects the configured bounds.
  void validate() const;

 private:
  void run_tick();
  void run_aggregation();
  void merge_pass();
  void split_pass();

  MonitorConfig config_;
  AddrRange extent_;
  std::size_t effective_min_;
  std::vector<MonitorRegion> regions_;
  std::vector<std::uint32_t> prev_nr_;  // parallel to regions_
  std::unordered_set<std::uint64_t> touched_;  // page ids in current window
  std::uint64_t accesses_ = 0;
  std::uint64_t window_accesses_ = 0;
  std::uint64_t ticks_ = 0;
  std::uint32_t ticks_in_aggregation_ = 0;
  std::optional<MonitorSnapshot> latest_;
  Rng rng_;
};

}  // namespace hpsim
