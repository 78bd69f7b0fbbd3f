// SPDX-License-Identifier: Apache-2.0
//
// Trace-driven execution: every access first resolves its mapping (faulting
// and allocating on first touch), then pays the translation cost, then feeds
// the working-set monitor.  All cycle charges land in one ledger so the total
// is exactly the sum of its parts.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "hpsim/monitor.hpp"
#include "hpsim/physmem.hpp"
#include "hpsim/policy.hpp"
#include "hpsim/profile.hpp"
#include "hpsim/tlb.hpp"
#include "hpsim/trace.hpp"

namespace hpsim {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FragmentConfig {
  double occupancy = 0.0;  // 0 disables the backdrop
  FragPattern pattern = FragPattern::Spread;
  double movable_fraction = 1.0;

  bool operator==(const FragmentConfig&) const = default;
};

struct SimConfig {
  WorkloadSpec workload;
  std::string trace_path;  // when set, replaces the synthetic workload
  AddrRange vma;           // mapping bounds; must cover every access
  std::uint64_t mem_frames = 1ull << 16;
  FragmentConfig fragment;
  TlbParams tlb;
  CostParams costs;
  BenefitParams benefit;
  MonitorConfig monitor;
  PolicyKind policy = PolicyKind::Base4K;
  std::uint64_t master_seed = 0;

  void validate() const;  // throws ConfigError

  bool operator==(const SimConfig&) const = default;
};

struct Mapping {
  AddrRange range;
  PageSize size = PageSize::Base4K;
  std::uint64_t frame_base = 0;

  bool operator==(const Mapping&) const = default;
};

// Sorted, non-overlapping virtual mappings with covering lookup.
class MappingTable {
 public:
  const Mapping* lookup(VirtAddr vaddr) const;
  bool overlaps(AddrRange range) const;
  void install(const Mapping& mapping);  // throws InvalidParam on overlap
  std::size_t size() const { return table_.size(); }
  std::vector<Mapping> mappings() const;

 private:
  std::map<VirtAddr, Mapping> table_;  // keyed by range.start
};

struct SimReport {
  std::uint64_t total_cycles = 0;
  std::uint64_t tlb_hits = 0;
  std::uint64_t tlb_misses = 0;
  std::uint64_t tlb_hit_cycles = 0;
  std::uint64_t walk_cycles = 0;
  std::uint64_t page_faults = 0;
  std::uint64_t faults_4k = 0;
  std::uint64_t faults_64k = 0;
  std::uint64_t faults_2m = 0;
  std::uint64_t faults_32m = 0;
  std::uint64_t bytes_mapped_4k = 0;
  std::uint64_t bytes_mapped_64k = 0;
  std::uint64_t bytes_mapped_2m = 0;
  std::uint64_t bytes_mapped_32m = 0;
  std::uint64_t alloc_attempts = 0;
  std::uint64_t alloc_cycles = 0;
  std::uint64_t zero_cycles = 0;
  std::uint64_t compaction_events = 0;
  std::uint64_t compaction_cycles = 0;
  bool oom = false;
  std::uint64_t reason_no_profile = 0;
  std::uint64_t reason_no_region = 0;
  std::uint64_t reason_net_negative = 0;
  std::uint64_t reason_chosen = 0;
  std::uint64_t reason_fallback_alloc = 0;    // huge allocation failed, degraded
  std::uint64_t reason_fallback_overlap = 0;  // extent already partly mapped

  std::uint64_t huge_bytes_mapped() const {
    return bytes_mapped_64k + bytes_mapped_2m + bytes_mapped_32m;
  }

  bool operator==(const SimReport&) const = default;
};

// Two-column CSV, one metric per row, in a frozen order.
std::string report_csv(const SimReport& report);

// Runs one simulation.  `profile` may be null; an empty profile behaves
// exactly like a missing one.
SimReport sim_run(const SimConfig& config, const Profile* profile);

struct ComparisonRow {
  PolicyKind policy = PolicyKind::Base4K;
  SimReport report;
  double total_cycles_ratio = 1.0;  // vs the first row
  double huge_bytes_ratio = 1.0;    // vs the first row
};

// Runs the same configuration once per policy, sequentially; ratios are
// relative to the first policy listed.
std::vector<ComparisonRow> sim_compare(const SimConfig& config,
                                       const std::vector<PolicyKind>& policies,
                                       const Profile* profile);

std::string comparison_csv(const std::vector<ComparisonRow>& rows);

// Streams the configured trace through a monitor alone and returns the last
// published snapshot.  Throws ConfigError when the trace is too short to
// publish even one.
MonitorSnapshot run_monitoring_pass(const SimConfig& config);

}  // namespace hpsim
