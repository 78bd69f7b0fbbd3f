// SPDX-License-Identifier: Apache-2.0

#include "hpsim/sim.hpp"

#include <algorithm>
#include <array>
#include <limits>

namespace hpsim {

namespace {

AddrRange extent_of(VirtAddr vaddr, PageSize size) {
  VirtAddr base = align_down(vaddr, size);
  return {base, base + bytes_of(size)};
}

double ratio_of(std::uint64_t numerator, std::uint64_t denominator) {
  if (denominator == 0)
    return numerator == 0 ? 1.0 : std::numeric_limits<double>::infinity();
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

struct ReportField {
  const char* name;
  std::uint64_t (*get)(const SimReport&);
};

// Frozen output order: the ledger components follow total_cycles so the
// conservation identity can be checked straight off the file.
constexpr ReportField kReportFields[] = {
    {"total_cycles", [](const SimReport& r) { return r.total_cycles; }},
    {"tlb_hits", [](const SimReport& r) { return r.tlb_hits; }},
    {"tlb_misses", [](const SimReport& r) { return r.tlb_misses; }},
    {"tlb_hit_cycles", [](const SimReport& r) { return r.tlb_hit_cycles; }},
    {"walk_cycles", [](const SimReport& r) { return r.walk_cycles; }},
    {"page_faults", [](const SimReport& r) { return r.page_faults; }},
    {"faults_4k", [](const SimReport& r) { return r.faults_4k; }},
    {"faults_64k", [](const SimReport& r) { return r.faults_64k; }},
    {"faults_2m", [](const SimReport& r) { return r.faults_2m; }},
    {"faults_32m", [](const SimReport& r) { return r.faults_32m; }},
    {"bytes_mapped_4k", [](const SimReport& r) { return r.bytes_mapped_4k; }},
    {"bytes_mapped_64k", [](const SimReport& r) { return r.bytes_mapped_64k; }},
    {"bytes_mapped_2m", [](const SimReport& r) { return r.bytes_mapped_2m; }},
    {"bytes_mapped_32m", [](const SimReport& r) { return r.bytes_mapped_32m; }},
    {"alloc_attempts", [](const SimReport& r) { return r.alloc_attempts; }},
    {"alloc_cycles", [](const SimReport& r) { return r.alloc_cycles; }},
    {"zero_cycles", [](const SimReport& r) { return r.zero_cycles; }},
    {"compaction_events", [](const SimReport& r) { return r.compaction_events; }},
    {"compaction_cycles", [](const SimReport& r) { return r.compaction_cycles; }},
    {"oom", [](const SimReport& r) { return static_cast<std::uint64_t>(r.oom); }},
    {"reason_no_profile", [](const SimReport& r) { return r.reason_no_profile; }},
    {"reason_no_region", [](const SimReport& r) { return r.reason_no_region; }},
    {"reason_net_negative", [](const SimReport& r) { return r.reason_net_negative; }},
    {"reason_chosen", [](const SimReport& r) { return r.reason_chosen; }},
    {"reason_fallback_alloc", [](const SimReport& r) { return r.reason_fallback_alloc; }},
    {"reason_fallback_overlap",
     [](const SimReport& r) { return r.reason_fallback_overlap; }},
};

std::unique_ptr<TraceSource> open_source(const SimConfig& config) {
  if (!config.trace_path.empty()) return open_trace(config.trace_path);
  return make_generator(config.workload);
}

}  // namespace

void SimConfig::validate() const {
  if (mem_frames == 0) throw ConfigError("memory needs at least one frame");
  if (!vma.valid()) throw ConfigError("mapping bounds must be a nonempty aligned range");
  if (trace_path.empty()) {
    try {
      workload.validate();
    } catch (const InvalidSpec& e) {
      throw ConfigError(e.what());
    }
    if (!vma.contains(workload.extent()))
      throw ConfigError("mapping bounds must cover the workload extent");
  }
  if (!(fragment.occupancy >= 0.0 && fragment.occupancy <= 1.0))
    throw ConfigError("fragment occupancy must be in [0, 1]");
  if (!(fragment.movable_fraction >= 0.0 && fragment.movable_fraction <= 1.0))
    throw ConfigError("fragment movable fraction must be in [0, 1]");
  if (tlb.entries == 0) throw ConfigError("tlb needs at least one entry");
  if (monitor.sampling_interval == 0)
    throw ConfigError("monitor sampling interval must be positive");
  if (monitor.aggregation_ticks == 0)
    throw ConfigError("monitor aggregation ticks must be positive");
  if (monitor.min_regions == 0) throw ConfigError("monitor min regions must be positive");
  if (monitor.max_regions < monitor.min_regions)
    throw ConfigError("monitor max regions below min regions");
  if (!(benefit.miss_fraction >= 0.0 && benefit.miss_fraction <= 1.0))
    throw ConfigError("benefit miss fraction must be in [0, 1]");
}

const Mapping* MappingTable::lookup(VirtAddr vaddr) const {
  auto it = table_.upper_bound(vaddr);
  if (it == table_.begin()) return nullptr;
  --it;
  return it->second.range.contains(vaddr) ? &it->second : nullptr;
}

bool MappingTable::overlaps(AddrRange range) const {
  auto it = table_.lower_bound(range.start);
  if (it != table_.begin() && std::prev(it)->second.range.intersects(range)) return true;
  return it != table_.end() && it->second.range.intersects(range);
}

void MappingTable::install(const Mapping& mapping) {
  if (!mapping.range.valid()) throw InvalidParam("mapping range is empty or misaligned");
  if (overlaps(mapping.range)) throw InvalidParam("mapping overlaps an existing one");
  table_.emplace(mapping.range.start, mapping);
}

std::vector<Mapping> MappingTable::mappings() const {
  std::vector<Mapping> out;
  out.reserve(table_.size());
  for (const auto& [start, m] : table_) out.push_back(m);
  return out;
}

std::string report_csv(const SimReport& report) {
  std::string out = "metric,value\n";
  for (const ReportField& f : kReportFields)
    out += std::string(f.name) + "," + std::to_string(f.get(report)) + "\n";
  return out;
}

SimReport sim_run(const SimConfig& config, const Profile* profile) {
  config.validate();
  std::unique_ptr<TraceSource> source = open_source(config);
  PhysMemory mem(config.mem_frames);
  if (config.fragment.occupancy > 0.0)
    mem.fragment(config.fragment.occupancy, config.fragment.pattern,
                 config.fragment.movable_fraction,
                 derive_seed(config.master_seed, kSeedSaltFragment));
  Tlb tlb(config.tlb);
  MonitorConfig mon_cfg = config.monitor;
  mon_cfg.seed = derive_seed(config.master_seed, kSeedSaltMonitor);
  Monitor monitor(mon_cfg, config.vma);
  MappingTable mappings;
  SimReport rep;
  const Profile* prof = (profile != nullptr && !profile->empty()) ? profile : nullptr;

  // Compaction estimates are pure predictions; cache them per memory version
  // so repeated probes between mutations cost one planning pass.
  std::array<std::pair<std::uint64_t, std::optional<std::uint64_t>>, kMaxOrder + 1>
      estimate_cache;
  estimate_cache.fill({~0ull, std::nullopt});
  auto has_free = [&mem](unsigned order) { return mem.has_free_block(order); };
  auto estimate = [&mem, &estimate_cache](unsigned order) {
    auto& [version, value] = estimate_cache[order];
    if (version != mem.version()) {
      value = mem.estimate_compaction(order);
      version = mem.version();
    }
    return value;
  };

  while (auto rec = source->next()) {
    VirtAddr vaddr = rec->vaddr;
    if (!config.vma.contains(vaddr))
      throw ConfigError("access at " + format_hex(vaddr) + " outside the mapping bounds");
    const Mapping* mapping = mappings.lookup(vaddr);
    if (mapping == nullptr) {
      ++rep.page_faults;
      FaultContext ctx;
      ctx.vaddr = vaddr;
      ctx.vma = config.vma;
      ctx.profile = prof;
      ctx.snapshot = monitor.latest() ? &*monitor.latest() : nullptr;
      ctx.benefit = config.benefit;
      ctx.costs = config.costs;
      ctx.has_free_block = has_free;
      ctx.compaction_estimate = estimate;
      Decision decision = run_policy(config.policy, ctx);
      switch (decision.reason) {
        case DecisionReason::NoProfile:
          ++rep.reason_no_profile;
          break;
        case DecisionReason::NoRegion:
          ++rep.reason_no_region;
          break;
        case DecisionReason::NetNegative:
          ++rep.reason_net_negative;
          break;
        case DecisionReason::Chosen:
          ++rep.reason_chosen;
          break;
      }
      PageSize size = decision.size;
      // A huge extent that already holds a smaller mapping cannot be
      // installed; degrade before touching the allocator.
      if (size != PageSize::Base4K && mappings.overlaps(extent_of(vaddr, size))) {
        size = PageSize::Base4K;
        ++rep.reason_fallback_overlap;
      }
      bool compaction_tried = false;
      std::optional<std::uint64_t> frame;
      while (true) {
        ++rep.alloc_attempts;
        rep.alloc_cycles += config.costs.alloc_fastpath_cycles;
        AllocResult r = mem.alloc(order_of(size), false);
        if (r.ok()) {
          frame = r.frame_base;
          break;
        }
        if (r.status == AllocResult::Status::NeedsCompaction && !compaction_tried &&
            size != PageSize::Base4K) {
          compaction_tried = true;
          ++rep.compaction_events;
          CompactionOutcome out = mem.compact(order_of(size));
          rep.compaction_cycles += compaction_cost(out.moved_frames, config.costs);
          if (out.success) continue;  // a block of this order now exists
        }
        if (size != PageSize::Base4K) {
          size = PageSize::Base4K;
          ++rep.reason_fallback_alloc;
          continue;
        }
        rep.oom = true;  // no frame for even a base page: stop the run
        break;
      }
      if (rep.oom) break;
      AddrRange extent = extent_of(vaddr, size);
      mappings.install({extent, size, *frame});
      rep.zero_cycles += zeroing_cost(size, config.costs);
      mem.note_zeroed(frames_of(size));
      switch (size) {
        case PageSize::Base4K:
          ++rep.faults_4k;
          rep.bytes_mapped_4k += bytes_of(size);
          break;
        case PageSize::Huge64K:
          ++rep.faults_64k;
          rep.bytes_mapped_64k += bytes_of(size);
          break;
        case PageSize::Huge2M:
          ++rep.faults_2m;
          rep.bytes_mapped_2m += bytes_of(size);
          break;
        case PageSize::Huge32M:
          ++rep.faults_32m;
          rep.bytes_mapped_32m += bytes_of(size);
          break;
      }
      tlb.invalidate_range(extent);
      mapping = mappings.lookup(vaddr);
    }
    tlb.access(vaddr, mapping->size);
    monitor.record_access(vaddr);
  }

  const TlbStats& ts = tlb.stats();
  rep.tlb_hits = ts.hits;
  rep.tlb_misses = ts.misses;
  rep.tlb_hit_cycles = ts.hit_cycles_total;
  rep.walk_cycles = ts.walk_cycles_total;
  rep.total_cycles = rep.tlb_hit_cycles + rep.walk_cycles + rep.alloc_cycles +
                     rep.zero_cycles + rep.compaction_cycles;
  return rep;
}

std::vector<ComparisonRow> sim_compare(const SimConfig& config,
                                       const std::vector<PolicyKind>& policies,
                                       const Profile* profile) {
  if (policies.empty()) throw ConfigError("comparison needs at least one policy");
  std::vector<ComparisonRow> rows;
  rows.reserve(policies.size());
  for (PolicyKind p : policies) {
    SimConfig cfg = config;
    cfg.policy = p;
    ComparisonRow row;
    row.policy = p;
    row.report = sim_run(cfg, profile);
    rows.push_back(std::move(row));
  }
  const SimReport& base = rows.front().report;
  for (ComparisonRow& row : rows) {
    row.total_cycles_ratio = ratio_of(row.report.total_cycles, base.total_cycles);
    row.huge_bytes_ratio =
        ratio_of(row.report.huge_bytes_mapped(), base.huge_bytes_mapped());
  }
  return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::string out = "policy";
  for (const ReportField& f : kReportFields) out += std::string(",") + f.name;
  out += ",total_cycles_ratio,huge_bytes_ratio\n";
  for (const ComparisonRow& row : rows) {
    out += std::string(policy_name(row.policy));
    for (const ReportField& f : kReportFields)
      out += "," + std::to_string(f.get(row.report));
    out += "," + format_double(row.total_cycles_ratio);
    out += "," + format_double(row.huge_bytes_ratio);
    out += "\n";
  }
  return out;
}

MonitorSnapshot run_monitoring_pass(const SimConfig& config) {
  config.validate();
  std::unique_ptr<TraceSource> source = open_source(config);
  MonitorConfig mon_cfg = config.monitor;
  mon_cfg.seed = derive_seed(config.master_seed, kSeedSaltMonitor);
  Monitor monitor(mon_cfg, config.vma);
  while (auto rec = source->next()) monitor.record_access(rec->vaddr);
  if (!monitor.latest())
    throw ConfigError("trace ended before the monitor published a snapshot");
  return *monitor.latest();
}

}  // namespace hpsim
