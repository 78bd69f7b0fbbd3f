// SPDX-License-Identifier: Apache-2.0

#include "hpsim/cli.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hpsim/sim.hpp"

namespace hpsim {

namespace {

// Sizes and addresses: decimal or 0x hex, with binary K/M/G suffixes
// ("64k", "2M", "1GiB").  Hex values take no suffix.
std::optional<std::uint64_t> parse_size(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t.rfind("0x", 0) == 0) return parse_u64(t);
  std::uint64_t mult = 1;
  if (t.size() >= 3 && t.compare(t.size() - 2, 2, "ib") == 0) t.erase(t.size() - 2);
  else if (t.size() >= 2 && t.back() == 'b' &&
           (t[t.size() - 2] == 'k' || t[t.size() - 2] == 'm' || t[t.size() - 2] == 'g'))
    t.pop_back();
  if (!t.empty() && (t.back() == 'k' || t.back() == 'm' || t.back() == 'g')) {
    mult = t.back() == 'k' ? (1ull << 10) : t.back() == 'm' ? (1ull << 20) : (1ull << 30);
    t.pop_back();
  }
  auto value = parse_u64(t);
  if (!value) return std::nullopt;
  if (mult != 1 && *value > ~0ull / mult) return std::nullopt;
  return *value * mult;
}

std::uint64_t require_size(const std::string& text, const std::string& flag) {
  auto value = parse_size(text);
  if (!value) throw CLI::ValidationError(flag, "cannot parse size: " + text);
  return *value;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = text.find(sep, pos);
    parts.push_back(text.substr(pos, next == std::string::npos ? next : next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return parts;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spill(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
  if (!out) throw ConfigError("write failed: " + path);
}

void emit(const std::string& out_path, const std::string& text, std::ostream& fallback) {
  if (out_path.empty())
    fallback << text;
  else
    spill(out_path, text);
}

// Raw option strings shared by every subcommand that defines a workload.
struct WorkloadFlags {
  std::string kind = "sequential";
  std::string base = "0";
  std::string length = "64M";
  std::uint64_t passes = 1;
  std::string stride = "4096";
  std::uint64_t accesses = 1000000;
  std::vector<std::string> hot_ranges;
  std::uint64_t seed = 0;
  std::string trace_path;

  void add_to(CLI::App* app, bool with_trace) {
    app->add_option("--workload", kind, "Synthetic access pattern")
        ->check(CLI::IsMember({"sequential", "uniform", "hotspot", "chase"}))
        ->capture_default_str();
    app->add_option("--base", base, "Workload base address")->capture_default_str();
    app->add_option("--length", length, "Workload span in bytes")->capture_default_str();
    app->add_option("--passes", passes, "Sequential passes over the span")
        ->capture_default_str();
    app->add_option("--stride", stride, "Sequential stride in bytes")
        ->capture_default_str();
    app->add_option("--accesses", accesses, "Accesses for random workloads")
        ->capture_default_str();
    app->add_option("--hot-range", hot_ranges,
                    "Hotspot range START:END:WEIGHT (repeatable)");
    app->add_option("--seed", seed, "Master seed for every random stream")
        ->capture_default_str();
    if (with_trace)
      app->add_option("--trace", trace_path, "Read accesses from a trace file instead");
  }

  WorkloadSpec build() const {
    WorkloadSpec spec;
    spec.kind = *workload_kind_from_name(kind);
    spec.base = require_size(base, "--base");
    spec.length_bytes = require_size(length, "--length");
    spec.passes = passes;
    spec.stride_bytes = require_size(stride, "--stride");
    spec.access_count = accesses;
    for (const std::string& text : hot_ranges) {
      std::vector<std::string> parts = split(text, ':');
      if (parts.size() != 3)
        throw CLI::ValidationError("--hot-range", "expected START:END:WEIGHT: " + text);
      HotRange hr;
      hr.range.start = require_size(parts[0], "--hot-range");
      hr.range.end = require_size(parts[1], "--hot-range");
      auto weight = parse_double(parts[2]);
      if (!weight)
        throw CLI::ValidationError("--hot-range", "cannot parse weight: " + parts[2]);
      hr.weight = *weight;
      spec.hot_ranges.push_back(hr);
    }
    spec.rng_seed = derive_seed(seed, kSeedSaltTrace);
    return spec;
  }
};

// Raw option strings for the simulated machine.
struct MachineFlags {
  std::string vma;
  std::uint64_t mem_frames = 1ull << 16;
  double frag_occupancy = 0.0;
  std::string frag_pattern = "spread";
  double frag_movable = 1.0;
  std::uint64_t tlb_entries = 64;
  std::uint64_t walk_cycles = 200;
  std::uint64_t hit_cycles = 0;
  std::uint64_t zero_cycles = 500;
  std::uint64_t compact_cycles = 2000;
  std::uint64_t alloc_cycles = 100;
  std::uint64_t horizon = 100000;
  double miss_fraction = 0.5;

  void add_to(CLI::App* app) {
    app->add_option("--vma", vma, "Mapping bounds START:END (default: workload extent)");
    app->add_option("--mem-frames", mem_frames, "Physical memory in 4 KiB frames")
        ->capture_default_str();
    app->add_option("--frag-occupancy", frag_occupancy,
                    "Fraction of frames pre-occupied at boot")
        ->capture_default_str();
    app->add_option("--frag-pattern", frag_pattern, "Backdrop placement shape")
        ->check(CLI::IsMember({"spread", "clustered"}))
        ->capture_default_str();
    app->add_option("--frag-movable", frag_movable,
                    "Fraction of backdrop blocks compaction may move")
        ->capture_default_str();
    app->add_option("--tlb-entries", tlb_entries, "Translation cache entries")
        ->capture_default_str();
    app->add_option("--walk-cycles", walk_cycles, "Page walk cost in cycles")
        ->capture_default_str();
    app->add_option("--hit-cycles", hit_cycles, "Translation hit cost in cycles")
        ->capture_default_str();
    app->add_option("--zero-cycles", zero_cycles, "Zeroing cost per 4 KiB frame")
        ->capture_default_str();
    app->add_option("--compact-cycles", compact_cycles, "Cost per frame moved")
        ->capture_default_str();
    app->add_option("--alloc-cycles", alloc_cycles, "Cost per allocation attempt")
        ->capture_default_str();
    app->add_option("--horizon", horizon, "Accesses a promotion is judged over")
        ->capture_default_str();
    app->add_option("--miss-fraction", miss_fraction,
                    "Fraction of judged accesses that would walk")
        ->capture_default_str();
  }
};

// Monitor options stand alone because profile-gen uses them without the rest
// of the machine.
struct MonitorFlags {
  std::uint64_t sampling_interval = 1000;
  std::uint32_t agg_ticks = 20;
  std::uint64_t min_regions = 10;
  std::uint64_t max_regions = 500;
  std::uint32_t merge_threshold = 2;

  void add_to(CLI::App* app) {
    app->add_option("--sampling-interval", sampling_interval,
                    "Accesses between sampling ticks")
        ->capture_default_str();
    app->add_option("--agg-ticks", agg_ticks, "Ticks per published snapshot")
        ->capture_default_str();
    app->add_option("--min-regions", min_regions, "Lower bound on monitor regions")
        ->capture_default_str();
    app->add_option("--max-regions", max_regions, "Upper bound on monitor regions")
        ->capture_default_str();
    app->add_option("--merge-threshold", merge_threshold,
                    "Max count delta for merging adjacent regions")
        ->capture_default_str();
  }

  MonitorConfig build() const {
    MonitorConfig cfg;
    cfg.sampling_interval = sampling_interval;
    cfg.aggregation_ticks = agg_ticks;
    cfg.min_regions = min_regions;
    cfg.max_regions = max_regions;
    cfg.merge_threshold = merge_threshold;
    return cfg;
  }
};

AddrRange parse_vma(const std::string& text) {
  std::vector<std::string> parts = split(text, ':');
  if (parts.size() != 2)
    throw CLI::ValidationError("--vma", "expected START:END: " + text);
  return {require_size(parts[0], "--vma"), require_size(parts[1], "--vma")};
}

// Smallest 32 MiB aligned cover of the workload extent, so every candidate
// size stays inside the bounds.
AddrRange default_vma(const WorkloadSpec& spec) {
  AddrRange extent = spec.extent();
  std::uint64_t huge = bytes_of(PageSize::Huge32M);
  return {align_down(extent.start, huge), align_up(extent.end, huge)};
}

SimConfig build_sim_config(const WorkloadFlags& wf, const MachineFlags& mf,
                           const MonitorFlags& nf) {
  SimConfig cfg;
  cfg.trace_path = wf.trace_path;
  if (cfg.trace_path.empty()) cfg.workload = wf.build();
  if (!mf.vma.empty())
    cfg.vma = parse_vma(mf.vma);
  else if (cfg.trace_path.empty())
    cfg.vma = default_vma(cfg.workload);
  else
    throw ConfigError("--trace requires explicit --vma bounds");
  cfg.mem_frames = mf.mem_frames;
  cfg.fragment.occupancy = mf.frag_occupancy;
  cfg.fragment.pattern =
      mf.frag_pattern == "clustered" ? FragPattern::Clustered : FragPattern::Spread;
  cfg.fragment.movable_fraction = mf.frag_movable;
  cfg.tlb.entries = mf.tlb_entries;
  cfg.tlb.walk_cycles = mf.walk_cycles;
  cfg.tlb.hit_cycles = mf.hit_cycles;
  cfg.costs.zero_cycles_per_4k = mf.zero_cycles;
  cfg.costs.compact_cycles_per_moved_frame = mf.compact_cycles;
  cfg.costs.alloc_fastpath_cycles = mf.alloc_cycles;
  cfg.benefit.horizon_accesses = mf.horizon;
  cfg.benefit.miss_fraction = mf.miss_fraction;
  cfg.benefit.walk_cycles = mf.walk_cycles;
  cfg.monitor = nf.build();
  cfg.master_seed = wf.seed;
  return cfg;
}

Profile load_profile(const std::string& path) {
  if (path.empty()) return {};
  return parse_profile(slurp(path));
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Huge page sizing simulator"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from an INI file (sections per command)");
  app.fallthrough();

  // run
  auto* run = app.add_subcommand("run", "Simulate one policy and print its report");
  WorkloadFlags run_wf;
  MachineFlags run_mf;
  MonitorFlags run_nf;
  std::string run_policy_name = "ebpfmm";
  std::string run_profile_path;
  std::string run_out;
  run_wf.add_to(run, true);
  run_mf.add_to(run);
  run_nf.add_to(run);
  run->add_option("--policy", run_policy_name, "Sizing policy")
      ->check(CLI::IsMember({"base4k", "thp", "ebpfmm"}))
      ->capture_default_str();
  run->add_option("--profile", run_profile_path, "Placement profile file");
  run->add_option("--out", run_out, "Write the report here instead of stdout");
  run->callback([&] {
    SimConfig cfg = build_sim_config(run_wf, run_mf, run_nf);
    cfg.policy = *policy_from_name(run_policy_name);
    Profile profile = load_profile(run_profile_path);
    SimReport report = sim_run(cfg, &profile);
    emit(run_out, report_csv(report), out);
  });

  // compare
  auto* cmp = app.add_subcommand("compare", "Run several policies over one workload");
  WorkloadFlags cmp_wf;
  MachineFlags cmp_mf;
  MonitorFlags cmp_nf;
  std::vector<std::string> cmp_policies = {"base4k", "thp", "ebpfmm"};
  std::string cmp_profile_path;
  std::string cmp_out;
  cmp_wf.add_to(cmp, true);
  cmp_mf.add_to(cmp);
  cmp_nf.add_to(cmp);
  cmp->add_option("--policies", cmp_policies, "Policies to compare, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  cmp->add_option("--profile", cmp_profile_path, "Placement profile file");
  cmp->add_option("--out", cmp_out, "Write the table here instead of stdout");
  cmp->callback([&] {
    SimConfig cfg = build_sim_config(cmp_wf, cmp_mf, cmp_nf);
    std::vector<PolicyKind> policies;
    for (const std::string& name : cmp_policies) {
      auto kind = policy_from_name(name);
      if (!kind) throw CLI::ValidationError("--policies", "unknown policy: " + name);
      policies.push_back(*kind);
    }
    Profile profile = load_profile(cmp_profile_path);
    std::vector<ComparisonRow> rows = sim_compare(cfg, policies, &profile);
    emit(cmp_out, comparison_csv(rows), out);
  });

  // gen-trace
  auto* gen = app.add_subcommand("gen-trace", "Materialize a synthetic trace file");
  WorkloadFlags gen_wf;
  std::string gen_out;
  gen_wf.add_to(gen, false);
  gen->add_option("--out", gen_out, "Trace path (.gz compresses)")->required();
  gen->callback([&] {
    WorkloadSpec spec = gen_wf.build();
    auto source = make_generator(spec);
    write_trace(gen_out, *source);
  });

  // profile-gen
  auto* pg = app.add_subcommand("profile-gen",
                                "Monitor a workload and derive a placement profile");
  WorkloadFlags pg_wf;
  MonitorFlags pg_nf;
  std::string pg_vma;
  double pg_threshold = 0.5;
  double pg_w64k = 1.0, pg_w2m = 1.0, pg_w32m = 1.0;
  std::string pg_snapshot_in, pg_snapshot_out, pg_out;
  pg_wf.add_to(pg, true);
  pg_nf.add_to(pg);
  pg->add_option("--vma", pg_vma, "Monitored bounds START:END (default: workload extent)");
  pg->add_option("--hot-threshold", pg_threshold, "Frequency a hot region must clear")
      ->capture_default_str();
  pg->add_option("--w64k", pg_w64k, "Benefit weight for 64 KiB")->capture_default_str();
  pg->add_option("--w2m", pg_w2m, "Benefit weight for 2 MiB")->capture_default_str();
  pg->add_option("--w32m", pg_w32m, "Benefit weight for 32 MiB")->capture_default_str();
  pg->add_option("--snapshot-in", pg_snapshot_in,
                 "Build the profile from this snapshot instead of monitoring");
  pg->add_option("--snapshot-out", pg_snapshot_out, "Also write the snapshot here");
  pg->add_option("--out", pg_out, "Profile path instead of stdout");
  pg->callback([&] {
    MonitorSnapshot snapshot;
    if (!pg_snapshot_in.empty()) {
      snapshot = parse_snapshot_csv(slurp(pg_snapshot_in));
    } else {
      SimConfig cfg;
      cfg.trace_path = pg_wf.trace_path;
      if (cfg.trace_path.empty()) cfg.workload = pg_wf.build();
      if (!pg_vma.empty())
        cfg.vma = parse_vma(pg_vma);
      else if (cfg.trace_path.empty())
        cfg.vma = default_vma(cfg.workload);
      else
        throw ConfigError("--trace requires explicit --vma bounds");
      cfg.monitor = pg_nf.build();
      cfg.master_seed = pg_wf.seed;
      snapshot = run_monitoring_pass(cfg);
    }
    if (!pg_snapshot_out.empty()) spill(pg_snapshot_out, snapshot_csv(snapshot));
    BenefitWeights weights{pg_w64k, pg_w2m, pg_w32m};
    Profile profile = profile_from_snapshot(snapshot, pg_threshold, weights);
    emit(pg_out, serialize_profile(profile), out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace hpsim
