// SPDX-License-Identifier: Apache-2.0

#include <array>
#include <cmath>

#include "doctest.h"
#include "hpsim/policy.hpp"

using namespace hpsim;

namespace {

Profile whole_range_profile(AddrRange range, BenefitWeights weights) {
  Profile p;
  p.regions.push_back({range, weights});
  return p;
}

FaultContext context_with_free_memory(VirtAddr vaddr, AddrRange vma, const Profile* profile) {
  FaultContext ctx;
  ctx.vaddr = vaddr;
  ctx.vma = vma;
  ctx.profile = profile;
  ctx.has_free_block = [](unsigned) { return true; };
  ctx.compaction_estimate = [](unsigned) { return std::optional<std::uint64_t>(0); };
  return ctx;
}

// Independent re-derivation of the selection rule: evaluate every candidate,
// then take the smallest size attaining the (strictly positive) maximum.
Decision oracle_ebpfmm(const FaultContext& ctx) {
  if (ctx.profile == nullptr || ctx.profile->empty())
    return {PageSize::Base4K, DecisionReason::NoProfile, {}};
  const ProfiledRegion* region = nullptr;
  for (const ProfiledRegion& r : ctx.profile->regions)
    if (r.range.contains(ctx.vaddr)) region = &r;
  if (region == nullptr) return {PageSize::Base4K, DecisionReason::NoRegion, {}};

  std::vector<CandidateNet> nets;
  for (PageSize size : kHugeSizes) {
    VirtAddr base = align_down(ctx.vaddr, size);
    AddrRange extent{base, base + bytes_of(size)};
    if (!ctx.vma.contains(extent)) continue;
    std::optional<std::uint64_t> cost;
    if (ctx.has_free_block && ctx.has_free_block(order_of(size)))
      cost = zeroing_cost(size, ctx.costs);
    else if (ctx.compaction_estimate) {
      if (auto moved = ctx.compaction_estimate(order_of(size)))
        cost = zeroing_cost(size, ctx.costs) + compaction_cost(*moved, ctx.costs);
    }
    if (!cost) continue;
    double frequency =
        ctx.snapshot != nullptr ? access_frequency(*ctx.snapshot, extent) : 1.0;
    double benefit = region->weights.for_size(size) * frequency *
                     static_cast<double>(ctx.benefit.horizon_accesses) *
                     ctx.benefit.miss_fraction *
                     static_cast<double>(ctx.benefit.walk_cycles);
    nets.push_back({size, benefit - static_cast<double>(*cost)});
  }
  Decision decision{PageSize::Base4K, DecisionReason::NetNegative, nets};
  std::size_t winner = nets.size();
  for (std::size_t i = 0; i < nets.size(); ++i)
    if (nets[i].net > 0 && (winner == nets.size() || nets[i].net > nets[winner].net))
      winner = i;
  if (winner != nets.size()) {
    decision.size = nets[winner].size;
    decision.reason = DecisionReason::Chosen;
  }
  return decision;
}

}  // namespace

TEST_CASE("policy names round-trip and reasons have stable labels") {
  CHECK(policy_from_name("base4k") == PolicyKind::Base4K);
  CHECK(policy_from_name("thp") == PolicyKind::Thp);
  CHECK(policy_from_name("ebpfmm") == PolicyKind::Ebpfmm);
  CHECK(!policy_from_name("hugetlbfs").has_value());
  for (PolicyKind kind : {PolicyKind::Base4K, PolicyKind::Thp, PolicyKind::Ebpfmm})
    CHECK(policy_from_name(policy_name(kind)) == kind);
  CHECK(decision_reason_name(DecisionReason::NoProfile) == "no_profile");
  CHECK(decision_reason_name(DecisionReason::NoRegion) == "no_region");
  CHECK(decision_reason_name(DecisionReason::NetNegative) == "net_negative");
  CHECK(decision_reason_name(DecisionReason::Chosen) == "chosen");
}

TEST_CASE("base4k never promotes and thp promotes whenever the extent fits") {
  FaultContext ctx;
  ctx.vaddr = 0x345678;
  ctx.vma = {0, 64 * 1024 * 1024};
  CHECK(policy_base4k(ctx) == Decision{PageSize::Base4K, DecisionReason::NoProfile, {}});
  CHECK(policy_thp(ctx) == Decision{PageSize::Huge2M, DecisionReason::Chosen, {}});
  CHECK(run_policy(PolicyKind::Thp, ctx) == policy_thp(ctx));

  ctx.vma = {0, 1 << 20};  // smaller than one 2 MiB extent
  CHECK(policy_thp(ctx).reason == DecisionReason::NoRegion);
  ctx.vma = {1 << 20, 5 << 20};
  ctx.vaddr = 0x150000;  // extent [0, 2M) pokes below the mapping
  CHECK(policy_thp(ctx) == Decision{PageSize::Base4K, DecisionReason::NoRegion, {}});
}

TEST_CASE("selection without hints or without coverage stays at 4K") {
  AddrRange vma{0, 64 * 1024 * 1024};
  FaultContext ctx = context_with_free_memory(0x1000, vma, nullptr);
  CHECK(policy_ebpfmm(ctx) == Decision{PageSize::Base4K, DecisionReason::NoProfile, {}});
  Profile empty;
  ctx.profile = &empty;
  CHECK(policy_ebpfmm(ctx) == Decision{PageSize::Base4K, DecisionReason::NoProfile, {}});
  Profile far = whole_range_profile({0x4000000, 0x4010000}, {});
  ctx.profile = &far;
  CHECK(policy_ebpfmm(ctx) == Decision{PageSize::Base4K, DecisionReason::NoRegion, {}});
}

TEST_CASE("net benefit picks the most profitable size with frozen arithmetic") {
  AddrRange vma{0, 64 * 1024 * 1024};
  // Defaults: benefit = w * f * 100000 * 0.5 * 200 = w * f * 1e7.
  {
    Profile p = whole_range_profile(vma, {1.0, 1.0, 1.0});
    FaultContext ctx = context_with_free_memory(0x1000, vma, &p);
    Decision d = policy_ebpfmm(ctx);
    CHECK(d.size == PageSize::Huge64K);
    CHECK(d.reason == DecisionReason::Chosen);
    REQUIRE(d.nets.size() == 3);
    CHECK(d.nets[0] == CandidateNet{PageSize::Huge64K, 9992000.0});
    CHECK(d.nets[1] == CandidateNet{PageSize::Huge2M, 9744000.0});
    CHECK(d.nets[2] == CandidateNet{PageSize::Huge32M, 5904000.0});
  }
  {
    Profile p = whole_range_profile(vma, {0.1, 1.0, 1.0});
    FaultContext ctx = context_with_free_memory(0x1000, vma, &p);
    Decision d = policy_ebpfmm(ctx);
    CHECK(d.size == PageSize::Huge2M);
    CHECK(d.nets[0].net == doctest::Approx(992000.0));
  }
}

TEST_CASE("exact ties keep the smallest page size") {
  AddrRange vma{0, 64 * 1024 * 1024};
  FaultContext base = context_with_free_memory(0x1000, vma, nullptr);
  base.costs.zero_cycles_per_4k = 0;  // costs vanish: nets equal pure benefit
  {
    Profile p = whole_range_profile(vma, {0.5, 0.5, 0.5});
    FaultContext ctx = base;
    ctx.profile = &p;
    Decision d = policy_ebpfmm(ctx);
    CHECK(d.size == PageSize::Huge64K);
    for (const CandidateNet& c : d.nets) CHECK(c.net == 5000000.0);
  }
  {
    Profile p = whole_range_profile(vma, {0.1, 0.5, 0.5});
    FaultContext ctx = base;
    ctx.profile = &p;
    CHECK(policy_ebpfmm(ctx).size == PageSize::Huge2M);  // 2M/32M tie, smaller wins
  }
}

TEST_CASE("a zero or negative net never promotes") {
  AddrRange vma{0, 64 * 1024 * 1024};
  Profile p = whole_range_profile(vma, {1.0, 1.0, 1.0});
  FaultContext ctx = context_with_free_memory(0x0, vma, &p);
  // benefit = w * 1000 * 0.5 * 16 = 8000: exactly the 64K zeroing cost.
  ctx.benefit = {1000, 0.5, 16};
  Decision d = policy_ebpfmm(ctx);
  CHECK(d.size == PageSize::Base4K);
  CHECK(d.reason == DecisionReason::NetNegative);
  REQUIRE(d.nets.size() == 3);
  CHECK(d.nets[0] == CandidateNet{PageSize::Huge64K, 0.0});
  CHECK(d.nets[1].net < 0.0);
  CHECK(d.nets[2].net < 0.0);
}

TEST_CASE("unallocatable candidates are skipped, not priced") {
  AddrRange vma{0, 64 * 1024 * 1024};
  Profile p = whole_range_profile(vma, {1.0, 1.0, 1.0});
  FaultContext ctx = context_with_free_memory(0x1000, vma, &p);
  ctx.has_free_block = [](unsigned order) { return order != 4; };
  ctx.compaction_estimate = [](unsigned order) -> std::optional<std::uint64_t> {
    if (order == 4) return std::nullopt;
    return 0;
  };
  Decision d = policy_ebpfmm(ctx);
  REQUIRE(d.nets.size() == 2);  // 64K never evaluated
  CHECK(d.nets[0].size == PageSize::Huge2M);
  CHECK(d.nets[1].size == PageSize::Huge32M);
  CHECK(d.size == PageSize::Huge2M);

  // No probes wired at all means nothing is allocatable.
  FaultContext bare;
  bare.vaddr = 0x1000;
  bare.vma = vma;
  bare.profile = &p;
  Decision none = policy_ebpfmm(bare);
  CHECK(none.reason == DecisionReason::NetNegative);
  CHECK(none.nets.empty());
}

TEST_CASE("predicted compaction work is charged against the benefit") {
  AddrRange vma{0, 2 * 1024 * 1024};  // room for exactly one 2M extent
  Profile p = whole_range_profile(vma, {1.0, 0.05, 1.0});
  FaultContext ctx;
  ctx.vaddr = 0x1000;
  ctx.vma = vma;
  ctx.profile = &p;
  ctx.has_free_block = [](unsigned) { return false; };
  ctx.compaction_estimate = [](unsigned order) -> std::optional<std::uint64_t> {
    if (order == 9) return 100;
    return std::nullopt;
  };
  Decision d = policy_ebpfmm(ctx);
  REQUIRE(d.nets.size() == 1);
  // 0.05 * 1e7 - (256000 + 100 * 2000) = 44000.
  CHECK(d.nets[0] == CandidateNet{PageSize::Huge2M, 44000.0});
  CHECK(d.size == PageSize::Huge2M);
  CHECK(d.reason == DecisionReason::Chosen);
}

TEST_CASE("the mapping bounds clip the candidate list") {
  Profile p = whole_range_profile({0, 1 << 30}, {1.0, 1.0, 1.0});
  {
    FaultContext ctx = context_with_free_memory(0x5000, {0, 0x10000}, &p);
    Decision d = policy_ebpfmm(ctx);
    REQUIRE(d.nets.size() == 1);
    CHECK(d.nets[0] == CandidateNet{PageSize::Huge64K, 9992000.0});
    CHECK(d.size == PageSize::Huge64K);
  }
  {
    // 64 KiB of room, but the aligned 64K extent starts below the mapping.
    FaultContext ctx = context_with_free_memory(0x1000, {0x1000, 0x11000}, &p);
    Decision d = policy_ebpfmm(ctx);
    CHECK(d.nets.empty());
    CHECK(d.reason == DecisionReason::NetNegative);
  }
}

TEST_CASE("snapshot frequencies scale the benefit per candidate extent") {
  AddrRange vma{0, 32 * 1024 * 1024};
  Profile p = whole_range_profile(vma, {1.0, 1.0, 1.0});
  MonitorSnapshot snap;
  snap.taken_at = 100;
  snap.aggregation_interval = 20;
  snap.regions = {{{0, 1 << 20}, 5, 0}};  // frequency 0.25 over the first MiB
  FaultContext ctx = context_with_free_memory(0x1000, vma, &p);
  ctx.snapshot = &snap;
  Decision d = policy_ebpfmm(ctx);
  REQUIRE(d.nets.size() == 3);
  CHECK(d.nets[0] == CandidateNet{PageSize::Huge64K, 2492000.0});
  CHECK(d.nets[1] == CandidateNet{PageSize::Huge2M, 2244000.0});
  CHECK(d.nets[2] == CandidateNet{PageSize::Huge32M, -1596000.0});
  CHECK(d.size == PageSize::Huge64K);
}

TEST_CASE("selection agrees with a brute-force oracle on random contexts") {
  Rng rng(31337);
  const double weight_menu[5] = {0.0, 0.05, 0.1, 0.5, 1.0};
  for (int trial = 0; trial < 1000; ++trial) {
    AddrRange vma{0, (1 + rng.next_below(64)) * (1 << 20)};
    Profile p;
    VirtAddr cursor = 0;
    for (int r = 0; r < 3; ++r) {
      cursor += rng.next_below(4) * 0x10000;
      VirtAddr start = cursor;
      cursor += (1 + rng.next_below(64)) * 0x10000;
      p.regions.push_back({{start, cursor},
                           {weight_menu[rng.next_below(5)], weight_menu[rng.next_below(5)],
                            weight_menu[rng.next_below(5)]}});
    }
    std::array<bool, kMaxOrder + 1> free_table{};
    std::array<std::optional<std::uint64_t>, kMaxOrder + 1> estimate_table{};
    for (unsigned o = 0; o <= kMaxOrder; ++o) {
      free_table[o] = rng.next_below(3) == 0;
      if (rng.next_below(3) != 0) estimate_table[o] = rng.next_below(500);
    }
    MonitorSnapshot snap;
    snap.taken_at = 1;
    snap.aggregation_interval = 16;
    VirtAddr edge = 0;
    while (edge < vma.end) {
      VirtAddr next = std::min<VirtAddr>(edge + (1 + rng.next_below(256)) * 0x1000, vma.end);
      snap.regions.push_back(
          {{edge, next}, static_cast<std::uint32_t>(rng.next_below(17)), 0});
      edge = next;
    }

    FaultContext ctx;
    ctx.vaddr = rng.next_below(vma.end + 0x100000);
    ctx.vma = vma;
    ctx.profile = trial % 7 == 0 ? nullptr : &p;
    ctx.snapshot = trial % 3 == 0 ? nullptr : &snap;
    ctx.has_free_block = [&](unsigned order) { return free_table[order]; };
    ctx.compaction_estimate = [&](unsigned order) { return estimate_table[order]; };

    CHECK(policy_ebpfmm(ctx) == oracle_ebpfmm(ctx));
  }
}
