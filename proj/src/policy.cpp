// SPDX-License-Identifier: Apache-2.0

#include "hpsim/policy.hpp"

namespace hpsim {

std::string_view decision_reason_name(DecisionReason reason) {
  switch (reason) {
    case DecisionReason::NoProfile:
      return "no_profile";
    case DecisionReason::NoRegion:
      return "no_region";
    case DecisionReason::NetNegative:
      return "net_negative";
    case DecisionReason::Chosen:
      return "chosen";
  }
  return "unknown";
}

std::optional<PolicyKind> policy_from_name(std::string_view name) {
  if (name == "base4k") return PolicyKind::Base4K;
  if (name == "thp") return PolicyKind::Thp;
  if (name == "ebpfmm") return PolicyKind::Ebpfmm;
  return std::nullopt;
}

std::string_view policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Base4K:
      return "base4k";
    case PolicyKind::Thp:
      return "thp";
    case PolicyKind::Ebpfmm:
      return "ebpfmm";
  }
  return "unknown";
}

double promotion_benefit(PageSize size, double frequency, const BenefitWeights& weights,
                         const BenefitParams& params) {
  return weights.for_size(size) * frequency *
         static_cast<double>(params.horizon_accesses) * params.miss_fraction *
         static_cast<double>(params.walk_cycles);
}

std::optional<std::uint64_t> promotion_cost(PageSize size, const FaultContext& ctx) {
  std::uint64_t cost = zeroing_cost(size, ctx.costs);
  if (ctx.has_free_block && ctx.has_free_block(order_of(size))) return cost;
  if (!ctx.compaction_estimate) return std::nullopt;
  auto moved = ctx.compaction_estimate(order_of(size));
  if (!moved) return std::nullopt;
  return cost + compaction_cost(*moved, ctx.costs);
}

Decision policy_base4k(const FaultContext&) {
  return {PageSize::Base4K, DecisionReason::NoProfile, {}};
}

Decision policy_thp(const FaultContext& ctx) {
  VirtAddr base = align_down(ctx.vaddr, PageSize::Huge2M);
  AddrRange extent{base, base + bytes_of(PageSize::Huge2M)};
  if (!ctx.vma.contains(extent)) return {PageSize::Base4K, DecisionReason::NoRegion, {}};
  return {PageSize::Huge2M, DecisionReason::Chosen, {}};
}

Decision policy_ebpfmm(const FaultContext& ctx) {
  if (ctx.profile == nullptr || ctx.profile->empty())
    return {PageSize::Base4K, DecisionReason::NoProfile, {}};
  const ProfiledRegion* region = ctx.profile->lookup(ctx.vaddr);
  if (region == nullptr) return {PageSize::Base4K, DecisionReason::NoRegion, {}};

  Decision decision{PageSize::Base4K, DecisionReason::NetNegative, {}};
  double best_net = 0.0;  // a winner must be strictly positive
  for (PageSize size : kHugeSizes) {
    VirtAddr base = align_down(ctx.vaddr, size);
    AddrRange extent{base, base + bytes_of(size)};
    if (!ctx.vma.contains(extent)) continue;
    auto cost = promotion_cost(size, ctx);
    if (!cost) continue;  // neither free nor compactable: unallocatable
    double frequency =
        ctx.snapshot != nullptr ? access_frequency(*ctx.snapshot, extent) : 1.0;
    double net = promotion_benefit(size, frequency, region->weights, ctx.benefit) -
                 static_cast<double>(*cost);
    decision.nets.push_back({size, net});
    // Strict comparison in ascending size order: ties keep the smaller page.
    if (net > best_net) {
      best_net = net;
      decision.size = size;
      decision.reason = DecisionReason::Chosen;
    }
  }
  return decision;
}

Decision run_policy(PolicyKind kind, const FaultContext& ctx) {
  switch (kind) {
    case PolicyKind::Base4K:
      return policy_base4k(ctx);
    case PolicyKind::Thp:
      return policy_thp(ctx);
    case PolicyKind::Ebpfmm:
      return policy_ebpfmm(ctx);
  }
  throw InvalidParam("unknown policy");
}

}  // namespace hpsim
