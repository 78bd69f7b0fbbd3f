// SPDX-License-Identifier: Apache-2.0
//
// Page-size selection at fault time.  Three policies share one interface:
// base4k always stays at 4 KiB, thp greedily takes 2 MiB whenever the extent
// fits the mapping bounds, and ebpfmm weighs profiled benefit against the
// zeroing and compaction cycles a promotion would cost.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "hpsim/core.hpp"
#include "hpsim/monitor.hpp"
#include "hpsim/physmem.hpp"
#include "hpsim/profile.hpp"

namespace hpsim {

// Benefit model: a huge page saves walk cycles over the accesses expected to
// land on it before conditions change.
struct BenefitParams {
  std::uint64_t horizon_accesses = 100000;  // accesses the mapping is judged over
  double miss_fraction = 0.5;  // fraction of those accesses that would walk
  std::uint64_t walk_cycles = 200;

  bool operator==(const BenefitParams&) const = default;
};

enum class DecisionReason : std::uint8_t {
  NoProfile,    // no hint data at all; stay at 4 KiB
  NoRegion,     // fault address not covered (ebpfmm) or extent out of bounds (thp)
  NetNegative,  // every viable candidate priced out
  Chosen,       // a huge size won
};

std::string_view decision_reason_name(DecisionReason reason);

struct CandidateNet {
  PageSize size;
  double net;

  bool operator==(const CandidateNet&) const = default;
};

struct Decision {
  PageSize size = PageSize::Base4K;
  DecisionReason reason = DecisionReason::NoProfile;
  std::vector<CandidateNet> nets;  // evaluated candidates, ascending size

  bool operator==(const Decision&) const = default;
};

enum class PolicyKind : std::uint8_t { Base4K, Thp, Ebpfmm };

std::optional<PolicyKind> policy_from_name(std::string_view name);
std::string_view policy_name(PolicyKind kind);

// Everything a policy may consult for one fault.  The allocator probes are
// callbacks so policies stay testable without a real memory behind them.
struct FaultContext {
  VirtAddr vaddr = 0;
  AddrRange vma;
  const Profile* profile = nullptr;           // null or empty: no hints
  const MonitorSnapshot* snapshot = nullptr;  // null: assume frequency 1
  BenefitParams benefit;
  CostParams costs;
  std::function<bool(unsigned order)> has_free_block;
  std::function<std::optional<std::uint64_t>(unsigned order)> compaction_estimate;
};

// Walk cycles saved by mapping `size` here, before subtracting costs.
double promotion_benefit(PageSize size, double frequency, const BenefitWeights& weights,
                         const BenefitParams& params);

// Zeroing plus predicted compaction for `size`, or nullopt when neither a
// free block nor a feasible compaction plan exists.
std::optional<std::uint64_t> promotion_cost(PageSize size, const FaultContext& ctx);

Decision policy_base4k(const FaultContext& ctx);
Decision policy_thp(const FaultContext& ctx);
Decision policy_ebpfmm(const FaultContext& ctx);
Decision run_policy(PolicyKind kind, const FaultContext& ctx);

}  // namespace hpsim
