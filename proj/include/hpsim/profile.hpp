// SPDX-License-Identifier: Apache-2.0
//
// Placement profiles: sorted, disjoint virtual ranges annotated with one
// benefit weight per huge page size.  Profiles are produced offline (by hand
// or from monitor snapshots) and consulted by the size selection policy.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hpsim/core.hpp"
#include "hpsim/monitor.hpp"

namespace hpsim {

struct BenefitWeights {
  double w64k = 1.0;
  double w2m = 1.0;
  double w32m = 1.0;

  double for_size(PageSize size) const;

  bool operator==(const BenefitWeights&) const = default;
};

struct ProfiledRegion {
  AddrRange range;
  BenefitWeights weights;

  bool operator==(const ProfiledRegion&) const = default;
};

class ProfileOverlapError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NegativeWeightError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Profile {
  std::string name = "default";
  std::vector<ProfiledRegion> regions;  // sorted by start, pairwise disjoint

  // Region containing vaddr, or nullptr.  Binary search over the sorted list.
  const ProfiledRegion* lookup(VirtAddr vaddr) const;

  bool empty() const { return regions.empty(); }
};

// Builds a profile from region lines, validating alignment, order and
// disjointness.  Line format (whitespace separated, '#' comments):
//   region <start> <end> <w64k> <w2m> <w32m>
Profile parse_profile(const std::string& text);

std::string serialize_profile(const Profile& profile);

// Derives hint regions from a snapshot: maximal runs of monitor regions whose
// frequency clears `hot_threshold`, rounded outward to 64 KiB boundaries and
// merged when rounding makes them touch.  Every emitted region carries
// `weights`.
Profile profile_from_snapshot(const MonitorSnapshot& snapshot, double hot_threshold,
                              BenefitWeights weights);

}  // namespace hpsim
