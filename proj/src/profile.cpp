// SPDX-License-Identifier: Apache-2.0

#include "hpsim/profile.hpp"

#include <algorithm>
#include <sstream>

namespace hpsim {

namespace {

std::uint64_t require_u64(std::string_view text, std::size_t lineno) {
  auto value = parse_u64(text);
  if (!value) throw ParseError(lineno, "bad number: " + std::string(text));
  return *value;
}

double require_double(std::string_view text, std::size_t lineno) {
  auto value = parse_double(text);
  if (!value) throw ParseError(lineno, "bad weight: " + std::string(text));
  return *value;
}

}  // namespace

double BenefitWeights::for_size(PageSize size) const {
  switch (size) {
    case PageSize::Huge64K:
      return w64k;
    case PageSize::Huge2M:
      return w2m;
    case PageSize::Huge32M:
      return w32m;
    case PageSize::Base4K:
      break;
  }
  throw InvalidParam("benefit weights exist only for huge sizes");
}

const ProfiledRegion* Profile::lookup(VirtAddr vaddr) const {
  // First region starting after vaddr; the candidate is its predecessor.
  auto it = std::upper_bound(
      regions.begin(), regions.end(), vaddr,
      [](VirtAddr v, const ProfiledRegion& r) { return v < r.range.start; });
  if (it == regions.begin()) return nullptr;
  --it;
  return it->range.contains(vaddr) ? &*it : nullptr;
}

Profile parse_profile(const std::string& text) {
  Profile profile;
  std::istringstream in(text);
  std::string line;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string keyword;
    if (!(fields >> keyword)) continue;  // blank line
    if (keyword != "region") throw ParseError(lineno, "unknown directive: " + keyword);
    std::string start_s, end_s, w64k_s, w2m_s, w32m_s, extra;
    if (!(fields >> start_s >> end_s >> w64k_s >> w2m_s >> w32m_s))
      throw ParseError(lineno, "region needs start, end and three weights");
    if (fields >> extra) throw ParseError(lineno, "trailing fields after weights");
    ProfiledRegion region;
    region.range.start = require_u64(start_s, lineno);
    region.range.end = require_u64(end_s, lineno);
    region.weights.w64k = require_double(w64k_s, lineno);
    region.weights.w2m = require_double(w2m_s, lineno);
    region.weights.w32m = require_double(w32m_s, lineno);
    if (region.range.start % kBaseFrameBytes != 0 ||
        region.range.end % kBaseFrameBytes != 0)
      throw ParseError(lineno, "region must be 4 KiB aligned");
    if (region.range.end > kAddrSpaceLimit)
      throw ParseError(lineno, "region beyond the address space");
    if (region.range.start >= region.range.end)
      throw ParseError(lineno, "region is empty or inverted");
    if (region.weights.w64k < 0 || region.weights.w2m < 0 || region.weights.w32m < 0)
      throw NegativeWeightError("negative weight in region at line " +
                                std::to_string(lineno));
    profile.regions.push_back(region);
  }
  std::vector<ProfiledRegion> sorted = profile.regions;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ProfiledRegion& a, const ProfiledRegion& b) {
                     return a.range.start < b.range.start;
                   });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i - 1].range.end > sorted[i].range.start)
      throw ProfileOverlapError(
          "regions overlap: [" + format_hex(sorted[i - 1].range.start) + ", " +
          format_hex(sorted[i - 1].range.end) + ") and [" +
          format_hex(sorted[i].range.start) + ", " + format_hex(sorted[i].range.end) + ")");
  }
  profile.regions = std::move(sorted);
  return profile;
}

std::string serialize_profile(const Profile& profile) {
  std::string out;
  for (const ProfiledRegion& r : profile.regions) {
    out += "region " + format_hex(r.range.start) + " " + format_hex(r.range.end) + " " +
           format_double(r.weights.w64k) + " " + format_double(r.weights.w2m) + " " +
           format_double(r.weights.w32m) + "\n";
  }
  return out;
}

Profile profile_from_snapshot(const MonitorSnapshot& snapshot, double hot_threshold,
                              BenefitWeights weights) {
  if (weights.w64k < 0 || weights.w2m < 0 || weights.w32m < 0)
    throw NegativeWeightError("negative benefit weight");
  constexpr std::uint64_t kRound = 64 * 1024;
  Profile profile;
  std::optional<AddrRange> run;
  auto flush = [&] {
    if (!run) return;
    AddrRange rounded{align_down(run->start, kRound), align_up(run->end, kRound)};
    if (!profile.regions.empty() && profile.regions.back().range.end >= rounded.start)
      profile.regions.back().range.end =
          std::max(profile.regions.back().range.end, rounded.end);
    else
      profile.regions.push_back({rounded, weights});
    run.reset();
  };
  for (const MonitorRegion& r : snapshot.regions) {
    double freq = static_cast<double>(r.nr_accesses) /
                  static_cast<double>(snapshot.aggregation_interval);
    if (freq >= hot_threshold) {
      if (run && run->end == r.range.start)
        run->end = r.range.end;
      else {
        flush();
        run = r.range;
      }
    } else {
      flush();
    }
  }
  flush();
  return profile;
}

}  // namespace hpsim
