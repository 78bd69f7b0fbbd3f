// SPDX-License-Identifier: Apache-2.0

#include "hpsim/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hpsim {

namespace {

std::uint64_t require_u64(std::string_view text, std::size_t lineno) {
  auto value = parse_u64(text);
  if (!value) throw ParseError(lineno, "bad number: " + std::string(text));
  return *value;
}

}  // namespace

double access_frequency(const MonitorSnapshot& snapshot, AddrRange range) {
  if (!range.valid()) throw InvalidParam("frequency query over an empty range");
  if (snapshot.aggregation_interval == 0)
    throw InvalidParam("snapshot without an aggregation interval");
  double weighted = 0.0;
  std::uint64_t covered = 0;
  for (const MonitorRegion& r : snapshot.regions) {
    std::uint64_t lo = std::max(r.range.start, range.start);
    std::uint64_t hi = std::min(r.range.end, range.end);
    if (lo >= hi) continue;
    double freq = static_cast<double>(r.nr_accesses) /
                  static_cast<double>(snapshot.aggregation_interval);
    weighted += freq * static_cast<double>(hi - lo);
    covered += hi - lo;
  }
  if (covered == 0) throw AddressOutsideExtent("range misses every monitored region");
  return weighted / static_cast<double>(covered);
}

std::string snapshot_csv(const MonitorSnapshot& snapshot) {
  std::string out;
  out += "# taken_at," + std::to_string(snapshot.taken_at) + "\n";
  out += "# aggregation_interval," + std::to_string(snapshot.aggregation_interval) + "\n";
  out += "start,end,nr_accesses,age\n";
  for (const MonitorRegion& r : snapshot.regions) {
    out += format_hex(r.range.start) + "," + format_hex(r.range.end) + "," +
           std::to_string(r.nr_accesses) + "," + std::to_string(r.age) + "\n";
  }
  return out;
}

MonitorSnapshot parse_snapshot_csv(const std::string& text) {
  MonitorSnapshot snap;
  std::istringstream in(text);
  std::string line;
  std::uint64_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# taken_at,", 0) == 0) {
      snap.taken_at = require_u64(line.substr(11), lineno);
      continue;
    }
    if (line.rfind("# aggregation_interval,", 0) == 0) {
      snap.aggregation_interval =
          static_cast<std::uint32_t>(require_u64(line.substr(23), lineno));
      continue;
    }
    if (line[0] == '#') continue;
    if (!header_seen) {
      if (line != "start,end,nr_accesses,age")
        throw ParseError(lineno, "unexpected snapshot header: " + line);
      header_seen = true;
      continue;
    }
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      std::size_t comma = line.find(',', pos);
      fields.push_back(line.substr(pos, comma == std::string::npos ? comma : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (fields.size() != 4) throw ParseError(lineno, "snapshot row needs 4 fields");
    MonitorRegion r;
    r.range.start = require_u64(fields[0], lineno);
    r.range.end = require_u64(fields[1], lineno);
    r.nr_accesses = static_cast<std::uint32_t>(require_u64(fields[2], lineno));
    r.age = static_cast<std::uint32_t>(require_u64(fields[3], lineno));
    if (!r.range.valid())
      throw ParseError(lineno, "snapshot region must be a nonempty aligned range");
    if (!snap.regions.empty() && snap.regions.back().range.end != r.range.start)
      throw ParseError(lineno, "snapshot regions must be contiguous");
    snap.regions.push_back(r);
  }
  if (snap.regions.empty()) throw ParseError(lineno, "snapshot holds no regions");
  if (snap.aggregation_interval == 0)
    throw ParseError(lineno, "snapshot lacks an aggregation_interval header");
  return snap;
}

Monitor::Monitor(MonitorConfig config, AddrRange extent)
    : config_(config), extent_(extent), rng_(config.seed) {
  if (!extent.valid()) throw InvalidParam("monitor extent is empty");
  if (extent.start % kBaseFrameBytes != 0 || extent.end % kBaseFrameBytes != 0)
    throw InvalidParam("monitor extent must be page aligned");
  if (config_.sampling_interval == 0) throw InvalidParam("sampling interval must be positive");
  if (config_.aggregation_ticks == 0) throw InvalidParam("aggregation ticks must be positive");
  if (config_.min_regions == 0) throw InvalidParam("min regions must be positive");
  if (config_.max_regions < config_.min_regions)
    throw InvalidParam("max regions below min regions");
  std::uint64_t pages = extent.size_bytes() / kBaseFrameBytes;
  effective_min_ = static_cast<std::size_t>(
      std::min<std::uint64_t>(config_.min_regions, pages));
  // Initial partition: effective_min regions of near-equal page counts.
  std::uint64_t base_pages = pages / effective_min_;
  std::uint64_t extra = pages % effective_min_;
  VirtAddr cursor = extent.start;
  for (std::size_t i = 0; i < effective_min_; ++i) {
    std::uint64_t span = (base_pages + (i < extra ? 1 : 0)) * kBaseFrameBytes;
    regions_.push_back({{cursor, cursor + span}, 0, 0});
    cursor += span;
  }
  prev_nr_.assign(regions_.size(), 0);
}

void Monitor::record_access(VirtAddr vaddr) {
  ++accesses_;
  ++window_accesses_;
  if (extent_.contains(vaddr)) touched_.insert(vaddr / kBaseFrameBytes);
  if (window_accesses_ == config_.sampling_interval) {
    run_tick();
    window_accesses_ = 0;
    touched_.clear();
  }
}

void Monitor::run_tick() {
  for (MonitorRegion& r : regions_) {
    std::uint64_t pages = r.range.size_bytes() / kBaseFrameBytes;
    std::uint64_t page = r.range.start / kBaseFrameBytes + rng_.next_below(pages);
    if (touched_.count(page) != 0) ++r.nr_accesses;
  }
  ++ticks_;
  if (++ticks_in_aggregation_ == config_.aggregation_ticks) {
    run_aggregation();
    ticks_in_aggregation_ = 0;
  }
}

void Monitor::run_aggregation() {
  // Age grows while a region's count stays within the merge threshold of its
  // previous window; a jump resets it.
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    std::uint32_t delta = regions_[i].nr_accesses > prev_nr_[i]
                              ? regions_[i].nr_accesses - prev_nr_[i]
                              : prev_nr_[i] - regions_[i].nr_accesses;
    if (delta <= config_.merge_threshold)
      ++regions_[i].age;
    else
      regions_[i].age = 0;
    prev_nr_[i] = regions_[i].nr_accesses;
  }
  MonitorSnapshot snap;
  snap.taken_at = accesses_;
  snap.aggregation_interval = config_.aggregation_ticks;
  snap.regions = regions_;
  latest_ = std::move(snap);
  merge_pass();
  split_pass();
  for (MonitorRegion& r : regions_) r.nr_accesses = 0;
}

void Monitor::merge_pass() {
  // One greedy sweep joining adjacent regions with similar counts; byte
  // weighting keeps the merged count representative.
  std::size_t i = 0;
  while (i + 1 < regions_.size() && regions_.size() > effective_min_) {
    MonitorRegion& a = regions_[i];
    MonitorRegion& b = regions_[i + 1];
    std::uint32_t delta =
        a.nr_accesses > b.nr_accesses ? a.nr_accesses - b.nr_accesses
                                      : b.nr_accesses - a.nr_accesses;
    if (delta <= config_.merge_threshold) {
      double wa = static_cast<double>(a.range.size_bytes());
      double wb = static_cast<double>(b.range.size_bytes());
      std::uint32_t merged_nr = static_cast<std::uint32_t>(std::llround(
          (wa * a.nr_accesses + wb * b.nr_accesses) / (wa + wb)));
      std::uint32_t merged_prev = static_cast<std::uint32_t>(std::llround(
          (wa * prev_nr_[i] + wb * prev_nr_[i + 1]) / (wa + wb)));
      a.range.end = b.range.end;
      a.nr_accesses = merged_nr;
      a.age = std::min(a.age, b.age);
      prev_nr_[i] = merged_prev;
      regions_.erase(regions_.begin() + static_cast<std::ptrdiff_t>(i + 1));
      prev_nr_.erase(prev_nr_.begin() + static_cast<std::ptrdiff_t>(i + 1));
    } else {
      ++i;
    }
  }
}

void Monitor::split_pass() {
  // Each region splits into two or three pieces while room remains; pieces
  // inherit the parent's counters so frequency queries stay meaningful.
  std::vector<MonitorRegion> next;
  std::vector<std::uint32_t> next_prev;
  next.reserve(regions_.size() * 2);
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    MonitorRegion r = regions_[i];
    std::uint32_t prev = prev_nr_[i];
    std::size_t budget = config_.max_regions - next.size() -
                         (regions_.size() - 1 - i);  // keep room for the rest
    std::uint64_t pages = r.range.size_bytes() / kBaseFrameBytes;
    std::uint64_t pieces = std::min<std::uint64_t>(
        {2 + rng_.next_below(2), pages, static_cast<std::uint64_t>(budget)});
    if (pieces < 2) {
      next.push_back(r);
      next_prev.push_back(prev);
      continue;
    }
    VirtAddr cursor = r.range.start;
    std::uint64_t pages_left = pages;
    for (std::uint64_t p = pieces; p > 1; --p) {
      // Leave at least one page per remaining piece.
      std::uint64_t take = 1 + rng_.next_below(pages_left - (p - 1));
      next.push_back({{cursor, cursor + take * kBaseFrameBytes}, r.nr_accesses, r.age});
      next_prev.push_back(prev);
      cursor += take * kBaseFrameBytes;
      pages_left -= take;
    }
    next.push_back({{cursor, r.range.end}, r.nr_accesses, r.age});
    next_prev.push_back(prev);
  }
  regions_ = std::move(next);
  prev_nr_ = std::move(next_prev);
}

void Monitor::validate() const {
  if (regions_.empty()) throw std::logic_error("monitor lost every region");
  if (regions_.front().range.start != extent_.start ||
      regions_.back().range.end != extent_.end)
    throw std::logic_error("regions do not span the extent");
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    const MonitorRegion& r = regions_[i];
    if (!r.range.valid()) throw std::logic_error("empty monitor region");
    if (r.range.start % kBaseFrameBytes != 0 || r.range.end % kBaseFrameBytes != 0)
      throw std::logic_error("monitor region not page aligned");
    if (i > 0 && regions_[i - 1].range.end != r.range.start)
      throw std::logic_error("monitor regions not contiguous");
  }
  if (regions_.size() > config_.max_regions)
    throw std::logic_error("region count above maximum");
  if (prev_nr_.size() != regions_.size())
    throw std::logic_error("region bookkeeping out of step");
}

}  // namespace hpsim
