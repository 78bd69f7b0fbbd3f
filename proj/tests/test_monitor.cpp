// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"
#include "hpsim/monitor.hpp"

using namespace hpsim;

namespace {

MonitorSnapshot sample_snapshot() {
  MonitorSnapshot snap;
  snap.taken_at = 4200;
  snap.aggregation_interval = 20;
  snap.regions = {{{0x0, 0x2000}, 10, 3}, {{0x2000, 0x4000}, 0, 7}};
  return snap;
}

}  // namespace

TEST_CASE("initial partition spreads pages near-equally") {
  MonitorConfig cfg;
  cfg.min_regions = 10;
  {
    Monitor mon(cfg, {0, 100 * kBaseFrameBytes});
    REQUIRE(mon.regions().size() == 10);
    for (const MonitorRegion& r : mon.regions())
      CHECK(r.range.size_bytes() == 10 * kBaseFrameBytes);
    mon.validate();
  }
  {
    Monitor mon(cfg, {0, 103 * kBaseFrameBytes});
    REQUIRE(mon.regions().size() == 10);
    for (std::size_t i = 0; i < 10; ++i)
      CHECK(mon.regions()[i].range.size_bytes() == (i < 3 ? 11 : 10) * kBaseFrameBytes);
    mon.validate();
  }
  {
    // Fewer pages than min_regions: one single-page region per page.
    Monitor mon(cfg, {0, 3 * kBaseFrameBytes});
    CHECK(mon.effective_min_regions() == 3);
    REQUIRE(mon.regions().size() == 3);
    for (const MonitorRegion& r : mon.regions())
      CHECK(r.range.size_bytes() == kBaseFrameBytes);
    mon.validate();
  }
}

TEST_CASE("monitor rejects malformed configurations") {
  MonitorConfig cfg;
  CHECK_THROWS_AS(Monitor(cfg, {0x2000, 0x2000}), InvalidParam);  // empty extent
  CHECK_THROWS_AS(Monitor(cfg, {0x100, 0x2100}), InvalidParam);   // misaligned
  MonitorConfig bad = cfg;
  bad.sampling_interval = 0;
  CHECK_THROWS_AS(Monitor(bad, {0, 0x10000}), InvalidParam);
  bad = cfg;
  bad.aggregation_ticks = 0;
  CHECK_THROWS_AS(Monitor(bad, {0, 0x10000}), InvalidParam);
  bad = cfg;
  bad.min_regions = 0;
  CHECK_THROWS_AS(Monitor(bad, {0, 0x10000}), InvalidParam);
  bad = cfg;
  bad.max_regions = bad.min_regions - 1;
  CHECK_THROWS_AS(Monitor(bad, {0, 0x10000}), InvalidParam);
}

TEST_CASE("single-page regions make sampling exact and age grows on stability") {
  // Two single-page regions pinned by min == max == page count: the probe
  // always lands on the region's only page, so counts are seed independent.
  MonitorConfig cfg;
  cfg.sampling_interval = 1;
  cfg.aggregation_ticks = 4;
  cfg.min_regions = 2;
  cfg.max_regions = 2;
  cfg.merge_threshold = 2;
  Monitor mon(cfg, {0, 0x2000});

  for (int i = 0; i < 4; ++i) mon.record_access(0x0);
  REQUIRE(mon.latest().has_value());
  {
    const MonitorSnapshot& snap = *mon.latest();
    CHECK(snap.taken_at == 4);
    CHECK(snap.aggregation_interval == 4);
    REQUIRE(snap.regions.size() == 2);
    CHECK(snap.regions[0] == MonitorRegion{{0x0, 0x1000}, 4, 0});  // jump from 0: age reset
    CHECK(snap.regions[1] == MonitorRegion{{0x1000, 0x2000}, 0, 1});
  }

  for (int i = 0; i < 4; ++i) mon.record_access(0x0);
  {
    const MonitorSnapshot& snap = *mon.latest();
    CHECK(snap.taken_at == 8);
    REQUIRE(snap.regions.size() == 2);
    CHECK(snap.regions[0] == MonitorRegion{{0x0, 0x1000}, 4, 1});  // stable now
    CHECK(snap.regions[1] == MonitorRegion{{0x1000, 0x2000}, 0, 2});
  }
  CHECK(mon.accesses_recorded() == 8);
  CHECK(mon.ticks_run() == 8);
  mon.validate();
}

TEST_CASE("accesses outside the extent advance the clock but never match") {
  MonitorConfig cfg;
  cfg.sampling_interval = 1;
  cfg.aggregation_ticks = 1;
  cfg.min_regions = 1;
  cfg.max_regions = 1;
  Monitor mon(cfg, {0, 0x1000});
  mon.record_access(0x0);
  REQUIRE(mon.latest().has_value());
  CHECK(mon.latest()->regions[0].nr_accesses == 1);
  mon.record_access(0x8000);  // outside
  CHECK(mon.latest()->taken_at == 2);
  CHECK(mon.latest()->regions[0].nr_accesses == 0);
}

TEST_CASE("access frequency is the byte-weighted mean over the overlap") {
  MonitorSnapshot snap = sample_snapshot();
  CHECK(access_frequency(snap, {0x0, 0x1000}) == doctest::Approx(0.5));
  CHECK(access_frequency(snap, {0x0, 0x4000}) == doctest::Approx(0.25));
  CHECK(access_frequency(snap, {0x1000, 0x3000}) == doctest::Approx(0.25));
  CHECK(access_frequency(snap, {0x2000, 0x4000}) == doctest::Approx(0.0));
  // Partial overlap beyond the extent averages only the covered bytes.
  CHECK(access_frequency(snap, {0x3000, 0x5000}) == doctest::Approx(0.0));
  CHECK_THROWS_AS(access_frequency(snap, {0x4000, 0x5000}), AddressOutsideExtent);
  CHECK_THROWS_AS(access_frequency(snap, {0x1000, 0x1000}), InvalidParam);
  MonitorSnapshot broken = snap;
  broken.aggregation_interval = 0;
  CHECK_THROWS_AS(access_frequency(broken, {0x0, 0x1000}), InvalidParam);
}

TEST_CASE("snapshots round-trip through their CSV form") {
  MonitorSnapshot snap = sample_snapshot();
  std::string text = snapshot_csv(snap);
  CHECK(text ==
        "# taken_at,4200\n"
        "# aggregation_interval,20\n"
        "start,end,nr_accesses,age\n"
        "0x0,0x2000,10,3\n"
        "0x2000,0x4000,0,7\n");
  CHECK(parse_snapshot_csv(text) == snap);
}

TEST_CASE("snapshot parsing pins down malformed input") {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse_snapshot_csv(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  const std::string head =
      "# taken_at,1\n# aggregation_interval,4\nstart,end,nr_accesses,age\n";
  CHECK(line_of(head + "0x0,0x1000,1,0\n0x2000,0x3000,1,0\n") == 5);  // gap
  CHECK(line_of(head + "0x0,0x1000,1\n") == 4);                       // 3 fields
  CHECK(line_of(head + "0x0,0x1000,x,0\n") == 4);                     // bad number
  CHECK(line_of(head + "0x1000,0x1000,1,0\n") == 4);                  // empty range
  CHECK(line_of(head + "0x100,0x1100,1,0\n") == 4);                   // misaligned
  CHECK(line_of("# taken_at,1\nwrong,header\n") == 2);
  CHECK_THROWS_AS(parse_snapshot_csv(head), ParseError);  // no regions
  CHECK_THROWS_AS(parse_snapshot_csv("# taken_at,1\nstart,end,nr_accesses,age\n"
                                     "0x0,0x1000,1,0\n"),
                  ParseError);  // interval header missing
}

TEST_CASE("merging and splitting keep the partition well formed") {
  MonitorConfig cfg;
  cfg.sampling_interval = 10;
  cfg.aggregation_ticks = 5;
  cfg.min_regions = 4;
  cfg.max_regions = 12;
  cfg.merge_threshold = 1;
  cfg.seed = 3;
  AddrRange extent{0, 64 * kBaseFrameBytes};
  Monitor mon(cfg, extent);
  Rng rng(99);
  for (int i = 0; i < 5000; ++i) {
    VirtAddr vaddr = rng.next_below(80) * kBaseFrameBytes;  // some miss the extent
    mon.record_access(vaddr);
    if (i % 50 == 0) mon.validate();
  }
  mon.validate();
  CHECK(mon.regions().size() <= 12);
  REQUIRE(mon.latest().has_value());
  const MonitorSnapshot& snap = *mon.latest();
  REQUIRE(!snap.regions.empty());
  CHECK(snap.regions.front().range.start == extent.start);
  CHECK(snap.regions.back().range.end == extent.end);
  for (std::size_t i = 1; i < snap.regions.size(); ++i)
    CHECK(snap.regions[i - 1].range.end == snap.regions[i].range.start);
  CHECK(snap.taken_at <= mon.accesses_recorded());
  CHECK(snap.aggregation_interval == cfg.aggregation_ticks);
}
