// SPDX-License-Identifier: Apache-2.0
//
// Synthetic workload generators and trace file I/O.
//
// A trace is a stream of page-granular accesses. Generators are seed
// deterministic: the same WorkloadSpec always yields the same stream. The
// on-disk format is CSV, one record per line:
//
//     seq,vaddr_hex,R|W
//
// '#' starts a comment line; hex addresses may contain underscores. Files
// whose name ends in ".gz" are read and written gzip-compressed.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hpsim/core.hpp"

namespace hpsim {

enum class AccessKind : std::uint8_t { Read, Write };

struct AccessRecord {
  std::uint64_t seq = 0;
  VirtAddr vaddr = 0;
  AccessKind kind = AccessKind::Read;

  friend bool operator==(const AccessRecord&, const AccessRecord&) = default;
};

enum class WorkloadKind : std::uint8_t { Sequential, UniformRandom, Hotspot, PointerChase };

std::optional<WorkloadKind> workload_kind_from_name(std::string_view name);
std::string_view workload_kind_name(WorkloadKind kind);

struct HotRange {
  AddrRange range;
  double weight = 0;

  friend bool operator==(const HotRange&, const HotRange&) = default;
};

class InvalidSpec : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parameters for one synthetic workload. Which fields matter depends on kind:
//   Sequential:    base, length_bytes, stride_bytes, passes
//   UniformRandom: base, length_bytes, access_count, rng_seed
//   Hotspot:       hot_ranges, access_count, rng_seed
//   PointerChase:  base, length_bytes, access_count, rng_seed
// Every emitted address is 4 KiB aligned.
struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::Sequential;
  VirtAddr base = 0;
  std::uint64_t length_bytes = 0;
  std::uint64_t passes = 1;
  std::uint64_t stride_bytes = kBaseFrameBytes;
  std::uint64_t access_count = 0;
  std::vector<HotRange> hot_ranges;
  std::uint64_t rng_seed = 0;

  void validate() const;  // throws InvalidSpec
  std::uint64_t total_accesses() const;
  AddrRange extent() const;  // smallest range covering every emitted address

  friend bool operator==(const WorkloadSpec&, const WorkloadSpec&) = default;
};

// Single-consumer access stream; next() returns nullopt at end.
class TraceSource {
 public:
  virtual ~TraceSource() = default;
  virtual std::optional<AccessRecord> next() = 0;
};

// Validates the spec and returns a generator stream over it.
std::unique_ptr<TraceSource> make_generator(const WorkloadSpec& spec);

// Convenience for tests: materializes the whole generated trace.
std::vector<AccessRecord> gen_trace(const WorkloadSpec& spec);

// Opens a trace file for streaming reads. Throws ParseError on malformed
// lines (including non-increasing seq) and std::runtime_error on I/O errors.
std::unique_ptr<TraceSource> open_trace(const std::string& path);

// Drains `source` into `path`. Plain text, or gzip when path ends in ".gz".
void write_trace(const std::string& path, TraceSource& source);

}  // namespace hpsim
