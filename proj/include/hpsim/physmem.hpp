// SPDX-License-Identifier: Apache-2.0
//
// Physical memory model: a binary buddy allocator over 4 KiB frames with
// orders 0..13 (4 KiB to 32 MiB), plus fragmentation injection and a
// compaction model that relocates movable frames.
//
// Determinism contract: alloc takes the globally lowest-address free block
// of sufficient order and splits it keeping the low half, so the returned
// base is always the lowest-address aligned all-free run. Free blocks
// coalesce eagerly; no two free buddies of the same order ever coexist.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "hpsim/core.hpp"

namespace hpsim {

// Per-run cost constants, in cycles. Page zeroing scales with size;
// compaction scales with frames actually moved; the allocator fast path is
// charged per allocation attempt.
struct CostParams {
  std::uint64_t zero_cycles_per_4k = 500;
  std::uint64_t compact_cycles_per_moved_frame = 2000;
  std::uint64_t alloc_fastpath_cycles = 100;

  friend bool operator==(const CostParams&, const CostParams&) = default;
};

constexpr std::uint64_t zeroing_cost(PageSize size, const CostParams& p) {
  return p.zero_cycles_per_4k << order_of(size);
}

constexpr std::uint64_t compaction_cost(std::uint64_t moved_frames, const CostParams& p) {
  return moved_frames * p.compact_cycles_per_moved_frame;
}

enum class FrameState : std::uint8_t { Free = 0, AllocatedUnmovable = 1, AllocatedMovable = 2 };

enum class FragPattern : std::uint8_t { Spread, Clustered };

struct AllocResult {
  enum class Status : std::uint8_t { Ok, NeedsCompaction, OutOfMemory };
  Status status = Status::OutOfMemory;
  std::uint64_t frame_base = 0;  // valid when status == Ok

  bool ok() const { return status == Status::Ok; }
};

struct CompactionOutcome {
  bool success = false;
  std::uint64_t moved_frames = 0;
};

struct MemStats {
  std::uint64_t compactions_run = 0;  // compact() invocations, successful or not
  std::uint64_t frames_moved = 0;
  std::uint64_t frames_zeroed = 0;
};

class DoubleFreeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class BadBlockError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// One backdrop placement: `run_frames` consecutive order-0 allocations
// starting at `frame`, all sharing one movability flag.
struct FragmentPlacement {
  std::uint64_t frame = 0;
  std::uint64_t run_frames = 1;
  bool movable = false;

  friend bool operator==(const FragmentPlacement&, const FragmentPlacement&) = default;
};

// Pure placement plan for fragment(): Spread scatters single frames at
// pseudo-random positions, Clustered packs runs of 64 frames into randomly
// chosen 512-frame groups. Exactly round(occupancy * total_frames) frames
// are placed and round(movable_fraction * placements) runs flagged movable.
// Shared with the test oracle so both sides apply identical placements.
std::vector<FragmentPlacement> fragment_plan(std::uint64_t total_frames, double occupancy,
                                             FragPattern pattern, double movable_fraction,
                                             std::uint64_t seed);

class PhysMemory {
 public:
  explicit PhysMemory(std::uint64_t total_frames);

  // Allocates a 2^order-frame block. NeedsCompaction means enough frames are
  // free but no aligned run of the requested order exists.
  AllocResult alloc(unsigned order, bool movable);

  // Frees a block previously returned by alloc with this exact order.
  void free_block(std::uint64_t frame_base, unsigned order);

  // Injects a fragmentation backdrop into fresh memory (nothing allocated).
  void fragment(double occupancy, FragPattern pattern, double movable_fraction,
                std::uint64_t seed);

  // Relocates movable frames to clear one aligned block of target_order.
  // Fails (leaving memory unchanged) if no window can be emptied using only
  // movable frames and free destinations outside it.
  CompactionOutcome compact(unsigned target_order);

  // Dry-run compact: the frames a compaction would move, or nullopt if
  // compaction cannot produce the block. Never mutates.
  std::optional<std::uint64_t> estimate_compaction(unsigned target_order) const;

  // True when a free block of order >= `order` exists (alloc fast path).
  bool has_free_block(unsigned order) const;

  std::uint64_t total_frames() const { return total_frames_; }
  std::uint64_t free_frames() const { return free_frames_; }
  FrameState frame_state(std::uint64_t frame) const { return frame_state_[frame]; }
  std::uint64_t version() const { return version_; }

  MemStats& stats() { return stats_; }
  const MemStats& stats() const { return stats_; }
  void note_zeroed(std::uint64_t frames) { stats_.frames_zeroed += frames; }

  // Sorted (base, order) list of free blocks; test introspection.
  std::vector<std::pair<std::uint64_t, unsigned>> free_blocks() const;

  // Walks every structural invariant; throws std::logic_error on violation.
  void validate() const;

 private:
  struct Relocation {
    std::uint64_t src = 0;
    std::uint64_t dst = 0;
    unsigned order = 0;
  };
  struct Plan {
    std::uint64_t window_base = 0;
    std::uint64_t moved_frames = 0;
    std::vector<Relocation> relocations;
  };

  void mark_allocated(std::uint64_t base, unsigned order, bool movable);
  void mark_free(std::uint64_t base, unsigned order);
  void adjust_window_counts(std::uint64_t base, std::uint64_t frames, bool movable, int delta);
  void insert_free_block(std::uint64_t base, unsigned order);  // with eager coalescing
  // Detaches the specific aligned block [frame, frame + 2^order) from the
  // free structure, splitting as needed. The block must be entirely free.
  void carve_free_block(std::uint64_t frame, unsigned order);
  std::optional<unsigned> containing_free_block_order(std::uint64_t frame) const;
  std::optional<Plan> plan_compaction(unsigned target_order) const;
  bool window_tracked(unsigned order) const;

  std::uint64_t total_frames_;
  std::uint64_t free_frames_;
  std::uint64_t version_ = 0;
  std::vector<FrameState> frame_state_;
  // Block base of the allocation covering a frame; kNoBlock when free.
  std::vector<std::uint64_t> block_base_;
  // Order of the live allocation starting at a frame; -1 elsewhere.
  std::vector<std::int8_t> alloc_order_;
  std::array<std::set<std::uint64_t>, kMaxOrder + 1> free_lists_;
  // Per-window allocated-frame counts for the huge orders, kept incrementally
  // so compaction planning scans windows instead of frames.
  struct WindowCounts {
    unsigned order = 0;
    std::vector<std::uint32_t> movable;
    std::vector<std::uint32_t> unmovable;
  };
  std::array<WindowCounts, 3> windows_;  // orders 4, 9, 13
  // Movable blocks of order > 0 force full transactional planning; the
  // fragmentation backdrop only ever places order-0 movables.
  std::uint64_t movable_multi_frame_blocks_ = 0;
  MemStats stats_;

  static constexpr std::uint64_t kNoBlock = ~0ull;
};

}  // namespace hpsim
