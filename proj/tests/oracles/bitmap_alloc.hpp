// SPDX-License-Identifier: Apache-2.0
//
// Reference allocator used only by tests.  It keeps nothing but a bitmap and
// answers every allocation with the lowest-address aligned run of free
// frames, which a correct buddy allocator with eager coalescing must match
// frame for frame.

#pragma once

#include <cstdint>
#include <vector>

#include "hpsim/physmem.hpp"

namespace hpsim::testing {

class BitmapAlloc {
 public:
  explicit BitmapAlloc(std::uint64_t total_frames);

  AllocResult alloc(unsigned order, bool movable);
  void free_block(std::uint64_t frame_base, unsigned order);
  void apply(const std::vector<FragmentPlacement>& placements);

  std::uint64_t total_frames() const { return total_frames_; }
  std::uint64_t free_frames() const { return free_frames_; }
  FrameState frame_state(std::uint64_t frame) const;
  bool has_free_run(unsigned order) const;

 private:
  bool run_free(std::uint64_t base, std::uint64_t frames) const;
  void set_run(std::uint64_t base, std::uint64_t frames, bool allocated);

  std::uint64_t total_frames_;
  std::uint64_t free_frames_;
  std::vector<std::uint64_t> bits_;     // 1 = allocated
  std::vector<std::uint8_t> movable_;   // meaningful only while allocated
};

}  // namespace hpsim::testing
