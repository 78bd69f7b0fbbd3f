// SPDX-License-Identifier: Apache-2.0

#include "hpsim/physmem.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

namespace hpsim {

namespace {

constexpr std::uint64_t kClusterRunFrames = 64;
constexpr std::uint64_t kClusterGroupFrames = 512;

}  // namespace

std::vector<FragmentPlacement> fragment_plan(std::uint64_t total_frames, double occupancy,
                                             FragPattern pattern, double movable_fraction,
                                             std::uint64_t seed) {
  if (!(occupancy >= 0.0 && occupancy <= 1.0))
    throw InvalidParam("fragment occupancy must be in [0, 1]");
  if (!(movable_fraction >= 0.0 && movable_fraction <= 1.0))
    throw InvalidParam("fragment movable_fraction must be in [0, 1]");

  std::uint64_t budget = static_cast<std::uint64_t>(
      std::llround(occupancy * static_cast<double>(total_frames)));
  std::vector<FragmentPlacement> placements;
  Rng rng(seed);

  if (pattern == FragPattern::Spread) {
    // Partial Fisher-Yates over all frame indices; first `budget` swaps pick
    // the placement positions.
    std::vector<std::uint64_t> frames(total_frames);
    std::iota(frames.begin(), frames.end(), 0);
    placements.reserve(budget);
    for (std::uint64_t i = 0; i < budget; ++i) {
      std::uint64_t j = i + rng.next_below(total_frames - i);
      std::swap(frames[i], frames[j]);
      placements.push_back({frames[i], 1, false});
    }
  } else {
    // Runs of 64 frames packed into randomly chosen 512-frame groups; a
    // trailing partial group (when total is not a multiple of 512) joins the
    // draw as the final id.
    std::uint64_t full_groups = total_frames / kClusterGroupFrames;
    std::uint64_t tail = total_frames % kClusterGroupFrames;
    std::uint64_t group_count = full_groups + (tail > 0 ? 1 : 0);
    std::vector<std::uint64_t> groups(group_count);
    std::iota(groups.begin(), groups.end(), 0);
    std::uint64_t remaining = budget;
    std::uint64_t picked = 0;
    while (remaining > 0) {
      if (picked == group_count)
        throw InvalidParam("clustered fragment budget exceeds group capacity");
      std::uint64_t j = picked + rng.next_below(group_count - picked);
      std::swap(groups[picked], groups[j]);
      std::uint64_t gid = groups[picked++];
      std::uint64_t gbase = gid * kClusterGroupFrames;
      std::uint64_t gframes = gid < full_groups ? kClusterGroupFrames : tail;
      std::uint64_t take = std::min(remaining, gframes);
      for (std::uint64_t off = 0; off < take; off += kClusterRunFrames) {
        std::uint64_t run = std::min(kClusterRunFrames, take - off);
        placements.push_back({gbase + off, run, false});
      }
      remaining -= take;
    }
  }

  // Movability is drawn after placement: an exact round(fraction * blocks)
  // of the placed runs, selected by a second partial shuffle.
  std::uint64_t blocks = placements.size();
  std::uint64_t movable_blocks = static_cast<std::uint64_t>(
      std::llround(movable_fraction * static_cast<double>(blocks)));
  std::vector<std::uint64_t> order(blocks);
  std::iota(order.begin(), order.end(), 0);
  for (std::uint64_t i = 0; i < movable_blocks; ++i) {
    std::uint64_t j = i + rng.next_below(blocks - i);
    std::swap(order[i], order[j]);
    placements[order[i]].movable = true;
  }
  return placements;
}

PhysMemory::PhysMemory(std::uint64_t total_frames)
    : total_frames_(total_frames), free_frames_(total_frames) {
  if (total_frames == 0) throw InvalidParam("memory needs at least one frame");
  frame_state_.assign(total_frames, FrameState::Free);
  block_base_.assign(total_frames, kNoBlock);
  alloc_order_.assign(total_frames, -1);
  const std::array<unsigned, 3> tracked = {4, 9, 13};
  for (std::size_t i = 0; i < tracked.size(); ++i) {
    windows_[i].order = tracked[i];
    windows_[i].movable.assign(total_frames >> tracked[i], 0);
    windows_[i].unmovable.assign(total_frames >> tracked[i], 0);
  }
  // Greedy initial cover: largest aligned blocks first.
  std::uint64_t pos = 0;
  while (pos < total_frames) {
    unsigned order = kMaxOrder;
    while (order > 0 &&
           ((pos & ((1ull << order) - 1)) != 0 || pos + (1ull << order) > total_frames))
      --order;
    free_lists_[order].insert(pos);
    pos += 1ull << order;
  }
}

bool PhysMemory::window_tracked(unsigned order) const {
  for (const WindowCounts& w : windows_)
    if (w.order == order) return true;
  return false;
}

void PhysMemory::adjust_window_counts(std::uint64_t base, std::uint64_t frames, bool movable,
                                      int delta) {
  for (WindowCounts& w : windows_) {
    std::uint64_t wsize = 1ull << w.order;
    std::uint64_t nwin = w.movable.size();
    if (nwin == 0) continue;
    std::uint64_t first = base >> w.order;
    std::uint64_t last = (base + frames - 1) >> w.order;
    last = std::min(last, nwin - 1);
    for (std::uint64_t wi = first; wi <= last && wi < nwin; ++wi) {
      std::uint64_t lo = std::max(base, wi * wsize);
      std::uint64_t hi = std::min(base + frames, (wi + 1) * wsize);
      std::uint32_t count = static_cast<std::uint32_t>(hi - lo);
      std::vector<std::uint32_t>& vec = movable ? w.movable : w.unmovable;
      if (delta > 0)
        vec[wi] += count;
      else
        vec[wi] -= count;
    }
  }
}

void PhysMemory::mark_allocated(std::uint64_t base, unsigned order, bool movable) {
  std::uint64_t frames = 1ull << order;
  FrameState state = movable ? FrameState::AllocatedMovable : FrameState::AllocatedUnmovable;
  for (std::uint64_t f = base; f < base + frames; ++f) {
    frame_state_[f] = state;
    block_base_[f] = base;
  }
  alloc_order_[base] = static_cast<std::int8_t>(order);
  free_frames_ -= frames;
  adjust_window_counts(base, frames, movable, +1);
  if (order > 0 && movable) ++movable_multi_frame_blocks_;
}

void PhysMemory::mark_free(std::uint64_t base, unsigned order) {
  std::uint64_t frames = 1ull << order;
  bool was_movable = frame_state_[base] == FrameState::AllocatedMovable;
  for (std::uint64_t f = base; f < base + frames; ++f) {
    frame_state_[f] = FrameState::Free;
    block_base_[f] = kNoBlock;
  }
  alloc_order_[base] = -1;
  free_frames_ += frames;
  adjust_window_counts(base, frames, was_movable, -1);
  if (order > 0 && was_movable) --movable_multi_frame_blocks_;
}

void PhysMemory::insert_free_block(std::uint64_t base, unsigned order) {
  while (order < kMaxOrder) {
    std::uint64_t buddy = base ^ (1ull << order);
    if (buddy + (1ull << order) > total_frames_) break;
    if (free_lists_[order].erase(buddy) == 0) break;
    base = std::min(base, buddy);
    ++order;
  }
  free_lists_[order].insert(base);
}

std::optional<unsigned> PhysMemory::containing_free_block_order(std::uint64_t frame) const {
  for (unsigned j = 0; j <= kMaxOrder; ++j) {
    std::uint64_t base = frame & ~((1ull << j) - 1);
    if (free_lists_[j].count(base) != 0) return j;
  }
  return std::nullopt;
}

void PhysMemory::carve_free_block(std::uint64_t frame, unsigned order) {
  auto held = containing_free_block_order(frame);
  assert(held && *held >= order);
  unsigned cur = *held;
  std::uint64_t cur_base = frame & ~((1ull << cur) - 1);
  free_lists_[cur].erase(cur_base);
  while (cur > order) {
    --cur;
    std::uint64_t high = cur_base + (1ull << cur);
    if (frame >= high) {
      free_lists_[cur].insert(cur_base);
      cur_base = high;
    } else {
      free_lists_[cur].insert(high);
    }
  }
  assert(cur_base == frame);
}

AllocResult PhysMemory::alloc(unsigned order, bool movable) {
  if (order > kMaxOrder) throw InvalidParam("allocation order out of range");
  std::uint64_t need = 1ull << order;
  std::uint64_t best = kNoBlock;
  unsigned best_order = 0;
  for (unsigned j = order; j <= kMaxOrder; ++j) {
    if (free_lists_[j].empty()) continue;
    std::uint64_t base = *free_lists_[j].begin();
    if (base < best) {
      best = base;
      best_order = j;
    }
  }
  if (best == kNoBlock) {
    return {free_frames_ >= need ? AllocResult::Status::NeedsCompaction
                                 : AllocResult::Status::OutOfMemory,
            0};
  }
  free_lists_[best_order].erase(best);
  while (best_order > order) {
    --best_order;
    free_lists_[best_order].insert(best + (1ull << best_order));
  }
  mark_allocated(best, order, movable);
  ++version_;
  return {AllocResult::Status::Ok, best};
}

void PhysMemory::free_block(std::uint64_t frame_base, unsigned order) {
  if (order > kMaxOrder || frame_base % (1ull << order) != 0 ||
      frame_base + (1ull << order) > total_frames_)
    throw BadBlockError("free of a block that cannot exist");
  if (frame_state_[frame_base] == FrameState::Free)
    throw DoubleFreeError("free of an already-free block");
  if (alloc_order_[frame_base] != static_cast<std::int8_t>(order))
    throw BadBlockError("free with mismatched block base or order");
  mark_free(frame_base, order);
  insert_free_block(frame_base, order);
  ++version_;
}

void PhysMemory::fragment(double occupancy, FragPattern pattern, double movable_fraction,
                          std::uint64_t seed) {
  if (free_frames_ != total_frames_) throw InvalidParam("fragment requires fresh memory");
  auto placements = fragment_plan(total_frames_, occupancy, pattern, movable_fraction, seed);
  for (const FragmentPlacement& p : placements) {
    for (std::uint64_t off = 0; off < p.run_frames; ++off) {
      carve_free_block(p.frame + off, 0);
      mark_allocated(p.frame + off, 0, p.movable);
    }
  }
  ++version_;
}

bool PhysMemory::has_free_block(unsigned order) const {
  for (unsigned j = order; j <= kMaxOrder; ++j)
    if (!free_lists_[j].empty()) return true;
  return false;
}

std::optional<PhysMemory::Plan> PhysMemory::plan_compaction(unsigned target_order) const {
  std::uint64_t need = 1ull << target_order;
  if (has_free_block(target_order)) return Plan{};  // nothing to move
  if (total_frames_ < need || free_frames_ < need) return std::nullopt;

  // Candidate windows: aligned spans with no unmovable frame, cheapest first.
  std::uint64_t nwin = total_frames_ >> target_order;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> candidates;  // (moves, base)
  const WindowCounts* tracked = nullptr;
  for (const WindowCounts& w : windows_)
    if (w.order == target_order) tracked = &w;
  for (std::uint64_t wi = 0; wi < nwin; ++wi) {
    std::uint64_t unmovable = 0, movable = 0;
    if (tracked != nullptr) {
      unmovable = tracked->unmovable[wi];
      movable = tracked->movable[wi];
    } else {
      for (std::uint64_t f = wi * need; f < (wi + 1) * need; ++f) {
        if (frame_state_[f] == FrameState::AllocatedUnmovable) ++unmovable;
        if (frame_state_[f] == FrameState::AllocatedMovable) ++movable;
      }
    }
    if (unmovable == 0) candidates.emplace_back(movable, wi * need);
  }
  std::sort(candidates.begin(), candidates.end());

  for (auto [moves, wbase] : candidates) {
    Plan plan;
    plan.window_base = wbase;
    plan.moved_frames = moves;

    // Enumerate the movable blocks inside the window.
    std::vector<std::pair<std::uint64_t, unsigned>> blocks;
    bool window_ok = true;
    for (std::uint64_t f = wbase; f < wbase + need;) {
      if (frame_state_[f] == FrameState::Free) {
        ++f;
        continue;
      }
      std::uint64_t bb = block_base_[f];
      unsigned border = static_cast<unsigned>(alloc_order_[bb]);
      if (bb < wbase || bb + (1ull << border) > wbase + need) {
        window_ok = false;  // a block straddles the window; cannot clear it
        break;
      }
      blocks.emplace_back(bb, border);
      f = bb + (1ull << border);
    }
    if (!window_ok) continue;

    if (movable_multi_frame_blocks_ == 0) {
      // Every movable block is a single frame; free_frames_ >= need already
      // guarantees enough destinations outside the window.
      std::uint64_t dst = 0;
      bool feasible = true;
      for (auto [src, border] : blocks) {
        (void)border;
        while (dst < total_frames_ &&
               (frame_state_[dst] != FrameState::Free || (dst >= wbase && dst < wbase + need)))
          ++dst;
        if (dst == total_frames_) {
          feasible = false;
          break;
        }
        plan.relocations.push_back({src, dst, 0});
        ++dst;
      }
      if (feasible) return plan;
      continue;
    }

    // General path: find aligned destinations per block on a scratch copy of
    // the free structure so a failed window leaves no trace.
    auto scratch = free_lists_;
    auto carve_on = [&scratch](std::uint64_t frame, unsigned order) {
      unsigned cur = order;
      std::uint64_t base = 0;
      for (; cur <= kMaxOrder; ++cur) {
        base = frame & ~((1ull << cur) - 1);
        if (scratch[cur].erase(base) != 0) break;
      }
      while (cur > order) {
        --cur;
        std::uint64_t high = base + (1ull << cur);
        if (frame >= high) {
          scratch[cur].insert(base);
          base = high;
        } else {
          scratch[cur].insert(high);
        }
      }
    };
    bool feasible = true;
    for (auto [src, border] : blocks) {
      std::uint64_t dst = kNoBlock;
      for (unsigned j = border; j <= kMaxOrder && dst == kNoBlock; ++j) {
        for (std::uint64_t base : scratch[j]) {
          if (base >= wbase && base < wbase + need) continue;
          dst = std::min(dst, base);
          break;  // sets are sorted; first non-window entry is the lowest
        }
      }
      if (dst == kNoBlock) {
        feasible = false;
        break;
      }
      carve_on(dst, border);
      plan.relocations.push_back({src, dst, border});
    }
    if (feasible) return plan;
  }
  return std::nullopt;
}

std::optional<std::uint64_t> PhysMemory::estimate_compaction(unsigned target_order) const {
  if (target_order > kMaxOrder) throw InvalidParam("compaction order out of range");
  auto plan = plan_compaction(target_order);
  if (!plan) return std::nullopt;
  return plan->moved_frames;
}

CompactionOutcome PhysMemory::compact(unsigned target_order) {
  if (target_order > kMaxOrder) throw InvalidParam("compaction order out of range");
  ++stats_.compactions_run;
  auto plan = plan_compaction(target_order);
  if (!plan) return {false, 0};
  for (const Relocation& r : plan->relocations) {
    bool movable = frame_state_[r.src] == FrameState::AllocatedMovable;
    carve_free_block(r.dst, r.order);
    mark_allocated(r.dst, r.order, movable);
    mark_free(r.src, r.order);
    insert_free_block(r.src, r.order);
  }
  if (!plan->relocations.empty()) ++version_;
  stats_.frames_moved += plan->moved_frames;
  return {true, plan->moved_frames};
}

std::vector<std::pair<std::uint64_t, unsigned>> PhysMemory::free_blocks() const {
  std::vector<std::pair<std::uint64_t, unsigned>> blocks;
  for (unsigned j = 0; j <= kMaxOrder; ++j)
    for (std::uint64_t base : free_lists_[j]) blocks.emplace_back(base, j);
  std::sort(blocks.begin(), blocks.end());
  return blocks;
}

void PhysMemory::validate() const {
  auto fail = [](const char* what) { throw std::logic_error(what); };
  std::vector<bool> covered(total_frames_, false);
  std::uint64_t free_seen = 0;
  for (unsigned j = 0; j <= kMaxOrder; ++j) {
    for (std::uint64_t base : free_lists_[j]) {
      std::uint64_t frames = 1ull << j;
      if (base % frames != 0) fail("free block misaligned");
      if (base + frames > total_frames_) fail("free block out of range");
      if (j < kMaxOrder) {
        std::uint64_t buddy = base ^ frames;
        if (buddy + frames <= total_frames_ && free_lists_[j].count(buddy) != 0)
          fail("free buddies left uncoalesced");
      }
      for (std::uint64_t f = base; f < base + frames; ++f) {
        if (covered[f]) fail("free blocks overlap");
        covered[f] = true;
        if (frame_state_[f] != FrameState::Free) fail("free block covers allocated frame");
        ++free_seen;
      }
    }
  }
  if (free_seen != free_frames_) fail("free frame count mismatch");
  std::uint64_t multi = 0;
  for (std::uint64_t f = 0; f < total_frames_; ++f) {
    if (frame_state_[f] == FrameState::Free) {
      if (!covered[f]) fail("free frame not covered by any free block");
      if (block_base_[f] != kNoBlock) fail("free frame with block base");
      continue;
    }
    std::uint64_t bb = block_base_[f];
    if (bb == kNoBlock || bb > f || bb >= total_frames_) fail("allocated frame without block");
    if (alloc_order_[bb] < 0) fail("allocated block without recorded order");
    unsigned order = static_cast<unsigned>(alloc_order_[bb]);
    if (bb % (1ull << order) != 0 || f >= bb + (1ull << order)) fail("block bounds broken");
    if (frame_state_[f] != frame_state_[bb]) fail("mixed movability within a block");
    if (f == bb && order > 0 && frame_state_[f] == FrameState::AllocatedMovable) ++multi;
  }
  if (multi != movable_multi_frame_blocks_) fail("movable multi-frame block count mismatch");
  for (const WindowCounts& w : windows_) {
    std::uint64_t wsize = 1ull << w.order;
    for (std::uint64_t wi = 0; wi < w.movable.size(); ++wi) {
      std::uint32_t mov = 0, unmov = 0;
      for (std::uint64_t f = wi * wsize; f < (wi + 1) * wsize; ++f) {
        if (frame_state_[f] == FrameState::AllocatedMovable) ++mov;
        if (frame_state_[f] == FrameState::AllocatedUnmovable) ++unmov;
      }
      if (mov != w.movable[wi] || unmov != w.unmovable[wi]) fail("window counts stale");
    }
  }
}

}  // namespace hpsim
