// SPDX-License-Identifier: Apache-2.0

#include "hpsim/tlb.hpp"

#include <vector>

namespace hpsim {

Tlb::Tlb(TlbParams params) : params_(params) {
  if (params_.entries == 0) throw InvalidParam("tlb needs at least one entry");
}

std::uint64_t Tlb::key_of(VirtAddr base, PageSize size) {
  // Page bases are multiples of 4 KiB, so the low 12 bits are free to carry
  // the size index; bases stay below 2^48 so nothing collides.
  return base | static_cast<std::uint64_t>(order_of(size));
}

std::uint64_t Tlb::access(VirtAddr vaddr, PageSize size) {
  VirtAddr base = align_down(vaddr, size);
  auto it = index_.find(key_of(base, size));
  if (it != index_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second);
    ++stats_.hits;
    stats_.hit_cycles_total += params_.hit_cycles;
    return params_.hit_cycles;
  }
  ++stats_.misses;
  stats_.walk_cycles_total += params_.walk_cycles;
  if (lru_.size() == params_.entries) {
    const Entry& victim = lru_.back();
    index_.erase(key_of(victim.base, victim.size));
    lru_.pop_back();
  }
  lru_.push_front({base, size});
  index_[key_of(base, size)] = lru_.begin();
  return params_.walk_cycles;
}

void Tlb::invalidate_range(AddrRange range) {
  for (auto it = lru_.begin(); it != lru_.end();) {
    AddrRange page{it->base, it->base + bytes_of(it->size)};
    if (page.intersects(range)) {
      index_.erase(key_of(it->base, it->size));
      it = lru_.erase(it);
    } else {
      ++it;
    }
  }
}

void Tlb::clear() {
  lru_.clear();
  index_.clear();
}

bool Tlb::contains(VirtAddr vaddr, PageSize size) const {
  return index_.find(key_of(align_down(vaddr, size), size)) != index_.end();
}

}  // namespace hpsim
