// SPDX-License-Identifier: Apache-2.0

#include "hpsim/trace.hpp"

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace hpsim {

namespace {

bool is_gzip_path(const std::string& path) {
  return path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

std::uint64_t pages_in(std::uint64_t length_bytes) { return length_bytes / kBaseFrameBytes; }

}  // namespace

std::optional<WorkloadKind> workload_kind_from_name(std::string_view name) {
  if (name == "sequential") return WorkloadKind::Sequential;
  if (name == "uniform") return WorkloadKind::UniformRandom;
  if (name == "hotspot") return WorkloadKind::Hotspot;
  if (name == "chase") return WorkloadKind::PointerChase;
  return std::nullopt;
}

std::string_view workload_kind_name(WorkloadKind kind) {
  switch (kind) {
    case WorkloadKind::Sequential: return "sequential";
    case WorkloadKind::UniformRandom: return "uniform";
    case WorkloadKind::Hotspot: return "hotspot";
    case WorkloadKind::PointerChase: return "chase";
  }
  return "?";
}

void WorkloadSpec::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw InvalidSpec(what);
  };
  if (kind == WorkloadKind::Hotspot) {
    check(!hot_ranges.empty(), "hotspot workload needs at least one hot range");
    double total_weight = 0;
    for (std::size_t i = 0; i < hot_ranges.size(); ++i) {
      const HotRange& hr = hot_ranges[i];
      check(hr.range.valid(), "hot range must be a valid 4KiB-aligned range");
      check(hr.weight > 0, "hot range weight must be positive");
      total_weight += hr.weight;
      for (std::size_t j = i + 1; j < hot_ranges.size(); ++j)
        check(!hr.range.intersects(hot_ranges[j].range), "hot ranges must be disjoint");
    }
    check(total_weight > 0, "hot range weights must sum to a positive value");
    check(access_count > 0, "hotspot workload needs access_count > 0");
    return;
  }
  check(base % kBaseFrameBytes == 0, "base must be 4KiB aligned");
  check(length_bytes >= kBaseFrameBytes, "length must be at least one 4KiB page");
  check(length_bytes % kBaseFrameBytes == 0, "length must be a multiple of 4KiB");
  check(base + length_bytes <= kAddrSpaceLimit, "workload extent exceeds the address space");
  switch (kind) {
    case WorkloadKind::Sequential:
      check(stride_bytes > 0 && stride_bytes % kBaseFrameBytes == 0,
            "stride must be a positive multiple of 4KiB");
      check(stride_bytes <= length_bytes, "stride larger than workload length");
      check(passes > 0, "sequential workload needs passes > 0");
      break;
    case WorkloadKind::UniformRandom:
    case WorkloadKind::PointerChase:
      check(access_count > 0, "workload needs access_count > 0");
      break;
    case WorkloadKind::Hotspot:
      break;  // handled above
  }
}

std::uint64_t WorkloadSpec::total_accesses() const {
  if (kind == WorkloadKind::Sequential) return (length_bytes / stride_bytes) * passes;
  return access_count;
}

AddrRange WorkloadSpec::extent() const {
  if (kind == WorkloadKind::Hotspot) {
    VirtAddr lo = kAddrSpaceLimit, hi = 0;
    for (const HotRange& hr : hot_ranges) {
      lo = std::min(lo, hr.range.start);
      hi = std::max(hi, hr.range.end);
    }
    return {lo, hi};
  }
  return {base, base + length_bytes};
}

namespace {

class SequentialSource final : public TraceSource {
 public:
  explicit SequentialSource(const WorkloadSpec& spec) : spec_(spec) {
    per_pass_ = spec.length_bytes / spec.stride_bytes;
  }

  std::optional<AccessRecord> next() override {
    if (pass_ == spec_.passes) return std::nullopt;
    AccessRecord rec{seq_++, spec_.base + index_ * spec_.stride_bytes, AccessKind::Read};
    if (++index_ == per_pass_) {
      index_ = 0;
      ++pass_;
    }
    return rec;
  }

 private:
  WorkloadSpec spec_;
  std::uint64_t per_pass_ = 0;
  std::uint64_t index_ = 0;
  std::uint64_t pass_ = 0;
  std::uint64_t seq_ = 0;
};

class UniformSource final : public TraceSource {
 public:
  explicit UniformSource(const WorkloadSpec& spec)
      : rng_(spec.rng_seed), base_(spec.base), pages_(pages_in(spec.length_bytes)),
        remaining_(spec.access_count) {}

  std::optional<AccessRecord> next() override {
    if (remaining_ == 0) return std::nullopt;
    --remaining_;
    VirtAddr addr = base_ + rng_.next_below(pages_) * kBaseFrameBytes;
    return AccessRecord{seq_++, addr, AccessKind::Read};
  }

 private:
  Rng rng_;
  VirtAddr base_;
  std::uint64_t pages_;
  std::uint64_t remaining_;
  std::uint64_t seq_ = 0;
};

// Draws a range with probability proportional to its weight, then a page
// uniformly inside it. One weight draw plus one offset draw per record, so
// scaling all weights by a constant leaves the output stream unchanged.
class HotspotSource final : public TraceSource {
 public:
  explicit HotspotSource(const WorkloadSpec& spec)
      : rng_(spec.rng_seed), ranges_(spec.hot_ranges), remaining_(spec.access_count) {
    cumulative_.reserve(ranges_.size());
    double sum = 0;
    for (const HotRange& hr : ranges_) {
      sum += hr.weight;
      cumulative_.push_back(sum);
    }
    total_weight_ = sum;
  }

  std::optional<AccessRecord> next() override {
    if (remaining_ == 0) return std::nullopt;
    --remaining_;
    double pick = rng_.next_real01() * total_weight_;
    std::size_t idx = 0;
    while (idx + 1 < cumulative_.size() && pick >= cumulative_[idx]) ++idx;
    const AddrRange& r = ranges_[idx].range;
    VirtAddr addr = r.start + rng_.next_below(pages_in(r.size_bytes())) * kBaseFrameBytes;
    return AccessRecord{seq_++, addr, AccessKind::Read};
  }

 private:
  Rng rng_;
  std::vector<HotRange> ranges_;
  std::vector<double> cumulative_;
  double total_weight_ = 0;
  std::uint64_t remaining_;
  std::uint64_t seq_ = 0;
};

// Walks a random Hamiltonian cycle over the pages of the extent (Sattolo's
// shuffle yields a single cycle), starting at the base page.
class PointerChaseSource final : public TraceSource {
 public:
  explicit PointerChaseSource(const WorkloadSpec& spec)
      : base_(spec.base), remaining_(spec.access_count) {
    std::uint64_t pages = pages_in(spec.length_bytes);
    std::vector<std::uint64_t> perm(pages);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(spec.rng_seed);
    for (std::uint64_t i = pages - 1; i > 0; --i) {
      std::uint64_t j = rng.next_below(i);  // j < i: Sattolo, single cycle
      std::swap(perm[i], perm[j]);
    }
    next_page_.resize(pages);
    for (std::uint64_t i = 0; i < pages; ++i) next_page_[perm[i]] = perm[(i + 1) % pages];
  }

  std::optional<AccessRecord> next() override {
    if (remaining_ == 0) return std::nullopt;
    --remaining_;
    AccessRecord rec{seq_++, base_ + page_ * kBaseFrameBytes, AccessKind::Read};
    page_ = next_page_[page_];
    return rec;
  }

 private:
  VirtAddr base_;
  std::vector<std::uint64_t> next_page_;
  std::uint64_t page_ = 0;
  std::uint64_t remaining_;
  std::uint64_t seq_ = 0;
};

}  // namespace

std::unique_ptr<TraceSource> make_generator(const WorkloadSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case WorkloadKind::Sequential: return std::make_unique<SequentialSource>(spec);
    case WorkloadKind::UniformRandom: return std::make_unique<UniformSource>(spec);
    case WorkloadKind::Hotspot: return std::make_unique<HotspotSource>(spec);
    case WorkloadKind::PointerChase: return std::make_unique<PointerChaseSource>(spec);
  }
  throw InvalidSpec("unknown workload kind");
}

std::vector<AccessRecord> gen_trace(const WorkloadSpec& spec) {
  auto source = make_generator(spec);
  std::vector<AccessRecord> records;
  records.reserve(spec.total_accesses());
  while (auto rec = source->next()) records.push_back(*rec);
  return records;
}

namespace {

// Line-oriented reader over plain or gzip files.
class LineReader {
 public:
  explicit LineReader(const std::string& path) {
    if (is_gzip_path(path)) {
      gz_ = gzopen(path.c_str(), "rb");
      if (gz_ == nullptr) throw std::runtime_error("cannot open trace file: " + path);
    } else {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot open trace file: " + path);
    }
  }

  ~LineReader() {
    if (gz_ != nullptr) gzclose(gz_);
  }

  bool getline(std::string& out) {
    if (gz_ == nullptr) return static_cast<bool>(std::getline(file_, out));
    out.clear();
    char buf[4096];
    for (;;) {
      if (gzgets(gz_, buf, sizeof(buf)) == nullptr) return !out.empty();
      out += buf;
      if (!out.empty() && out.back() == '\n') {
        out.pop_back();
        return true;
      }
    }
  }

 private:
  std::ifstream file_;
  gzFile gz_ = nullptr;
};

class FileTraceSource final : public TraceSource {
 public:
  explicit FileTraceSource(const std::string& path) : reader_(path) {}

  std::optional<AccessRecord> next() override {
    std::string line;
    while (reader_.getline(line)) {
      ++line_no_;
      std::string_view view(line);
      if (auto pos = view.find('#'); pos != std::string_view::npos) view = view.substr(0, pos);
      while (!view.empty() && (view.back() == ' ' || view.back() == '\t' || view.back() == '\r'))
        view.remove_suffix(1);
      while (!view.empty() && (view.front() == ' ' || view.front() == '\t'))
        view.remove_prefix(1);
      if (view.empty()) continue;
      return parse_record(view);
    }
    return std::nullopt;
  }

 private:
  AccessRecord parse_record(std::string_view view) {
    auto c1 = view.find(',');
    auto c2 = c1 == std::string_view::npos ? c1 : view.find(',', c1 + 1);
    if (c2 == std::string_view::npos || view.find(',', c2 + 1) != std::string_view::npos)
      throw ParseError(line_no_, "expected seq,vaddr,kind");
    auto seq = parse_u64(view.substr(0, c1));
    if (!seq) throw ParseError(line_no_, "bad sequence number");
    auto vaddr = parse_u64(view.substr(c1 + 1, c2 - c1 - 1));
    if (!vaddr) throw ParseError(line_no_, "bad address");
    if (*vaddr >= kAddrSpaceLimit) throw ParseError(line_no_, "address beyond 48-bit space");
    if (*vaddr % kBaseFrameBytes != 0) throw ParseError(line_no_, "address not 4KiB aligned");
    std::string_view kind = view.substr(c2 + 1);
    AccessRecord rec{*seq, *vaddr, AccessKind::Read};
    if (kind == "W" || kind == "w")
      rec.kind = AccessKind::Write;
    else if (kind != "R" && kind != "r")
      throw ParseError(line_no_, "access kind must be R or W");
    if (have_prev_ && rec.seq <= prev_seq_)
      throw ParseError(line_no_, "sequence numbers must be strictly increasing");
    prev_seq_ = rec.seq;
    have_prev_ = true;
    return rec;
  }

  LineReader reader_;
  std::size_t line_no_ = 0;
  std::uint64_t prev_seq_ = 0;
  bool have_prev_ = false;
};

class LineWriter {
 public:
  explicit LineWriter(const std::string& path) {
    if (is_gzip_path(path)) {
      gz_ = gzopen(path.c_str(), "wb");
      if (gz_ == nullptr) throw std::runtime_error("cannot create trace file: " + path);
    } else {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot create trace file: " + path);
    }
  }

  ~LineWriter() {
    if (gz_ != nullptr) gzclose(gz_);
  }

  void write(const std::string& text) {
    if (gz_ != nullptr) {
      if (gzwrite(gz_, text.data(), static_cast<unsigned>(text.size())) <= 0)
        throw std::runtime_error("trace write failed");
    } else {
      file_ << text;
      if (!file_) throw std::runtime_error("trace write failed");
    }
  }

 private:
  std::ofstream file_;
  gzFile gz_ = nullptr;
};

}  // namespace

std::unique_ptr<TraceSource> open_trace(const std::string& path) {
  return std::make_unique<FileTraceSource>(path);
}

void write_trace(const std::string& path, TraceSource& source) {
  LineWriter writer(path);
  std::string chunk;
  chunk.reserve(1 << 16);
  while (auto rec = source.next()) {
    chunk += std::to_string(rec->seq);
    chunk += ',';
    chunk += format_hex(rec->vaddr);
    chunk += ',';
    chunk += rec->kind == AccessKind::Write ? 'W' : 'R';
    chunk += '\n';
    if (chunk.size() > (1 << 15)) {
      writer.write(chunk);
      chunk.clear();
    }
  }
  if (!chunk.empty()) writer.write(chunk);
}

}  // namespace hpsim
