#include "memsizer/schedulers.hpp"

#include <algorithm>
#include <stdexcept>

namespace memsizer {

std::string_view to_string(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::Original: return "original";
    case SchedulerKind::Rank: return "rank";
    case SchedulerKind::LffMin: return "lff-min";
    case SchedulerKind::LffMax: return "lff-max";
    case SchedulerKind::GsMin: return "gs-min";
    case SchedulerKind::GsMax: return "gs-max";
  }
  return "unknown";
}

SchedulerKind parse_scheduler(std::string_view name) {
  for (auto k : {SchedulerKind::Original, SchedulerKind::Rank, SchedulerKind::LffMin,
                 SchedulerKind::LffMax, SchedulerKind::GsMin, SchedulerKind::GsMax}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown scheduler '" + std::string(name) + "'");
}

namespace {

struct Entry {
  const PhysicalTaskSpec* task;
  std::uint64_t rank = 0;
  std::uint64_t finished = 0;
  std::uint64_t seq = 0;

  std::uint64_t input() const { return task->input_size.value(); }
  const std::string& id() const { return task->instance_id; }
};

bool by_rank(const Entry& a, const Entry& b) {
  if (a.rank != b.rank) return a.rank > b.rank;
  if (a.input() != b.input()) return a.input() > b.input();
  return a.id() < b.id();
}

template <bool SmallFirst>
bool by_least_finished(const Entry& a, const Entry& b) {
  if (a.finished != b.finished) return a.finished < b.finished;
  if (a.input() != b.input()) return SmallFirst ? a.input() < b.input() : a.input() > b.input();
  return a.id() < b.id();
}

}  // namespace

std::vector<const PhysicalTaskSpec*> order_ready(SchedulerKind kind,
                                                 std::span<const PhysicalTaskSpec* const> ready,
                                                 const SchedulerContext& ctx) {
  const bool needs_rank = kind == SchedulerKind::Rank || kind == SchedulerKind::GsMin ||
                          kind == SchedulerKind::GsMax;
  std::vector<Entry> entries;
  entries.reserve(ready.size());
  for (const PhysicalTaskSpec* t : ready) {
    Entry e{t};
    if (auto it = ctx.finished_per_abstract.find(t->abstract);
        it != ctx.finished_per_abstract.end()) {
      e.finished = it->second;
    }
    if (needs_rank) {
      auto it = ctx.ranks.find(t->instance_id);
      if (it == ctx.ranks.end()) throw std::out_of_range("no rank for '" + t->instance_id + "'");
      e.rank = it->second;
    }
    if (kind == SchedulerKind::Original) {
      auto it = ctx.submission_seq.find(t->instance_id);
      if (it == ctx.submission_seq.end()) {
        throw std::out_of_range("no submission sequence for '" + t->instance_id + "'");
      }
      e.seq = it->second;
    }
    entries.push_back(e);
  }

  auto gs = [&](bool small_first) {
    return [&, small_first](const Entry& a, const Entry& b) {
      const bool ua = a.finished < ctx.sample_threshold;
      const bool ub = b.finished < ctx.sample_threshold;
      if (ua != ub) return ua;
      if (!ua) return by_rank(a, b);
      if (a.rank != b.rank) return a.rank > b.rank;
      if (a.input() != b.input()) return small_first ? a.input() < b.input() : a.input() > b.input();
      return a.id() < b.id();
    };
  };

  switch (kind) {
    case SchedulerKind::Original:
      std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return a.seq != b.seq ? a.seq < b.seq : a.id() < b.id();
      });
      break;
    case SchedulerKind::Rank: std::sort(entries.begin(), entries.end(), by_rank); break;
    case SchedulerKind::LffMin:
      std::sort(entries.begin(), entries.end(), by_least_finished<true>);
      break;
    case SchedulerKind::LffMax:
      std::sort(entries.begin(), entries.end(), by_least_finished<false>);
      break;
    case SchedulerKind::GsMin: std::sort(entries.begin(), entries.end(), gs(true)); break;
    case SchedulerKind::GsMax: std::sort(entries.begin(), entries.end(), gs(false)); break;
  }

  std::vector<const PhysicalTaskSpec*> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.task);
  return out;
}

}  // namespace memsizer
