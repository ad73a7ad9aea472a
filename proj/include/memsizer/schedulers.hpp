#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memsizer/core.hpp"

namespace memsizer {

enum class SchedulerKind { Original, Rank, LffMin, LffMax, GsMin, GsMax };

std::string_view to_string(SchedulerKind kind);
/// Accepts original, rank, lff-min, lff-max, gs-min, gs-max; throws
/// std::invalid_argument otherwise.
SchedulerKind parse_scheduler(std::string_view name);

struct SchedulerContext {
  std::map<std::string, std::uint32_t> ranks;
  std::map<AbstractTaskId, std::size_t> finished_per_abstract;
  std::map<std::string, std::uint64_t> submission_seq;
  /// Abstract tasks with fewer finished instances than this count as
  /// under-sampled for the GS strategies.
  std::size_t sample_threshold = 5;
};

/// Priority order for the ready tasks. Every ordering ends in an instance-id
/// tiebreak, so the result is a deterministic permutation of `ready`.
/// Ready tasks must have an entry in ranks and submission_seq; a missing
/// finished count reads as zero.
std::vector<const PhysicalTaskSpec*> order_ready(SchedulerKind kind,
                                                 std::span<const PhysicalTaskSpec* const> ready,
                                                 const SchedulerContext& ctx);

}  // namespace memsizer
