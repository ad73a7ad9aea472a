#include "memsizer/metrics.hpp"

#include <algorithm>
#include <map>

namespace memsizer::metrics {

Wastage compute_wastage(const std::vector<AttemptRecord>& attempts) {
  Wastage w;
  for (const auto& a : attempts) {
    const double dur = static_cast<double>(a.duration().count());
    if (a.outcome == Outcome::Success) {
      w.used += a.observed_peak.as_double() * dur;
      w.over += (a.allocated_mem.as_double() - a.observed_peak.as_double()) * dur;
    } else {
      w.under += a.allocated_mem.as_double() * dur;
    }
  }
  return w;
}

Wastage compute_wastage(const RunReport& report) { return compute_wastage(report.attempts); }

MaqResult compute_maq(const Wastage& w) {
  const double denom = w.used + w.over + w.under;
  if (!(denom > 0.0)) return {1.0, true};
  return {w.used / denom, false};
}

MaqResult compute_maq(const RunReport& report) { return compute_maq(compute_wastage(report)); }

double cpu_utilization(const RunReport& report, const ClusterSpec& cluster) {
  std::uint64_t total_cores = 0;
  for (const auto& n : cluster) total_cores += n.cores;
  const double capacity =
      static_cast<double>(total_cores) * static_cast<double>(report.makespan.count());
  if (!(capacity > 0.0)) return 0.0;
  double busy = 0.0;
  for (const auto& a : report.attempts) {
    busy += static_cast<double>(a.cores) * static_cast<double>(a.duration().count());
  }
  return busy / capacity;
}

MetricsSummary summarize(const RunReport& report) {
  MetricsSummary s;
  const Wastage w = compute_wastage(report);
  const MaqResult maq = compute_maq(w);
  s.maq = maq.value;
  s.maq_empty = maq.empty;
  s.used_mem_time = w.used;
  s.over_wastage = w.over;
  s.under_wastage = w.under;
  s.makespan = report.makespan;
  s.cpu_utilization = cpu_utilization(report, report.cluster);
  for (const auto& a : report.attempts) {
    const double dur = static_cast<double>(a.duration().count());
    if (a.outcome == Outcome::MemoryFailure) ++s.failed_attempts;
    s.allocated_mem_time += a.allocated_mem.as_double() * dur;
    s.allocated_cpu_time += static_cast<double>(a.cores) * dur;
  }
  return s;
}

namespace {

std::vector<CdfPoint> ratio_cdf(std::vector<double> ratios) {
  std::vector<CdfPoint> out;
  if (ratios.empty()) return out;
  std::sort(ratios.begin(), ratios.end());
  const double n = static_cast<double>(ratios.size());
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (i + 1 < ratios.size() && ratios[i + 1] == ratios[i]) continue;
    out.push_back({ratios[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

double gib_per_core(MemBytes mem, std::uint32_t cores) {
  return mem.as_double() / static_cast<double>(kGiB) / static_cast<double>(cores);
}

}  // namespace

std::vector<CdfPoint> mem_per_core_distribution(const WorkflowDag& trace, MemKind kind) {
  std::vector<double> ratios;
  ratios.reserve(trace.size());
  for (const auto& [_, t] : trace.tasks()) {
    ratios.push_back(gib_per_core(kind == MemKind::Requested ? t.user_mem : t.true_peak, t.cores));
  }
  return ratio_cdf(std::move(ratios));
}

std::vector<CdfPoint> mem_per_core_distribution(const RunReport& report, MemKind kind) {
  std::vector<double> ratios;
  for (const auto& a : report.attempts) {
    if (kind == MemKind::Requested) {
      ratios.push_back(gib_per_core(a.allocated_mem, a.cores));
    } else if (a.outcome == Outcome::Success) {
      ratios.push_back(gib_per_core(a.observed_peak, a.cores));
    }
  }
  return ratio_cdf(std::move(ratios));
}

namespace {

/// (abstract, ordinal) -> task, ordinals assigned in instance-id order.
std::map<std::pair<std::string, std::size_t>, const PhysicalTaskSpec*> keyed(
    const WorkflowDag& dag) {
  std::map<std::pair<std::string, std::size_t>, const PhysicalTaskSpec*> out;
  std::map<std::string, std::size_t> next;
  for (const auto& [_, t] : dag.tasks()) {
    out[{t.abstract.name, next[t.abstract.name]++}] = &t;
  }
  return out;
}

}  // namespace

PeakDiffReport peak_diff_between_runs(const WorkflowDag& a, const WorkflowDag& b) {
  const auto ka = keyed(a);
  const auto kb = keyed(b);
  PeakDiffReport r;
  for (const auto& [key, ta] : ka) {
    auto it = kb.find(key);
    if (it == kb.end()) {
      r.unmatched_a.push_back(ta->instance_id);
      continue;
    }
    const PhysicalTaskSpec* tb = it->second;
    const MemBytes diff =
        ta->true_peak >= tb->true_peak ? ta->true_peak - tb->true_peak : tb->true_peak - ta->true_peak;
    r.matched.push_back({key.first, key.second, ta->instance_id, tb->instance_id, diff});
  }
  for (const auto& [key, tb] : kb) {
    if (!ka.contains(key)) r.unmatched_b.push_back(tb->instance_id);
  }
  if (r.matched.empty()) throw NoOverlap("traces share no (task, instance index) keys");

  std::vector<MemBytes> diffs;
  diffs.reserve(r.matched.size());
  for (const auto& m : r.matched) diffs.push_back(m.diff);
  std::sort(diffs.begin(), diffs.end());
  const double n = static_cast<double>(diffs.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (i + 1 < diffs.size() && diffs[i + 1] == diffs[i]) continue;
    r.cdf.emplace_back(diffs[i], static_cast<double>(i + 1) / n);
  }
  return r;
}

PatternReport pattern_report(const WorkflowDag& trace, const AbstractTaskId& abstract) {
  std::vector<double> x, y;
  std::vector<MemBytes> peaks;
  for (const auto& [_, t] : trace.tasks()) {
    if (t.abstract != abstract) continue;
    x.push_back(t.input_size.as_double());
    y.push_back(t.true_peak.as_double());
    peaks.push_back(t.true_peak);
  }
  if (x.size() < 2) {
    throw stats::StatsError(stats::StatsError::Kind::TooFewSamples,
                            "pattern report for '" + abstract.name + "' needs two instances");
  }

  PatternReport r;
  r.abstract = abstract.name;
  r.instances = x.size();
  r.pearson = stats::pearson(x, y);
  r.p95 = stats::percentile(peaks, 95.0);
  if (*std::min_element(x.begin(), x.end()) != *std::max_element(x.begin(), x.end())) {
    r.ols = stats::ols_fit(x, y);
    r.witt_offset = stats::residual_stddev(x, y, *r.ols);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (peaks[i] > r.p95) ++r.under_p95;
    if (!r.ols) continue;
    const double line = (*r.ols)(x[i]);
    if (peaks[i] > ceil_bytes(line)) ++r.under_ols;
    if (peaks[i] > ceil_bytes(line + r.witt_offset)) ++r.under_witt;
  }
  return r;
}

}  // namespace memsizer::metrics
