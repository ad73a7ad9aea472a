#include "memsizer/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace memsizer {

std::string_view to_string(FailureMode m) {
  return m == FailureMode::ConstantFraction ? "constant" : "uniform";
}

std::string_view to_string(NoiseMode m) {
  return m == NoiseMode::None ? "none" : "additive-uniform";
}

std::string_view to_string(RetryRung r) {
  switch (r) {
    case RetryRung::PredictorValue: return "predictor";
    case RetryRung::UserValue: return "user";
    case RetryRung::UpperBound: return "upper";
  }
  return "unknown";
}

FailureMode parse_failure_mode(std::string_view s) {
  if (s == "constant") return FailureMode::ConstantFraction;
  if (s == "uniform") return FailureMode::UniformFraction;
  throw ConfigError("unknown failure mode '" + std::string(s) + "'");
}

NoiseMode parse_noise_mode(std::string_view s) {
  if (s == "none") return NoiseMode::None;
  if (s == "additive-uniform") return NoiseMode::AdditiveUniform;
  throw ConfigError("unknown noise mode '" + std::string(s) + "'");
}

RetryRung parse_retry_rung(std::string_view s) {
  for (auto r : {RetryRung::PredictorValue, RetryRung::UserValue, RetryRung::UpperBound}) {
    if (to_string(r) == s) return r;
  }
  throw ConfigError("unknown retry rung '" + std::string(s) + "'");
}

void validate(const SimConfig& cfg) {
  try {
    cfg.sizing.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto& ladder = cfg.retry.ladder;
  if (ladder.empty()) throw ConfigError("retry ladder is empty");
  if (ladder.back() != RetryRung::UpperBound) {
    throw ConfigError("retry ladder must end with the upper bound");
  }
  if (!(cfg.failure.fraction > 0.0 && cfg.failure.fraction <= 1.0)) {
    throw ConfigError("failure fraction must lie in (0, 1]");
  }
  if (cfg.noise.half_width.value() > static_cast<std::uint64_t>(INT64_MAX / 2)) {
    throw ConfigError("noise half width too large");
  }
}

Millis time_to_failure(const FailureModel& model, Millis runtime, double u) {
  const double frac = model.mode == FailureMode::ConstantFraction ? model.fraction : u;
  const auto t = static_cast<std::int64_t>(std::ceil(frac * static_cast<double>(runtime.count())));
  return Millis{std::clamp<std::int64_t>(t, 1, std::max<std::int64_t>(runtime.count(), 1))};
}

Millis time_to_failure(const FailureModel& model, Millis runtime, RandomStream& stream) {
  const double u =
      model.mode == FailureMode::UniformFraction ? stream.uniform_open_closed() : 1.0;
  return time_to_failure(model, runtime, u);
}

namespace {

struct Event {
  Millis time;
  std::string instance_id;
  std::uint32_t attempt_no;

  friend auto operator<=>(const Event&, const Event&) = default;
};

struct Running {
  std::size_t record;
  std::size_t node;
};

/// Per-attempt random draws, fixed up front in instance-id order so they do
/// not depend on how events interleave.
struct AttemptDraws {
  double failure_u = 1.0;
  std::int64_t noise = 0;
};

MemBytes perturb(MemBytes peak, std::int64_t delta) {
  if (delta >= 0) {
    const auto d = static_cast<std::uint64_t>(delta);
    return peak.value() > UINT64_MAX - d ? MemBytes{UINT64_MAX} : MemBytes{peak.value() + d};
  }
  const auto d = static_cast<std::uint64_t>(-delta);
  return d >= peak.value() ? MemBytes{1} : MemBytes{peak.value() - d};
}

class Simulation {
 public:
  Simulation(const WorkflowDag& dag, const ClusterSpec& cluster, SchedulerKind scheduler,
             SizerKind sizer, const SimConfig& cfg)
      : dag_(dag),
        scheduler_(scheduler),
        cfg_(cfg),
        sizer_(sizer, cfg.sizing),
        cluster_(cluster) {
    report_.scheduler = scheduler;
    report_.sizer = sizer;
    report_.config = cfg;
    report_.cluster = cluster;
    for (const auto& n : cluster) report_.node_busy_core_ms[n.node_id] = 0;
  }

  RunReport run() {
    prepare();
    for (const auto& [id, task] : dag_.tasks()) {
      if (pending_deps_[id] == 0) make_ready(id);
    }
    Millis now{0};
    while (true) {
      if (!report_.aborted) place(now);
      if (events_.empty()) break;
      now = events_.begin()->time;
      while (!events_.empty() && events_.begin()->time == now) {
        Event ev = *events_.begin();
        events_.erase(events_.begin());
        complete(ev);
      }
    }
    if (!report_.aborted && finished_.size() != dag_.size()) {
      throw std::logic_error("simulation stalled with unfinished tasks");
    }
    finish_report();
    return std::move(report_);
  }

 private:
  void prepare() {
    ctx_.ranks = compute_ranks(dag_);
    const auto succ = dag_.successors();
    for (const auto& [id, s] : succ) successors_[id] = s;

    RandomStream failure_stream(cfg_.seed ^ kFailureStreamSalt);
    RandomStream noise_stream(cfg_.seed ^ kNoiseStreamSalt);
    const auto hw = static_cast<std::int64_t>(cfg_.noise.half_width.value());
    const std::size_t rungs = cfg_.retry.ladder.size();

    std::uint32_t max_cores = 0;
    for (const auto& n : cluster_.nodes()) max_cores = std::max(max_cores, n.spec.cores);

    for (const auto& [id, task] : dag_.tasks()) {
      if (task.cores == 0 || task.cores > max_cores) {
        throw InfeasibleTask("task '" + id + "' needs " + std::to_string(task.cores) +
                             " cores; no node has that many");
      }
      if (task.runtime.count() <= 0) throw InfeasibleTask("task '" + id + "' has no runtime");
      std::set<std::string> deps(task.depends_on.begin(), task.depends_on.end());
      pending_deps_[id] = deps.size();

      auto& draws = draws_[id];
      draws.resize(rungs);
      for (auto& d : draws) {
        d.failure_u = failure_stream.uniform_open_closed();
        if (cfg_.noise.mode == NoiseMode::AdditiveUniform) d.noise = noise_stream.between(-hw, hw);
      }
    }
  }

  void make_ready(const std::string& id) {
    ready_.insert(id);
    ctx_.submission_seq[id] = next_seq_++;
  }

  /// Largest memory any node able to host `cores` could ever grant.
  MemBytes max_grantable(std::uint32_t cores) const {
    MemBytes best{0};
    for (const auto& n : cluster_.nodes()) {
      if (n.spec.cores >= cores) best = std::max(best, n.spec.memory);
    }
    return best;
  }

  std::pair<MemBytes, std::string> size(const PhysicalTaskSpec& task, RetryRung rung) const {
    switch (rung) {
      case RetryRung::PredictorValue: {
        const Prediction p = sizer_.predict(task);
        return {p.value, path_label(p)};
      }
      case RetryRung::UserValue: {
        const Prediction p = finalize(task.user_mem.as_double(), PredictionPath::UserDefault,
                                      cfg_.sizing);
        return {p.value, "retry:" + path_label(p)};
      }
      case RetryRung::UpperBound:
        return {cfg_.sizing.upper_bound, "retry:upper_bound"};
    }
    throw std::logic_error("unhandled retry rung");
  }

  void place(Millis now) {
    if (ready_.empty()) return;
    std::vector<const PhysicalTaskSpec*> ready;
    ready.reserve(ready_.size());
    for (const auto& id : ready_) ready.push_back(&dag_.at(id));
    const auto ordered = order_ready(scheduler_, ready, ctx_);

    for (const PhysicalTaskSpec* task : ordered) {
      std::uint32_t most_free_cores = 0;
      for (const auto& n : cluster_.nodes()) most_free_cores = std::max(most_free_cores, n.free_cores);
      if (most_free_cores == 0) break;
      if (task->cores > most_free_cores) continue;

      const std::uint32_t attempt_no = attempts_[task->instance_id] + 1;
      const RetryRung rung = cfg_.retry.ladder[attempt_no - 1];
      auto [alloc, path] = size(*task, rung);
      // An allocation no node could ever hold would leave the task pending
      // forever; it is capped to the largest eligible node.
      alloc = std::min(alloc, max_grantable(task->cores));

      std::size_t node = cluster_.nodes().size();
      for (std::size_t i = 0; i < cluster_.nodes().size(); ++i) {
        if (cluster_.fits(i, task->cores, alloc)) {
          node = i;
          break;
        }
      }
      if (node == cluster_.nodes().size()) continue;

      cluster_.allocate(node, task->cores, alloc);
      attempts_[task->instance_id] = attempt_no;
      ready_.erase(task->instance_id);

      const AttemptDraws& draws = draws_.at(task->instance_id)[attempt_no - 1];
      const MemBytes effective = perturb(task->true_peak, draws.noise);
      const bool ok = alloc >= effective;

      AttemptRecord rec;
      rec.instance_id = task->instance_id;
      rec.abstract = task->abstract.name;
      rec.attempt_no = attempt_no;
      rec.node_id = cluster_.nodes()[node].spec.node_id;
      rec.allocated_mem = alloc;
      rec.cores = task->cores;
      rec.start = now;
      rec.end = now + (ok ? task->runtime
                          : time_to_failure(cfg_.failure, task->runtime, draws.failure_u));
      rec.outcome = ok ? Outcome::Success : Outcome::MemoryFailure;
      rec.observed_peak = ok ? effective : alloc;
      rec.predictor_path = std::move(path);

      running_[task->instance_id] = Running{report_.attempts.size(), node};
      events_.insert(Event{rec.end, rec.instance_id, attempt_no});
      report_.attempts.push_back(std::move(rec));
    }
  }

  void complete(const Event& ev) {
    const auto run_it = running_.find(ev.instance_id);
    const Running r = run_it->second;
    running_.erase(run_it);
    const AttemptRecord& rec = report_.attempts[r.record];
    const PhysicalTaskSpec& task = dag_.at(ev.instance_id);

    cluster_.release(r.node, rec.cores, rec.allocated_mem);
    report_.node_busy_core_ms[rec.node_id] +=
        static_cast<std::uint64_t>(rec.cores) * static_cast<std::uint64_t>(rec.duration().count());

    const bool ok = rec.outcome == Outcome::Success;
    sizer_.observe(Observation{task.abstract, task.input_size, rec.observed_peak,
                               rec.duration(), ok});
    if (ok) {
      finished_.insert(ev.instance_id);
      ++ctx_.finished_per_abstract[task.abstract];
      for (const auto& s : successors_[ev.instance_id]) {
        if (--pending_deps_[s] == 0) make_ready(s);
      }
    } else if (ev.attempt_no >= cfg_.retry.ladder.size()) {
      report_.aborted = true;
    } else {
      make_ready(ev.instance_id);
    }
  }

  void finish_report() {
    auto& a = report_.attempts;
    std::stable_sort(a.begin(), a.end(),
                     [](const AttemptRecord& x, const AttemptRecord& y) { return x.start < y.start; });
    if (a.empty()) return;
    Millis first = a.front().start;
    Millis last{0};
    for (const auto& rec : a) last = std::max(last, rec.end);
    report_.makespan = last - first;
  }

  const WorkflowDag& dag_;
  SchedulerKind scheduler_;
  SimConfig cfg_;
  MemorySizer sizer_;
  ClusterState cluster_;
  SchedulerContext ctx_;
  RunReport report_;

  std::map<std::string, std::vector<std::string>> successors_;
  std::map<std::string, std::size_t> pending_deps_;
  std::map<std::string, std::vector<AttemptDraws>> draws_;
  std::map<std::string, std::uint32_t> attempts_;
  std::map<std::string, Running> running_;
  std::set<std::string> ready_;
  std::set<std::string> finished_;
  std::set<Event> events_;
  std::uint64_t next_seq_ = 0;
};

}  // namespace

RunReport run(const WorkflowDag& dag, const ClusterSpec& cluster, SchedulerKind scheduler,
              SizerKind sizer, const SimConfig& cfg) {
  validate(cfg);
  require_valid(dag);
  if (cluster.empty()) throw ConfigError("cluster has no nodes");
  MemBytes largest{0};
  for (const auto& n : cluster) {
    if (n.cores == 0 || n.memory.value() == 0) {
      throw ConfigError("node '" + n.node_id + "' has no cores or memory");
    }
    largest = std::max(largest, n.memory);
  }
  if (cfg.sizing.lower_bound > largest) {
    throw InfeasibleTask("lower bound exceeds the memory of every node");
  }
  return Simulation(dag, cluster, scheduler, sizer, cfg).run();
}

}  // namespace memsizer
