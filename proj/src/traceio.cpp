#include "memsizer/traceio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

#include "json.hpp"

#include "memsizer/random.hpp"
#include "memsizer/stats.hpp"

namespace memsizer::traceio {

namespace {

std::string kind_name(TraceError::Kind k) {
  switch (k) {
    case TraceError::Kind::MalformedHeader: return "malformed header";
    case TraceError::Kind::BadRow: return "bad row";
    case TraceError::Kind::BadInteger: return "bad integer";
    case TraceError::Kind::InvalidValue: return "invalid value";
    case TraceError::Kind::DuplicateId: return "duplicate instance id";
    case TraceError::Kind::DanglingDependency: return "dangling dependency";
    case TraceError::Kind::Cycle: return "dependency cycle";
  }
  return "trace error";
}

constexpr std::size_t kColumns = 9;
enum Col : std::size_t {
  kWorkflow = 0,
  kTask,
  kInstance,
  kInput,
  kPeak,
  kRuntime,
  kCpus,
  kUserMem,
  kDepends,
};

struct Record {
  std::size_t line;
  std::vector<std::string> fields;
};

/// Splits RFC 4180-style CSV into records. Blank lines are skipped.
std::vector<Record> split_records(std::string_view text) {
  std::vector<Record> out;
  std::size_t line = 1;
  std::size_t i = 0;
  while (i < text.size()) {
    Record rec{line, {}};
    std::string field;
    bool in_quotes = false;
    bool done = false;
    while (!done) {
      if (i >= text.size()) {
        if (in_quotes) throw TraceError(TraceError::Kind::BadRow, rec.line, 0, "unterminated quote");
        rec.fields.push_back(std::move(field));
        break;
      }
      const char c = text[i];
      if (in_quotes) {
        if (c == '"') {
          if (i + 1 < text.size() && text[i + 1] == '"') {
            field += '"';
            i += 2;
          } else {
            in_quotes = false;
            ++i;
          }
        } else {
          if (c == '\n') ++line;
          field += c;
          ++i;
        }
        continue;
      }
      switch (c) {
        case '"':
          if (!field.empty()) {
            throw TraceError(TraceError::Kind::BadRow, line, rec.fields.size() + 1,
                             "quote inside unquoted field");
          }
          in_quotes = true;
          ++i;
          break;
        case ',':
          rec.fields.push_back(std::move(field));
          field.clear();
          ++i;
          break;
        case '\r':
          if (i + 1 < text.size() && text[i + 1] == '\n') {
            ++i;
            break;
          }
          field += c;
          ++i;
          break;
        case '\n':
          rec.fields.push_back(std::move(field));
          ++line;
          ++i;
          done = true;
          break;
        default:
          field += c;
          ++i;
      }
    }
    if (rec.fields.size() == 1 && rec.fields[0].empty()) continue;
    out.push_back(std::move(rec));
  }
  return out;
}

std::uint64_t parse_u64(const std::string& s, std::size_t line, std::size_t col) {
  std::uint64_t v = 0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc{} || ptr != last) {
    throw TraceError(TraceError::Kind::BadInteger, line, col, "'" + s + "' is not a base-10 integer");
  }
  return v;
}

std::vector<std::string> split_deps(const std::string& s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(';', start);
    out.push_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

void append_field(std::string& out, const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) {
    out += f;
    return;
  }
  out += '"';
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

}  // namespace

TraceError::TraceError(Kind kind, std::size_t line, std::size_t column, const std::string& detail)
    : std::runtime_error("line " + std::to_string(line) +
                         (column ? ", column " + std::to_string(column) : std::string()) + ": " +
                         kind_name(kind) + ": " + detail),
      kind_(kind),
      line_(line),
      column_(column) {}

WorkflowDag parse_trace(std::string_view text) {
  const auto records = split_records(text);
  if (records.empty()) throw TraceError(TraceError::Kind::MalformedHeader, 1, 0, "missing header");

  static const std::vector<std::string> header = {
      "workflow",   "task", "instance_id",    "input_bytes", "peak_mem_bytes",
      "runtime_ms", "cpus", "user_mem_bytes", "depends_on"};
  if (records.front().fields != header) {
    throw TraceError(TraceError::Kind::MalformedHeader, records.front().line, 0,
                     "expected '" + std::string(kTraceHeader) + "'");
  }

  WorkflowDag dag;
  std::map<std::string, std::size_t> line_of;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& [line, f] = records[r];
    if (f.size() != kColumns) {
      throw TraceError(TraceError::Kind::BadRow, line, 0,
                       "expected 9 fields, found " + std::to_string(f.size()));
    }
    PhysicalTaskSpec t;
    t.workflow = f[kWorkflow];
    t.abstract = AbstractTaskId{f[kTask]};
    t.instance_id = f[kInstance];
    t.input_size = InputBytes{parse_u64(f[kInput], line, kInput + 1)};
    t.true_peak = MemBytes{parse_u64(f[kPeak], line, kPeak + 1)};
    const std::uint64_t runtime = parse_u64(f[kRuntime], line, kRuntime + 1);
    const std::uint64_t cpus = parse_u64(f[kCpus], line, kCpus + 1);
    t.user_mem = MemBytes{parse_u64(f[kUserMem], line, kUserMem + 1)};
    t.depends_on = split_deps(f[kDepends]);

    if (t.abstract.name.empty()) throw TraceError(TraceError::Kind::InvalidValue, line, kTask + 1, "empty task name");
    if (t.instance_id.empty()) {
      throw TraceError(TraceError::Kind::InvalidValue, line, kInstance + 1, "empty instance id");
    }
    if (t.true_peak.value() == 0) {
      throw TraceError(TraceError::Kind::InvalidValue, line, kPeak + 1, "peak memory must be > 0");
    }
    if (runtime == 0 || runtime > static_cast<std::uint64_t>(INT64_MAX)) {
      throw TraceError(TraceError::Kind::InvalidValue, line, kRuntime + 1, "runtime must be > 0");
    }
    if (cpus == 0 || cpus > UINT32_MAX) {
      throw TraceError(TraceError::Kind::InvalidValue, line, kCpus + 1, "cpus must be >= 1");
    }
    t.runtime = Millis{static_cast<std::int64_t>(runtime)};
    t.cores = static_cast<std::uint32_t>(cpus);

    if (line_of.contains(t.instance_id)) {
      throw TraceError(TraceError::Kind::DuplicateId, line, kInstance + 1,
                       "'" + t.instance_id + "' first defined on line " +
                           std::to_string(line_of[t.instance_id]));
    }
    line_of[t.instance_id] = line;
    dag.add(std::move(t));
  }

  if (auto err = validate_dag(dag)) {
    const std::size_t line = line_of.at(err->instance_id());
    if (err->kind() == DagError::Kind::UnknownDependency) {
      throw TraceError(TraceError::Kind::DanglingDependency, line, kDepends + 1, err->what());
    }
    throw TraceError(TraceError::Kind::Cycle, line, kDepends + 1, err->what());
  }
  return dag;
}

std::string write_trace(const WorkflowDag& dag) {
  std::string out(kTraceHeader);
  out += '\n';
  for (const auto& [id, t] : dag.tasks()) {
    append_field(out, t.workflow);
    out += ',';
    append_field(out, t.abstract.name);
    out += ',';
    append_field(out, t.instance_id);
    out += ',';
    out += std::to_string(t.input_size.value());
    out += ',';
    out += std::to_string(t.true_peak.value());
    out += ',';
    out += std::to_string(t.runtime.count());
    out += ',';
    out += std::to_string(t.cores);
    out += ',';
    out += std::to_string(t.user_mem.value());
    out += ',';
    std::string deps;
    for (std::size_t i = 0; i < t.depends_on.size(); ++i) {
      if (i) deps += ';';
      deps += t.depends_on[i];
    }
    append_field(out, deps);
    out += '\n';
  }
  return out;
}

std::string_view to_string(Pattern p) {
  switch (p) {
    case Pattern::Linear: return "linear";
    case Pattern::NoisyWeak: return "noisy-weak";
    case Pattern::Bimodal: return "bimodal";
    case Pattern::Uncorrelated: return "uncorrelated";
  }
  return "unknown";
}

Pattern parse_pattern(std::string_view s) {
  for (auto p : {Pattern::Linear, Pattern::NoisyWeak, Pattern::Bimodal, Pattern::Uncorrelated}) {
    if (to_string(p) == s) return p;
  }
  throw SpecError("unknown pattern '" + std::string(s) + "'");
}

namespace {

void check_spec(const SyntheticSpec& s) {
  if (s.n == 0) throw SpecError("n must be at least 1");
  if (s.task.empty()) throw SpecError("task name must not be empty");
  if (s.input_min > s.input_max) throw SpecError("input_min exceeds input_max");
  for (double v : {s.slope, s.intercept, s.noise_sigma, s.cluster_fraction, s.low_peak, s.peak_min,
                   s.peak_max, s.runtime_base_ms, s.runtime_per_gib_ms, s.runtime_jitter}) {
    if (!std::isfinite(v)) throw SpecError("parameters must be finite");
  }
  if (s.noise_sigma < 0.0) throw SpecError("noise_sigma must be >= 0");
  if (s.cluster_fraction < 0.0 || s.cluster_fraction > 1.0) {
    throw SpecError("cluster_fraction must lie in [0, 1]");
  }
  if (s.pattern == Pattern::Uncorrelated && !(s.peak_min > 0.0 && s.peak_min <= s.peak_max)) {
    throw SpecError("need 0 < peak_min <= peak_max");
  }
  if (s.runtime_jitter < 0.0 || s.runtime_jitter >= 1.0) {
    throw SpecError("runtime_jitter must lie in [0, 1)");
  }
  if (s.core_choices.empty() ||
      std::any_of(s.core_choices.begin(), s.core_choices.end(), [](auto c) { return c == 0; })) {
    throw SpecError("core_choices must be non-empty and positive");
  }
  if (s.pattern == Pattern::NoisyWeak && s.n < 2) throw SpecError("noisy-weak needs n >= 2");
}

MemBytes peak_from(double v) {
  const MemBytes m = ceil_bytes(std::round(v));
  return m.value() == 0 ? MemBytes{1} : m;
}

WorkflowDag generate_once(const SyntheticSpec& s, std::uint64_t seed) {
  RandomStream rng(seed);
  const std::size_t n = s.n;

  std::vector<bool> low_band(n, false);
  if (s.pattern == Pattern::Bimodal) {
    const auto low = static_cast<std::size_t>(std::llround(s.cluster_fraction * static_cast<double>(n)));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.below(i + 1)]);
    for (std::size_t i = 0; i < low; ++i) low_band[idx[i]] = true;
  }

  const std::uint64_t lo = s.input_min.value();
  const std::uint64_t hi = s.input_max.value();
  // Noisy-weak widens the noise to at least twice the linear band's span and
  // lifts the band by the same amount so peaks stay positive.
  double noise_width = s.noise_sigma;
  double lift = 0.0;
  if (s.pattern == Pattern::NoisyWeak) {
    const double span = std::abs(s.slope) * static_cast<double>(hi - lo);
    noise_width = std::max(noise_width, 2.0 * span);
    lift = noise_width;
  }
  std::vector<PhysicalTaskSpec> tasks(n);
  MemBytes max_peak{0};
  for (std::size_t i = 0; i < n; ++i) {
    auto& t = tasks[i];
    char id[32];
    std::snprintf(id, sizeof id, "_%05zu", i);
    t.instance_id = s.task + id;
    t.workflow = s.workflow;
    t.abstract = AbstractTaskId{s.task};

    std::uint64_t input = lo;
    if (s.spacing == InputSpacing::Even) {
      if (n > 1) {
        const std::uint64_t range = hi - lo, steps = n - 1;
        input = lo + range / steps * i + range % steps * i / steps;
      }
    } else {
      input = lo + (hi - lo == UINT64_MAX ? rng.next() : rng.below(hi - lo + 1));
    }
    t.input_size = InputBytes{input};
    const double x = static_cast<double>(input);
    const double noise = noise_width > 0.0 ? rng.uniform(-noise_width, noise_width) : 0.0;

    double peak = 0.0;
    switch (s.pattern) {
      case Pattern::Linear:
        peak = s.slope * x + s.intercept + noise;
        break;
      case Pattern::NoisyWeak:
        peak = s.slope * x + s.intercept + lift + noise;
        break;
      case Pattern::Bimodal:
        peak = low_band[i] ? s.low_peak + noise : s.slope * x + s.intercept + noise;
        break;
      case Pattern::Uncorrelated:
        peak = rng.uniform(s.peak_min, s.peak_max);
        break;
    }
    t.true_peak = peak_from(peak);
    max_peak = std::max(max_peak, t.true_peak);

    const double gib = x / static_cast<double>(kGiB);
    const double jitter = s.runtime_jitter > 0.0 ? rng.uniform(-s.runtime_jitter, s.runtime_jitter) : 0.0;
    const double runtime = (s.runtime_base_ms + s.runtime_per_gib_ms * gib) * (1.0 + jitter);
    t.runtime = Millis{std::max<std::int64_t>(1, std::llround(runtime))};
    t.cores = s.core_choices[rng.below(s.core_choices.size())];
  }

  const std::uint64_t granule = 256 * kMiB;
  const std::uint64_t half_up = max_peak.value() / 2 + max_peak.value() % 2;
  const std::uint64_t target = max_peak.value() + half_up;
  const MemBytes user{(target + granule - 1) / granule * granule};
  for (auto& t : tasks) t.user_mem = user;
  return WorkflowDag(std::move(tasks));
}

}  // namespace

WorkflowDag generate_synthetic(const SyntheticSpec& spec) {
  check_spec(spec);
  if (spec.pattern != Pattern::NoisyWeak) return generate_once(spec, spec.seed);

  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    WorkflowDag dag = generate_once(spec, spec.seed + attempt);
    std::vector<double> x, y;
    for (const auto& [_, t] : dag.tasks()) {
      x.push_back(t.input_size.as_double());
      y.push_back(t.true_peak.as_double());
    }
    if (stats::pearson(x, y) < 0.3) return dag;
  }
  throw PropertyUnsatisfiable("noisy-weak: no seed in 100 retries gave a correlation below 0.3");
}

std::string write_report(const RunReport& report, const metrics::MetricsSummary& summary) {
  using nlohmann::ordered_json;
  const SimConfig& cfg = report.config;

  ordered_json nodes = ordered_json::array();
  for (const auto& n : report.cluster) {
    nodes.push_back({{"node_id", n.node_id}, {"cores", n.cores}, {"memory", n.memory.value()}});
  }
  ordered_json ladder = ordered_json::array();
  for (auto r : cfg.retry.ladder) ladder.push_back(to_string(r));

  ordered_json config = {
      {"scheduler", to_string(report.scheduler)},
      {"sizer", to_string(report.sizer)},
      {"seed", cfg.seed},
      {"sizing",
       {{"lower_bound", cfg.sizing.lower_bound.value()},
        {"upper_bound", cfg.sizing.upper_bound.value()},
        {"static_offset", cfg.sizing.static_offset.value()},
        {"lambda", cfg.sizing.lambda},
        {"pearson_gate", cfg.sizing.pearson_gate},
        {"min_samples", cfg.sizing.min_samples},
        {"witt_min_samples", cfg.sizing.witt_min_samples},
        {"percentile", cfg.sizing.percentile},
        {"train_on_failures", cfg.sizing.train_on_failures}}},
      {"failure", {{"mode", to_string(cfg.failure.mode)}, {"fraction", cfg.failure.fraction}}},
      {"noise",
       {{"mode", to_string(cfg.noise.mode)}, {"half_width", cfg.noise.half_width.value()}}},
      {"retry_ladder", ladder},
      {"cluster", nodes},
  };

  ordered_json metrics = {
      {"maq", summary.maq},
      {"maq_empty", summary.maq_empty},
      {"used_mem_time", summary.used_mem_time},
      {"over_wastage", summary.over_wastage},
      {"under_wastage", summary.under_wastage},
      {"makespan_ms", summary.makespan.count()},
      {"failed_attempts", summary.failed_attempts},
      {"cpu_utilization", summary.cpu_utilization},
      {"allocated_mem_time", summary.allocated_mem_time},
      {"allocated_cpu_time", summary.allocated_cpu_time},
      {"aborted", report.aborted},
  };

  ordered_json attempts = ordered_json::array();
  std::map<std::string, std::uint64_t> paths;
  for (const auto& a : report.attempts) {
    attempts.push_back({
        {"instance_id", a.instance_id},
        {"task", a.abstract},
        {"attempt", a.attempt_no},
        {"node", a.node_id},
        {"allocated_mem", a.allocated_mem.value()},
        {"cores", a.cores},
        {"start_ms", a.start.count()},
        {"end_ms", a.end.count()},
        {"outcome", a.outcome == Outcome::Success ? "success" : "memory_failure"},
        {"observed_peak", a.observed_peak.value()},
        {"path", a.predictor_path},
    });
    ++paths[a.predictor_path];
  }
  ordered_json path_counts = ordered_json::object();
  for (const auto& [p, c] : paths) path_counts[p] = c;

  ordered_json doc;
  doc["config"] = std::move(config);
  doc["metrics"] = std::move(metrics);
  doc["attempts"] = std::move(attempts);
  doc["path_counts"] = std::move(path_counts);
  return doc.dump(2) + "\n";
}

}  // namespace memsizer::traceio
