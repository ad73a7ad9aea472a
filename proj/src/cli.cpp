#include "memsizer/cli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <future>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace memsizer::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::uint64_t parse_uint(std::string_view s, std::string_view key) {
  s = trim(s);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError(std::string(key) + ": '" + std::string(s) + "' is not a non-negative integer");
  }
  return v;
}

double parse_real(std::string_view s, std::string_view key) {
  s = trim(s);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    // Allow simple fractions such as 1/50.
    const auto slash = s.find('/');
    if (slash != std::string_view::npos) {
      const double num = parse_real(s.substr(0, slash), key);
      const double den = parse_real(s.substr(slash + 1), key);
      if (den != 0.0) return num / den;
    }
    throw ConfigError(std::string(key) + ": '" + std::string(s) + "' is not a number");
  }
  return v;
}

bool parse_bool(std::string_view s, std::string_view key) {
  s = trim(s);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(std::string(key) + ": '" + std::string(s) + "' is not a boolean");
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(',', start);
    const auto item = trim(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    if (!item.empty()) out.emplace_back(item);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string fmt_real(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

template <typename T>
T wrap_config(std::string_view key, const std::function<T()>& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

}  // namespace

MemBytes parse_memory(std::string_view text) {
  std::string_view s = trim(text);
  std::size_t digits = 0;
  while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
  if (digits == 0) throw ConfigError("'" + std::string(text) + "' is not a memory amount");
  const std::uint64_t n = parse_uint(s.substr(0, digits), "memory");
  std::string unit(trim(s.substr(digits)));
  std::transform(unit.begin(), unit.end(), unit.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::uint64_t mult = 1;
  if (unit.empty() || unit == "b") {
    mult = 1;
  } else if (unit == "k" || unit == "kb" || unit == "kib") {
    mult = std::uint64_t{1} << 10;
  } else if (unit == "m" || unit == "mb" || unit == "mib") {
    mult = kMiB;
  } else if (unit == "g" || unit == "gb" || unit == "gib") {
    mult = kGiB;
  } else if (unit == "t" || unit == "tb" || unit == "tib") {
    mult = std::uint64_t{1} << 40;
  } else {
    throw ConfigError("unknown memory unit '" + unit + "'");
  }
  if (n != 0 && mult > UINT64_MAX / n) throw ConfigError("memory amount overflows");
  return MemBytes{n * mult};
}

Settings parse_settings(std::string_view text) {
  Settings out;
  std::string section;
  std::size_t lineno = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("config line " + std::to_string(lineno) + ": unterminated section");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    std::string_view rest = line.substr(eq + 1);
    // Inline comments need whitespace before the marker.
    for (std::size_t i = 1; i < rest.size(); ++i) {
      if ((rest[i] == '#' || rest[i] == ';') && (rest[i - 1] == ' ' || rest[i - 1] == '\t')) {
        rest = rest.substr(0, i);
        break;
      }
    }
    const std::string value(trim(rest));
    out[section.empty() ? key : section + "." + key] = value;
  }
  return out;
}

ExperimentConfig build_config(const Settings& settings) {
  ExperimentConfig cfg;
  std::uint64_t node_count = 4;
  std::uint32_t node_cores = 8;
  MemBytes node_memory = MemBytes::gib(24);

  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto& syn = cfg.synthetic;
  auto& sz = cfg.sim.sizing;
  const std::map<std::string, Setter> setters = {
      {"workload.trace", [&](auto&, auto& v) { cfg.trace_path = v; }},
      {"synthetic.pattern",
       [&](auto& k, auto& v) {
         syn.pattern = wrap_config<traceio::Pattern>(k, [&] { return traceio::parse_pattern(v); });
       }},
      {"synthetic.n", [&](auto& k, auto& v) { syn.n = parse_uint(v, k); }},
      {"synthetic.workflow", [&](auto&, auto& v) { syn.workflow = v; }},
      {"synthetic.task", [&](auto&, auto& v) { syn.task = v; }},
      {"synthetic.spacing",
       [&](auto& k, auto& v) {
         if (v == "even") {
           syn.spacing = traceio::InputSpacing::Even;
         } else if (v == "random") {
           syn.spacing = traceio::InputSpacing::Random;
         } else {
           throw ConfigError(k + ": expected even or random");
         }
       }},
      {"synthetic.input_min",
       [&](auto&, auto& v) { syn.input_min = InputBytes{parse_memory(v).value()}; }},
      {"synthetic.input_max",
       [&](auto&, auto& v) { syn.input_max = InputBytes{parse_memory(v).value()}; }},
      {"synthetic.slope", [&](auto& k, auto& v) { syn.slope = parse_real(v, k); }},
      {"synthetic.intercept", [&](auto&, auto& v) { syn.intercept = parse_memory(v).as_double(); }},
      {"synthetic.noise_sigma",
       [&](auto&, auto& v) { syn.noise_sigma = parse_memory(v).as_double(); }},
      {"synthetic.cluster_fraction",
       [&](auto& k, auto& v) { syn.cluster_fraction = parse_real(v, k); }},
      {"synthetic.low_peak", [&](auto&, auto& v) { syn.low_peak = parse_memory(v).as_double(); }},
      {"synthetic.peak_min", [&](auto&, auto& v) { syn.peak_min = parse_memory(v).as_double(); }},
      {"synthetic.peak_max", [&](auto&, auto& v) { syn.peak_max = parse_memory(v).as_double(); }},
      {"synthetic.runtime_base_ms",
       [&](auto& k, auto& v) { syn.runtime_base_ms = parse_real(v, k); }},
      {"synthetic.runtime_per_gib_ms",
       [&](auto& k, auto& v) { syn.runtime_per_gib_ms = parse_real(v, k); }},
      {"synthetic.runtime_jitter",
       [&](auto& k, auto& v) { syn.runtime_jitter = parse_real(v, k); }},
      {"synthetic.cores",
       [&](auto& k, auto& v) {
         syn.core_choices.clear();
         for (const auto& c : split_list(v)) {
           syn.core_choices.push_back(static_cast<std::uint32_t>(parse_uint(c, k)));
         }
       }},
      {"synthetic.seed", [&](auto& k, auto& v) { syn.seed = parse_uint(v, k); }},
      {"cluster.nodes", [&](auto& k, auto& v) { node_count = parse_uint(v, k); }},
      {"cluster.cores",
       [&](auto& k, auto& v) { node_cores = static_cast<std::uint32_t>(parse_uint(v, k)); }},
      {"cluster.memory", [&](auto&, auto& v) { node_memory = parse_memory(v); }},
      {"sizing.sizer",
       [&](auto& k, auto& v) {
         cfg.sizer = wrap_config<SizerKind>(k, [&] { return parse_sizer(v); });
       }},
      {"sizing.lower_bound", [&](auto&, auto& v) { sz.lower_bound = parse_memory(v); }},
      {"sizing.upper_bound", [&](auto&, auto& v) { sz.upper_bound = parse_memory(v); }},
      {"sizing.static_offset", [&](auto&, auto& v) { sz.static_offset = parse_memory(v); }},
      {"sizing.lambda", [&](auto& k, auto& v) { sz.lambda = parse_real(v, k); }},
      {"sizing.pearson_gate", [&](auto& k, auto& v) { sz.pearson_gate = parse_real(v, k); }},
      {"sizing.min_samples", [&](auto& k, auto& v) { sz.min_samples = parse_uint(v, k); }},
      {"sizing.witt_min_samples",
       [&](auto& k, auto& v) { sz.witt_min_samples = parse_uint(v, k); }},
      {"sizing.percentile", [&](auto& k, auto& v) { sz.percentile = parse_real(v, k); }},
      {"sizing.train_on_failures",
       [&](auto& k, auto& v) { sz.train_on_failures = parse_bool(v, k); }},
      {"scheduler.strategy",
       [&](auto& k, auto& v) {
         cfg.scheduler = wrap_config<SchedulerKind>(k, [&] { return parse_scheduler(v); });
       }},
      {"failure.mode", [&](auto&, auto& v) { cfg.sim.failure.mode = parse_failure_mode(v); }},
      {"failure.fraction",
       [&](auto& k, auto& v) { cfg.sim.failure.fraction = parse_real(v, k); }},
      {"noise.mode", [&](auto&, auto& v) { cfg.sim.noise.mode = parse_noise_mode(v); }},
      {"noise.half_width",
       [&](auto&, auto& v) { cfg.sim.noise.half_width = parse_memory(v); }},
      {"retry.ladder",
       [&](auto&, auto& v) {
         cfg.sim.retry.ladder.clear();
         for (const auto& r : split_list(v)) cfg.sim.retry.ladder.push_back(parse_retry_rung(r));
       }},
      {"experiment.seed", [&](auto& k, auto& v) { cfg.sim.seed = parse_uint(v, k); }},
      {"experiment.repetitions",
       [&](auto& k, auto& v) { cfg.repetitions = parse_uint(v, k); }},
      {"experiment.out", [&](auto&, auto& v) { cfg.out_dir = v; }},
  };

  for (const auto& [key, value] : settings) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown setting '" + key + "'");
    it->second(key, value);
  }

  if (cfg.repetitions == 0) throw ConfigError("experiment.repetitions must be at least 1");
  if (node_count == 0 || node_cores == 0 || node_memory.value() == 0) {
    throw ConfigError("cluster needs at least one node with cores and memory");
  }
  for (std::uint64_t i = 0; i < node_count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "node-%02llu", static_cast<unsigned long long>(i));
    cfg.cluster.push_back(NodeSpec{id, node_cores, node_memory});
  }
  validate(cfg.sim);
  return cfg;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
}

WorkflowDag load_workload(const ExperimentConfig& cfg) {
  if (cfg.trace_path) return traceio::parse_trace(read_file(*cfg.trace_path));
  return traceio::generate_synthetic(cfg.synthetic);
}

std::size_t median_run(const std::vector<Millis>& makespans) {
  if (makespans.empty()) throw std::invalid_argument("no runs");
  std::vector<std::size_t> idx(makespans.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return makespans[a] < makespans[b]; });
  return idx[(idx.size() - 1) / 2];
}

SimulateOutcome cmd_simulate(const ExperimentConfig& cfg, const WorkflowDag& dag) {
  std::vector<std::future<RunReport>> futures;
  futures.reserve(cfg.repetitions);
  for (std::size_t r = 0; r < cfg.repetitions; ++r) {
    SimConfig sim = cfg.sim;
    sim.seed = cfg.sim.seed + r;
    futures.push_back(std::async(std::launch::async, [&dag, &cfg, sim] {
      return run(dag, cfg.cluster, cfg.scheduler, cfg.sizer, sim);
    }));
  }

  SimulateOutcome out;
  std::vector<Millis> makespans;
  for (std::size_t r = 0; r < futures.size(); ++r) {
    RunReport rep = futures[r].get();
    auto summary = metrics::summarize(rep);
    write_file(cfg.out_dir / ("run_" + std::to_string(r) + ".json"),
               traceio::write_report(rep, summary));
    makespans.push_back(rep.makespan);
    out.any_aborted = out.any_aborted || rep.aborted;
    out.reports.push_back(std::move(rep));
    out.summaries.push_back(summary);
  }
  out.median_index = median_run(makespans);

  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < out.reports.size(); ++r) {
    const auto& s = out.summaries[r];
    runs.push_back({{"run", r},
                    {"seed", cfg.sim.seed + r},
                    {"report", "run_" + std::to_string(r) + ".json"},
                    {"makespan_ms", s.makespan.count()},
                    {"maq", s.maq},
                    {"failed_attempts", s.failed_attempts},
                    {"aborted", out.reports[r].aborted}});
  }
  nlohmann::ordered_json summary = {
      {"sizer", to_string(cfg.sizer)},
      {"scheduler", to_string(cfg.scheduler)},
      {"repetitions", cfg.repetitions},
      {"median_run", out.median_index},
      {"median_report", "run_" + std::to_string(out.median_index) + ".json"},
      {"runs", runs},
  };
  write_file(cfg.out_dir / "summary.json", summary.dump(2) + "\n");
  return out;
}

std::string cmd_replay(const WorkflowDag& trace, SizerKind sizer, const SizingConfig& cfg) {
  MemorySizer model(sizer, cfg);
  std::string out = "instance_id,predicted_bytes,actual_bytes,path,would_fail\n";
  for (const auto& [id, task] : trace.tasks()) {
    const Prediction p = model.predict(task);
    const bool fails = p.value < task.true_peak;
    out += id + "," + std::to_string(p.value.value()) + "," +
           std::to_string(task.true_peak.value()) + "," + path_label(p) + "," +
           (fails ? "true" : "false") + "\n";
    model.observe(Observation{task.abstract, task.input_size, task.true_peak, task.runtime, true});
  }
  return out;
}

std::map<std::string, std::string> cmd_analyze(const WorkflowDag& trace,
                                               const WorkflowDag* second) {
  std::map<std::string, std::string> files;

  std::set<AbstractTaskId> abstracts;
  for (const auto& [_, t] : trace.tasks()) abstracts.insert(t.abstract);
  std::string patterns =
      "task,instances,pearson,ols_slope,ols_intercept,witt_offset,p95_bytes,under_ols,"
      "under_witt,under_p95\n";
  for (const auto& a : abstracts) {
    std::size_t count = 0;
    for (const auto& [_, t] : trace.tasks()) count += t.abstract == a;
    if (count < 2) continue;
    const auto r = metrics::pattern_report(trace, a);
    patterns += a.name + "," + std::to_string(r.instances) + "," + fmt_real(r.pearson) + ",";
    if (r.ols) {
      patterns += fmt_real(r.ols->slope) + "," + fmt_real(r.ols->intercept) + "," +
                  fmt_real(r.witt_offset) + ",";
    } else {
      patterns += ",,,";
    }
    patterns += std::to_string(r.p95.value()) + ",";
    patterns += r.ols ? std::to_string(r.under_ols) + "," + std::to_string(r.under_witt) : ",";
    patterns += "," + std::to_string(r.under_p95) + "\n";
  }
  files["patterns.csv"] = std::move(patterns);

  auto cdf_csv = [](const std::vector<metrics::CdfPoint>& pts) {
    std::string s = "gib_per_core,cumulative_fraction\n";
    for (const auto& p : pts) s += fmt_real(p.gib_per_core) + "," + fmt_real(p.cumulative_fraction) + "\n";
    return s;
  };
  files["mem_per_core_requested.csv"] =
      cdf_csv(metrics::mem_per_core_distribution(trace, metrics::MemKind::Requested));
  files["mem_per_core_used.csv"] =
      cdf_csv(metrics::mem_per_core_distribution(trace, metrics::MemKind::Used));

  if (second) {
    const auto d = metrics::peak_diff_between_runs(trace, *second);
    std::string diffs = "task,index,instance_a,instance_b,abs_diff_bytes\n";
    for (const auto& m : d.matched) {
      diffs += m.abstract + "," + std::to_string(m.index) + "," + m.instance_a + "," +
               m.instance_b + "," + std::to_string(m.diff.value()) + "\n";
    }
    files["peak_diff.csv"] = std::move(diffs);
    std::string cdf = "abs_diff_bytes,cumulative_fraction\n";
    for (const auto& [b, f] : d.cdf) cdf += std::to_string(b.value()) + "," + fmt_real(f) + "\n";
    files["peak_diff_cdf.csv"] = std::move(cdf);
    std::string unmatched = "trace,instance_id\n";
    for (const auto& id : d.unmatched_a) unmatched += "a," + id + "\n";
    for (const auto& id : d.unmatched_b) unmatched += "b," + id + "\n";
    files["peak_diff_unmatched.csv"] = std::move(unmatched);
  }
  return files;
}

std::string cmd_generate(const traceio::SyntheticSpec& spec) {
  return traceio::write_trace(traceio::generate_synthetic(spec));
}

}  // namespace memsizer::cli
