#include "memsizer/core.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace memsizer {

MemBytes ceil_bytes(double bytes) {
  if (!(bytes > 0.0)) return MemBytes{0};
  const double up = std::ceil(bytes);
  // 2^64 as a double; anything at or above it saturates.
  if (up >= 18446744073709551616.0) return MemBytes{UINT64_MAX};
  return MemBytes{static_cast<std::uint64_t>(up)};
}

namespace {

std::string describe(DagError::Kind kind, const std::string& id, const std::string& missing) {
  switch (kind) {
    case DagError::Kind::CycleDetected:
      return "cycle detected at task '" + id + "'";
    case DagError::Kind::UnknownDependency:
      return "task '" + id + "' depends on unknown task '" + missing + "'";
    case DagError::Kind::DuplicateId:
      return "duplicate task id '" + id + "'";
  }
  return "dag error";
}

}  // namespace

DagError::DagError(Kind kind, std::string instance_id, std::string missing_id)
    : std::runtime_error(describe(kind, instance_id, missing_id)),
      kind_(kind),
      instance_id_(std::move(instance_id)),
      missing_id_(std::move(missing_id)) {}

WorkflowDag::WorkflowDag(std::vector<PhysicalTaskSpec> tasks) {
  for (auto& t : tasks) add(std::move(t));
}

void WorkflowDag::add(PhysicalTaskSpec task) {
  auto id = task.instance_id;
  auto [it, inserted] = tasks_.emplace(id, std::move(task));
  if (!inserted) throw DagError(DagError::Kind::DuplicateId, id);
}

std::map<std::string, std::vector<std::string>> WorkflowDag::successors() const {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& [id, _] : tasks_) out[id];
  for (const auto& [id, task] : tasks_) {
    for (const auto& dep : task.depends_on) {
      auto it = out.find(dep);
      if (it != out.end()) it->second.push_back(id);
    }
  }
  // tasks_ iterates in id order, so each list is already sorted; a task
  // listing the same dependency twice would duplicate an entry.
  for (auto& [_, succ] : out) succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
  return out;
}

std::optional<DagError> validate_dag(const WorkflowDag& dag) {
  const auto& tasks = dag.tasks();
  for (const auto& [id, task] : tasks) {
    for (const auto& dep : task.depends_on) {
      if (!tasks.contains(dep)) return DagError(DagError::Kind::UnknownDependency, id, dep);
    }
  }

  // Iterative DFS along depends_on edges; a grey target closes a cycle.
  enum class Color { White, Grey, Black };
  std::map<std::string, Color> color;
  for (const auto& [id, _] : tasks) color[id] = Color::White;

  for (const auto& [root, _] : tasks) {
    if (color[root] != Color::White) continue;
    std::vector<std::pair<const std::string*, std::size_t>> stack;
    stack.emplace_back(&root, 0);
    color[root] = Color::Grey;
    while (!stack.empty()) {
      auto& [node, next] = stack.back();
      const auto& deps = tasks.at(*node).depends_on;
      if (next == deps.size()) {
        color[*node] = Color::Black;
        stack.pop_back();
        continue;
      }
      const std::string& dep = deps[next++];
      auto& c = color[dep];
      if (c == Color::Grey) return DagError(DagError::Kind::CycleDetected, dep);
      if (c == Color::White) {
        c = Color::Grey;
        stack.emplace_back(&tasks.find(dep)->first, 0);
      }
    }
  }
  return std::nullopt;
}

void require_valid(const WorkflowDag& dag) {
  if (auto err = validate_dag(dag)) throw *err;
}

std::map<std::string, std::uint32_t> compute_ranks(const WorkflowDag& dag) {
  require_valid(dag);
  const auto succ = dag.successors();

  // Kahn's algorithm from the end tasks backwards.
  std::map<std::string, std::size_t> pending;
  std::deque<std::string> queue;
  std::map<std::string, std::uint32_t> rank;
  for (const auto& [id, s] : succ) {
    pending[id] = s.size();
    rank[id] = 0;
    if (s.empty()) queue.push_back(id);
  }
  while (!queue.empty()) {
    const std::string id = queue.front();
    queue.pop_front();
    const auto& deps = dag.at(id).depends_on;
    // Duplicate dependency entries must only count once, matching successors().
    std::set<std::string> unique_deps(deps.begin(), deps.end());
    for (const auto& dep : unique_deps) {
      rank[dep] = std::max(rank[dep], rank[id] + 1);
      if (--pending[dep] == 0) queue.push_back(dep);
    }
  }
  return rank;
}

std::set<std::string> ready_set(const WorkflowDag& dag, const std::set<std::string>& finished,
                                const std::set<std::string>& running) {
  std::set<std::string> out;
  for (const auto& [id, task] : dag.tasks()) {
    if (finished.contains(id) || running.contains(id)) continue;
    const bool ready = std::all_of(task.depends_on.begin(), task.depends_on.end(),
                                   [&](const std::string& d) { return finished.contains(d); });
    if (ready) out.insert(id);
  }
  return out;
}

ClusterState::ClusterState(const ClusterSpec& nodes) {
  nodes_.reserve(nodes.size());
  for (const auto& n : nodes) nodes_.push_back(Node{n, n.cores, n.memory});
}

std::size_t ClusterState::index_of(const std::string& node_id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].spec.node_id == node_id) return i;
  }
  throw std::out_of_range("unknown node '" + node_id + "'");
}

bool ClusterState::fits(std::size_t node, std::uint32_t cores, MemBytes mem) const {
  const auto& n = nodes_.at(node);
  return n.free_cores >= cores && n.free_memory >= mem;
}

void ClusterState::allocate(std::size_t node, std::uint32_t cores, MemBytes mem) {
  if (!fits(node, cores, mem)) {
    throw InsufficientResources("node '" + nodes_.at(node).spec.node_id + "' cannot fit " +
                                std::to_string(cores) + " cores / " +
                                std::to_string(mem.value()) + " bytes");
  }
  auto& n = nodes_[node];
  n.free_cores -= cores;
  n.free_memory -= mem;
}

void ClusterState::release(std::size_t node, std::uint32_t cores, MemBytes mem) {
  auto& n = nodes_.at(node);
  if (n.free_cores + cores > n.spec.cores || n.free_memory + mem > n.spec.memory) {
    throw InsufficientResources("release on node '" + n.spec.node_id +
                                "' exceeds its capacity");
  }
  n.free_cores += cores;
  n.free_memory += mem;
}

}  // namespace memsizer
