#pragma once

// Domain model for workflow DAGs, physical tasks, clusters, and finished-task
// observations.

#include <chrono>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace memsizer {

using Millis = std::chrono::milliseconds;

inline constexpr std::uint64_t kMiB = std::uint64_t{1} << 20;
inline constexpr std::uint64_t kGiB = std::uint64_t{1} << 30;

/// Byte quantity with checked arithmetic. Overflow and negative results throw
/// std::overflow_error instead of wrapping.
template <typename Tag>
class ByteCount {
 public:
  constexpr ByteCount() = default;
  constexpr explicit ByteCount(std::uint64_t v) : value_(v) {}

  static constexpr ByteCount mib(std::uint64_t n) { return ByteCount(checked_mul(n, kMiB)); }
  static constexpr ByteCount gib(std::uint64_t n) { return ByteCount(checked_mul(n, kGiB)); }

  constexpr std::uint64_t value() const { return value_; }
  constexpr double as_double() const { return static_cast<double>(value_); }

  constexpr ByteCount& operator+=(ByteCount o) {
    if (value_ > UINT64_MAX - o.value_) throw std::overflow_error("byte count overflow");
    value_ += o.value_;
    return *this;
  }
  constexpr ByteCount& operator-=(ByteCount o) {
    if (o.value_ > value_) throw std::overflow_error("byte count underflow");
    value_ -= o.value_;
    return *this;
  }
  friend constexpr ByteCount operator+(ByteCount a, ByteCount b) { return a += b; }
  friend constexpr ByteCount operator-(ByteCount a, ByteCount b) { return a -= b; }
  friend constexpr auto operator<=>(ByteCount, ByteCount) = default;

 private:
  static constexpr std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    if (a != 0 && b > UINT64_MAX / a) throw std::overflow_error("byte count overflow");
    return a * b;
  }

  std::uint64_t value_ = 0;
};

struct MemTag;
struct InputTag;
using MemBytes = ByteCount<MemTag>;
using InputBytes = ByteCount<InputTag>;

/// Rounds a real byte amount up to whole bytes; negatives become 0 and values
/// beyond the representable range saturate.
MemBytes ceil_bytes(double bytes);

struct AbstractTaskId {
  std::string name;

  friend auto operator<=>(const AbstractTaskId&, const AbstractTaskId&) = default;
};

struct PhysicalTaskSpec {
  std::string instance_id;
  std::string workflow;
  AbstractTaskId abstract;
  InputBytes input_size;
  MemBytes true_peak;
  Millis runtime{0};
  std::uint32_t cores = 1;
  MemBytes user_mem;
  std::vector<std::string> depends_on;

  friend bool operator==(const PhysicalTaskSpec&, const PhysicalTaskSpec&) = default;
};

struct Observation {
  AbstractTaskId abstract;
  InputBytes input_size;
  MemBytes peak_mem;
  Millis runtime{0};
  bool success = true;
};

class DagError : public std::runtime_error {
 public:
  enum class Kind { CycleDetected, UnknownDependency, DuplicateId };

  DagError(Kind kind, std::string instance_id, std::string missing_id = {});

  Kind kind() const { return kind_; }
  const std::string& instance_id() const { return instance_id_; }
  const std::string& missing_id() const { return missing_id_; }

 private:
  Kind kind_;
  std::string instance_id_;
  std::string missing_id_;
};

class WorkflowDag {
 public:
  using TaskMap = std::map<std::string, PhysicalTaskSpec>;

  WorkflowDag() = default;
  explicit WorkflowDag(std::vector<PhysicalTaskSpec> tasks);

  /// Throws DagError(DuplicateId) if the id is already present.
  void add(PhysicalTaskSpec task);

  const TaskMap& tasks() const { return tasks_; }
  std::size_t size() const { return tasks_.size(); }
  bool empty() const { return tasks_.empty(); }
  const PhysicalTaskSpec& at(const std::string& id) const { return tasks_.at(id); }
  bool contains(const std::string& id) const { return tasks_.contains(id); }

  /// Reverse edges: for each task, the tasks that depend on it (sorted).
  std::map<std::string, std::vector<std::string>> successors() const;

  friend bool operator==(const WorkflowDag&, const WorkflowDag&) = default;

 private:
  TaskMap tasks_;
};

/// Returns nullopt if the DAG is acyclic and every dependency resolves.
/// Unknown dependencies are reported before cycles; both in instance-id order.
std::optional<DagError> validate_dag(const WorkflowDag& dag);

/// Throws the first error validate_dag would report.
void require_valid(const WorkflowDag& dag);

/// Number of tasks on the longest path from each task to an end task
/// (end tasks have rank 0).
std::map<std::string, std::uint32_t> compute_ranks(const WorkflowDag& dag);

std::set<std::string> ready_set(const WorkflowDag& dag, const std::set<std::string>& finished,
                                const std::set<std::string>& running);

struct NodeSpec {
  std::string node_id;
  std::uint32_t cores = 1;
  MemBytes memory;

  friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

using ClusterSpec = std::vector<NodeSpec>;

class InsufficientResources : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Free-resource bookkeeping over a fixed set of nodes.
class ClusterState {
 public:
  struct Node {
    NodeSpec spec;
    std::uint32_t free_cores;
    MemBytes free_memory;

    friend bool operator==(const Node&, const Node&) = default;
  };

  explicit ClusterState(const ClusterSpec& nodes);

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t index_of(const std::string& node_id) const;

  bool fits(std::size_t node, std::uint32_t cores, MemBytes mem) const;
  void allocate(std::size_t node, std::uint32_t cores, MemBytes mem);
  void release(std::size_t node, std::uint32_t cores, MemBytes mem);

  friend bool operator==(const ClusterState&, const ClusterState&) = default;

 private:
  std::vector<Node> nodes_;
};

}  // namespace memsizer
