#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "memsizer/core.hpp"

namespace testsupport {

using memsizer::InputBytes;
using memsizer::MemBytes;
using memsizer::Millis;
using memsizer::PhysicalTaskSpec;
using memsizer::WorkflowDag;

inline PhysicalTaskSpec task(std::string id, std::string abstract,
                             std::vector<std::string> deps = {}) {
  PhysicalTaskSpec t;
  t.instance_id = std::move(id);
  t.workflow = "wf";
  t.abstract = {std::move(abstract)};
  t.input_size = InputBytes::gib(1);
  t.true_peak = MemBytes::gib(1);
  t.runtime = Millis(1000);
  t.cores = 1;
  t.user_mem = MemBytes::gib(4);
  t.depends_on = std::move(deps);
  return t;
}

// a -> {b, c} -> d, plus e after d.
inline WorkflowDag diamond() {
  WorkflowDag dag;
  dag.add(task("a", "A"));
  dag.add(task("b", "B", {"a"}));
  dag.add(task("c", "C", {"a"}));
  dag.add(task("d", "D", {"b", "c"}));
  dag.add(task("e", "E", {"d"}));
  return dag;
}

// Physical graph of the five-step example workflow: A fans out to B and D,
// B fans out to two C instances, and E joins C and D.
inline WorkflowDag example_workflow() {
  WorkflowDag dag;
  dag.add(task("a1", "A"));
  dag.add(task("b1", "B", {"a1"}));
  dag.add(task("c1", "C", {"b1"}));
  dag.add(task("c2", "C", {"b1"}));
  dag.add(task("d1", "D", {"a1"}));
  dag.add(task("e1", "E", {"c1", "c2", "d1"}));
  return dag;
}

}  // namespace testsupport
