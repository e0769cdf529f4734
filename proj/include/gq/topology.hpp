#pragma once

// Kernel-shape topologies loaded from JSON, used for footprint accounting
// and for synthetic-weight analysis runs.
//
// {
//   "name": "...",
//   "modules": [
//     {"name": "blocks", "repeat": 14,
//      "kernels": [{"name": "ffn_in", "shape": [256, 1024], "kind": "dense",
//                   "omit_in_last": false}, ...]}
//   ]
// }
//
// Repeated modules expand to "<module>/<NN>/<kernel>", others to
// "<module>/<kernel>". "omit_in_last" drops a kernel from the final repeat.

#include <filesystem>
#include <string>
#include <vector>

#include "gq/analyzer.hpp"
#include "gq/packer.hpp"

namespace gq {

struct TopologyKernel {
  KernelShape shape;
  KernelKind kind = KernelKind::other;
};

struct Topology {
  std::string name;
  std::vector<TopologyKernel> kernels;

  std::vector<KernelShape> shapes() const;
};

Topology parse_topology(const std::string& json_text);
Topology load_topology(const std::filesystem::path& path);

}  // namespace gq
