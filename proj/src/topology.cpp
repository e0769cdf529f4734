#include "gq/topology.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gq/error.hpp"

namespace gq {

std::vector<KernelShape> Topology::shapes() const {
  std::vector<KernelShape> out;
  out.reserve(kernels.size());
  for (const auto& k : kernels) out.push_back(k.shape);
  return out;
}

Topology parse_topology(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::FormatError, std::string("topology is not valid JSON: ") + e.what());
  }
  Topology topo;
  try {
    topo.name = j.value("name", "");
    for (const auto& module : j.at("modules")) {
      const auto module_name = module.at("name").get<std::string>();
      const int repeat = module.value("repeat", 1);
      if (repeat < 1) throw Error(ErrorCode::InvalidConfig, "repeat must be >= 1");
      for (int r = 0; r < repeat; ++r) {
        for (const auto& k : module.at("kernels")) {
          if (r == repeat - 1 && repeat > 1 && k.value("omit_in_last", false)) continue;
          TopologyKernel tk;
          std::string prefix = module_name + "/";
          if (repeat > 1) {
            char idx[16];
            std::snprintf(idx, sizeof idx, "%02d/", r);
            prefix += idx;
          }
          tk.shape.name = prefix + k.at("name").get<std::string>();
          tk.shape.dims = k.at("shape").get<std::vector<std::uint64_t>>();
          tk.shape.group = module_name;
          tk.kind = kernel_kind_from_string(k.value("kind", "other"));
          for (auto d : tk.shape.dims) {
            if (d == 0) throw Error(ErrorCode::ShapeError, "zero dimension in " + tk.shape.name);
          }
          topo.kernels.push_back(std::move(tk));
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::FormatError, std::string("malformed topology: ") + e.what());
  }
  return topo;
}

Topology load_topology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_topology(ss.str());
}

}  // namespace gq
