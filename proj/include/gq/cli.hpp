#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gq::cli {

/// Subcommands: quantize | pack | unpack | analyze | footprint | train-demo |
/// ablate. Exit codes: 0 success, 1 runtime/file error, 2 usage error. Errors
/// are printed to `err` as one JSON line {"code": ..., "message": ...}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace gq::cli
