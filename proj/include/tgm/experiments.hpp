#pragma once

#include <string>
#include <vector>

namespace tgm {

// Config document bundled into the binary; text is byte-identical to the
// matching file under configs/.
struct BuiltinExperiment {
  std::string name;
  std::string text;
};

const std::vector<BuiltinExperiment>& builtin_experiments();

// Lookup by name, bare file name, or path; ".cfg" is optional.  Null when
// unknown.
const BuiltinExperiment* find_experiment(const std::string& ref);

}  // namespace tgm
