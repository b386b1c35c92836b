#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "enflow/mlp.hpp"
#include "enflow/tensor.hpp"

namespace enflow {

// Named-tensor container with string metadata. Text on disk; values are
// printed with 17 significant digits, which round-trips IEEE doubles exactly
// under a correctly rounded parser.
struct Checkpoint {
  std::map<std::string, Tensor> tensors;
  std::map<std::string, std::string> meta;

  void write(std::ostream& os) const;
  void write_file(const std::string& path) const;
  static Checkpoint read(std::istream& is);
  static Checkpoint read_file(const std::string& path);

  std::string meta_or(const std::string& key, const std::string& fallback) const;
  // Throws naming the key when absent.
  const std::string& meta_required(const std::string& key) const;
};

// Every parameter stored under its registered name.
Checkpoint checkpoint_from_params(const ParamSet& params);
// Loads by name with shape checks; missing or extra tensors are failures.
void params_from_checkpoint(ParamSet& params, const Checkpoint& ck);

// Exact text encoding for one double (17 significant digits).
std::string format_double(double v);

}  // namespace enflow
