#include "enflow/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace enflow {

namespace {

constexpr const char* kMagic = "enflow-checkpoint 1";

[[noreturn]] void fail(const std::string& msg) {
  throw std::runtime_error("checkpoint: " + msg);
}

double parse_double(const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') {
    fail("bad numeric token '" + tok + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void Checkpoint::write(std::ostream& os) const {
  os << kMagic << "\n";
  for (const auto& [k, v] : meta) {
    if (k.find_first_of(" \n") != std::string::npos) {
      fail("meta key '" + k + "' contains whitespace");
    }
    if (v.find('\n') != std::string::npos) {
      fail("meta value for '" + k + "' contains a newline");
    }
    os << "meta " << k << " " << v << "\n";
  }
  for (const auto& [name, t] : tensors) {
    if (name.find_first_of(" \n") != std::string::npos) {
      fail("tensor name '" + name + "' contains whitespace");
    }
    os << "tensor " << name << " " << t.rows() << " " << t.cols() << "\n";
    for (int r = 0; r < t.rows(); ++r) {
      for (int c = 0; c < t.cols(); ++c) {
        os << (c ? " " : "") << format_double(t.at(r, c));
      }
      os << "\n";
    }
  }
  os << "end\n";
}

void Checkpoint::write_file(const std::string& path) const {
  std::ofstream os(path);
  if (!os) fail("cannot open '" + path + "' for writing");
  write(os);
  os.flush();
  if (!os) fail("write to '" + path + "' failed");
}

Checkpoint Checkpoint::read(std::istream& is) {
  Checkpoint ck;
  std::string line;
  int lineno = 1;
  if (!std::getline(is, line) || line != kMagic) {
    fail("missing header line '" + std::string(kMagic) + "'");
  }
  bool ended = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "meta") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      if (key.empty()) fail("line " + std::to_string(lineno) + ": empty meta key");
      ck.meta[key] = value;
    } else if (tag == "tensor") {
      std::string name;
      int rows = -1, cols = -1;
      ls >> name >> rows >> cols;
      if (name.empty() || rows < 0 || cols < 0) {
        fail("line " + std::to_string(lineno) + ": malformed tensor header");
      }
      Tensor t(rows, cols);
      for (int r = 0; r < rows; ++r) {
        if (!std::getline(is, line)) {
          fail("tensor '" + name + "': unexpected end of stream");
        }
        ++lineno;
        std::istringstream vs(line);
        std::string tok;
        for (int c = 0; c < cols; ++c) {
          if (!(vs >> tok)) {
            fail("tensor '" + name + "' line " + std::to_string(lineno) +
                 ": expected " + std::to_string(cols) + " values");
          }
          t.at(r, c) = parse_double(tok);
        }
        if (vs >> tok) {
          fail("tensor '" + name + "' line " + std::to_string(lineno) +
               ": trailing token '" + tok + "'");
        }
      }
      if (ck.tensors.count(name)) fail("duplicate tensor '" + name + "'");
      ck.tensors.emplace(name, std::move(t));
    } else if (tag == "end") {
      ended = true;
      break;
    } else {
      fail("line " + std::to_string(lineno) + ": unknown tag '" + tag + "'");
    }
  }
  if (!ended) fail("missing end marker");
  return ck;
}

Checkpoint Checkpoint::read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail("cannot open '" + path + "'");
  return read(is);
}

std::string Checkpoint::meta_or(const std::string& key,
                                const std::string& fallback) const {
  auto it = meta.find(key);
  return it == meta.end() ? fallback : it->second;
}

const std::string& Checkpoint::meta_required(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) fail("missing meta key '" + key + "'");
  return it->second;
}

Checkpoint checkpoint_from_params(const ParamSet& params) {
  Checkpoint ck;
  for (const auto& [name, v] : params.items) {
    ck.tensors.emplace(name, v.value());
  }
  return ck;
}

void params_from_checkpoint(ParamSet& params, const Checkpoint& ck) {
  if (ck.tensors.size() != params.items.size()) {
    fail("tensor count " + std::to_string(ck.tensors.size()) +
         " does not match parameter count " +
         std::to_string(params.items.size()));
  }
  for (auto& [name, v] : params.items) {
    auto it = ck.tensors.find(name);
    if (it == ck.tensors.end()) fail("missing tensor '" + name + "'");
    if (!it->second.same_shape(v.value())) {
      fail("tensor '" + name + "' has shape " + it->second.shape_str() +
           ", expected " + v.value().shape_str());
    }
    v.set_value(it->second);
  }
}

}  // namespace enflow
