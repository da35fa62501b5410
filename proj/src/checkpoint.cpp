// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0

#include "checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace hydra {

void save_params(const std::string& path,
                 const std::vector<rnn::NamedParam>& params) {
  std::vector<const rnn::NamedParam*> sorted;
  sorted.reserve(params.size());
  for (const auto& p : params) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->name < b->name; });

  std::ofstream out(path);
  if (!out) throw IoError("cannot write parameter file " + path);
  out << "hydra-params v1\n" << sorted.size() << "\n";
  for (const auto* p : sorted) {
    out << p->name << " " << p->tensor.rank();
    for (auto d : p->tensor.shape()) out << " " << d;
    out << "\n";
    const auto& v = p->tensor.values();
    for (size_t i = 0; i < v.size(); ++i) {
      if (i) out << " ";
      out << format_double(v[i]);
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing parameter file " + path);
}

ParamMap load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read parameter file " + path);
  std::string header;
  std::getline(in, header);
  if (header != "hydra-params v1") {
    throw DataError("bad parameter file header in " + path + ": '" + header +
                    "'");
  }
  size_t count = 0;
  in >> count;
  ParamMap map;
  for (size_t i = 0; i < count; ++i) {
    std::string name;
    std::int64_t rank = 0;
    if (!(in >> name >> rank) || rank < 0 || rank > 4) {
      throw DataError("corrupt parameter entry " + std::to_string(i) + " in " +
                      path);
    }
    ParamBlob blob;
    std::int64_t numel = 1;
    for (std::int64_t d = 0; d < rank; ++d) {
      std::int64_t dim = 0;
      if (!(in >> dim) || dim < 0) {
        throw DataError("corrupt shape for parameter " + name + " in " + path);
      }
      blob.shape.push_back(dim);
      numel *= dim;
    }
    blob.values.resize(static_cast<size_t>(numel));
    for (auto& v : blob.values) {
      if (!(in >> v)) {
        throw DataError("corrupt values for parameter " + name + " in " + path);
      }
    }
    map.emplace(std::move(name), std::move(blob));
  }
  return map;
}

void bind_params(const ParamMap& loaded,
                 const std::vector<rnn::NamedParam>& params) {
  if (loaded.size() != params.size()) {
    throw DataError("parameter count mismatch: file has " +
                    std::to_string(loaded.size()) + ", model expects " +
                    std::to_string(params.size()));
  }
  for (const auto& p : params) {
    auto it = loaded.find(p.name);
    if (it == loaded.end()) {
      throw DataError("parameter '" + p.name + "' missing from checkpoint");
    }
    if (it->second.shape != p.tensor.shape()) {
      throw DimensionError("parameter '" + p.name + "' has shape " +
                           ad::shape_str(it->second.shape) +
                           " in checkpoint but " +
                           ad::shape_str(p.tensor.shape()) + " in model");
    }
    p.tensor.node()->value = it->second.values;
  }
}

ParamMap snapshot_params(const std::vector<rnn::NamedParam>& params) {
  ParamMap map;
  for (const auto& p : params) {
    map.emplace(p.name, ParamBlob{p.tensor.shape(), p.tensor.values()});
  }
  return map;
}

void restore_params(const ParamMap& snapshot,
                    const std::vector<rnn::NamedParam>& params) {
  bind_params(snapshot, params);
}

}  // namespace hydra
