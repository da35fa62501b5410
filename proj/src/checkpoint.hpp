// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0
//
// Flat text container mapping fully-qualified parameter names to shape +
// row-major float64 values. Values are written with 17 significant digits
// so a round trip reproduces the exact doubles.
//
// Format:
//   hydra-params v1
//   <n_entries>
//   <name> <rank> <dim0> <dim1> ...
//   <v0> <v1> ... (row-major, one line)
//   ... repeated per entry, entries sorted by name.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "lstm.hpp"

namespace hydra {

struct ParamBlob {
  std::vector<std::int64_t> shape;
  std::vector<double> values;
};

using ParamMap = std::map<std::string, ParamBlob>;

void save_params(const std::string& path,
                 const std::vector<rnn::NamedParam>& params);
ParamMap load_params(const std::string& path);

// Copies loaded values into the given live tensors, matching by name.
// Missing or extra names and shape mismatches are errors.
void bind_params(const ParamMap& loaded,
                 const std::vector<rnn::NamedParam>& params);

// Convenience for tests and training snapshots.
ParamMap snapshot_params(const std::vector<rnn::NamedParam>& params);
void restore_params(const ParamMap& snapshot,
                    const std::vector<rnn::NamedParam>& params);

}  // namespace hydra
