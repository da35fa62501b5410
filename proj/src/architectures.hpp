// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0
//
// The five architectures under comparison: per-catchment LSTMs, the two
// multi-catchment LSTMs (with and without discharge as an input), the
// flag-augmented LSTM, and the hydra body/head composition. Each is an
// LSTM stack (or two) plus a linear projection onto the three quantile
// outputs, in normalized target space.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lstm.hpp"
#include "sampling.hpp"

namespace hydra::model {

enum class Architecture {
  kSingleCatchment,
  kMultiNoQ,
  kMultiWithQ,
  kFlag,
  kHydra,
};

std::string to_string(Architecture arch);
Architecture architecture_from_string(const std::string& name);

// Hyperparameter grid point. Head fields apply to the hydra
// architecture only.
struct HyperParams {
  std::int64_t hidden_size = 128;
  std::int64_t num_layers = 2;
  std::int64_t head_hidden_size = 32;
  std::int64_t head_num_layers = 1;
  double learning_rate = 1e-3;
  double dropout = 0.2;
};

// Grid-winning defaults per architecture.
HyperParams default_hyperparams(Architecture arch);

// Every architecture declares which feature groups it accepts; inputs
// outside the declared set are configuration errors.
void check_variable_contract(Architecture arch,
                             const data::FeatureLayout& layout);

// ---------------------------------------------------------------------------
// Single-stack models (all four baselines).

struct BaselineModel {
  Architecture arch = Architecture::kMultiNoQ;
  data::FeatureLayout layout;
  rnn::LstmStack stack;
  rnn::Projection proj;

  std::vector<rnn::NamedParam> params() const;
  void set_training(bool on) { stack.training_mode = on; }
};

BaselineModel init_baseline(Architecture arch, const data::FeatureLayout& layout,
                            const HyperParams& hp, std::mt19937_64& rng);

// Batched forward over time-major steps (each [B x F]) -> [B x 3].
ad::Tensor baseline_forward_batch(ad::Tape* tape, const BaselineModel& model,
                                  const std::vector<ad::Tensor>& steps,
                                  std::mt19937_64& rng);
// Single window [T x F] -> [3].
ad::Tensor baseline_forward(ad::Tape* tape, const BaselineModel& model,
                            const ad::Tensor& window, std::mt19937_64& rng);

// Flag layouts must keep value and flag columns consistent: wherever a
// flag is 0 its paired value must equal the placeholder (0).
void validate_flag_consistency(const data::FeatureLayout& layout,
                               const ad::Tensor& step_or_window);

// ---------------------------------------------------------------------------
// Hydra: shared body over the globally available features, plus one
// multi-catchment head and any number of per-catchment heads.

struct HydraHead {
  std::string name;                      // "multi" or the catchment id
  std::vector<std::string> extra_names;  // empty for the multi head
  rnn::LstmStack stack;
  rnn::Projection proj;

  bool is_single_catchment() const { return !extra_names.empty(); }
};

struct HydraModel {
  data::FeatureLayout shared_layout;  // drivers + statics only
  rnn::LstmStack body;
  double dropout = 0.0;  // also applied on the body-to-head boundary
  HydraHead multi_head;
  std::map<std::string, HydraHead> catchment_heads;

  std::vector<rnn::NamedParam> body_params() const;
  std::vector<rnn::NamedParam> head_params(const HydraHead& head) const;
  std::vector<rnn::NamedParam> all_params() const;
  void set_training(bool on);
  void freeze_body();
};

HydraModel init_hydra(const data::FeatureLayout& shared_layout,
                      const HyperParams& hp, std::mt19937_64& rng);

// Adds a per-catchment head consuming the body encoding concatenated
// with the given extra variables.
HydraHead& add_catchment_head(HydraModel& model, const std::string& catchment_id,
                              const std::vector<std::string>& extra_names,
                              const HyperParams& hp, std::mt19937_64& rng);

// Runs body then head. extra_steps must be empty for the multi head and
// feature-aligned with the head's extras otherwise. The body encoding
// sequence is shared work; callers may precompute it (see
// run_body_batch) and pass it through encoded_steps.
ad::Tensor hydra_forward_batch(ad::Tape* tape, const HydraModel& model,
                               const HydraHead& head,
                               const std::vector<ad::Tensor>& shared_steps,
                               const std::vector<ad::Tensor>& extra_steps,
                               std::mt19937_64& rng);

// Body encoding only (no head): time-major [B x H_body] per step.
std::vector<ad::Tensor> run_body_batch(ad::Tape* tape, const HydraModel& model,
                                       const std::vector<ad::Tensor>& shared_steps,
                                       std::mt19937_64& rng);

// Head on a precomputed encoding.
ad::Tensor hydra_head_on_encoding(ad::Tape* tape, const HydraModel& model,
                                  const HydraHead& head,
                                  const std::vector<ad::Tensor>& encoded_steps,
                                  const std::vector<ad::Tensor>& extra_steps,
                                  std::mt19937_64& rng);

// Single window: shared [T x F_shared], extra [T x F_extra] (empty
// tensor for the multi head) -> [3].
ad::Tensor hydra_forward(ad::Tape* tape, const HydraModel& model,
                         const HydraHead& head, const ad::Tensor& shared_window,
                         const std::optional<ad::Tensor>& extra_window,
                         std::mt19937_64& rng);

}  // namespace hydra::model
