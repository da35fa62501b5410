// Copyright 2026 The hydra-lstm Authors
// SPDX-License-Identifier: Apache-2.0

#include "architectures.hpp"

#include <algorithm>

namespace hydra::model {

std::string to_string(Architecture arch) {
  switch (arch) {
    case Architecture::kSingleCatchment: return "single_catchment";
    case Architecture::kMultiNoQ: return "multi_catchment_no_q";
    case Architecture::kMultiWithQ: return "multi_catchment_with_q";
    case Architecture::kFlag: return "flag";
    case Architecture::kHydra: return "hydra";
  }
  throw Error("unknown architecture enum value");
}

Architecture architecture_from_string(const std::string& name) {
  if (name == "single_catchment") return Architecture::kSingleCatchment;
  if (name == "multi_catchment_no_q") return Architecture::kMultiNoQ;
  if (name == "multi_catchment_with_q") return Architecture::kMultiWithQ;
  if (name == "flag") return Architecture::kFlag;
  if (name == "hydra") return Architecture::kHydra;
  throw ConfigError(
      "unknown architecture '" + name +
      "' (expected single_catchment, multi_catchment_no_q, "
      "multi_catchment_with_q, flag, or hydra)");
}

HyperParams default_hyperparams(Architecture arch) {
  HyperParams hp;
  switch (arch) {
    case Architecture::kSingleCatchment:
      hp = {128, 1, 0, 0, 1e-3, 0.0};
      break;
    case Architecture::kMultiNoQ:
    case Architecture::kMultiWithQ:
    case Architecture::kFlag:
      hp = {128, 2, 0, 0, 1e-3, 0.2};
      break;
    case Architecture::kHydra:
      hp = {128, 2, 32, 1, 1e-3, 0.0};
      break;
  }
  return hp;
}

void check_variable_contract(Architecture arch,
                             const data::FeatureLayout& layout) {
  const bool has_discharge =
      std::find(layout.extras.begin(), layout.extras.end(),
                data::kDischargeColumn) != layout.extras.end();
  switch (arch) {
    case Architecture::kMultiNoQ:
      if (!layout.extras.empty()) {
        throw ConfigError(
            "multi_catchment_no_q accepts only globally shared variables; "
            "got extra variable '" + layout.extras.front() + "'");
      }
      break;
    case Architecture::kMultiWithQ:
      if (!has_discharge) {
        throw ConfigError(
            "multi_catchment_with_q requires discharge among its inputs");
      }
      break;
    case Architecture::kSingleCatchment:
      if (layout.extras.empty()) {
        throw ConfigError(
            "single_catchment models take the catchment's own extra "
            "variables; none were configured");
      }
      break;
    case Architecture::kFlag:
      if (!layout.with_flags || layout.extras.empty()) {
        throw ConfigError(
            "flag models need at least one optional variable with flag "
            "columns enabled");
      }
      break;
    case Architecture::kHydra:
      // the body sees shared variables only; heads carry their own extras
      break;
  }
  if (arch != Architecture::kFlag && layout.with_flags) {
    throw ConfigError("flag columns are only valid for the flag architecture");
  }
}

std::vector<rnn::NamedParam> BaselineModel::params() const {
  std::vector<rnn::NamedParam> out;
  rnn::collect_stack_params(stack, "stack", out);
  rnn::collect_projection_params(proj, "proj", out);
  return out;
}

BaselineModel init_baseline(Architecture arch, const data::FeatureLayout& layout,
                            const HyperParams& hp, std::mt19937_64& rng) {
  if (arch == Architecture::kHydra) {
    throw ConfigError("hydra models are built with init_hydra");
  }
  check_variable_contract(arch, layout);
  BaselineModel m;
  m.arch = arch;
  m.layout = layout;
  std::vector<std::int64_t> hidden(static_cast<size_t>(hp.num_layers),
                                   hp.hidden_size);
  m.stack = rnn::init_lstm_stack(layout.feature_count(), hidden, hp.dropout, rng);
  m.proj = rnn::init_projection(hp.hidden_size, rng);
  return m;
}

void validate_flag_consistency(const data::FeatureLayout& layout,
                               const ad::Tensor& step_or_window) {
  if (!layout.with_flags) return;
  const auto n_extras = static_cast<std::int64_t>(layout.extras.size());
  const auto values_at = layout.shared_count();
  const auto flags_at = values_at + n_extras;
  const auto cols = step_or_window.dim(1);
  if (cols != layout.feature_count()) {
    throw DimensionError("flag input has " + std::to_string(cols) +
                         " features, layout expects " +
                         std::to_string(layout.feature_count()));
  }
  const auto rows = step_or_window.dim(0);
  const auto& v = step_or_window.values();
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t e = 0; e < n_extras; ++e) {
      const double flag = v[static_cast<size_t>(r * cols + flags_at + e)];
      const double value = v[static_cast<size_t>(r * cols + values_at + e)];
      if (flag != 0.0 && flag != 1.0) {
        throw DataError("flag column for " + layout.extras[static_cast<size_t>(e)] +
                        " holds " + format_double(flag) + ", expected 0 or 1");
      }
      if (flag == 0.0 && value != 0.0) {
        throw DataError("variable " + layout.extras[static_cast<size_t>(e)] +
                        " is flagged missing but holds " + format_double(value) +
                        " instead of the placeholder");
      }
    }
  }
}

ad::Tensor baseline_forward_batch(ad::Tape* tape, const BaselineModel& model,
                                  const std::vector<ad::Tensor>& steps,
                                  std::mt19937_64& rng) {
  if (model.arch == Architecture::kFlag) {
    for (const auto& s : steps) validate_flag_consistency(model.layout, s);
  }
  auto hidden = rnn::run_sequence_batched(tape, model.stack, steps, rng);
  return rnn::linear_head(tape, model.proj, hidden.back());
}

ad::Tensor baseline_forward(ad::Tape* tape, const BaselineModel& model,
                            const ad::Tensor& window, std::mt19937_64& rng) {
  if (window.rank() != 2 || window.dim(0) < 1) {
    throw DimensionError("model input must be a non-empty [T x F] window, got " +
                         ad::shape_str(window.shape()));
  }
  if (window.dim(1) != model.layout.feature_count()) {
    throw DimensionError("window has " + std::to_string(window.dim(1)) +
                         " features but the " + to_string(model.arch) +
                         " variable set has " +
                         std::to_string(model.layout.feature_count()));
  }
  if (model.arch == Architecture::kFlag) {
    validate_flag_consistency(model.layout, window);
  }
  auto hidden = rnn::run_sequence(tape, model.stack, window, rng);
  auto last = ad::slice_rows(tape, hidden, hidden.dim(0) - 1, hidden.dim(0));
  ad::Tensor out = rnn::linear_head(tape, model.proj, last);  // [1 x 3]
  return ad::reshape(tape, out, {3});
}

std::vector<rnn::NamedParam> HydraModel::body_params() const {
  std::vector<rnn::NamedParam> out;
  rnn::collect_stack_params(body, "body", out);
  return out;
}

std::vector<rnn::NamedParam> HydraModel::head_params(const HydraHead& head) const {
  std::vector<rnn::NamedParam> out;
  const std::string prefix = "head." + head.name;
  rnn::collect_stack_params(head.stack, prefix + ".stack", out);
  rnn::collect_projection_params(head.proj, prefix + ".proj", out);
  return out;
}

std::vector<rnn::NamedParam> HydraModel::all_params() const {
  auto out = body_params();
  for (auto& p : head_params(multi_head)) out.push_back(p);
  for (const auto& [id, head] : catchment_heads) {
    for (auto& p : head_params(head)) out.push_back(p);
  }
  return out;
}

void HydraModel::set_training(bool on) {
  body.training_mode = on;
  multi_head.stack.training_mode = on;
  for (auto& [id, head] : catchment_heads) head.stack.training_mode = on;
}

void HydraModel::freeze_body() {
  for (auto& layer : body.layers) {
    layer.W.set_requires_grad(false);
    layer.U.set_requires_grad(false);
    layer.b.set_requires_grad(false);
  }
}

HydraModel init_hydra(const data::FeatureLayout& shared_layout,
                      const HyperParams& hp, std::mt19937_64& rng) {
  if (!shared_layout.extras.empty() || shared_layout.with_flags) {
    throw ConfigError(
        "the hydra body consumes only globally shared variables");
  }
  HydraModel m;
  m.shared_layout = shared_layout;
  m.dropout = hp.dropout;
  std::vector<std::int64_t> body_hidden(static_cast<size_t>(hp.num_layers),
                                        hp.hidden_size);
  m.body = rnn::init_lstm_stack(shared_layout.feature_count(), body_hidden,
                                hp.dropout, rng);
  m.multi_head.name = "multi";
  std::vector<std::int64_t> head_hidden(static_cast<size_t>(hp.head_num_layers),
                                        hp.head_hidden_size);
  m.multi_head.stack =
      rnn::init_lstm_stack(hp.hidden_size, head_hidden, hp.dropout, rng);
  m.multi_head.proj = rnn::init_projection(hp.head_hidden_size, rng);
  return m;
}

HydraHead& add_catchment_head(HydraModel& model, const std::string& catchment_id,
                              const std::vector<std::string>& extra_names,
                              const HyperParams& hp, std::mt19937_64& rng) {
  if (extra_names.empty()) {
    throw ConfigError("a single-catchment head needs at least one extra "
                      "variable; catchment " + catchment_id);
  }
  HydraHead head;
  head.name = catchment_id;
  head.extra_names = extra_names;
  std::sort(head.extra_names.begin(), head.extra_names.end());
  std::vector<std::int64_t> head_hidden(static_cast<size_t>(hp.head_num_layers),
                                        hp.head_hidden_size);
  const auto in_size = model.body.output_size() +
                       static_cast<std::int64_t>(extra_names.size());
  head.stack = rnn::init_lstm_stack(in_size, head_hidden, hp.dropout, rng);
  head.proj = rnn::init_projection(hp.head_hidden_size, rng);
  auto [it, inserted] = model.catchment_heads.emplace(catchment_id, std::move(head));
  if (!inserted) {
    throw ConfigError("catchment " + catchment_id + " already has a head");
  }
  return it->second;
}

std::vector<ad::Tensor> run_body_batch(ad::Tape* tape, const HydraModel& model,
                                       const std::vector<ad::Tensor>& shared_steps,
                                       std::mt19937_64& rng) {
  return rnn::run_sequence_batched(tape, model.body, shared_steps, rng);
}

ad::Tensor hydra_head_on_encoding(ad::Tape* tape, const HydraModel& model,
                                  const HydraHead& head,
                                  const std::vector<ad::Tensor>& encoded_steps,
                                  const std::vector<ad::Tensor>& extra_steps,
                                  std::mt19937_64& rng) {
  if (!head.is_single_catchment() && !extra_steps.empty()) {
    throw ConfigError(
        "the multi-catchment head accepts no extra inputs; got " +
        std::to_string(extra_steps.size()) + " extra steps");
  }
  if (head.is_single_catchment()) {
    if (extra_steps.size() != encoded_steps.size()) {
      throw DimensionError("extra inputs cover " +
                           std::to_string(extra_steps.size()) +
                           " steps, encoding covers " +
                           std::to_string(encoded_steps.size()));
    }
    const auto want = static_cast<std::int64_t>(head.extra_names.size());
    if (!extra_steps.empty() && extra_steps[0].dim(1) != want) {
      throw DimensionError("head '" + head.name + "' expects " +
                           std::to_string(want) + " extra variables, got " +
                           std::to_string(extra_steps[0].dim(1)));
    }
  }

  std::vector<ad::Tensor> inputs = encoded_steps;
  const bool dropping = model.body.training_mode && model.dropout > 0.0;
  if (dropping) {
    // boundary dropout between body and head, one mask per call
    auto mask =
        rnn::sample_dropout_mask(model.body.output_size(), model.dropout, rng);
    for (auto& step : inputs) step = ad::mul(tape, step, mask);
  }
  if (head.is_single_catchment()) {
    for (size_t t = 0; t < inputs.size(); ++t) {
      inputs[t] = ad::concat(tape, {inputs[t], extra_steps[t]}, 1);
    }
  }
  auto hidden = rnn::run_sequence_batched(tape, head.stack, inputs, rng);
  return rnn::linear_head(tape, head.proj, hidden.back());
}

ad::Tensor hydra_forward_batch(ad::Tape* tape, const HydraModel& model,
                               const HydraHead& head,
                               const std::vector<ad::Tensor>& shared_steps,
                               const std::vector<ad::Tensor>& extra_steps,
                               std::mt19937_64& rng) {
  auto encoding = run_body_batch(tape, model, shared_steps, rng);
  return hydra_head_on_encoding(tape, model, head, encoding, extra_steps, rng);
}

ad::Tensor hydra_forward(ad::Tape* tape, const HydraModel& model,
                         const HydraHead& head, const ad::Tensor& shared_window,
                         const std::optional<ad::Tensor>& extra_window,
                         std::mt19937_64& rng) {
  if (shared_window.rank() != 2 || shared_window.dim(0) < 1) {
    throw DimensionError("hydra input must be a non-empty [T x F] window, got " +
                         ad::shape_str(shared_window.shape()));
  }
  if (head.is_single_catchment() != extra_window.has_value()) {
    throw ConfigError(head.is_single_catchment()
                          ? "single-catchment head '" + head.name +
                                "' needs its extra inputs"
                          : "the multi-catchment head accepts no extra inputs");
  }
  const auto t_len = shared_window.dim(0);
  std::vector<ad::Tensor> shared_steps, extra_steps;
  for (std::int64_t t = 0; t < t_len; ++t) {
    shared_steps.push_back(ad::slice_rows(tape, shared_window, t, t + 1));
  }
  if (extra_window) {
    if (extra_window->rank() != 2 || extra_window->dim(0) != t_len) {
      throw DimensionError("extra window " + ad::shape_str(extra_window->shape()) +
                           " does not align with shared window " +
                           ad::shape_str(shared_window.shape()));
    }
    for (std::int64_t t = 0; t < t_len; ++t) {
      extra_steps.push_back(ad::slice_rows(tape, *extra_window, t, t + 1));
    }
  }
  ad::Tensor out =
      hydra_forward_batch(tape, model, head, shared_steps, extra_steps, rng);
  return ad::reshape(tape, out, {3});
}

}  // namespace hydra::model
