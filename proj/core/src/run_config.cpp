// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "demon/harness.hpp"

namespace demon {
namespace {

using nlohmann::json;

std::size_t validation_rows(std::size_t n) {
  return static_cast<std::size_t>(std::llround(0.2 * static_cast<double>(n)));
}

bool is_demon(OptimizerKind kind) {
  return kind == OptimizerKind::DemonSGDM || kind == OptimizerKind::DemonAdam;
}

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw std::invalid_argument(fmt::format("config field '{}': {}", field, why));
}

template <typename T>
T read_field(const json& value, const std::string& field) {
  try {
    return value.get<T>();
  } catch (const json::exception& e) {
    bad_field(field, e.what());
  }
}

}  // namespace

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::SGD:
      return "SGD";
    case OptimizerKind::SGDM:
      return "SGDM";
    case OptimizerKind::Adam:
      return "Adam";
    case OptimizerKind::DemonSGDM:
      return "DemonSGDM";
    case OptimizerKind::DemonAdam:
      return "DemonAdam";
  }
  return "unknown";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  for (auto kind : {OptimizerKind::SGD, OptimizerKind::SGDM, OptimizerKind::Adam,
                    OptimizerKind::DemonSGDM, OptimizerKind::DemonAdam}) {
    const std::string_view canonical = to_string(kind);
    if (std::equal(canonical.begin(), canonical.end(), name.begin(), name.end(),
                   [](char a, char b) { return std::tolower(static_cast<unsigned char>(a)) ==
                                               std::tolower(static_cast<unsigned char>(b)); })) {
      return kind;
    }
  }
  throw std::invalid_argument(fmt::format("unknown optimizer '{}'", name));
}

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::Quadratic:
      return "quadratic";
    case ProblemKind::Rosenbrock:
      return "rosenbrock";
    case ProblemKind::Logistic:
      return "logistic";
    case ProblemKind::Mlp:
      return "mlp";
    case ProblemKind::ScaleInvariant:
      return "scale_invariant";
  }
  return "unknown";
}

ProblemKind parse_problem_kind(std::string_view name) {
  for (auto kind : {ProblemKind::Quadratic, ProblemKind::Rosenbrock, ProblemKind::Logistic,
                    ProblemKind::Mlp, ProblemKind::ScaleInvariant}) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument(fmt::format("unknown problem generator '{}'", name));
}

ProblemInstance build_problem(const ProblemSpec& spec, std::uint64_t seed) {
  switch (spec.generator) {
    case ProblemKind::Quadratic:
      return {make_quadratic(spec.L, spec.mu, spec.dim), std::nullopt};
    case ProblemKind::Rosenbrock:
      return {make_rosenbrock(spec.dim), std::nullopt};
    case ProblemKind::ScaleInvariant:
      return {make_scale_invariant(spec.dim), std::nullopt};
    case ProblemKind::Logistic:
    case ProblemKind::Mlp: {
      const Dataset data = make_synthetic_data(spec.data, spec.n, spec.d, spec.noise, spec.data_seed);
      const Split split = train_validation_split(data.n, spec.data_seed);
      const Dataset train = data.subset(split.train);
      const Dataset validation = data.subset(split.validation);
      if (spec.generator == ProblemKind::Logistic) {
        return {make_logistic(train, spec.l2), make_logistic(validation, spec.l2)};
      }
      std::vector<std::size_t> layers{spec.d};
      layers.insert(layers.end(), spec.hidden.begin(), spec.hidden.end());
      layers.push_back(data.num_classes());
      return {make_mlp(layers, spec.activation, train, seed),
              make_mlp(layers, spec.activation, validation, seed)};
    }
  }
  throw std::logic_error("build_problem: unhandled generator");
}

RunConfig resolve_config(RunConfig config) {
  try {
    config.lr_schedule.validate();
  } catch (const std::invalid_argument& e) {
    bad_field("lr_schedule", e.what());
  }
  if (config.lr_schedule.target != ScheduleTarget::LearningRate) {
    bad_field("lr_schedule.target", "must be LearningRate");
  }
  if (!(config.lr_schedule.init_value > 0.0)) bad_field("lr_schedule.init_value", "must be > 0");

  switch (config.optimizer) {
    case OptimizerKind::SGD:
      if (config.momentum_schedule) bad_field("momentum_schedule", "SGD takes no momentum");
      if (config.beta_init) bad_field("beta_init", "SGD takes no momentum");
      break;
    case OptimizerKind::SGDM:
    case OptimizerKind::Adam:
      if (config.beta_init) {
        bad_field("beta_init", fmt::format("{} takes its momentum from momentum_schedule",
                                           to_string(config.optimizer)));
      }
      if (!config.momentum_schedule) {
        config.momentum_schedule = constant_schedule(0.9, ScheduleTarget::Momentum);
      }
      try {
        config.momentum_schedule->validate();
      } catch (const std::invalid_argument& e) {
        bad_field("momentum_schedule", e.what());
      }
      if (config.momentum_schedule->target != ScheduleTarget::Momentum) {
        bad_field("momentum_schedule.target", "must be Momentum");
      }
      if (config.momentum_schedule->init_value >= 1.0) {
        bad_field("momentum_schedule.init_value", "must be < 1");
      }
      break;
    case OptimizerKind::DemonSGDM:
    case OptimizerKind::DemonAdam:
      if (config.momentum_schedule) {
        bad_field("momentum_schedule", fmt::format("{} decays beta_init internally",
                                                   to_string(config.optimizer)));
      }
      if (!config.beta_init) config.beta_init = 0.9;
      if (!(*config.beta_init >= 0.0 && *config.beta_init < 1.0)) {
        bad_field("beta_init", "must lie in [0, 1)");
      }
      break;
  }
  if (!(config.beta2 >= 0.0 && config.beta2 < 1.0)) bad_field("beta2", "must lie in [0, 1)");
  if (!(config.epsilon > 0.0)) bad_field("epsilon", "must be > 0");
  if (!(config.weight_decay >= 0.0)) bad_field("weight_decay", "must be >= 0");
  if (!(config.clip_norm >= 0.0)) bad_field("clip_norm", "must be >= 0");

  const ProblemSpec& ps = config.problem_spec;
  std::uint64_t per_epoch = 1;
  if (config.batch_size > 0) {
    if (!ps.uses_data()) bad_field("batch_size", "mini-batches need a data-backed problem");
    const std::size_t n_train = ps.n - validation_rows(ps.n);
    per_epoch = (n_train + config.batch_size - 1) / config.batch_size;
  }
  if (config.epochs > 0 && config.T > 0) {
    if (config.T != config.epochs * per_epoch) {
      bad_field("T", fmt::format("{} != epochs ({}) x iterations per epoch ({})", config.T,
                                 config.epochs, per_epoch));
    }
  } else if (config.epochs > 0) {
    config.T = config.epochs * per_epoch;
  } else if (config.T > 0) {
    if (config.T % per_epoch != 0) {
      bad_field("T", fmt::format("{} is not a whole number of epochs of {} iterations", config.T,
                                 per_epoch));
    }
    config.epochs = config.T / per_epoch;
  }
  return config;
}

double config_lr(const RunConfig& config) { return config.lr_schedule.init_value; }

double config_momentum(const RunConfig& config) {
  if (is_demon(config.optimizer)) return config.beta_init.value_or(0.9);
  if (config.optimizer == OptimizerKind::SGD) return 0.0;
  return config.momentum_schedule ? config.momentum_schedule->init_value : 0.9;
}

void to_json(json& j, const ProblemSpec& spec) {
  j = json{
      {"generator", std::string(to_string(spec.generator))},
      {"dim", spec.dim},
      {"L", spec.L},
      {"mu", spec.mu},
      {"data", std::string(to_string(spec.data))},
      {"n", spec.n},
      {"d", spec.d},
      {"noise", spec.noise},
      {"data_seed", spec.data_seed},
      {"hidden", spec.hidden},
      {"activation", std::string(to_string(spec.activation))},
      {"l2", spec.l2},
  };
}

void from_json(const json& j, ProblemSpec& spec) {
  if (!j.is_object()) bad_field("problem_spec", "must be an object");
  ProblemSpec out;
  for (const auto& [key, value] : j.items()) {
    const std::string field = "problem_spec." + key;
    try {
      if (key == "generator") {
        out.generator = parse_problem_kind(read_field<std::string>(value, field));
      } else if (key == "dim") {
        out.dim = read_field<std::size_t>(value, field);
      } else if (key == "L") {
        out.L = read_field<double>(value, field);
      } else if (key == "mu") {
        out.mu = read_field<double>(value, field);
      } else if (key == "data") {
        out.data = parse_data_kind(read_field<std::string>(value, field));
      } else if (key == "n") {
        out.n = read_field<std::size_t>(value, field);
      } else if (key == "d") {
        out.d = read_field<std::size_t>(value, field);
      } else if (key == "noise") {
        out.noise = read_field<double>(value, field);
      } else if (key == "data_seed") {
        out.data_seed = read_field<std::uint64_t>(value, field);
      } else if (key == "hidden") {
        out.hidden = read_field<std::vector<std::size_t>>(value, field);
      } else if (key == "activation") {
        out.activation = parse_activation(read_field<std::string>(value, field));
      } else if (key == "l2") {
        out.l2 = read_field<double>(value, field);
      } else {
        bad_field(field, "unknown key");
      }
    } catch (const std::invalid_argument& e) {
      if (std::string(e.what()).rfind("config field", 0) == 0) throw;
      bad_field(field, e.what());
    }
  }
  spec = std::move(out);
}

void to_json(json& j, const RunConfig& config) {
  j = json{
      {"problem_spec", config.problem_spec},
      {"optimizer", std::string(to_string(config.optimizer))},
      {"lr_schedule", config.lr_schedule},
      {"momentum_schedule", config.momentum_schedule ? json(*config.momentum_schedule) : json()},
      {"beta_init", config.beta_init ? json(*config.beta_init) : json()},
      {"beta2", config.beta2},
      {"epsilon", config.epsilon},
      {"T", config.T},
      {"epochs", config.epochs},
      {"batch_size", config.batch_size},
      {"weight_decay", config.weight_decay},
      {"clip_norm", config.clip_norm},
      {"seed", config.seed},
      {"record_full_vectors", config.record_full_vectors},
  };
}

void from_json(const json& j, RunConfig& config) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  RunConfig out;
  for (const auto& [key, value] : j.items()) {
    auto schedule = [&](const std::string& field) {
      try {
        return value.get<ScheduleSpec>();
      } catch (const json::exception& e) {
        bad_field(field, e.what());
      } catch (const std::invalid_argument& e) {
        bad_field(field, e.what());
      }
    };
    if (key == "problem_spec") {
      from_json(value, out.problem_spec);
    } else if (key == "optimizer") {
      try {
        out.optimizer = parse_optimizer_kind(read_field<std::string>(value, key));
      } catch (const std::invalid_argument& e) {
        bad_field(key, e.what());
      }
    } else if (key == "lr_schedule") {
      out.lr_schedule = schedule(key);
    } else if (key == "momentum_schedule") {
      if (value.is_null()) {
        out.momentum_schedule.reset();
      } else {
        out.momentum_schedule = schedule(key);
      }
    } else if (key == "beta_init") {
      if (value.is_null()) {
        out.beta_init.reset();
      } else {
        out.beta_init = read_field<double>(value, key);
      }
    } else if (key == "beta2") {
      out.beta2 = read_field<double>(value, key);
    } else if (key == "epsilon") {
      out.epsilon = read_field<double>(value, key);
    } else if (key == "T") {
      out.T = read_field<std::uint64_t>(value, key);
    } else if (key == "epochs") {
      out.epochs = read_field<std::uint64_t>(value, key);
    } else if (key == "batch_size") {
      out.batch_size = read_field<std::size_t>(value, key);
    } else if (key == "weight_decay") {
      out.weight_decay = read_field<double>(value, key);
    } else if (key == "clip_norm") {
      out.clip_norm = read_field<double>(value, key);
    } else if (key == "seed") {
      out.seed = read_field<std::uint64_t>(value, key);
    } else if (key == "record_full_vectors") {
      out.record_full_vectors = read_field<bool>(value, key);
    } else {
      bad_field(key, "unknown key");
    }
  }
  config = std::move(out);
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument(fmt::format("override '{}' is not of the form key=value", assignment));
  }
  std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  if (key == "lr") {
    key = "lr_schedule.init_value";
  } else if (key == "momentum") {
    OptimizerKind optimizer = OptimizerKind::SGDM;
    if (config.contains("optimizer") && config["optimizer"].is_string()) {
      optimizer = parse_optimizer_kind(config["optimizer"].get<std::string>());
    }
    if (is_demon(optimizer)) {
      key = "beta_init";
    } else {
      if (!config.contains("momentum_schedule") || config["momentum_schedule"].is_null()) {
        config["momentum_schedule"] = json{{"kind", "Constant"}, {"target", "Momentum"}};
      }
      key = "momentum_schedule.init_value";
    }
  }

  json* node = &config;
  std::stringstream path(key);
  std::string part;
  std::vector<std::string> parts;
  while (std::getline(path, part, '.')) parts.push_back(part);
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (parts[i].empty()) throw std::invalid_argument(fmt::format("override key '{}' is malformed", key));
    json& child = (*node)[parts[i]];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) {
      throw std::invalid_argument(fmt::format("override key '{}': '{}' is not an object", key, parts[i]));
    }
    node = &child;
  }
  if (parts.empty() || parts.back().empty()) {
    throw std::invalid_argument(fmt::format("override key '{}' is malformed", key));
  }
  (*node)[parts.back()] = std::move(value);
}

}  // namespace demon
