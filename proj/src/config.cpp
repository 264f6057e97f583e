// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcaug/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace dcaug {

using nlohmann::json;

namespace {

std::string join(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

void reject_unknown(const json& obj, const std::string& prefix, const std::set<std::string>& known) {
  for (const auto& [key, value] : obj.items())
    if (!known.contains(key)) throw ConfigError(join(prefix, key), "unknown field");
}

const json& object_at(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  return j;
}

template <typename T>
T get_number(const json& v, const std::string& path) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(path, "expected true or false");
    return v.get<bool>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
    if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)
      throw ConfigError(path, "expected a non-negative integer");
    return v.get<T>();
  } else {
    if (!v.is_number()) throw ConfigError(path, "expected a number");
    const T x = v.get<T>();
    if (!std::isfinite(x)) throw ConfigError(path, "expected a finite number");
    return x;
  }
}

template <typename T>
void read(const json& obj, const std::string& prefix, const char* key, T& field) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  field = get_number<T>(*it, join(prefix, key));
}

void read_string(const json& obj, const std::string& prefix, const char* key, std::string& field) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_string()) throw ConfigError(join(prefix, key), "expected a string");
  field = it->get<std::string>();
}

template <typename T>
void read_list(const json& obj, const std::string& prefix, const char* key, std::vector<T>& field) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  const std::string path = join(prefix, key);
  if (!it->is_array()) throw ConfigError(path, "expected a list");
  field.clear();
  for (std::size_t i = 0; i < it->size(); ++i) field.push_back(get_number<T>((*it)[i], path + "[" + std::to_string(i) + "]"));
}

template <typename Fn>
auto wrap(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  object_at(j, "");
  reject_unknown(j, "", {"dataset", "methods", "method", "lambda", "lambdas", "space", "weak", "model", "optimizer", "steps",
                         "per_domain_batch", "batch_size", "seed", "seeds", "holdouts", "out", "checkpoint_every",
                         "val_fraction", "log_selections", "save_checkpoints", "affinity_diversity", "bench_steps"});
  if (const auto it = j.find("dataset"); it != j.end()) {
    const json& d = object_at(*it, "dataset");
    reject_unknown(d, "dataset", {"path", "seed", "side", "samples_per_domain"});
    read_string(d, "dataset", "path", c.dataset.path);
    read(d, "dataset", "seed", c.dataset.seed);
    read(d, "dataset", "side", c.dataset.side);
    read(d, "dataset", "samples_per_domain", c.dataset.samples_per_domain);
  }
  if (j.contains("method") && j.contains("methods")) throw ConfigError("method", "give either method or methods, not both");
  if (const auto it = j.find("method"); it != j.end()) {
    if (!it->is_string()) throw ConfigError("method", "expected a string");
    c.methods = {wrap("method", [&] { return parse_method(it->get<std::string>()); })};
  }
  if (const auto it = j.find("methods"); it != j.end()) {
    if (!it->is_array()) throw ConfigError("methods", "expected a list");
    c.methods.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string path = "methods[" + std::to_string(i) + "]";
      if (!(*it)[i].is_string()) throw ConfigError(path, "expected a string");
      c.methods.push_back(wrap(path, [&] { return parse_method((*it)[i].get<std::string>()); }));
    }
  }
  read(j, "", "lambda", c.lambda);
  read_list(j, "", "lambdas", c.lambdas);
  if (const auto it = j.find("space"); it != j.end()) {
    if (!it->is_string()) throw ConfigError("space", "expected a string");
    c.space = wrap("space", [&] { return parse_space_variant(it->get<std::string>()); });
  }
  if (const auto it = j.find("weak"); it != j.end()) {
    const json& w = object_at(*it, "weak");
    reject_unknown(w, "weak", {"flip", "scale", "brightness", "contrast", "saturation"});
    read(w, "weak", "flip", c.weak.flip);
    if (const auto s = w.find("scale"); s != w.end()) {
      if (!s->is_array() || s->size() != 2) throw ConfigError("weak.scale", "expected [lo, hi]");
      c.weak.scale = {get_number<double>((*s)[0], "weak.scale[0]"), get_number<double>((*s)[1], "weak.scale[1]")};
    }
    read(w, "weak", "brightness", c.weak.brightness);
    read(w, "weak", "contrast", c.weak.contrast);
    read(w, "weak", "saturation", c.weak.saturation);
  }
  if (const auto it = j.find("model"); it != j.end()) {
    const json& m = object_at(*it, "model");
    reject_unknown(m, "model", {"hidden"});
    read(m, "model", "hidden", c.hidden);
  }
  if (const auto it = j.find("optimizer"); it != j.end()) {
    const json& o = object_at(*it, "optimizer");
    reject_unknown(o, "optimizer", {"lr", "weight_decay", "ema_beta"});
    read(o, "optimizer", "lr", c.lr);
    read(o, "optimizer", "weight_decay", c.weight_decay);
    read(o, "optimizer", "ema_beta", c.ema_beta);
  }
  read(j, "", "steps", c.steps);
  read(j, "", "per_domain_batch", c.per_domain_batch);
  read(j, "", "batch_size", c.batch_size);
  read(j, "", "seed", c.seed);
  read_list(j, "", "seeds", c.seeds);
  read_list(j, "", "holdouts", c.holdouts);
  read_string(j, "", "out", c.out);
  read(j, "", "checkpoint_every", c.checkpoint_every);
  read(j, "", "val_fraction", c.val_fraction);
  read(j, "", "log_selections", c.log_selections);
  read(j, "", "save_checkpoints", c.save_checkpoints);
  read(j, "", "affinity_diversity", c.affinity_diversity);
  read(j, "", "bench_steps", c.bench_steps);
  c.validate();
  return c;
}

void ExperimentConfig::validate(int num_domains) const {
  if (dataset.path.empty()) {
    if (dataset.side < 8) throw ConfigError("dataset.side", "must be >= 8");
    if (dataset.samples_per_domain < 1) throw ConfigError("dataset.samples_per_domain", "must be >= 1");
  }
  if (methods.empty()) throw ConfigError("methods", "at least one method required");
  wrap("lambda", [&] { RewardConfig{lambda, MethodVariant::LabelReward}.validate(); });
  if (lambdas.empty()) throw ConfigError("lambdas", "at least one value required");
  for (std::size_t i = 0; i < lambdas.size(); ++i)
    wrap("lambdas[" + std::to_string(i) + "]", [&] { RewardConfig{lambdas[i], MethodVariant::LabelReward}.validate(); });
  wrap("weak", [&] { weak.validate(); });
  if (hidden < 1) throw ConfigError("model.hidden", "must be >= 1");
  if (!(lr > 0)) throw ConfigError("optimizer.lr", "must be > 0");
  if (weight_decay < 0) throw ConfigError("optimizer.weight_decay", "must be >= 0");
  if (!(ema_beta >= 0 && ema_beta < 1)) throw ConfigError("optimizer.ema_beta", "must be in [0, 1)");
  if (steps < 1) throw ConfigError("steps", "must be > 0");
  if (per_domain_batch < 1) throw ConfigError("per_domain_batch", "must be >= 1");
  if (batch_size < 0) throw ConfigError("batch_size", "must be >= 0 (0 derives it from per_domain_batch)");
  if (seeds.empty()) throw ConfigError("seeds", "at least one seed required");
  if (out.empty()) throw ConfigError("out", "must not be empty");
  if (!(checkpoint_every > 0 && checkpoint_every <= 1)) throw ConfigError("checkpoint_every", "must be in (0, 1]");
  if (!(val_fraction > 0 && val_fraction < 1)) throw ConfigError("val_fraction", "must be in (0, 1)");
  if (bench_steps < 1) throw ConfigError("bench_steps", "must be >= 1");
  if (num_domains > 0) {
    if (num_domains < 2) throw ConfigError("dataset", "leave-one-out needs at least 2 domains");
    for (std::size_t i = 0; i < holdouts.size(); ++i)
      if (holdouts[i] < 0 || holdouts[i] >= num_domains)
        throw ConfigError("holdouts[" + std::to_string(i) + "]", "domain index out of range");
    for (std::size_t i = 0; i < methods.size(); ++i)
      if (batch_size > 0 && uses_domain_classifier(methods[i]) && batch_size % (num_domains - 1) != 0)
        throw ConfigError("batch_size", "must be divisible by the " + std::to_string(num_domains - 1) +
                                            " training domains for method " + std::string(method_tag(methods[i])));
  }
}

std::vector<int> ExperimentConfig::domain_quota(int train_domains, MethodVariant method) const {
  if (train_domains < 1) throw std::invalid_argument("domain_quota: no training domains");
  if (batch_size == 0) return std::vector<int>(static_cast<std::size_t>(train_domains), per_domain_batch);
  if (uses_domain_classifier(method) && batch_size % train_domains != 0)
    throw ConfigError("batch_size", "must be divisible by the number of training domains");
  if (batch_size < train_domains) throw ConfigError("batch_size", "must cover every training domain");
  std::vector<int> q(static_cast<std::size_t>(train_domains), batch_size / train_domains);
  for (int i = 0; i < batch_size % train_domains; ++i) ++q[static_cast<std::size_t>(i)];
  return q;
}

json to_json(const ExperimentConfig& c) {
  json methods = json::array();
  for (auto m : c.methods) methods.push_back(std::string(method_tag(m)));
  return json{
      {"dataset", {{"path", c.dataset.path}, {"seed", c.dataset.seed}, {"side", c.dataset.side},
                   {"samples_per_domain", c.dataset.samples_per_domain}}},
      {"methods", methods},
      {"lambda", c.lambda},
      {"lambdas", c.lambdas},
      {"space", std::string(variant_name(c.space))},
      {"weak", {{"flip", c.weak.flip}, {"scale", {c.weak.scale.first, c.weak.scale.second}},
                {"brightness", c.weak.brightness}, {"contrast", c.weak.contrast}, {"saturation", c.weak.saturation}}},
      {"model", {{"hidden", c.hidden}}},
      {"optimizer", {{"lr", c.lr}, {"weight_decay", c.weight_decay}, {"ema_beta", c.ema_beta}}},
      {"steps", c.steps},
      {"per_domain_batch", c.per_domain_batch},
      {"batch_size", c.batch_size},
      {"seed", c.seed},
      {"seeds", c.seeds},
      {"holdouts", c.holdouts},
      {"out", c.out},
      {"checkpoint_every", c.checkpoint_every},
      {"val_fraction", c.val_fraction},
      {"log_selections", c.log_selections},
      {"save_checkpoints", c.save_checkpoints},
      {"affinity_diversity", c.affinity_diversity},
      {"bench_steps", c.bench_steps},
  };
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON in ") + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

}  // namespace dcaug
