// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcaug/augment.hpp"
#include "dcaug/selection.hpp"

namespace dcaug {

/// Invalid configuration; the message starts with the offending field path.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& path, const std::string& what) : std::invalid_argument(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

struct DatasetConfig {
  std::string path;  // load from a container file instead of generating
  std::uint64_t seed = 0;
  int side = 32;
  int samples_per_domain = 200;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  std::vector<MethodVariant> methods{MethodVariant::LabelReward};
  double lambda = 0.5;
  std::vector<double> lambdas{0.2, 0.5, 0.8};  // sweep grid
  SpaceVariant space = SpaceVariant::Wider;
  WeakConfig weak;
  int hidden = 64;
  double lr = 1e-3;
  double weight_decay = 0;
  double ema_beta = 0.999;
  int steps = 2000;
  int per_domain_batch = 8;
  int batch_size = 0;  // 0: per_domain_batch x training domains
  std::uint64_t seed = 0;  // root of the rng lineage
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<int> holdouts;  // empty: every domain
  std::string out = "runs/default";
  double checkpoint_every = 0.1;  // fraction of steps between validation checkpoints
  double val_fraction = 0.2;
  bool log_selections = true;
  bool save_checkpoints = true;
  bool affinity_diversity = false;
  int bench_steps = 50;

  /// Checks field ranges; num_domains > 0 also checks holdouts and batch shape.
  void validate(int num_domains = 0) const;
  /// Per-domain counts of one minibatch for `train_domains` source domains.
  std::vector<int> domain_quota(int train_domains, MethodVariant method) const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace dcaug
