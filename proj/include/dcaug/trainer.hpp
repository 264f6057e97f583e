// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dcaug/augment.hpp"
#include "dcaug/model.hpp"
#include "dcaug/selection.hpp"

namespace dcaug {

/// A trained classifier with its EMA shadow and optimizer moments.
struct Learner {
  Classifier params;
  Ema ema;
  Adam opt;

  Learner() = default;
  Learner(const ClassifierShape& shape, double lr, double weight_decay, double beta, std::uint64_t seed)
      : params(init_classifier<float>(shape, seed)), ema(params, beta), opt(shape, lr, weight_decay) {}
};

struct TrainerConfig {
  RewardConfig reward;
  SpaceVariant space = SpaceVariant::Wider;
  WeakConfig weak;
  int hidden = 64;
  double lr = 1e-3;
  double weight_decay = 0.0;
  double ema_beta = 0.999;
};

/// The label classifier f (with its EMA) and, for variants that need it, the
/// domain classifier h over the training domains.
struct TrainerState {
  Learner label;
  std::optional<Learner> domain;

  TrainerState(const TrainerConfig& cfg, int inputs, int classes, int train_domains, std::uint64_t seed);

  RewardModels models() const;
};

struct MinibatchItem {
  const Image* image = nullptr;
  int label = 0;
  std::optional<int> domain;  // index among training domains
  int global_domain = -1;     // dataset domain id, recorded in the log
};

struct StepResult {
  std::vector<SelectionRecord> records;
  double label_loss = 0;  // mean loss of f on the selected inputs, before the update
};

/// One minibatch of the training procedure.
///
/// Phase 1 reads a frozen snapshot: per sample, the weak candidate, the wider
/// candidate built on top of it, and the selection. Phase 2 takes one Adam step
/// of f on the selected inputs, then updates the EMA of f; for variants with a
/// domain classifier it then steps h on (selected, domain) and updates its EMA.
/// The per-sample stream is derived from (run_seed, step, index).
StepResult train_minibatch(std::span<const MinibatchItem> batch, TrainerState& state, const TrainerConfig& cfg,
                           std::uint64_t run_seed, std::int64_t step);

/// The EMA label classifier for LabelRewardEmaFinal, the live one otherwise.
const Classifier& final_classifier(const TrainerState& state, const RewardConfig& cfg);

}  // namespace dcaug
