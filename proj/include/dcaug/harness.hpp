// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dcaug/config.hpp"
#include "dcaug/dataset.hpp"
#include "dcaug/metrics.hpp"
#include "dcaug/trainer.hpp"

namespace dcaug {

/// Worker count from DCAUG_WORKERS, default 1.
int worker_count();

/// Generates the configured synthetic dataset or loads it from dataset.path.
DomainDataset load_or_generate(const DatasetConfig& cfg);

TrainerConfig trainer_config(const ExperimentConfig& cfg, MethodVariant method, double lambda);

struct TrainHooks {
  /// Sees every minibatch before it is trained on.
  std::function<void(std::span<const MinibatchItem>, std::int64_t step)> on_batch;
};

struct TrainedRun {
  Classifier selected;  // best validation checkpoint of the deployed classifier
  double val_accuracy = 0;
  std::int64_t selected_step = 0;  // steps completed at the selected checkpoint
  // The same selection applied to the EMA of the label classifier, which every
  // method maintains. For LabelReward this is what LabelRewardEmaFinal would
  // deploy from the identical trajectory.
  Classifier ema_selected;
  double ema_val_accuracy = 0;
  std::int64_t ema_selected_step = 0;
  std::vector<SelectionRecord> records;
  std::vector<double> losses;  // mean label loss per step
  std::int64_t steps_per_epoch = 1;
  std::optional<TrainerState> state;  // final trainer state
};

/// Trains one method on the source part of a split. Minibatches hold the
/// configured quota of each training domain, drawn uniformly with replacement.
TrainedRun train_run(const HoldoutSplit& split, const ExperimentConfig& cfg, MethodVariant method, double lambda,
                     int num_classes, std::uint64_t run_seed, const TrainHooks& hooks = {});

/// Mean loss over the trailing `window` fraction of a loss history.
double trailing_mean(std::span<const double> losses, double window = 0.2);

/// The augmentation a trained run would apply to `img`: weak for ERM, weak
/// then wider for TA, the reward-selected candidate otherwise.
Image method_augment(const Image& img, const Sample& meta, int domain_index, const TrainerState& state,
                     const TrainerConfig& tcfg, Rng& rng);

struct MethodResult {
  MethodVariant method;
  double lambda = 0;
  LooTable table;
  std::vector<double> rejection;  // per cell, wider-kept fraction over the run
  std::vector<double> diversity;  // per cell, trailing mean training loss
  std::vector<double> affinity;   // per cell, when measured
};

struct RunResult {
  std::vector<std::string> domain_names;
  std::vector<MethodResult> methods;
};

/// Leave-one-out over the configured holdouts x seeds for every method, with
/// all outputs written under cfg.out.
RunResult run_experiment(const ExperimentConfig& cfg, const DomainDataset& ds, int workers = 1);
RunResult run_experiment(const ExperimentConfig& cfg, int workers = 1);

struct SweepRow {
  MethodVariant method;
  double lambda = 0;
  int holdout = 0;
  double val_accuracy = 0;  // mean over seeds
  double accuracy = 0;      // mean over seeds
};

struct SweepResult {
  std::vector<SweepRow> grid;
  std::vector<SweepRow> selected;  // best validation lambda per (method, held-out domain)
};

/// One run per lambda under cfg.out/lambda_<x>; picks the lambda with the best
/// source-validation accuracy for each held-out domain (ties: smaller lambda).
SweepResult sweep_lambda(const ExperimentConfig& cfg, std::span<const double> lambdas, int workers = 1);

/// Figure data from a run or sweep directory. Returns the files written.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& dir);

struct BenchRow {
  MethodVariant method;
  double median_ms = 0;
  double ratio = 0;  // relative to ERM
};

std::vector<BenchRow> bench_step(const ExperimentConfig& cfg, const DomainDataset& ds);

/// Trains the first configured method on the first holdout, then writes a
/// PNG grid (source | weak | wider, wider framed green when kept, red when
/// rejected) and a CSV of the decisions.
void dump_grid(const ExperimentConfig& cfg, const DomainDataset& ds, const std::filesystem::path& png, int rows = 12);

}  // namespace dcaug
