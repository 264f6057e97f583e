// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dcaug/augment.hpp"
#include "dcaug/dataset.hpp"
#include "dcaug/model.hpp"
#include "dcaug/selection.hpp"

namespace dcaug {

using SampleRefs = std::vector<const Sample*>;

SampleRefs refs(const std::vector<Sample>& samples);

/// Predicted class per sample.
std::vector<int> predict(const Classifier& model, std::span<const Sample* const> samples);
double accuracy(const Classifier& model, std::span<const Sample* const> samples);

/// A stochastic augmentation applied to one image.
using Policy = std::function<Image(const Image&, Rng&)>;

Policy identity_policy();
/// One op drawn uniformly from the space, sized to the input image.
Policy space_policy(SpaceVariant variant);
Policy weak_policy(const WeakConfig& cfg);

struct AffinityReport {
  double clean_accuracy = 0;
  double augmented_accuracy = 0;
  double affinity = 0;  // clean_accuracy - augmented_accuracy
  std::size_t count = 0;

  /// Augmented minus clean accuracy: higher means the policy distorts less.
  double consistency() const { return -affinity; }
};

/// The policy is applied once per validation image; image i draws from
/// Rng(derive_seed(seed, {i})). Throws on an empty set.
AffinityReport affinity(const Classifier& model, std::span<const Sample* const> val, const Policy& policy,
                        std::uint64_t seed);

struct DiversityConfig {
  int hidden = 64;
  double lr = 1e-3;
  double weight_decay = 0;
  int steps = 500;
  int batch_size = 32;
  double window = 0.2;  // trailing fraction of steps averaged
};

struct DiversityReport {
  std::string policy;
  double mean_loss = 0;
  std::size_t count = 0;  // per-sample losses averaged
  Classifier model;       // the trained model
};

/// Trains a fresh classifier on the augmented stream and reports its mean
/// training loss over the trailing window. Batch selection and augmentation
/// draw from separate streams, so policies that never touch their rng see
/// identical batches.
DiversityReport diversity(const Policy& policy, std::string policy_name, std::span<const Sample* const> train,
                          int num_classes, const DiversityConfig& cfg, std::uint64_t seed);

struct RejectionCell {
  std::int64_t epoch = 0;
  int domain = 0;
  std::int64_t wider = 0;
  std::int64_t weak = 0;

  std::int64_t total() const { return wider + weak; }
  double ratio() const { return total() == 0 ? 0.0 : static_cast<double>(wider) / static_cast<double>(total()); }
};

struct RejectionStats {
  std::vector<RejectionCell> series;   // sorted by (epoch, domain)
  std::vector<RejectionCell> domains;  // whole-run totals, epoch = -1
  RejectionCell overall;               // epoch = -1, domain = -1
};

/// Ratio is the fraction of samples for which the wider candidate was kept.
RejectionStats rejection_series(std::span<const SelectionRecord> records, std::int64_t steps_per_epoch);

/// Source/validation/test partition for one held-out domain.
struct HoldoutSplit {
  int holdout = 0;
  std::vector<int> train_domains;  // dataset domain ids, ascending
  SampleRefs train, val, test;
};

/// Class-stratified split of every source domain: round(val_fraction * n)
/// samples of each (domain, class) group go to validation.
HoldoutSplit make_split(const DomainDataset& ds, int holdout, std::uint64_t seed, double val_fraction = 0.2);

using Predictor = std::function<std::vector<int>(std::span<const Sample* const>)>;

struct TrainOutcome {
  Predictor predict;
  double val_accuracy = 0;
};

/// run_seed is derived from (root, holdout, seed); seed is the caller's value.
using TrainFn = std::function<TrainOutcome(const HoldoutSplit&, std::uint64_t run_seed, std::uint64_t seed)>;

struct LooCell {
  int holdout = 0;
  std::uint64_t seed = 0;
  double accuracy = 0;
  double val_accuracy = 0;
};

struct MeanStd {
  double mean = 0;
  double std = 0;  // sample standard deviation, 0 for a single value
};

MeanStd mean_std(std::span<const double> values);

struct LooTable {
  std::vector<int> holdouts;
  std::vector<LooCell> cells;        // holdout-major, then seed
  std::vector<MeanStd> per_holdout;  // over seeds
  MeanStd average;                   // per-seed average over holdouts, then over seeds
};

std::uint64_t run_seed_for(std::uint64_t root, int holdout, std::uint64_t seed);

/// Leave-one-out over `holdouts` (all domains when empty) x seeds. Jobs run on
/// up to `workers` threads; results do not depend on the worker count.
/// Throws with fewer than 2 domains or an empty domain.
LooTable leave_one_out_eval(const DomainDataset& ds, const TrainFn& train, std::span<const std::uint64_t> seeds,
                            std::uint64_t root_seed, std::span<const int> holdouts = {}, int workers = 1,
                            double val_fraction = 0.2);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
/// is rethrown after all threads finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

}  // namespace dcaug
