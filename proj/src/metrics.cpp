// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcaug/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace dcaug {

SampleRefs refs(const std::vector<Sample>& samples) {
  SampleRefs out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(&s);
  return out;
}

namespace {

constexpr std::size_t kEvalChunk = 256;

Eigen::MatrixXf encode_refs(std::span<const Sample* const> samples) {
  const Eigen::Index inputs = samples.front()->image.to_float().size();
  Eigen::MatrixXf x(inputs, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) x.col(static_cast<Eigen::Index>(i)) = encode<float>(samples[i]->image);
  return x;
}

std::vector<int> predict_images(const Classifier& model, std::span<const Image> images) {
  std::vector<int> out;
  out.reserve(images.size());
  for (std::size_t lo = 0; lo < images.size(); lo += kEvalChunk) {
    const auto chunk = images.subspan(lo, std::min(kEvalChunk, images.size() - lo));
    const Eigen::MatrixXf logits = forward_batch<float>(model, encode_batch<float>(chunk)).logits;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) out.push_back(static_cast<int>(argmax<float>(logits.col(j))));
  }
  return out;
}

}  // namespace

std::vector<int> predict(const Classifier& model, std::span<const Sample* const> samples) {
  std::vector<int> out;
  out.reserve(samples.size());
  for (std::size_t lo = 0; lo < samples.size(); lo += kEvalChunk) {
    const auto chunk = samples.subspan(lo, std::min(kEvalChunk, samples.size() - lo));
    const Eigen::MatrixXf logits = forward_batch<float>(model, encode_refs(chunk)).logits;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) out.push_back(static_cast<int>(argmax<float>(logits.col(j))));
  }
  return out;
}

namespace {

double hit_rate(const std::vector<int>& predicted, std::span<const Sample* const> samples) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) hits += predicted[i] == samples[i]->label;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

}  // namespace

double accuracy(const Classifier& model, std::span<const Sample* const> samples) {
  if (samples.empty()) throw std::invalid_argument("accuracy: empty sample set");
  return hit_rate(predict(model, samples), samples);
}

Policy identity_policy() {
  return [](const Image& img, Rng&) { return img; };
}

Policy space_policy(SpaceVariant variant) {
  return [variant](const Image& img, Rng& rng) {
    const SearchSpace space(variant, img.width());
    return apply(sample(space, rng), img);
  };
}

Policy weak_policy(const WeakConfig& cfg) {
  cfg.validate();
  return [cfg](const Image& img, Rng& rng) { return weak_augment(img, cfg, rng); };
}

AffinityReport affinity(const Classifier& model, std::span<const Sample* const> val, const Policy& policy,
                        std::uint64_t seed) {
  if (val.empty()) throw std::invalid_argument("affinity: empty validation set");
  std::vector<Image> augmented;
  augmented.reserve(val.size());
  for (std::size_t i = 0; i < val.size(); ++i) {
    Rng rng(derive_seed(seed, {i}));
    augmented.push_back(policy(val[i]->image, rng));
  }
  AffinityReport r;
  r.count = val.size();
  r.clean_accuracy = hit_rate(predict(model, val), val);
  r.augmented_accuracy = hit_rate(predict_images(model, augmented), val);
  r.affinity = r.clean_accuracy - r.augmented_accuracy;
  return r;
}

DiversityReport diversity(const Policy& policy, std::string policy_name, std::span<const Sample* const> train,
                          int num_classes, const DiversityConfig& cfg, std::uint64_t seed) {
  if (cfg.steps < 1) throw std::invalid_argument("diversity: steps must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("diversity: batch_size must be >= 1");
  if (!(cfg.window > 0 && cfg.window <= 1)) throw std::invalid_argument("diversity: window must be in (0, 1]");
  if (train.empty()) throw std::invalid_argument("diversity: empty training set");
  const int inputs = static_cast<int>(train.front()->image.to_float().size());
  const ClassifierShape shape{inputs, cfg.hidden, num_classes};
  DiversityReport rep;
  rep.policy = std::move(policy_name);
  rep.model = init_classifier<float>(shape, derive_seed(seed, {0x1abe1}));
  Adam opt(shape, cfg.lr, cfg.weight_decay);

  const int window = std::max(1, static_cast<int>(std::ceil(cfg.window * cfg.steps)));
  double loss_sum = 0;
  std::vector<Image> images(static_cast<std::size_t>(cfg.batch_size));
  std::vector<int> labels(static_cast<std::size_t>(cfg.batch_size));
  for (int step = 0; step < cfg.steps; ++step) {
    Rng pick(derive_seed(seed, {static_cast<std::uint64_t>(step), 0xba7c}));
    for (int i = 0; i < cfg.batch_size; ++i) {
      const Sample* s = train[static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(train.size()) - 1))];
      Rng aug(derive_seed(seed, {static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(i)}));
      images[static_cast<std::size_t>(i)] = policy(s->image, aug);
      labels[static_cast<std::size_t>(i)] = s->label;
    }
    const Eigen::MatrixXf x = encode_batch<float>(images);
    const Activations<float> act = forward_batch<float>(rep.model, x);
    if (step >= cfg.steps - window) {
      loss_sum += cross_entropy_batch<float>(act.logits, labels).cast<double>().sum();
      rep.count += labels.size();
    }
    adam_step(rep.model, backward_batch<float>(rep.model, x, act, labels), opt);
  }
  rep.mean_loss = loss_sum / static_cast<double>(rep.count);
  return rep;
}

RejectionStats rejection_series(std::span<const SelectionRecord> records, std::int64_t steps_per_epoch) {
  if (steps_per_epoch < 1) throw std::invalid_argument("rejection_series: steps_per_epoch must be >= 1");
  std::map<std::pair<std::int64_t, int>, RejectionCell> cells;
  std::map<int, RejectionCell> domains;
  RejectionStats out;
  out.overall.epoch = -1;
  out.overall.domain = -1;
  for (const auto& r : records) {
    const std::int64_t epoch = r.step / steps_per_epoch;
    auto& c = cells[{epoch, r.domain}];
    c.epoch = epoch;
    c.domain = r.domain;
    auto& d = domains[r.domain];
    d.epoch = -1;
    d.domain = r.domain;
    const bool wider = r.decision == Decision::Wider;
    for (RejectionCell* cell : {&c, &d, &out.overall}) (wider ? cell->wider : cell->weak)++;
  }
  for (const auto& [key, c] : cells) out.series.push_back(c);
  for (const auto& [key, d] : domains) out.domains.push_back(d);
  return out;
}

HoldoutSplit make_split(const DomainDataset& ds, int holdout, std::uint64_t seed, double val_fraction) {
  if (holdout < 0 || holdout >= ds.num_domains) throw std::invalid_argument("split: held-out domain out of range");
  if (!(val_fraction >= 0 && val_fraction < 1)) throw std::invalid_argument("split: val_fraction must be in [0, 1)");
  HoldoutSplit split;
  split.holdout = holdout;
  // (domain, class) groups in dataset order.
  std::vector<std::vector<SampleRefs>> groups(static_cast<std::size_t>(ds.num_domains),
                                              std::vector<SampleRefs>(static_cast<std::size_t>(ds.num_classes)));
  for (const auto& s : ds.samples) groups[static_cast<std::size_t>(s.domain)][static_cast<std::size_t>(s.label)].push_back(&s);
  for (int d = 0; d < ds.num_domains; ++d) {
    if (d == holdout) {
      for (const auto& g : groups[static_cast<std::size_t>(d)]) split.test.insert(split.test.end(), g.begin(), g.end());
      continue;
    }
    split.train_domains.push_back(d);
    for (int k = 0; k < ds.num_classes; ++k) {
      SampleRefs g = groups[static_cast<std::size_t>(d)][static_cast<std::size_t>(k)];
      Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(k)}));
      for (std::size_t i = g.size(); i > 1; --i)
        std::swap(g[i - 1], g[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
      const auto n_val = static_cast<std::size_t>(std::lround(val_fraction * static_cast<double>(g.size())));
      split.val.insert(split.val.end(), g.begin(), g.begin() + static_cast<std::ptrdiff_t>(n_val));
      split.train.insert(split.train.end(), g.begin() + static_cast<std::ptrdiff_t>(n_val), g.end());
    }
  }
  return split;
}

MeanStd mean_std(std::span<const double> values) {
  MeanStd r;
  if (values.empty()) return r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return r;
}

std::uint64_t run_seed_for(std::uint64_t root, int holdout, std::uint64_t seed) {
  return derive_seed(root, {static_cast<std::uint64_t>(holdout), seed});
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr error;
  auto worker = [&] {
    for (;;) {
      std::size_t i = 0;
      {
        std::lock_guard lock(mu);
        if (next >= n || error) return;
        i = next++;
      }
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

LooTable leave_one_out_eval(const DomainDataset& ds, const TrainFn& train, std::span<const std::uint64_t> seeds,
                            std::uint64_t root_seed, std::span<const int> holdouts, int workers,
                            double val_fraction) {
  if (ds.num_domains < 2) throw std::invalid_argument("leave-one-out needs at least 2 domains");
  for (int d = 0; d < ds.num_domains; ++d)
    if (ds.count_domain(d) == 0) throw std::invalid_argument("leave-one-out: domain " + std::to_string(d) + " is empty");
  if (seeds.empty()) throw std::invalid_argument("leave-one-out: no seeds");
  LooTable table;
  if (holdouts.empty())
    for (int d = 0; d < ds.num_domains; ++d) table.holdouts.push_back(d);
  else
    table.holdouts.assign(holdouts.begin(), holdouts.end());
  for (int h : table.holdouts)
    if (h < 0 || h >= ds.num_domains) throw std::invalid_argument("leave-one-out: held-out domain " + std::to_string(h) + " out of range");

  table.cells.resize(table.holdouts.size() * seeds.size());
  parallel_for(table.cells.size(), workers, [&](std::size_t job) {
    const int h = table.holdouts[job / seeds.size()];
    const std::uint64_t seed = seeds[job % seeds.size()];
    const std::uint64_t run_seed = run_seed_for(root_seed, h, seed);
    const HoldoutSplit split = make_split(ds, h, derive_seed(run_seed, {0x5917}), val_fraction);
    const TrainOutcome outcome = train(split, run_seed, seed);
    const std::vector<int> predicted = outcome.predict(split.test);
    table.cells[job] = {h, seed, hit_rate(predicted, split.test), outcome.val_accuracy};
  });

  std::vector<double> per_seed_avg(seeds.size(), 0.0);
  for (std::size_t hi = 0; hi < table.holdouts.size(); ++hi) {
    std::vector<double> acc;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const double a = table.cells[hi * seeds.size() + si].accuracy;
      acc.push_back(a);
      per_seed_avg[si] += a / static_cast<double>(table.holdouts.size());
    }
    table.per_holdout.push_back(mean_std(acc));
  }
  table.average = mean_std(per_seed_avg);
  return table;
}

}  // namespace dcaug
