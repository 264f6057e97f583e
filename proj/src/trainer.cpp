// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcaug/trainer.hpp"

#include <array>
#include <stdexcept>

namespace dcaug {

TrainerState::TrainerState(const TrainerConfig& cfg, int inputs, int classes, int train_domains, std::uint64_t seed)
    : label({inputs, cfg.hidden, classes}, cfg.lr, cfg.weight_decay, cfg.ema_beta, derive_seed(seed, {0x1abe1})) {
  if (uses_domain_classifier(cfg.reward.variant)) {
    if (train_domains < 1) throw std::invalid_argument("TrainerState: domain classifier needs >= 1 training domain");
    domain.emplace(ClassifierShape{inputs, cfg.hidden, train_domains}, cfg.lr, cfg.weight_decay, cfg.ema_beta,
                   derive_seed(seed, {0xd0a1}));
  }
}

RewardModels TrainerState::models() const {
  RewardModels m;
  m.label_student = &label.params;
  m.label_teacher = &label.ema.shadow;
  if (domain) {
    m.domain_student = &domain->params;
    m.domain_teacher = &domain->ema.shadow;
  }
  return m;
}

namespace {

Activations<float> gather(const Activations<float>& a, const std::vector<Eigen::Index>& cols) {
  return {a.hidden(Eigen::all, cols), a.logits(Eigen::all, cols)};
}

std::vector<int> twice(const std::vector<int>& v) {
  std::vector<int> out(v);
  out.insert(out.end(), v.begin(), v.end());
  return out;
}

/// Adam step on the selected inputs, reusing phase-1 activations when present.
double update_learner(Learner& learner, const Eigen::MatrixXf& x, const Activations<float>& act, std::span<const int> targets) {
  const double loss = cross_entropy_batch<float>(act.logits, targets).template cast<double>().mean();
  const GradientBundle<float> g = backward_batch<float>(learner.params, x, act, targets);
  adam_step(learner.params, g, learner.opt);
  ema_update(learner.ema, learner.params);
  return loss;
}

}  // namespace

StepResult train_minibatch(std::span<const MinibatchItem> batch, TrainerState& state, const TrainerConfig& cfg,
                           std::uint64_t run_seed, std::int64_t step) {
  if (batch.empty()) throw std::invalid_argument("train_minibatch: empty batch");
  cfg.reward.validate();
  const MethodVariant variant = cfg.reward.variant;
  const bool with_domain = uses_domain_classifier(variant);
  if (with_domain && !state.domain) throw std::invalid_argument("train_minibatch: state has no domain classifier");
  const auto n = static_cast<Eigen::Index>(batch.size());
  std::vector<int> labels(batch.size()), domains(batch.size(), 0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].image == nullptr) throw std::invalid_argument("train_minibatch: null image");
    labels[i] = batch[i].label;
    if (with_domain) {
      if (!batch[i].domain) throw std::invalid_argument("train_minibatch: missing domain label");
      domains[i] = *batch[i].domain;
    }
  }
  const SearchSpace space(cfg.space, batch[0].image->width());

  // Phase 1: candidates and selection against the frozen snapshot.
  const bool select_phase = uses_selection(variant);
  const bool need_weak = variant != MethodVariant::PolicyTA;
  const bool need_wider = variant != MethodVariant::PolicyERM;
  std::vector<Image> candidates;  // weak block then wider block
  candidates.reserve(batch.size() * 2);
  std::vector<Image> wider_imgs;
  std::vector<AppliedTransform> transforms;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    Rng rng(derive_seed(run_seed, {static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(i)}));
    Image weak = weak_augment(*batch[i].image, cfg.weak, rng);
    if (need_wider) {
      auto [wider, t] = wider_augment(weak, space, rng, {run_seed, step, static_cast<std::int64_t>(i)});
      wider_imgs.push_back(std::move(wider));
      transforms.push_back(std::move(t));
    }
    if (need_weak) candidates.push_back(std::move(weak));
  }
  for (auto& w : wider_imgs) candidates.push_back(std::move(w));
  const Eigen::MatrixXf x = encode_batch<float>(candidates);

  const RewardModels models = state.models();
  std::array<std::optional<Activations<float>>, 4> cache;
  auto activations = [&](RewardModel m) -> const Activations<float>& {
    auto& slot = cache[static_cast<std::size_t>(m)];
    if (!slot) slot = forward_batch<float>(*models.get(m), x);
    return *slot;
  };

  std::vector<Eigen::Index> chosen(batch.size());
  StepResult result;
  result.records.resize(batch.size());
  if (select_phase) {
    const RewardSources src = reward_sources(variant);
    const std::vector<int> labels2 = twice(labels), domains2 = twice(domains);
    auto term = [&](RewardModel m) {
      return cross_entropy_batch<float>(activations(m).logits, targets_domain(m) ? domains2 : labels2);
    };
    const Eigen::VectorXf ld = term(src.diversity);
    const Eigen::VectorXf lc = term(src.consistency);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& rec = result.records[static_cast<std::size_t>(i)];
      rec.weak = make_breakdown(cfg.reward.lambda, ld[i], lc[i]);
      rec.wider = make_breakdown(cfg.reward.lambda, ld[n + i], lc[n + i]);
      rec.decision = decide(*rec.weak, *rec.wider);
      chosen[static_cast<std::size_t>(i)] = rec.decision == Decision::Wider ? n + i : i;
    }
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      result.records[static_cast<std::size_t>(i)].decision =
          variant == MethodVariant::PolicyTA ? Decision::Wider : Decision::Weak;
      chosen[static_cast<std::size_t>(i)] = i;
    }
  }
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto& rec = result.records[i];
    rec.step = step;
    rec.index = static_cast<std::int64_t>(i);
    rec.label = batch[i].label;
    rec.domain = batch[i].global_domain;
    if (need_wider) rec.wider_transform = transforms[i];
  }

  // Phase 2: updates, in order f, EMA(f), h, EMA(h).
  const Eigen::MatrixXf x_sel = x(Eigen::all, chosen);
  auto student_acts = [&](RewardModel m, const Classifier& params) {
    const auto& slot = cache[static_cast<std::size_t>(m)];
    return slot ? gather(*slot, chosen) : forward_batch<float>(params, x_sel);
  };
  result.label_loss = update_learner(state.label, x_sel, student_acts(RewardModel::LabelStudent, state.label.params), labels);
  if (with_domain)
    update_learner(*state.domain, x_sel, student_acts(RewardModel::DomainStudent, state.domain->params), domains);
  return result;
}

const Classifier& final_classifier(const TrainerState& state, const RewardConfig& cfg) {
  return cfg.variant == MethodVariant::LabelRewardEmaFinal ? state.label.ema.shadow : state.label.params;
}

}  // namespace dcaug
