// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "dcaug/augment.hpp"
#include "dcaug/model.hpp"

namespace dcaug {

enum class MethodVariant {
  DomainReward,               // diversity/consistency from the domain classifier and its EMA
  LabelReward,                // same with the label classifier
  LabelRewardEmaFinal,        // LabelReward, deploying the EMA label classifier
  AblationDomainDivLabelCon,  // diversity from h, consistency from f
  AblationEmaBoth,            // diversity from EMA h, consistency from EMA f
  PolicyTA,                   // always the wider candidate
  PolicyERM,                  // always the weak candidate
};

std::string_view method_tag(MethodVariant v);      // CLI/config name, e.g. "label"
std::string_view method_display(MethodVariant v);  // e.g. "DCAug^label"
/// Throws std::invalid_argument on an unknown tag.
MethodVariant parse_method(std::string_view tag);

bool uses_domain_classifier(MethodVariant v);
bool uses_selection(MethodVariant v);

struct RewardConfig {
  double lambda = 0.5;
  MethodVariant variant = MethodVariant::LabelReward;

  void validate() const;
  friend bool operator==(const RewardConfig&, const RewardConfig&) = default;
};

struct RewardBreakdown {
  double r_div = 0;
  double r_con = 0;
  double r = 0;
  friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

/// (1 - lambda) * r_div - lambda * r_con
inline double combined_reward(double lambda, double r_div, double r_con) { return (1.0 - lambda) * r_div - lambda * r_con; }

inline RewardBreakdown make_breakdown(double lambda, double r_div, double r_con) {
  return {r_div, r_con, combined_reward(lambda, r_div, r_con)};
}

enum class Decision { Weak, Wider };

std::string_view decision_name(Decision d);

/// Ties go to the wider candidate.
inline Decision decide(const RewardBreakdown& weak, const RewardBreakdown& wider) {
  return wider.r >= weak.r ? Decision::Wider : Decision::Weak;
}

/// Which model scores each reward term, and against which target.
enum class RewardModel { LabelStudent, LabelTeacher, DomainStudent, DomainTeacher };

struct RewardSources {
  RewardModel diversity;
  RewardModel consistency;
};

/// Throws std::invalid_argument for PolicyTA/PolicyERM.
RewardSources reward_sources(MethodVariant v);

inline bool targets_domain(RewardModel m) { return m == RewardModel::DomainStudent || m == RewardModel::DomainTeacher; }

/// Read-only view of the models a reward may consult. Pointers a variant does
/// not need may be null.
struct RewardModels {
  const Classifier* label_student = nullptr;
  const Classifier* label_teacher = nullptr;
  const Classifier* domain_student = nullptr;
  const Classifier* domain_teacher = nullptr;

  const Classifier* get(RewardModel m) const;
};

struct SampleMeta {
  int label = 0;
  std::optional<int> domain;  // index among the training domains
};

/// Per-candidate rewards for a batch of encoded candidates (one per column).
/// Throws std::invalid_argument when the variant needs a model or a domain
/// label that is missing, or for PolicyTA/PolicyERM which compute no reward.
std::vector<RewardBreakdown> reward_batch(const RewardModels& models, const Eigen::MatrixXf& x,
                                          std::span<const SampleMeta> meta, const RewardConfig& cfg);

RewardBreakdown reward_components(const RewardModels& models, const Image& x, const SampleMeta& meta,
                                  const RewardConfig& cfg);

struct SelectionRecord {
  std::int64_t step = 0;
  std::int64_t index = 0;
  int label = 0;
  int domain = -1;  // global domain id, -1 when unknown
  std::optional<RewardBreakdown> weak;
  std::optional<RewardBreakdown> wider;
  std::optional<AppliedTransform> wider_transform;
  Decision decision = Decision::Weak;
};

/// Picks between the two candidates of one sample. Fixed policies skip the
/// reward and always take their candidate.
std::pair<Image, SelectionRecord> select(const Image& weak_img, const Image& wider_img, const SampleMeta& meta,
                                         const RewardModels& models, const RewardConfig& cfg);

}  // namespace dcaug
