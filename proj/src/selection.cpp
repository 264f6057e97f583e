// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcaug/selection.hpp"

#include <array>
#include <stdexcept>
#include <string>

namespace dcaug {

namespace {

struct MethodInfo {
  MethodVariant variant;
  std::string_view tag;
  std::string_view display;
};

constexpr std::array<MethodInfo, 7> kMethods{{
    {MethodVariant::DomainReward, "domain", "DCAug^domain"},
    {MethodVariant::LabelReward, "label", "DCAug^label"},
    {MethodVariant::LabelRewardEmaFinal, "teach-label", "TeachDCAug^label"},
    {MethodVariant::AblationDomainDivLabelCon, "ablation-div-domain-con-label", "Ablation(h div, f con)"},
    {MethodVariant::AblationEmaBoth, "ablation-ema-both", "Ablation(EMA h div, EMA f con)"},
    {MethodVariant::PolicyTA, "ta", "TA"},
    {MethodVariant::PolicyERM, "erm", "ERM"},
}};

const MethodInfo& info(MethodVariant v) {
  for (const auto& m : kMethods)
    if (m.variant == v) return m;
  throw std::invalid_argument("unknown method variant");
}

}  // namespace

std::string_view method_tag(MethodVariant v) { return info(v).tag; }
std::string_view method_display(MethodVariant v) { return info(v).display; }

MethodVariant parse_method(std::string_view tag) {
  for (const auto& m : kMethods)
    if (m.tag == tag) return m.variant;
  std::string known;
  for (const auto& m : kMethods) known += (known.empty() ? "" : "|") + std::string(m.tag);
  throw std::invalid_argument("unknown method variant '" + std::string(tag) + "' (expected " + known + ")");
}

bool uses_domain_classifier(MethodVariant v) {
  return v == MethodVariant::DomainReward || v == MethodVariant::AblationDomainDivLabelCon ||
         v == MethodVariant::AblationEmaBoth;
}

bool uses_selection(MethodVariant v) { return v != MethodVariant::PolicyTA && v != MethodVariant::PolicyERM; }

void RewardConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("lambda must be in [0, 1], got " + std::to_string(lambda));
}

std::string_view decision_name(Decision d) { return d == Decision::Wider ? "wider" : "weak"; }

RewardSources reward_sources(MethodVariant v) {
  switch (v) {
    case MethodVariant::DomainReward: return {RewardModel::DomainStudent, RewardModel::DomainTeacher};
    case MethodVariant::LabelReward:
    case MethodVariant::LabelRewardEmaFinal: return {RewardModel::LabelStudent, RewardModel::LabelTeacher};
    case MethodVariant::AblationDomainDivLabelCon: return {RewardModel::DomainStudent, RewardModel::LabelStudent};
    case MethodVariant::AblationEmaBoth: return {RewardModel::DomainTeacher, RewardModel::LabelTeacher};
    case MethodVariant::PolicyTA:
    case MethodVariant::PolicyERM: break;
  }
  throw std::invalid_argument("reward: fixed policies compute no reward");
}

const Classifier* RewardModels::get(RewardModel m) const {
  switch (m) {
    case RewardModel::LabelStudent: return label_student;
    case RewardModel::LabelTeacher: return label_teacher;
    case RewardModel::DomainStudent: return domain_student;
    case RewardModel::DomainTeacher: return domain_teacher;
  }
  return nullptr;
}

std::vector<RewardBreakdown> reward_batch(const RewardModels& models, const Eigen::MatrixXf& x,
                                          std::span<const SampleMeta> meta, const RewardConfig& cfg) {
  cfg.validate();
  const RewardSources src = reward_sources(cfg.variant);
  if (static_cast<std::size_t>(x.cols()) != meta.size()) throw std::invalid_argument("reward: metadata count mismatch");

  std::vector<int> labels(meta.size());
  std::vector<int> domains(meta.size());
  for (std::size_t i = 0; i < meta.size(); ++i) {
    labels[i] = meta[i].label;
    if (uses_domain_classifier(cfg.variant)) {
      if (!meta[i].domain)
        throw std::invalid_argument("reward: variant " + std::string(method_tag(cfg.variant)) + " needs a domain label");
      domains[i] = *meta[i].domain;
    }
  }
  auto losses = [&](RewardModel m) {
    const Classifier* model = models.get(m);
    if (model == nullptr) throw std::invalid_argument("reward: a model required by the variant is missing");
    return cross_entropy_batch<float>(forward_batch<float>(*model, x).logits, targets_domain(m) ? domains : labels);
  };
  const Eigen::VectorXf div = losses(src.diversity);
  const Eigen::VectorXf con = losses(src.consistency);

  std::vector<RewardBreakdown> out(meta.size());
  for (std::size_t i = 0; i < meta.size(); ++i)
    out[i] = make_breakdown(cfg.lambda, div[static_cast<Eigen::Index>(i)], con[static_cast<Eigen::Index>(i)]);
  return out;
}

RewardBreakdown reward_components(const RewardModels& models, const Image& x, const SampleMeta& meta,
                                  const RewardConfig& cfg) {
  const Eigen::MatrixXf col = encode<float>(x);
  return reward_batch(models, col, std::span(&meta, 1), cfg).front();
}

std::pair<Image, SelectionRecord> select(const Image& weak_img, const Image& wider_img, const SampleMeta& meta,
                                         const RewardModels& models, const RewardConfig& cfg) {
  SelectionRecord rec;
  rec.label = meta.label;
  rec.domain = meta.domain.value_or(-1);
  switch (cfg.variant) {
    case MethodVariant::PolicyTA: rec.decision = Decision::Wider; break;
    case MethodVariant::PolicyERM: rec.decision = Decision::Weak; break;
    default:
      rec.weak = reward_components(models, weak_img, meta, cfg);
      rec.wider = reward_components(models, wider_img, meta, cfg);
      rec.decision = decide(*rec.weak, *rec.wider);
  }
  return {rec.decision == Decision::Wider ? wider_img : weak_img, std::move(rec)};
}

}  // namespace dcaug
