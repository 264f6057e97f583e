// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcaug/selection.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace dcaug {
namespace {

using testing::random_image;

TEST(Reward, CombinationArithmetic) {
  EXPECT_DOUBLE_EQ(make_breakdown(0.5, 2.0, 3.0).r, -0.5);
  EXPECT_DOUBLE_EQ(make_breakdown(0.0, 2.0, 99.0).r, 2.0);
  EXPECT_DOUBLE_EQ(make_breakdown(1.0, 99.0, 3.0).r, -3.0);
}

TEST(Reward, ConfigValidation) {
  EXPECT_NO_THROW((RewardConfig{0.7, MethodVariant::LabelReward}.validate()));
  EXPECT_THROW((RewardConfig{1.2, MethodVariant::LabelReward}.validate()), std::invalid_argument);
  EXPECT_THROW((RewardConfig{-0.1, MethodVariant::LabelReward}.validate()), std::invalid_argument);
}

TEST(Reward, MethodTagsRoundTrip) {
  for (auto v : {MethodVariant::DomainReward, MethodVariant::LabelReward, MethodVariant::LabelRewardEmaFinal,
                 MethodVariant::AblationDomainDivLabelCon, MethodVariant::AblationEmaBoth, MethodVariant::PolicyTA,
                 MethodVariant::PolicyERM})
    EXPECT_EQ(parse_method(method_tag(v)), v);
  EXPECT_THROW(parse_method("nope"), std::invalid_argument);
}

TEST(Decide, TiesGoToWider) {
  EXPECT_EQ(decide(make_breakdown(0.5, 1, 1), make_breakdown(0.5, 1, 1)), Decision::Wider);
  EXPECT_EQ(decide(make_breakdown(0.5, 1.0, 0.5), make_breakdown(0.5, 2.0, 3.0)), Decision::Weak);
  EXPECT_EQ(decide(make_breakdown(1.0, 0, 0.1), make_breakdown(1.0, 0, 5.0)), Decision::Weak);
}

TEST(Decide, MatchesBruteForceOverRandomTuples) {
  Rng rng(2024);
  for (int i = 0; i < 10000; ++i) {
    const double lambda = i % 10 == 0 ? static_cast<double>(rng.uniform_int(0, 4)) / 4 : rng.uniform();
    double l[4];
    for (double& v : l) v = rng.uniform(0, 5);
    if (i % 7 == 0) l[2] = l[0], l[3] = l[1];  // exact ties
    const auto weak = make_breakdown(lambda, l[0], l[1]);
    const auto wider = make_breakdown(lambda, l[2], l[3]);
    const bool oracle = (1 - lambda) * l[2] - lambda * l[3] >= (1 - lambda) * l[0] - lambda * l[1];
    ASSERT_EQ(decide(weak, wider) == Decision::Wider, oracle);
  }
}

TEST(Decide, ShiftingBothRewardsPreservesDecision) {
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const double lambda = rng.uniform();
    double l[4];
    for (double& v : l) v = rng.uniform(0, 5);
    const double sd = rng.uniform(-2, 2), sc = rng.uniform(-2, 2);
    const Decision a = decide(make_breakdown(lambda, l[0], l[1]), make_breakdown(lambda, l[2], l[3]));
    const Decision b =
        decide(make_breakdown(lambda, l[0] + sd, l[1] + sc), make_breakdown(lambda, l[2] + sd, l[3] + sc));
    // Only near-ties may flip through rounding.
    const double gap = std::abs(make_breakdown(lambda, l[2], l[3]).r - make_breakdown(lambda, l[0], l[1]).r);
    if (gap > 1e-9) ASSERT_EQ(a, b);
  }
}

struct Models {
  Classifier f, ft, h, ht;
  RewardModels view() const { return {&f, &ft, &h, &ht}; }
};

Models make_models(int inputs) {
  return {init_classifier<float>({inputs, 8, 5}, 1), init_classifier<float>({inputs, 8, 5}, 2),
          init_classifier<float>({inputs, 8, 3}, 3), init_classifier<float>({inputs, 8, 3}, 4)};
}

TEST(RewardComponents, UsesTheRightModelsPerVariant) {
  const Image x = random_image(4, 4, 1);
  const Models m = make_models(48);
  const SampleMeta meta{2, 1};
  const Eigen::VectorXf enc = encode<float>(x);
  auto ce = [&](const Classifier& c, int t) { return static_cast<double>(cross_entropy(forward<float>(c, enc), t)); };
  const double lam = 0.3;
  auto r = reward_components(m.view(), x, meta, {lam, MethodVariant::DomainReward});
  EXPECT_FLOAT_EQ(r.r_div, ce(m.h, 1));
  EXPECT_FLOAT_EQ(r.r_con, ce(m.ht, 1));
  EXPECT_DOUBLE_EQ(r.r, (1 - lam) * r.r_div - lam * r.r_con);
  r = reward_components(m.view(), x, meta, {lam, MethodVariant::LabelReward});
  EXPECT_FLOAT_EQ(r.r_div, ce(m.f, 2));
  EXPECT_FLOAT_EQ(r.r_con, ce(m.ft, 2));
  r = reward_components(m.view(), x, meta, {lam, MethodVariant::LabelRewardEmaFinal});
  EXPECT_FLOAT_EQ(r.r_con, ce(m.ft, 2));
  r = reward_components(m.view(), x, meta, {lam, MethodVariant::AblationDomainDivLabelCon});
  EXPECT_FLOAT_EQ(r.r_div, ce(m.h, 1));
  EXPECT_FLOAT_EQ(r.r_con, ce(m.f, 2));
  r = reward_components(m.view(), x, meta, {lam, MethodVariant::AblationEmaBoth});
  EXPECT_FLOAT_EQ(r.r_div, ce(m.ht, 1));
  EXPECT_FLOAT_EQ(r.r_con, ce(m.ft, 2));
}

TEST(RewardComponents, Errors) {
  const Image x = random_image(4, 4, 1);
  const Models m = make_models(48);
  EXPECT_THROW(reward_components(m.view(), x, {2, std::nullopt}, {0.5, MethodVariant::DomainReward}), std::invalid_argument);
  EXPECT_THROW(reward_components({&m.f, &m.ft, nullptr, nullptr}, x, {2, 1}, {0.5, MethodVariant::DomainReward}),
               std::invalid_argument);
  EXPECT_THROW(reward_components(m.view(), x, {2, 1}, {0.5, MethodVariant::PolicyTA}), std::invalid_argument);
  // Label variants need no domain label.
  EXPECT_NO_THROW(reward_components(m.view(), x, {2, std::nullopt}, {0.5, MethodVariant::LabelReward}));
}

TEST(Select, PicksHigherRewardAndRecordsBreakdown) {
  const Models m = make_models(48);
  const Image a = random_image(4, 4, 10), b = random_image(4, 4, 11);
  const RewardConfig cfg{0.5, MethodVariant::LabelReward};
  const auto [img, rec] = select(a, b, {1, std::nullopt}, m.view(), cfg);
  ASSERT_TRUE(rec.weak && rec.wider);
  EXPECT_EQ(rec.decision, decide(*rec.weak, *rec.wider));
  EXPECT_EQ(img, rec.decision == Decision::Wider ? b : a);
  // Identical candidates tie and pick wider.
  const auto [same, tie] = select(a, a, {1, std::nullopt}, m.view(), cfg);
  EXPECT_EQ(tie.decision, Decision::Wider);
}

TEST(Select, FixedPolicies) {
  const Models m = make_models(48);
  const Image a = random_image(4, 4, 10), b = random_image(4, 4, 11);
  const auto [ta_img, ta] = select(a, b, {1, std::nullopt}, m.view(), {0.5, MethodVariant::PolicyTA});
  EXPECT_EQ(ta.decision, Decision::Wider);
  EXPECT_EQ(ta_img, b);
  EXPECT_FALSE(ta.weak.has_value());
  const auto [erm_img, erm] = select(a, b, {1, std::nullopt}, m.view(), {0.5, MethodVariant::PolicyERM});
  EXPECT_EQ(erm.decision, Decision::Weak);
  EXPECT_EQ(erm_img, a);
}

TEST(Select, LabelRewardEqualsEmaBothWhenModelsCoincide) {
  // With h and its EMA replaced by the label models (and domain == label),
  // the EMA-both ablation reduces to the label reward.
  const Models m = make_models(48);
  const RewardModels same{&m.f, &m.ft, &m.ft, &m.ft};
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Image a = random_image(4, 4, 100 + s), b = random_image(4, 4, 200 + s);
    const int y = static_cast<int>(s % 5);
    const auto [i1, r1] = select(a, b, {y, y}, RewardModels{&m.ft, &m.ft, nullptr, nullptr}, {0.4, MethodVariant::LabelReward});
    const auto [i2, r2] = select(a, b, {y, y}, same, {0.4, MethodVariant::AblationEmaBoth});
    EXPECT_EQ(r1.decision, r2.decision);
  }
}

}  // namespace
}  // namespace dcaug
