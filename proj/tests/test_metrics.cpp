// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcaug/metrics.hpp"

#include <gtest/gtest.h>

#include <set>

#include "dcaug/imaging.hpp"

namespace dcaug {
namespace {

const DomainDataset& small_dataset() {
  static const DomainDataset ds = [] {
    auto spec = SyntheticDomainSpec::desk_default();
    spec.side = 16;
    spec.samples_per_domain = 50;
    return generate_dataset(spec, 3);
  }();
  return ds;
}

DiversityConfig quick(int steps = 60) {
  DiversityConfig cfg;
  cfg.hidden = 16;
  cfg.lr = 5e-3;
  cfg.steps = steps;
  cfg.batch_size = 16;
  return cfg;
}

Policy fixed_op(TransformOp op, std::optional<double> m) {
  return [op, m](const Image& img, Rng&) { return apply({op, m, {}}, img); };
}

TEST(Affinity, IdentityIsExactlyZero) {
  const auto& ds = small_dataset();
  const SampleRefs all = refs(ds.samples);
  const auto model = diversity(identity_policy(), "identity", all, ds.num_classes, quick(), 1).model;
  for (std::uint64_t seed : {0, 1, 2}) {
    const auto r = affinity(model, all, identity_policy(), seed);
    EXPECT_EQ(r.affinity, 0.0);
    EXPECT_EQ(r.clean_accuracy, r.augmented_accuracy);
    EXPECT_EQ(r.count, all.size());
  }
}

TEST(Affinity, GreyPolicyMatchesDirectEvaluation) {
  const auto& ds = small_dataset();
  const SampleRefs all = refs(ds.samples);
  const auto model = diversity(identity_policy(), "identity", all, ds.num_classes, quick(), 2).model;
  const SampleRefs val(all.begin(), all.begin() + 50);
  const Policy grey = [](const Image& img, Rng&) { return uniform_like(img, 128); };
  const auto r = affinity(model, val, grey, 0);

  // Oracle: per-image forward pass and hand counting.
  const int grey_class = static_cast<int>(argmax<float>(forward(model, Image(16, 16, 128))));
  int clean_hits = 0, grey_hits = 0;
  for (const Sample* s : val) {
    clean_hits += static_cast<int>(argmax<float>(forward(model, s->image))) == s->label;
    grey_hits += s->label == grey_class;
  }
  EXPECT_DOUBLE_EQ(r.clean_accuracy, clean_hits / 50.0);
  EXPECT_DOUBLE_EQ(r.augmented_accuracy, grey_hits / 50.0);
  EXPECT_DOUBLE_EQ(r.affinity, clean_hits / 50.0 - grey_hits / 50.0);
}

TEST(Affinity, EmptySetThrows) {
  const auto model = init_classifier<float>({12, 4, 2}, 0);
  EXPECT_THROW(affinity(model, {}, identity_policy(), 0), std::invalid_argument);
}

TEST(Diversity, ZeroMagnitudeOpsMatchNoAugmentation) {
  const auto& ds = small_dataset();
  const SampleRefs all = refs(ds.samples);
  const auto base = diversity(identity_policy(), "identity", all, ds.num_classes, quick(), 4);
  for (auto [op, m] : std::vector<std::pair<TransformOp, double>>{
           {TransformOp::Rotate, 0}, {TransformOp::ShearX, 0}, {TransformOp::TranslateY, 0}, {TransformOp::Posterize, 8}}) {
    const auto r = diversity(fixed_op(op, m), "zero", all, ds.num_classes, quick(), 4);
    EXPECT_EQ(r.mean_loss, base.mean_loss) << op_name(op);
    EXPECT_EQ(r.model, base.model) << op_name(op);
  }
}

TEST(Diversity, ConstantImagesAreLearnable) {
  std::vector<Sample> samples;
  for (int i = 0; i < 40; ++i) samples.push_back({Image(8, 8, static_cast<std::uint8_t>(40 + 60 * (i % 3))), i % 3, 0, 0});
  const SampleRefs all = refs(samples);
  auto cfg = quick(400);
  cfg.lr = 1e-2;
  for (auto op : {TransformOp::Color, TransformOp::Contrast, TransformOp::Brightness}) {
    const auto r = diversity(fixed_op(op, 0.0), "colour identity", all, 3, cfg, 5);
    EXPECT_GE(r.mean_loss, 0.0);
    EXPECT_LT(r.mean_loss, 1e-2) << op_name(op);
  }
}

TEST(Diversity, WiderIsHarderThanIdentity) {
  const auto& ds = small_dataset();
  const SampleRefs all = refs(ds.samples);
  const auto cfg = quick(200);
  const auto id = diversity(identity_policy(), "identity", all, ds.num_classes, cfg, 6);
  const auto wider = diversity(space_policy(SpaceVariant::Wider), "wider", all, ds.num_classes, cfg, 6);
  EXPECT_GE(wider.mean_loss, id.mean_loss);
  EXPECT_EQ(id.count, 40u * 16u);
}

TEST(Diversity, Errors) {
  const auto& ds = small_dataset();
  const SampleRefs all = refs(ds.samples);
  auto cfg = quick();
  cfg.steps = 0;
  EXPECT_THROW(diversity(identity_policy(), "id", all, ds.num_classes, cfg, 0), std::invalid_argument);
  EXPECT_THROW(diversity(identity_policy(), "id", {}, ds.num_classes, quick(), 0), std::invalid_argument);
}

SelectionRecord rec(std::int64_t step, int domain, Decision d) {
  SelectionRecord r;
  r.step = step;
  r.domain = domain;
  r.decision = d;
  return r;
}

TEST(Rejection, HandCountedFractions) {
  using enum Decision;
  const std::vector<SelectionRecord> records{rec(0, 0, Wider), rec(0, 0, Weak),  rec(0, 1, Wider), rec(1, 0, Weak),
                                             rec(2, 0, Wider), rec(2, 1, Weak),  rec(3, 1, Weak),  rec(3, 1, Weak),
                                             rec(3, 0, Wider), rec(3, 0, Wider)};
  const auto st = rejection_series(records, 2);
  ASSERT_EQ(st.series.size(), 4u);
  EXPECT_EQ(st.series[0].epoch, 0);
  EXPECT_EQ(st.series[0].domain, 0);
  EXPECT_EQ(st.series[0].wider, 1);
  EXPECT_EQ(st.series[0].weak, 2);
  EXPECT_DOUBLE_EQ(st.series[0].ratio(), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(st.series[1].ratio(), 1.0);
  EXPECT_DOUBLE_EQ(st.series[2].ratio(), 1.0);  // epoch 1, domain 0: 3 of 3
  EXPECT_DOUBLE_EQ(st.series[3].ratio(), 0.0);  // epoch 1, domain 1: 0 of 3
  ASSERT_EQ(st.domains.size(), 2u);
  EXPECT_EQ(st.domains[0].total(), 6);
  EXPECT_DOUBLE_EQ(st.domains[0].ratio(), 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(st.domains[1].ratio(), 1.0 / 4.0);
  EXPECT_EQ(st.overall.total(), 10);
  EXPECT_DOUBLE_EQ(st.overall.ratio(), 0.5);
}

TEST(Rejection, FixedPoliciesAndEmptyStream) {
  std::vector<SelectionRecord> ta, erm;
  for (int s = 0; s < 20; ++s)
    for (int d = 0; d < 3; ++d) {
      ta.push_back(rec(s, d, Decision::Wider));
      erm.push_back(rec(s, d, Decision::Weak));
    }
  for (const auto& c : rejection_series(ta, 7).series) EXPECT_EQ(c.ratio(), 1.0);
  for (const auto& c : rejection_series(erm, 7).series) EXPECT_EQ(c.ratio(), 0.0);
  const auto empty = rejection_series({}, 5);
  EXPECT_TRUE(empty.series.empty());
  EXPECT_EQ(empty.overall.total(), 0);
}

TEST(Split, StratifiedAndDisjoint) {
  const auto& ds = small_dataset();  // 50 per domain, 10 per class
  const auto split = make_split(ds, 2, 9);
  EXPECT_EQ(split.train_domains, (std::vector<int>{0, 1, 3}));
  EXPECT_EQ(split.test.size(), 50u);
  EXPECT_EQ(split.val.size(), 3u * 5u * 2u);
  EXPECT_EQ(split.train.size(), 3u * 5u * 8u);
  std::set<const Sample*> seen;
  for (const auto* part : {&split.train, &split.val, &split.test})
    for (const Sample* s : *part) EXPECT_TRUE(seen.insert(s).second);
  for (const Sample* s : split.train) EXPECT_NE(s->domain, 2);
  for (const Sample* s : split.val) EXPECT_NE(s->domain, 2);
  for (const Sample* s : split.test) EXPECT_EQ(s->domain, 2);
  EXPECT_EQ(make_split(ds, 2, 9).val, split.val);
  EXPECT_NE(make_split(ds, 2, 10).val, split.val);
}

Predictor oracle() {
  return [](std::span<const Sample* const> xs) {
    std::vector<int> out;
    for (const Sample* s : xs) out.push_back(s->label);
    return out;
  };
}

TEST(LeaveOneOut, OracleScoresOneEverywhere) {
  const auto& ds = small_dataset();
  const std::vector<std::uint64_t> seeds{0, 1};
  const auto table = leave_one_out_eval(ds, [](const HoldoutSplit&, std::uint64_t, std::uint64_t) {
    return TrainOutcome{oracle(), 1.0};
  }, seeds, 0);
  EXPECT_EQ(table.holdouts.size(), 4u);
  EXPECT_EQ(table.per_holdout.size(), 4u);
  EXPECT_EQ(table.cells.size(), 8u);
  for (const auto& c : table.cells) EXPECT_EQ(c.accuracy, 1.0);
  EXPECT_EQ(table.average.mean, 1.0);
  EXPECT_EQ(table.average.std, 0.0);
}

TEST(LeaveOneOut, NeverTrainsOnHeldOutDomain) {
  const auto& ds = small_dataset();
  const std::vector<std::uint64_t> seeds{0, 1, 2};
  int calls = 0;
  leave_one_out_eval(ds, [&](const HoldoutSplit& split, std::uint64_t, std::uint64_t) {
    ++calls;
    for (const Sample* s : split.train) EXPECT_NE(s->domain, split.holdout);
    for (const Sample* s : split.val) EXPECT_NE(s->domain, split.holdout);
    return TrainOutcome{oracle(), 0};
  }, seeds, 0);
  EXPECT_EQ(calls, 12);
}

TEST(LeaveOneOut, WorkerCountDoesNotChangeResults) {
  const auto& ds = small_dataset();
  const std::vector<std::uint64_t> seeds{3, 4};
  const TrainFn noisy = [](const HoldoutSplit&, std::uint64_t run_seed, std::uint64_t) {
    return TrainOutcome{[run_seed](std::span<const Sample* const> xs) {
                          Rng rng(run_seed);
                          std::vector<int> out;
                          for (std::size_t i = 0; i < xs.size(); ++i) out.push_back(static_cast<int>(rng.uniform_int(0, 4)));
                          return out;
                        },
                        0};
  };
  const auto a = leave_one_out_eval(ds, noisy, seeds, 11, {}, 1);
  const auto b = leave_one_out_eval(ds, noisy, seeds, 11, {}, 3);
  ASSERT_EQ(a.cells.size(), b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) EXPECT_EQ(a.cells[i].accuracy, b.cells[i].accuracy);
  EXPECT_EQ(a.average.mean, b.average.mean);
}

TEST(LeaveOneOut, Errors) {
  const TrainFn train = [](const HoldoutSplit&, std::uint64_t, std::uint64_t) { return TrainOutcome{oracle(), 0}; };
  const std::vector<std::uint64_t> seeds{0};
  auto spec = SyntheticDomainSpec::desk_default();
  spec.styles.resize(1);
  spec.samples_per_domain = 10;
  spec.side = 8;
  EXPECT_THROW(leave_one_out_eval(generate_dataset(spec, 0), train, seeds, 0), std::invalid_argument);
  DomainDataset ds = small_dataset();
  std::erase_if(ds.samples, [](const Sample& s) { return s.domain == 1; });
  EXPECT_THROW(leave_one_out_eval(ds, train, seeds, 0), std::invalid_argument);
}

TEST(MeanStd, SampleStandardDeviation) {
  const std::vector<double> v{1, 2, 3, 4};
  const auto r = mean_std(v);
  EXPECT_DOUBLE_EQ(r.mean, 2.5);
  EXPECT_NEAR(r.std, 1.2909944487358056, 1e-15);
  EXPECT_EQ(mean_std(std::vector<double>{7}).std, 0.0);
}

}  // namespace
}  // namespace dcaug
