// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

#include "dcaug/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "dcaug/checkpoint.hpp"
#include "dcaug/imaging.hpp"
#include "dcaug/png_io.hpp"

namespace dcaug {

namespace fs = std::filesystem;
using nlohmann::json;

int worker_count() {
  const char* env = std::getenv("DCAUG_WORKERS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1 || n > 1024) throw std::invalid_argument("DCAUG_WORKERS must be an integer in [1, 1024]");
  return static_cast<int>(n);
}

DomainDataset load_or_generate(const DatasetConfig& cfg) {
  if (!cfg.path.empty()) return load_dataset(cfg.path);
  auto spec = SyntheticDomainSpec::desk_default();
  spec.side = cfg.side;
  spec.samples_per_domain = cfg.samples_per_domain;
  return generate_dataset(spec, cfg.seed);
}

TrainerConfig trainer_config(const ExperimentConfig& cfg, MethodVariant method, double lambda) {
  TrainerConfig t;
  t.reward = {lambda, method};
  t.space = cfg.space;
  t.weak = cfg.weak;
  t.hidden = cfg.hidden;
  t.lr = cfg.lr;
  t.weight_decay = cfg.weight_decay;
  t.ema_beta = cfg.ema_beta;
  return t;
}

namespace {

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string fmt_acc(double v) { return fmt("%.6f", v); }
std::string fmt_lambda(double v) { return fmt("%g", v); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << csv_field(fields[i]);
  out << '\n';
}

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  return out;
}

/// Rows as header-keyed maps.
std::vector<std::map<std::string, std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
  const auto header = parse_csv_line(line);
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = parse_csv_line(line);
    if (fields.size() != header.size()) throw std::runtime_error(path.string() + ": ragged row");
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = fields[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

struct Pools {
  std::vector<SampleRefs> by_domain;  // indexed by training-domain position
  std::vector<int> quota;
};

Pools make_pools(const HoldoutSplit& split, const ExperimentConfig& cfg, MethodVariant method) {
  if (split.train.empty()) throw std::invalid_argument("train: empty training split");
  Pools p;
  p.by_domain.resize(split.train_domains.size());
  p.quota = cfg.domain_quota(static_cast<int>(split.train_domains.size()), method);
  for (const Sample* s : split.train) {
    const auto it = std::find(split.train_domains.begin(), split.train_domains.end(), s->domain);
    if (it == split.train_domains.end()) throw std::invalid_argument("train: sample from a non-training domain");
    p.by_domain[static_cast<std::size_t>(it - split.train_domains.begin())].push_back(s);
  }
  for (std::size_t d = 0; d < p.by_domain.size(); ++d)
    if (p.by_domain[d].empty()) throw std::invalid_argument("train: training domain " + std::to_string(split.train_domains[d]) + " has no samples");
  return p;
}

void draw_batch(const Pools& pools, std::uint64_t run_seed, std::int64_t step, std::vector<MinibatchItem>& items) {
  items.clear();
  Rng pick(derive_seed(run_seed, {static_cast<std::uint64_t>(step), 0xba7c}));
  for (std::size_t d = 0; d < pools.by_domain.size(); ++d) {
    const SampleRefs& pool = pools.by_domain[d];
    for (int k = 0; k < pools.quota[d]; ++k) {
      const Sample* s = pool[static_cast<std::size_t>(pick.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
      items.push_back({&s->image, s->label, static_cast<int>(d), s->domain});
    }
  }
}

int input_size(const HoldoutSplit& split) {
  const Image& img = split.train.front()->image;
  return img.width() * img.height() * Image::kChannels;
}

}  // namespace

TrainedRun train_run(const HoldoutSplit& split, const ExperimentConfig& cfg, MethodVariant method, double lambda,
                     int num_classes, std::uint64_t run_seed, const TrainHooks& hooks) {
  const TrainerConfig tcfg = trainer_config(cfg, method, lambda);
  const Pools pools = make_pools(split, cfg, method);
  TrainedRun run;
  run.state.emplace(tcfg, input_size(split), num_classes, static_cast<int>(split.train_domains.size()),
                    derive_seed(run_seed, {0x1417}));
  TrainerState& state = *run.state;
  int batch_total = 0;
  for (int q : pools.quota) batch_total += q;
  run.steps_per_epoch = std::max<std::int64_t>(
      1, (static_cast<std::int64_t>(split.train.size()) + batch_total - 1) / batch_total);
  const auto every = std::max<std::int64_t>(1, std::lround(cfg.checkpoint_every * cfg.steps));
  const std::uint64_t aug_seed = derive_seed(run_seed, {0xa06});

  run.val_accuracy = -1;
  run.ema_val_accuracy = -1;
  run.losses.reserve(static_cast<std::size_t>(cfg.steps));
  std::vector<MinibatchItem> items;
  for (std::int64_t step = 0; step < cfg.steps; ++step) {
    draw_batch(pools, run_seed, step, items);
    if (hooks.on_batch) hooks.on_batch(items, step);
    StepResult res = train_minibatch(items, state, tcfg, aug_seed, step);
    run.losses.push_back(res.label_loss);
    run.records.insert(run.records.end(), std::make_move_iterator(res.records.begin()),
                       std::make_move_iterator(res.records.end()));
    const bool last = step + 1 == cfg.steps;
    if ((step + 1) % every == 0 || last) {
      const Classifier& deployed = final_classifier(state, tcfg.reward);
      const double acc = split.val.empty() ? 0.0 : accuracy(deployed, split.val);
      if (acc > run.val_accuracy) {
        run.val_accuracy = acc;
        run.selected = deployed;
        run.selected_step = step + 1;
      }
      const double ema_acc = split.val.empty() ? 0.0 : accuracy(state.label.ema.shadow, split.val);
      if (ema_acc > run.ema_val_accuracy) {
        run.ema_val_accuracy = ema_acc;
        run.ema_selected = state.label.ema.shadow;
        run.ema_selected_step = step + 1;
      }
    }
  }
  return run;
}

double trailing_mean(std::span<const double> losses, double window) {
  if (losses.empty()) throw std::invalid_argument("trailing_mean: empty history");
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(window * static_cast<double>(losses.size()))));
  double sum = 0;
  for (std::size_t i = losses.size() - n; i < losses.size(); ++i) sum += losses[i];
  return sum / static_cast<double>(n);
}

Image method_augment(const Image& img, const Sample& meta, int domain_index, const TrainerState& state,
                     const TrainerConfig& tcfg, Rng& rng) {
  Image weak = weak_augment(img, tcfg.weak, rng);
  const MethodVariant v = tcfg.reward.variant;
  if (v == MethodVariant::PolicyERM) return weak;
  auto [wider, t] = wider_augment(weak, SearchSpace(tcfg.space, img.width()), rng);
  if (v == MethodVariant::PolicyTA) return std::move(wider);
  const SampleMeta sm{meta.label, domain_index >= 0 ? std::optional<int>(domain_index) : std::nullopt};
  return select(weak, wider, sm, state.models(), tcfg.reward).first;
}

namespace {

json record_json(const SelectionRecord& r) {
  json j{{"step", r.step}, {"index", r.index}, {"domain", r.domain}, {"label", r.label},
         {"decision", std::string(decision_name(r.decision))}};
  if (r.weak) j["weak"] = {r.weak->r_div, r.weak->r_con, r.weak->r};
  if (r.wider) j["wider"] = {r.wider->r_div, r.wider->r_con, r.wider->r};
  if (r.wider_transform) {
    j["op"] = std::string(op_name(r.wider_transform->op));
    j["magnitude"] = r.wider_transform->magnitude ? json(*r.wider_transform->magnitude) : json(nullptr);
  }
  return j;
}

std::string run_name(MethodVariant m, const std::string& holdout, std::uint64_t seed) {
  return std::string(method_tag(m)) + "_" + holdout + "_s" + std::to_string(seed);
}

double measure_affinity(const HoldoutSplit& split, const ExperimentConfig& cfg, const TrainedRun& run,
                        const TrainerConfig& tcfg, int num_classes, std::uint64_t run_seed) {
  DiversityConfig dc;
  dc.hidden = cfg.hidden;
  dc.lr = cfg.lr;
  dc.weight_decay = cfg.weight_decay;
  dc.steps = cfg.steps;
  dc.batch_size = 0;
  for (int q : cfg.domain_quota(static_cast<int>(split.train_domains.size()), tcfg.reward.variant)) dc.batch_size += q;
  const Classifier clean = diversity(identity_policy(), "identity", split.train, num_classes, dc, derive_seed(run_seed, {0xc1ea})).model;
  std::vector<Sample> augmented;
  augmented.reserve(split.val.size());
  for (std::size_t i = 0; i < split.val.size(); ++i) {
    const Sample& s = *split.val[i];
    const auto it = std::find(split.train_domains.begin(), split.train_domains.end(), s.domain);
    Rng rng(derive_seed(run_seed, {0xaff, i}));
    augmented.push_back({method_augment(s.image, s, static_cast<int>(it - split.train_domains.begin()), *run.state, tcfg, rng),
                         s.label, s.domain, s.id});
  }
  return accuracy(clean, split.val) - accuracy(clean, refs(augmented));
}

std::size_t index_of(std::span<const int> v, int x) {
  return static_cast<std::size_t>(std::find(v.begin(), v.end(), x) - v.begin());
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const DomainDataset& ds, int workers) {
  cfg.validate(ds.num_domains);
  {
    std::vector<std::uint64_t> s = cfg.seeds;
    std::sort(s.begin(), s.end());
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) throw ConfigError("seeds", "values must be distinct");
  }
  const fs::path out(cfg.out);
  fs::create_directories(out);
  if (cfg.log_selections) fs::create_directories(out / "selections");
  if (cfg.save_checkpoints) fs::create_directories(out / "checkpoints");

  RunResult result;
  for (int d = 0; d < ds.num_domains; ++d)
    result.domain_names.push_back(ds.domain_names.empty() ? "domain" + std::to_string(d) : ds.domain_names[static_cast<std::size_t>(d)]);
  std::vector<int> holdouts = cfg.holdouts;
  if (holdouts.empty())
    for (int d = 0; d < ds.num_domains; ++d) holdouts.push_back(d);

  json index = json::array();
  std::mutex index_mu;
  auto add_log = [&](const std::string& file, MethodVariant method, int holdout, std::uint64_t seed, std::size_t cell,
                     std::int64_t steps_per_epoch) {
    std::lock_guard lock(index_mu);
    index.push_back({{"file", file}, {"method", std::string(method_tag(method))},
                     {"heldout", result.domain_names[static_cast<std::size_t>(holdout)]}, {"seed", seed},
                     {"cell", cell}, {"steps_per_epoch", steps_per_epoch}});
  };

  // LabelRewardEmaFinal follows the LabelReward trajectory exactly, so when
  // both are requested it reuses that training and only deploys the EMA.
  const auto pos = [&](MethodVariant m) {
    return static_cast<std::size_t>(std::find(cfg.methods.begin(), cfg.methods.end(), m) - cfg.methods.begin());
  };
  const bool share_teacher = pos(MethodVariant::LabelReward) < cfg.methods.size() &&
                             pos(MethodVariant::LabelRewardEmaFinal) < cfg.methods.size();
  std::vector<std::size_t> order(cfg.methods.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (share_teacher && pos(MethodVariant::LabelRewardEmaFinal) < pos(MethodVariant::LabelReward))
    std::swap(order[pos(MethodVariant::LabelRewardEmaFinal)], order[pos(MethodVariant::LabelReward)]);
  struct Shared {
    Classifier model;
    double val_accuracy = 0;
    std::int64_t steps_per_epoch = 1;
  };
  const std::size_t cells = holdouts.size() * cfg.seeds.size();
  std::vector<Shared> shared(cells);

  result.methods.resize(cfg.methods.size());
  for (const std::size_t mi : order) {
    const MethodVariant method = cfg.methods[mi];
    MethodResult& mr = result.methods[mi];
    mr.method = method;
    mr.lambda = cfg.lambda;
    const TrainerConfig tcfg = trainer_config(cfg, method, cfg.lambda);
    mr.rejection.assign(cells, 0);
    mr.diversity.assign(cells, 0);
    if (cfg.affinity_diversity) mr.affinity.assign(cells, 0);
    const MethodResult* label_result = share_teacher ? &result.methods[pos(MethodVariant::LabelReward)] : nullptr;
    const bool reuse = share_teacher && method == MethodVariant::LabelRewardEmaFinal;

    const TrainFn train = [&](const HoldoutSplit& split, std::uint64_t run_seed, std::uint64_t seed) {
      const std::size_t cell = index_of(holdouts, split.holdout) * cfg.seeds.size() +
                               static_cast<std::size_t>(std::find(cfg.seeds.begin(), cfg.seeds.end(), seed) - cfg.seeds.begin());
      const std::string name = run_name(method, result.domain_names[static_cast<std::size_t>(split.holdout)], seed);
      if (reuse) {
        const Shared& sh = shared[cell];
        mr.rejection[cell] = label_result->rejection[cell];
        mr.diversity[cell] = label_result->diversity[cell];
        if (cfg.affinity_diversity) mr.affinity[cell] = label_result->affinity[cell];
        if (cfg.log_selections) {
          const std::string from = run_name(MethodVariant::LabelReward, result.domain_names[static_cast<std::size_t>(split.holdout)], seed);
          fs::copy_file(out / "selections" / (from + ".jsonl"), out / "selections" / (name + ".jsonl"),
                        fs::copy_options::overwrite_existing);
          add_log(name + ".jsonl", method, split.holdout, seed, cell, sh.steps_per_epoch);
        }
        if (cfg.save_checkpoints) save_checkpoint(out / "checkpoints" / (name + ".ckpt"), sh.model);
        return TrainOutcome{[model = sh.model](std::span<const Sample* const> xs) { return predict(model, xs); },
                            sh.val_accuracy};
      }
      TrainedRun run = train_run(split, cfg, method, cfg.lambda, ds.num_classes, run_seed);
      std::int64_t wider = 0;
      for (const auto& r : run.records) wider += r.decision == Decision::Wider;
      mr.rejection[cell] = static_cast<double>(wider) / static_cast<double>(run.records.size());
      mr.diversity[cell] = trailing_mean(run.losses);
      if (cfg.affinity_diversity) mr.affinity[cell] = measure_affinity(split, cfg, run, tcfg, ds.num_classes, run_seed);
      if (share_teacher && method == MethodVariant::LabelReward)
        shared[cell] = {std::move(run.ema_selected), run.ema_val_accuracy, run.steps_per_epoch};
      if (cfg.log_selections) {
        auto log = open_out(out / "selections" / (name + ".jsonl"));
        for (const auto& r : run.records) log << record_json(r).dump() << '\n';
        add_log(name + ".jsonl", method, split.holdout, seed, cell, run.steps_per_epoch);
      }
      if (cfg.save_checkpoints) save_checkpoint(out / "checkpoints" / (name + ".ckpt"), run.selected);
      return TrainOutcome{[model = std::move(run.selected)](std::span<const Sample* const> xs) { return predict(model, xs); },
                          run.val_accuracy};
    };
    mr.table = leave_one_out_eval(ds, train, cfg.seeds, cfg.seed, holdouts, workers, cfg.val_fraction);
  }

  // results.csv
  {
    auto csv = open_out(out / "results.csv");
    write_csv_row(csv, {"method", "variant", "lambda", "space", "heldout", "seed", "accuracy", "val_accuracy"});
    for (const auto& mr : result.methods)
      for (const auto& c : mr.table.cells)
        write_csv_row(csv, {std::string(method_display(mr.method)), std::string(method_tag(mr.method)),
                            uses_selection(mr.method) ? fmt_lambda(mr.lambda) : "", std::string(variant_name(cfg.space)),
                            result.domain_names[static_cast<std::size_t>(c.holdout)], std::to_string(c.seed),
                            fmt_acc(c.accuracy), fmt_acc(c.val_accuracy)});
  }
  // affinity_diversity.csv
  {
    auto csv = open_out(out / "affinity_diversity.csv");
    write_csv_row(csv, {"method", "variant", "heldout", "seed", "affinity", "diversity", "wider_rate"});
    for (const auto& mr : result.methods)
      for (std::size_t i = 0; i < mr.table.cells.size(); ++i) {
        const auto& c = mr.table.cells[i];
        write_csv_row(csv, {std::string(method_display(mr.method)), std::string(method_tag(mr.method)),
                            result.domain_names[static_cast<std::size_t>(c.holdout)], std::to_string(c.seed),
                            mr.affinity.empty() ? "" : fmt_acc(mr.affinity[i]), fmt_acc(mr.diversity[i]),
                            fmt_acc(mr.rejection[i])});
      }
  }
  // summary.json
  {
    json methods = json::array();
    for (const auto& mr : result.methods) {
      json per = json::object();
      for (std::size_t h = 0; h < mr.table.holdouts.size(); ++h)
        per[result.domain_names[static_cast<std::size_t>(mr.table.holdouts[h])]] = {
            {"mean", mr.table.per_holdout[h].mean}, {"std", mr.table.per_holdout[h].std}};
      json m{{"method", std::string(method_display(mr.method))},
             {"variant", std::string(method_tag(mr.method))},
             {"space", std::string(variant_name(cfg.space))},
             {"per_heldout", per},
             {"average", {{"mean", mr.table.average.mean}, {"std", mr.table.average.std}}},
             {"seeds", cfg.seeds}};
      m["lambda"] = uses_selection(mr.method) ? json(mr.lambda) : json(nullptr);
      methods.push_back(m);
    }
    auto js = open_out(out / "summary.json");
    js << json{{"methods", methods}}.dump(2) << '\n';
  }
  {
    auto js = open_out(out / "config.json");
    js << to_json(cfg).dump(2) << '\n';
  }
  if (cfg.log_selections) {
    std::sort(index.begin(), index.end(), [](const json& a, const json& b) {
      return std::make_pair(a["method"].get<std::string>(), a["cell"].get<std::size_t>()) <
             std::make_pair(b["method"].get<std::string>(), b["cell"].get<std::size_t>());
    });
    auto js = open_out(out / "selections" / "index.json");
    js << index.dump(2) << '\n';
  }
  return result;
}

RunResult run_experiment(const ExperimentConfig& cfg, int workers) {
  return run_experiment(cfg, load_or_generate(cfg.dataset), workers);
}

SweepResult sweep_lambda(const ExperimentConfig& cfg, std::span<const double> lambdas, int workers) {
  if (lambdas.empty()) throw ConfigError("lambdas", "at least one value required");
  const DomainDataset ds = load_or_generate(cfg.dataset);
  SweepResult sr;
  for (const double lambda : lambdas) {
    ExperimentConfig c = cfg;
    c.lambda = lambda;
    c.out = (fs::path(cfg.out) / ("lambda_" + fmt_lambda(lambda))).string();
    const RunResult rr = run_experiment(c, ds, workers);
    for (const auto& mr : rr.methods)
      for (std::size_t h = 0; h < mr.table.holdouts.size(); ++h) {
        SweepRow row{mr.method, lambda, mr.table.holdouts[h], 0, mr.table.per_holdout[h].mean};
        std::vector<double> val;
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s) val.push_back(mr.table.cells[h * cfg.seeds.size() + s].val_accuracy);
        row.val_accuracy = mean_std(val).mean;
        sr.grid.push_back(row);
      }
  }
  for (const auto& row : sr.grid) {
    auto it = std::find_if(sr.selected.begin(), sr.selected.end(),
                           [&](const SweepRow& s) { return s.method == row.method && s.holdout == row.holdout; });
    if (it == sr.selected.end())
      sr.selected.push_back(row);
    else if (row.val_accuracy > it->val_accuracy || (row.val_accuracy == it->val_accuracy && row.lambda < it->lambda))
      *it = row;
  }

  const fs::path out(cfg.out);
  fs::create_directories(out);
  std::vector<std::string> names = ds.domain_names;
  auto name = [&](int d) { return names.empty() ? "domain" + std::to_string(d) : names[static_cast<std::size_t>(d)]; };
  {
    auto csv = open_out(out / "sweep.csv");
    write_csv_row(csv, {"method", "variant", "lambda", "heldout", "val_accuracy", "accuracy"});
    for (const auto& r : sr.grid)
      write_csv_row(csv, {std::string(method_display(r.method)), std::string(method_tag(r.method)), fmt_lambda(r.lambda),
                          name(r.holdout), fmt_acc(r.val_accuracy), fmt_acc(r.accuracy)});
  }
  {
    auto csv = open_out(out / "selected.csv");
    write_csv_row(csv, {"method", "variant", "heldout", "lambda", "val_accuracy", "accuracy"});
    std::map<MethodVariant, std::vector<double>> avg;
    for (const auto& r : sr.selected) {
      write_csv_row(csv, {std::string(method_display(r.method)), std::string(method_tag(r.method)), name(r.holdout),
                          fmt_lambda(r.lambda), fmt_acc(r.val_accuracy), fmt_acc(r.accuracy)});
      avg[r.method].push_back(r.accuracy);
    }
    for (const auto& [m, v] : avg)
      write_csv_row(csv, {std::string(method_display(m)), std::string(method_tag(m)), "average", "", "", fmt_acc(mean_std(v).mean)});
  }
  return sr;
}

std::vector<fs::path> write_report(const fs::path& dir) {
  std::vector<fs::path> written;
  if (!fs::is_directory(dir)) throw std::runtime_error("report: " + dir.string() + " is not a directory");

  if (fs::exists(dir / "selections" / "index.json")) {
    std::ifstream in(dir / "selections" / "index.json");
    const json index = json::parse(in);
    struct Agg {
      std::int64_t wider = 0, weak = 0;
    };
    std::map<std::pair<std::string, int>, Agg> totals;
    const fs::path series_path = dir / "rejection_series.csv";
    auto series = open_out(series_path);
    write_csv_row(series, {"method", "heldout", "seed", "epoch", "domain", "wider", "weak", "ratio"});
    for (const auto& entry : index) {
      std::ifstream log(dir / "selections" / entry["file"].get<std::string>());
      if (!log) throw std::runtime_error("report: missing selection log " + entry["file"].get<std::string>());
      std::vector<SelectionRecord> records;
      std::string line;
      while (std::getline(log, line)) {
        const json j = json::parse(line);
        SelectionRecord r;
        r.step = j["step"];
        r.domain = j["domain"];
        r.decision = j["decision"] == "wider" ? Decision::Wider : Decision::Weak;
        records.push_back(r);
      }
      const auto st = rejection_series(records, entry["steps_per_epoch"].get<std::int64_t>());
      const std::string method = entry["method"];
      for (const auto& c : st.series)
        write_csv_row(series, {method, entry["heldout"], std::to_string(entry["seed"].get<std::uint64_t>()), std::to_string(c.epoch),
                               std::to_string(c.domain), std::to_string(c.wider), std::to_string(c.weak), fmt_acc(c.ratio())});
      for (const auto& d : st.domains) {
        auto& a = totals[{method, d.domain}];
        a.wider += d.wider;
        a.weak += d.weak;
      }
    }
    written.push_back(series_path);
    const fs::path summary_path = dir / "rejection_summary.csv";
    auto summary = open_out(summary_path);
    write_csv_row(summary, {"method", "domain", "wider", "weak", "ratio"});
    for (const auto& [key, a] : totals) {
      const RejectionCell c{-1, key.second, a.wider, a.weak};
      write_csv_row(summary, {key.first, std::to_string(key.second), std::to_string(a.wider), std::to_string(a.weak), fmt_acc(c.ratio())});
    }
    written.push_back(summary_path);
  }

  if (fs::exists(dir / "affinity_diversity.csv")) {
    struct Agg {
      std::string display;
      std::vector<double> affinity, diversity;
    };
    std::map<std::string, Agg> by_method;
    std::vector<std::string> order;
    for (const auto& row : read_csv(dir / "affinity_diversity.csv")) {
      const std::string tag = row.at("variant");
      if (!by_method.contains(tag)) order.push_back(tag);
      auto& a = by_method[tag];
      a.display = row.at("method");
      if (!row.at("affinity").empty()) a.affinity.push_back(std::stod(row.at("affinity")));
      a.diversity.push_back(std::stod(row.at("diversity")));
    }
    const fs::path path = dir / "scatter.csv";
    auto csv = open_out(path);
    write_csv_row(csv, {"method", "variant", "affinity", "diversity", "runs"});
    for (const auto& tag : order) {
      const auto& a = by_method[tag];
      write_csv_row(csv, {a.display, tag, a.affinity.empty() ? "" : fmt_acc(mean_std(a.affinity).mean),
                          fmt_acc(mean_std(a.diversity).mean), std::to_string(a.diversity.size())});
    }
    written.push_back(path);
  }

  if (fs::exists(dir / "sweep.csv")) {
    std::map<std::pair<std::string, double>, std::vector<double>> curve;
    std::map<std::string, std::string> display;
    for (const auto& row : read_csv(dir / "sweep.csv")) {
      curve[{row.at("variant"), std::stod(row.at("lambda"))}].push_back(std::stod(row.at("accuracy")));
      display[row.at("variant")] = row.at("method");
    }
    const fs::path path = dir / "lambda_curve.csv";
    auto csv = open_out(path);
    write_csv_row(csv, {"method", "variant", "lambda", "accuracy", "std"});
    for (const auto& [key, v] : curve) {
      const auto ms = mean_std(v);
      write_csv_row(csv, {display[key.first], key.first, fmt_lambda(key.second), fmt_acc(ms.mean), fmt_acc(ms.std)});
    }
    written.push_back(path);
  }
  if (written.empty()) throw std::runtime_error("report: no run or sweep outputs in " + dir.string());
  return written;
}

std::vector<BenchRow> bench_step(const ExperimentConfig& cfg, const DomainDataset& ds) {
  cfg.validate(ds.num_domains);
  const int holdout = cfg.holdouts.empty() ? 0 : cfg.holdouts.front();
  const HoldoutSplit split = make_split(ds, holdout, derive_seed(cfg.seed, {0x5917}), cfg.val_fraction);
  const std::vector<MethodVariant> variants{MethodVariant::PolicyERM,   MethodVariant::PolicyTA,
                                            MethodVariant::DomainReward, MethodVariant::LabelReward,
                                            MethodVariant::LabelRewardEmaFinal, MethodVariant::AblationDomainDivLabelCon,
                                            MethodVariant::AblationEmaBoth};
  constexpr int kWarmup = 3;
  struct Bench {
    TrainerConfig tcfg;
    Pools pools;
    TrainerState state;
    std::vector<double> times;
  };
  std::vector<Bench> benches;
  for (const auto v : variants) {
    const TrainerConfig tcfg = trainer_config(cfg, v, cfg.lambda);
    benches.push_back({tcfg, make_pools(split, cfg, v),
                       TrainerState(tcfg, input_size(split), ds.num_classes,
                                    static_cast<int>(split.train_domains.size()), cfg.seed),
                       {}});
  }
  // Variants take turns step by step so drift in machine load hits all alike.
  std::vector<MinibatchItem> items;
  for (int step = 0; step < kWarmup + cfg.bench_steps; ++step)
    for (auto& b : benches) {
      draw_batch(b.pools, cfg.seed, step, items);
      const auto t0 = std::chrono::steady_clock::now();
      train_minibatch(items, b.state, b.tcfg, cfg.seed, step);
      const auto t1 = std::chrono::steady_clock::now();
      if (step >= kWarmup) b.times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
  std::vector<BenchRow> rows;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    auto& times = benches[i].times;
    std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2), times.end());
    rows.push_back({variants[i], times[times.size() / 2], 0});
  }
  for (auto& r : rows) r.ratio = r.median_ms / rows.front().median_ms;
  return rows;
}

namespace {

Image framed(const Image& img, std::array<std::uint8_t, 3> colour, int scale) {
  Image out = resized_crop(img, 0, 0, img.width(), img.height(), img.width() * scale, img.height() * scale);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      if (x < 2 || y < 2 || x >= out.width() - 2 || y >= out.height() - 2)
        for (int c = 0; c < 3; ++c) out.at(x, y, c) = colour[static_cast<std::size_t>(c)];
  return out;
}

}  // namespace

void dump_grid(const ExperimentConfig& cfg, const DomainDataset& ds, const fs::path& png, int rows) {
  cfg.validate(ds.num_domains);
  if (rows < 1) throw std::invalid_argument("dump-grid: rows must be >= 1");
  const int holdout = cfg.holdouts.empty() ? 0 : cfg.holdouts.front();
  const std::uint64_t run_seed = run_seed_for(cfg.seed, holdout, cfg.seeds.front());
  const HoldoutSplit split = make_split(ds, holdout, derive_seed(run_seed, {0x5917}), cfg.val_fraction);
  const MethodVariant method = cfg.methods.front();
  const TrainedRun run = train_run(split, cfg, method, cfg.lambda, ds.num_classes, run_seed);
  const TrainerConfig tcfg = trainer_config(cfg, method, cfg.lambda);
  const RewardModels models = run.state->models();

  constexpr int kScale = 3;
  std::vector<Image> tiles;
  auto csv = open_out(fs::path(png).replace_extension(".csv"));
  write_csv_row(csv, {"row", "label", "domain", "op", "magnitude", "decision", "r_weak", "r_wider"});
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(rows), split.val.size());
  for (std::size_t i = 0; i < n; ++i) {
    // Spread rows across the validation set so every source domain shows up.
    const Sample& s = *split.val[i * split.val.size() / n];
    const auto it = std::find(split.train_domains.begin(), split.train_domains.end(), s.domain);
    Rng rng(derive_seed(run_seed, {0x9d1d, i}));
    const Image weak = weak_augment(s.image, tcfg.weak, rng);
    const auto [wider, t] = wider_augment(weak, SearchSpace(tcfg.space, s.image.width()), rng);
    const SampleMeta meta{s.label, uses_domain_classifier(method) ? std::optional<int>(static_cast<int>(it - split.train_domains.begin()))
                                                                  : std::nullopt};
    const auto [chosen, rec] = select(weak, wider, meta, models, tcfg.reward);
    const bool kept = rec.decision == Decision::Wider;
    tiles.push_back(framed(s.image, {255, 255, 255}, kScale));
    tiles.push_back(framed(weak, {255, 255, 255}, kScale));
    tiles.push_back(framed(wider, kept ? std::array<std::uint8_t, 3>{0, 200, 0} : std::array<std::uint8_t, 3>{220, 0, 0}, kScale));
    write_csv_row(csv, {std::to_string(i), std::to_string(s.label), std::to_string(s.domain), std::string(op_name(t.op)),
                        t.magnitude ? fmt("%.4f", *t.magnitude) : "", std::string(decision_name(rec.decision)),
                        rec.weak ? fmt("%.6f", rec.weak->r) : "", rec.wider ? fmt("%.6f", rec.wider->r) : ""});
  }
  write_png(png, contact_sheet(tiles, 3));
}

}  // namespace dcaug
