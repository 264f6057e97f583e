// Copyright 2026 The DCAug Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment CLI: generate, run, sweep, report, bench, dump-grid.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "dcaug/harness.hpp"
#include "dcaug/png_io.hpp"

namespace fs = std::filesystem;
using namespace dcaug;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string variant;
  std::optional<double> lambda;
  std::string space;
  std::string holdout;
  std::optional<int> steps;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "root seed");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--variant", f.variant, "method: domain|label|teach-label|ablation-div-domain-con-label|ablation-ema-both|ta|erm");
  cmd->add_option("--lambda", f.lambda, "balancing coefficient in [0, 1]");
  cmd->add_option("--space", f.space, "search space")->check(CLI::IsMember({"default", "wide", "wider"}));
  cmd->add_option("--holdout", f.holdout, "held-out domain, by name or index");
  cmd->add_option("--steps", f.steps, "training steps");
}

int resolve_domain(const std::string& s, const DomainDataset& ds) {
  for (std::size_t i = 0; i < ds.domain_names.size(); ++i)
    if (ds.domain_names[i] == s) return static_cast<int>(i);
  try {
    std::size_t used = 0;
    const int d = std::stoi(s, &used);
    if (used == s.size() && d >= 0 && d < ds.num_domains) return d;
  } catch (const std::exception&) {
  }
  std::string known;
  for (const auto& n : ds.domain_names) known += (known.empty() ? "" : "|") + n;
  throw std::invalid_argument("--holdout: unknown domain '" + s + "' (expected " + known + " or an index)");
}

ExperimentConfig resolve(const CommonFlags& f) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (!f.out.empty()) cfg.out = f.out;
  if (!f.variant.empty()) cfg.methods = {parse_method(f.variant)};
  if (f.lambda) cfg.lambda = *f.lambda;
  if (!f.space.empty()) cfg.space = parse_space_variant(f.space);
  if (f.steps) cfg.steps = *f.steps;
  cfg.validate();
  return cfg;
}

void apply_holdout(const CommonFlags& f, ExperimentConfig& cfg, const DomainDataset& ds) {
  if (!f.holdout.empty()) cfg.holdouts = {resolve_domain(f.holdout, ds)};
}

void print_run(const RunResult& r) {
  for (const auto& m : r.methods) {
    std::printf("%-32s", std::string(method_display(m.method)).c_str());
    for (std::size_t h = 0; h < m.table.holdouts.size(); ++h)
      std::printf("  %s %.4f", r.domain_names[static_cast<std::size_t>(m.table.holdouts[h])].c_str(), m.table.per_holdout[h].mean);
    std::printf("  | avg %.4f +- %.4f\n", m.table.average.mean, m.table.average.std);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward-based rejection of extreme augmentations: desk-scale experiments"};
  app.require_subcommand(1);

  CommonFlags gen_f, run_f, sweep_f, bench_f, grid_f;
  std::string report_dir;
  std::vector<double> sweep_lambdas;
  int grid_rows = 12;

  auto* gen = app.add_subcommand("generate", "write the synthetic dataset and a preview sheet");
  add_common(gen, gen_f);
  auto* run = app.add_subcommand("run", "leave-one-out training and evaluation");
  add_common(run, run_f);
  auto* sweep = app.add_subcommand("sweep", "one run per lambda, best lambda by source validation");
  add_common(sweep, sweep_f);
  sweep->add_option("--lambdas", sweep_lambdas, "lambda grid (default from config)");
  auto* report = app.add_subcommand("report", "figure data from a run or sweep directory");
  report->add_option("dir", report_dir, "run or sweep directory")->required()->check(CLI::ExistingDirectory);
  auto* bench = app.add_subcommand("bench", "median step time per method");
  add_common(bench, bench_f);
  auto* grid = app.add_subcommand("dump-grid", "PNG grid of kept and rejected wider candidates");
  add_common(grid, grid_f);
  grid->add_option("--rows", grid_rows, "samples in the grid")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      ExperimentConfig cfg = resolve(gen_f);
      if (gen_f.seed) cfg.dataset.seed = *gen_f.seed;
      const DomainDataset ds = load_or_generate(cfg.dataset);
      const fs::path out(cfg.out);
      fs::create_directories(out);
      save_dataset(out / "dataset.bin", ds);
      std::vector<Image> tiles;
      for (int d = 0; d < ds.num_domains; ++d)
        for (int k = 0; k < ds.num_classes; ++k)
          for (const auto& s : ds.samples)
            if (s.domain == d && s.label == k) {
              tiles.push_back(s.image);
              break;
            }
      write_png(out / "preview.png", contact_sheet(tiles, ds.num_classes));
      std::printf("%zu samples, %d domains, %d classes, digest %016llx -> %s\n", ds.size(), ds.num_domains,
                  ds.num_classes, static_cast<unsigned long long>(dataset_digest(ds)), (out / "dataset.bin").c_str());
    } else if (run->parsed()) {
      ExperimentConfig cfg = resolve(run_f);
      const DomainDataset ds = load_or_generate(cfg.dataset);
      apply_holdout(run_f, cfg, ds);
      print_run(run_experiment(cfg, ds, worker_count()));
      std::printf("results in %s\n", cfg.out.c_str());
    } else if (sweep->parsed()) {
      ExperimentConfig cfg = resolve(sweep_f);
      if (!sweep_lambdas.empty()) cfg.lambdas = sweep_lambdas;
      if (!sweep_f.holdout.empty()) apply_holdout(sweep_f, cfg, load_or_generate(cfg.dataset));
      const SweepResult sr = sweep_lambda(cfg, cfg.lambdas, worker_count());
      for (const auto& row : sr.selected)
        std::printf("%-32s holdout %d  lambda %g  val %.4f  test %.4f\n", std::string(method_display(row.method)).c_str(),
                    row.holdout, row.lambda, row.val_accuracy, row.accuracy);
      std::printf("results in %s\n", cfg.out.c_str());
    } else if (report->parsed()) {
      for (const auto& p : write_report(report_dir)) std::printf("%s\n", p.c_str());
    } else if (bench->parsed()) {
      ExperimentConfig cfg = resolve(bench_f);
      const DomainDataset ds = load_or_generate(cfg.dataset);
      apply_holdout(bench_f, cfg, ds);
      for (const auto& r : bench_step(cfg, ds))
        std::printf("%-32s %8.3f ms  x%.2f\n", std::string(method_display(r.method)).c_str(), r.median_ms, r.ratio);
    } else if (grid->parsed()) {
      ExperimentConfig cfg = resolve(grid_f);
      const DomainDataset ds = load_or_generate(cfg.dataset);
      apply_holdout(grid_f, cfg, ds);
      fs::create_directories(cfg.out);
      const fs::path png = fs::path(cfg.out) / "grid.png";
      dump_grid(cfg, ds, png, grid_rows);
      std::printf("%s\n", png.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
