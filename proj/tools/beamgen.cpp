// SPDX-License-Identifier: Apache-2.0
//
// beamgen: limited-feedback robust beamforming toolkit
// Copyright (C) 2026 the beamgen authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Command-line front end: dataset generation, feedback simulation, model
// training, beamforming runs, and the figure/table reproduction pipelines.

#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "beamgen/harness.hpp"
#include "beamgen/io.hpp"
#include "beamgen/rng.hpp"

namespace fs = std::filesystem;
using namespace beamgen;

namespace {

ExperimentConfig load_config_or_default(const std::string& config_path, bool paper_scale) {
  if (!config_path.empty()) return load_experiment_config(config_path);
  return paper_scale ? paper_scale_config() : desk_scale_config();
}

void print_report(const ExperimentReport& report) {
  std::printf("wrote %zu files in %.1fs (master seed %llu)\n", report.files.size(),
              report.wall_seconds, static_cast<unsigned long long>(report.master_seed));
  for (const std::string& f : report.files) std::printf("  %s\n", f.c_str());
  for (const auto& [key, value] : report.scalars)
    std::printf("  %s = %s\n", key.c_str(), format_double(value).c_str());
}

int run_gen_channels(const ExperimentConfig& config) {
  const fs::path dir = resolve_output_dir(config);
  const ChannelDataset dataset = generate_channel_set(config.channel);
  const fs::path path = dir / "channels.bgch";
  save_dataset(dataset, path);
  std::printf("wrote %s (%d UEs x %d snapshots x %d antennas)\n", path.c_str(),
              dataset.n_ues(), dataset.n_snapshots(), dataset.n_antennas());
  return 0;
}

int run_gen_feedback(const ExperimentConfig& config, const std::string& dataset_path) {
  const fs::path dir = resolve_output_dir(config);
  const FeedbackContext ctx = make_feedback_context(config);
  const ChannelDataset dataset = dataset_path.empty()
                                     ? generate_channel_set(config.channel)
                                     : load_dataset(dataset_path);

  std::vector<FeedbackRecord> records;
  ChannelDataset coarse_dump(dataset.config());
  ChannelDataset type2_dump(dataset.config());
  records.reserve(dataset.snapshot_count());
  for (int ue = 0; ue < dataset.n_ues(); ++ue)
    for (int t = 0; t < dataset.n_snapshots(); ++t) {
      const CVector h = dataset.h(ue, t);
      const FeedbackRecord rec = compute_feedback(h, ctx.q, ctx.type1, ue, t);
      records.push_back(rec);
      coarse_dump.ue_block(ue).col(t) = coarse_estimate(rec, ctx.q, ctx.type1);
      type2_dump.ue_block(ue).col(t) =
          type2_estimate(h, ctx.q, ctx.type2_basis, config.feedback.type2_k_beams,
                         config.feedback.type2_amp_bits, config.feedback.type2_phase_bits);
    }

  save_feedback_csv(records, dir / "feedback.csv", config_comment(config));
  save_dataset(coarse_dump, dir / "coarse_estimates.bgch");
  save_dataset(type2_dump, dir / "type2_estimates.bgch");
  std::printf("wrote %s and estimate containers (%zu records)\n",
              (dir / "feedback.csv").c_str(), records.size());
  return 0;
}

int run_train(const ExperimentConfig& config, const std::string& scheme) {
  const fs::path dir = resolve_output_dir(config);
  const SchemeData data = prepare_scheme_data(config);
  if (scheme == "offline") {
    const std::vector<TrainingRecord> records = offline_training_records(
        data, 0.0, derive_seed(config.master_seed, "offline-noise"));
    TrainHyper hyper = config.cvae.hyper;
    hyper.rng_seed = derive_seed(config.master_seed, "offline-train");
    const TrainResult result = train_cvae(records, CvaeVariant::Offline, hyper);
    save_model(result.model, dir / "offline_model.bgvm");
    CsvWriter csv(dir / "offline_loss.csv");
    csv.comment(config_comment(config));
    csv.header({"epoch", "loss"});
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
      csv.begin_row();
      csv.field(static_cast<long long>(e + 1));
      csv.field(result.epoch_loss[e]);
      csv.end_row();
    }
    std::printf("wrote %s\n", (dir / "offline_model.bgvm").c_str());
    return 0;
  }
  // online: one model per UE
  CsvWriter csv(dir / "online_loss.csv");
  csv.comment(config_comment(config));
  csv.header({"ue", "epoch", "loss"});
  for (int ue = 0; ue < config.channel.n_ues; ++ue) {
    TrainHyper hyper = config.cvae.hyper;
    hyper.hidden_width = config.cvae.hidden_width_online;
    hyper.rng_seed = derive_seed(config.master_seed, "online-train",
                                 static_cast<std::uint64_t>(ue));
    const TrainResult result =
        train_cvae(online_training_records(data, ue, 0), CvaeVariant::Online, hyper);
    save_model(result.model, dir / ("online_model_ue" + std::to_string(ue) + ".bgvm"));
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
      csv.begin_row();
      csv.field(static_cast<long long>(ue));
      csv.field(static_cast<long long>(e + 1));
      csv.field(result.epoch_loss[e]);
      csv.end_row();
    }
  }
  std::printf("wrote per-UE models under %s\n", dir.c_str());
  return 0;
}

int run_beamform(const ExperimentConfig& config, const std::string& solver,
                 const std::string& model_path, int time_index, bool in_bits) {
  const fs::path dir = resolve_output_dir(config);
  const SchemeData data = prepare_scheme_data(config);
  const int n_ues = config.channel.n_ues;
  const int slot = time_index >= 0 ? std::min(time_index, data.test_per_ue - 1) : 0;

  ChannelSet h_true(static_cast<std::size_t>(n_ues)), coarse(static_cast<std::size_t>(n_ues));
  std::vector<const SchemeRecord*> recs(static_cast<std::size_t>(n_ues));
  for (int ue = 0; ue < n_ues; ++ue) {
    const SchemeRecord& rec = data.test_record(ue, slot);
    recs[static_cast<std::size_t>(ue)] = &rec;
    h_true[static_cast<std::size_t>(ue)] = rec.h_true;
    coarse[static_cast<std::size_t>(ue)] = rec.coarse;
  }

  SolverOptions opts;
  opts.rho = config.solver.rho;
  opts.max_iters = config.solver.max_iters;
  opts.power_tol = config.solver.power_tol;
  opts.rate_tol = config.solver.rate_tol;
  opts.sigma = SolverOptions::uniform_sigma(config.solver.noise_std, n_ues);
  const double budget = config.solver.power_budget;

  std::vector<SsumTracePoint> trace;
  if (solver == "wmmse") {
    const WmmseResult res = wmmse(coarse, budget, opts);
    for (std::size_t k = 0; k < res.rate_trace.size(); ++k)
      trace.push_back({static_cast<int>(k + 1),
                       sum_rate(h_true, res.beams, opts.sigma), res.beams.total_power(), 0.0});
    std::printf("wmmse: %d iterations, converged=%d\n", res.iterations, res.converged);
  } else if (solver == "ezf") {
    const BeamformerSet beams = ezf(coarse, budget, opts.sigma);
    trace.push_back({1, sum_rate(h_true, beams, opts.sigma), beams.total_power(), 0.0});
  } else { // stochastic
    const WmmseResult warm = wmmse(coarse, budget, opts);
    const int n_samples = config.evaluation.n_beamform_samples;
    StochasticResult res;
    if (!model_path.empty()) {
      CvaeModel model = load_model(model_path);
      std::vector<std::vector<CVector>> stream(static_cast<std::size_t>(n_ues));
      for (int ue = 0; ue < n_ues; ++ue)
        stream[static_cast<std::size_t>(ue)] = generate_refined_samples(
            model, recs[static_cast<std::size_t>(ue)]->coarse,
            recs[static_cast<std::size_t>(ue)]->feedback.cqi, n_samples,
            derive_seed(config.master_seed, "cli-cvae-stream", static_cast<std::uint64_t>(ue)));
      res = stochastic_wmmse(
          [&stream, n_ues](int r) {
            ChannelSet sample(static_cast<std::size_t>(n_ues));
            for (int ue = 0; ue < n_ues; ++ue)
              sample[static_cast<std::size_t>(ue)] =
                  stream[static_cast<std::size_t>(ue)][static_cast<std::size_t>(r)];
            return sample;
          },
          n_samples, budget, opts, &warm.beams, &h_true);
    } else {
      res = stochastic_wmmse(
          [&](int r) {
            ChannelSet sample(static_cast<std::size_t>(n_ues));
            for (int ue = 0; ue < n_ues; ++ue) {
              const SchemeRecord& rec = *recs[static_cast<std::size_t>(ue)];
              sample[static_cast<std::size_t>(ue)] = sample_codebook_channel(
                  rec.feedback, data.ctx.q, data.ctx.type1, config.feedback.sample_sigma, 1,
                  derive_seed(config.master_seed, "cli-cb-stream",
                              static_cast<std::uint64_t>(r) * 4096u + ue))[0];
            }
            return sample;
          },
          n_samples, budget, opts, &warm.beams, &h_true);
    }
    trace = res.trace;
  }

  const fs::path path = dir / (solver + "_trace.csv");
  save_trace_csv(trace, path, config_comment(config), in_bits);
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

int run_export_csv(const ExperimentConfig& config, const std::string& input,
                   const std::string& output) {
  const ChannelDataset dataset = load_dataset(input);
  export_dataset_csv(dataset, output, config_comment(config));
  std::printf("wrote %s\n", output.c_str());
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"limited-feedback robust beamforming toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  bool paper_scale = false;
  app.add_option("-c,--config", config_path, "JSON experiment configuration");
  app.add_flag("--paper-scale", paper_scale,
               "use the full-scale default configuration instead of the desk-scale one");

  auto* gen_channels = app.add_subcommand("gen-channels", "generate a channel dataset");
  auto* gen_feedback =
      app.add_subcommand("gen-feedback", "simulate the limited-feedback loop over a dataset");
  std::string dataset_path;
  gen_feedback->add_option("-d,--dataset", dataset_path, "existing .bgch dataset (optional)");

  auto* train = app.add_subcommand("train-cvae", "train the channel refinement model");
  std::string scheme = "offline";
  train->add_option("--scheme", scheme, "offline or online")
      ->check(CLI::IsMember({"offline", "online"}));

  auto* beamform = app.add_subcommand("beamform", "run one beamforming solver on a test slot");
  std::string solver = "wmmse";
  std::string model_path;
  int time_index = 0;
  bool in_bits = false;
  beamform->add_option("--solver", solver, "wmmse, stochastic or ezf")
      ->check(CLI::IsMember({"wmmse", "stochastic", "ezf"}));
  beamform->add_option("--model", model_path, "refinement model for the stochastic solver");
  beamform->add_option("--time-index", time_index, "test slot index");
  beamform->add_flag("--bits", in_bits, "report rates in bits per channel use");

  auto* reproduce = app.add_subcommand("reproduce", "run a full experiment pipeline");
  std::string target;
  reproduce->add_option("target", target, "fig1, fig-offline, fig-online, table1, fig-compare")
      ->required()
      ->check(CLI::IsMember({"fig1", "fig-offline", "fig-online", "table1", "fig-compare"}));

  auto* export_csv = app.add_subcommand("export-csv", "convert a binary container to CSV");
  std::string export_in, export_out;
  export_csv->add_option("input", export_in, "input .bgch container")->required();
  export_csv->add_option("output", export_out, "output .csv path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const ExperimentConfig config = load_config_or_default(config_path, paper_scale);
    if (gen_channels->parsed()) return run_gen_channels(config);
    if (gen_feedback->parsed()) return run_gen_feedback(config, dataset_path);
    if (train->parsed()) return run_train(config, scheme);
    if (beamform->parsed()) return run_beamform(config, solver, model_path, time_index, in_bits);
    if (export_csv->parsed()) return run_export_csv(config, export_in, export_out);
    if (reproduce->parsed()) {
      ExperimentReport report;
      if (target == "fig1") report = run_motivation(config);
      else if (target == "fig-offline") report = run_offline_scheme(config);
      else if (target == "fig-online") report = run_online_scheme(config);
      else if (target == "table1") report = run_table_trend(config);
      else report = run_scheme_comparison(config);
      print_report(report);
      return 0;
    }
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 0;
}
