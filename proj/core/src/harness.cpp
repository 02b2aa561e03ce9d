// SPDX-License-Identifier: Apache-2.0
//
// beamgen: limited-feedback robust beamforming toolkit
// Copyright (C) 2026 the beamgen authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "beamgen/harness.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "beamgen/io.hpp"
#include "beamgen/rng.hpp"

namespace beamgen {

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  int n_workers = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
  n_workers = std::max(1, std::min(n_workers, count));
  if (n_workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int w = 0; w < n_workers; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        const int i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config) {
  std::filesystem::path dir = config.output_dir;
  if (const char* root = std::getenv("BEAMGEN_OUTPUT_ROOT"); root && *root)
    dir = std::filesystem::path(root) / config.output_dir;
  std::filesystem::create_directories(dir);
  return dir;
}

FeedbackContext make_feedback_context(const ExperimentConfig& config) {
  FeedbackContext ctx;
  ctx.q = build_virtual_antenna_matrix(config.channel.n_antennas, config.feedback.n_ports);
  ctx.type1 = build_type1_codebook(config.feedback.n_ports, config.feedback.oversampling);
  ctx.type2_basis = build_type2_basis(config.feedback.n_ports);
  return ctx;
}

SchemeData prepare_scheme_data(const ExperimentConfig& config) {
  config.validate();
  if (config.channel.n_snapshots < 2)
    throw std::invalid_argument("scheme pipelines need at least 2 snapshots per UE");

  SchemeData data;
  data.channel_config = config.channel;
  data.ctx = make_feedback_context(config);
  const ChannelDataset dataset = generate_channel_set(config.channel);

  const int t_total = config.channel.n_snapshots;
  data.test_per_ue = std::max(1, t_total / 10);
  data.train_per_ue = t_total - data.test_per_ue;

  const auto build_record = [&](int ue, int t) {
    SchemeRecord rec;
    rec.ue = ue;
    rec.t = t;
    rec.h_true = dataset.h(ue, t);
    rec.feedback = compute_feedback(rec.h_true, data.ctx.q, data.ctx.type1, ue, t);
    rec.coarse = coarse_estimate(rec.feedback, data.ctx.q, data.ctx.type1);
    rec.type2 = type2_estimate(rec.h_true, data.ctx.q, data.ctx.type2_basis,
                               config.feedback.type2_k_beams, config.feedback.type2_amp_bits,
                               config.feedback.type2_phase_bits);
    return rec;
  };

  data.train.reserve(static_cast<std::size_t>(config.channel.n_ues) * data.train_per_ue);
  data.test.reserve(static_cast<std::size_t>(config.channel.n_ues) * data.test_per_ue);
  for (int ue = 0; ue < config.channel.n_ues; ++ue)
    for (int t = 0; t < data.train_per_ue; ++t) data.train.push_back(build_record(ue, t));
  for (int ue = 0; ue < config.channel.n_ues; ++ue)
    for (int t = data.train_per_ue; t < t_total; ++t) data.test.push_back(build_record(ue, t));
  return data;
}

std::vector<TrainingRecord> offline_training_records(const SchemeData& data,
                                                     double noise_variance,
                                                     std::uint64_t noise_seed) {
  Rng rng(noise_seed);
  const double sigma = std::sqrt(noise_variance);
  std::vector<TrainingRecord> records;
  records.reserve(data.train.size());
  for (const SchemeRecord& rec : data.train) {
    TrainingRecord tr;
    tr.h = rec.h_true;
    if (noise_variance > 0.0)
      for (Eigen::Index a = 0; a < tr.h.size(); ++a) tr.h(a) += rng.cnormal(sigma);
    tr.h_hat = rec.coarse;
    tr.eta = rec.feedback.cqi;
    records.push_back(std::move(tr));
  }
  return records;
}

std::vector<TrainingRecord> online_training_records(const SchemeData& data, int ue,
                                                    int per_ue_size) {
  const int count = per_ue_size > 0 ? std::min(per_ue_size, data.train_per_ue)
                                    : data.train_per_ue;
  std::vector<TrainingRecord> records;
  records.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const SchemeRecord& rec = data.train_record(ue, k);
    records.push_back({rec.type2, rec.coarse, rec.feedback.cqi});
  }
  return records;
}

CvaeModel train_offline_model(const ExperimentConfig& config, const SchemeData& data,
                              double noise_variance, std::uint64_t seed) {
  const std::vector<TrainingRecord> records =
      offline_training_records(data, noise_variance, derive_seed(seed, "offline-noise"));
  TrainHyper hyper = config.cvae.hyper;
  hyper.rng_seed = derive_seed(seed, "offline-train");
  try {
    return train_cvae(records, CvaeVariant::Offline, hyper).model;
  } catch (const std::exception& err) {
    throw std::runtime_error(std::string("offline training failed: ") + err.what());
  }
}

std::vector<CvaeModel> train_online_models(const ExperimentConfig& config,
                                           const SchemeData& data, int per_ue_size,
                                           std::uint64_t seed) {
  const int n_ues = config.channel.n_ues;
  std::vector<CvaeModel> models(static_cast<std::size_t>(n_ues));
  parallel_for(n_ues, config.evaluation.workers, [&](int ue) {
    const std::vector<TrainingRecord> records = online_training_records(data, ue, per_ue_size);
    TrainHyper hyper = config.cvae.hyper;
    hyper.hidden_width = config.cvae.hidden_width_online;
    hyper.rng_seed = derive_seed(seed, "online-train", static_cast<std::uint64_t>(ue));
    try {
      models[static_cast<std::size_t>(ue)] = train_cvae(records, CvaeVariant::Online, hyper).model;
    } catch (const std::exception& err) {
      throw std::runtime_error("online training failed for UE " + std::to_string(ue) + ": " +
                               err.what());
    }
  });
  return models;
}

RefineFn make_offline_refiner(CvaeModel& model) {
  return [&model](int, const SchemeRecord& rec, int count, std::uint64_t seed) {
    return generate_refined_samples(model, rec.coarse, rec.feedback.cqi, count, seed);
  };
}

RefineFn make_online_refiner(std::vector<CvaeModel>& models) {
  return [&models](int ue, const SchemeRecord& rec, int count, std::uint64_t seed) {
    return generate_refined_samples(models[static_cast<std::size_t>(ue)], rec.coarse,
                                    rec.feedback.cqi, count, seed);
  };
}

namespace {

RVector angle_grid() {
  RVector grid(181);
  for (int k = 0; k < grid.size(); ++k) grid(k) = 0.5 * k; // 0..90 degrees
  return grid;
}

SolverOptions solver_options(const ExperimentConfig& config) {
  SolverOptions opts;
  opts.rho = config.solver.rho;
  opts.max_iters = config.solver.max_iters;
  opts.power_tol = config.solver.power_tol;
  opts.rate_tol = config.solver.rate_tol;
  opts.sigma = SolverOptions::uniform_sigma(config.solver.noise_std, config.channel.n_ues);
  return opts;
}

} // namespace

SchemeEvaluation evaluate_scheme(const ExperimentConfig& config, const SchemeData& data,
                                 const RefineFn& refine, std::uint64_t eval_seed,
                                 bool with_beamforming) {
  const int n_ues = config.channel.n_ues;
  const double budget = config.solver.power_budget;
  const SolverOptions opts = solver_options(config);
  SchemeEvaluation eval;

  // Principal-angle CDFs over the held-out records.
  const int n_test = static_cast<int>(data.test.size());
  const int per_record = config.evaluation.cdf_samples_per_record;
  std::vector<double> coarse_angles(static_cast<std::size_t>(n_test));
  std::vector<std::vector<double>> refined_angles(static_cast<std::size_t>(n_test));
  parallel_for(n_test, config.evaluation.workers, [&](int idx) {
    const SchemeRecord& rec = data.test[static_cast<std::size_t>(idx)];
    coarse_angles[static_cast<std::size_t>(idx)] = principal_angle_deg(rec.h_true, rec.coarse);
    const auto samples = refine(rec.ue, rec, per_record,
                                derive_seed(eval_seed, "cdf", static_cast<std::uint64_t>(idx)));
    auto& out = refined_angles[static_cast<std::size_t>(idx)];
    out.reserve(samples.size());
    for (const CVector& s : samples) out.push_back(principal_angle_deg(rec.h_true, s));
  });
  std::vector<double> refined_flat;
  refined_flat.reserve(static_cast<std::size_t>(n_test) * per_record);
  for (const auto& v : refined_angles) refined_flat.insert(refined_flat.end(), v.begin(), v.end());

  eval.coarse_cdf = empirical_cdf(coarse_angles, angle_grid());
  eval.refined_cdf = empirical_cdf(refined_flat, angle_grid());
  eval.coarse_median_deg = median(coarse_angles);
  eval.refined_median_deg = median(refined_flat);
  if (!with_beamforming) return eval;

  // Trial-averaged sum-rates versus the number of channel samples.
  const int n_trials = config.evaluation.n_trials;
  const int n_samples = config.evaluation.n_beamform_samples;
  RMatrix cvae_rates(n_trials, n_samples);
  RMatrix codebook_rates(n_trials, n_samples);
  RVector wmmse_rates(n_trials);
  RVector ezf_rates(n_trials);

  parallel_for(n_trials, config.evaluation.workers, [&](int trial) {
    Rng slot_rng(derive_seed(eval_seed, "trial-slot", static_cast<std::uint64_t>(trial)));
    const int k = static_cast<int>(slot_rng.uniform_int(static_cast<std::uint64_t>(data.test_per_ue)));

    ChannelSet h_true(static_cast<std::size_t>(n_ues));
    ChannelSet coarse(static_cast<std::size_t>(n_ues));
    std::vector<const SchemeRecord*> recs(static_cast<std::size_t>(n_ues));
    for (int ue = 0; ue < n_ues; ++ue) {
      const SchemeRecord& rec = data.test_record(ue, k);
      recs[static_cast<std::size_t>(ue)] = &rec;
      h_true[static_cast<std::size_t>(ue)] = rec.h_true;
      coarse[static_cast<std::size_t>(ue)] = rec.coarse;
    }

    const WmmseResult wm = wmmse(coarse, budget, opts);
    wmmse_rates(trial) = sum_rate(h_true, wm.beams, opts.sigma);
    ezf_rates(trial) = sum_rate(h_true, ezf(coarse, budget, opts.sigma), opts.sigma);

    const std::uint64_t trial_tag = static_cast<std::uint64_t>(trial) * 4096u;
    std::vector<std::vector<CVector>> cvae_stream(static_cast<std::size_t>(n_ues));
    std::vector<std::vector<CVector>> codebook_stream(static_cast<std::size_t>(n_ues));
    for (int ue = 0; ue < n_ues; ++ue) {
      const SchemeRecord& rec = *recs[static_cast<std::size_t>(ue)];
      cvae_stream[static_cast<std::size_t>(ue)] = refine(
          ue, rec, n_samples, derive_seed(eval_seed, "cvae-stream", trial_tag + ue));
      codebook_stream[static_cast<std::size_t>(ue)] =
          sample_codebook_channel(rec.feedback, data.ctx.q, data.ctx.type1,
                                  config.feedback.sample_sigma, n_samples,
                                  derive_seed(eval_seed, "codebook-stream", trial_tag + ue));
    }
    const auto stream_of = [n_ues](const std::vector<std::vector<CVector>>& store) {
      return [&store, n_ues](int r) {
        ChannelSet sample(static_cast<std::size_t>(n_ues));
        for (int ue = 0; ue < n_ues; ++ue)
          sample[static_cast<std::size_t>(ue)] =
              store[static_cast<std::size_t>(ue)][static_cast<std::size_t>(r)];
        return sample;
      };
    };

    const StochasticResult on_cvae =
        stochastic_wmmse(stream_of(cvae_stream), n_samples, budget, opts, &wm.beams, &h_true);
    const StochasticResult on_codebook = stochastic_wmmse(stream_of(codebook_stream), n_samples,
                                                          budget, opts, &wm.beams, &h_true);
    for (int r = 0; r < n_samples; ++r) {
      cvae_rates(trial, r) = on_cvae.trace[static_cast<std::size_t>(r)].sum_rate;
      codebook_rates(trial, r) = on_codebook.trace[static_cast<std::size_t>(r)].sum_rate;
    }
  });

  eval.sumrate_cvae = cvae_rates.colwise().mean();
  eval.sumrate_codebook = codebook_rates.colwise().mean();
  eval.sumrate_wmmse_coarse = wmmse_rates.mean();
  eval.sumrate_ezf = ezf_rates.mean();
  eval.max_sumrate_cvae = eval.sumrate_cvae.maxCoeff();
  return eval;
}

MotivationDetail run_motivation_detail(const ExperimentConfig& config) {
  config.validate();
  const int n_trials = config.evaluation.n_trials;
  const int n_samples = config.evaluation.n_beamform_samples;
  const int n_ues = config.channel.n_ues;
  const double sigma = config.feedback.sample_sigma;
  const double budget = config.solver.power_budget;
  const SolverOptions opts = solver_options(config);

  MotivationDetail detail;
  detail.stochastic.resize(n_trials, n_samples);
  detail.wmmse.resize(n_trials);

  parallel_for(n_trials, config.evaluation.workers, [&](int trial) {
    ChannelConfig cc = config.channel;
    cc.n_snapshots = 1;
    cc.rng_seed = derive_seed(config.master_seed, "motivation-channel",
                              static_cast<std::uint64_t>(trial));
    const ChannelSet h_true = generate_channel_set(cc).slot(0);

    Rng stream_rng(derive_seed(config.master_seed, "motivation-stream",
                               static_cast<std::uint64_t>(trial)));
    std::vector<ChannelSet> samples(static_cast<std::size_t>(n_samples));
    ChannelSet mean(static_cast<std::size_t>(n_ues),
                    CVector::Zero(config.channel.n_antennas));
    for (int r = 0; r < n_samples; ++r) {
      ChannelSet sample(static_cast<std::size_t>(n_ues));
      for (int ue = 0; ue < n_ues; ++ue) {
        CVector x = h_true[static_cast<std::size_t>(ue)];
        for (Eigen::Index a = 0; a < x.size(); ++a) x(a) += stream_rng.cnormal(sigma);
        mean[static_cast<std::size_t>(ue)] += x / static_cast<double>(n_samples);
        sample[static_cast<std::size_t>(ue)] = std::move(x);
      }
      samples[static_cast<std::size_t>(r)] = std::move(sample);
    }

    const WmmseResult wm = wmmse(mean, budget, opts);
    detail.wmmse(trial) = sum_rate(h_true, wm.beams, opts.sigma);

    const StochasticResult st = stochastic_wmmse(
        [&samples](int r) { return samples[static_cast<std::size_t>(r)]; }, n_samples, budget,
        opts, nullptr, &h_true);
    for (int r = 0; r < n_samples; ++r)
      detail.stochastic(trial, r) = st.trace[static_cast<std::size_t>(r)].sum_rate;
  });
  return detail;
}

namespace {

class ReportBuilder {
public:
  ReportBuilder(const ExperimentConfig& config)
      : config_(config),
        dir_(resolve_output_dir(config)),
        start_(std::chrono::steady_clock::now()) {
    report_.master_seed = config.master_seed;
  }

  const std::filesystem::path& dir() const { return dir_; }
  std::string comment() const { return config_comment(config_); }

  std::filesystem::path file(const std::string& name) {
    const std::filesystem::path path = dir_ / name;
    report_.files.push_back(path.string());
    return path;
  }

  void scalar(const std::string& key, double value) { report_.scalars[key] = value; }

  ExperimentReport finish() {
    report_.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    for (const std::string& f : report_.files)
      if (!std::filesystem::exists(f))
        throw std::runtime_error("manifest file missing: " + f);
    save_report(report_, dir_ / "report.json");
    return report_;
  }

private:
  const ExperimentConfig& config_;
  std::filesystem::path dir_;
  std::chrono::steady_clock::time_point start_;
  ExperimentReport report_;
};

void write_sumrate_csv(const std::filesystem::path& path, const std::string& comment,
                       const SchemeEvaluation& eval) {
  CsvWriter csv(path);
  csv.comment(comment);
  csv.header({"n_samples", "sumrate_cvae", "sumrate_codebook", "sumrate_wmmse_coarse",
              "sumrate_ezf"});
  for (int r = 0; r < eval.sumrate_cvae.size(); ++r) {
    csv.begin_row();
    csv.field(static_cast<long long>(r + 1));
    csv.field(eval.sumrate_cvae(r));
    csv.field(eval.sumrate_codebook(r));
    csv.field(eval.sumrate_wmmse_coarse);
    csv.field(eval.sumrate_ezf);
    csv.end_row();
  }
}

} // namespace

ExperimentReport run_motivation(const ExperimentConfig& config) {
  ReportBuilder rb(config);
  const MotivationDetail detail = run_motivation_detail(config);
  const RVector stochastic_avg = detail.stochastic.colwise().mean();
  const double wmmse_avg = detail.wmmse.mean();

  CsvWriter csv(rb.file("fig1.csv"));
  csv.comment(rb.comment());
  csv.header({"n_samples", "sumrate_stochastic", "sumrate_wmmse"});
  for (int r = 0; r < stochastic_avg.size(); ++r) {
    csv.begin_row();
    csv.field(static_cast<long long>(r + 1));
    csv.field(stochastic_avg(r));
    csv.field(wmmse_avg);
    csv.end_row();
  }

  int crossing = -1;
  for (int r = 0; r < stochastic_avg.size(); ++r)
    if (stochastic_avg(r) >= wmmse_avg) {
      crossing = r + 1;
      break;
    }
  rb.scalar("sumrate_stochastic_final", stochastic_avg(stochastic_avg.size() - 1));
  rb.scalar("sumrate_wmmse", wmmse_avg);
  rb.scalar("crossing_iteration", static_cast<double>(crossing));
  return rb.finish();
}

ExperimentReport run_offline_scheme(const ExperimentConfig& config) {
  ReportBuilder rb(config);
  const SchemeData data = prepare_scheme_data(config);
  CvaeModel model = train_offline_model(config, data, 0.0, config.master_seed);
  const SchemeEvaluation eval = evaluate_scheme(
      config, data, make_offline_refiner(model), derive_seed(config.master_seed, "offline-eval"));

  save_model(model, rb.file("offline_model.bgvm"));
  save_cdf_csv({{"coarse", eval.coarse_cdf}, {"refined", eval.refined_cdf}},
               rb.file("offline_cdf.csv"), rb.comment());
  write_sumrate_csv(rb.file("offline_sumrate.csv"), rb.comment(), eval);

  rb.scalar("coarse_median_deg", eval.coarse_median_deg);
  rb.scalar("refined_median_deg", eval.refined_median_deg);
  rb.scalar("max_sumrate_cvae", eval.max_sumrate_cvae);
  rb.scalar("sumrate_wmmse_coarse", eval.sumrate_wmmse_coarse);
  rb.scalar("sumrate_ezf", eval.sumrate_ezf);
  return rb.finish();
}

std::vector<double> table_trend_values(const ExperimentConfig& config, const SchemeData& data,
                                       std::uint64_t seed) {
  std::vector<double> values;
  values.reserve(config.evaluation.table_train_sizes.size());
  for (std::size_t idx = 0; idx < config.evaluation.table_train_sizes.size(); ++idx) {
    const int size = config.evaluation.table_train_sizes[idx];
    std::vector<CvaeModel> models =
        train_online_models(config, data, size, derive_seed(seed, "table-train", idx));
    const SchemeEvaluation eval = evaluate_scheme(config, data, make_online_refiner(models),
                                                  derive_seed(seed, "table-eval", idx));
    values.push_back(eval.max_sumrate_cvae);
  }
  return values;
}

ExperimentReport run_online_scheme(const ExperimentConfig& config) {
  ReportBuilder rb(config);
  const SchemeData data = prepare_scheme_data(config);
  std::vector<CvaeModel> models = train_online_models(config, data, 0, config.master_seed);
  const SchemeEvaluation eval = evaluate_scheme(
      config, data, make_online_refiner(models), derive_seed(config.master_seed, "online-eval"));

  save_cdf_csv({{"coarse", eval.coarse_cdf}, {"refined", eval.refined_cdf}},
               rb.file("online_cdf.csv"), rb.comment());
  write_sumrate_csv(rb.file("online_sumrate.csv"), rb.comment(), eval);

  const std::vector<double> table =
      table_trend_values(config, data, derive_seed(config.master_seed, "table"));
  CsvWriter table_csv(rb.file("table1.csv"));
  table_csv.comment(rb.comment());
  table_csv.header({"train_size", "max_sum_rate"});
  for (std::size_t i = 0; i < table.size(); ++i) {
    table_csv.begin_row();
    table_csv.field(static_cast<long long>(config.evaluation.table_train_sizes[i]));
    table_csv.field(table[i]);
    table_csv.end_row();
  }

  rb.scalar("coarse_median_deg", eval.coarse_median_deg);
  rb.scalar("refined_median_deg", eval.refined_median_deg);
  rb.scalar("max_sumrate_cvae", eval.max_sumrate_cvae);
  rb.scalar("sumrate_wmmse_coarse", eval.sumrate_wmmse_coarse);
  rb.scalar("sumrate_ezf", eval.sumrate_ezf);
  return rb.finish();
}

ExperimentReport run_table_trend(const ExperimentConfig& config) {
  ReportBuilder rb(config);
  const SchemeData data = prepare_scheme_data(config);
  const std::vector<double> table =
      table_trend_values(config, data, derive_seed(config.master_seed, "table"));
  CsvWriter csv(rb.file("table1.csv"));
  csv.comment(rb.comment());
  csv.header({"train_size", "max_sum_rate"});
  for (std::size_t i = 0; i < table.size(); ++i) {
    csv.begin_row();
    csv.field(static_cast<long long>(config.evaluation.table_train_sizes[i]));
    csv.field(table[i]);
    csv.end_row();
    rb.scalar("max_sum_rate_" + std::to_string(config.evaluation.table_train_sizes[i]),
              table[i]);
  }
  return rb.finish();
}

ExperimentReport run_scheme_comparison(const ExperimentConfig& config) {
  ReportBuilder rb(config);
  const SchemeData data = prepare_scheme_data(config);

  std::vector<LabelledCdf> cdfs;
  std::vector<std::pair<std::string, SchemeEvaluation>> evals;
  for (std::size_t idx = 0; idx < config.evaluation.noise_variances.size(); ++idx) {
    const double variance = config.evaluation.noise_variances[idx];
    CvaeModel model = train_offline_model(config, data, variance,
                                          derive_seed(config.master_seed, "compare-offline", idx));
    SchemeEvaluation eval =
        evaluate_scheme(config, data, make_offline_refiner(model),
                        derive_seed(config.master_seed, "compare-offline-eval", idx));
    const std::string label = "offline_sigma" + format_double(variance);
    rb.scalar("refined_median_deg_" + label, eval.refined_median_deg);
    if (idx == 0) {
      cdfs.push_back({"coarse", eval.coarse_cdf});
      rb.scalar("coarse_median_deg", eval.coarse_median_deg);
      rb.scalar("sumrate_wmmse_coarse", eval.sumrate_wmmse_coarse);
      rb.scalar("sumrate_ezf", eval.sumrate_ezf);
    }
    cdfs.push_back({label, eval.refined_cdf});
    evals.emplace_back(label, std::move(eval));
  }

  std::vector<CvaeModel> online_models =
      train_online_models(config, data, 0, derive_seed(config.master_seed, "compare-online"));
  SchemeEvaluation online_eval =
      evaluate_scheme(config, data, make_online_refiner(online_models),
                      derive_seed(config.master_seed, "compare-online-eval"));
  cdfs.push_back({"online", online_eval.refined_cdf});
  rb.scalar("refined_median_deg_online", online_eval.refined_median_deg);
  evals.emplace_back("online", std::move(online_eval));

  save_cdf_csv(cdfs, rb.file("compare_cdf.csv"), rb.comment());

  CsvWriter csv(rb.file("compare_sumrate.csv"));
  csv.comment(rb.comment());
  csv.header({"n_samples", "sum_rate", "series_label"});
  for (const auto& [label, eval] : evals)
    for (int r = 0; r < eval.sumrate_cvae.size(); ++r) {
      csv.begin_row();
      csv.field(static_cast<long long>(r + 1));
      csv.field(eval.sumrate_cvae(r));
      csv.field(label);
      csv.end_row();
    }
  const SchemeEvaluation& base = evals.front().second;
  for (int r = 0; r < base.sumrate_codebook.size(); ++r) {
    csv.begin_row();
    csv.field(static_cast<long long>(r + 1));
    csv.field(base.sumrate_codebook(r));
    csv.field("codebook");
    csv.end_row();
  }
  for (int r = 0; r < base.sumrate_codebook.size(); ++r) {
    csv.begin_row();
    csv.field(static_cast<long long>(r + 1));
    csv.field(base.sumrate_wmmse_coarse);
    csv.field("wmmse_coarse");
    csv.end_row();
  }
  for (int r = 0; r < base.sumrate_codebook.size(); ++r) {
    csv.begin_row();
    csv.field(static_cast<long long>(r + 1));
    csv.field(base.sumrate_ezf);
    csv.field("ezf");
    csv.end_row();
  }
  return rb.finish();
}

void save_report(const ExperimentReport& report, const std::filesystem::path& path) {
  nlohmann::json j;
  j["files"] = report.files;
  j["scalars"] = report.scalars;
  j["wall_seconds"] = report.wall_seconds;
  j["master_seed"] = report.master_seed;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write report: " + path.string());
  out << j.dump(2) << "\n";
}

} // namespace beamgen
