// SPDX-License-Identifier: Apache-2.0
//
// beamgen: limited-feedback robust beamforming toolkit
// Copyright (C) 2026 the beamgen authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "beamgen/beamforming.hpp"
#include "beamgen/channel.hpp"
#include "beamgen/config.hpp"
#include "beamgen/cvae.hpp"
#include "beamgen/feedback.hpp"
#include "beamgen/metrics.hpp"

namespace beamgen {

struct ExperimentReport {
  std::vector<std::string> files; ///< every file written by the run
  std::map<std::string, double> scalars;
  double wall_seconds = 0.0;
  std::uint64_t master_seed = 0;
};

/// Index-parallel fan-out with deterministic, index-ordered results;
/// workers = 0 picks the hardware concurrency.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

/// Resolves config.output_dir, honoring the BEAMGEN_OUTPUT_ROOT environment
/// override, and creates the directory.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

struct FeedbackContext {
  VirtualAntennaMatrix q;
  Codebook type1;
  Codebook type2_basis;
};

FeedbackContext make_feedback_context(const ExperimentConfig& config);

/// One simulated (UE, slot): the true channel, its feedback, and the derived
/// estimates.
struct SchemeRecord {
  int ue = 0;
  int t = 0;
  CVector h_true;
  FeedbackRecord feedback;
  CVector coarse;
  CVector type2;
};

/// Generated dataset plus feedback for every snapshot, temporally split 9:1
/// into train and test per UE (the last tenth of each UE's series is test).
struct SchemeData {
  ChannelConfig channel_config;
  FeedbackContext ctx;
  std::vector<SchemeRecord> train; ///< UE-major, then time
  std::vector<SchemeRecord> test;
  int train_per_ue = 0;
  int test_per_ue = 0;

  const SchemeRecord& train_record(int ue, int k) const {
    return train[static_cast<std::size_t>(ue) * train_per_ue + k];
  }
  const SchemeRecord& test_record(int ue, int k) const {
    return test[static_cast<std::size_t>(ue) * test_per_ue + k];
  }
};

SchemeData prepare_scheme_data(const ExperimentConfig& config);

/// Offline records: targets are the true channels, optionally corrupted by
/// complex Gaussian noise of the given per-entry variance.
std::vector<TrainingRecord> offline_training_records(const SchemeData& data,
                                                     double noise_variance,
                                                     std::uint64_t noise_seed);

/// Online records of one UE: targets are the high-resolution estimates;
/// per_ue_size = 0 takes every training snapshot.
std::vector<TrainingRecord> online_training_records(const SchemeData& data, int ue,
                                                    int per_ue_size);

CvaeModel train_offline_model(const ExperimentConfig& config, const SchemeData& data,
                              double noise_variance, std::uint64_t seed);

/// Per-UE models trained on that UE's records with the high-resolution
/// estimates as targets; per_ue_size = 0 uses every training record.
std::vector<CvaeModel> train_online_models(const ExperimentConfig& config,
                                           const SchemeData& data, int per_ue_size,
                                           std::uint64_t seed);

/// Produces `count` refined channel samples for one test record.
using RefineFn =
    std::function<std::vector<CVector>(int ue, const SchemeRecord& rec, int count,
                                       std::uint64_t seed)>;

RefineFn make_offline_refiner(CvaeModel& model);
RefineFn make_online_refiner(std::vector<CvaeModel>& models);

struct SchemeEvaluation {
  CdfCurve coarse_cdf;
  CdfCurve refined_cdf;
  double coarse_median_deg = 0.0;
  double refined_median_deg = 0.0;
  RVector sumrate_cvae;     ///< trial-averaged, indexed by sample count - 1
  RVector sumrate_codebook; ///< stochastic solver on the codebook distribution
  double sumrate_wmmse_coarse = 0.0;
  double sumrate_ezf = 0.0;
  double max_sumrate_cvae = 0.0;
};

/// Shared test-set evaluation: principal-angle CDFs of refined vs coarse
/// estimates, and trial-averaged sum-rates of the stochastic solver fed by
/// refined samples vs codebook samples, against WMMSE-on-coarse and EZF.
/// with_beamforming = false computes the CDF part only.
SchemeEvaluation evaluate_scheme(const ExperimentConfig& config, const SchemeData& data,
                                 const RefineFn& refine, std::uint64_t eval_seed,
                                 bool with_beamforming = true);

struct MotivationDetail {
  RMatrix stochastic; ///< n_trials x n_samples, true-channel sum-rate per iteration
  RVector wmmse;      ///< n_trials, WMMSE on the noisy sample mean
};

MotivationDetail run_motivation_detail(const ExperimentConfig& config);

// Pipeline entry points; each writes plot-ready CSV files (header row plus a
// comment carrying the config hash and master seed) and returns the manifest.
ExperimentReport run_motivation(const ExperimentConfig& config);
ExperimentReport run_offline_scheme(const ExperimentConfig& config);
ExperimentReport run_online_scheme(const ExperimentConfig& config);
ExperimentReport run_table_trend(const ExperimentConfig& config);
ExperimentReport run_scheme_comparison(const ExperimentConfig& config);

void save_report(const ExperimentReport& report, const std::filesystem::path& path);

/// Per-UE training-size sweep behind the table trend: max trial-averaged
/// sum-rate of the stochastic solver on refined samples, per training size.
std::vector<double> table_trend_values(const ExperimentConfig& config, const SchemeData& data,
                                       std::uint64_t seed);

} // namespace beamgen
