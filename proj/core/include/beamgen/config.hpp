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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "beamgen/channel.hpp"
#include "beamgen/cvae.hpp"

namespace beamgen {

struct FeedbackConfig {
  int n_ports = 8;
  int oversampling = 4;      ///< beam-grid oversampling: M = n_ports * oversampling
  int type2_k_beams = 4;
  int type2_amp_bits = 3;
  int type2_phase_bits = 4;
  double sample_sigma = 0.1; ///< spread of the codebook empirical distribution

  void validate() const;
};

struct SolverConfig {
  double rho = 0.01;
  int max_iters = 200;
  double power_tol = 1e-8;
  double rate_tol = 1e-6;
  double noise_std = 1.0;    ///< per-UE receiver noise std (uniform)
  double power_budget = 10.0;

  void validate() const;
};

struct CvaeTrainConfig {
  TrainHyper hyper;          ///< hidden_width applies to the offline variant
  int hidden_width_online = 0; ///< 0 selects the variant default
  std::string variant = "offline";

  void validate() const;
};

struct EvaluationConfig {
  int n_trials = 20;            ///< beamforming evaluation trials
  int n_beamform_samples = 100; ///< channel samples per stochastic solver run
  int cdf_samples_per_record = 4;
  std::vector<double> noise_variances = {0.0, 0.2, 0.4}; ///< train-set injection study
  std::vector<int> table_train_sizes = {100, 500, 1000}; ///< per-UE online sizes
  int workers = 0; ///< worker threads for trial fan-out; 0 = hardware default

  void validate() const;
};

struct ExperimentConfig {
  ChannelConfig channel;
  FeedbackConfig feedback;
  SolverConfig solver;
  CvaeTrainConfig cvae;
  EvaluationConfig evaluation;
  std::string output_dir = "out";
  std::uint64_t master_seed = 1;

  void validate() const;
};

/// N_A = 16, 4 UEs, 5000 snapshots each, compact network widths: the full
/// offline pipeline finishes in minutes on one machine.
ExperimentConfig desk_scale_config();

/// N_A = 32, 10 UEs, 10000 snapshots each, width-512 offline network.
ExperimentConfig paper_scale_config();

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void save_experiment_config(const ExperimentConfig& config, const std::filesystem::path& path);
std::string experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const std::string& text);

/// Stable content hash of the configuration (FNV-1a over the canonical JSON).
std::uint64_t config_hash(const ExperimentConfig& config);

/// "config_hash=<hex> master_seed=<seed>", prepended to every emitted CSV.
std::string config_comment(const ExperimentConfig& config);

} // namespace beamgen
