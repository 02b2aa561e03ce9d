// SPDX-License-Identifier: Apache-2.0
//
// beamgen: limited-feedback robust beamforming toolkit
// Copyright (C) 2026 the beamgen authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "beamgen/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "beamgen/rng.hpp"

namespace beamgen {

using nlohmann::json;

void FeedbackConfig::validate() const {
  if (n_ports < 1) throw std::invalid_argument("n_ports must be >= 1");
  if (oversampling < 1) throw std::invalid_argument("oversampling must be >= 1");
  if (type2_k_beams < 1 || type2_k_beams > n_ports)
    throw std::invalid_argument("type2_k_beams must lie in [1, n_ports]");
  if (sample_sigma < 0.0) throw std::invalid_argument("sample_sigma must be >= 0");
}

void SolverConfig::validate() const {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be > 0");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(power_tol > 0.0) || !(rate_tol > 0.0))
    throw std::invalid_argument("tolerances must be > 0");
  if (!(noise_std > 0.0)) throw std::invalid_argument("noise_std must be > 0");
  if (!(power_budget > 0.0)) throw std::invalid_argument("power_budget must be > 0");
}

void CvaeTrainConfig::validate() const {
  hyper.validate();
  if (hidden_width_online < 0)
    throw std::invalid_argument("hidden_width_online must be >= 0");
  if (variant != "offline" && variant != "online")
    throw std::invalid_argument("cvae variant must be 'offline' or 'online'");
}

void EvaluationConfig::validate() const {
  if (n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
  if (n_beamform_samples < 1)
    throw std::invalid_argument("n_beamform_samples must be >= 1");
  if (cdf_samples_per_record < 1)
    throw std::invalid_argument("cdf_samples_per_record must be >= 1");
  for (double v : noise_variances)
    if (v < 0.0) throw std::invalid_argument("noise variances must be >= 0");
  for (int s : table_train_sizes)
    if (s < 1) throw std::invalid_argument("table train sizes must be >= 1");
  if (workers < 0) throw std::invalid_argument("workers must be >= 0");
}

void ExperimentConfig::validate() const {
  channel.validate();
  feedback.validate();
  solver.validate();
  cvae.validate();
  evaluation.validate();
  if (feedback.n_ports > channel.n_antennas)
    throw std::invalid_argument("n_ports must not exceed n_antennas");
  if (output_dir.empty()) throw std::invalid_argument("output_dir must not be empty");
}

ExperimentConfig desk_scale_config() {
  ExperimentConfig cfg;
  cfg.channel.n_antennas = 16;
  cfg.channel.n_ues = 4;
  cfg.channel.n_snapshots = 5000;
  cfg.channel.n_paths = 3;
  cfg.channel.angle_spread_deg = 20.0;
  cfg.channel.normalized_doppler = 0.278;
  cfg.channel.rng_seed = 1;
  cfg.feedback.n_ports = 8;
  cfg.feedback.oversampling = 4;
  cfg.cvae.hyper.hidden_width = 128;
  cfg.cvae.hidden_width_online = 64;
  cfg.evaluation.n_trials = 20;
  return cfg;
}

ExperimentConfig paper_scale_config() {
  ExperimentConfig cfg;
  cfg.channel.n_antennas = 32;
  cfg.channel.n_ues = 10;
  cfg.channel.n_snapshots = 10000;
  cfg.channel.n_paths = 8;
  cfg.feedback.n_ports = 8;
  cfg.feedback.oversampling = 4;
  cfg.cvae.hyper.hidden_width = 512;
  cfg.cvae.hidden_width_online = 128;
  cfg.evaluation.n_trials = 50;
  return cfg;
}

namespace {

json to_json(const ExperimentConfig& c) {
  json j;
  j["channel"] = {{"n_antennas", c.channel.n_antennas},
                  {"n_ues", c.channel.n_ues},
                  {"n_snapshots", c.channel.n_snapshots},
                  {"n_paths", c.channel.n_paths},
                  {"angle_spread_deg", c.channel.angle_spread_deg},
                  {"normalized_doppler", c.channel.normalized_doppler},
                  {"rng_seed", c.channel.rng_seed}};
  j["feedback"] = {{"n_ports", c.feedback.n_ports},
                   {"oversampling", c.feedback.oversampling},
                   {"type2_k_beams", c.feedback.type2_k_beams},
                   {"type2_amp_bits", c.feedback.type2_amp_bits},
                   {"type2_phase_bits", c.feedback.type2_phase_bits},
                   {"sample_sigma", c.feedback.sample_sigma}};
  j["solver"] = {{"rho", c.solver.rho},
                 {"max_iters", c.solver.max_iters},
                 {"power_tol", c.solver.power_tol},
                 {"rate_tol", c.solver.rate_tol},
                 {"noise_std", c.solver.noise_std},
                 {"power_budget", c.solver.power_budget}};
  j["cvae"] = {{"learning_rate", c.cvae.hyper.learning_rate},
               {"lr_decay_epochs", c.cvae.hyper.lr_decay_epochs},
               {"lr_decay_factor", c.cvae.hyper.lr_decay_factor},
               {"epochs", c.cvae.hyper.epochs},
               {"batch_size", c.cvae.hyper.batch_size},
               {"kl_weight", c.cvae.hyper.kl_weight},
               {"hidden_width", c.cvae.hyper.hidden_width},
               {"hidden_width_online", c.cvae.hidden_width_online},
               {"latent_dim", c.cvae.hyper.latent_dim},
               {"variant", c.cvae.variant}};
  j["evaluation"] = {{"n_trials", c.evaluation.n_trials},
                     {"n_beamform_samples", c.evaluation.n_beamform_samples},
                     {"cdf_samples_per_record", c.evaluation.cdf_samples_per_record},
                     {"noise_variances", c.evaluation.noise_variances},
                     {"table_train_sizes", c.evaluation.table_train_sizes},
                     {"workers", c.evaluation.workers}};
  j["output_dir"] = c.output_dir;
  j["master_seed"] = c.master_seed;
  return j;
}

} // namespace

std::string experiment_config_to_json(const ExperimentConfig& config) {
  return to_json(config).dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig c;
  if (j.contains("channel")) {
    const json& s = j.at("channel");
    s.at("n_antennas").get_to(c.channel.n_antennas);
    s.at("n_ues").get_to(c.channel.n_ues);
    s.at("n_snapshots").get_to(c.channel.n_snapshots);
    s.at("n_paths").get_to(c.channel.n_paths);
    if (s.contains("angle_spread_deg")) s.at("angle_spread_deg").get_to(c.channel.angle_spread_deg);
    if (s.contains("normalized_doppler"))
      s.at("normalized_doppler").get_to(c.channel.normalized_doppler);
    if (s.contains("rng_seed")) s.at("rng_seed").get_to(c.channel.rng_seed);
  }
  if (j.contains("feedback")) {
    const json& s = j.at("feedback");
    if (s.contains("n_ports")) s.at("n_ports").get_to(c.feedback.n_ports);
    if (s.contains("oversampling")) s.at("oversampling").get_to(c.feedback.oversampling);
    if (s.contains("type2_k_beams")) s.at("type2_k_beams").get_to(c.feedback.type2_k_beams);
    if (s.contains("type2_amp_bits")) s.at("type2_amp_bits").get_to(c.feedback.type2_amp_bits);
    if (s.contains("type2_phase_bits"))
      s.at("type2_phase_bits").get_to(c.feedback.type2_phase_bits);
    if (s.contains("sample_sigma")) s.at("sample_sigma").get_to(c.feedback.sample_sigma);
  }
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    if (s.contains("rho")) s.at("rho").get_to(c.solver.rho);
    if (s.contains("max_iters")) s.at("max_iters").get_to(c.solver.max_iters);
    if (s.contains("power_tol")) s.at("power_tol").get_to(c.solver.power_tol);
    if (s.contains("rate_tol")) s.at("rate_tol").get_to(c.solver.rate_tol);
    if (s.contains("noise_std")) s.at("noise_std").get_to(c.solver.noise_std);
    if (s.contains("power_budget")) s.at("power_budget").get_to(c.solver.power_budget);
  }
  if (j.contains("cvae")) {
    const json& s = j.at("cvae");
    if (s.contains("learning_rate")) s.at("learning_rate").get_to(c.cvae.hyper.learning_rate);
    if (s.contains("lr_decay_epochs"))
      s.at("lr_decay_epochs").get_to(c.cvae.hyper.lr_decay_epochs);
    if (s.contains("lr_decay_factor"))
      s.at("lr_decay_factor").get_to(c.cvae.hyper.lr_decay_factor);
    if (s.contains("epochs")) s.at("epochs").get_to(c.cvae.hyper.epochs);
    if (s.contains("batch_size")) s.at("batch_size").get_to(c.cvae.hyper.batch_size);
    if (s.contains("kl_weight")) s.at("kl_weight").get_to(c.cvae.hyper.kl_weight);
    if (s.contains("hidden_width")) s.at("hidden_width").get_to(c.cvae.hyper.hidden_width);
    if (s.contains("hidden_width_online"))
      s.at("hidden_width_online").get_to(c.cvae.hidden_width_online);
    if (s.contains("latent_dim")) s.at("latent_dim").get_to(c.cvae.hyper.latent_dim);
    if (s.contains("variant")) s.at("variant").get_to(c.cvae.variant);
  }
  if (j.contains("evaluation")) {
    const json& s = j.at("evaluation");
    if (s.contains("n_trials")) s.at("n_trials").get_to(c.evaluation.n_trials);
    if (s.contains("n_beamform_samples"))
      s.at("n_beamform_samples").get_to(c.evaluation.n_beamform_samples);
    if (s.contains("cdf_samples_per_record"))
      s.at("cdf_samples_per_record").get_to(c.evaluation.cdf_samples_per_record);
    if (s.contains("noise_variances"))
      s.at("noise_variances").get_to(c.evaluation.noise_variances);
    if (s.contains("table_train_sizes"))
      s.at("table_train_sizes").get_to(c.evaluation.table_train_sizes);
    if (s.contains("workers")) s.at("workers").get_to(c.evaluation.workers);
  }
  if (j.contains("output_dir")) j.at("output_dir").get_to(c.output_dir);
  if (j.contains("master_seed")) j.at("master_seed").get_to(c.master_seed);
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return experiment_config_from_json(buffer.str());
}

void save_experiment_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write config: " + path.string());
  out << experiment_config_to_json(config) << "\n";
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  return fnv1a64(experiment_config_to_json(config));
}

std::string config_comment(const ExperimentConfig& config) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "config_hash=%016llx master_seed=%llu",
                static_cast<unsigned long long>(config_hash(config)),
                static_cast<unsigned long long>(config.master_seed));
  return buf;
}

} // namespace beamgen
