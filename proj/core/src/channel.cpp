// SPDX-License-Identifier: Apache-2.0
//
// beamgen: limited-feedback robust beamforming toolkit
// Copyright (C) 2026 the beamgen authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "beamgen/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "beamgen/io.hpp"

namespace beamgen {

namespace {
constexpr int kJakesSinusoids = 32;
constexpr std::uint32_t kDatasetVersion = 1;
constexpr char kDatasetMagic[4] = {'B', 'G', 'C', 'H'};
} // namespace

void ChannelConfig::validate() const {
  if (n_antennas < 1) throw std::invalid_argument("n_antennas must be >= 1");
  if (n_ues < 1) throw std::invalid_argument("n_ues must be >= 1");
  if (n_snapshots < 1) throw std::invalid_argument("n_snapshots must be >= 1");
  if (n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
  if (angle_spread_deg < 0.0) throw std::invalid_argument("angle_spread_deg must be >= 0");
  if (!(normalized_doppler >= 0.0 && normalized_doppler <= 0.5))
    throw std::invalid_argument("normalized_doppler must lie in [0, 0.5]");
}

ChannelDataset::ChannelDataset(ChannelConfig config) : config_(std::move(config)) {
  config_.validate();
  per_ue_.assign(static_cast<std::size_t>(config_.n_ues),
                 CMatrix::Zero(config_.n_antennas, config_.n_snapshots));
}

ChannelSet ChannelDataset::slot(int t) const {
  ChannelSet out(static_cast<std::size_t>(config_.n_ues));
  for (int ue = 0; ue < config_.n_ues; ++ue) out[static_cast<std::size_t>(ue)] = h(ue, t);
  return out;
}

CVector steering_vector(double angle_deg, int n_antennas) {
  if (n_antennas < 1) throw std::invalid_argument("n_antennas must be >= 1");
  if (!(angle_deg >= -90.0 && angle_deg <= 90.0))
    throw std::domain_error("steering angle outside [-90, 90] degrees");
  const double s = std::sin(angle_deg * kPi / 180.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_antennas));
  CVector a(n_antennas);
  for (int k = 0; k < n_antennas; ++k) {
    const double phi = kPi * k * s;
    a(k) = Complex(scale * std::cos(phi), scale * std::sin(phi));
  }
  return a;
}

JakesProcess::JakesProcess(double normalized_doppler, int n_sinusoids, Rng& rng) {
  omega_.resize(static_cast<std::size_t>(n_sinusoids));
  phase_.resize(static_cast<std::size_t>(n_sinusoids));
  scale_ = 1.0 / std::sqrt(static_cast<double>(n_sinusoids));
  const double rotation = rng.uniform(); // common rotation of the arrival grid
  for (int n = 0; n < n_sinusoids; ++n) {
    const double alpha = 2.0 * kPi * (n + rotation) / n_sinusoids;
    omega_[static_cast<std::size_t>(n)] = 2.0 * kPi * normalized_doppler * std::cos(alpha);
    phase_[static_cast<std::size_t>(n)] = rng.uniform(0.0, 2.0 * kPi);
  }
}

Complex JakesProcess::gain(int t) const {
  double re = 0.0, im = 0.0;
  for (std::size_t n = 0; n < omega_.size(); ++n) {
    const double phi = omega_[n] * t + phase_[n];
    re += std::cos(phi);
    im += std::sin(phi);
  }
  return {scale_ * re, scale_ * im};
}

namespace {

void generate_ue(const ChannelConfig& cfg, int ue, CMatrix& block) {
  Rng rng(derive_seed(cfg.rng_seed, "channel-ue", static_cast<std::uint64_t>(ue)));

  // Evenly spaced mean angles over [-60, 60] with a small seeded jitter.
  double mean_angle = 0.0;
  if (cfg.n_ues > 1)
    mean_angle = -60.0 + 120.0 * ue / static_cast<double>(cfg.n_ues - 1);
  mean_angle += rng.uniform(-2.0, 2.0);

  std::vector<CVector> steer(static_cast<std::size_t>(cfg.n_paths));
  std::vector<JakesProcess> gains;
  gains.reserve(static_cast<std::size_t>(cfg.n_paths));
  for (int p = 0; p < cfg.n_paths; ++p) {
    double angle = mean_angle +
                   rng.uniform(-0.5 * cfg.angle_spread_deg, 0.5 * cfg.angle_spread_deg);
    angle = std::clamp(angle, -90.0, 90.0);
    steer[static_cast<std::size_t>(p)] = steering_vector(angle, cfg.n_antennas);
    gains.emplace_back(cfg.normalized_doppler, kJakesSinusoids, rng);
  }

  // E||h||^2 = N_A: each steering vector is unit norm and path gains are
  // unit-variance and uncorrelated across paths.
  const double scale = std::sqrt(static_cast<double>(cfg.n_antennas) / cfg.n_paths);
  for (int t = 0; t < cfg.n_snapshots; ++t) {
    CVector h = CVector::Zero(cfg.n_antennas);
    for (int p = 0; p < cfg.n_paths; ++p)
      h += gains[static_cast<std::size_t>(p)].gain(t) * steer[static_cast<std::size_t>(p)];
    block.col(t) = scale * h;
  }
}

} // namespace

ChannelDataset generate_channel_set(const ChannelConfig& config) {
  config.validate();
  ChannelDataset dataset(config);
  for (int ue = 0; ue < config.n_ues; ++ue) generate_ue(config, ue, dataset.ue_block(ue));
  return dataset;
}

void save_dataset(const ChannelDataset& dataset, const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.magic(kDatasetMagic);
  w.u32(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(dataset.n_antennas()));
  w.u32(static_cast<std::uint32_t>(dataset.n_ues()));
  w.u32(static_cast<std::uint32_t>(dataset.n_snapshots()));
  std::vector<double> row(2 * static_cast<std::size_t>(dataset.n_antennas()));
  for (int ue = 0; ue < dataset.n_ues(); ++ue) {
    const CMatrix& block = dataset.ue_block(ue);
    for (int t = 0; t < dataset.n_snapshots(); ++t) {
      for (int a = 0; a < dataset.n_antennas(); ++a) {
        row[2 * static_cast<std::size_t>(a)] = block(a, t).real();
        row[2 * static_cast<std::size_t>(a) + 1] = block(a, t).imag();
      }
      w.f64_array(row.data(), row.size());
    }
  }
}

ChannelDataset load_dataset(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic(kDatasetMagic);
  const std::uint32_t version = r.u32();
  if (version != kDatasetVersion)
    throw FormatError("unsupported dataset version " + std::to_string(version));
  ChannelConfig cfg;
  cfg.n_antennas = static_cast<int>(r.u32());
  cfg.n_ues = static_cast<int>(r.u32());
  cfg.n_snapshots = static_cast<int>(r.u32());
  cfg.n_paths = 1; // scenario parameters beyond the dimensions are not stored
  cfg.angle_spread_deg = 0.0;
  cfg.normalized_doppler = 0.0;
  ChannelDataset dataset(cfg);
  std::vector<double> row(2 * static_cast<std::size_t>(cfg.n_antennas));
  for (int ue = 0; ue < cfg.n_ues; ++ue) {
    CMatrix& block = dataset.ue_block(ue);
    for (int t = 0; t < cfg.n_snapshots; ++t) {
      r.f64_array(row.data(), row.size());
      for (int a = 0; a < cfg.n_antennas; ++a)
        block(a, t) = Complex(row[2 * static_cast<std::size_t>(a)],
                              row[2 * static_cast<std::size_t>(a) + 1]);
    }
  }
  return dataset;
}

void export_dataset_csv(const ChannelDataset& dataset, const std::filesystem::path& path,
                        const std::string& comment) {
  CsvWriter csv(path);
  if (!comment.empty()) csv.comment(comment);
  csv.header({"ue", "t", "antenna", "re", "im"});
  for (int ue = 0; ue < dataset.n_ues(); ++ue) {
    const CMatrix& block = dataset.ue_block(ue);
    for (int t = 0; t < dataset.n_snapshots(); ++t) {
      for (int a = 0; a < dataset.n_antennas(); ++a) {
        csv.begin_row();
        csv.field(static_cast<long long>(ue));
        csv.field(static_cast<long long>(t));
        csv.field(static_cast<long long>(a));
        csv.field(block(a, t).real());
        csv.field(block(a, t).imag());
        csv.end_row();
      }
    }
  }
}

} // namespace beamgen
