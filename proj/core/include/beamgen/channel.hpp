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
#include <vector>

#include "beamgen/rng.hpp"
#include "beamgen/types.hpp"

namespace beamgen {

/// Scenario parameters for the clustered geometric channel generator.
struct ChannelConfig {
  int n_antennas = 32;
  int n_ues = 10;
  int n_snapshots = 10000;      ///< time sampling points per UE
  int n_paths = 8;              ///< multipath components per UE
  double angle_spread_deg = 20.0;
  double normalized_doppler = 0.278; ///< Doppler frequency x sampling interval
  std::uint64_t rng_seed = 1;

  void validate() const; // throws std::invalid_argument
};

struct ChannelSnapshot {
  int ue_index = 0;
  int time_index = 0;
  CVector h;
};

/// Immutable multi-UE channel time series. Snapshots are stored per UE as
/// n_antennas x n_snapshots matrices; safe for concurrent read-only use.
class ChannelDataset {
public:
  ChannelDataset() = default;
  explicit ChannelDataset(ChannelConfig config);

  const ChannelConfig& config() const { return config_; }
  int n_antennas() const { return config_.n_antennas; }
  int n_ues() const { return config_.n_ues; }
  int n_snapshots() const { return config_.n_snapshots; }
  std::size_t snapshot_count() const {
    return static_cast<std::size_t>(config_.n_ues) * config_.n_snapshots;
  }

  CMatrix& ue_block(int ue) { return per_ue_[static_cast<std::size_t>(ue)]; }
  const CMatrix& ue_block(int ue) const { return per_ue_[static_cast<std::size_t>(ue)]; }

  /// Channel vector of UE `ue` at time `t`.
  CVector h(int ue, int t) const { return per_ue_[static_cast<std::size_t>(ue)].col(t); }

  ChannelSnapshot snapshot(int ue, int t) const { return {ue, t, h(ue, t)}; }

  /// The channel vectors of all UEs at time `t`.
  ChannelSet slot(int t) const;

private:
  ChannelConfig config_;
  std::vector<CMatrix> per_ue_;
};

/// Uniform-linear-array response, entry k = exp(j*pi*k*sin(angle))/sqrt(N).
/// angle_deg must lie in [-90, 90].
CVector steering_vector(double angle_deg, int n_antennas);

/// Unit-variance complex Gaussian fading process with autocorrelation
/// J0(2*pi*f_d*tau), realized as a sum of equal-power sinusoids whose arrival
/// angles are equally spaced with a random rotation (so the lag spectrum
/// matches the Bessel profile closely even for few sinusoids).
class JakesProcess {
public:
  JakesProcess(double normalized_doppler, int n_sinusoids, Rng& rng);

  Complex gain(int t) const;

private:
  std::vector<double> omega_; // rad per sample
  std::vector<double> phase_;
  double scale_ = 0.0;
};

/// Deterministic dataset generation; per-UE streams are keyed on
/// (rng_seed, ue_index) so workers can generate UEs independently.
ChannelDataset generate_channel_set(const ChannelConfig& config);

// Binary container: magic "BGCH", version, N_A, L, T (all u32 little-endian),
// then complex float64 pairs (re, im), UE-major then time-major then antenna.
void save_dataset(const ChannelDataset& dataset, const std::filesystem::path& path);
ChannelDataset load_dataset(const std::filesystem::path& path);

/// Plain-text view of the container, one row per (ue, t, antenna).
void export_dataset_csv(const ChannelDataset& dataset, const std::filesystem::path& path,
                        const std::string& comment = "");

} // namespace beamgen
