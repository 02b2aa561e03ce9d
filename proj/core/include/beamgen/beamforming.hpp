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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "beamgen/types.hpp"

namespace beamgen {

/// L beamforming vectors under a total power budget P.
struct BeamformerSet {
  std::vector<CVector> v;
  double power_budget = 0.0;

  int n_ues() const { return static_cast<int>(v.size()); }
  double total_power() const;
  bool power_feasible(double slack = 1e-6) const;
};

/// Auxiliary variables of the sample-wise convex upper bound: positive MSE
/// weights w and proximal anchors z.
struct AuxVars {
  RVector w;
  std::vector<CVector> z;
};

struct SolverOptions {
  double rho = 0.01;        ///< proximal weight of the stochastic solver
  int max_iters = 200;
  double power_tol = 1e-8;  ///< relative power-constraint tolerance
  double rate_tol = 1e-6;   ///< sum-rate improvement stopping threshold
  std::vector<double> sigma; ///< per-UE noise standard deviations
  std::uint64_t rng_seed = 0;

  void validate(int n_ues) const;
  static std::vector<double> uniform_sigma(double sigma, int n_ues);
};

/// Scalar MMSE receive filter u = (h^H v_i) / (sum_l |h^H v_l|^2 + sigma^2).
Complex mmse_detector(const CVector& h, const BeamformerSet& V, int ue, double sigma);

/// Scalar MSE E(u) = |1 - conj(u) h^H v_i|^2 + |u|^2 (interference + sigma^2).
double mse_scalar(Complex u, const CVector& h, const BeamformerSet& V, int ue, double sigma);

/// Achievable rate ln(1 + SINR) in nats.
double user_rate(const CVector& h, const BeamformerSet& V, int ue, double sigma);

double sum_rate(const ChannelSet& H, const BeamformerSet& V, const std::vector<double>& sigmas);

/// g(v, h) = -sum_i R_i at the MMSE detector.
double negative_rate_sum(const ChannelSet& H, const BeamformerSet& V,
                         const std::vector<double>& sigmas);

/// Sample-wise convex upper bound of g: sum_i [-ln w_i + w_i E_i(u_i, v, h)
/// + rho ||v_i - z_i||^2 - 1], with the detectors u fixed at the expansion
/// point. Touches g exactly at w_i = 1/E_i, z_i = v_i.
double surrogate_value(const BeamformerSet& V, const AuxVars& p,
                       const std::vector<Complex>& u_fixed, const ChannelSet& H,
                       const std::vector<double>& sigmas, double rho);

struct WmmseResult {
  BeamformerSet beams;
  std::vector<double> rate_trace; ///< sum-rate after each v-update
  bool converged = false;
  int iterations = 0;
};

/// Alternating u/w/v updates from an MRT split start; the v-step is a
/// regularized least squares with a power bisection. Returns the best iterate
/// with converged = false if max_iters is exhausted.
WmmseResult wmmse(const ChannelSet& H_est, double power_budget, const SolverOptions& opts);

/// First-order optimal auxiliaries at v_prev for sample h_r:
/// w_i = 1/E_i(u_i^MMSE, v_prev, h_r), z_i = v_prev_i.
AuxVars ssum_update_p(const BeamformerSet& v_prev, const ChannelSet& h_r,
                      const SolverOptions& opts);

/// Running sufficient statistics of the averaged surrogate: the quadratic
/// matrix is the sample mean of sum_l w_l |u_l|^2 h_l h_l^H, the linear terms
/// are sample means of w_i u_i h_i + rho z_i. Not shareable across threads
/// mid-run.
class SsumState {
public:
  SsumState(int n_antennas, BeamformerSet v0, double rho);

  void absorb(const ChannelSet& h_r, const std::vector<Complex>& u_r, const AuxVars& p_r);

  int iteration() const { return iteration_; }
  const CMatrix& quadratic() const { return quadratic_; }
  const std::vector<CVector>& linear() const { return linear_; }
  double rho() const { return rho_; }
  BeamformerSet& beams() { return beams_; }
  const BeamformerSet& beams() const { return beams_; }

private:
  int iteration_ = 0;
  CMatrix quadratic_;
  std::vector<CVector> linear_;
  BeamformerSet beams_;
  double rho_ = 0.0;
};

struct VUpdateResult {
  double mu = 0.0;
  double power = 0.0;
};

/// Minimizes the averaged surrogate under the power budget:
/// v_i = (A + (rho + mu) I)^{-1} b_i with mu >= 0 found by bisection on the
/// strictly decreasing power curve. Updates state.beams() in place.
VUpdateResult ssum_update_v(SsumState& state, const SolverOptions& opts);

struct SsumTracePoint {
  int iteration = 0;
  double sum_rate = 0.0; ///< NaN when no evaluation channel was supplied
  double power = 0.0;
  double mu = 0.0;
};

struct StochasticResult {
  BeamformerSet beams;
  std::vector<SsumTracePoint> trace;
};

/// Draws the channel sample for iteration r (0-based).
using SampleDraw = std::function<ChannelSet(int)>;

/// Sample-driven solver: per sample, auxiliary update at the current beams,
/// statistics accumulation, then the constrained v-update. Runs exactly
/// n_samples iterations. When no initial beams are given, an MRT split on the
/// first drawn sample is used.
StochasticResult stochastic_wmmse(const SampleDraw& draw, int n_samples, double power_budget,
                                  const SolverOptions& opts,
                                  const BeamformerSet* init = nullptr,
                                  const ChannelSet* eval_channels = nullptr);

/// Zero-forcing baseline: pseudo-inverse columns (tolerance 1e-10 for
/// rank-deficient inputs) normalized to equal per-UE power P/L.
BeamformerSet ezf(const ChannelSet& H_est, double power_budget,
                  const std::vector<double>& sigmas);

/// Trace export: CSV with columns (iteration, sum_rate_nats, power, mu).
/// in_bits divides rates by ln 2 and renames the column accordingly.
void save_trace_csv(const std::vector<SsumTracePoint>& trace,
                    const std::filesystem::path& path, const std::string& comment = "",
                    bool in_bits = false);

} // namespace beamgen
