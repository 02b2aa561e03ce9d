// SPDX-License-Identifier: Apache-2.0
//
// beamgen: limited-feedback robust beamforming toolkit
// Copyright (C) 2026 the beamgen authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "beamgen/beamforming.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "beamgen/io.hpp"

namespace beamgen {

double BeamformerSet::total_power() const {
  double p = 0.0;
  for (const CVector& vi : v) p += vi.squaredNorm();
  return p;
}

bool BeamformerSet::power_feasible(double slack) const {
  return total_power() <= power_budget * (1.0 + slack);
}

void SolverOptions::validate(int n_ues) const {
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be > 0");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(power_tol > 0.0) || !(rate_tol > 0.0))
    throw std::invalid_argument("tolerances must be > 0");
  if (static_cast<int>(sigma.size()) != n_ues)
    throw std::invalid_argument("sigma must have one entry per UE");
  for (double s : sigma)
    if (!(s > 0.0)) throw std::invalid_argument("noise std must be > 0");
}

std::vector<double> SolverOptions::uniform_sigma(double sigma, int n_ues) {
  return std::vector<double>(static_cast<std::size_t>(n_ues), sigma);
}

namespace {

double interference_plus_noise(const CVector& h, const BeamformerSet& V, int ue, double sigma) {
  double j = sigma * sigma;
  for (int l = 0; l < V.n_ues(); ++l) {
    if (l == ue) continue;
    j += std::norm(h.dot(V.v[static_cast<std::size_t>(l)]));
  }
  return j;
}

} // namespace

Complex mmse_detector(const CVector& h, const BeamformerSet& V, int ue, double sigma) {
  const Complex desired = h.dot(V.v[static_cast<std::size_t>(ue)]); // h^H v_i
  const double j = interference_plus_noise(h, V, ue, sigma) + std::norm(desired);
  if (j == 0.0) throw std::invalid_argument("degenerate input: zero channel and zero noise");
  return desired / j;
}

double mse_scalar(Complex u, const CVector& h, const BeamformerSet& V, int ue, double sigma) {
  const Complex desired = h.dot(V.v[static_cast<std::size_t>(ue)]);
  const double residual = std::norm(1.0 - std::conj(u) * desired);
  return residual + std::norm(u) * interference_plus_noise(h, V, ue, sigma);
}

double user_rate(const CVector& h, const BeamformerSet& V, int ue, double sigma) {
  const double desired = std::norm(h.dot(V.v[static_cast<std::size_t>(ue)]));
  const double denom = interference_plus_noise(h, V, ue, sigma);
  return std::log1p(desired / denom);
}

double sum_rate(const ChannelSet& H, const BeamformerSet& V, const std::vector<double>& sigmas) {
  double total = 0.0;
  for (int i = 0; i < V.n_ues(); ++i)
    total += user_rate(H[static_cast<std::size_t>(i)], V, i, sigmas[static_cast<std::size_t>(i)]);
  return total;
}

double negative_rate_sum(const ChannelSet& H, const BeamformerSet& V,
                         const std::vector<double>& sigmas) {
  return -sum_rate(H, V, sigmas);
}

double surrogate_value(const BeamformerSet& V, const AuxVars& p,
                       const std::vector<Complex>& u_fixed, const ChannelSet& H,
                       const std::vector<double>& sigmas, double rho) {
  double total = 0.0;
  for (int i = 0; i < V.n_ues(); ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    const double w = p.w(i);
    const double e = mse_scalar(u_fixed[si], H[si], V, i, sigmas[si]);
    total += -std::log(w) + w * e + rho * (V.v[si] - p.z[si]).squaredNorm() - 1.0;
  }
  return total;
}

namespace {

// Shared constrained quadratic solve: minimize sum_i v_i^H (A + rho I) v_i
// - 2 Re(b_i^H v_i) subject to sum_i ||v_i||^2 <= P. One Hermitian
// eigendecomposition of A serves every multiplier evaluation.
struct ConstrainedSolve {
  std::vector<CVector> v;
  double mu = 0.0;
  double power = 0.0;
};

ConstrainedSolve power_constrained_solve(const CMatrix& quadratic,
                                         const std::vector<CVector>& linear, double rho,
                                         double budget, double power_tol) {
  const int n = static_cast<int>(quadratic.rows());
  const std::size_t n_ues = linear.size();

  Eigen::SelfAdjointEigenSolver<CMatrix> es(quadratic);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed in the v-update");
  const RVector& lambda = es.eigenvalues();
  const CMatrix& basis = es.eigenvectors();

  std::vector<CVector> projected(n_ues);
  double linear_energy = 0.0;
  for (std::size_t i = 0; i < n_ues; ++i) {
    projected[i] = basis.adjoint() * linear[i];
    linear_energy += linear[i].squaredNorm();
  }

  // Components with vanishing curvature and vanishing load are dropped
  // (minimum-norm solution); they would otherwise divide rounding noise by
  // rounding noise when rho = mu = 0.
  const double lambda_scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
  const double rank_tol = 1e-12 * lambda_scale;

  const auto power_at = [&](double mu) {
    double p = 0.0;
    for (std::size_t i = 0; i < n_ues; ++i)
      for (int k = 0; k < n; ++k) {
        const double denom = lambda(k) + rho + mu;
        if (denom <= rank_tol) continue;
        p += std::norm(projected[i](k)) / (denom * denom);
      }
    return p;
  };

  ConstrainedSolve out;
  double mu = 0.0;
  if (power_at(0.0) > budget) {
    double hi = std::sqrt(linear_energy / budget); // power(hi) <= budget by construction
    if (power_at(hi) > budget)
      throw std::logic_error("power bisection bracket failed");
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
      mu = 0.5 * (lo + hi);
      const double p = power_at(mu);
      if (std::abs(p - budget) <= power_tol * budget) break;
      (p > budget ? lo : hi) = mu;
    }
  }

  out.mu = mu;
  out.power = power_at(mu);
  out.v.resize(n_ues);
  for (std::size_t i = 0; i < n_ues; ++i) {
    CVector coeff = projected[i];
    for (int k = 0; k < n; ++k) {
      const double denom = lambda(k) + rho + mu;
      coeff(k) = denom > rank_tol ? coeff(k) / denom : Complex(0.0, 0.0);
    }
    out.v[i] = basis * coeff;
  }
  return out;
}

BeamformerSet mrt_split(const ChannelSet& H, double budget) {
  BeamformerSet V;
  V.power_budget = budget;
  V.v.resize(H.size());
  const double per_ue = budget / static_cast<double>(H.size());
  for (std::size_t i = 0; i < H.size(); ++i) {
    const double norm = H[i].norm();
    V.v[i] = norm > 0.0 ? CVector(std::sqrt(per_ue) * H[i] / norm)
                        : CVector(CVector::Zero(H[i].size()));
  }
  return V;
}

} // namespace

WmmseResult wmmse(const ChannelSet& H_est, double power_budget, const SolverOptions& opts) {
  if (H_est.empty()) throw std::invalid_argument("no channels supplied");
  if (!(power_budget > 0.0)) throw std::invalid_argument("power budget must be > 0");
  const int n_ues = static_cast<int>(H_est.size());
  opts.validate(n_ues);
  const int n = static_cast<int>(H_est.front().size());

  WmmseResult result;
  result.beams = mrt_split(H_est, power_budget);
  double best_rate = sum_rate(H_est, result.beams, opts.sigma);
  BeamformerSet best = result.beams;
  double prev_rate = best_rate;

  for (int it = 1; it <= opts.max_iters; ++it) {
    CMatrix quadratic = CMatrix::Zero(n, n);
    std::vector<CVector> linear(static_cast<std::size_t>(n_ues));
    for (int i = 0; i < n_ues; ++i) {
      const std::size_t si = static_cast<std::size_t>(i);
      const Complex u = mmse_detector(H_est[si], result.beams, i, opts.sigma[si]);
      const double e = mse_scalar(u, H_est[si], result.beams, i, opts.sigma[si]);
      const double w = 1.0 / e;
      quadratic.selfadjointView<Eigen::Lower>().rankUpdate(H_est[si], w * std::norm(u));
      linear[si] = w * u * H_est[si];
    }
    quadratic = quadratic.selfadjointView<Eigen::Lower>();

    ConstrainedSolve solve =
        power_constrained_solve(quadratic, linear, 0.0, power_budget, opts.power_tol);
    result.beams.v = std::move(solve.v);

    const double rate = sum_rate(H_est, result.beams, opts.sigma);
    result.rate_trace.push_back(rate);
    result.iterations = it;
    if (rate > best_rate) {
      best_rate = rate;
      best = result.beams;
    }
    if (std::abs(rate - prev_rate) < opts.rate_tol) {
      result.converged = true;
      break;
    }
    prev_rate = rate;
  }

  if (!result.converged) result.beams = best;
  return result;
}

AuxVars ssum_update_p(const BeamformerSet& v_prev, const ChannelSet& h_r,
                      const SolverOptions& opts) {
  const int n_ues = v_prev.n_ues();
  AuxVars p;
  p.w.resize(n_ues);
  p.z.resize(static_cast<std::size_t>(n_ues));
  for (int i = 0; i < n_ues; ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    const Complex u = mmse_detector(h_r[si], v_prev, i, opts.sigma[si]);
    const double e = mse_scalar(u, h_r[si], v_prev, i, opts.sigma[si]);
    if (e <= 0.0) throw std::runtime_error("degenerate MSE in the auxiliary update");
    p.w(i) = 1.0 / e;
    p.z[si] = v_prev.v[si];
  }
  return p;
}

SsumState::SsumState(int n_antennas, BeamformerSet v0, double rho)
    : quadratic_(CMatrix::Zero(n_antennas, n_antennas)),
      linear_(static_cast<std::size_t>(v0.n_ues()), CVector::Zero(n_antennas)),
      beams_(std::move(v0)),
      rho_(rho) {}

void SsumState::absorb(const ChannelSet& h_r, const std::vector<Complex>& u_r,
                       const AuxVars& p_r) {
  const int n = static_cast<int>(quadratic_.rows());
  CMatrix sample = CMatrix::Zero(n, n);
  for (std::size_t i = 0; i < h_r.size(); ++i)
    sample.selfadjointView<Eigen::Lower>().rankUpdate(h_r[i], p_r.w(static_cast<int>(i)) *
                                                                  std::norm(u_r[i]));
  sample = sample.selfadjointView<Eigen::Lower>();

  ++iteration_;
  const double step = 1.0 / iteration_;
  quadratic_ += step * (sample - quadratic_);
  for (std::size_t i = 0; i < linear_.size(); ++i) {
    const CVector term =
        p_r.w(static_cast<int>(i)) * u_r[i] * h_r[i] + rho_ * p_r.z[i];
    linear_[i] += step * (term - linear_[i]);
  }
}

VUpdateResult ssum_update_v(SsumState& state, const SolverOptions& opts) {
  if (state.iteration() < 1)
    throw std::logic_error("v-update requires at least one absorbed sample");
  ConstrainedSolve solve = power_constrained_solve(
      state.quadratic(), state.linear(), state.rho(), state.beams().power_budget,
      opts.power_tol);
  state.beams().v = std::move(solve.v);
  return {solve.mu, solve.power};
}

StochasticResult stochastic_wmmse(const SampleDraw& draw, int n_samples, double power_budget,
                                  const SolverOptions& opts, const BeamformerSet* init,
                                  const ChannelSet* eval_channels) {
  if (n_samples < 1) throw std::invalid_argument("the sample stream is empty");
  if (!(power_budget > 0.0)) throw std::invalid_argument("power budget must be > 0");

  ChannelSet first = draw(0);
  if (first.empty()) throw std::invalid_argument("the sample stream is empty");
  opts.validate(static_cast<int>(first.size()));
  const int n = static_cast<int>(first.front().size());

  BeamformerSet v0 = init ? *init : mrt_split(first, power_budget);
  v0.power_budget = power_budget;
  SsumState state(n, std::move(v0), opts.rho);

  StochasticResult result;
  result.trace.reserve(static_cast<std::size_t>(n_samples));
  for (int r = 1; r <= n_samples; ++r) {
    const ChannelSet h_r = (r == 1) ? std::move(first) : draw(r - 1);
    const AuxVars p_r = ssum_update_p(state.beams(), h_r, opts);
    std::vector<Complex> u_r(h_r.size());
    for (std::size_t i = 0; i < h_r.size(); ++i)
      u_r[i] = mmse_detector(h_r[i], state.beams(), static_cast<int>(i), opts.sigma[i]);
    state.absorb(h_r, u_r, p_r);
    const VUpdateResult vu = ssum_update_v(state, opts);

    SsumTracePoint point;
    point.iteration = r;
    point.power = vu.power;
    point.mu = vu.mu;
    point.sum_rate = eval_channels
                         ? sum_rate(*eval_channels, state.beams(), opts.sigma)
                         : std::numeric_limits<double>::quiet_NaN();
    result.trace.push_back(point);
  }
  result.beams = state.beams();
  return result;
}

BeamformerSet ezf(const ChannelSet& H_est, double power_budget,
                  const std::vector<double>& sigmas) {
  if (H_est.empty()) throw std::invalid_argument("no channels supplied");
  if (sigmas.size() != H_est.size())
    throw std::invalid_argument("sigma must have one entry per UE");
  const int n = static_cast<int>(H_est.front().size());
  const int n_ues = static_cast<int>(H_est.size());

  CMatrix channels(n, n_ues);
  for (int i = 0; i < n_ues; ++i) channels.col(i) = H_est[static_cast<std::size_t>(i)];

  // Pseudo-inverse of H^H with relative singular-value tolerance 1e-10; the
  // columns satisfy h_i^H v_l = delta_il on the full-rank subspace.
  Eigen::JacobiSVD<CMatrix> svd(channels.adjoint(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& sv = svd.singularValues();
  const double tol = 1e-10 * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  RVector inv_sv = RVector::Zero(sv.size());
  for (int k = 0; k < sv.size(); ++k)
    if (sv(k) > tol) inv_sv(k) = 1.0 / sv(k);
  const CMatrix pinv = svd.matrixV() * inv_sv.asDiagonal() * svd.matrixU().adjoint();

  BeamformerSet V;
  V.power_budget = power_budget;
  V.v.resize(static_cast<std::size_t>(n_ues));
  const double per_ue = power_budget / n_ues;
  for (int i = 0; i < n_ues; ++i) {
    CVector col = pinv.col(i);
    const double norm = col.norm();
    V.v[static_cast<std::size_t>(i)] =
        norm > 0.0 ? CVector(std::sqrt(per_ue) * col / norm) : CVector(CVector::Zero(n));
  }
  return V;
}

void save_trace_csv(const std::vector<SsumTracePoint>& trace,
                    const std::filesystem::path& path, const std::string& comment,
                    bool in_bits) {
  CsvWriter csv(path);
  if (!comment.empty()) csv.comment(comment);
  csv.header({"iteration", in_bits ? "sum_rate_bits" : "sum_rate_nats", "power", "mu"});
  const double scale = in_bits ? 1.0 / std::log(2.0) : 1.0;
  for (const SsumTracePoint& point : trace) {
    csv.begin_row();
    csv.field(static_cast<long long>(point.iteration));
    csv.field(point.sum_rate * scale);
    csv.field(point.power);
    csv.field(point.mu);
    csv.end_row();
  }
}

} // namespace beamgen
