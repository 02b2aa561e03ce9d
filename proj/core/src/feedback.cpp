// SPDX-License-Identifier: Apache-2.0
//
// beamgen: limited-feedback robust beamforming toolkit
// Copyright (C) 2026 the beamgen authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "beamgen/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "beamgen/io.hpp"
#include "beamgen/rng.hpp"

namespace beamgen {

VirtualAntennaMatrix build_virtual_antenna_matrix(int n_antennas, int n_ports) {
  if (n_ports < 1 || n_antennas < 1)
    throw std::invalid_argument("antenna and port counts must be >= 1");
  if (n_ports > n_antennas)
    throw std::invalid_argument("n_ports must not exceed n_antennas");
  VirtualAntennaMatrix vam;
  vam.q.resize(n_antennas, n_ports);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_antennas));
  for (int k = 0; k < n_ports; ++k) {
    const int col = static_cast<int>((static_cast<long long>(k) * n_antennas) / n_ports);
    for (int n = 0; n < n_antennas; ++n) {
      const double phi = -2.0 * kPi * n * col / n_antennas;
      vam.q(n, k) = Complex(scale * std::cos(phi), scale * std::sin(phi));
    }
  }
  return vam;
}

namespace {

Codebook build_dft_beams(int n_ports, int oversampling, CodebookKind kind) {
  if (n_ports < 1) throw std::invalid_argument("n_ports must be >= 1");
  if (oversampling < 1) throw std::invalid_argument("oversampling must be >= 1");
  const int m_total = n_ports * oversampling;
  Codebook cb;
  cb.kind = kind;
  cb.vectors.reserve(static_cast<std::size_t>(m_total));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_ports));
  for (int m = 0; m < m_total; ++m) {
    CVector a(n_ports);
    for (int k = 0; k < n_ports; ++k) {
      const double phi = 2.0 * kPi * k * m / m_total;
      a(k) = Complex(scale * std::cos(phi), scale * std::sin(phi));
    }
    cb.vectors.push_back(std::move(a));
  }
  return cb;
}

} // namespace

Codebook build_type1_codebook(int n_ports, int oversampling) {
  return build_dft_beams(n_ports, oversampling, CodebookKind::TypeI);
}

Codebook build_type2_basis(int n_ports) {
  return build_dft_beams(n_ports, 1, CodebookKind::TypeIIBasis);
}

FeedbackRecord compute_feedback(const CVector& h, const VirtualAntennaMatrix& Q,
                                const Codebook& cb, int ue_index, int time_index) {
  if (h.size() != Q.n_antennas())
    throw std::invalid_argument("channel dimension does not match the virtual antenna matrix");
  if (cb.size() < 1) throw std::invalid_argument("empty codebook");
  FeedbackRecord rec;
  rec.ue_index = ue_index;
  rec.time_index = time_index;
  if (h.norm() == 0.0) return rec; // degenerate case: pmi 0, cqi 0
  const CVector port_channel = Q.q.adjoint() * h;
  double best = -1.0;
  for (int m = 0; m < cb.size(); ++m) {
    const double score = std::norm(cb.vectors[static_cast<std::size_t>(m)].dot(port_channel));
    if (score > best) {
      best = score;
      rec.pmi = m;
    }
  }
  rec.cqi = best;
  return rec;
}

CVector coarse_estimate(const FeedbackRecord& rec, const VirtualAntennaMatrix& Q,
                        const Codebook& cb) {
  if (rec.pmi < 0 || rec.pmi >= cb.size()) throw std::out_of_range("pmi outside codebook");
  return Q.q * cb.vectors[static_cast<std::size_t>(rec.pmi)];
}

namespace {

double quantize_unit_interval(double x, int bits) {
  const double levels = static_cast<double>((1ll << bits) - 1);
  return std::round(x * levels) / levels;
}

double quantize_phase(double theta, int bits) {
  const double step = 2.0 * kPi / static_cast<double>(1ll << bits);
  return std::round(theta / step) * step;
}

} // namespace

CVector type2_estimate(const CVector& h, const VirtualAntennaMatrix& Q, const Codebook& basis,
                       int k_beams, int amp_bits, int phase_bits) {
  if (h.size() != Q.n_antennas())
    throw std::invalid_argument("channel dimension does not match the virtual antenna matrix");
  if (k_beams < 1 || k_beams > Q.n_ports())
    throw std::invalid_argument("k_beams must lie in [1, n_ports]");
  if (h.norm() == 0.0) throw std::invalid_argument("zero channel has no direction to estimate");

  const CVector port_channel = Q.q.adjoint() * h;
  std::vector<Complex> coeff(static_cast<std::size_t>(basis.size()));
  for (int m = 0; m < basis.size(); ++m)
    coeff[static_cast<std::size_t>(m)] = basis.vectors[static_cast<std::size_t>(m)].dot(port_channel);

  std::vector<int> order(coeff.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(coeff[static_cast<std::size_t>(a)]) > std::abs(coeff[static_cast<std::size_t>(b)]);
  });
  const int kept = std::min<int>(k_beams, static_cast<int>(order.size()));

  double amp_max = 0.0;
  for (int i = 0; i < kept; ++i)
    amp_max = std::max(amp_max, std::abs(coeff[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]));
  if (amp_max == 0.0)
    throw std::invalid_argument("channel is orthogonal to the port subspace");

  CVector combined = CVector::Zero(basis.n_ports());
  for (int i = 0; i < kept; ++i) {
    const int m = order[static_cast<std::size_t>(i)];
    const Complex c = coeff[static_cast<std::size_t>(m)];
    double amp = std::abs(c) / amp_max;
    double theta = std::arg(c);
    if (amp_bits > 0) amp = quantize_unit_interval(amp, amp_bits);
    if (phase_bits > 0) theta = quantize_phase(theta, phase_bits);
    combined += amp * Complex(std::cos(theta), std::sin(theta)) *
                basis.vectors[static_cast<std::size_t>(m)];
  }
  CVector estimate = Q.q * combined;
  const double norm = estimate.norm();
  if (norm == 0.0)
    throw std::invalid_argument("quantized reconstruction collapsed to zero");
  return estimate / norm;
}

std::vector<CVector> sample_codebook_channel(const FeedbackRecord& rec,
                                             const VirtualAntennaMatrix& Q, const Codebook& cb,
                                             double sigma, int count, std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
  if (count < 1) throw std::invalid_argument("count must be >= 1");
  const CVector center = coarse_estimate(rec, Q, cb);
  Rng rng(seed);
  std::vector<CVector> samples;
  samples.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    CVector x = center;
    if (sigma > 0.0)
      for (int a = 0; a < x.size(); ++a) x(a) += rng.cnormal(sigma);
    samples.push_back(std::move(x));
  }
  return samples;
}

void save_feedback_csv(const std::vector<FeedbackRecord>& records,
                       const std::filesystem::path& path, const std::string& comment) {
  CsvWriter csv(path);
  if (!comment.empty()) csv.comment(comment);
  csv.header({"ue", "t", "pmi", "cqi"});
  for (const FeedbackRecord& rec : records) {
    csv.begin_row();
    csv.field(static_cast<long long>(rec.ue_index));
    csv.field(static_cast<long long>(rec.time_index));
    csv.field(static_cast<long long>(rec.pmi));
    csv.field(rec.cqi);
    csv.end_row();
  }
}

} // namespace beamgen
