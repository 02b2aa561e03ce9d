// SPDX-License-Identifier: Apache-2.0
//
// beamgen: limited-feedback robust beamforming toolkit
// Copyright (C) 2026 the beamgen authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "beamgen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "beamgen/io.hpp"

namespace beamgen {

double principal_angle_rad(const CVector& h, const CVector& h_est) {
  if (h.size() != h_est.size()) throw std::invalid_argument("dimension mismatch");
  const double nh = h.norm();
  const double ne = h_est.norm();
  if (nh == 0.0 || ne == 0.0)
    throw std::domain_error("principal angle of a zero vector is undefined");
  // atan2 of the orthogonal and parallel components; equal to
  // arccos(|h^H e| / (||h|| ||e||)) but keeps full precision near 0. The sine
  // is averaged over both residuals so angle(a, b) == angle(b, a) exactly.
  const CVector u = h / nh;
  const CVector v = h_est / ne;
  const Complex inner = u.dot(v); // u^H v
  const double c = std::clamp(std::abs(inner), 0.0, 1.0);
  const double s = 0.5 * ((v - inner * u).norm() + (u - std::conj(inner) * v).norm());
  return std::atan2(s, c);
}

double principal_angle_deg(const CVector& h, const CVector& h_est) {
  return principal_angle_rad(h, h_est) * 180.0 / kPi;
}

CdfCurve empirical_cdf(std::vector<double> samples, RVector grid) {
  if (samples.empty()) throw std::invalid_argument("empirical_cdf needs samples");
  std::sort(samples.begin(), samples.end());
  CdfCurve curve;
  curve.values.resize(grid.size());
  const double n = static_cast<double>(samples.size());
  for (int k = 0; k < grid.size(); ++k) {
    const auto it = std::upper_bound(samples.begin(), samples.end(), grid(k));
    curve.values(k) = static_cast<double>(it - samples.begin()) / n;
  }
  curve.grid = std::move(grid);
  return curve;
}

bool cdf_dominates(const CdfCurve& a, const CdfCurve& b, double cutoff, double tol) {
  if (a.grid.size() != b.grid.size() || (a.grid - b.grid).cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument("cdf_dominates requires a shared grid");
  for (int k = 0; k < a.grid.size(); ++k) {
    if (a.grid(k) > cutoff) break;
    if (a.values(k) < b.values(k) - tol) return false;
  }
  return true;
}

double median(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("median of an empty set");
  const std::size_t mid = samples.size() / 2;
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(mid),
                   samples.end());
  double upper = samples[mid];
  if (samples.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

void save_cdf_csv(const std::vector<LabelledCdf>& curves, const std::filesystem::path& path,
                  const std::string& comment) {
  CsvWriter csv(path);
  if (!comment.empty()) csv.comment(comment);
  csv.header({"grid_value", "cdf_value", "series_label"});
  for (const LabelledCdf& series : curves) {
    for (int k = 0; k < series.curve.grid.size(); ++k) {
      csv.begin_row();
      csv.field(series.curve.grid(k));
      csv.field(series.curve.values(k));
      csv.field(series.label);
      csv.end_row();
    }
  }
}

} // namespace beamgen
