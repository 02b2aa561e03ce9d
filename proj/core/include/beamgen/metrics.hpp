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

#include <filesystem>
#include <string>
#include <vector>

#include "beamgen/types.hpp"

namespace beamgen {

/// arccos(|h^H e| / (||h|| ||e||)); 0 means aligned, pi/2 means orthogonal.
/// The cosine is clamped to [0, 1] before arccos. Throws std::domain_error on
/// a zero vector.
double principal_angle_rad(const CVector& h, const CVector& h_est);
double principal_angle_deg(const CVector& h, const CVector& h_est);

struct CdfCurve {
  RVector grid;   ///< sorted evaluation points
  RVector values; ///< nondecreasing, in [0, 1]
};

/// values[k] = fraction of samples <= grid[k].
CdfCurve empirical_cdf(std::vector<double> samples, RVector grid);

/// True when a.values >= b.values - tol pointwise on grid entries <= cutoff.
/// Both curves must share the same grid.
bool cdf_dominates(const CdfCurve& a, const CdfCurve& b, double cutoff, double tol = 0.0);

double median(std::vector<double> samples);

struct LabelledCdf {
  std::string label;
  CdfCurve curve;
};

/// CSV with columns (grid_value, cdf_value, series_label).
void save_cdf_csv(const std::vector<LabelledCdf>& curves, const std::filesystem::path& path,
                  const std::string& comment = "");

} // namespace beamgen
