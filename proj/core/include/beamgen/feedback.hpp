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

#include "beamgen/types.hpp"

namespace beamgen {

/// Port-to-antenna mapping with orthonormal columns (decimated unitary DFT).
struct VirtualAntennaMatrix {
  CMatrix q; // n_antennas x n_ports

  int n_antennas() const { return static_cast<int>(q.rows()); }
  int n_ports() const { return static_cast<int>(q.cols()); }
};

enum class CodebookKind { TypeI, TypeIIBasis };

struct Codebook {
  std::vector<CVector> vectors; // unit-norm, length n_ports
  CodebookKind kind = CodebookKind::TypeI;

  int size() const { return static_cast<int>(vectors.size()); }
  int n_ports() const { return vectors.empty() ? 0 : static_cast<int>(vectors.front().size()); }
};

struct FeedbackRecord {
  int ue_index = -1;
  int time_index = -1;
  int pmi = 0;
  double cqi = 0.0;
};

/// Columns are the DFT columns at indices floor(k*N_A/N_P), k = 0..N_P-1.
VirtualAntennaMatrix build_virtual_antenna_matrix(int n_antennas, int n_ports);

/// Oversampled-DFT beam grid: M = n_ports * oversampling unit-norm beams,
/// beam m entry k = exp(j*2*pi*k*m/M)/sqrt(N_P).
Codebook build_type1_codebook(int n_ports, int oversampling);

/// Orthonormal port-domain DFT basis used by the high-resolution estimator.
Codebook build_type2_basis(int n_ports);

/// PMI = argmax_m |a_m^H Q^H h|^2 (ties go to the smallest index),
/// CQI = the maximal score. A zero channel yields pmi = 0, cqi = 0.
FeedbackRecord compute_feedback(const CVector& h, const VirtualAntennaMatrix& Q,
                                const Codebook& cb, int ue_index = -1, int time_index = -1);

/// Unit-norm coarse estimate Q a_pmi.
CVector coarse_estimate(const FeedbackRecord& rec, const VirtualAntennaMatrix& Q,
                        const Codebook& cb);

/// Multi-beam estimate: project Q^H h onto the basis, keep the k_beams largest
/// coefficients, quantize amplitudes (relative to the largest, uniform in
/// [0,1]) to amp_bits and phases to phase_bits, reconstruct through Q and
/// normalize. amp_bits/phase_bits <= 0 selects the unquantized mode.
CVector type2_estimate(const CVector& h, const VirtualAntennaMatrix& Q, const Codebook& basis,
                       int k_beams, int amp_bits, int phase_bits);

/// i.i.d. samples coarse_estimate + CN(0, sigma^2 I); deterministic in seed.
std::vector<CVector> sample_codebook_channel(const FeedbackRecord& rec,
                                             const VirtualAntennaMatrix& Q, const Codebook& cb,
                                             double sigma, int count, std::uint64_t seed);

/// Feedback log: CSV with columns (ue, t, pmi, cqi).
void save_feedback_csv(const std::vector<FeedbackRecord>& records,
                       const std::filesystem::path& path, const std::string& comment = "");

} // namespace beamgen
