// SPDX-License-Identifier: Apache-2.0
//
// beamgen: limited-feedback robust beamforming toolkit
// Copyright (C) 2026 the beamgen authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include <benchmark/benchmark.h>

#include "beamgen/beamforming.hpp"
#include "beamgen/channel.hpp"
#include "beamgen/cvae.hpp"
#include "beamgen/feedback.hpp"
#include "beamgen/rng.hpp"

using namespace beamgen;

namespace {

ChannelSet make_channels(int n_ues, int n, std::uint64_t seed) {
  Rng rng(seed);
  ChannelSet H(static_cast<std::size_t>(n_ues));
  for (auto& h : H) {
    h.resize(n);
    for (int i = 0; i < n; ++i) h(i) = rng.cnormal(1.0);
  }
  return H;
}

void BM_Wmmse(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const ChannelSet H = make_channels(4, n, 1);
  SolverOptions opts;
  opts.sigma = SolverOptions::uniform_sigma(1.0, 4);
  for (auto _ : state) {
    const WmmseResult res = wmmse(H, 10.0, opts);
    benchmark::DoNotOptimize(res.beams.v.front()(0));
  }
}
BENCHMARK(BM_Wmmse)->Arg(8)->Arg(16)->Arg(32);

void BM_StochasticIterations(benchmark::State& state) {
  const int n = 16;
  const ChannelSet H = make_channels(4, n, 2);
  SolverOptions opts;
  opts.sigma = SolverOptions::uniform_sigma(1.0, 4);
  const int samples = static_cast<int>(state.range(0));
  for (auto _ : state) {
    Rng rng(3);
    const StochasticResult res = stochastic_wmmse(
        [&](int) {
          ChannelSet sample = H;
          for (auto& h : sample)
            for (Eigen::Index i = 0; i < h.size(); ++i) h(i) += rng.cnormal(0.1);
          return sample;
        },
        samples, 10.0, opts);
    benchmark::DoNotOptimize(res.beams.v.front()(0));
  }
}
BENCHMARK(BM_StochasticIterations)->Arg(20)->Arg(100);

void BM_ChannelGeneration(benchmark::State& state) {
  ChannelConfig cfg;
  cfg.n_antennas = 16;
  cfg.n_ues = 4;
  cfg.n_snapshots = static_cast<int>(state.range(0));
  cfg.n_paths = 3;
  for (auto _ : state) {
    const ChannelDataset data = generate_channel_set(cfg);
    benchmark::DoNotOptimize(data.h(0, 0)(0));
  }
}
BENCHMARK(BM_ChannelGeneration)->Arg(1000);

void BM_FeedbackRound(benchmark::State& state) {
  const VirtualAntennaMatrix vam = build_virtual_antenna_matrix(32, 8);
  const Codebook cb = build_type1_codebook(8, 4);
  const ChannelSet H = make_channels(1, 32, 4);
  for (auto _ : state) {
    const FeedbackRecord rec = compute_feedback(H[0], vam, cb);
    benchmark::DoNotOptimize(rec.cqi);
  }
}
BENCHMARK(BM_FeedbackRound);

void BM_CvaeTrainStep(benchmark::State& state) {
  Rng rng(5);
  const int n = 16;
  CvaeModel model = make_cvae_model(CvaeVariant::Offline, n, 2,
                                    static_cast<int>(state.range(0)), rng);
  TrainHyper hyper;
  std::vector<TrainingRecord> batch;
  for (int k = 0; k < hyper.batch_size; ++k) {
    CVector h(n), h_hat(n);
    for (int i = 0; i < n; ++i) {
      h(i) = rng.cnormal(1.0);
      h_hat(i) = rng.cnormal(1.0);
    }
    h_hat /= h_hat.norm();
    batch.push_back({h, h_hat, 1.0});
  }
  RMatrix noise(2, hyper.batch_size);
  for (Eigen::Index j = 0; j < noise.cols(); ++j)
    for (Eigen::Index i = 0; i < noise.rows(); ++i) noise(i, j) = rng.normal();
  AdamOptimizer adam(model, hyper);
  for (auto _ : state) {
    elbo_backward(model, batch, hyper, noise);
    adam.step(model, hyper.learning_rate);
  }
}
BENCHMARK(BM_CvaeTrainStep)->Arg(128)->Arg(512);

} // namespace

BENCHMARK_MAIN();
