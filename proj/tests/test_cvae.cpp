// SPDX-License-Identifier: Apache-2.0
//
// beamgen: limited-feedback robust beamforming toolkit
// Copyright (C) 2026 the beamgen authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "beamgen/cvae.hpp"
#include "beamgen/io.hpp"
#include "beamgen/metrics.hpp"

using namespace beamgen;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "beamgen_test_cvae";
  std::filesystem::create_directories(dir);
  return dir / name;
}

CVector random_cvec(Rng& rng, int n) {
  CVector v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.cnormal(1.0);
  return v;
}

CVector unit(CVector v) { return v / v.norm(); }

// Hand-rolled forward pass, independent of LayerStack::forward: plain loops
// over the exposed parameters in inference mode.
RVector oracle_forward(const LayerStack& stack, RVector x);

RVector oracle_layer(const Layer& layer, const RVector& x) {
  switch (layer.kind()) {
    case LayerKind::FullyConnected: {
      const auto& fc = static_cast<const FullyConnected&>(layer);
      RVector y = RVector::Zero(fc.output_dim());
      for (int i = 0; i < fc.output_dim(); ++i) {
        double acc = fc.bias(i, 0);
        for (int j = 0; j < fc.input_dim(); ++j) acc += fc.weight(i, j) * x(j);
        y(i) = acc;
      }
      return y;
    }
    case LayerKind::BatchNorm: {
      const auto& bn = static_cast<const BatchNorm&>(layer);
      RVector y(x.size());
      for (int i = 0; i < x.size(); ++i)
        y(i) = bn.gamma(i, 0) * (x(i) - bn.running_mean(i, 0)) /
                   std::sqrt(bn.running_var(i, 0) + bn.eps) +
               bn.beta(i, 0);
      return y;
    }
    case LayerKind::ReLU: {
      RVector y(x.size());
      for (int i = 0; i < x.size(); ++i) y(i) = x(i) > 0.0 ? x(i) : 0.0;
      return y;
    }
    case LayerKind::Residual: {
      const auto& block = static_cast<const ResidualBlock&>(layer);
      return x + oracle_forward(block.inner, x);
    }
  }
  throw std::logic_error("unknown layer");
}

RVector oracle_forward(const LayerStack& stack, RVector x) {
  for (const auto& layer : stack.layers) x = oracle_layer(*layer, x);
  return x;
}

// Toy model whose decoder is a single FC layer; the weight block on the
// coarse-estimate rows is the identity and everything else is zero, so the
// decoder passes the coarse estimate through and ignores z and eta.
CvaeModel identity_toy_model(int n_antennas, int latent) {
  const int width = 4;
  LayerStack trunk;
  trunk.layers.push_back(std::make_unique<FullyConnected>(4 * n_antennas + 1, width));
  FullyConnected mu_head(width, latent);
  FullyConnected log_var_head(width, latent); // zero heads: mu = 0, log_var = 0
  LayerStack decoder;
  auto fc = std::make_unique<FullyConnected>(2 * n_antennas + latent + 1, 2 * n_antennas);
  fc->weight.leftCols(2 * n_antennas).setIdentity();
  decoder.layers.push_back(std::move(fc));
  return CvaeModel(CvaeVariant::Offline, n_antennas, latent, std::move(trunk),
                   std::move(mu_head), std::move(log_var_head), std::move(decoder));
}

TrainHyper quick_hyper() {
  TrainHyper hyper;
  hyper.kl_weight = 1.0;
  return hyper;
}

std::vector<double*> flatten_params(CvaeModel& model) {
  std::vector<double*> out;
  model.visit_params([&](RMatrix& value, RMatrix&) {
    for (Eigen::Index j = 0; j < value.cols(); ++j)
      for (Eigen::Index i = 0; i < value.rows(); ++i) out.push_back(&value(i, j));
  });
  return out;
}

std::vector<double> flatten_grads(CvaeModel& model) {
  std::vector<double> out;
  model.visit_params([&](RMatrix&, RMatrix& grad) {
    for (Eigen::Index j = 0; j < grad.cols(); ++j)
      for (Eigen::Index i = 0; i < grad.rows(); ++i) out.push_back(grad(i, j));
  });
  return out;
}

} // namespace

TEST_CASE("zero-initialized heads emit a standard-normal posterior") {
  Rng rng(3);
  CvaeModel model = make_cvae_model(CvaeVariant::Online, 4, 2, 16, rng);
  model.mu_head().weight.setZero();
  model.mu_head().bias.setZero();
  model.log_var_head().weight.setZero();
  model.log_var_head().bias.setZero();
  const GaussianLatent latent = encode(model, random_cvec(rng, 4), random_cvec(rng, 4), 0.5);
  CHECK(latent.mu.norm() == 0.0);
  CHECK(latent.log_var.norm() == 0.0);
}

TEST_CASE("inference is deterministic for a fixed model and input") {
  Rng rng(5);
  CvaeModel model = make_cvae_model(CvaeVariant::Online, 4, 2, 16, rng);
  const CVector h = random_cvec(rng, 4);
  const CVector h_hat = random_cvec(rng, 4);
  const GaussianLatent a = encode(model, h, h_hat, 1.5);
  const GaussianLatent b = encode(model, h, h_hat, 1.5);
  CHECK((a.mu - b.mu).norm() == 0.0);
  CHECK((a.log_var - b.log_var).norm() == 0.0);
  RVector z = RVector::Ones(2);
  CHECK((decode(model, h_hat, z, 1.5) - decode(model, h_hat, z, 1.5)).norm() == 0.0);
}

TEST_CASE("stack forward matches an independently coded forward pass") {
  Rng rng(7);
  CvaeModel model = make_cvae_model(CvaeVariant::Offline, 3, 2, 12, rng);
  // run one training pass so batch-norm running statistics are non-trivial
  std::vector<TrainingRecord> batch;
  for (int k = 0; k < 8; ++k)
    batch.push_back({random_cvec(rng, 3), unit(random_cvec(rng, 3)), rng.uniform(0.1, 2.0)});
  RMatrix noise(2, 8);
  for (int j = 0; j < 8; ++j)
    for (int i = 0; i < 2; ++i) noise(i, j) = rng.normal();
  elbo_loss(model, batch, quick_hyper(), noise);

  RMatrix x(model.encoder_input_dim(), 1);
  for (int i = 0; i < x.rows(); ++i) x(i, 0) = rng.normal();
  const RMatrix via_stack = model.encoder_trunk().forward(x, false);
  const RVector via_oracle = oracle_forward(model.encoder_trunk(), x.col(0));
  CHECK((via_stack.col(0) - via_oracle).cwiseAbs().maxCoeff() <= 1e-10);

  RMatrix xd(model.decoder_input_dim(), 1);
  for (int i = 0; i < xd.rows(); ++i) xd(i, 0) = rng.normal();
  const RMatrix dec_stack = model.decoder().forward(xd, false);
  const RVector dec_oracle = oracle_forward(model.decoder(), xd.col(0));
  CHECK((dec_stack.col(0) - dec_oracle).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("reparameterization matches its formula and limits") {
  GaussianLatent latent;
  latent.mu = RVector::Zero(3);
  latent.log_var = RVector::Zero(3);
  RVector n(3);
  n << 0.3, -1.2, 2.0;
  CHECK((reparameterize(latent, n) - n).norm() == 0.0);

  latent.mu << 1.0, -2.0, 0.5;
  latent.log_var = RVector::Constant(3, -40.0);
  CHECK((reparameterize(latent, n) - latent.mu).norm() <= 1e-8);
}

TEST_CASE("reparameterized draws match the posterior moments") {
  Rng rng(11);
  GaussianLatent latent;
  latent.mu = RVector(2);
  latent.mu << 0.7, -0.3;
  latent.log_var = RVector(2);
  latent.log_var << 0.4, -1.0;
  const int count = 100000;
  RVector mean = RVector::Zero(2), second = RVector::Zero(2);
  for (int k = 0; k < count; ++k) {
    RVector n(2);
    n << rng.normal(), rng.normal();
    const RVector z = reparameterize(latent, n);
    mean += z;
    second += z.cwiseProduct(z);
  }
  mean /= count;
  second /= count;
  for (int d = 0; d < 2; ++d) {
    const double var = std::exp(latent.log_var(d));
    const double se_mean = std::sqrt(var / count);
    CHECK(std::abs(mean(d) - latent.mu(d)) <= 3.0 * se_mean);
    const double sample_var = second(d) - mean(d) * mean(d);
    const double se_var = var * std::sqrt(2.0 / count);
    CHECK(std::abs(sample_var - var) <= 3.0 * se_var);
  }
}

TEST_CASE("identity-configured toy decoder passes the coarse estimate through") {
  Rng rng(13);
  CvaeModel model = identity_toy_model(3, 2);
  const CVector h_hat = unit(random_cvec(rng, 3));
  RVector z(2);
  z << 0.4, -0.9;
  const CVector out = decode(model, h_hat, z, 1.0);
  CHECK((out - h_hat).norm() <= 1e-14);
}

TEST_CASE("latent-independent toy decoder generates identical samples") {
  Rng rng(17);
  CvaeModel model = identity_toy_model(3, 2);
  const CVector h_hat = unit(random_cvec(rng, 3));
  const auto samples = generate_refined_samples(model, h_hat, 1.0, 16, 99);
  for (const CVector& s : samples) CHECK((s - samples.front()).norm() == 0.0);
}

TEST_CASE("refined-sample generation is reproducible from the seed") {
  Rng rng(19);
  CvaeModel model = make_cvae_model(CvaeVariant::Online, 4, 2, 16, rng);
  const CVector h_hat = unit(random_cvec(rng, 4));
  const auto a = generate_refined_samples(model, h_hat, 0.7, 1, 12345);
  const auto b = generate_refined_samples(model, h_hat, 0.7, 1, 12345);
  CHECK((a[0] - b[0]).norm() == 0.0);
}

TEST_CASE("kl term vanishes exactly at the standard-normal posterior") {
  Rng rng(23);
  CvaeModel model = identity_toy_model(3, 2); // zero heads
  std::vector<TrainingRecord> batch;
  for (int k = 0; k < 4; ++k) {
    const CVector h_hat = unit(random_cvec(rng, 3));
    batch.push_back({h_hat, h_hat, 1.0});
  }
  RMatrix noise = RMatrix::Zero(2, 4);
  const LossBreakdown lb = elbo_loss(model, batch, quick_hyper(), noise);
  CHECK(lb.kl_term == 0.0);
}

TEST_CASE("reconstruction term is zero for scaled and rotated outputs") {
  Rng rng(29);
  CvaeModel model = identity_toy_model(4, 2);
  for (int k = 0; k < 20; ++k) {
    const CVector h_hat = unit(random_cvec(rng, 4));
    const double c = rng.uniform(0.2, 5.0);
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    // target is a scaled/rotated copy of the decoder output (= h_hat)
    const CVector h = c * Complex(std::cos(phi), std::sin(phi)) * h_hat;
    const std::vector<TrainingRecord> batch = {{h, h_hat, 1.0}};
    const LossBreakdown lb = elbo_loss(model, batch, quick_hyper(), RMatrix::Zero(2, 1));
    CHECK(std::abs(lb.recon_term) <= 1e-12);
  }
}

TEST_CASE("recon term ignores global scale and phase of the target") {
  Rng rng(31);
  // constant decoder: weight zero, bias fixed, so the output never moves
  CvaeModel model = identity_toy_model(4, 2);
  auto& fc = static_cast<FullyConnected&>(*model.decoder().layers[0]);
  fc.weight.setZero();
  for (int i = 0; i < fc.bias.rows(); ++i) fc.bias(i, 0) = rng.normal();

  const CVector h = random_cvec(rng, 4);
  const CVector h_hat = unit(random_cvec(rng, 4));
  const LossBreakdown base =
      elbo_loss(model, {{h, h_hat, 1.0}}, quick_hyper(), RMatrix::Zero(2, 1));
  for (int k = 0; k < 20; ++k) {
    const double c = rng.uniform(0.2, 5.0);
    const double phi = rng.uniform(0.0, 2.0 * kPi);
    const CVector scaled = c * Complex(std::cos(phi), std::sin(phi)) * h;
    const LossBreakdown lb =
        elbo_loss(model, {{scaled, h_hat, 1.0}}, quick_hyper(), RMatrix::Zero(2, 1));
    CHECK(std::abs(lb.recon_term - base.recon_term) <= 1e-12);
  }
}

TEST_CASE("kl term is nonnegative on random batches") {
  Rng rng(37);
  CvaeModel model = make_cvae_model(CvaeVariant::Online, 4, 2, 16, rng);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<TrainingRecord> batch;
    for (int k = 0; k < 6; ++k)
      batch.push_back({random_cvec(rng, 4), unit(random_cvec(rng, 4)), rng.uniform(0.0, 3.0)});
    RMatrix noise(2, 6);
    for (int j = 0; j < 6; ++j)
      for (int i = 0; i < 2; ++i) noise(i, j) = rng.normal();
    CHECK(elbo_loss(model, batch, quick_hyper(), noise).kl_term >= -1e-12);
  }
}

TEST_CASE("closed-form gaussian kl matches a monte-carlo estimate") {
  Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const int dim = 3;
    RVector mu(dim), log_var(dim);
    for (int d = 0; d < dim; ++d) {
      mu(d) = rng.uniform(-1.5, 1.5);
      log_var(d) = rng.uniform(-1.5, 1.0);
    }
    double closed = 0.0;
    for (int d = 0; d < dim; ++d)
      closed += 0.5 * (std::exp(log_var(d)) + mu(d) * mu(d) - 1.0 - log_var(d));

    const int count = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int k = 0; k < count; ++k) {
      double term = 0.0;
      for (int d = 0; d < dim; ++d) {
        const double z = mu(d) + std::exp(0.5 * log_var(d)) * rng.normal();
        const double log_q = -0.5 * ((z - mu(d)) * (z - mu(d)) / std::exp(log_var(d)) + log_var(d));
        const double log_p = -0.5 * z * z;
        term += log_q - log_p;
      }
      sum += term;
      sumsq += term * term;
    }
    const double estimate = sum / count;
    const double se = std::sqrt((sumsq / count - estimate * estimate) / count);
    CHECK(std::abs(estimate - closed) <= 3.0 * se + 1e-9);
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(43);
  CvaeModel model = make_cvae_model(CvaeVariant::Offline, 3, 2, 8, rng);
  std::vector<TrainingRecord> batch;
  for (int k = 0; k < 5; ++k)
    batch.push_back({random_cvec(rng, 3), unit(random_cvec(rng, 3)), rng.uniform(0.1, 2.0)});
  RMatrix noise(2, 5);
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 2; ++i) noise(i, j) = rng.normal();
  const TrainHyper hyper = quick_hyper();

  elbo_backward(model, batch, hyper, noise);
  const std::vector<double> analytic = flatten_grads(model);
  std::vector<double*> params = flatten_params(model);
  REQUIRE(params.size() == analytic.size());

  const double eps = 1e-5;
  double worst = 0.0;
  Rng pick(4444);
  for (int probe = 0; probe < 200; ++probe) {
    const std::size_t idx = pick.uniform_int(params.size());
    const double saved = *params[idx];
    *params[idx] = saved + eps;
    const double up = elbo_loss(model, batch, hyper, noise).loss;
    *params[idx] = saved - eps;
    const double down = elbo_loss(model, batch, hyper, noise).loss;
    *params[idx] = saved;
    const double fd = (up - down) / (2.0 * eps);
    const double err =
        std::abs(fd - analytic[idx]) / std::max({std::abs(fd), std::abs(analytic[idx]), 1e-6});
    worst = std::max(worst, err);
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("dead relu units receive zero gradient") {
  Rng rng(47);
  CvaeModel model = make_cvae_model(CvaeVariant::Online, 3, 2, 8, rng);
  auto& first_fc = static_cast<FullyConnected&>(*model.encoder_trunk().layers[0]);
  const int dead_row = 2;
  first_fc.weight.row(dead_row).setZero();
  first_fc.bias(dead_row, 0) = -1.0; // pre-activation fixed at -1: never fires
  auto& bn = static_cast<BatchNorm&>(*model.encoder_trunk().layers[1]);
  bn.gamma(dead_row, 0) = 1.0;
  bn.beta(dead_row, 0) = -1.0; // keep the normalized value below zero

  std::vector<TrainingRecord> batch;
  for (int k = 0; k < 6; ++k)
    batch.push_back({random_cvec(rng, 3), unit(random_cvec(rng, 3)), rng.uniform(0.1, 2.0)});
  RMatrix noise(2, 6);
  for (int j = 0; j < 6; ++j)
    for (int i = 0; i < 2; ++i) noise(i, j) = rng.normal();
  elbo_backward(model, batch, quick_hyper(), noise);

  // constant pre-activation has zero batch variance, so the unit stays at
  // beta = -1 after normalization and the ReLU blocks every path through it
  CHECK(first_fc.weight_grad.row(dead_row).cwiseAbs().maxCoeff() == 0.0);
  CHECK(first_fc.bias_grad(dead_row, 0) == 0.0);
}

TEST_CASE("gradients vanish at a stationary point") {
  Rng rng(53);
  CvaeModel model = identity_toy_model(4, 2);
  std::vector<TrainingRecord> batch;
  for (int k = 0; k < 4; ++k) {
    const CVector h_hat = unit(random_cvec(rng, 4));
    batch.push_back({2.0 * h_hat, h_hat, 1.0}); // cosine already maximal
  }
  RMatrix noise(2, 4);
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 2; ++i) noise(i, j) = rng.normal();
  elbo_backward(model, batch, quick_hyper(), noise);
  double norm = 0.0;
  for (double g : flatten_grads(model)) norm += g * g;
  CHECK(std::sqrt(norm) <= 1e-8);
}

TEST_CASE("batch-norm inference decouples records in a batch") {
  Rng rng(59);
  CvaeModel model = make_cvae_model(CvaeVariant::Online, 4, 2, 16, rng);
  std::vector<TrainingRecord> batch;
  for (int k = 0; k < 8; ++k)
    batch.push_back({random_cvec(rng, 4), unit(random_cvec(rng, 4)), rng.uniform(0.1, 2.0)});
  RMatrix noise(2, 8);
  noise.setZero();
  elbo_loss(model, batch, quick_hyper(), noise); // populates running statistics

  RMatrix x(model.encoder_input_dim(), 8);
  for (int j = 0; j < 8; ++j)
    for (int i = 0; i < x.rows(); ++i) x(i, j) = rng.normal();
  const RMatrix batched = model.encoder_trunk().forward(x, false);
  for (int j = 0; j < 8; ++j) {
    const RMatrix single = model.encoder_trunk().forward(x.col(j), false);
    CHECK((batched.col(j) - single.col(0)).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("architecture conformance of both variants") {
  Rng rng(61);
  SUBCASE("offline") {
    CvaeModel model = make_cvae_model(CvaeVariant::Offline, 8, 2, 32, rng);
    const StackShape enc = analyze_stack(model.encoder_trunk());
    CHECK(enc.fbr_units == 4);
    CHECK(enc.residual_blocks == 0);
    CHECK(model.mu_head().output_dim() == 2);
    CHECK(model.log_var_head().output_dim() == 2);
    const StackShape dec = analyze_stack(model.decoder());
    CHECK(dec.fbr_units == 5);
    CHECK(dec.residual_blocks == 6);
    CHECK(dec.ends_with_fc_bn);
    CHECK(model.encoder_input_dim() == 4 * 8 + 1);
    CHECK(model.decoder_input_dim() == 2 * 8 + 2 + 1);
    // residual inner stacks preserve width and carry FBR + FC + BN
    for (const auto& layer : model.decoder().layers)
      if (layer->kind() == LayerKind::Residual) {
        const auto& block = static_cast<const ResidualBlock&>(*layer);
        CHECK(block.inner.input_dim() == block.inner.output_dim());
        CHECK(block.inner.layers.size() == 5);
      }
  }
  SUBCASE("online") {
    CvaeModel model = make_cvae_model(CvaeVariant::Online, 8, 2, 32, rng);
    const StackShape enc = analyze_stack(model.encoder_trunk());
    CHECK(enc.fbr_units == 4);
    const StackShape dec = analyze_stack(model.decoder());
    CHECK(dec.fbr_units == 5);
    CHECK(dec.residual_blocks == 0);
    CHECK(dec.ends_with_fc_bn);
  }
}

TEST_CASE("training history is bit-identical across repeated runs") {
  Rng rng(67);
  std::vector<TrainingRecord> data;
  for (int k = 0; k < 200; ++k) {
    const CVector h_hat = unit(random_cvec(rng, 4));
    data.push_back({h_hat, h_hat, rng.uniform(0.1, 2.0)});
  }
  TrainHyper hyper;
  hyper.epochs = 2;
  hyper.batch_size = 16;
  hyper.hidden_width = 16;
  hyper.rng_seed = 31337;
  const TrainResult a = train_cvae(data, CvaeVariant::Online, hyper);
  const TrainResult b = train_cvae(data, CvaeVariant::Online, hyper);
  REQUIRE(a.epoch_loss.size() == b.epoch_loss.size());
  for (std::size_t k = 0; k < a.epoch_loss.size(); ++k)
    CHECK(a.epoch_loss[k] == b.epoch_loss[k]);
}

TEST_CASE("training rejects a dataset smaller than one batch") {
  std::vector<TrainingRecord> data(10, {CVector::Ones(4), CVector::Ones(4), 1.0});
  TrainHyper hyper;
  hyper.batch_size = 64;
  CHECK_THROWS_AS(train_cvae(data, CvaeVariant::Online, hyper), std::invalid_argument);
  CHECK_THROWS_AS(train_cvae({}, CvaeVariant::Online, hyper), std::invalid_argument);
}

TEST_CASE("the identity mapping task trains to low reconstruction error") {
  Rng rng(71);
  std::vector<TrainingRecord> data;
  for (int k = 0; k < 10000; ++k) {
    const CVector h_hat = unit(random_cvec(rng, 8));
    data.push_back({h_hat, h_hat, 1.0});
  }
  TrainHyper hyper;
  hyper.hidden_width = 64;
  hyper.rng_seed = 5;
  TrainResult result = train_cvae(data, CvaeVariant::Offline, hyper);

  double recon = 0.0;
  const int probes = 500;
  for (int k = 0; k < probes; ++k) {
    const TrainingRecord& rec = data[static_cast<std::size_t>(k)];
    const auto refined = generate_refined_samples(result.model, rec.h_hat, rec.eta, 1,
                                                  derive_seed(9, "probe", k));
    const double cs = std::abs(rec.h.dot(refined[0])) / (rec.h.norm() * refined[0].norm());
    recon += 1.0 - cs;
  }
  CHECK(recon / probes <= 0.05);
}

TEST_CASE("a trained model refines most held-out coarse estimates") {
  Rng rng(73);
  const int n = 8, n_classes = 4;
  // beams and their displaced true-channel centers, about 40 degrees apart
  std::vector<CVector> beams, centers;
  for (int c = 0; c < n_classes; ++c) {
    const CVector b = unit(random_cvec(rng, n));
    CVector ortho = random_cvec(rng, n);
    ortho -= b * b.dot(ortho);
    ortho = unit(ortho);
    beams.push_back(b);
    centers.push_back(unit(std::cos(0.7) * b + std::sin(0.7) * ortho));
  }
  const auto make_record = [&](Rng& r) {
    const int c = static_cast<int>(r.uniform_int(n_classes));
    CVector h = centers[static_cast<std::size_t>(c)];
    for (int i = 0; i < n; ++i) h(i) += r.cnormal(0.05);
    const double eta = std::norm(h.dot(beams[static_cast<std::size_t>(c)]));
    return TrainingRecord{h, beams[static_cast<std::size_t>(c)], eta};
  };

  std::vector<TrainingRecord> train_set;
  for (int k = 0; k < 4000; ++k) train_set.push_back(make_record(rng));
  TrainHyper hyper;
  hyper.hidden_width = 64;
  hyper.epochs = 6;
  hyper.rng_seed = 17;
  TrainResult result = train_cvae(train_set, CvaeVariant::Online, hyper);

  int improved = 0;
  const int probes = 200;
  for (int k = 0; k < probes; ++k) {
    const TrainingRecord rec = make_record(rng);
    const double coarse_angle = principal_angle_deg(rec.h, rec.h_hat);
    const auto samples = generate_refined_samples(result.model, rec.h_hat, rec.eta, 100,
                                                  derive_seed(23, "bench", k));
    std::vector<double> angles;
    angles.reserve(samples.size());
    for (const CVector& s : samples) angles.push_back(principal_angle_deg(rec.h, s));
    if (median(angles) <= coarse_angle) ++improved;
  }
  CHECK(improved >= 0.6 * probes);
}

TEST_CASE("model container round-trips bit-exactly") {
  Rng rng(79);
  CvaeModel model = make_cvae_model(CvaeVariant::Offline, 4, 2, 16, rng);
  model.cqi_mean = -1.25;
  model.cqi_std = 0.75;
  // make running statistics non-trivial before saving
  std::vector<TrainingRecord> batch;
  for (int k = 0; k < 8; ++k)
    batch.push_back({random_cvec(rng, 4), unit(random_cvec(rng, 4)), rng.uniform(0.1, 2.0)});
  RMatrix noise = RMatrix::Zero(2, 8);
  elbo_loss(model, batch, quick_hyper(), noise);

  const auto path = temp_file("model.bgvm");
  save_model(model, path);
  CvaeModel loaded = load_model(path);
  CHECK(loaded.variant() == model.variant());
  CHECK(loaded.latent_dim() == model.latent_dim());
  CHECK(loaded.n_antennas() == model.n_antennas());
  CHECK(loaded.cqi_mean == model.cqi_mean);
  CHECK(loaded.cqi_std == model.cqi_std);

  // identical parameters, bit for bit
  std::vector<double> a, b;
  model.visit_params([&](RMatrix& v, RMatrix&) {
    for (Eigen::Index j = 0; j < v.cols(); ++j)
      for (Eigen::Index i = 0; i < v.rows(); ++i) a.push_back(v(i, j));
  });
  loaded.visit_params([&](RMatrix& v, RMatrix&) {
    for (Eigen::Index j = 0; j < v.cols(); ++j)
      for (Eigen::Index i = 0; i < v.rows(); ++i) b.push_back(v(i, j));
  });
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] == b[k]);

  const CVector h = random_cvec(rng, 4);
  const CVector h_hat = unit(random_cvec(rng, 4));
  const GaussianLatent la = encode(model, h, h_hat, 0.4);
  const GaussianLatent lb = encode(loaded, h, h_hat, 0.4);
  CHECK((la.mu - lb.mu).norm() == 0.0);
  CHECK((la.log_var - lb.log_var).norm() == 0.0);
}

TEST_CASE("model loading rejects broken containers") {
  Rng rng(83);
  CvaeModel model = make_cvae_model(CvaeVariant::Online, 4, 2, 8, rng);
  const auto path = temp_file("ok.bgvm");
  save_model(model, path);

  const auto truncated = temp_file("truncated.bgvm");
  {
    std::ifstream in(path, std::ios::binary);
    std::ofstream out(truncated, std::ios::binary);
    std::vector<char> buf(200);
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    out.write(buf.data(), in.gcount());
  }
  CHECK_THROWS_AS(load_model(truncated), FormatError);

  const auto badmagic = temp_file("badmagic.bgvm");
  {
    std::ofstream out(badmagic, std::ios::binary);
    out.write("XXXX\0\0\0\0", 8);
  }
  CHECK_THROWS_AS(load_model(badmagic), FormatError);
}

TEST_CASE("assembling a model with a broken dimension chain fails") {
  LayerStack trunk;
  trunk.layers.push_back(std::make_unique<FullyConnected>(13, 8));
  trunk.layers.push_back(std::make_unique<FullyConnected>(9, 8)); // mismatch
  FullyConnected mu(8, 2), lv(8, 2);
  LayerStack decoder;
  decoder.layers.push_back(std::make_unique<FullyConnected>(9, 6));
  CHECK_THROWS_AS(CvaeModel(CvaeVariant::Online, 3, 2, std::move(trunk), std::move(mu),
                            std::move(lv), std::move(decoder)),
                  FormatError);
}
