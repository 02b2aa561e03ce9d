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
#include <memory>
#include <vector>

#include "beamgen/rng.hpp"
#include "beamgen/types.hpp"

namespace beamgen {

// Dense float64 network stack written from scratch: fully connected, batch
// norm, ReLU and residual blocks, with reverse-mode gradients for every
// parameter. Batches are stored feature-major (one column per sample).

enum class LayerKind : std::uint32_t {
  FullyConnected = 0,
  BatchNorm = 1,
  ReLU = 2,
  Residual = 3,
};

using ParamVisitor = std::function<void(RMatrix& value, RMatrix& grad)>;

class Layer {
public:
  virtual ~Layer() = default;
  virtual LayerKind kind() const = 0;
  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual RMatrix forward(const RMatrix& x, bool training) = 0;
  virtual RMatrix backward(const RMatrix& grad_out) = 0;
  virtual void visit_params(const ParamVisitor& fn) = 0;
  virtual void zero_grads() = 0;
  virtual std::unique_ptr<Layer> clone() const = 0;
};

class LayerStack {
public:
  LayerStack() = default;
  LayerStack(const LayerStack& other);
  LayerStack& operator=(const LayerStack& other);
  LayerStack(LayerStack&&) = default;
  LayerStack& operator=(LayerStack&&) = default;

  std::vector<std::unique_ptr<Layer>> layers;

  RMatrix forward(const RMatrix& x, bool training);
  RMatrix backward(const RMatrix& grad_out);
  void visit_params(const ParamVisitor& fn);
  void zero_grads();
  int input_dim() const;
  int output_dim() const;
  void validate_chain() const; // throws on a broken dimension chain
};

class FullyConnected final : public Layer {
public:
  FullyConnected(int in, int out);

  RMatrix weight; // out x in
  RMatrix bias;   // out x 1
  RMatrix weight_grad;
  RMatrix bias_grad;

  LayerKind kind() const override { return LayerKind::FullyConnected; }
  int input_dim() const override { return static_cast<int>(weight.cols()); }
  int output_dim() const override { return static_cast<int>(weight.rows()); }
  RMatrix forward(const RMatrix& x, bool training) override;
  RMatrix backward(const RMatrix& grad_out) override;
  void visit_params(const ParamVisitor& fn) override;
  void zero_grads() override;
  std::unique_ptr<Layer> clone() const override;

private:
  RMatrix x_cache_;
};

/// Per-feature batch normalization. Training mode normalizes with batch
/// statistics (biased variance) and folds them into the running statistics
/// with the given momentum; inference mode uses the running statistics only,
/// so records never couple.
class BatchNorm final : public Layer {
public:
  explicit BatchNorm(int dim, double momentum = 0.9);

  RMatrix gamma, beta;       // dim x 1
  RMatrix gamma_grad, beta_grad;
  RMatrix running_mean, running_var;
  double momentum = 0.9;
  double eps = 1e-5;

  LayerKind kind() const override { return LayerKind::BatchNorm; }
  int input_dim() const override { return static_cast<int>(gamma.rows()); }
  int output_dim() const override { return static_cast<int>(gamma.rows()); }
  RMatrix forward(const RMatrix& x, bool training) override;
  RMatrix backward(const RMatrix& grad_out) override;
  void visit_params(const ParamVisitor& fn) override;
  void zero_grads() override;
  std::unique_ptr<Layer> clone() const override;

private:
  RMatrix xhat_cache_;
  RVector inv_std_cache_;
};

class ReLU final : public Layer {
public:
  explicit ReLU(int dim) : dim_(dim) {}

  LayerKind kind() const override { return LayerKind::ReLU; }
  int input_dim() const override { return dim_; }
  int output_dim() const override { return dim_; }
  RMatrix forward(const RMatrix& x, bool training) override;
  RMatrix backward(const RMatrix& grad_out) override;
  void visit_params(const ParamVisitor&) override {}
  void zero_grads() override {}
  std::unique_ptr<Layer> clone() const override;

private:
  int dim_ = 0;
  RMatrix mask_;
};

/// y = x + inner(x); the inner stack must preserve width.
class ResidualBlock final : public Layer {
public:
  explicit ResidualBlock(LayerStack inner);

  LayerStack inner;

  LayerKind kind() const override { return LayerKind::Residual; }
  int input_dim() const override { return inner.input_dim(); }
  int output_dim() const override { return inner.output_dim(); }
  RMatrix forward(const RMatrix& x, bool training) override;
  RMatrix backward(const RMatrix& grad_out) override;
  void visit_params(const ParamVisitor& fn) override;
  void zero_grads() override;
  std::unique_ptr<Layer> clone() const override;
};

enum class CvaeVariant : std::uint32_t { Offline = 0, Online = 1 };

struct GaussianLatent {
  RVector mu;
  RVector log_var;
};

struct TrainingRecord {
  CVector h;     ///< refinement target (ground truth or high-resolution estimate)
  CVector h_hat; ///< coarse estimate
  double eta = 0.0; ///< CQI
};

struct TrainHyper {
  double learning_rate = 1e-3;
  std::vector<int> lr_decay_epochs = {3, 7};
  double lr_decay_factor = 0.1;
  int epochs = 10;
  int batch_size = 64;
  double kl_weight = 1.0; ///< beta on the KL term
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int hidden_width = 0; ///< 0 selects the variant default (512 offline, 128 online)
  int latent_dim = 2;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Conditional VAE over channel vectors: the encoder maps (h, h_hat, eta) to a
/// diagonal Gaussian over the latent, the decoder maps (h_hat, z, eta) back to
/// a channel vector. Complex vectors enter the networks as stacked (Re, Im)
/// reals; the CQI enters as log10(eta + 1e-12) standardized with training-set
/// statistics.
class CvaeModel {
public:
  CvaeModel() = default;
  CvaeModel(CvaeVariant variant, int n_antennas, int latent_dim, LayerStack encoder_trunk,
            FullyConnected mu_head, FullyConnected log_var_head, LayerStack decoder);

  CvaeVariant variant() const { return variant_; }
  int n_antennas() const { return n_antennas_; }
  int latent_dim() const { return latent_dim_; }
  int encoder_input_dim() const { return 4 * n_antennas_ + 1; }
  int decoder_input_dim() const { return 2 * n_antennas_ + latent_dim_ + 1; }

  LayerStack& encoder_trunk() { return encoder_trunk_; }
  FullyConnected& mu_head() { return *mu_head_; }
  FullyConnected& log_var_head() { return *log_var_head_; }
  LayerStack& decoder() { return decoder_; }
  const LayerStack& encoder_trunk() const { return encoder_trunk_; }
  const FullyConnected& mu_head() const { return *mu_head_; }
  const FullyConnected& log_var_head() const { return *log_var_head_; }
  const LayerStack& decoder() const { return decoder_; }

  double cqi_mean = 0.0;
  double cqi_std = 1.0;

  void visit_params(const ParamVisitor& fn);
  void zero_grads();
  std::size_t parameter_count();
  void validate_chain() const;

  double standardized_cqi(double eta) const;

private:
  CvaeVariant variant_ = CvaeVariant::Offline;
  int n_antennas_ = 0;
  int latent_dim_ = 0;
  LayerStack encoder_trunk_;
  std::unique_ptr<FullyConnected> mu_head_;
  std::unique_ptr<FullyConnected> log_var_head_;
  LayerStack decoder_;

public:
  CvaeModel(const CvaeModel& other);
  CvaeModel& operator=(const CvaeModel& other);
  CvaeModel(CvaeModel&&) = default;
  CvaeModel& operator=(CvaeModel&&) = default;
};

/// Offline: encoder = 4 FBR units + two parallel FC heads; decoder = an FBR
/// lift, 6 residual blocks, 4 more FBR units, and an FC+BN output pair.
/// Online: same encoder shape; decoder = 5 FBR units + FC+BN output.
CvaeModel make_cvae_model(CvaeVariant variant, int n_antennas, int latent_dim,
                          int hidden_width, Rng& init_rng);

/// Layer-count summary used to assert the architecture programmatically.
struct StackShape {
  int fbr_units = 0;        ///< consecutive FC+BN+ReLU triples at the top level
  int residual_blocks = 0;
  bool ends_with_fc_bn = false;
};
StackShape analyze_stack(const LayerStack& stack);

/// Inference-mode posterior parameters for one record.
GaussianLatent encode(CvaeModel& model, const CVector& h, const CVector& h_hat, double eta);

/// z = mu + exp(log_var / 2) .* noise.
RVector reparameterize(const GaussianLatent& latent, const RVector& noise);

/// Inference-mode decoder mean, reassembled to a complex vector (not
/// normalized; sampling helpers normalize before use).
CVector decode(CvaeModel& model, const CVector& h_hat, const RVector& z, double eta);

struct LossBreakdown {
  double loss = 0.0;
  double kl_term = 0.0;
  double recon_term = 0.0;
};

/// Training-mode forward pass of the objective
/// mean_b [ beta * KL(q || N(0, I)) + (1 - |h^H y| / (||h|| ||y|| + 1e-12)) ].
/// `noise` supplies the reparameterization draws (latent_dim x batch).
LossBreakdown elbo_loss(CvaeModel& model, const std::vector<TrainingRecord>& batch,
                        const TrainHyper& hyper, const RMatrix& noise);

/// Forward plus full reverse-mode pass; gradients accumulate into the model
/// tensors (previous gradients are cleared first).
LossBreakdown elbo_backward(CvaeModel& model, const std::vector<TrainingRecord>& batch,
                            const TrainHyper& hyper, const RMatrix& noise);

class AdamOptimizer {
public:
  AdamOptimizer(CvaeModel& model, const TrainHyper& hyper);
  void step(CvaeModel& model, double learning_rate);

private:
  RVector m_, v_;
  long step_count_ = 0;
  double beta1_, beta2_, eps_;
};

struct TrainResult {
  CvaeModel model;
  std::vector<double> epoch_loss;
};

/// Seeded shuffling, Adam with the stepped learning-rate schedule, batch-norm
/// running statistics with momentum 0.9. The CQI standardization constants are
/// fit on the dataset and stored in the model.
TrainResult train_cvae(const std::vector<TrainingRecord>& dataset, CvaeVariant variant,
                       const TrainHyper& hyper);

/// `count` decodes with prior draws z ~ N(0, I); outputs are L2-normalized.
std::vector<CVector> generate_refined_samples(CvaeModel& model, const CVector& h_hat,
                                              double eta, int count, std::uint64_t seed);

// Versioned binary container: magic "BGVM", version, variant, latent_dim,
// layer manifest with parameters inline as little-endian float64 arrays.
// Loading validates the dimension chain.
void save_model(const CvaeModel& model, const std::filesystem::path& path);
CvaeModel load_model(const std::filesystem::path& path);

} // namespace beamgen
