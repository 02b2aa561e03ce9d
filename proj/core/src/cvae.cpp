// SPDX-License-Identifier: Apache-2.0
//
// beamgen: limited-feedback robust beamforming toolkit
// Copyright (C) 2026 the beamgen authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "beamgen/cvae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "beamgen/io.hpp"

namespace beamgen {

// ---------------------------------------------------------------------------
// layers
// ---------------------------------------------------------------------------

LayerStack::LayerStack(const LayerStack& other) {
  layers.reserve(other.layers.size());
  for (const auto& layer : other.layers) layers.push_back(layer->clone());
}

LayerStack& LayerStack::operator=(const LayerStack& other) {
  if (this != &other) {
    layers.clear();
    layers.reserve(other.layers.size());
    for (const auto& layer : other.layers) layers.push_back(layer->clone());
  }
  return *this;
}

RMatrix LayerStack::forward(const RMatrix& x, bool training) {
  RMatrix acts = x;
  for (auto& layer : layers) acts = layer->forward(acts, training);
  return acts;
}

RMatrix LayerStack::backward(const RMatrix& grad_out) {
  RMatrix grad = grad_out;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) grad = (*it)->backward(grad);
  return grad;
}

void LayerStack::visit_params(const ParamVisitor& fn) {
  for (auto& layer : layers) layer->visit_params(fn);
}

void LayerStack::zero_grads() {
  for (auto& layer : layers) layer->zero_grads();
}

int LayerStack::input_dim() const { return layers.empty() ? 0 : layers.front()->input_dim(); }

int LayerStack::output_dim() const { return layers.empty() ? 0 : layers.back()->output_dim(); }

void LayerStack::validate_chain() const {
  for (std::size_t k = 0; k + 1 < layers.size(); ++k)
    if (layers[k]->output_dim() != layers[k + 1]->input_dim())
      throw FormatError("layer dimension chain is broken at layer " + std::to_string(k));
  for (const auto& layer : layers)
    if (layer->kind() == LayerKind::Residual) {
      const auto& block = static_cast<const ResidualBlock&>(*layer);
      block.inner.validate_chain();
      if (block.inner.input_dim() != block.inner.output_dim())
        throw FormatError("residual block does not preserve width");
    }
}

FullyConnected::FullyConnected(int in, int out)
    : weight(RMatrix::Zero(out, in)),
      bias(RMatrix::Zero(out, 1)),
      weight_grad(RMatrix::Zero(out, in)),
      bias_grad(RMatrix::Zero(out, 1)) {}

RMatrix FullyConnected::forward(const RMatrix& x, bool training) {
  if (training) x_cache_ = x; // inference leaves the layer untouched
  RMatrix y = weight * x;
  y.colwise() += bias.col(0);
  return y;
}

RMatrix FullyConnected::backward(const RMatrix& grad_out) {
  weight_grad += grad_out * x_cache_.transpose();
  bias_grad.col(0) += grad_out.rowwise().sum();
  return weight.transpose() * grad_out;
}

void FullyConnected::visit_params(const ParamVisitor& fn) {
  fn(weight, weight_grad);
  fn(bias, bias_grad);
}

void FullyConnected::zero_grads() {
  weight_grad.setZero();
  bias_grad.setZero();
}

std::unique_ptr<Layer> FullyConnected::clone() const {
  return std::make_unique<FullyConnected>(*this);
}

BatchNorm::BatchNorm(int dim, double momentum_)
    : gamma(RMatrix::Ones(dim, 1)),
      beta(RMatrix::Zero(dim, 1)),
      gamma_grad(RMatrix::Zero(dim, 1)),
      beta_grad(RMatrix::Zero(dim, 1)),
      running_mean(RMatrix::Zero(dim, 1)),
      running_var(RMatrix::Ones(dim, 1)),
      momentum(momentum_) {}

RMatrix BatchNorm::forward(const RMatrix& x, bool training) {
  if (training) {
    const double m = static_cast<double>(x.cols());
    const RVector mean = x.rowwise().mean();
    RMatrix centered = x.colwise() - mean;
    const RVector var = centered.array().square().rowwise().mean();
    inv_std_cache_ = (var.array() + eps).rsqrt();
    xhat_cache_ = centered.array().colwise() * inv_std_cache_.array();

    const RVector var_unbiased = m > 1.0 ? RVector(var * (m / (m - 1.0))) : var;
    running_mean.col(0) = momentum * running_mean.col(0) + (1.0 - momentum) * mean;
    running_var.col(0) = momentum * running_var.col(0) + (1.0 - momentum) * var_unbiased;

    RMatrix y = xhat_cache_.array().colwise() * gamma.col(0).array();
    y.colwise() += beta.col(0);
    return y;
  }
  const RVector inv_std = (running_var.col(0).array() + eps).rsqrt();
  RMatrix y = ((x.colwise() - running_mean.col(0)).array().colwise() *
               (inv_std.array() * gamma.col(0).array()))
                  .matrix();
  y.colwise() += beta.col(0);
  return y;
}

RMatrix BatchNorm::backward(const RMatrix& grad_out) {
  const double m = static_cast<double>(grad_out.cols());
  gamma_grad.col(0) += (grad_out.array() * xhat_cache_.array()).rowwise().sum().matrix();
  beta_grad.col(0) += grad_out.rowwise().sum();

  const RMatrix gxhat = grad_out.array().colwise() * gamma.col(0).array();
  const RVector sum_g = gxhat.rowwise().sum();
  const RVector sum_gx = (gxhat.array() * xhat_cache_.array()).rowwise().sum();

  RMatrix dx = m * gxhat;
  dx.colwise() -= sum_g;
  dx.array() -= xhat_cache_.array().colwise() * sum_gx.array();
  dx.array() = dx.array().colwise() * (inv_std_cache_.array() / m);
  return dx;
}

void BatchNorm::visit_params(const ParamVisitor& fn) {
  fn(gamma, gamma_grad);
  fn(beta, beta_grad);
}

void BatchNorm::zero_grads() {
  gamma_grad.setZero();
  beta_grad.setZero();
}

std::unique_ptr<Layer> BatchNorm::clone() const { return std::make_unique<BatchNorm>(*this); }

RMatrix ReLU::forward(const RMatrix& x, bool training) {
  if (training) mask_ = (x.array() > 0.0).cast<double>();
  return x.cwiseMax(0.0);
}

RMatrix ReLU::backward(const RMatrix& grad_out) {
  return grad_out.array() * mask_.array();
}

std::unique_ptr<Layer> ReLU::clone() const { return std::make_unique<ReLU>(*this); }

ResidualBlock::ResidualBlock(LayerStack inner_) : inner(std::move(inner_)) {
  if (inner.input_dim() != inner.output_dim())
    throw std::invalid_argument("residual inner stack must preserve width");
}

RMatrix ResidualBlock::forward(const RMatrix& x, bool training) {
  return x + inner.forward(x, training);
}

RMatrix ResidualBlock::backward(const RMatrix& grad_out) {
  return grad_out + inner.backward(grad_out);
}

void ResidualBlock::visit_params(const ParamVisitor& fn) { inner.visit_params(fn); }

void ResidualBlock::zero_grads() { inner.zero_grads(); }

std::unique_ptr<Layer> ResidualBlock::clone() const {
  return std::make_unique<ResidualBlock>(*this);
}

// ---------------------------------------------------------------------------
// model assembly
// ---------------------------------------------------------------------------

void TrainHyper::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (!(lr_decay_factor > 0.0)) throw std::invalid_argument("lr_decay_factor must be > 0");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(kl_weight >= 0.0)) throw std::invalid_argument("kl_weight must be >= 0");
  if (latent_dim < 1) throw std::invalid_argument("latent_dim must be >= 1");
  if (hidden_width < 0) throw std::invalid_argument("hidden_width must be >= 0");
}

CvaeModel::CvaeModel(CvaeVariant variant, int n_antennas, int latent_dim,
                     LayerStack encoder_trunk, FullyConnected mu_head,
                     FullyConnected log_var_head, LayerStack decoder)
    : variant_(variant),
      n_antennas_(n_antennas),
      latent_dim_(latent_dim),
      encoder_trunk_(std::move(encoder_trunk)),
      mu_head_(std::make_unique<FullyConnected>(std::move(mu_head))),
      log_var_head_(std::make_unique<FullyConnected>(std::move(log_var_head))),
      decoder_(std::move(decoder)) {
  validate_chain();
}

CvaeModel::CvaeModel(const CvaeModel& other)
    : cqi_mean(other.cqi_mean),
      cqi_std(other.cqi_std),
      variant_(other.variant_),
      n_antennas_(other.n_antennas_),
      latent_dim_(other.latent_dim_),
      encoder_trunk_(other.encoder_trunk_),
      mu_head_(other.mu_head_ ? std::make_unique<FullyConnected>(*other.mu_head_) : nullptr),
      log_var_head_(other.log_var_head_ ? std::make_unique<FullyConnected>(*other.log_var_head_)
                                        : nullptr),
      decoder_(other.decoder_) {}

CvaeModel& CvaeModel::operator=(const CvaeModel& other) {
  if (this != &other) {
    CvaeModel copy(other);
    *this = std::move(copy);
  }
  return *this;
}

void CvaeModel::visit_params(const ParamVisitor& fn) {
  encoder_trunk_.visit_params(fn);
  if (mu_head_) mu_head_->visit_params(fn);
  if (log_var_head_) log_var_head_->visit_params(fn);
  decoder_.visit_params(fn);
}

void CvaeModel::zero_grads() {
  encoder_trunk_.zero_grads();
  if (mu_head_) mu_head_->zero_grads();
  if (log_var_head_) log_var_head_->zero_grads();
  decoder_.zero_grads();
}

std::size_t CvaeModel::parameter_count() {
  std::size_t count = 0;
  visit_params([&](RMatrix& value, RMatrix&) { count += static_cast<std::size_t>(value.size()); });
  return count;
}

void CvaeModel::validate_chain() const {
  encoder_trunk_.validate_chain();
  decoder_.validate_chain();
  if (encoder_trunk_.input_dim() != encoder_input_dim())
    throw FormatError("encoder input does not match 4*N_A + 1");
  if (decoder_.input_dim() != decoder_input_dim())
    throw FormatError("decoder input does not match 2*N_A + latent_dim + 1");
  if (decoder_.output_dim() != 2 * n_antennas_)
    throw FormatError("decoder output does not match 2*N_A");
  if (!mu_head_ || !log_var_head_) throw FormatError("missing encoder heads");
  if (mu_head_->input_dim() != encoder_trunk_.output_dim() ||
      log_var_head_->input_dim() != encoder_trunk_.output_dim())
    throw FormatError("encoder heads do not match the trunk width");
  if (mu_head_->output_dim() != latent_dim_ || log_var_head_->output_dim() != latent_dim_)
    throw FormatError("encoder heads do not match the latent dimension");
}

double CvaeModel::standardized_cqi(double eta) const {
  return (std::log10(eta + 1e-12) - cqi_mean) / cqi_std;
}

namespace {

// He-uniform for layers feeding a ReLU, Xavier-uniform elsewhere. Weights are
// filled column-major so initialization is a pure function of the seed.
void init_fc(FullyConnected& fc, Rng& rng, bool feeds_relu) {
  const double fan_in = static_cast<double>(fc.input_dim());
  const double fan_out = static_cast<double>(fc.output_dim());
  const double bound =
      feeds_relu ? std::sqrt(6.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
  for (Eigen::Index j = 0; j < fc.weight.cols(); ++j)
    for (Eigen::Index i = 0; i < fc.weight.rows(); ++i)
      fc.weight(i, j) = rng.uniform(-bound, bound);
  fc.bias.setZero();
}

void push_fbr(LayerStack& stack, int in, int out, Rng& rng) {
  auto fc = std::make_unique<FullyConnected>(in, out);
  init_fc(*fc, rng, true);
  stack.layers.push_back(std::move(fc));
  stack.layers.push_back(std::make_unique<BatchNorm>(out));
  stack.layers.push_back(std::make_unique<ReLU>(out));
}

LayerStack make_residual_inner(int width, Rng& rng) {
  LayerStack inner;
  push_fbr(inner, width, width, rng);
  auto fc = std::make_unique<FullyConnected>(width, width);
  init_fc(*fc, rng, false);
  inner.layers.push_back(std::move(fc));
  inner.layers.push_back(std::make_unique<BatchNorm>(width));
  return inner;
}

} // namespace

CvaeModel make_cvae_model(CvaeVariant variant, int n_antennas, int latent_dim,
                          int hidden_width, Rng& init_rng) {
  if (n_antennas < 1) throw std::invalid_argument("n_antennas must be >= 1");
  if (latent_dim < 1) throw std::invalid_argument("latent_dim must be >= 1");
  const int width =
      hidden_width > 0 ? hidden_width : (variant == CvaeVariant::Offline ? 512 : 128);

  const int enc_in = 4 * n_antennas + 1;
  LayerStack trunk;
  push_fbr(trunk, enc_in, width, init_rng);
  for (int k = 0; k < 3; ++k) push_fbr(trunk, width, width, init_rng);

  FullyConnected mu_head(width, latent_dim);
  init_fc(mu_head, init_rng, false);
  FullyConnected log_var_head(width, latent_dim);
  init_fc(log_var_head, init_rng, false);

  const int dec_in = 2 * n_antennas + latent_dim + 1;
  LayerStack decoder;
  push_fbr(decoder, dec_in, width, init_rng);
  if (variant == CvaeVariant::Offline) {
    for (int k = 0; k < 6; ++k)
      decoder.layers.push_back(std::make_unique<ResidualBlock>(make_residual_inner(width, init_rng)));
    for (int k = 0; k < 4; ++k) push_fbr(decoder, width, width, init_rng);
  } else {
    for (int k = 0; k < 4; ++k) push_fbr(decoder, width, width, init_rng);
  }
  auto out_fc = std::make_unique<FullyConnected>(width, 2 * n_antennas);
  init_fc(*out_fc, init_rng, false);
  decoder.layers.push_back(std::move(out_fc));
  decoder.layers.push_back(std::make_unique<BatchNorm>(2 * n_antennas));

  return CvaeModel(variant, n_antennas, latent_dim, std::move(trunk), std::move(mu_head),
                   std::move(log_var_head), std::move(decoder));
}

StackShape analyze_stack(const LayerStack& stack) {
  StackShape shape;
  const auto& layers = stack.layers;
  std::size_t i = 0;
  while (i < layers.size()) {
    if (layers[i]->kind() == LayerKind::Residual) {
      ++shape.residual_blocks;
      ++i;
    } else if (i + 2 < layers.size() && layers[i]->kind() == LayerKind::FullyConnected &&
               layers[i + 1]->kind() == LayerKind::BatchNorm &&
               layers[i + 2]->kind() == LayerKind::ReLU) {
      ++shape.fbr_units;
      i += 3;
    } else {
      ++i;
    }
  }
  const std::size_t n = layers.size();
  shape.ends_with_fc_bn = n >= 2 && layers[n - 2]->kind() == LayerKind::FullyConnected &&
                          layers[n - 1]->kind() == LayerKind::BatchNorm;
  return shape;
}

// ---------------------------------------------------------------------------
// forward / loss / backward
// ---------------------------------------------------------------------------

namespace {

RVector stack_complex(const CVector& v) {
  RVector out(2 * v.size());
  out.head(v.size()) = v.real();
  out.tail(v.size()) = v.imag();
  return out;
}

CVector unstack_complex(const Eigen::Ref<const RVector>& v) {
  const Eigen::Index n = v.size() / 2;
  CVector out(n);
  out.real() = v.head(n);
  out.imag() = v.tail(n);
  return out;
}

struct BatchInputs {
  RMatrix truth;  // 2N x B, stacked (Re, Im) target channels
  RMatrix coarse; // 2N x B
  RMatrix eta;    // 1 x B, standardized log CQI
};

BatchInputs build_inputs(const CvaeModel& model, const std::vector<TrainingRecord>& batch) {
  const int n = model.n_antennas();
  const int b = static_cast<int>(batch.size());
  BatchInputs in;
  in.truth.resize(2 * n, b);
  in.coarse.resize(2 * n, b);
  in.eta.resize(1, b);
  for (int k = 0; k < b; ++k) {
    const TrainingRecord& rec = batch[static_cast<std::size_t>(k)];
    if (rec.h.size() != n || rec.h_hat.size() != n)
      throw std::invalid_argument("record dimension does not match the model");
    in.truth.col(k) = stack_complex(rec.h);
    in.coarse.col(k) = stack_complex(rec.h_hat);
    in.eta(0, k) = model.standardized_cqi(rec.eta);
  }
  return in;
}

struct ForwardPass {
  BatchInputs in;
  RMatrix mu, log_var; // latent x B
  RMatrix z;           // latent x B
  RMatrix output;      // 2N x B, decoder mean
  LossBreakdown loss;
};

// Cosine similarity |h^H y| / (||h|| ||y|| + 1e-12) evaluated on the stacked
// real layout. With h = hR + j hI and y likewise, Re(h^H y) = [hR; hI] . y and
// Im(h^H y) = [-hI; hR] . y.
struct CosineTerms {
  double s_re = 0.0, s_im = 0.0, mag = 0.0, norm_y = 0.0, norm_h = 0.0, denom = 0.0;
  double cosine = 0.0;
};

CosineTerms cosine_similarity(const Eigen::Ref<const RVector>& h2n,
                              const Eigen::Ref<const RVector>& y2n) {
  const Eigen::Index n = h2n.size() / 2;
  CosineTerms t;
  t.s_re = h2n.dot(y2n);
  t.s_im = h2n.head(n).dot(y2n.tail(n)) - h2n.tail(n).dot(y2n.head(n));
  t.mag = std::hypot(t.s_re, t.s_im);
  t.norm_y = y2n.norm();
  t.norm_h = h2n.norm();
  t.denom = t.norm_h * t.norm_y + 1e-12;
  t.cosine = t.mag / t.denom;
  return t;
}

ForwardPass run_forward(CvaeModel& model, const std::vector<TrainingRecord>& batch,
                        const TrainHyper& hyper, const RMatrix& noise, bool training) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const int b = static_cast<int>(batch.size());
  const int latent = model.latent_dim();
  if (noise.rows() != latent || noise.cols() != b)
    throw std::invalid_argument("noise must be latent_dim x batch");

  ForwardPass fp;
  fp.in = build_inputs(model, batch);

  RMatrix enc_in(model.encoder_input_dim(), b);
  enc_in.topRows(fp.in.truth.rows()) = fp.in.truth;
  enc_in.middleRows(fp.in.truth.rows(), fp.in.coarse.rows()) = fp.in.coarse;
  enc_in.bottomRows(1) = fp.in.eta;

  const RMatrix feat = model.encoder_trunk().forward(enc_in, training);
  fp.mu = model.mu_head().forward(feat, training);
  fp.log_var = model.log_var_head().forward(feat, training);
  fp.z = fp.mu.array() + (fp.log_var.array() * 0.5).exp() * noise.array();

  RMatrix dec_in(model.decoder_input_dim(), b);
  dec_in.topRows(fp.in.coarse.rows()) = fp.in.coarse;
  dec_in.middleRows(fp.in.coarse.rows(), latent) = fp.z;
  dec_in.bottomRows(1) = fp.in.eta;
  fp.output = model.decoder().forward(dec_in, training);

  double kl_sum = 0.0, recon_sum = 0.0;
  for (int k = 0; k < b; ++k) {
    kl_sum += 0.5 * (fp.log_var.col(k).array().exp() + fp.mu.col(k).array().square() - 1.0 -
                     fp.log_var.col(k).array())
                        .sum();
    const CosineTerms cos = cosine_similarity(fp.in.truth.col(k), fp.output.col(k));
    recon_sum += 1.0 - cos.cosine;
  }
  fp.loss.kl_term = kl_sum / b;
  fp.loss.recon_term = recon_sum / b;
  fp.loss.loss = hyper.kl_weight * fp.loss.kl_term + fp.loss.recon_term;
  return fp;
}

} // namespace

GaussianLatent encode(CvaeModel& model, const CVector& h, const CVector& h_hat, double eta) {
  if (h.size() != model.n_antennas() || h_hat.size() != model.n_antennas())
    throw std::invalid_argument("input dimension does not match the model");
  RMatrix x(model.encoder_input_dim(), 1);
  x.col(0).head(2 * model.n_antennas()) = stack_complex(h);
  x.col(0).segment(2 * model.n_antennas(), 2 * model.n_antennas()) = stack_complex(h_hat);
  x(model.encoder_input_dim() - 1, 0) = model.standardized_cqi(eta);
  const RMatrix feat = model.encoder_trunk().forward(x, false);
  GaussianLatent latent;
  latent.mu = model.mu_head().forward(feat, false).col(0);
  latent.log_var = model.log_var_head().forward(feat, false).col(0);
  return latent;
}

RVector reparameterize(const GaussianLatent& latent, const RVector& noise) {
  if (latent.mu.size() != noise.size() || latent.log_var.size() != noise.size())
    throw std::invalid_argument("noise dimension does not match the latent");
  return latent.mu.array() + (latent.log_var.array() * 0.5).exp() * noise.array();
}

CVector decode(CvaeModel& model, const CVector& h_hat, const RVector& z, double eta) {
  if (h_hat.size() != model.n_antennas())
    throw std::invalid_argument("input dimension does not match the model");
  if (z.size() != model.latent_dim())
    throw std::invalid_argument("latent dimension does not match the model");
  RMatrix x(model.decoder_input_dim(), 1);
  x.col(0).head(2 * model.n_antennas()) = stack_complex(h_hat);
  x.col(0).segment(2 * model.n_antennas(), model.latent_dim()) = z;
  x(model.decoder_input_dim() - 1, 0) = model.standardized_cqi(eta);
  const RMatrix y = model.decoder().forward(x, false);
  return unstack_complex(y.col(0));
}

LossBreakdown elbo_loss(CvaeModel& model, const std::vector<TrainingRecord>& batch,
                        const TrainHyper& hyper, const RMatrix& noise) {
  return run_forward(model, batch, hyper, noise, true).loss;
}

LossBreakdown elbo_backward(CvaeModel& model, const std::vector<TrainingRecord>& batch,
                            const TrainHyper& hyper, const RMatrix& noise) {
  model.zero_grads();
  ForwardPass fp = run_forward(model, batch, hyper, noise, true);
  const int b = static_cast<int>(batch.size());
  const int latent = model.latent_dim();
  const double inv_b = 1.0 / b;

  // d(mean recon)/d(decoder output)
  RMatrix grad_out(fp.output.rows(), fp.output.cols());
  for (int k = 0; k < b; ++k) {
    const RVector h2n = fp.in.truth.col(k);
    const RVector y = fp.output.col(k);
    const CosineTerms t = cosine_similarity(h2n, y);
    RVector dcos = RVector::Zero(y.size());
    if (t.mag > 0.0 && t.norm_y > 0.0) {
      const Eigen::Index n = h2n.size() / 2;
      RVector dir_re = h2n;
      RVector dir_im(h2n.size());
      dir_im.head(n) = -h2n.tail(n);
      dir_im.tail(n) = h2n.head(n);
      dcos = (t.s_re * dir_re + t.s_im * dir_im) / (t.mag * t.denom) -
             (t.mag * t.norm_h / (t.norm_y * t.denom * t.denom)) * y;
    }
    grad_out.col(k) = -inv_b * dcos;
  }

  const RMatrix grad_dec_in = model.decoder().backward(grad_out);
  const RMatrix grad_z = grad_dec_in.middleRows(fp.in.coarse.rows(), latent);

  const RMatrix half_std_noise =
      ((fp.log_var.array() * 0.5).exp() * noise.array() * 0.5).matrix();
  const double klw = hyper.kl_weight * inv_b;
  const RMatrix grad_mu = grad_z + klw * fp.mu;
  const RMatrix grad_log_var =
      (grad_z.array() * half_std_noise.array()).matrix() +
      klw * 0.5 * (fp.log_var.array().exp() - 1.0).matrix();

  const RMatrix grad_feat =
      model.mu_head().backward(grad_mu) + model.log_var_head().backward(grad_log_var);
  model.encoder_trunk().backward(grad_feat);
  return fp.loss;
}

// ---------------------------------------------------------------------------
// optimization
// ---------------------------------------------------------------------------

AdamOptimizer::AdamOptimizer(CvaeModel& model, const TrainHyper& hyper)
    : beta1_(hyper.adam_beta1), beta2_(hyper.adam_beta2), eps_(hyper.adam_eps) {
  const std::size_t count = model.parameter_count();
  m_ = RVector::Zero(static_cast<Eigen::Index>(count));
  v_ = RVector::Zero(static_cast<Eigen::Index>(count));
}

void AdamOptimizer::step(CvaeModel& model, double learning_rate) {
  ++step_count_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  Eigen::Index offset = 0;
  model.visit_params([&](RMatrix& value, RMatrix& grad) {
    for (Eigen::Index j = 0; j < value.cols(); ++j)
      for (Eigen::Index i = 0; i < value.rows(); ++i) {
        const double g = grad(i, j);
        double& m = m_(offset);
        double& v = v_(offset);
        m = beta1_ * m + (1.0 - beta1_) * g;
        v = beta2_ * v + (1.0 - beta2_) * g * g;
        value(i, j) -= learning_rate * (m / bc1) / (std::sqrt(v / bc2) + eps_);
        ++offset;
      }
  });
}

TrainResult train_cvae(const std::vector<TrainingRecord>& dataset, CvaeVariant variant,
                       const TrainHyper& hyper) {
  hyper.validate();
  if (dataset.empty()) throw std::invalid_argument("empty training dataset");
  if (static_cast<int>(dataset.size()) < hyper.batch_size)
    throw std::invalid_argument("dataset smaller than one batch");

  const int n_antennas = static_cast<int>(dataset.front().h.size());
  Rng init_rng(derive_seed(hyper.rng_seed, "cvae-init",
                           variant == CvaeVariant::Offline ? 0u : 1u));
  TrainResult result;
  result.model =
      make_cvae_model(variant, n_antennas, hyper.latent_dim, hyper.hidden_width, init_rng);

  // CQI standardization constants, fit once on the training set.
  double mean = 0.0;
  for (const TrainingRecord& rec : dataset) mean += std::log10(rec.eta + 1e-12);
  mean /= static_cast<double>(dataset.size());
  double var = 0.0;
  for (const TrainingRecord& rec : dataset) {
    const double d = std::log10(rec.eta + 1e-12) - mean;
    var += d * d;
  }
  var /= static_cast<double>(dataset.size());
  result.model.cqi_mean = mean;
  result.model.cqi_std = std::sqrt(var) > 1e-12 ? std::sqrt(var) : 1.0;

  AdamOptimizer adam(result.model, hyper);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0u);

  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    double lr = hyper.learning_rate;
    for (int decay_epoch : hyper.lr_decay_epochs)
      if (epoch >= decay_epoch) lr *= hyper.lr_decay_factor;

    Rng shuffle_rng(derive_seed(hyper.rng_seed, "cvae-shuffle", static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);
    Rng noise_rng(derive_seed(hyper.rng_seed, "cvae-noise", static_cast<std::uint64_t>(epoch)));

    double epoch_loss = 0.0;
    std::size_t start = 0;
    while (start < order.size()) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(hyper.batch_size));
      std::vector<TrainingRecord> batch;
      batch.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) batch.push_back(dataset[order[i]]);

      RMatrix noise(hyper.latent_dim, static_cast<Eigen::Index>(batch.size()));
      for (Eigen::Index j = 0; j < noise.cols(); ++j)
        for (Eigen::Index i = 0; i < noise.rows(); ++i) noise(i, j) = noise_rng.normal();

      const LossBreakdown lb = elbo_backward(result.model, batch, hyper, noise);
      adam.step(result.model, lr);
      epoch_loss += lb.loss * static_cast<double>(batch.size());
      start = stop;
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(dataset.size()));
  }
  return result;
}

std::vector<CVector> generate_refined_samples(CvaeModel& model, const CVector& h_hat,
                                              double eta, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("count must be >= 1");
  Rng rng(seed);
  std::vector<CVector> samples;
  samples.reserve(static_cast<std::size_t>(count));
  for (int s = 0; s < count; ++s) {
    RVector z(model.latent_dim());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    CVector sample = decode(model, h_hat, z, eta);
    const double norm = sample.norm();
    if (norm > 0.0) sample /= norm;
    samples.push_back(std::move(sample));
  }
  return samples;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

constexpr char kModelMagic[4] = {'B', 'G', 'V', 'M'};
constexpr std::uint32_t kModelVersion = 1;

void write_matrix(BinaryWriter& w, const RMatrix& m) {
  w.f64_array(m.data(), static_cast<std::size_t>(m.size()));
}

void read_matrix(BinaryReader& r, RMatrix& m) {
  r.f64_array(m.data(), static_cast<std::size_t>(m.size()));
}

void write_stack(BinaryWriter& w, const LayerStack& stack);

void write_layer(BinaryWriter& w, const Layer& layer) {
  w.u32(static_cast<std::uint32_t>(layer.kind()));
  switch (layer.kind()) {
    case LayerKind::FullyConnected: {
      const auto& fc = static_cast<const FullyConnected&>(layer);
      w.u32(static_cast<std::uint32_t>(fc.input_dim()));
      w.u32(static_cast<std::uint32_t>(fc.output_dim()));
      write_matrix(w, fc.weight);
      write_matrix(w, fc.bias);
      break;
    }
    case LayerKind::BatchNorm: {
      const auto& bn = static_cast<const BatchNorm&>(layer);
      w.u32(static_cast<std::uint32_t>(bn.input_dim()));
      w.f64(bn.momentum);
      w.f64(bn.eps);
      write_matrix(w, bn.gamma);
      write_matrix(w, bn.beta);
      write_matrix(w, bn.running_mean);
      write_matrix(w, bn.running_var);
      break;
    }
    case LayerKind::ReLU:
      w.u32(static_cast<std::uint32_t>(layer.input_dim()));
      break;
    case LayerKind::Residual:
      write_stack(w, static_cast<const ResidualBlock&>(layer).inner);
      break;
  }
}

void write_stack(BinaryWriter& w, const LayerStack& stack) {
  w.u32(static_cast<std::uint32_t>(stack.layers.size()));
  for (const auto& layer : stack.layers) write_layer(w, *layer);
}

LayerStack read_stack(BinaryReader& r);

std::unique_ptr<Layer> read_layer(BinaryReader& r) {
  const std::uint32_t kind = r.u32();
  switch (static_cast<LayerKind>(kind)) {
    case LayerKind::FullyConnected: {
      const int in = static_cast<int>(r.u32());
      const int out = static_cast<int>(r.u32());
      if (in < 1 || out < 1) throw FormatError("invalid layer dimensions");
      auto fc = std::make_unique<FullyConnected>(in, out);
      read_matrix(r, fc->weight);
      read_matrix(r, fc->bias);
      return fc;
    }
    case LayerKind::BatchNorm: {
      const int dim = static_cast<int>(r.u32());
      if (dim < 1) throw FormatError("invalid layer dimensions");
      auto bn = std::make_unique<BatchNorm>(dim);
      bn->momentum = r.f64();
      bn->eps = r.f64();
      read_matrix(r, bn->gamma);
      read_matrix(r, bn->beta);
      read_matrix(r, bn->running_mean);
      read_matrix(r, bn->running_var);
      for (Eigen::Index i = 0; i < bn->running_var.size(); ++i)
        if (!(bn->running_var(i, 0) > 0.0))
          throw FormatError("batch-norm running variance must be positive");
      return bn;
    }
    case LayerKind::ReLU:
      return std::make_unique<ReLU>(static_cast<int>(r.u32()));
    case LayerKind::Residual:
      return std::make_unique<ResidualBlock>(read_stack(r));
  }
  throw FormatError("unknown layer kind " + std::to_string(kind));
}

LayerStack read_stack(BinaryReader& r) {
  const std::uint32_t count = r.u32();
  if (count > 1u << 20) throw FormatError("implausible layer count");
  LayerStack stack;
  stack.layers.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) stack.layers.push_back(read_layer(r));
  return stack;
}

std::unique_ptr<FullyConnected> read_fc(BinaryReader& r) {
  auto layer = read_layer(r);
  if (layer->kind() != LayerKind::FullyConnected)
    throw FormatError("expected a fully connected head");
  return std::unique_ptr<FullyConnected>(static_cast<FullyConnected*>(layer.release()));
}

} // namespace

void save_model(const CvaeModel& model, const std::filesystem::path& path) {
  BinaryWriter w(path);
  w.magic(kModelMagic);
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(model.variant()));
  w.u32(static_cast<std::uint32_t>(model.latent_dim()));
  w.u32(static_cast<std::uint32_t>(model.n_antennas()));
  w.f64(model.cqi_mean);
  w.f64(model.cqi_std);
  write_stack(w, model.encoder_trunk());
  write_layer(w, model.mu_head());
  write_layer(w, model.log_var_head());
  write_stack(w, model.decoder());
}

CvaeModel load_model(const std::filesystem::path& path) {
  BinaryReader r(path);
  r.expect_magic(kModelMagic);
  const std::uint32_t version = r.u32();
  if (version != kModelVersion)
    throw FormatError("unsupported model version " + std::to_string(version));
  const auto variant = static_cast<CvaeVariant>(r.u32());
  if (variant != CvaeVariant::Offline && variant != CvaeVariant::Online)
    throw FormatError("unknown model variant");
  const int latent = static_cast<int>(r.u32());
  const int n_antennas = static_cast<int>(r.u32());
  const double cqi_mean = r.f64();
  const double cqi_std = r.f64();

  LayerStack trunk = read_stack(r);
  auto mu_head = read_fc(r);
  auto log_var_head = read_fc(r);
  LayerStack decoder = read_stack(r);

  CvaeModel model(variant, n_antennas, latent, std::move(trunk), std::move(*mu_head),
                  std::move(*log_var_head), std::move(decoder));
  model.cqi_mean = cqi_mean;
  model.cqi_std = cqi_std;
  return model;
}

} // namespace beamgen
