#include "vtmm/net.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>

#include <spdlog/spdlog.h>

#include "vtmm/error.hpp"

namespace vtmm {

namespace {

std::atomic<std::uint64_t> g_version_counter{1};

double sigmoid(double z) {
  double p;
  if (z >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    p = e / (1.0 + e);
  }
  // Keep the output strictly inside (0,1) even when exp saturates.
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(p, lo, hi);
}

double activate(Activation act, double z) { return act == Activation::Relu ? std::max(z, 0.0) : z; }

double activation_slope(Activation act, double z) {
  if (act == Activation::Identity) return 1.0;
  return z > 0.0 ? 1.0 : 0.0;
}

void require_size(std::span<const double> v, std::size_t expected, const char* what) {
  if (v.size() != expected) {
    throw Error(Errc::DimensionMismatch, std::string(what) + " has " + std::to_string(v.size()) +
                                             " values, expected " + std::to_string(expected));
  }
}

// out[i] = act(pre[i]) * mask[i]
void apply_activation(Activation act, std::span<const double> pre, const Vector* mask, Vector& out) {
  out.resize(pre.size());
  for (std::size_t i = 0; i < pre.size(); ++i) {
    const double a = activate(act, pre[i]);
    out[i] = mask ? a * (*mask)[i] : a;
  }
}

}  // namespace

void NetDims::validate() const {
  if (video_in == 0 || text_in == 0 || projection == 0) {
    throw Error(Errc::DimensionMismatch, "network dimensions must be positive");
  }
  if (head.empty() || head.back() != 1) {
    throw Error(Errc::DimensionMismatch, "scoring head must end in a single output unit");
  }
  if (std::find(head.begin(), head.end(), std::size_t{0}) != head.end()) {
    throw Error(Errc::DimensionMismatch, "head widths must be positive");
  }
}

std::size_t NetDims::parameter_count() const {
  std::size_t n = (video_in + 1) * projection + (text_in + 1) * projection;
  std::size_t in = projection;
  for (std::size_t out : head) {
    n += (in + 1) * out;
    in = out;
  }
  return n;
}

void NetworkGradient::zero() {
  for (auto& layer : layers) {
    std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
}

MatchingNetwork::MatchingNetwork(NetDims dims, double dropout_rate) : dims_(std::move(dims)) {
  dims_.validate();
  set_dropout_rate(dropout_rate);
  layers_.emplace_back(dims_.video_in, dims_.projection);
  layers_.emplace_back(dims_.text_in, dims_.projection);
  std::size_t in = dims_.projection;
  for (std::size_t out : dims_.head) {
    layers_.emplace_back(in, out);
    in = out;
  }
  bump_version();
}

MatchingNetwork MatchingNetwork::initialized(NetDims dims, std::uint64_t seed, double dropout_rate) {
  MatchingNetwork net(std::move(dims), dropout_rate);
  for (std::size_t l = 0; l < net.layers_.size(); ++l) {
    DenseLayer& layer = net.layers_[l];
    Rng rng(derive_seed(seed, l));
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
    for (double& w : layer.weights) w = rng.uniform(-limit, limit);
  }
  net.bump_version();
  return net;
}

void MatchingNetwork::set_dropout_rate(double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(Errc::InvalidArgument, "dropout rate must lie in [0,1)");
  dropout_rate_ = rate;
}

DenseLayer& MatchingNetwork::mutable_layer(std::size_t index) {
  bump_version();
  return layers_.at(index);
}

void MatchingNetwork::bump_version() { version_ = g_version_counter.fetch_add(1, std::memory_order_relaxed); }

Vector MatchingNetwork::project(const DenseLayer& layer, std::span<const double> input, std::size_t batch) const {
  Vector pre(batch * layer.out);
  kernels::affine_forward(backend_, layer.weights, layer.bias, layer.shape(), input, batch, pre);
  Vector out;
  apply_activation(dims_.projection_activation, pre, nullptr, out);
  return out;
}

Vector MatchingNetwork::project_video(std::span<const double> video) const {
  require_size(video, dims_.video_in, "video input");
  return project(layers_[0], video, 1);
}

Vector MatchingNetwork::project_text(std::span<const double> text) const {
  require_size(text, dims_.text_in, "text input");
  return project(layers_[1], text, 1);
}

Vector MatchingNetwork::head_forward(std::span<const double> fused, std::size_t batch) const {
  Vector act(fused.begin(), fused.end());
  const auto head_layers = head();
  for (std::size_t k = 0; k < head_layers.size(); ++k) {
    const DenseLayer& layer = head_layers[k];
    Vector pre(batch * layer.out);
    kernels::affine_forward(backend_, layer.weights, layer.bias, layer.shape(), act, batch, pre);
    if (k + 1 < head_layers.size()) {
      apply_activation(Activation::Relu, pre, nullptr, act);
    } else {
      for (double& z : pre) z = sigmoid(z);
      act = std::move(pre);
    }
  }
  return act;
}

double MatchingNetwork::score_projected(std::span<const double> video_projected,
                                        std::span<const double> text_projected) const {
  require_size(video_projected, dims_.projection, "projected video");
  require_size(text_projected, dims_.projection, "projected text");
  Vector fused(dims_.projection);
  for (std::size_t i = 0; i < fused.size(); ++i) fused[i] = video_projected[i] * text_projected[i];
  return head_forward(fused, 1)[0];
}

double MatchingNetwork::forward(std::span<const double> video, std::span<const double> text) const {
  return score_projected(project_video(video), project_text(text));
}

Vector MatchingNetwork::forward_batch(std::span<const double> videos, std::span<const double> texts,
                                      std::size_t batch) const {
  require_size(videos, batch * dims_.video_in, "video batch");
  require_size(texts, batch * dims_.text_in, "text batch");
  const Vector pv = project(layers_[0], videos, batch);
  const Vector pt = project(layers_[1], texts, batch);
  Vector fused(pv.size());
  for (std::size_t i = 0; i < fused.size(); ++i) fused[i] = pv[i] * pt[i];
  return head_forward(fused, batch);
}

DropoutMasks MatchingNetwork::sample_masks(std::size_t batch, Rng& rng) const {
  const double keep_scale = 1.0 / (1.0 - dropout_rate_);
  auto draw = [&](std::size_t n) {
    Vector m(n);
    for (double& v : m) v = rng.uniform01() < dropout_rate_ ? 0.0 : keep_scale;
    return m;
  };
  DropoutMasks masks;
  masks.video = draw(batch * dims_.projection);
  masks.text = draw(batch * dims_.projection);
  for (std::size_t k = 0; k + 1 < dims_.head.size(); ++k) masks.head.push_back(draw(batch * dims_.head[k]));
  return masks;
}

ForwardCache MatchingNetwork::forward_train(std::span<const double> videos, std::span<const double> texts,
                                            std::size_t batch, const DropoutMasks* masks) const {
  require_size(videos, batch * dims_.video_in, "video batch");
  require_size(texts, batch * dims_.text_in, "text batch");
  if (masks) {
    require_size(masks->video, batch * dims_.projection, "video dropout mask");
    require_size(masks->text, batch * dims_.projection, "text dropout mask");
    if (masks->head.size() + 1 != dims_.head.size()) {
      throw Error(Errc::DimensionMismatch, "dropout mask count does not match the head depth");
    }
  }

  ForwardCache c;
  c.network_version = version_;
  c.batch = batch;
  c.video_input.assign(videos.begin(), videos.end());
  c.text_input.assign(texts.begin(), texts.end());
  if (masks) c.masks = *masks;

  const DenseLayer& vp = layers_[0];
  const DenseLayer& tp = layers_[1];
  c.video_pre.resize(batch * vp.out);
  c.text_pre.resize(batch * tp.out);
  kernels::affine_forward(backend_, vp.weights, vp.bias, vp.shape(), videos, batch, c.video_pre);
  kernels::affine_forward(backend_, tp.weights, tp.bias, tp.shape(), texts, batch, c.text_pre);
  apply_activation(dims_.projection_activation, c.video_pre, masks ? &c.masks->video : nullptr, c.video_out);
  apply_activation(dims_.projection_activation, c.text_pre, masks ? &c.masks->text : nullptr, c.text_out);

  c.fused.resize(c.video_out.size());
  for (std::size_t i = 0; i < c.fused.size(); ++i) c.fused[i] = c.video_out[i] * c.text_out[i];

  const auto head_layers = head();
  const Vector* input = &c.fused;
  for (std::size_t k = 0; k < head_layers.size(); ++k) {
    const DenseLayer& layer = head_layers[k];
    Vector pre(batch * layer.out);
    kernels::affine_forward(backend_, layer.weights, layer.bias, layer.shape(), *input, batch, pre);
    c.head_pre.push_back(std::move(pre));
    if (k + 1 < head_layers.size()) {
      Vector out;
      apply_activation(Activation::Relu, c.head_pre.back(), masks ? &c.masks->head[k] : nullptr, out);
      c.head_out.push_back(std::move(out));
      input = &c.head_out.back();
    }
  }
  c.output.resize(batch);
  for (std::size_t s = 0; s < batch; ++s) c.output[s] = sigmoid(c.head_pre.back()[s]);
  return c;
}

NetworkGradient MatchingNetwork::zero_gradient() const {
  NetworkGradient g;
  for (const auto& layer : layers_) g.layers.emplace_back(layer.in, layer.out);
  return g;
}

void MatchingNetwork::backward(const ForwardCache& cache, std::span<const int> labels, NetworkGradient& grad) const {
  if (cache.network_version != version_) {
    throw Error(Errc::StaleCache, "forward cache was produced by a different parameter version");
  }
  const std::size_t batch = cache.batch;
  if (labels.size() != batch) throw Error(Errc::DimensionMismatch, "label count does not match batch");
  if (grad.layers.size() != layers_.size()) throw Error(Errc::DimensionMismatch, "gradient shape mismatch");

  const double inv_batch = 1.0 / static_cast<double>(batch);
  // d(loss)/d(logit) for sigmoid + BCE, evaluated at the clamped prediction.
  Vector delta(batch);
  for (std::size_t s = 0; s < batch; ++s) {
    const double p = std::clamp(cache.output[s], kLossClamp, 1.0 - kLossClamp);
    delta[s] = (p - static_cast<double>(labels[s])) * inv_batch;
  }

  const std::size_t head_first = 2;
  const std::size_t head_count = dims_.head.size();
  for (std::size_t k = head_count; k-- > 0;) {
    const DenseLayer& layer = layers_[head_first + k];
    DenseLayer& g = grad.layers[head_first + k];
    const Vector& input = k == 0 ? cache.fused : cache.head_out[k - 1];
    kernels::affine_backward_params(backend_, input, delta, layer.shape(), batch, g.weights, g.bias);

    Vector d_input(batch * layer.in);
    kernels::affine_backward_input(backend_, layer.weights, delta, layer.shape(), batch, d_input);
    if (k > 0) {
      const Vector& pre = cache.head_pre[k - 1];
      const Vector* mask = cache.masks ? &cache.masks->head[k - 1] : nullptr;
      for (std::size_t i = 0; i < d_input.size(); ++i) {
        double d = pre[i] > 0.0 ? d_input[i] : 0.0;
        if (mask) d *= (*mask)[i];
        d_input[i] = d;
      }
    }
    delta = std::move(d_input);
  }

  // delta now holds d(loss)/d(fused). Each branch sees the other's activation.
  Vector d_video(delta.size());
  Vector d_text(delta.size());
  const Activation act = dims_.projection_activation;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    double dv = delta[i] * cache.text_out[i] * activation_slope(act, cache.video_pre[i]);
    double dt = delta[i] * cache.video_out[i] * activation_slope(act, cache.text_pre[i]);
    if (cache.masks) {
      dv *= cache.masks->video[i];
      dt *= cache.masks->text[i];
    }
    d_video[i] = dv;
    d_text[i] = dt;
  }
  kernels::affine_backward_params(backend_, cache.video_input, d_video, layers_[0].shape(), batch,
                                  grad.layers[0].weights, grad.layers[0].bias);
  kernels::affine_backward_params(backend_, cache.text_input, d_text, layers_[1].shape(), batch,
                                  grad.layers[1].weights, grad.layers[1].bias);
}

NetworkGradient MatchingNetwork::backward(const ForwardCache& cache, std::span<const int> labels) const {
  NetworkGradient g = zero_gradient();
  backward(cache, labels, g);
  return g;
}

void MatchingNetwork::sgd_step(const NetworkGradient& grad, double learning_rate) {
  if (grad.layers.size() != layers_.size()) throw Error(Errc::DimensionMismatch, "gradient shape mismatch");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    DenseLayer& p = layers_[l];
    const DenseLayer& g = grad.layers[l];
    if (g.weights.size() != p.weights.size() || g.bias.size() != p.bias.size()) {
      throw Error(Errc::DimensionMismatch, "gradient shape mismatch in layer " + std::to_string(l));
    }
    const auto n = static_cast<std::int64_t>(p.weights.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) p.weights[i] -= learning_rate * g.weights[i];
    for (std::size_t i = 0; i < p.bias.size(); ++i) p.bias[i] -= learning_rate * g.bias[i];
  }
  bump_version();
}

double bce_loss(double prediction, int label) {
  const double p = std::clamp(prediction, kLossClamp, 1.0 - kLossClamp);
  return label ? -std::log(p) : -std::log(1.0 - p);
}

TrainConfig TrainConfig::paper() {
  TrainConfig cfg;
  cfg.epochs = 2000;
  cfg.learning_rate = 0.5;
  cfg.dropout = 0.5;
  cfg.batch_size = 1024;
  return cfg;
}

TrainConfig TrainConfig::desk() {
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.learning_rate = 0.05;
  cfg.dropout = 0.1;
  cfg.batch_size = 16;
  return cfg;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(Errc::InvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) throw Error(Errc::InvalidArgument, "batch size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(Errc::InvalidArgument, "learning rate must be finite and non-negative");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(Errc::InvalidArgument, "dropout must lie in [0,1)");
}

TrainResult train(MatchingNetwork& net, std::span<const TrainingExample> examples, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (examples.empty()) throw Error(Errc::EmptyTrainingSet, "no training pairs");
  const NetDims& dims = net.dims();
  for (const auto& ex : examples) {
    require_size(ex.video, dims.video_in, "training video");
    require_size(ex.text, dims.text_in, "training text");
    if (ex.label != 0 && ex.label != 1) throw Error(Errc::InvalidArgument, "training label must be 0 or 1");
  }
  net.set_dropout_rate(cfg.dropout);

  Rng order_rng(derive_seed(cfg.seed, 0x5348));
  Rng mask_rng(derive_seed(cfg.seed, 0x4d41));
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);

  NetworkGradient grad = net.zero_gradient();
  TrainResult result;
  result.epoch_loss.reserve(cfg.epochs);
  Vector videos, texts;
  std::vector<int> labels;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) order_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t batch = std::min(cfg.batch_size, order.size() - start);
      videos.clear();
      texts.clear();
      labels.clear();
      for (std::size_t j = 0; j < batch; ++j) {
        const TrainingExample& ex = examples[order[start + j]];
        videos.insert(videos.end(), ex.video.begin(), ex.video.end());
        texts.insert(texts.end(), ex.text.begin(), ex.text.end());
        labels.push_back(ex.label);
      }
      std::optional<DropoutMasks> masks;
      if (cfg.dropout > 0.0) masks = net.sample_masks(batch, mask_rng);
      const ForwardCache cache = net.forward_train(videos, texts, batch, masks ? &*masks : nullptr);
      for (std::size_t s = 0; s < batch; ++s) loss_sum += bce_loss(cache.output[s], labels[s]);
      grad.zero();
      net.backward(cache, labels, grad);
      net.sgd_step(grad, cfg.learning_rate);
    }
    const double mean = loss_sum / static_cast<double>(examples.size());
    result.epoch_loss.push_back(mean);
    spdlog::debug("epoch {} mean loss {:.6f}", epoch + 1, mean);
    if (on_epoch) on_epoch(epoch + 1, mean);
  }
  return result;
}

}  // namespace vtmm
