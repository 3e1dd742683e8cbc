#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "vtmm/embedding.hpp"
#include "vtmm/features.hpp"
#include "vtmm/kernels.hpp"
#include "vtmm/rng.hpp"
#include "vtmm/types.hpp"

namespace vtmm {

/// A degree strictly above this counts as a match.
inline constexpr double kMatchThreshold = 0.5;
/// Predictions are clamped to [kLossClamp, 1 - kLossClamp] inside the loss.
inline constexpr double kLossClamp = 1e-7;

inline bool matched(double degree) { return degree > kMatchThreshold; }

enum class Activation { Relu, Identity };

struct NetDims {
  std::size_t video_in = kVideoDim;
  std::size_t text_in = kSentenceDim;
  std::size_t projection = 1024;
  // Output widths of the scoring head, in order. The last must be 1.
  std::vector<std::size_t> head = {512, 128, 1};
  // Applied after each projection. Hidden head layers always use ReLU.
  Activation projection_activation = Activation::Relu;

  /// Throws DimensionMismatch on a zero width or a head not ending in 1.
  void validate() const;
  std::size_t layer_count() const { return 2 + head.size(); }
  std::size_t parameter_count() const;

  friend bool operator==(const NetDims&, const NetDims&) = default;
};

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  Vector weights;  // [out x in], row-major
  Vector bias;     // [out]

  DenseLayer() = default;
  DenseLayer(std::size_t in_dim, std::size_t out_dim)
      : in(in_dim), out(out_dim), weights(in_dim * out_dim, 0.0), bias(out_dim, 0.0) {}

  kernels::LayerShape shape() const { return {in, out}; }
  double& weight(std::size_t o, std::size_t i) { return weights[o * in + i]; }
  double weight(std::size_t o, std::size_t i) const { return weights[o * in + i]; }
};

/// Mirrors MatchingNetwork::layers(): video projection, text projection, head.
struct NetworkGradient {
  std::vector<DenseLayer> layers;
  void zero();
};

/// Per-unit multipliers, 0 for a dropped unit and 1/(1-rate) for a kept one,
/// laid out [batch x width].
struct DropoutMasks {
  Vector video;
  Vector text;
  std::vector<Vector> head;  // one per hidden head layer
};

/// Activations recorded by a train-mode forward pass.
struct ForwardCache {
  std::uint64_t network_version = 0;
  std::size_t batch = 0;
  Vector video_input;
  Vector text_input;
  Vector video_pre;
  Vector text_pre;
  Vector video_out;  // after activation and dropout
  Vector text_out;
  Vector fused;
  std::vector<Vector> head_pre;  // every head layer
  std::vector<Vector> head_out;  // hidden head layers, after ReLU and dropout
  std::optional<DropoutMasks> masks;
  Vector output;  // sigmoid outputs, one per sample
};

class MatchingNetwork {
 public:
  /// Zero-initialized network with default dimensions.
  MatchingNetwork() : MatchingNetwork(NetDims{}) {}
  explicit MatchingNetwork(NetDims dims, double dropout_rate = 0.0);

  /// Glorot-uniform weights, zero biases, all drawn from `seed`.
  static MatchingNetwork initialized(NetDims dims, std::uint64_t seed, double dropout_rate = 0.0);

  const NetDims& dims() const { return dims_; }
  double dropout_rate() const { return dropout_rate_; }
  void set_dropout_rate(double rate);
  kernels::Backend backend() const { return backend_; }
  void set_backend(kernels::Backend backend) { backend_ = backend; }

  std::span<const DenseLayer> layers() const { return layers_; }
  /// Mutable access invalidates outstanding forward caches.
  DenseLayer& mutable_layer(std::size_t index);
  const DenseLayer& video_projection() const { return layers_[0]; }
  const DenseLayer& text_projection() const { return layers_[1]; }
  std::span<const DenseLayer> head() const { return std::span<const DenseLayer>(layers_).subspan(2); }

  /// Changes whenever parameters change; globally unique per mutation.
  std::uint64_t version() const { return version_; }

  /// Inference-mode matching degree in (0,1). Dropout is never applied.
  double forward(std::span<const double> video, std::span<const double> text) const;

  /// Inference on a batch laid out [batch x dim].
  Vector forward_batch(std::span<const double> videos, std::span<const double> texts, std::size_t batch) const;

  /// Projection branches and head separately, so a scorer can reuse a
  /// projected video or text across many pairs. Composing them gives exactly
  /// forward().
  Vector project_video(std::span<const double> video) const;
  Vector project_text(std::span<const double> text) const;
  double score_projected(std::span<const double> video_projected, std::span<const double> text_projected) const;

  /// Train-mode pass; `masks` may be null for no dropout.
  ForwardCache forward_train(std::span<const double> videos, std::span<const double> texts, std::size_t batch,
                             const DropoutMasks* masks) const;

  DropoutMasks sample_masks(std::size_t batch, Rng& rng) const;

  NetworkGradient zero_gradient() const;

  /// Gradient of the batch-mean loss, added into `grad`. Throws StaleCache if
  /// the parameters changed since the cache was produced.
  void backward(const ForwardCache& cache, std::span<const int> labels, NetworkGradient& grad) const;
  NetworkGradient backward(const ForwardCache& cache, std::span<const int> labels) const;

  /// p <- p - learning_rate * g for every parameter.
  void sgd_step(const NetworkGradient& grad, double learning_rate);

 private:
  void bump_version();
  Vector head_forward(std::span<const double> fused, std::size_t batch) const;
  Vector project(const DenseLayer& layer, std::span<const double> input, std::size_t batch) const;

  NetDims dims_;
  double dropout_rate_ = 0.0;
  kernels::Backend backend_ = kernels::Backend::Parallel;
  std::vector<DenseLayer> layers_;
  std::uint64_t version_ = 0;
};

/// Binary cross-entropy on a clamped prediction.
double bce_loss(double prediction, int label);

struct TrainConfig {
  std::size_t epochs = 1;
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  double dropout = 0.0;
  std::uint64_t seed = 0;
  bool shuffle = true;

  /// 2000 epochs, lr 0.5, dropout 0.5, batch 1024.
  static TrainConfig paper();
  /// Small-data defaults that converge on a laptop.
  static TrainConfig desk();

  void validate() const;
};

struct TrainingExample {
  std::span<const double> video;
  std::span<const double> text;
  int label = 0;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean train-mode loss per epoch
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

/// Mini-batch SGD; gradients are averaged over each batch. Shuffle order and
/// dropout masks derive from cfg.seed, so a run is reproducible bit for bit.
TrainResult train(MatchingNetwork& net, std::span<const TrainingExample> examples, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// "VTMM" magic, u32 format version, u32 length + JSON dimension table, then
/// every parameter as little-endian float64 in layers() order (W then b).
void save_checkpoint(const MatchingNetwork& net, const std::filesystem::path& path);
MatchingNetwork load_checkpoint(const std::filesystem::path& path);
/// As above, and throws DimensionMismatch unless the stored dims equal `expected`.
MatchingNetwork load_checkpoint(const std::filesystem::path& path, const NetDims& expected);

}  // namespace vtmm
