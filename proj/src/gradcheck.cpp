#include "vtmm/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "vtmm/net.hpp"
#include "vtmm/rng.hpp"

namespace vtmm {

namespace {

constexpr double kKinkMargin = 1e-3;
constexpr std::size_t kBatch = 2;

bool near_kink(const NetDims& dims, const ForwardCache& c) {
  auto close = [](const Vector& v) {
    return std::any_of(v.begin(), v.end(), [](double z) { return std::abs(z) < kKinkMargin; });
  };
  if (dims.projection_activation == Activation::Relu && (close(c.video_pre) || close(c.text_pre))) return true;
  for (std::size_t k = 0; k + 1 < c.head_pre.size(); ++k) {
    if (close(c.head_pre[k])) return true;
  }
  return std::any_of(c.output.begin(), c.output.end(), [](double p) { return p < 1e-6 || p > 1 - 1e-6; });
}

double batch_loss(const MatchingNetwork& net, const Vector& videos, const Vector& texts, const DropoutMasks* masks,
                  const std::vector<int>& labels) {
  const auto c = net.forward_train(videos, texts, labels.size(), masks);
  double sum = 0.0;
  for (std::size_t s = 0; s < labels.size(); ++s) sum += bce_loss(c.output[s], labels[s]);
  return sum / static_cast<double>(labels.size());
}

}  // namespace

GradCheckResult gradient_check(const GradCheckConfig& cfg) {
  GradCheckResult result;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    Rng rng(derive_seed(cfg.seed, t));
    auto pick = [&](std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng.below(hi - lo + 1)); };

    NetDims dims;
    dims.video_in = pick(2, 6);
    dims.text_in = pick(2, 5);
    dims.projection = pick(2, 5);
    dims.head = {pick(2, 5), pick(2, 4), 1};
    dims.projection_activation = t % 3 == 2 ? Activation::Identity : Activation::Relu;
    const double dropout = t % 2 == 1 ? 0.3 : 0.0;

    MatchingNetwork net = MatchingNetwork::initialized(dims, rng.next(), dropout);
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      for (double& b : net.mutable_layer(l).bias) b = rng.uniform(-0.3, 0.3);
    }
    net.set_backend(kernels::Backend::Serial);

    Vector videos, texts;
    std::vector<int> labels;
    std::optional<DropoutMasks> masks;
    std::optional<ForwardCache> cache;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      videos.assign(kBatch * dims.video_in, 0.0);
      texts.assign(kBatch * dims.text_in, 0.0);
      for (double& x : videos) x = rng.uniform(-1.5, 1.5);
      for (double& x : texts) x = rng.uniform(-1.5, 1.5);
      labels = {static_cast<int>(rng.below(2)), static_cast<int>(rng.below(2))};
      masks.reset();
      if (dropout > 0.0) masks = net.sample_masks(kBatch, rng);
      cache = net.forward_train(videos, texts, kBatch, masks ? &*masks : nullptr);
      if (!near_kink(dims, *cache)) break;
      cache.reset();
    }
    if (!cache) continue;

    const NetworkGradient grad = net.backward(*cache, labels);
    const DropoutMasks* mask_ptr = masks ? &*masks : nullptr;
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      auto check = [&](auto member) {
        const std::size_t n = (net.layers()[l].*member).size();
        for (std::size_t i = 0; i < n; ++i) {
          const double original = (net.layers()[l].*member)[i];
          (net.mutable_layer(l).*member)[i] = original + cfg.step;
          const double up = batch_loss(net, videos, texts, mask_ptr, labels);
          (net.mutable_layer(l).*member)[i] = original - cfg.step;
          const double down = batch_loss(net, videos, texts, mask_ptr, labels);
          (net.mutable_layer(l).*member)[i] = original;
          const double numeric = (up - down) / (2.0 * cfg.step);
          const double analytic = (grad.layers[l].*member)[i];
          const double rel = std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
          result.max_relative_error = std::max(result.max_relative_error, rel);
          ++result.parameters_checked;
        }
      };
      check(&DenseLayer::weights);
      check(&DenseLayer::bias);
    }
    ++result.trials;
  }
  return result;
}

}  // namespace vtmm
