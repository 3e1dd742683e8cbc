#pragma once
// Naive test-side re-implementations used as oracles. Deliberately written
// with plain loops and no shared code with the library.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vtmm/net.hpp"

namespace oracle {

struct Layer {
  std::size_t in, out;
  std::vector<double> w, b;
};

inline std::vector<Layer> copy_layers(const vtmm::MatchingNetwork& net) {
  std::vector<Layer> out;
  for (const auto& l : net.layers()) out.push_back({l.in, l.out, l.weights, l.bias});
  return out;
}

inline std::vector<double> dense(const Layer& l, const std::vector<double>& x) {
  std::vector<double> y(l.out);
  for (std::size_t o = 0; o < l.out; ++o) {
    double s = l.b[o];
    for (std::size_t i = 0; i < l.in; ++i) s += l.w[o * l.in + i] * x[i];
    y[o] = s;
  }
  return y;
}

// Per-sample masks, or empty vectors for "no dropout".
struct SampleMasks {
  std::vector<double> video, text;
  std::vector<std::vector<double>> head;
};

inline double predict(const std::vector<Layer>& layers, bool relu_projection, const std::vector<double>& video,
                      const std::vector<double>& text, const SampleMasks* m = nullptr) {
  auto act = [&](double z) { return relu_projection ? (z > 0 ? z : 0.0) : z; };
  auto pv = dense(layers[0], video);
  auto pt = dense(layers[1], text);
  std::vector<double> h(pv.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    double a = act(pv[i]), b = act(pt[i]);
    if (m) {
      a *= m->video[i];
      b *= m->text[i];
    }
    h[i] = a * b;
  }
  for (std::size_t k = 2; k < layers.size(); ++k) {
    h = dense(layers[k], h);
    if (k + 1 < layers.size()) {
      for (std::size_t i = 0; i < h.size(); ++i) {
        h[i] = h[i] > 0 ? h[i] : 0.0;
        if (m) h[i] *= m->head[k - 2][i];
      }
    }
  }
  return 1.0 / (1.0 + std::exp(-h[0]));
}

inline double bce(double p, int y) {
  p = std::min(std::max(p, 1e-7), 1.0 - 1e-7);
  return y == 1 ? -std::log(p) : -std::log(1.0 - p);
}

// Mean loss over a batch stored [batch x dim].
inline double batch_loss(const std::vector<Layer>& layers, bool relu_projection, const std::vector<double>& videos,
                         const std::vector<double>& texts, const std::vector<int>& labels,
                         const std::vector<SampleMasks>* masks = nullptr) {
  const std::size_t batch = labels.size();
  const std::size_t dv = videos.size() / batch, dt = texts.size() / batch;
  double total = 0;
  for (std::size_t s = 0; s < batch; ++s) {
    std::vector<double> v(videos.begin() + s * dv, videos.begin() + (s + 1) * dv);
    std::vector<double> t(texts.begin() + s * dt, texts.begin() + (s + 1) * dt);
    total += bce(predict(layers, relu_projection, v, t, masks ? &(*masks)[s] : nullptr), labels[s]);
  }
  return total / static_cast<double>(batch);
}

// Splits library batch masks into per-sample masks.
inline std::vector<SampleMasks> split_masks(const vtmm::DropoutMasks& m, std::size_t batch, std::size_t proj,
                                            const std::vector<std::size_t>& head) {
  std::vector<SampleMasks> out(batch);
  for (std::size_t s = 0; s < batch; ++s) {
    out[s].video.assign(m.video.begin() + s * proj, m.video.begin() + (s + 1) * proj);
    out[s].text.assign(m.text.begin() + s * proj, m.text.begin() + (s + 1) * proj);
    for (std::size_t k = 0; k + 1 < head.size(); ++k) {
      out[s].head.emplace_back(m.head[k].begin() + s * head[k], m.head[k].begin() + (s + 1) * head[k]);
    }
  }
  return out;
}

// Class score by direct substitution: positive and negative weighted means.
struct Term {
  double weight, degree;
};
inline double class_score(const std::vector<Term>& terms, bool subtractive) {
  double pw = 0, pd = 0, nw = 0, nd = 0;
  for (const auto& t : terms) {
    if (t.weight > 0) {
      pw += t.weight;
      pd += t.weight * t.degree;
    } else {
      nw += t.weight;
      nd += t.weight * t.degree;
    }
  }
  const double sp = pw == 0 ? 0.0 : pd / pw;
  const double sn = nw == 0 ? 0.0 : nd / nw;
  return subtractive ? sp - sn : sp + sn;
}

// True when no ReLU input of a train-mode pass lies within `margin` of zero
// and every output is away from the loss clamp. Finite differences are only
// meaningful for such inputs.
inline bool away_from_kinks(const vtmm::MatchingNetwork& net, const std::vector<double>& videos,
                            const std::vector<double>& texts, std::size_t batch, const vtmm::DropoutMasks* masks,
                            double margin = 1e-3) {
  const auto cache = net.forward_train(videos, texts, batch, masks);
  bool ok = true;
  auto far = [&](const std::vector<double>& v) {
    for (double z : v) ok = ok && std::abs(z) >= margin;
  };
  if (net.dims().projection_activation == vtmm::Activation::Relu) {
    far(cache.video_pre);
    far(cache.text_pre);
  }
  for (std::size_t k = 0; k + 1 < cache.head_pre.size(); ++k) far(cache.head_pre[k]);
  for (double p : cache.output) ok = ok && p > 1e-6 && p < 1 - 1e-6;
  return ok;
}

// Nonzero biases so that dead units do not park pre-activations exactly at 0.
inline void randomize_biases(vtmm::MatchingNetwork& net, vtmm::Rng& rng) {
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    for (double& b : net.mutable_layer(l).bias) b = rng.uniform(-0.5, 0.5);
  }
}

// Worst relative disagreement between net.backward() and central differences
// of batch_loss, over every parameter. Denominator floored at 1e-6 so exact
// zeros compare cleanly.
inline double max_gradient_error(const vtmm::MatchingNetwork& net, const std::vector<double>& videos,
                                 const std::vector<double>& texts, const std::vector<int>& labels,
                                 const vtmm::DropoutMasks* masks, double h = 1e-5,
                                 std::size_t* checked = nullptr) {
  const std::size_t batch = labels.size();
  const auto cache = net.forward_train(videos, texts, batch, masks);
  const auto grad = net.backward(cache, labels);
  auto layers = copy_layers(net);
  std::optional<std::vector<SampleMasks>> split;
  if (masks) split = split_masks(*masks, batch, net.dims().projection, net.dims().head);
  const bool relu = net.dims().projection_activation == vtmm::Activation::Relu;
  double worst = 0;
  auto probe = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = batch_loss(layers, relu, videos, texts, labels, split ? &*split : nullptr);
    param = saved - h;
    const double down = batch_loss(layers, relu, videos, texts, labels, split ? &*split : nullptr);
    param = saved;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max(1e-6, std::max(std::abs(analytic), std::abs(numeric)));
    worst = std::max(worst, std::abs(analytic - numeric) / scale);
    if (checked) ++*checked;
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t i = 0; i < layers[l].w.size(); ++i) probe(layers[l].w[i], grad.layers[l].weights[i]);
    for (std::size_t i = 0; i < layers[l].b.size(); ++i) probe(layers[l].b[i], grad.layers[l].bias[i]);
  }
  return worst;
}

}  // namespace oracle
