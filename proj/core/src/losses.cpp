#include "xrn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "xrn/error.hpp"

namespace xrn {

namespace {

template <typename T>
void check_logits(const BasicVar<T>& logits, const char* op) {
  if (logits.shape().size() != 2) {
    throw ShapeError(std::string(op) + ": logits must be NxC, got " + shape_str(logits.shape()));
  }
  if (logits.shape()[1] < 2) throw ShapeError(std::string(op) + ": need at least 2 classes");
  for (T v : logits.value().data()) {
    if (!std::isfinite(static_cast<double>(v))) throw NumericError(std::string(op) + ": non-finite logit");
  }
}

template <typename T>
std::vector<double> log_probs(const BasicTensor<T>& z, std::size_t N, std::size_t C) {
  std::vector<double> out(N * C);
  for (std::size_t n = 0; n < N; ++n) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < C; ++c) mx = std::max(mx, static_cast<double>(z[n * C + c]));
    double s = 0.0;
    for (std::size_t c = 0; c < C; ++c) s += std::exp(z[n * C + c] - mx);
    const double lz = mx + std::log(s);
    for (std::size_t c = 0; c < C; ++c) out[n * C + c] = z[n * C + c] - lz;
  }
  return out;
}

}  // namespace

template <typename T>
BasicTensor<T> one_hot(const std::vector<int>& labels, std::size_t num_classes) {
  if (labels.empty()) throw ShapeError("one_hot: empty label list");
  BasicTensor<T> t(Shape{labels.size(), num_classes});
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] < 0 || static_cast<std::size_t>(labels[n]) >= num_classes) {
      throw ConfigError("one_hot: label " + std::to_string(labels[n]) + " outside [0, " +
                        std::to_string(num_classes) + ")");
    }
    t[n * num_classes + static_cast<std::size_t>(labels[n])] = T{1};
  }
  return t;
}

template <typename T>
BasicVar<T> cross_entropy(const BasicVar<T>& logits, const BasicTensor<T>& targets,
                          const std::optional<std::vector<double>>& class_weights) {
  check_logits(logits, "cross_entropy");
  const std::size_t N = logits.shape()[0], C = logits.shape()[1];
  if (targets.shape() != logits.shape()) {
    throw ShapeError("cross_entropy: targets " + shape_str(targets.shape()) + " vs logits " +
                     shape_str(logits.shape()));
  }
  for (std::size_t n = 0; n < N; ++n) {
    double row = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double t = targets[n * C + c];
      if (t < -1e-6) throw ConfigError("cross_entropy: negative target in row " + std::to_string(n));
      row += t;
    }
    if (std::abs(row - 1.0) > 1e-6) {
      throw ConfigError("cross_entropy: target row " + std::to_string(n) + " sums to " +
                        std::to_string(row) + ", not 1");
    }
  }
  std::vector<double> w(C, 1.0);
  if (class_weights) {
    if (class_weights->size() != C) {
      throw ShapeError("cross_entropy: " + std::to_string(class_weights->size()) +
                       " class weights for " + std::to_string(C) + " classes");
    }
    w = *class_weights;
  }

  const std::vector<double> lp = log_probs(logits.value(), N, C);
  double loss = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t c = 0; c < C; ++c) loss -= w[c] * targets[n * C + c] * lp[n * C + c];
  }
  loss /= static_cast<double>(N);

  BasicTensor<T> out(Shape{1}, static_cast<T>(loss));
  return make_result<T>(std::move(out), {logits}, "cross_entropy",
                        [lp, w, targets, N, C](Node<T>& self) {
                          T* g = grad_of(*self.parents[0]).ptr();
                          const double seed = self.grad[0] / static_cast<double>(N);
                          for (std::size_t n = 0; n < N; ++n) {
                            // d/dz_j of -sum_i a_i log s_i = s_j * sum_i a_i - a_j, a_i = w_i t_i.
                            double mass = 0.0;
                            for (std::size_t c = 0; c < C; ++c) mass += w[c] * targets[n * C + c];
                            for (std::size_t c = 0; c < C; ++c) {
                              const double a = w[c] * targets[n * C + c];
                              g[n * C + c] += static_cast<T>(seed * (std::exp(lp[n * C + c]) * mass - a));
                            }
                          }
                        });
}

template <typename T>
BasicVar<T> focal_loss(const BasicVar<T>& logits, const std::vector<int>& labels,
                       const FocalParams& params) {
  check_logits(logits, "focal_loss");
  const std::size_t N = logits.shape()[0], C = logits.shape()[1];
  if (labels.size() != N) {
    throw ShapeError("focal_loss: " + std::to_string(labels.size()) + " labels for batch of " +
                     std::to_string(N));
  }
  if (!(params.gamma >= 0.0)) throw ConfigError("focal_loss: gamma must be >= 0");
  if (params.alpha.empty() || (params.alpha.size() != 1 && params.alpha.size() != C)) {
    throw ConfigError("focal_loss: alpha must be a scalar or have one entry per class");
  }
  for (double a : params.alpha) {
    if (!(a > 0.0 && a <= 1.0)) throw ConfigError("focal_loss: alpha values must lie in (0, 1]");
  }
  for (int l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= C) {
      throw ConfigError("focal_loss: label " + std::to_string(l) + " outside [0, " + std::to_string(C) + ")");
    }
  }

  const std::vector<double> lp = log_probs(logits.value(), N, C);
  const double gamma = params.gamma;
  std::vector<double> dloss_dlogpt(N);
  double loss = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    const auto c = static_cast<std::size_t>(labels[n]);
    const double alpha = params.alpha_for(c);
    const double logpt = lp[n * C + c];
    const double pt = std::exp(logpt);
    const double q = -std::expm1(logpt);  // 1 - p_t without cancellation
    const double mod = gamma == 0.0 ? 1.0 : std::pow(q, gamma);
    loss += -alpha * mod * logpt;
    // d/dlogpt [-alpha q^gamma logpt] with dq/dlogpt = -pt.
    double focus = 0.0;
    if (gamma != 0.0 && q > 0.0) focus = gamma * std::pow(q, gamma - 1.0) * pt * logpt;
    dloss_dlogpt[n] = -alpha * (mod - focus);
  }
  loss /= static_cast<double>(N);

  BasicTensor<T> out(Shape{1}, static_cast<T>(loss));
  return make_result<T>(std::move(out), {logits}, "focal_loss",
                        [lp, labels, dloss_dlogpt = std::move(dloss_dlogpt), N, C](Node<T>& self) {
                          T* g = grad_of(*self.parents[0]).ptr();
                          const double seed = self.grad[0] / static_cast<double>(N);
                          for (std::size_t n = 0; n < N; ++n) {
                            const auto t = static_cast<std::size_t>(labels[n]);
                            for (std::size_t c = 0; c < C; ++c) {
                              const double dlogpt_dz = (c == t ? 1.0 : 0.0) - std::exp(lp[n * C + c]);
                              g[n * C + c] += static_cast<T>(seed * dloss_dlogpt[n] * dlogpt_dz);
                            }
                          }
                        });
}

template <typename T>
BasicVar<T> focal_loss(const BasicVar<T>& logits, const BasicTensor<T>& targets,
                       const FocalParams& params) {
  if (targets.ndim() != 2) throw ShapeError("focal_loss: targets must be NxC");
  const std::size_t N = targets.dim(0), C = targets.dim(1);
  std::vector<int> labels(N, -1);
  for (std::size_t n = 0; n < N; ++n) {
    int hot = -1;
    for (std::size_t c = 0; c < C; ++c) {
      const T v = targets[n * C + c];
      if (v == T{1} && hot < 0) {
        hot = static_cast<int>(c);
      } else if (v != T{0}) {
        hot = -2;
        break;
      }
    }
    if (hot < 0) throw ConfigError("focal_loss: target row " + std::to_string(n) + " is not one-hot");
    labels[n] = hot;
  }
  return focal_loss(logits, labels, params);
}

template BasicTensor<float> one_hot(const std::vector<int>&, std::size_t);
template BasicTensor<double> one_hot(const std::vector<int>&, std::size_t);
template BasicVar<float> cross_entropy(const BasicVar<float>&, const BasicTensor<float>&,
                                       const std::optional<std::vector<double>>&);
template BasicVar<double> cross_entropy(const BasicVar<double>&, const BasicTensor<double>&,
                                        const std::optional<std::vector<double>>&);
template BasicVar<float> focal_loss(const BasicVar<float>&, const std::vector<int>&, const FocalParams&);
template BasicVar<double> focal_loss(const BasicVar<double>&, const std::vector<int>&, const FocalParams&);
template BasicVar<float> focal_loss(const BasicVar<float>&, const BasicTensor<float>&, const FocalParams&);
template BasicVar<double> focal_loss(const BasicVar<double>&, const BasicTensor<double>&, const FocalParams&);

}  // namespace xrn
