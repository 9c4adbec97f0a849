#pragma once

#include <optional>
#include <vector>

#include "xrn/autodiff.hpp"

namespace xrn {

/// Focusing exponent and class weighting of the focal loss. A single alpha
/// entry is broadcast to every class.
struct FocalParams {
  std::vector<double> alpha{0.25};
  double gamma = 2.0;

  double alpha_for(std::size_t cls) const { return alpha.size() == 1 ? alpha[0] : alpha.at(cls); }
};

/// NxC one-hot rows for integer labels.
template <typename T>
BasicTensor<T> one_hot(const std::vector<int>& labels, std::size_t num_classes);

/// Mean over the batch of -sum_i w_i t_i log softmax(z)_i. `targets` rows must
/// lie on the probability simplex (within 1e-6); `class_weights`, when set,
/// has one entry per class.
template <typename T>
BasicVar<T> cross_entropy(const BasicVar<T>& logits, const BasicTensor<T>& targets,
                          const std::optional<std::vector<double>>& class_weights = std::nullopt);

/// Mean over the batch of -alpha_c (1 - p_t)^gamma log p_t, p_t being the
/// softmax probability of the true class c.
template <typename T>
BasicVar<T> focal_loss(const BasicVar<T>& logits, const std::vector<int>& labels,
                       const FocalParams& params);

/// Overload taking one-hot rows; anything else is rejected.
template <typename T>
BasicVar<T> focal_loss(const BasicVar<T>& logits, const BasicTensor<T>& targets,
                       const FocalParams& params);

}  // namespace xrn
