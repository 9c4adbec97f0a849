#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "xrn/nn/parameter_store.hpp"

namespace xrn::train {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moments per parameter name, created lazily at the first step.
template <typename T>
struct AdamState {
  struct Moments {
    BasicTensor<T> m;
    BasicTensor<T> v;
  };
  AdamOptions options;
  std::uint64_t t = 0;
  std::map<std::string, Moments> moments;
};

/// One bias-corrected Adam update of every unfrozen parameter from its
/// accumulated gradient. Frozen parameters are never touched. A non-finite
/// gradient throws NumericError before anything is modified.
template <typename T>
void adam_step(nn::ParameterStore<T>& params, AdamState<T>& state, double lr);

}  // namespace xrn::train
