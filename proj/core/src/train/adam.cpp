#include "xrn/train/adam.hpp"

#include <cmath>

#include "xrn/error.hpp"

namespace xrn::train {

template <typename T>
void adam_step(nn::ParameterStore<T>& params, AdamState<T>& state, double lr) {
  for (const auto& e : params.entries()) {
    if (params.is_frozen(e.name)) continue;
    const auto& g = e.var.grad();
    if (g.shape() != e.var.shape()) throw ShapeError("adam: gradient of " + e.name + " has the wrong shape");
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(static_cast<double>(g[i]))) {
        throw NumericError("adam: non-finite gradient in " + e.name + " at element " + std::to_string(i) +
                           " (step " + std::to_string(state.t + 1) + ")");
      }
    }
  }
  ++state.t;
  const auto& o = state.options;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(state.t));
  for (const auto& e : params.entries()) {
    if (params.is_frozen(e.name)) continue;
    auto [it, fresh] = state.moments.try_emplace(e.name);
    auto& mom = it->second;
    if (fresh || mom.m.shape() != e.var.shape()) {
      mom.m = BasicTensor<T>(e.var.shape());
      mom.v = BasicTensor<T>(e.var.shape());
    }
    const auto& g = e.var.grad();
    BasicVar<T> var = e.var;  // shares the node
    auto& w = var.mutable_value();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      const double m = o.beta1 * static_cast<double>(mom.m[i]) + (1.0 - o.beta1) * gi;
      const double v = o.beta2 * static_cast<double>(mom.v[i]) + (1.0 - o.beta2) * gi * gi;
      mom.m[i] = static_cast<T>(m);
      mom.v[i] = static_cast<T>(v);
      const double update = lr * (m / c1) / (std::sqrt(v / c2) + o.eps);
      w[i] = static_cast<T>(static_cast<double>(w[i]) - update);
    }
  }
}

template void adam_step(nn::ParameterStore<float>&, AdamState<float>&, double);
template void adam_step(nn::ParameterStore<double>&, AdamState<double>&, double);

}  // namespace xrn::train
