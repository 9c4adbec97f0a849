#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "xrn/autodiff.hpp"

namespace xrn {

template <typename T>
struct NamedVar {
  std::string name;
  BasicVar<T> var;
};

enum class Stencil {
  Central,   // (f(x+h) - f(x-h)) / 2h
  Central4,  // Richardson combination of steps h and 2h, O(h^4)
};

struct GradCheckOptions {
  double step = 1e-3;
  Stencil stencil = Stencil::Central;
  // Record relu/max-pool decisions during the analytic pass and replay them
  // for every finite-difference evaluation.
  bool freeze_activations = false;
  // Coordinates probed per tensor; 0 probes every coordinate. Larger tensors
  // are subsampled with a seeded draw.
  std::size_t max_coords_per_tensor = 0;
  std::uint64_t seed = 0;
};

struct GradCheckEntry {
  std::string name;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  GradCheckEntry worst;
  std::size_t coords_checked = 0;
  // Worst entry per tensor, in input order.
  std::vector<GradCheckEntry> per_tensor;
};

/// |a - c| / max(|a|, |c|, 1e-6).
double relative_error(double analytic, double numeric);

/// Compares reverse-mode gradients of `fn` (which must return a one-element
/// variable) against central differences. Parameter values are restored
/// bit-exactly afterwards; gradients on `params` are left zeroed.
template <typename T>
GradCheckReport grad_check(const std::function<BasicVar<T>()>& fn, std::vector<NamedVar<T>> params,
                           GradCheckOptions options = {});

/// As grad_check, but the finite differences are taken on `reference_fn`
/// over `reference_params`: the same function and point held at precision
/// R, listed in the same order as `params`. Lets f32 gradients be judged
/// against a reference free of f32 rounding in the function value.
template <typename T, typename R>
GradCheckReport grad_check_against(const std::function<BasicVar<T>()>& fn, std::vector<NamedVar<T>> params,
                                   const std::function<BasicVar<R>()>& reference_fn,
                                   std::vector<NamedVar<R>> reference_params, GradCheckOptions options = {});

}  // namespace xrn
