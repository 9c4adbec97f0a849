#include "xrn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>

#include "xrn/error.hpp"
#include "xrn/ops.hpp"
#include "xrn/prng.hpp"

namespace xrn {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

template <typename T, typename R>
GradCheckReport grad_check_against(const std::function<BasicVar<T>()>& fn, std::vector<NamedVar<T>> params,
                                   const std::function<BasicVar<R>()>& reference_fn,
                                   std::vector<NamedVar<R>> reference_params, GradCheckOptions options) {
  if (!(options.step > 0.0)) throw ConfigError("grad_check: step must be positive");
  if (params.size() != reference_params.size()) throw ShapeError("grad_check: reference parameter count differs");
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].var.shape() != reference_params[t].var.shape()) {
      throw ShapeError("grad_check: reference shape differs for " + params[t].name);
    }
  }
  ActivationPattern pattern;
  for (auto& p : params) p.var.zero_grad();
  {
    std::optional<ActivationPatternScope> scope;
    if (options.freeze_activations) scope.emplace(pattern, ActivationPatternScope::Use::Record);
    BasicVar<T> root = fn();
    backward(root);
  }
  std::vector<BasicTensor<T>> analytic;
  analytic.reserve(params.size());
  for (auto& p : params) {
    analytic.push_back(p.var.grad());
    p.var.zero_grad();
  }

  auto eval = [&]() -> double {
    std::optional<ActivationPatternScope> scope;
    if (options.freeze_activations) scope.emplace(pattern, ActivationPatternScope::Use::Replay);
    return static_cast<double>(reference_fn().value()[0]);
  };

  GradCheckReport report;
  Prng rng = Prng::derive(options.seed, "grad_check");
  for (std::size_t t = 0; t < params.size(); ++t) {
    BasicTensor<R>& value = reference_params[t].var.mutable_value();
    const std::size_t n = value.size();
    std::vector<std::size_t> coords(n);
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords_per_tensor > 0 && n > options.max_coords_per_tensor) {
      // Partial Fisher-Yates: the first k entries become a uniform sample.
      for (std::size_t i = 0; i < options.max_coords_per_tensor; ++i) {
        const std::size_t j = i + rng.bounded(static_cast<std::uint32_t>(n - i));
        std::swap(coords[i], coords[j]);
      }
      coords.resize(options.max_coords_per_tensor);
      std::sort(coords.begin(), coords.end());
    }
    GradCheckEntry worst{params[t].name, 0, 0.0, 0.0, -1.0};
    for (std::size_t i : coords) {
      const R saved = value[i];
      // Difference quotient over +-k*step, divided by the step actually
      // realized in R rather than the requested one.
      auto quotient = [&](double k) {
        const R hi = static_cast<R>(saved + k * options.step);
        const R lo = static_cast<R>(saved - k * options.step);
        value[i] = hi;
        const double up = eval();
        value[i] = lo;
        const double down = eval();
        value[i] = saved;
        return (up - down) / (static_cast<double>(hi) - static_cast<double>(lo));
      };
      const double d1 = quotient(1.0);
      const double numeric = options.stencil == Stencil::Central ? d1 : (4.0 * d1 - quotient(2.0)) / 3.0;
      const double a = analytic[t][i];
      const double err = relative_error(a, numeric);
      ++report.coords_checked;
      if (err > worst.rel_error) worst = {params[t].name, i, a, numeric, err};
    }
    if (worst.rel_error < 0.0) worst.rel_error = 0.0;
    report.per_tensor.push_back(worst);
    if (worst.rel_error >= report.max_rel_error) {
      report.max_rel_error = worst.rel_error;
      report.worst = worst;
    }
  }
  return report;
}

template <typename T>
GradCheckReport grad_check(const std::function<BasicVar<T>()>& fn, std::vector<NamedVar<T>> params,
                           GradCheckOptions options) {
  return grad_check_against<T, T>(fn, params, fn, params, options);
}

template GradCheckReport grad_check(const std::function<BasicVar<float>()>&, std::vector<NamedVar<float>>,
                                    GradCheckOptions);
template GradCheckReport grad_check(const std::function<BasicVar<double>()>&, std::vector<NamedVar<double>>,
                                    GradCheckOptions);
template GradCheckReport grad_check_against(const std::function<BasicVar<float>()>&, std::vector<NamedVar<float>>,
                                            const std::function<BasicVar<double>()>&,
                                            std::vector<NamedVar<double>>, GradCheckOptions);
template GradCheckReport grad_check_against(const std::function<BasicVar<double>()>&,
                                            std::vector<NamedVar<double>>,
                                            const std::function<BasicVar<double>()>&,
                                            std::vector<NamedVar<double>>, GradCheckOptions);
template GradCheckReport grad_check_against(const std::function<BasicVar<float>()>&, std::vector<NamedVar<float>>,
                                            const std::function<BasicVar<float>()>&,
                                            std::vector<NamedVar<float>>, GradCheckOptions);

}  // namespace xrn
