#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "xrn/grad_check.hpp"

namespace xrn {

enum class GradScope { Ops, Losses, Blocks, Models, All };
GradScope parse_grad_scope(std::string_view text);
std::string_view grad_scope_name(GradScope scope);

/// In f32 mode the analytic gradients come from the f32 engine and the
/// finite differences are taken at the same point in f64 with step 1e-3;
/// in f64 mode both sides are f64 and a fourth-order stencil is used. Block
/// and model cases freeze relu/max-pool decisions at the checked point.
struct GradSuiteOptions {
  bool f64 = false;
  // 0 selects the default: 1e-2 in f32, 1e-5 in f64.
  double threshold = 0.0;
  std::size_t input_size = 16;
  std::uint64_t seed = 0;
  // Coordinates probed per tensor in block and model cases (0 = all).
  std::size_t model_coords_per_tensor = 24;

  double effective_threshold() const { return threshold > 0.0 ? threshold : (f64 ? 1e-5 : 1e-2); }
  // Finite-difference step; 0 selects 1e-3.
  double fd_step = 0.0;
  double step() const { return fd_step > 0.0 ? fd_step : 1e-3; }
};

struct GradSuiteCase {
  std::string name;
  GradScope scope = GradScope::Ops;
  GradCheckReport report;
  bool passed = false;
};

/// Finite-difference checks of every differentiable op, each loss, the
/// residual/dense/transition blocks and both mini architectures.
std::vector<GradSuiteCase> run_grad_suite(GradScope scope, const GradSuiteOptions& options = {});

}  // namespace xrn
