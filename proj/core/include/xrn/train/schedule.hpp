#pragma once

#include <cstddef>

namespace xrn::train {

/// base_lr * factor^floor(epoch / step).
double lr_at_epoch(std::size_t epoch, double base_lr, std::size_t step, double factor);

}  // namespace xrn::train
