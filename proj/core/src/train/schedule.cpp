#include "xrn/train/schedule.hpp"

#include "xrn/error.hpp"

namespace xrn::train {

double lr_at_epoch(std::size_t epoch, double base_lr, std::size_t step, double factor) {
  if (step == 0) throw ConfigError("lr schedule: step must be >= 1");
  double lr = base_lr;
  // Repeated multiplication rather than pow keeps factor 0.5 schedules exact.
  for (std::size_t k = epoch / step; k > 0; --k) lr *= factor;
  return lr;
}

}  // namespace xrn::train
