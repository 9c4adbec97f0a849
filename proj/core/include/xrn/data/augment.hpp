#pragma once

#include "xrn/data/image.hpp"
#include "xrn/prng.hpp"

namespace xrn::data {

struct AugmentationConfig {
  double p_hflip = 0.5;
  double p_vflip = 0.5;
  double p_rotate = 0.3;
  double max_rotation_degrees = 15.0;  // angle ~ U(-max, max)

  void validate() const;
};

GrayImage hflip(const GrayImage& image);
GrayImage vflip(const GrayImage& image);
/// Rotation about the image center by `degrees` (counter-clockwise),
/// bilinear sampling, zero outside the source.
GrayImage rotate(const GrayImage& image, double degrees);

/// Horizontal flip, then vertical flip, then rotation, each decided by its
/// own draw. Exactly four numbers are consumed from `rng` per call.
GrayImage augment(const GrayImage& image, const AugmentationConfig& config, Prng& rng);

}  // namespace xrn::data
