#include "xrn/nn/arch.hpp"

#include "xrn/error.hpp"
#include "xrn/prng.hpp"

namespace xrn::nn {

std::string family_name(Family f) { return f == Family::ResNet ? "resnet" : "densenet"; }

Family parse_family(const std::string& name) {
  if (name == "resnet") return Family::ResNet;
  if (name == "densenet") return Family::DenseNet;
  throw ConfigError("unknown architecture family '" + name + "' (expected resnet or densenet)");
}

ArchitectureConfig ArchitectureConfig::mini_resnet(std::size_t num_classes, std::size_t input_size) {
  ArchitectureConfig c;
  c.name = "mini_resnet";
  c.family = Family::ResNet;
  c.num_classes = num_classes;
  c.input_size = input_size;
  c.stem_channels = 16;
  c.residual_stages = {{2, 16, 1}, {2, 32, 2}, {2, 64, 2}};
  return c;
}

ArchitectureConfig ArchitectureConfig::mini_densenet(std::size_t num_classes, std::size_t input_size) {
  ArchitectureConfig c;
  c.name = "mini_densenet";
  c.family = Family::DenseNet;
  c.num_classes = num_classes;
  c.input_size = input_size;
  c.stem_channels = 16;
  c.dense_stages = {{4, 8}, {4, 8}, {4, 8}};
  return c;
}

ArchitectureConfig ArchitectureConfig::resnet34(std::size_t num_classes, std::size_t input_size) {
  ArchitectureConfig c;
  c.name = "resnet34";
  c.family = Family::ResNet;
  c.num_classes = num_classes;
  c.input_size = input_size;
  c.stem_channels = 64;
  c.residual_stages = {{3, 64, 1}, {4, 128, 2}, {6, 256, 2}, {3, 512, 2}};
  return c;
}

ArchitectureConfig ArchitectureConfig::densenet121(std::size_t num_classes, std::size_t input_size) {
  ArchitectureConfig c;
  c.name = "densenet121";
  c.family = Family::DenseNet;
  c.num_classes = num_classes;
  c.input_size = input_size;
  c.stem_channels = 64;
  c.dense_stages = {{6, 32}, {12, 32}, {24, 32}, {16, 32}};
  return c;
}

ArchitectureConfig ArchitectureConfig::by_name(const std::string& name, std::size_t num_classes,
                                               std::size_t input_size) {
  if (name == "mini_resnet") return mini_resnet(num_classes, input_size);
  if (name == "mini_densenet") return mini_densenet(num_classes, input_size);
  if (name == "resnet34") return resnet34(num_classes, input_size);
  if (name == "densenet121") return densenet121(num_classes, input_size);
  throw ConfigError("unknown architecture '" + name +
                    "' (expected mini_resnet, mini_densenet, resnet34, densenet121)");
}

namespace {
std::size_t halve(std::size_t extent, std::size_t kernel, std::size_t stride, std::size_t pad) {
  if (extent + 2 * pad < kernel) return 0;
  return (extent + 2 * pad - kernel) / stride + 1;
}
}  // namespace

void ArchitectureConfig::validate() const {
  if (input_channels == 0 || input_size == 0 || stem_channels == 0) {
    throw ConfigError("architecture '" + name + "': input channels, input size and stem channels must be positive");
  }
  if (num_classes < 2) throw ConfigError("architecture '" + name + "': need at least 2 classes");
  std::size_t extent = input_size;
  if (stem_pool) {
    extent = halve(extent, 2, 2, 0);
    if (extent < 1) throw ConfigError("architecture '" + name + "': feature map collapses in stem pooling");
  }
  if (family == Family::ResNet) {
    if (residual_stages.empty()) throw ConfigError("architecture '" + name + "': no residual stages");
    for (std::size_t s = 0; s < residual_stages.size(); ++s) {
      const auto& st = residual_stages[s];
      const std::string label = "stage" + std::to_string(s + 1);
      if (st.blocks == 0 || st.channels == 0 || st.stride == 0) {
        throw ConfigError("architecture '" + name + "': " + label + " needs positive blocks, channels and stride");
      }
      extent = halve(extent, 3, st.stride, 1);
      if (extent < 1) throw ConfigError("architecture '" + name + "': feature map collapses below 1x1 in " + label);
    }
  } else {
    if (dense_stages.empty()) throw ConfigError("architecture '" + name + "': no dense blocks");
    if (!(compression > 0.0 && compression <= 1.0)) {
      throw ConfigError("architecture '" + name + "': compression must lie in (0, 1]");
    }
    for (std::size_t s = 0; s < dense_stages.size(); ++s) {
      const auto& st = dense_stages[s];
      const std::string label = "block" + std::to_string(s + 1);
      if (st.layers == 0 || st.growth == 0) {
        throw ConfigError("architecture '" + name + "': " + label + " needs positive layers and growth");
      }
      if (s + 1 < dense_stages.size()) {
        extent = halve(extent, 2, 2, 0);
        if (extent < 1) {
          throw ConfigError("architecture '" + name + "': feature map collapses below 1x1 in transition after " + label);
        }
      }
    }
  }
}

std::size_t ArchitectureConfig::feature_channels() const {
  if (family == Family::ResNet) return residual_stages.back().channels;
  std::size_t c = stem_channels;
  for (std::size_t s = 0; s < dense_stages.size(); ++s) {
    c += dense_stages[s].layers * dense_stages[s].growth;
    if (s + 1 < dense_stages.size()) c = static_cast<std::size_t>(static_cast<double>(c) * compression);
  }
  return c;
}

std::uint64_t ArchitectureConfig::backbone_digest() const {
  std::string canon = name + "|" + family_name(family) + "|" + std::to_string(input_channels) + "|" +
                      std::to_string(input_size) + "|" + std::to_string(stem_channels) + "|" +
                      (stem_pool ? "pool" : "nopool") + "|" + std::to_string(compression);
  for (const auto& s : residual_stages) {
    canon += "|r" + std::to_string(s.blocks) + "," + std::to_string(s.channels) + "," + std::to_string(s.stride);
  }
  for (const auto& s : dense_stages) canon += "|d" + std::to_string(s.layers) + "," + std::to_string(s.growth);
  return fnv1a64(canon);
}

}  // namespace xrn::nn
