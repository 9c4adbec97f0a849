#include "xrn/nn/model.hpp"

#include "xrn/error.hpp"

namespace xrn::nn {

template <typename T>
BasicModel<T> BasicModel<T>::build(const ArchitectureConfig& config, Prng& rng) {
  config.validate();
  BasicModel m;
  m.config_ = config;
  LayerFactory<T> make(m.store_, rng);
  m.stem_conv_ = make.conv("stem.conv", config.input_channels, config.stem_channels, 3, 1, 1);
  m.stem_bn_ = make.batch_norm("stem.bn", config.stem_channels);
  std::size_t channels = config.stem_channels;
  if (config.family == Family::ResNet) {
    for (std::size_t s = 0; s < config.residual_stages.size(); ++s) {
      const auto& spec = config.residual_stages[s];
      std::vector<ResidualBlock<T>> blocks;
      for (std::size_t b = 0; b < spec.blocks; ++b) {
        const std::string prefix = "stage" + std::to_string(s + 1) + ".block" + std::to_string(b);
        blocks.push_back(make.residual_block(prefix, channels, spec.channels, b == 0 ? spec.stride : 1));
        channels = spec.channels;
      }
      m.stages_.push_back(std::move(blocks));
    }
  } else {
    for (std::size_t s = 0; s < config.dense_stages.size(); ++s) {
      const auto& spec = config.dense_stages[s];
      auto block = make.dense_block("block" + std::to_string(s + 1), channels, spec.layers, spec.growth);
      channels = block.out_channels();
      m.dense_.push_back(std::move(block));
      if (s + 1 < config.dense_stages.size()) {
        const auto out = static_cast<std::size_t>(static_cast<double>(channels) * config.compression);
        m.transitions_.push_back(make.transition("trans" + std::to_string(s + 1), channels, out));
        channels = out;
      }
    }
    m.final_bn_ = make.batch_norm("final_bn", channels);
  }
  m.head_ = make.linear("head", channels, config.num_classes);
  return m;
}

template <typename T>
BasicVar<T> BasicModel<T>::forward(const BasicVar<T>& images, Mode mode) const {
  const Shape& s = images.shape();
  if (s.size() != 4 || s[1] != config_.input_channels) {
    throw ShapeError("model expects Nx" + std::to_string(config_.input_channels) + "xHxW images, got " +
                     shape_str(s));
  }
  auto x = relu(stem_bn_.forward(stem_conv_.forward(images), mode));
  if (config_.stem_pool) x = max_pool2d(x, 2, 2);
  if (config_.family == Family::ResNet) {
    for (const auto& stage : stages_) {
      for (const auto& block : stage) x = block.forward(x, mode);
    }
  } else {
    for (std::size_t i = 0; i < dense_.size(); ++i) {
      x = dense_[i].forward(x, mode);
      if (i < transitions_.size()) x = transitions_[i].forward(x, mode);
    }
    x = relu(final_bn_.forward(x, mode));
  }
  return head_.forward(global_avg_pool(x));
}

template <typename T>
BasicVar<T> BasicModel<T>::forward(const BasicTensor<T>& images, Mode mode) const {
  return forward(BasicVar<T>::leaf(images, false), mode);
}

template <typename T>
void BasicModel<T>::replace_head(std::size_t num_classes, Prng& rng) {
  if (num_classes < 2) throw ConfigError("replace_head: need at least 2 classes, got " + std::to_string(num_classes));
  ParameterStore<T> scratch;
  LayerFactory<T> make(scratch, rng);
  LinearLayer<T> fresh = make.linear("head", head_.weight.shape()[1], num_classes);
  store_.replace("head.weight", fresh.weight);
  store_.replace("head.bias", fresh.bias);
  head_ = LinearLayer<T>{store_.at("head.weight"), store_.at("head.bias")};
  config_.num_classes = num_classes;
}

template <typename T>
void BasicModel<T>::freeze_backbone() {
  for (const auto& e : store_.entries()) {
    if (!is_head_name(e.name)) store_.freeze(e.name);
  }
}

template <typename T>
bool BasicModel<T>::is_head_name(const std::string& name) {
  return name.rfind("head.", 0) == 0;
}

template <typename T>
std::vector<std::pair<std::string, BasicTensor<T>*>> BasicModel<T>::state() {
  std::vector<std::pair<std::string, BasicTensor<T>*>> out;
  for (const auto& e : store_.entries()) {
    BasicVar<T> v = e.var;
    out.emplace_back(e.name, &v.mutable_value());
  }
  for (const auto& b : store_.buffers()) {
    out.emplace_back(b.name + ".running_mean", &b.stats->running_mean);
    out.emplace_back(b.name + ".running_var", &b.stats->running_var);
  }
  return out;
}

template <typename T>
std::vector<std::pair<std::string, const BasicTensor<T>*>> BasicModel<T>::state() const {
  std::vector<std::pair<std::string, const BasicTensor<T>*>> out;
  for (const auto& e : store_.entries()) out.emplace_back(e.name, &e.var.value());
  for (const auto& b : store_.buffers()) {
    out.emplace_back(b.name + ".running_mean", &b.stats->running_mean);
    out.emplace_back(b.name + ".running_var", &b.stats->running_var);
  }
  return out;
}

template class BasicModel<float>;
template class BasicModel<double>;

}  // namespace xrn::nn
