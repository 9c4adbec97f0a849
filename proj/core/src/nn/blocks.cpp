#include "xrn/nn/blocks.hpp"

#include <cmath>

#include "xrn/error.hpp"

namespace xrn::nn {

template <typename T>
BasicVar<T> ResidualBlock<T>::forward(const BasicVar<T>& x, Mode mode) const {
  if (x.shape().size() != 4 || x.shape()[1] != in_channels) {
    throw ShapeError("residual block expects " + std::to_string(in_channels) + " input channels, got " +
                     shape_str(x.shape()));
  }
  auto y = relu(bn1.forward(conv1.forward(x), mode));
  y = bn2.forward(conv2.forward(y), mode);
  const BasicVar<T> skip = projection ? proj_bn.forward(proj.forward(x), mode) : x;
  if (skip.shape() != y.shape()) {
    throw ShapeError("residual block: branch " + shape_str(y.shape()) + " and skip " +
                     shape_str(skip.shape()) + " disagree (channel or stride mismatch)");
  }
  return relu(add(y, skip));
}

template <typename T>
BasicVar<T> DenseBlock<T>::forward(const BasicVar<T>& x, Mode mode) const {
  if (x.shape().size() != 4 || x.shape()[1] != in_channels) {
    throw ShapeError("dense block expects " + std::to_string(in_channels) + " input channels, got " +
                     shape_str(x.shape()));
  }
  std::vector<BasicVar<T>> features{x};
  for (const auto& layer : layers) {
    const BasicVar<T> joined = features.size() == 1 ? features[0] : concat_channels(features);
    features.push_back(layer.conv.forward(relu(layer.bn.forward(joined, mode))));
  }
  return features.size() == 1 ? features[0] : concat_channels(features);
}

template <typename T>
BasicVar<T> Transition<T>::forward(const BasicVar<T>& x, Mode mode) const {
  return avg_pool2d(conv.forward(relu(bn.forward(x, mode))), 2, 2);
}

template <typename T>
BasicTensor<T> LayerFactory<T>::kaiming_uniform(Shape shape, std::size_t fan_in) {
  BasicTensor<T> t(std::move(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : t.data()) v = static_cast<T>(rng_.uniform(-bound, bound));
  return t;
}

template <typename T>
Conv<T> LayerFactory<T>::conv(const std::string& prefix, std::size_t in, std::size_t out,
                              std::size_t kernel, std::size_t stride, std::size_t padding,
                              bool with_bias) {
  Conv<T> c;
  c.kernel = BasicVar<T>::param(kaiming_uniform(Shape{out, in, kernel, kernel}, in * kernel * kernel));
  store_.add(prefix + ".kernel", c.kernel);
  if (with_bias) {
    c.bias = BasicVar<T>::param(BasicTensor<T>(Shape{out}));
    store_.add(prefix + ".bias", c.bias);
  }
  c.options = {stride, padding};
  return c;
}

template <typename T>
BatchNorm<T> LayerFactory<T>::batch_norm(const std::string& prefix, std::size_t channels) {
  BatchNorm<T> bn;
  bn.gamma = BasicVar<T>::param(BasicTensor<T>::ones(Shape{channels}));
  bn.beta = BasicVar<T>::param(BasicTensor<T>::zeros(Shape{channels}));
  bn.stats = std::make_shared<BatchNormStats<T>>(channels);
  store_.add(prefix + ".gamma", bn.gamma);
  store_.add(prefix + ".beta", bn.beta);
  store_.add_buffer(prefix, bn.stats);
  return bn;
}

template <typename T>
LinearLayer<T> LayerFactory<T>::linear(const std::string& prefix, std::size_t in, std::size_t out) {
  LinearLayer<T> l;
  l.weight = BasicVar<T>::param(kaiming_uniform(Shape{out, in}, in));
  l.bias = BasicVar<T>::param(BasicTensor<T>::zeros(Shape{out}));
  store_.add(prefix + ".weight", l.weight);
  store_.add(prefix + ".bias", l.bias);
  return l;
}

template <typename T>
ResidualBlock<T> LayerFactory<T>::residual_block(const std::string& prefix, std::size_t in,
                                                 std::size_t out, std::size_t stride) {
  ResidualBlock<T> b;
  b.in_channels = in;
  b.out_channels = out;
  b.stride = stride;
  b.conv1 = conv(prefix + ".conv1", in, out, 3, stride, 1);
  b.bn1 = batch_norm(prefix + ".bn1", out);
  b.conv2 = conv(prefix + ".conv2", out, out, 3, 1, 1);
  b.bn2 = batch_norm(prefix + ".bn2", out);
  b.projection = in != out || stride != 1;
  if (b.projection) {
    b.proj = conv(prefix + ".proj", in, out, 1, stride, 0);
    b.proj_bn = batch_norm(prefix + ".proj_bn", out);
  }
  return b;
}

template <typename T>
DenseBlock<T> LayerFactory<T>::dense_block(const std::string& prefix, std::size_t in,
                                           std::size_t layers, std::size_t growth) {
  DenseBlock<T> b;
  b.in_channels = in;
  b.growth = growth;
  for (std::size_t i = 0; i < layers; ++i) {
    const std::string p = prefix + ".layer" + std::to_string(i);
    const std::size_t c = in + i * growth;
    DenseLayer<T> layer;
    layer.bn = batch_norm(p + ".bn", c);
    layer.conv = conv(p + ".conv", c, growth, 3, 1, 1);
    b.layers.push_back(std::move(layer));
  }
  return b;
}

template <typename T>
Transition<T> LayerFactory<T>::transition(const std::string& prefix, std::size_t in, std::size_t out) {
  Transition<T> t;
  t.bn = batch_norm(prefix + ".bn", in);
  t.conv = conv(prefix + ".conv", in, out, 1, 1, 0);
  return t;
}

template struct ResidualBlock<float>;
template struct ResidualBlock<double>;
template struct DenseBlock<float>;
template struct DenseBlock<double>;
template struct Transition<float>;
template struct Transition<double>;
template class LayerFactory<float>;
template class LayerFactory<double>;

}  // namespace xrn::nn
