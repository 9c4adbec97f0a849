#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "xrn/autodiff.hpp"
#include "xrn/error.hpp"
#include "xrn/ops.hpp"
#include "xrn/prng.hpp"

using namespace xrn;

namespace {

template <typename T>
BasicTensor<T> random_tensor(Shape shape, Prng& rng, double lo = -1.0, double hi = 1.0) {
  BasicTensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

// Direct six-loop cross-correlation. Each output accumulates over
// (c, ky, kx) in order starting from zero, then adds the bias.
template <typename T>
BasicTensor<T> naive_conv(const BasicTensor<T>& x, const BasicTensor<T>& k, const BasicTensor<T>* b, std::size_t stride,
                          std::size_t pad) {
  const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t O = k.dim(0), KH = k.dim(2), KW = k.dim(3);
  const std::size_t OH = (H + 2 * pad - KH) / stride + 1, OW = (W + 2 * pad - KW) / stride + 1;
  BasicTensor<T> y(Shape{N, O, OH, OW});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t o = 0; o < O; ++o)
      for (std::size_t oy = 0; oy < OH; ++oy)
        for (std::size_t ox = 0; ox < OW; ++ox) {
          T acc = 0;
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t ky = 0; ky < KH; ++ky)
              for (std::size_t kx = 0; kx < KW; ++kx) {
                const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
                const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
                const T v = (iy < 0 || ix < 0 || iy >= static_cast<long>(H) || ix >= static_cast<long>(W))
                                ? T{0}
                                : x.at(n, c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix));
                acc += k.at(o, c, ky, kx) * v;
              }
          if (b) acc += (*b)[o];
          y.at(n, o, oy, ox) = acc;
        }
  return y;
}

}  // namespace

TEST(Conv2d, AllOnesWindowSum) {
  Var x = Var::leaf(Tensor(Shape{1, 1, 3, 3}, 1.0f));
  Var k = Var::leaf(Tensor(Shape{1, 1, 2, 2}, 1.0f));
  Var b = Var::leaf(Tensor(Shape{1}, 0.0f));
  Var y = conv2d(x, k, b, {1, 0});
  ASSERT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  for (float v : y.value().data()) EXPECT_EQ(v, 4.0f);
}

TEST(Conv2d, IdentityKernel) {
  Prng rng(5, 0);
  Tensor xv = random_tensor<float>(Shape{2, 1, 5, 7}, rng);
  Var y = conv2d(Var::leaf(xv), Var::leaf(Tensor(Shape{1, 1, 1, 1}, 1.0f)), Var::leaf(Tensor(Shape{1}, 0.0f)));
  EXPECT_TRUE(bit_equal(y.value(), xv));
}

TEST(Conv2d, Sequential4x4With3x3) {
  Tensor x(Shape{1, 1, 4, 4});
  std::iota(x.data().begin(), x.data().end(), 1.0f);
  Tensor k(Shape{1, 1, 3, 3});
  std::iota(k.data().begin(), k.data().end(), 1.0f);
  const Tensor expected = naive_conv<float>(x, k, nullptr, 1, 0);
  // Hand check of the reference for the top-left window:
  // 1*1+2*2+3*3+4*5+5*6+6*7+7*9+8*10+9*11 = 348.
  EXPECT_EQ(expected[0], 348.0f);
  Var y = conv2d(Var::leaf(x), Var::leaf(k), Var{});
  EXPECT_TRUE(bit_equal(y.value(), expected));
}

TEST(Conv2d, BitExactAgainstNaiveUpTo2x4x16x16) {
  Prng rng(11, 0);
  struct Case {
    Shape x, k;
    std::size_t stride, pad;
  };
  const Case cases[] = {
      {{2, 4, 16, 16}, {8, 4, 3, 3}, 1, 1}, {{2, 4, 16, 16}, {5, 4, 3, 3}, 2, 1}, {{1, 3, 9, 11}, {7, 3, 1, 1}, 2, 0},
      {{2, 4, 16, 16}, {16, 4, 5, 5}, 1, 2}, {{1, 1, 16, 16}, {3, 1, 7, 7}, 2, 3},
  };
  for (const auto& c : cases) {
    Tensor x = random_tensor<float>(c.x, rng);
    Tensor k = random_tensor<float>(c.k, rng);
    Tensor b = random_tensor<float>(Shape{c.k[0]}, rng);
    Var y = conv2d(Var::leaf(x), Var::leaf(k), Var::leaf(b), {c.stride, c.pad});
    EXPECT_TRUE(bit_equal(y.value(), naive_conv(x, k, &b, c.stride, c.pad))) << shape_str(c.x) << " " << shape_str(c.k);
  }
}

TEST(Conv2d, ShapeErrorsNameDimensions) {
  Var x = Var::leaf(Tensor(Shape{1, 3, 8, 8}));
  Var k = Var::leaf(Tensor(Shape{4, 2, 3, 3}));
  try {
    conv2d(x, k, Var{});
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
  EXPECT_THROW(conv2d(Var::leaf(Tensor(Shape{1, 1, 2, 2})), Var::leaf(Tensor(Shape{1, 1, 3, 3})), Var{}), ShapeError);
  EXPECT_THROW(conv2d(Var::leaf(Tensor(Shape{1, 1, 4, 4})), Var::leaf(Tensor(Shape{2, 1, 3, 3})),
                      Var::leaf(Tensor(Shape{3}))),
               ShapeError);
}

TEST(Conv2d, OutExtentFloors) {
  EXPECT_EQ(conv_out_extent(8, 3, 2, 1, "t"), 4u);
  EXPECT_EQ(conv_out_extent(7, 3, 2, 1, "t"), 4u);
  EXPECT_EQ(conv_out_extent(4, 1, 2, 0, "t"), 2u);
  EXPECT_THROW(conv_out_extent(4, 3, 0, 0, "t"), ShapeError);
}

TEST(BatchNorm, NormalizedInputPassesThrough) {
  // Per channel: values {-1, 1} repeated, mean 0, variance 1.
  Tensor x(Shape{2, 2, 1, 2}, std::vector<float>{-1, 1, 1, -1, 1, -1, -1, 1});
  BatchNormStats<float> stats(2);
  Var y = batch_norm(Var::leaf(x), Var::leaf(Tensor(Shape{2}, 1.0f)), Var::leaf(Tensor(Shape{2}, 0.0f)), stats,
                     Mode::Train);
  const float scale = 1.0f / std::sqrt(1.0f + 1e-5f);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(y.value()[i], x[i] * scale, 1e-6);
}

TEST(BatchNorm, ZeroGammaGivesBetaAndNoInputGradient) {
  Prng rng(2, 0);
  Var x = Var::param(random_tensor<float>(Shape{2, 3, 4, 4}, rng));
  Var gamma = Var::param(Tensor(Shape{3}, 0.0f));
  Var beta = Var::param(Tensor(Shape{3}, std::vector<float>{0.5f, -1.0f, 2.0f}));
  BatchNormStats<float> stats(3);
  Var y = batch_norm(x, gamma, beta, stats, Mode::Train);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(y.value()[(n * 3 + c) * 16 + i], beta.value()[c]);
  Prng wr(3, 0);
  Var w = Var::leaf(random_tensor<float>(Shape{2, 3, 4, 4}, wr));
  backward(sum(mul(y, w)));
  for (float g : x.grad().data()) EXPECT_EQ(g, 0.0f);
}

TEST(BatchNorm, TrainOutputMoments) {
  Prng rng(4, 0);
  TensorD xv = random_tensor<double>(Shape{2, 3, 4, 4}, rng, -3.0, 5.0);
  BatchNormStats<double> stats(3);
  const double eps = 1e-5;
  VarD y = batch_norm(VarD::leaf(xv), VarD::leaf(TensorD(Shape{3}, 1.0)), VarD::leaf(TensorD(Shape{3}, 0.0)), stats,
                      Mode::Train, {eps, 0.1});
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0, s2 = 0, xs = 0, xs2 = 0;
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t i = 0; i < 16; ++i) {
        const double v = y.value()[(n * 3 + c) * 16 + i];
        const double u = xv[(n * 3 + c) * 16 + i];
        s += v, s2 += v * v, xs += u, xs2 += u * u;
      }
    const double mean = s / 32, var = s2 / 32 - mean * mean;
    EXPECT_NEAR(mean, 0.0, 1e-12);
    // Biased batch variance v: the output variance is v / (v + eps).
    const double xm = xs / 32, xv2 = xs2 / 32 - xm * xm;
    EXPECT_NEAR(var, xv2 / (xv2 + eps), 1e-10);
    EXPECT_NEAR(var, 1.0, 1e-4);
    // Running stats moved 10% toward the batch statistics from (0, 1).
    EXPECT_NEAR(stats.running_mean[c], 0.1 * xm, 1e-12);
  }
}

TEST(BatchNorm, EvalUsesRunningStats) {
  BatchNormStats<double> stats(1);
  stats.running_mean[0] = 2.0;
  stats.running_var[0] = 4.0;
  TensorD x(Shape{1, 1, 1, 2}, std::vector<double>{2.0, 6.0});
  VarD y = batch_norm(VarD::leaf(x), VarD::leaf(TensorD(Shape{1}, 3.0)), VarD::leaf(TensorD(Shape{1}, 1.0)), stats,
                      Mode::Eval, {0.0, 0.1});
  EXPECT_DOUBLE_EQ(y.value()[0], 1.0);
  EXPECT_DOUBLE_EQ(y.value()[1], 7.0);
  EXPECT_EQ(stats.running_mean[0], 2.0);
}

TEST(BatchNorm, SingleElementTrainRejected) {
  BatchNormStats<float> stats(2);
  EXPECT_THROW(batch_norm(Var::leaf(Tensor(Shape{1, 2, 1, 1})), Var::leaf(Tensor(Shape{2}, 1.0f)),
                          Var::leaf(Tensor(Shape{2})), stats, Mode::Train),
               ShapeError);
  EXPECT_NO_THROW(batch_norm(Var::leaf(Tensor(Shape{1, 2, 1, 1})), Var::leaf(Tensor(Shape{2}, 1.0f)),
                             Var::leaf(Tensor(Shape{2})), stats, Mode::Eval));
}

TEST(Softmax, UniformLogits) {
  Var s = softmax(Var::leaf(Tensor(Shape{1, 4}, 0.0f)));
  for (float v : s.value().data()) EXPECT_FLOAT_EQ(v, 0.25f);
}

TEST(Softmax, OneTwoThree) {
  VarD s = softmax(VarD::leaf(TensorD(Shape{1, 3}, std::vector<double>{1, 2, 3})));
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  EXPECT_NEAR(s.value()[0], std::exp(1.0) / z, 1e-12);
  EXPECT_NEAR(s.value()[0], 0.09003, 1e-4);
  EXPECT_NEAR(s.value()[1], 0.24473, 1e-4);
  EXPECT_NEAR(s.value()[2], 0.66524, 1e-4);
}

TEST(Softmax, RowsSumToOneAndShiftInvariant) {
  Prng rng(8, 0);
  Tensor logits = random_tensor<float>(Shape{16, 5}, rng, -8.0, 8.0);
  Tensor shifted = logits;
  for (auto& v : shifted.data()) v += 3.25f;
  Var a = softmax(Var::leaf(logits));
  Var b = softmax(Var::leaf(shifted));
  for (std::size_t n = 0; n < 16; ++n) {
    double row = 0;
    for (std::size_t c = 0; c < 5; ++c) {
      row += a.value()[n * 5 + c];
      EXPECT_NEAR(a.value()[n * 5 + c], b.value()[n * 5 + c], 1e-6);
    }
    EXPECT_NEAR(row, 1.0, 1e-6);
  }
}

TEST(LogSoftmax, StableForConfidentLogits) {
  VarD l = log_softmax(VarD::leaf(TensorD(Shape{1, 2}, std::vector<double>{0.0, 1000.0})));
  EXPECT_NEAR(l.value()[0], -1000.0, 1e-9);
  EXPECT_NEAR(l.value()[1], 0.0, 1e-12);
  EXPECT_TRUE(std::isfinite(l.value()[0]));
}

TEST(MaxPool, TiesRouteToLowestIndex) {
  Var x = Var::param(Tensor(Shape{1, 1, 2, 2}, 3.0f));
  Var y = max_pool2d(x, 2, 2);
  EXPECT_EQ(y.value()[0], 3.0f);
  backward(sum(y));
  EXPECT_EQ(x.grad()[0], 1.0f);
  EXPECT_EQ(x.grad()[1], 0.0f);
  EXPECT_EQ(x.grad()[2], 0.0f);
  EXPECT_EQ(x.grad()[3], 0.0f);
}

TEST(MaxPool, ValuesAndShape) {
  Tensor x(Shape{1, 1, 4, 4});
  std::iota(x.data().begin(), x.data().end(), 0.0f);
  Var y = max_pool2d(Var::leaf(x), 2, 2);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  EXPECT_EQ(y.value()[0], 5.0f);
  EXPECT_EQ(y.value()[3], 15.0f);
}

TEST(AvgPool, MeansWindows) {
  Tensor x(Shape{1, 1, 2, 4}, std::vector<float>{1, 2, 3, 4, 5, 6, 7, 8});
  Var y = avg_pool2d(Var::leaf(x), 2, 2);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1, 2}));
  EXPECT_FLOAT_EQ(y.value()[0], 3.5f);
  EXPECT_FLOAT_EQ(y.value()[1], 5.5f);
}

TEST(GlobalAvgPool, ShapeAndValue) {
  Tensor x(Shape{2, 3, 2, 2});
  std::iota(x.data().begin(), x.data().end(), 0.0f);
  Var y = global_avg_pool(Var::leaf(x));
  ASSERT_EQ(y.shape(), (Shape{2, 3}));
  EXPECT_FLOAT_EQ(y.value()[0], 1.5f);
  EXPECT_FLOAT_EQ(y.value()[5], 21.5f);
}

TEST(Linear, ValueAndShapeCheck) {
  Var x = Var::leaf(Tensor(Shape{1, 2}, std::vector<float>{1, 2}));
  Var w = Var::leaf(Tensor(Shape{3, 2}, std::vector<float>{1, 0, 0, 1, 1, 1}));
  Var b = Var::leaf(Tensor(Shape{3}, std::vector<float>{0.5f, 0, -1}));
  Var y = linear(x, w, b);
  EXPECT_EQ(y.value()[0], 1.5f);
  EXPECT_EQ(y.value()[1], 2.0f);
  EXPECT_EQ(y.value()[2], 2.0f);
  EXPECT_THROW(linear(Var::leaf(Tensor(Shape{1, 3})), w, b), ShapeError);
}

TEST(Add, ZeroIsIdentityAndShapesMustMatch) {
  Prng rng(1, 2);
  Tensor xv = random_tensor<float>(Shape{2, 3}, rng);
  EXPECT_TRUE(bit_equal(add(Var::leaf(xv), Var::leaf(Tensor(Shape{2, 3}))).value(), xv));
  EXPECT_THROW(add(Var::leaf(Tensor(Shape{2, 3})), Var::leaf(Tensor(Shape{3, 2}))), ShapeError);
}

TEST(ConcatChannels, ChannelArithmeticAndLayout) {
  Var a = Var::leaf(Tensor(Shape{2, 16, 4, 4}, 1.0f));
  Var b = Var::leaf(Tensor(Shape{2, 8, 4, 4}, 2.0f));
  Var y = concat_channels<float>({a, b});
  ASSERT_EQ(y.shape(), (Shape{2, 24, 4, 4}));
  EXPECT_EQ(y.value().at(1, 15, 3, 3), 1.0f);
  EXPECT_EQ(y.value().at(1, 16, 0, 0), 2.0f);
  EXPECT_THROW(concat_channels<float>({a, Var::leaf(Tensor(Shape{2, 8, 4, 5}))}), ShapeError);
}

TEST(ActivationPattern, ReplayFreezesReluMask) {
  ActivationPattern pattern;
  Tensor x(Shape{3}, std::vector<float>{-1.0f, 0.5f, 2.0f});
  {
    ActivationPatternScope rec(pattern, ActivationPatternScope::Use::Record);
    relu(Var::leaf(x));
  }
  Tensor flipped(Shape{3}, std::vector<float>{1.0f, -0.5f, 2.0f});
  Var y;
  {
    ActivationPatternScope rep(pattern, ActivationPatternScope::Use::Replay);
    y = relu(Var::leaf(flipped));
  }
  EXPECT_EQ(y.value()[0], 0.0f);
  EXPECT_EQ(y.value()[1], -0.5f);
  EXPECT_EQ(y.value()[2], 2.0f);
}
