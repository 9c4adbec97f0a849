#include "xrn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "xrn/error.hpp"

namespace xrn {

namespace {

template <typename T>
void require_same_shape(const BasicVar<T>& a, const BasicVar<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

template <typename T>
void require_rank(const BasicVar<T>& x, std::size_t rank, const char* op, const char* layout) {
  if (x.shape().size() != rank) {
    throw ShapeError(std::string(op) + ": expected " + layout + " input, got " + shape_str(x.shape()));
  }
}

}  // namespace

template <typename T>
BasicVar<T> add(const BasicVar<T>& a, const BasicVar<T>& b) {
  require_same_shape(a, b, "add");
  BasicTensor<T> out(a.shape());
  const T* pa = a.value().ptr();
  const T* pb = b.value().ptr();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] + pb[i];
  return make_result<T>(std::move(out), {a, b}, "add", [](Node<T>& self) {
    for (auto& parent : self.parents) {
      if (!parent->requires_grad) continue;
      T* g = grad_of(*parent).ptr();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
BasicVar<T> mul(const BasicVar<T>& a, const BasicVar<T>& b) {
  require_same_shape(a, b, "mul");
  BasicTensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  return make_result<T>(std::move(out), {a, b}, "mul", [](Node<T>& self) {
    Node<T>& pa = *self.parents[0];
    Node<T>& pb = *self.parents[1];
    if (pa.requires_grad) {
      T* g = grad_of(pa).ptr();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      T* g = grad_of(pb).ptr();
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

namespace {

struct PatternState {
  ActivationPattern* pattern;
  ActivationPatternScope::Use use;
  std::size_t relu_pos = 0;
  std::size_t pool_pos = 0;
  PatternState* previous;
};

thread_local PatternState* g_pattern = nullptr;

}  // namespace

ActivationPatternScope::ActivationPatternScope(ActivationPattern& pattern, Use use) : previous_(g_pattern) {
  if (use == Use::Record) {
    pattern.relu.clear();
    pattern.pool.clear();
  }
  g_pattern = new PatternState{&pattern, use, 0, 0, g_pattern};
}

ActivationPatternScope::~ActivationPatternScope() {
  delete g_pattern;
  g_pattern = static_cast<PatternState*>(previous_);
}

template <typename T>
BasicVar<T> relu(const BasicVar<T>& x) {
  BasicTensor<T> out(x.shape());
  const T* px = x.value().ptr();
  std::vector<std::uint8_t> mask(out.size());
  const bool replay = g_pattern && g_pattern->use == ActivationPatternScope::Use::Replay;
  if (replay) {
    auto& rec = g_pattern->pattern->relu;
    if (g_pattern->relu_pos >= rec.size() || rec[g_pattern->relu_pos].size() != mask.size()) {
      throw ShapeError("relu: activation pattern does not match the recorded graph");
    }
    mask = rec[g_pattern->relu_pos++];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) mask[i] = px[i] > T{0} ? 1 : 0;
    if (g_pattern) g_pattern->pattern->relu.push_back(mask);
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mask[i] ? px[i] : T{0};
  return make_result<T>(std::move(out), {x}, "relu", [mask = std::move(mask)](Node<T>& self) {
    T* g = grad_of(*self.parents[0]).ptr();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (mask[i]) g[i] += self.grad[i];
    }
  });
}

template <typename T>
BasicVar<T> sum(const BasicVar<T>& x) {
  double acc = 0.0;
  for (T v : x.value().data()) acc += v;
  BasicTensor<T> out(Shape{1}, static_cast<T>(acc));
  return make_result<T>(std::move(out), {x}, "sum", [](Node<T>& self) {
    T* g = grad_of(*self.parents[0]).ptr();
    const T seed = self.grad[0];
    for (std::size_t i = 0; i < self.parents[0]->value.size(); ++i) g[i] += seed;
  });
}

template <typename T>
BasicVar<T> batch_norm(const BasicVar<T>& input, const BasicVar<T>& gamma, const BasicVar<T>& beta,
                       BatchNormStats<T>& stats, Mode mode, BatchNormOptions options) {
  require_rank(input, 4, "batch_norm", "NCHW");
  const auto& s = input.shape();
  const std::size_t N = s[0], C = s[1], HW = s[2] * s[3];
  const Shape cshape{C};
  if (gamma.shape() != cshape || beta.shape() != cshape) {
    throw ShapeError("batch_norm: gamma/beta must have shape [" + std::to_string(C) + "], got " +
                     shape_str(gamma.shape()) + " and " + shape_str(beta.shape()));
  }
  if (stats.running_mean.shape() != cshape || stats.running_var.shape() != cshape) {
    throw ShapeError("batch_norm: running statistics do not match " + std::to_string(C) + " channels");
  }
  const std::size_t M = N * HW;
  if (mode == Mode::Train && M < 2) {
    throw ShapeError("batch_norm: train mode needs at least 2 values per channel, got N*H*W = " +
                     std::to_string(M));
  }

  BasicTensor<T> out(s);
  BasicTensor<T> xhat(s);
  std::vector<T> invstd(C);
  const T* x = input.value().ptr();
  const T* g = gamma.value().ptr();
  const T* b = beta.value().ptr();

  for (std::size_t c = 0; c < C; ++c) {
    double mean = 0.0, var = 0.0;
    if (mode == Mode::Train) {
      for (std::size_t n = 0; n < N; ++n) {
        const T* px = x + (n * C + c) * HW;
        for (std::size_t i = 0; i < HW; ++i) mean += px[i];
      }
      mean /= static_cast<double>(M);
      for (std::size_t n = 0; n < N; ++n) {
        const T* px = x + (n * C + c) * HW;
        for (std::size_t i = 0; i < HW; ++i) {
          const double d = px[i] - mean;
          var += d * d;
        }
      }
      var /= static_cast<double>(M);
      const double m = options.momentum;
      stats.running_mean[c] = static_cast<T>((1.0 - m) * stats.running_mean[c] + m * mean);
      stats.running_var[c] = static_cast<T>((1.0 - m) * stats.running_var[c] +
                                            m * var * static_cast<double>(M) / static_cast<double>(M - 1));
    } else {
      mean = stats.running_mean[c];
      var = stats.running_var[c];
    }
    const double is = 1.0 / std::sqrt(var + options.epsilon);
    invstd[c] = static_cast<T>(is);
    for (std::size_t n = 0; n < N; ++n) {
      const std::size_t off = (n * C + c) * HW;
      for (std::size_t i = 0; i < HW; ++i) {
        const T xh = static_cast<T>((x[off + i] - mean) * is);
        xhat[off + i] = xh;
        out[off + i] = g[c] * xh + b[c];
      }
    }
  }

  return make_result<T>(
      std::move(out), {input, gamma, beta}, "batch_norm",
      [xhat = std::move(xhat), invstd = std::move(invstd), N, C, HW, mode](Node<T>& self) {
        Node<T>& in = *self.parents[0];
        Node<T>& gm = *self.parents[1];
        Node<T>& bt = *self.parents[2];
        const T* dy = self.grad.ptr();
        const double M = static_cast<double>(N * HW);
        for (std::size_t c = 0; c < C; ++c) {
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (std::size_t n = 0; n < N; ++n) {
            const std::size_t off = (n * C + c) * HW;
            for (std::size_t i = 0; i < HW; ++i) {
              sum_dy += dy[off + i];
              sum_dy_xhat += static_cast<double>(dy[off + i]) * xhat[off + i];
            }
          }
          if (gm.requires_grad) grad_of(gm)[c] += static_cast<T>(sum_dy_xhat);
          if (bt.requires_grad) grad_of(bt)[c] += static_cast<T>(sum_dy);
          if (!in.requires_grad) continue;
          T* dx = grad_of(in).ptr();
          const double scale = static_cast<double>(gm.value[c]) * invstd[c];
          for (std::size_t n = 0; n < N; ++n) {
            const std::size_t off = (n * C + c) * HW;
            for (std::size_t i = 0; i < HW; ++i) {
              if (mode == Mode::Train) {
                dx[off + i] += static_cast<T>(
                    scale / M * (M * dy[off + i] - sum_dy - xhat[off + i] * sum_dy_xhat));
              } else {
                dx[off + i] += static_cast<T>(scale * dy[off + i]);
              }
            }
          }
        }
      });
}

template <typename T>
BasicVar<T> max_pool2d(const BasicVar<T>& input, std::size_t kernel, std::size_t stride) {
  require_rank(input, 4, "max_pool2d", "NCHW");
  const auto& s = input.shape();
  const std::size_t oh = conv_out_extent(s[2], kernel, stride, 0, "max_pool2d height");
  const std::size_t ow = conv_out_extent(s[3], kernel, stride, 0, "max_pool2d width");
  const std::size_t planes = s[0] * s[1];
  const std::size_t H = s[2], W = s[3];
  BasicTensor<T> out(Shape{s[0], s[1], oh, ow});
  std::vector<std::size_t> argmax(out.size());
  const T* x = input.value().ptr();
  if (g_pattern && g_pattern->use == ActivationPatternScope::Use::Replay) {
    auto& rec = g_pattern->pattern->pool;
    if (g_pattern->pool_pos >= rec.size() || rec[g_pattern->pool_pos].size() != argmax.size()) {
      throw ShapeError("max_pool2d: activation pattern does not match the recorded graph");
    }
    argmax = rec[g_pattern->pool_pos++];
    for (std::size_t o = 0; o < argmax.size(); ++o) out[o] = x[argmax[o]];
    return make_result<T>(std::move(out), {input}, "max_pool2d", [argmax = std::move(argmax)](Node<T>& self) {
      T* g = grad_of(*self.parents[0]).ptr();
      for (std::size_t o = 0; o < argmax.size(); ++o) g[argmax[o]] += self.grad[o];
    });
  }
  for (std::size_t pl = 0; pl < planes; ++pl) {
    const T* plane = x + pl * H * W;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = (oy * stride) * W + ox * stride;
        for (std::size_t ky = 0; ky < kernel; ++ky) {
          for (std::size_t kx = 0; kx < kernel; ++kx) {
            const std::size_t idx = (oy * stride + ky) * W + ox * stride + kx;
            if (plane[idx] > plane[best]) best = idx;
          }
        }
        const std::size_t o = (pl * oh + oy) * ow + ox;
        out[o] = plane[best];
        argmax[o] = pl * H * W + best;
      }
    }
  }
  if (g_pattern) g_pattern->pattern->pool.push_back(argmax);
  return make_result<T>(std::move(out), {input}, "max_pool2d",
                        [argmax = std::move(argmax)](Node<T>& self) {
                          T* g = grad_of(*self.parents[0]).ptr();
                          for (std::size_t o = 0; o < argmax.size(); ++o) g[argmax[o]] += self.grad[o];
                        });
}

template <typename T>
BasicVar<T> avg_pool2d(const BasicVar<T>& input, std::size_t kernel, std::size_t stride) {
  require_rank(input, 4, "avg_pool2d", "NCHW");
  const auto& s = input.shape();
  const std::size_t oh = conv_out_extent(s[2], kernel, stride, 0, "avg_pool2d height");
  const std::size_t ow = conv_out_extent(s[3], kernel, stride, 0, "avg_pool2d width");
  const std::size_t planes = s[0] * s[1];
  const std::size_t H = s[2], W = s[3];
  const double inv = 1.0 / static_cast<double>(kernel * kernel);
  BasicTensor<T> out(Shape{s[0], s[1], oh, ow});
  const T* x = input.value().ptr();
  for (std::size_t pl = 0; pl < planes; ++pl) {
    const T* plane = x + pl * H * W;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = 0.0;
        for (std::size_t ky = 0; ky < kernel; ++ky) {
          for (std::size_t kx = 0; kx < kernel; ++kx) acc += plane[(oy * stride + ky) * W + ox * stride + kx];
        }
        out[(pl * oh + oy) * ow + ox] = static_cast<T>(acc * inv);
      }
    }
  }
  return make_result<T>(std::move(out), {input}, "avg_pool2d",
                        [planes, H, W, oh, ow, kernel, stride, inv](Node<T>& self) {
                          T* g = grad_of(*self.parents[0]).ptr();
                          for (std::size_t pl = 0; pl < planes; ++pl) {
                            for (std::size_t oy = 0; oy < oh; ++oy) {
                              for (std::size_t ox = 0; ox < ow; ++ox) {
                                const T share = static_cast<T>(self.grad[(pl * oh + oy) * ow + ox] * inv);
                                for (std::size_t ky = 0; ky < kernel; ++ky) {
                                  for (std::size_t kx = 0; kx < kernel; ++kx) {
                                    g[pl * H * W + (oy * stride + ky) * W + ox * stride + kx] += share;
                                  }
                                }
                              }
                            }
                          }
                        });
}

template <typename T>
BasicVar<T> global_avg_pool(const BasicVar<T>& input) {
  require_rank(input, 4, "global_avg_pool", "NCHW");
  const auto& s = input.shape();
  const std::size_t planes = s[0] * s[1];
  const std::size_t HW = s[2] * s[3];
  BasicTensor<T> out(Shape{s[0], s[1]});
  const T* x = input.value().ptr();
  for (std::size_t pl = 0; pl < planes; ++pl) {
    double acc = 0.0;
    for (std::size_t i = 0; i < HW; ++i) acc += x[pl * HW + i];
    out[pl] = static_cast<T>(acc / static_cast<double>(HW));
  }
  return make_result<T>(std::move(out), {input}, "global_avg_pool", [planes, HW](Node<T>& self) {
    T* g = grad_of(*self.parents[0]).ptr();
    for (std::size_t pl = 0; pl < planes; ++pl) {
      const T share = static_cast<T>(self.grad[pl] / static_cast<double>(HW));
      for (std::size_t i = 0; i < HW; ++i) g[pl * HW + i] += share;
    }
  });
}

template <typename T>
BasicVar<T> linear(const BasicVar<T>& input, const BasicVar<T>& weight, const BasicVar<T>& bias) {
  require_rank(input, 2, "linear", "NxF");
  require_rank(weight, 2, "linear weight", "OxF");
  const std::size_t N = input.shape()[0], F = input.shape()[1], O = weight.shape()[0];
  if (weight.shape()[1] != F) {
    throw ShapeError("linear: input features " + std::to_string(F) + " != weight columns " +
                     std::to_string(weight.shape()[1]));
  }
  if (bias.defined() && bias.shape() != Shape{O}) {
    throw ShapeError("linear: bias shape " + shape_str(bias.shape()) + " != [" + std::to_string(O) + "]");
  }
  BasicTensor<T> out(Shape{N, O});
  const T* x = input.value().ptr();
  const T* w = weight.value().ptr();
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t o = 0; o < O; ++o) {
      double acc = bias.defined() ? static_cast<double>(bias.value()[o]) : 0.0;
      for (std::size_t f = 0; f < F; ++f) acc += static_cast<double>(x[n * F + f]) * w[o * F + f];
      out[n * O + o] = static_cast<T>(acc);
    }
  }
  std::vector<BasicVar<T>> parents{input, weight};
  if (bias.defined()) parents.push_back(bias);
  return make_result<T>(std::move(out), std::move(parents), "linear", [N, F, O](Node<T>& self) {
    Node<T>& in = *self.parents[0];
    Node<T>& wt = *self.parents[1];
    const T* dy = self.grad.ptr();
    if (in.requires_grad) {
      T* dx = grad_of(in).ptr();
      for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t f = 0; f < F; ++f) {
          double acc = 0.0;
          for (std::size_t o = 0; o < O; ++o) acc += static_cast<double>(dy[n * O + o]) * wt.value[o * F + f];
          dx[n * F + f] += static_cast<T>(acc);
        }
      }
    }
    if (wt.requires_grad) {
      T* dw = grad_of(wt).ptr();
      for (std::size_t o = 0; o < O; ++o) {
        for (std::size_t f = 0; f < F; ++f) {
          double acc = 0.0;
          for (std::size_t n = 0; n < N; ++n) acc += static_cast<double>(dy[n * O + o]) * in.value[n * F + f];
          dw[o * F + f] += static_cast<T>(acc);
        }
      }
    }
    if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
      T* db = grad_of(*self.parents[2]).ptr();
      for (std::size_t o = 0; o < O; ++o) {
        double acc = 0.0;
        for (std::size_t n = 0; n < N; ++n) acc += dy[n * O + o];
        db[o] += static_cast<T>(acc);
      }
    }
  });
}

template <typename T>
BasicVar<T> concat_channels(const std::vector<BasicVar<T>>& inputs) {
  if (inputs.empty()) throw ShapeError("concat_channels: no inputs");
  for (const auto& v : inputs) require_rank(v, 4, "concat_channels", "NCHW");
  const Shape& first = inputs[0].shape();
  std::size_t total = 0;
  std::vector<std::size_t> channels;
  for (const auto& v : inputs) {
    const Shape& s = v.shape();
    if (s[0] != first[0] || s[2] != first[2] || s[3] != first[3]) {
      throw ShapeError("concat_channels: " + shape_str(s) + " incompatible with " + shape_str(first) +
                       " (all dimensions except channels must agree)");
    }
    channels.push_back(s[1]);
    total += s[1];
  }
  const std::size_t N = first[0], HW = first[2] * first[3];
  BasicTensor<T> out(Shape{N, total, first[2], first[3]});
  for (std::size_t n = 0; n < N; ++n) {
    std::size_t c0 = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const T* src = inputs[i].value().ptr() + n * channels[i] * HW;
      std::copy(src, src + channels[i] * HW, out.ptr() + (n * total + c0) * HW);
      c0 += channels[i];
    }
  }
  return make_result<T>(std::move(out), inputs, "concat_channels",
                        [channels, total, N, HW](Node<T>& self) {
                          std::size_t c0 = 0;
                          for (std::size_t i = 0; i < self.parents.size(); ++i) {
                            Node<T>& p = *self.parents[i];
                            if (p.requires_grad) {
                              T* g = grad_of(p).ptr();
                              for (std::size_t n = 0; n < N; ++n) {
                                const T* src = self.grad.ptr() + (n * total + c0) * HW;
                                T* dst = g + n * channels[i] * HW;
                                for (std::size_t j = 0; j < channels[i] * HW; ++j) dst[j] += src[j];
                              }
                            }
                            c0 += channels[i];
                          }
                        });
}

namespace {

// Row-wise log-softmax in double; `out` holds NxC values.
template <typename T>
void log_softmax_rows(const T* x, std::size_t N, std::size_t C, std::vector<double>& out) {
  out.resize(N * C);
  for (std::size_t n = 0; n < N; ++n) {
    const T* row = x + n * C;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < C; ++c) mx = std::max(mx, static_cast<double>(row[c]));
    double z = 0.0;
    for (std::size_t c = 0; c < C; ++c) z += std::exp(row[c] - mx);
    const double lz = mx + std::log(z);
    for (std::size_t c = 0; c < C; ++c) out[n * C + c] = row[c] - lz;
  }
}

}  // namespace

template <typename T>
BasicVar<T> softmax(const BasicVar<T>& logits) {
  require_rank(logits, 2, "softmax", "NxC");
  const std::size_t N = logits.shape()[0], C = logits.shape()[1];
  std::vector<double> ls;
  log_softmax_rows(logits.value().ptr(), N, C, ls);
  BasicTensor<T> out(logits.shape());
  for (std::size_t i = 0; i < ls.size(); ++i) out[i] = static_cast<T>(std::exp(ls[i]));
  return make_result<T>(std::move(out), {logits}, "softmax", [N, C](Node<T>& self) {
    T* g = grad_of(*self.parents[0]).ptr();
    const T* s = self.value.ptr();
    const T* dy = self.grad.ptr();
    for (std::size_t n = 0; n < N; ++n) {
      double dot = 0.0;
      for (std::size_t c = 0; c < C; ++c) dot += static_cast<double>(dy[n * C + c]) * s[n * C + c];
      for (std::size_t c = 0; c < C; ++c) {
        g[n * C + c] += static_cast<T>(s[n * C + c] * (dy[n * C + c] - dot));
      }
    }
  });
}

template <typename T>
BasicVar<T> log_softmax(const BasicVar<T>& logits) {
  require_rank(logits, 2, "log_softmax", "NxC");
  const std::size_t N = logits.shape()[0], C = logits.shape()[1];
  std::vector<double> ls;
  log_softmax_rows(logits.value().ptr(), N, C, ls);
  BasicTensor<T> out(logits.shape());
  for (std::size_t i = 0; i < ls.size(); ++i) out[i] = static_cast<T>(ls[i]);
  return make_result<T>(std::move(out), {logits}, "log_softmax",
                        [N, C, ls = std::move(ls)](Node<T>& self) {
                          T* g = grad_of(*self.parents[0]).ptr();
                          const T* dy = self.grad.ptr();
                          for (std::size_t n = 0; n < N; ++n) {
                            double total = 0.0;
                            for (std::size_t c = 0; c < C; ++c) total += dy[n * C + c];
                            for (std::size_t c = 0; c < C; ++c) {
                              g[n * C + c] += static_cast<T>(dy[n * C + c] - std::exp(ls[n * C + c]) * total);
                            }
                          }
                        });
}

#define XRN_INSTANTIATE_OPS(T)                                                                      \
  template BasicVar<T> add(const BasicVar<T>&, const BasicVar<T>&);                                \
  template BasicVar<T> mul(const BasicVar<T>&, const BasicVar<T>&);                                \
  template BasicVar<T> relu(const BasicVar<T>&);                                                   \
  template BasicVar<T> sum(const BasicVar<T>&);                                                    \
  template BasicVar<T> batch_norm(const BasicVar<T>&, const BasicVar<T>&, const BasicVar<T>&,      \
                                  BatchNormStats<T>&, Mode, BatchNormOptions);                     \
  template BasicVar<T> max_pool2d(const BasicVar<T>&, std::size_t, std::size_t);                   \
  template BasicVar<T> avg_pool2d(const BasicVar<T>&, std::size_t, std::size_t);                   \
  template BasicVar<T> global_avg_pool(const BasicVar<T>&);                                        \
  template BasicVar<T> linear(const BasicVar<T>&, const BasicVar<T>&, const BasicVar<T>&);         \
  template BasicVar<T> concat_channels(const std::vector<BasicVar<T>>&);                           \
  template BasicVar<T> softmax(const BasicVar<T>&);                                                \
  template BasicVar<T> log_softmax(const BasicVar<T>&);

XRN_INSTANTIATE_OPS(float)
XRN_INSTANTIATE_OPS(double)

#undef XRN_INSTANTIATE_OPS

}  // namespace xrn
