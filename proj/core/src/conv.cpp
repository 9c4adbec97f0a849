#include <Eigen/Core>

#include <algorithm>
#include <cstring>
#include <string>

#include "xrn/error.hpp"
#include "xrn/ops.hpp"

namespace xrn {

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                            std::size_t padding, const char* what) {
  if (stride == 0) throw ShapeError(std::string(what) + ": stride must be positive");
  const std::size_t padded = in + 2 * padding;
  if (kernel == 0 || padded < kernel) {
    throw ShapeError(std::string(what) + ": extent " + std::to_string(in) + " with padding " +
                     std::to_string(padding) + " is smaller than kernel " + std::to_string(kernel));
  }
  // Trailing rows/columns that do not fill a whole window are dropped.
  return (padded - kernel) / stride + 1;
}

namespace {

struct ConvGeometry {
  std::size_t n, c, h, w;      // input
  std::size_t o, kh, kw;       // kernel
  std::size_t oh, ow;          // output
  std::size_t stride, padding;
  std::size_t k() const { return c * kh * kw; }
  std::size_t p() const { return oh * ow; }
};

// col is K x P with K ordered (channel, kernel row, kernel column).
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* col) {
  const std::size_t P = g.p();
  for (std::size_t ci = 0; ci < g.c; ++ci) {
    const T* plane = image + ci * g.h * g.w;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        T* row = col + ((ci * g.kh + ky) * g.kw + kx) * P;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
          T* dst = row + oy * g.ow;
          if (iy < 0 || iy >= static_cast<long>(g.h)) {
            std::fill(dst, dst + g.ow, T{0});
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * g.w;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
            dst[ox] = (ix < 0 || ix >= static_cast<long>(g.w)) ? T{0} : src[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, T* image) {
  const std::size_t P = g.p();
  for (std::size_t ci = 0; ci < g.c; ++ci) {
    T* plane = image + ci * g.h * g.w;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const T* row = col + ((ci * g.kh + ky) * g.kw + kx) * P;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          T* dst = plane + static_cast<std::size_t>(iy) * g.w;
          const T* src = row + oy * g.ow;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
            if (ix >= 0 && ix < static_cast<long>(g.w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

// out[r][p] = sum_k weight[r][k] * col[k][p], accumulated strictly in increasing
// k for every output element, so the result equals a naive loop bit-for-bit.
// Rows and columns are tiled so accumulators stay in registers.
template <typename T, std::size_t R, std::size_t PB>
void gemm_tile(const T* weight, std::size_t K, const T* col, std::size_t P, std::size_t p0,
               T* out) {
  T acc[R][PB] = {};
  for (std::size_t k = 0; k < K; ++k) {
    const T* c = col + k * P + p0;
    for (std::size_t r = 0; r < R; ++r) {
      const T w = weight[r * K + k];
      for (std::size_t j = 0; j < PB; ++j) acc[r][j] += w * c[j];
    }
  }
  for (std::size_t r = 0; r < R; ++r) std::memcpy(out + r * P + p0, acc[r], PB * sizeof(T));
}

template <typename T>
void gemm_rows_tail(const T* weight, std::size_t rows, std::size_t K, const T* col, std::size_t P,
                    std::size_t p_begin, std::size_t p_end, T* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t p = p_begin; p < p_end; ++p) {
      T acc = T{0};
      for (std::size_t k = 0; k < K; ++k) acc += weight[r * K + k] * col[k * P + p];
      out[r * P + p] = acc;
    }
  }
}

template <typename T>
void ordered_gemm(const T* weight, std::size_t O, std::size_t K, const T* col, std::size_t P,
                  T* out) {
  constexpr std::size_t R = 4;
  constexpr std::size_t PB = 32 / sizeof(T) * 2;
  const std::size_t p_full = P / PB * PB;
  std::size_t o = 0;
  for (; o + R <= O; o += R) {
    for (std::size_t p0 = 0; p0 < p_full; p0 += PB) {
      gemm_tile<T, R, PB>(weight + o * K, K, col, P, p0, out + o * P);
    }
    gemm_rows_tail(weight + o * K, R, K, col, P, p_full, P, out + o * P);
  }
  if (o < O) {
    for (std::size_t p0 = 0; p0 < p_full; p0 += PB) {
      for (std::size_t r = o; r < O; ++r) gemm_tile<T, 1, PB>(weight + r * K, K, col, P, p0, out + r * P);
    }
    gemm_rows_tail(weight + o * K, O - o, K, col, P, p_full, P, out + o * P);
  }
}

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

template <typename T>
BasicVar<T> conv2d(const BasicVar<T>& input, const BasicVar<T>& kernel, const BasicVar<T>& bias,
                   Conv2dOptions options) {
  const auto& xs = input.shape();
  const auto& ks = kernel.shape();
  if (xs.size() != 4) throw ShapeError("conv2d: input must be NCHW, got " + shape_str(xs));
  if (ks.size() != 4) throw ShapeError("conv2d: kernel must be OIHW, got " + shape_str(ks));
  if (xs[1] != ks[1]) {
    throw ShapeError("conv2d: input channels " + std::to_string(xs[1]) +
                     " != kernel input channels " + std::to_string(ks[1]));
  }
  if (bias.defined() && bias.shape() != Shape{ks[0]}) {
    throw ShapeError("conv2d: bias shape " + shape_str(bias.shape()) + " != [" +
                     std::to_string(ks[0]) + "]");
  }
  ConvGeometry g{xs[0], xs[1], xs[2], xs[3], ks[0], ks[2], ks[3], 0, 0,
                 options.stride, options.padding};
  g.oh = conv_out_extent(g.h, g.kh, g.stride, g.padding, "conv2d height");
  g.ow = conv_out_extent(g.w, g.kw, g.stride, g.padding, "conv2d width");

  const std::size_t K = g.k();
  const std::size_t P = g.p();
  std::vector<T> cols(g.n * K * P);
  BasicTensor<T> out(Shape{g.n, g.o, g.oh, g.ow});
  const T* x = input.value().ptr();
  const T* w = kernel.value().ptr();
  for (std::size_t n = 0; n < g.n; ++n) {
    T* col = cols.data() + n * K * P;
    im2col(x + n * g.c * g.h * g.w, g, col);
    T* y = out.ptr() + n * g.o * P;
    ordered_gemm(w, g.o, K, col, P, y);
    if (bias.defined()) {
      const T* b = bias.value().ptr();
      for (std::size_t o = 0; o < g.o; ++o) {
        for (std::size_t p = 0; p < P; ++p) y[o * P + p] += b[o];
      }
    }
  }

  const bool need_input_grad = input.requires_grad();
  const bool need_kernel_grad = kernel.requires_grad();
  if (!need_kernel_grad) cols.clear();
  std::vector<BasicVar<T>> parents{input, kernel};
  if (bias.defined()) parents.push_back(bias);
  return make_result<T>(
      std::move(out), std::move(parents), "conv2d",
      [g, cols = std::move(cols), need_input_grad, need_kernel_grad](Node<T>& self) {
        const std::size_t K = g.k();
        const std::size_t P = g.p();
        const T* gy = self.grad.ptr();
        Node<T>& in_node = *self.parents[0];
        Node<T>& k_node = *self.parents[1];
        Eigen::Map<const RowMat<T>> wmat(k_node.value.ptr(), g.o, K);
        if (need_kernel_grad && k_node.requires_grad) {
          Eigen::Map<RowMat<T>> gw(grad_of(k_node).ptr(), g.o, K);
          for (std::size_t n = 0; n < g.n; ++n) {
            Eigen::Map<const RowMat<T>> gyn(gy + n * g.o * P, g.o, P);
            Eigen::Map<const RowMat<T>> col(cols.data() + n * K * P, K, P);
            gw.noalias() += gyn * col.transpose();
          }
        }
        if (self.parents.size() > 2 && self.parents[2]->requires_grad) {
          T* gb = grad_of(*self.parents[2]).ptr();
          for (std::size_t n = 0; n < g.n; ++n) {
            for (std::size_t o = 0; o < g.o; ++o) {
              const T* row = gy + (n * g.o + o) * P;
              double acc = 0.0;
              for (std::size_t p = 0; p < P; ++p) acc += row[p];
              gb[o] += static_cast<T>(acc);
            }
          }
        }
        if (need_input_grad && in_node.requires_grad) {
          T* gx = grad_of(in_node).ptr();
          RowMat<T> gcol(K, P);
          for (std::size_t n = 0; n < g.n; ++n) {
            Eigen::Map<const RowMat<T>> gyn(gy + n * g.o * P, g.o, P);
            gcol.noalias() = wmat.transpose() * gyn;
            col2im_add(gcol.data(), g, gx + n * g.c * g.h * g.w);
          }
        }
      });
}

template BasicVar<float> conv2d(const BasicVar<float>&, const BasicVar<float>&,
                                const BasicVar<float>&, Conv2dOptions);
template BasicVar<double> conv2d(const BasicVar<double>&, const BasicVar<double>&,
                                 const BasicVar<double>&, Conv2dOptions);

}  // namespace xrn
