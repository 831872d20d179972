#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "wmlab/rng.hpp"

namespace wmlab::nn {

// Minimal CHW tensor in double precision. Training at the 32x32 working
// size is cheap enough that clarity and exact finite-difference checks win
// over a float path.
struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int c_, int h_, int w_, double fill = 0.0)
      : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, fill) {}

  double& at(int ci, int y, int x) {
    return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }
  double at(int ci, int y, int x) const {
    return v[(static_cast<std::size_t>(ci) * h + y) * w + x];
  }
  std::size_t size() const { return v.size(); }
  bool same_shape(const Tensor& o) const {
    return c == o.c && h == o.h && w == o.w;
  }
};

// 2-D convolution with square kernel, padding k/2.
struct ConvLayer {
  int in_c = 0, out_c = 0, k = 3, stride = 1;
  std::vector<double> w;  // (out_c, in_c, k, k)
  std::vector<double> b;  // (out_c)

  ConvLayer() = default;
  ConvLayer(int in_channels, int out_channels, int ksize, int stride_);

  void init(Rng& rng);  // He-style normal initialization
  Tensor forward(const Tensor& x) const;
  // Accumulates into dw/db (same sizes as w/b) and returns dL/dx.
  Tensor backward(const Tensor& x, const Tensor& dy, std::vector<double>& dw,
                  std::vector<double>& db) const;

  int out_h(int h) const { return (h + 2 * (k / 2) - k) / stride + 1; }
};

struct LinearLayer {
  int in_n = 0, out_n = 0;
  std::vector<double> w;  // (out_n, in_n)
  std::vector<double> b;

  LinearLayer() = default;
  LinearLayer(int in, int out);
  void init(Rng& rng);
  std::vector<double> forward(const std::vector<double>& x) const;
  std::vector<double> backward(const std::vector<double>& x,
                               const std::vector<double>& dy,
                               std::vector<double>& dw,
                               std::vector<double>& db) const;
};

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& dy);
Tensor tanh_t(const Tensor& x);
// dx from cached output y.
Tensor tanh_backward_from_y(const Tensor& y, const Tensor& dy);
double sigmoid(double x);

// (c,h,w) -> per-channel means.
std::vector<double> global_avg_pool(const Tensor& x);
Tensor global_avg_pool_backward(int c, int h, int w,
                                const std::vector<double>& dy);

Tensor upsample_nearest_2x(const Tensor& x);
Tensor upsample_nearest_2x_backward(const Tensor& dy);

// y[c] = x[c] + bias[c] broadcast over the spatial grid.
Tensor add_channel_bias(const Tensor& x, const std::vector<double>& bias);
std::vector<double> channel_bias_grad(const Tensor& dy);

// Sinusoidal embedding of a scalar in [0,1]; dim must be even.
std::vector<double> sinusoidal_embedding(double t01, int dim);

// Parameter registry entry used by the optimizers: value and matching
// gradient accumulator.
struct ParamRef {
  std::vector<double>* value;
  std::vector<double>* grad;
};

struct SgdMomentum {
  double lr = 0.1;
  double momentum = 0.9;
  std::vector<std::vector<double>> velocity;

  void step(const std::vector<ParamRef>& params);
};

struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;
  std::vector<std::vector<double>> m, v;

  void step(const std::vector<ParamRef>& params);
};

// Runs fn(i) for i in [0, n) over up to `threads` std::threads. Work items
// must be independent; determinism comes from each item being self-contained.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace wmlab::nn
