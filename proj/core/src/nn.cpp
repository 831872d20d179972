#include "wmlab/nn.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

namespace wmlab::nn {

ConvLayer::ConvLayer(int in_channels, int out_channels, int ksize, int stride_)
    : in_c(in_channels), out_c(out_channels), k(ksize), stride(stride_),
      w(static_cast<std::size_t>(out_channels) * in_channels * ksize * ksize, 0.0),
      b(out_channels, 0.0) {}

void ConvLayer::init(Rng& rng) {
  const double scale = std::sqrt(2.0 / (in_c * k * k));
  for (double& x : w) x = scale * rng.gaussian();
  for (double& x : b) x = 0.0;
}

namespace {

// Copies x into a zero-padded (c, h+2p, w+2p) buffer.
Tensor pad_input(const Tensor& x, int p) {
  Tensor out(x.c, x.h + 2 * p, x.w + 2 * p, 0.0);
  for (int c = 0; c < x.c; ++c)
    for (int y = 0; y < x.h; ++y) {
      const double* src = &x.v[(static_cast<std::size_t>(c) * x.h + y) * x.w];
      double* dst =
          &out.v[(static_cast<std::size_t>(c) * out.h + y + p) * out.w + p];
      for (int i = 0; i < x.w; ++i) dst[i] = src[i];
    }
  return out;
}

}  // namespace

Tensor ConvLayer::forward(const Tensor& x) const {
  const int p = k / 2;
  const Tensor xp = pad_input(x, p);
  const int oh = out_h(x.h), ow = out_h(x.w);
  Tensor y(out_c, oh, ow);
  for (int oc = 0; oc < out_c; ++oc) {
    double* ybase = &y.v[static_cast<std::size_t>(oc) * oh * ow];
    for (int i = 0; i < oh * ow; ++i) ybase[i] = b[oc];
    for (int ic = 0; ic < in_c; ++ic) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const double wv =
              w[((static_cast<std::size_t>(oc) * in_c + ic) * k + ky) * k + kx];
          for (int oy = 0; oy < oh; ++oy) {
            const double* xrow =
                &xp.v[(static_cast<std::size_t>(ic) * xp.h + oy * stride + ky) *
                          xp.w +
                      kx];
            double* yrow = ybase + static_cast<std::size_t>(oy) * ow;
            if (stride == 1) {
              for (int ox = 0; ox < ow; ++ox) yrow[ox] += wv * xrow[ox];
            } else {
              for (int ox = 0; ox < ow; ++ox) yrow[ox] += wv * xrow[ox * stride];
            }
          }
        }
      }
    }
  }
  return y;
}

Tensor ConvLayer::backward(const Tensor& x, const Tensor& dy,
                           std::vector<double>& dw,
                           std::vector<double>& db) const {
  const int p = k / 2;
  const Tensor xp = pad_input(x, p);
  const int oh = dy.h, ow = dy.w;
  Tensor dxp(x.c, x.h + 2 * p, x.w + 2 * p, 0.0);

  for (int oc = 0; oc < out_c; ++oc) {
    const double* dybase = &dy.v[static_cast<std::size_t>(oc) * oh * ow];
    double acc_db = 0.0;
    for (int i = 0; i < oh * ow; ++i) acc_db += dybase[i];
    db[oc] += acc_db;
    for (int ic = 0; ic < in_c; ++ic) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const std::size_t widx =
              ((static_cast<std::size_t>(oc) * in_c + ic) * k + ky) * k + kx;
          const double wv = w[widx];
          double acc_dw = 0.0;
          for (int oy = 0; oy < oh; ++oy) {
            const double* xrow =
                &xp.v[(static_cast<std::size_t>(ic) * xp.h + oy * stride + ky) *
                          xp.w +
                      kx];
            double* dxrow =
                &dxp.v[(static_cast<std::size_t>(ic) * dxp.h + oy * stride + ky) *
                           dxp.w +
                       kx];
            const double* dyrow = dybase + static_cast<std::size_t>(oy) * ow;
            if (stride == 1) {
              for (int ox = 0; ox < ow; ++ox) {
                acc_dw += dyrow[ox] * xrow[ox];
                dxrow[ox] += wv * dyrow[ox];
              }
            } else {
              for (int ox = 0; ox < ow; ++ox) {
                acc_dw += dyrow[ox] * xrow[ox * stride];
                dxrow[ox * stride] += wv * dyrow[ox];
              }
            }
          }
          dw[widx] += acc_dw;
        }
      }
    }
  }

  // Unpad.
  Tensor dx(x.c, x.h, x.w);
  for (int c = 0; c < x.c; ++c)
    for (int y = 0; y < x.h; ++y) {
      const double* src =
          &dxp.v[(static_cast<std::size_t>(c) * dxp.h + y + p) * dxp.w + p];
      double* dst = &dx.v[(static_cast<std::size_t>(c) * x.h + y) * x.w];
      for (int i = 0; i < x.w; ++i) dst[i] = src[i];
    }
  return dx;
}

LinearLayer::LinearLayer(int in, int out)
    : in_n(in), out_n(out), w(static_cast<std::size_t>(in) * out, 0.0),
      b(out, 0.0) {}

void LinearLayer::init(Rng& rng) {
  const double scale = std::sqrt(2.0 / in_n);
  for (double& x : w) x = scale * rng.gaussian();
  for (double& x : b) x = 0.0;
}

std::vector<double> LinearLayer::forward(const std::vector<double>& x) const {
  std::vector<double> y(out_n);
  for (int o = 0; o < out_n; ++o) {
    double s = b[o];
    const double* row = &w[static_cast<std::size_t>(o) * in_n];
    for (int i = 0; i < in_n; ++i) s += row[i] * x[i];
    y[o] = s;
  }
  return y;
}

std::vector<double> LinearLayer::backward(const std::vector<double>& x,
                                          const std::vector<double>& dy,
                                          std::vector<double>& dw,
                                          std::vector<double>& db) const {
  std::vector<double> dx(in_n, 0.0);
  for (int o = 0; o < out_n; ++o) {
    db[o] += dy[o];
    const double* row = &w[static_cast<std::size_t>(o) * in_n];
    double* drow = &dw[static_cast<std::size_t>(o) * in_n];
    for (int i = 0; i < in_n; ++i) {
      drow[i] += dy[o] * x[i];
      dx[i] += row[i] * dy[o];
    }
  }
  return dx;
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.v) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.v.size(); ++i)
    if (x.v[i] <= 0.0) dx.v[i] = 0.0;
  return dx;
}

Tensor tanh_t(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.v) v = std::tanh(v);
  return y;
}

Tensor tanh_backward_from_y(const Tensor& y, const Tensor& dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.v.size(); ++i)
    dx.v[i] *= 1.0 - y.v[i] * y.v[i];
  return dx;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<double> global_avg_pool(const Tensor& x) {
  std::vector<double> y(x.c, 0.0);
  const double inv = 1.0 / (static_cast<double>(x.h) * x.w);
  for (int c = 0; c < x.c; ++c) {
    double s = 0.0;
    const double* base = &x.v[static_cast<std::size_t>(c) * x.h * x.w];
    for (int i = 0; i < x.h * x.w; ++i) s += base[i];
    y[c] = s * inv;
  }
  return y;
}

Tensor global_avg_pool_backward(int c, int h, int w,
                                const std::vector<double>& dy) {
  Tensor dx(c, h, w);
  const double inv = 1.0 / (static_cast<double>(h) * w);
  for (int ci = 0; ci < c; ++ci) {
    double* base = &dx.v[static_cast<std::size_t>(ci) * h * w];
    for (int i = 0; i < h * w; ++i) base[i] = dy[ci] * inv;
  }
  return dx;
}

Tensor upsample_nearest_2x(const Tensor& x) {
  Tensor y(x.c, x.h * 2, x.w * 2);
  for (int c = 0; c < x.c; ++c)
    for (int yy = 0; yy < y.h; ++yy)
      for (int xx = 0; xx < y.w; ++xx)
        y.at(c, yy, xx) = x.at(c, yy / 2, xx / 2);
  return y;
}

Tensor upsample_nearest_2x_backward(const Tensor& dy) {
  Tensor dx(dy.c, dy.h / 2, dy.w / 2, 0.0);
  for (int c = 0; c < dy.c; ++c)
    for (int yy = 0; yy < dy.h; ++yy)
      for (int xx = 0; xx < dy.w; ++xx)
        dx.at(c, yy / 2, xx / 2) += dy.at(c, yy, xx);
  return dx;
}

Tensor add_channel_bias(const Tensor& x, const std::vector<double>& bias) {
  Tensor y = x;
  for (int c = 0; c < x.c; ++c) {
    double* base = &y.v[static_cast<std::size_t>(c) * x.h * x.w];
    for (int i = 0; i < x.h * x.w; ++i) base[i] += bias[c];
  }
  return y;
}

std::vector<double> channel_bias_grad(const Tensor& dy) {
  std::vector<double> db(dy.c, 0.0);
  for (int c = 0; c < dy.c; ++c) {
    const double* base = &dy.v[static_cast<std::size_t>(c) * dy.h * dy.w];
    for (int i = 0; i < dy.h * dy.w; ++i) db[c] += base[i];
  }
  return db;
}

std::vector<double> sinusoidal_embedding(double t01, int dim) {
  if (dim % 2 != 0) throw std::invalid_argument("sinusoidal_embedding: odd dim");
  std::vector<double> e(dim);
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    // Geometric frequency ladder from 1 to ~1000.
    const double freq = std::pow(1000.0, static_cast<double>(i) / (half - 1));
    e[i] = std::sin(t01 * freq);
    e[half + i] = std::cos(t01 * freq);
  }
  return e;
}

void SgdMomentum::step(const std::vector<ParamRef>& params) {
  if (velocity.size() != params.size()) {
    velocity.clear();
    for (const auto& p : params) velocity.emplace_back(p.value->size(), 0.0);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& val = *params[i].value;
    auto& grad = *params[i].grad;
    auto& vel = velocity[i];
    for (std::size_t j = 0; j < val.size(); ++j) {
      vel[j] = momentum * vel[j] + grad[j];
      val[j] -= lr * vel[j];
    }
  }
}

void Adam::step(const std::vector<ParamRef>& params) {
  if (m.size() != params.size()) {
    m.clear();
    v.clear();
    for (const auto& p : params) {
      m.emplace_back(p.value->size(), 0.0);
      v.emplace_back(p.value->size(), 0.0);
    }
  }
  ++t;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& val = *params[i].value;
    auto& grad = *params[i].grad;
    for (std::size_t j = 0; j < val.size(); ++j) {
      m[i][j] = beta1 * m[i][j] + (1.0 - beta1) * grad[j];
      v[i][j] = beta2 * v[i][j] + (1.0 - beta2) * grad[j] * grad[j];
      const double mh = m[i][j] / bc1;
      const double vh = v[i][j] / bc2;
      val[j] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  const int workers = std::max(1, std::min(threads, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace wmlab::nn
