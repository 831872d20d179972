#include "wmlab/dct.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace wmlab {

DctPlan::DctPlan(int n) : n_(n) {
  if (n <= 0) throw std::invalid_argument("DctPlan: n <= 0");
  basis_.resize(static_cast<std::size_t>(n) * n);
  const double pi = 3.14159265358979323846;
  for (int k = 0; k < n; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int i = 0; i < n; ++i)
      basis_[static_cast<std::size_t>(k) * n + i] =
          scale * std::cos(pi * (2 * i + 1) * k / (2.0 * n));
  }
}

void DctPlan::forward_1d(const double* x, double* y) const {
  for (int k = 0; k < n_; ++k) {
    const double* row = &basis_[static_cast<std::size_t>(k) * n_];
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += row[i] * x[i];
    y[k] = s;
  }
}

void DctPlan::inverse_1d(const double* x, double* y) const {
  for (int i = 0; i < n_; ++i) y[i] = 0.0;
  for (int k = 0; k < n_; ++k) {
    const double* row = &basis_[static_cast<std::size_t>(k) * n_];
    const double xk = x[k];
    for (int i = 0; i < n_; ++i) y[i] += row[i] * xk;
  }
}

std::vector<double> DctPlan::forward_2d(const std::vector<double>& img) const {
  const std::size_t n = static_cast<std::size_t>(n_);
  if (img.size() != n * n) throw std::invalid_argument("forward_2d: size mismatch");
  std::vector<double> tmp(n * n), out(n * n), col(n), colt(n);
  // Rows.
  for (int r = 0; r < n_; ++r) forward_1d(&img[r * n], &tmp[r * n]);
  // Columns.
  for (int c = 0; c < n_; ++c) {
    for (int r = 0; r < n_; ++r) col[r] = tmp[r * n + c];
    forward_1d(col.data(), colt.data());
    for (int r = 0; r < n_; ++r) out[r * n + c] = colt[r];
  }
  return out;
}

std::vector<double> DctPlan::inverse_2d(const std::vector<double>& coeffs) const {
  const std::size_t n = static_cast<std::size_t>(n_);
  if (coeffs.size() != n * n)
    throw std::invalid_argument("inverse_2d: size mismatch");
  std::vector<double> tmp(n * n), out(n * n), col(n), colt(n);
  for (int c = 0; c < n_; ++c) {
    for (int r = 0; r < n_; ++r) col[r] = coeffs[r * n + c];
    inverse_1d(col.data(), colt.data());
    for (int r = 0; r < n_; ++r) tmp[r * n + c] = colt[r];
  }
  for (int r = 0; r < n_; ++r) inverse_1d(&tmp[r * n], &out[r * n]);
  return out;
}

const DctPlan& DctPlan::cached(int n) {
  static std::mutex mu;
  static std::map<int, DctPlan> plans;
  std::lock_guard<std::mutex> lock(mu);
  auto it = plans.find(n);
  if (it == plans.end()) it = plans.emplace(n, DctPlan(n)).first;
  return it->second;
}

}  // namespace wmlab
