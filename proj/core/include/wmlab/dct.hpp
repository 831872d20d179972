#pragma once

#include <vector>

namespace wmlab {

// Orthonormal DCT-II plans, cached per transform length. The 2-D transforms
// are separable matrix products; at the 32x32 working size this is faster in
// practice than an FFT-based route and keeps the adjoint trivially exact
// (inverse == transpose).
class DctPlan {
public:
  explicit DctPlan(int n);

  int size() const { return n_; }

  // y = C x (forward 1-D DCT of one column vector), x and y length n.
  void forward_1d(const double* x, double* y) const;
  void inverse_1d(const double* x, double* y) const;

  // In-place style 2-D transforms on row-major n x n buffers.
  std::vector<double> forward_2d(const std::vector<double>& img) const;
  std::vector<double> inverse_2d(const std::vector<double>& coeffs) const;

  static const DctPlan& cached(int n);

private:
  int n_;
  std::vector<double> basis_;  // basis_[k*n + i] = s_k cos(pi (2i+1) k / 2n)
};

}  // namespace wmlab
