#pragma once

#include <algorithm>
#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace bergman {

using cplx = std::complex<double>;

/// Point of C^n, one complex entry per coordinate.
using ComplexPoint = Eigen::VectorXcd;

/// n x n complex matrix; callers that need the Hermitian invariant check it
/// with is_hermitian().
using HermitianMatrix = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;

/// Dense n x n x n complex array, row-major in (a, b, c).
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int n) : n_(n), data_(static_cast<std::size_t>(n * n * n), cplx{}) {}

  int dim() const { return n_; }
  void set_zero() { std::fill(data_.begin(), data_.end(), cplx{}); }
  cplx& operator()(int a, int b, int c) { return data_[index(a, b, c)]; }
  const cplx& operator()(int a, int b, int c) const { return data_[index(a, b, c)]; }

 private:
  std::size_t index(int a, int b, int c) const {
    return static_cast<std::size_t>((a * n_ + b) * n_ + c);
  }
  int n_ = 0;
  std::vector<cplx> data_;
};

bool is_finite(const ComplexPoint& z);

bool is_hermitian(const HermitianMatrix& m, double tol = 1e-12);

/// Smallest eigenvalue of the Hermitian part of m.
double min_eigenvalue(const HermitianMatrix& m);

ComplexPoint make_point(std::initializer_list<cplx> coords);

}  // namespace bergman
