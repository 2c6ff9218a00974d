#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace bildrl {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. Vectors stored as n x 1 tensors where a
// named parameter slot needs them (biases); free-standing math uses Vec.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  static Tensor zeros(int r, int c) { return Tensor(r, c); }

  double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }

  double* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

  void fill(double v) { data.assign(data.size(), v); }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

// Four-accumulator dot product: fixed summation order (deterministic) but fast
// enough without -ffast-math.
inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline double dot(const Vec& a, const Vec& b) { return dot(a.data(), b.data(), a.size()); }

// y <- M x (M: m x n, x: n).
Vec matvec(const Tensor& M, const Vec& x);

// y <- M^T x (M: m x n, x: m, result: n).
Vec matvec_t(const Tensor& M, const Vec& x);

// M x + b. Raises ContractError on dimension mismatch.
Vec affine(const Vec& x, const Tensor& M, const Vec& b);
Vec affine(const Vec& x, const Tensor& M, const Tensor& b);  // b as n x 1 slot

// G += u v^T (G: |u| x |v|).
void add_outer(Tensor& G, const Vec& u, const Vec& v);
void add_outer(Tensor& G, const Vec& u, const double* v, std::size_t n);

// y += a * x.
void axpy(double a, const Vec& x, Vec& y);
void axpy(double a, const double* x, double* y, std::size_t n);

// Numerically stable softmax (max-shifted). Requires non-empty input.
Vec softmax(const Vec& z);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double squared_l2(const Vec& a, const Vec& b);
double norm2(const Vec& a);

bool all_finite(const Vec& v);

// Shape string "3x4" for error messages.
std::string shape_str(const Tensor& t);

}  // namespace bildrl
