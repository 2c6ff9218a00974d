#include "bildrl/tensor.hpp"

#include <algorithm>

#include "bildrl/error.hpp"

namespace bildrl {

Vec matvec(const Tensor& M, const Vec& x) {
  if (static_cast<std::size_t>(M.cols) != x.size())
    throw ContractError("matvec: matrix " + shape_str(M) + " incompatible with vector of length " +
                        std::to_string(x.size()));
  Vec y(static_cast<std::size_t>(M.rows));
  for (int i = 0; i < M.rows; ++i) y[static_cast<std::size_t>(i)] = dot(M.row(i), x.data(), x.size());
  return y;
}

Vec matvec_t(const Tensor& M, const Vec& x) {
  if (static_cast<std::size_t>(M.rows) != x.size())
    throw ContractError("matvec_t: matrix " + shape_str(M) + " incompatible with vector of length " +
                        std::to_string(x.size()));
  Vec y(static_cast<std::size_t>(M.cols), 0.0);
  for (int i = 0; i < M.rows; ++i) axpy(x[static_cast<std::size_t>(i)], M.row(i), y.data(), y.size());
  return y;
}

Vec affine(const Vec& x, const Tensor& M, const Vec& b) {
  if (static_cast<std::size_t>(M.rows) != b.size())
    throw ContractError("affine: matrix " + shape_str(M) + " incompatible with bias of length " +
                        std::to_string(b.size()));
  Vec y = matvec(M, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b[i];
  return y;
}

Vec affine(const Vec& x, const Tensor& M, const Tensor& b) {
  if (b.cols != 1 || b.rows != M.rows)
    throw ContractError("affine: bias slot " + shape_str(b) + " incompatible with matrix " + shape_str(M));
  Vec y = matvec(M, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b.data[i];
  return y;
}

void add_outer(Tensor& G, const Vec& u, const Vec& v) { add_outer(G, u, v.data(), v.size()); }

void add_outer(Tensor& G, const Vec& u, const double* v, std::size_t n) {
  if (static_cast<std::size_t>(G.rows) != u.size() || static_cast<std::size_t>(G.cols) != n)
    throw ContractError("add_outer: target " + shape_str(G) + " incompatible with outer product " +
                        std::to_string(u.size()) + "x" + std::to_string(n));
  for (int i = 0; i < G.rows; ++i) axpy(u[static_cast<std::size_t>(i)], v, G.row(i), n);
}

void axpy(double a, const Vec& x, Vec& y) {
  if (x.size() != y.size())
    throw ContractError("axpy: length mismatch " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  axpy(a, x.data(), y.data(), y.size());
}

void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

Vec softmax(const Vec& z) {
  if (z.empty()) throw ContractError("softmax: empty input");
  const double m = *std::max_element(z.begin(), z.end());
  Vec out(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

double squared_l2(const Vec& a, const Vec& b) {
  if (a.size() != b.size())
    throw ContractError("squared_l2: length mismatch " + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

std::string shape_str(const Tensor& t) { return std::to_string(t.rows) + "x" + std::to_string(t.cols); }

}  // namespace bildrl
