#include "wmp/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wmp/errors.hpp"
#include "wmp/rng.hpp"

namespace wmp {

Mat mat_mul(const Mat& A, const Mat& B) {
  if (A.cols != B.rows) throw DimensionMismatch("mat_mul: inner dimensions differ");
  Mat C(A.rows, B.cols);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t l = 0; l < A.cols; ++l) {
      const double v = A(i, l);
      if (v == 0.0) continue;
      for (std::size_t j = 0; j < B.cols; ++j) C(i, j) += v * B(l, j);
    }
  return C;
}

Vec mat_vec(const Mat& A, const Vec& x) {
  if (A.cols != x.size()) throw DimensionMismatch("mat_vec: size mismatch");
  Vec y(A.rows, 0.0);
  for (std::size_t i = 0; i < A.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < A.cols; ++j) s += A(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Mat transpose(const Mat& A) {
  Mat T(A.cols, A.rows);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < A.cols; ++j) T(j, i) = A(i, j);
  return T;
}

double max_asymmetry(const Mat& A) {
  double worst = 0.0;
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = i + 1; j < A.cols; ++j)
      worst = std::max(worst, std::fabs(A(i, j) - A(j, i)));
  return worst;
}

bool is_symmetric(const Mat& A, double tol) {
  return A.rows == A.cols && max_asymmetry(A) <= tol;
}

double dot(const Vec& x, const Vec& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

EigenSym jacobi_sym(const Mat& A, int max_sweeps) {
  if (A.rows != A.cols) throw DimensionMismatch("jacobi_sym: matrix not square");
  const std::size_t n = A.rows;
  Mat S = A;
  Mat V = Mat::identity(n);

  double scale = 0.0;
  for (double v : S.a) scale = std::max(scale, std::fabs(v));
  const double stop = std::max(scale, 1.0) * 1e-15;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::fabs(S(p, q)));
    if (off <= stop) break;
    if (sweep == max_sweeps - 1) throw NoConvergence("jacobi_sym: sweep cap reached");

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = S(p, q);
        if (std::fabs(apq) <= stop * 1e-2) continue;
        const double tau = (S(q, q) - S(p, p)) / (2.0 * apq);
        const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                      : -1.0 / (-tau + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          const double sip = S(i, p), siq = S(i, q);
          S(i, p) = c * sip - s * siq;
          S(i, q) = s * sip + c * siq;
        }
        for (std::size_t j = 0; j < n; ++j) {
          const double spj = S(p, j), sqj = S(q, j);
          S(p, j) = c * spj - s * sqj;
          S(q, j) = s * spj + c * sqj;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = V(i, p), viq = V(i, q);
          V(i, p) = c * vip - s * viq;
          V(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return S(i, i) > S(j, j); });

  EigenSym out;
  out.values.resize(n);
  out.vectors = Mat(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = S(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = V(i, order[j]);
  }
  return out;
}

std::pair<double, Vec> power_iteration(const Mat& A, const std::vector<Vec>& deflate,
                                       double tol, long max_iter) {
  if (A.rows != A.cols) throw DimensionMismatch("power_iteration: matrix not square");
  const std::size_t n = A.rows;

  Rng rng(0x9f2cab1dULL + n);
  Vec x(n);
  for (auto& v : x) v = rng.next_double() - 0.5;

  auto project = [&](Vec& v) {
    for (const Vec& d : deflate) {
      const double c = dot(v, d);
      for (std::size_t i = 0; i < n; ++i) v[i] -= c * d[i];
    }
  };

  project(x);
  double nx = norm2(x);
  if (nx == 0.0) { x[0] = 1.0; project(x); nx = norm2(x); }
  for (auto& v : x) v /= nx;

  for (long it = 0; it < max_iter; ++it) {
    Vec y = mat_vec(A, x);
    project(y);
    const double rho = dot(x, y);
    double resid = 0.0;
    for (std::size_t i = 0; i < n; ++i) resid = std::max(resid, std::fabs(y[i] - rho * x[i]));
    if (resid <= tol) return {rho, x};
    const double ny = norm2(y);
    if (ny <= 1e-300) return {0.0, x};  // x already in the (deflated) kernel
    for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / ny;
  }
  throw NoConvergence("power_iteration: iteration cap reached");
}

std::array<double, 2> eigvals_2x2(double a, double b, double c, double d) {
  const double tr = a + d;
  const double det = a * d - b * c;
  const double disc = tr * tr - 4.0 * det;
  if (disc < 0.0) throw ComplexSpectrum("eigvals_2x2: complex eigenvalue pair");
  const double s = std::sqrt(disc);
  double l1 = (tr + s) / 2.0, l2 = (tr - s) / 2.0;
  if (std::fabs(l2) > std::fabs(l1)) std::swap(l1, l2);
  return {l1, l2};
}

Vec solve_linear(Mat A, Vec b) {
  if (A.rows != A.cols || A.rows != b.size())
    throw DimensionMismatch("solve_linear: size mismatch");
  const std::size_t n = A.rows;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(A(r, col)) > std::fabs(A(piv, col))) piv = r;
    if (std::fabs(A(piv, col)) < 1e-300) throw Error("solve_linear: singular matrix");
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(A(piv, j), A(col, j));
      std::swap(b[piv], b[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = A(r, col) / A(col, col);
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) A(r, j) -= f * A(col, j);
      b[r] -= f * b[col];
    }
  }
  Vec x(n);
  for (std::size_t ri = n; ri-- > 0;) {
    double s = b[ri];
    for (std::size_t j = ri + 1; j < n; ++j) s -= A(ri, j) * x[j];
    x[ri] = s / A(ri, ri);
  }
  return x;
}

Vec stationary_distribution(const Mat& K) {
  const std::size_t n = K.rows;
  // (K^T - I) pi = 0 with the last equation replaced by sum(pi) = 1
  Mat A(n, n);
  Vec b(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) A(i, j) = K(j, i) - (i == j ? 1.0 : 0.0);
  }
  for (std::size_t j = 0; j < n; ++j) A(n - 1, j) = 1.0;
  b[n - 1] = 1.0;
  Vec pi = solve_linear(std::move(A), std::move(b));
  for (auto& v : pi) v = std::max(v, 0.0);
  double s = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (auto& v : pi) v /= s;
  return pi;
}

}  // namespace wmp
