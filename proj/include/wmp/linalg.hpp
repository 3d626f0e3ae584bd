#pragma once
#include <array>
#include <cstddef>
#include <utility>
#include <vector>

namespace wmp {

using Vec = std::vector<double>;

// Small dense row-major matrix; everything here targets k x k blocks with
// k in the single digits, so no clever storage is needed.
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

Mat mat_mul(const Mat& A, const Mat& B);
Vec mat_vec(const Mat& A, const Vec& x);
Mat transpose(const Mat& A);
double max_asymmetry(const Mat& A);
bool is_symmetric(const Mat& A, double tol);

// Eigenvalues/vectors of a symmetric matrix via cyclic Jacobi rotations.
// values[i] pairs with column i of vectors; sorted by descending value.
struct EigenSym {
  Vec values;
  Mat vectors;
};
EigenSym jacobi_sym(const Mat& A, int max_sweeps = 128);

// Power iteration on A with optional deflation against an orthonormal set.
// Stops when ||A x - rho x||_inf <= tol; throws NoConvergence past max_iter.
// Converges to the eigenvalue of largest magnitude in the deflated subspace
// (for symmetric A); a shift can be applied by the caller to avoid +/- ties.
std::pair<double, Vec> power_iteration(const Mat& A, const std::vector<Vec>& deflate,
                                       double tol = 1e-10, long max_iter = 100000);

// Roots of the characteristic polynomial of [[a,b],[c,d]], sorted by
// descending magnitude. Throws ComplexSpectrum on a negative discriminant.
std::array<double, 2> eigvals_2x2(double a, double b, double c, double d);

// Gaussian elimination with partial pivoting; A is consumed.
Vec solve_linear(Mat A, Vec b);

// Stationary distribution of a row-stochastic matrix (pi^T K = pi^T).
Vec stationary_distribution(const Mat& K);

double dot(const Vec& x, const Vec& y);
double norm2(const Vec& x);

}  // namespace wmp
