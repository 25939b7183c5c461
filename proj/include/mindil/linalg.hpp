#pragma once

// Dense complex linear algebra helpers shared by the whole library:
// rank decisions, null spaces, pseudo-inverses, polar parts and a
// deterministic Gaussian source. Everything is small and dense; Eigen
// does the heavy lifting.

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mindil {

using cx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

// Relative singular-value cutoff used for every rank / null-space decision.
inline constexpr double kRankRelTol = 1e-9;

// Library-wide default tolerances.
inline constexpr double kTolWitness = 1e-9;
inline constexpr double kTolCommute = 1e-10;
inline constexpr double kTolMoment = 1e-8;

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

class SizeError : public std::runtime_error {
 public:
  explicit SizeError(const std::string& what) : std::runtime_error(what) {}
};

inline Mat dagger(const Mat& a) { return a.adjoint(); }

inline double hs_inner_real(const Mat& a, const Mat& b) {
  return (a.adjoint() * b).trace().real();
}

inline cx hs_inner(const Mat& a, const Mat& b) { return (a.adjoint() * b).trace(); }

inline double op_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

inline Mat pinv(const Mat& a, double rel = kRankRelTol) {
  if (a.size() == 0) return Mat(a.cols(), a.rows());
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cut = rel * (s.size() ? s(0) : 0.0);
  RVec inv = RVec::Zero(s.size());
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > cut) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

inline int numeric_rank(const Mat& a, double rel = kRankRelTol) {
  if (a.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(a);
  const auto& s = svd.singularValues();
  const double cut = rel * (s.size() ? s(0) : 0.0);
  int r = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > cut) ++r;
  return r;
}

// Orthonormal basis of the column span of a.
inline Mat range_basis(const Mat& a, double rel = kRankRelTol) {
  if (a.size() == 0) return Mat(a.rows(), 0);
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU);
  const auto& s = svd.singularValues();
  const double cut = rel * (s.size() ? s(0) : 0.0);
  int r = 0;
  while (r < s.size() && s(r) > cut) ++r;
  return svd.matrixU().leftCols(r);
}

// Orthonormal basis of {x : a x = 0}, columns of the result. The cutoff is
// relative to max(top singular value, scale_floor); the floor keeps a stack
// that is numerically zero (everything is a solution) from being ranked by
// its own rounding noise.
inline Mat null_space(const Mat& a, double rel = kRankRelTol, double scale_floor = 0.0) {
  if (a.rows() == 0) return Mat::Identity(a.cols(), a.cols());
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cut = rel * std::max(s.size() ? s(0) : 0.0, scale_floor);
  int r = 0;
  while (r < s.size() && s(r) > cut) ++r;
  return svd.matrixV().rightCols(a.cols() - r);
}

// Unitary polar part u with a = u p, p >= 0 (square a of full rank).
inline Mat polar_unitary(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

// Row-major vectorization; matches the Kronecker conventions used in the
// Sylvester-system assembly: vec(A X B) = kron(A, B^T) vec(X).
inline Vec vec_rm(const Mat& x) {
  Vec v(x.size());
  int k = 0;
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) v(k++) = x(i, j);
  return v;
}

inline Mat unvec_rm(const Vec& v, int rows, int cols) {
  Mat x(rows, cols);
  int k = 0;
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) x(i, j) = v(k++);
  return x;
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Reduce a spanning family of equally sized matrices to an orthonormal
// basis of its span (Hilbert-Schmidt inner product).
inline std::vector<Mat> span_reduce(const std::vector<Mat>& fam, double rel = kRankRelTol) {
  if (fam.empty()) return {};
  const int rows = static_cast<int>(fam[0].rows());
  const int cols = static_cast<int>(fam[0].cols());
  Mat stack(rows * cols, static_cast<int>(fam.size()));
  for (size_t k = 0; k < fam.size(); ++k) stack.col(static_cast<int>(k)) = vec_rm(fam[k]);
  Mat u = range_basis(stack, rel);
  std::vector<Mat> out;
  out.reserve(u.cols());
  for (int k = 0; k < u.cols(); ++k) out.push_back(unvec_rm(u.col(k), rows, cols));
  return out;
}

// Least-squares coordinates of x over a family of matrices (columns of the
// stacked system). Returns (coords, residual).
struct SpanSolver {
  Mat stack;       // (rows*cols) x n
  Mat stack_pinv;  // n x (rows*cols)
  int rows = 0, cols = 0;

  SpanSolver() = default;
  explicit SpanSolver(const std::vector<Mat>& fam) {
    if (fam.empty()) return;
    rows = static_cast<int>(fam[0].rows());
    cols = static_cast<int>(fam[0].cols());
    stack.resize(rows * cols, static_cast<int>(fam.size()));
    for (size_t k = 0; k < fam.size(); ++k) stack.col(static_cast<int>(k)) = vec_rm(fam[k]);
    stack_pinv = pinv(stack);
  }

  Vec coords(const Mat& x, double* residual = nullptr) const {
    Vec v = vec_rm(x);
    Vec c = stack_pinv * v;
    if (residual) *residual = (stack * c - v).norm();
    return c;
  }
};

// Deterministic pseudo-random source (splitmix64 + Box-Muller). Used instead
// of <random> distributions so that seeded runs produce identical reports on
// every platform.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * M_PI * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
  }

  cx gaussian_cx() {
    const double re = gaussian();
    const double im = gaussian();
    return cx(re, im);
  }

  Mat gaussian_matrix(int rows, int cols) {
    Mat g(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) g(i, j) = gaussian_cx();
    return g;
  }

 private:
  uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace mindil
