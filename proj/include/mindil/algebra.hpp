#pragma once

// Finite-dimensional von Neumann algebras: direct sums of full matrix
// blocks acting block-diagonally on C^d, their elements, commutants and
// central supports. Commutants of arbitrary matrix families are kept as
// spanning bases; block coordinates are never reconstructed for them.

#include <memory>
#include <numeric>
#include <optional>
#include <sstream>

#include "mindil/linalg.hpp"

namespace mindil {

// Matrix-unit bookkeeping for one block: the flat basis indices of e_ij.
struct BlockUnits {
  int size = 0;                    // n_k
  std::vector<int> unit_index;     // row-major, length n_k^2
};

class MultiMatrixAlgebra {
 public:
  explicit MultiMatrixAlgebra(std::vector<int> blocks) : blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw ValidationError("algebra: block list must be non-empty");
    for (int n : blocks_)
      if (n < 1) throw ValidationError("algebra: block sizes must be >= 1");
    ambient_dim_ = std::accumulate(blocks_.begin(), blocks_.end(), 0);
    int offset = 0;
    for (int n : blocks_) {
      BlockUnits bu;
      bu.size = n;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          Mat e = Mat::Zero(ambient_dim_, ambient_dim_);
          e(offset + i, offset + j) = 1.0;
          bu.unit_index.push_back(static_cast<int>(basis_.size()));
          basis_.push_back(std::move(e));
        }
      units_.push_back(std::move(bu));
      offset += n;
    }
  }

  const std::vector<int>& blocks() const { return blocks_; }
  int ambient_dim() const { return ambient_dim_; }
  int lin_dim() const { return static_cast<int>(basis_.size()); }
  const std::vector<Mat>& basis() const { return basis_; }
  const std::vector<BlockUnits>& block_units() const { return units_; }
  Mat identity() const { return Mat::Identity(ambient_dim_, ambient_dim_); }

  // Coefficients of a block-diagonal matrix over the matrix-unit basis.
  Vec coords(const Mat& a) const {
    Vec c(lin_dim());
    int k = 0;
    int offset = 0;
    for (int n : blocks_) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) c(k++) = a(offset + i, offset + j);
      offset += n;
    }
    return c;
  }

  Mat from_coords(const Vec& c) const {
    Mat a = Mat::Zero(ambient_dim_, ambient_dim_);
    int k = 0;
    int offset = 0;
    for (int n : blocks_) {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(offset + i, offset + j) = c(k++);
      offset += n;
    }
    return a;
  }

  // Projection of an ambient matrix onto the block diagonal.
  Mat project(const Mat& a) const { return from_coords(coords(a)); }

  // Distance of a from span(M); zero exactly for members.
  double membership_residual(const Mat& a) const { return (a - project(a)).norm(); }

  cx normalized_trace(const Mat& a) const { return a.trace() / static_cast<double>(ambient_dim_); }

 private:
  std::vector<int> blocks_;
  int ambient_dim_ = 0;
  std::vector<Mat> basis_;
  std::vector<BlockUnits> units_;
};

using AlgebraPtr = std::shared_ptr<const MultiMatrixAlgebra>;

inline AlgebraPtr make_algebra(const std::vector<int>& blocks) {
  return std::make_shared<const MultiMatrixAlgebra>(blocks);
}

struct AlgebraElement {
  AlgebraPtr algebra;
  Mat data;

  AlgebraElement(AlgebraPtr alg, Mat d, double tol = 1e-10) : algebra(std::move(alg)), data(std::move(d)) {
    if (data.rows() != algebra->ambient_dim() || data.cols() != algebra->ambient_dim())
      throw ValidationError("algebra element: wrong ambient dimension");
    if (algebra->membership_residual(data) > tol * std::max(1.0, data.norm()))
      throw ValidationError("algebra element: off-block entries present");
    data = algebra->project(data);
  }

  AlgebraElement adjoint() const { return AlgebraElement(algebra, data.adjoint()); }
  AlgebraElement operator*(const AlgebraElement& o) const { return AlgebraElement(algebra, data * o.data); }
  AlgebraElement operator+(const AlgebraElement& o) const { return AlgebraElement(algebra, data + o.data); }
};

inline cx normalized_trace(const AlgebraElement& a) { return a.algebra->normalized_trace(a.data); }

// A *-closed unital operator algebra presented by a linearly independent
// spanning family of matrices on its carrier. This is how commutants and
// the Muhly-Solel E(0) enter; no Artin-Wedderburn coordinates are kept,
// but matrix units may be attached when they are known by construction.
struct OperatorAlgebraBasis {
  int carrier_dim = 0;
  std::vector<Mat> basis;
  std::vector<BlockUnits> units;  // optional; empty when unknown

  SpanSolver solver;

  OperatorAlgebraBasis() = default;
  OperatorAlgebraBasis(int dim, std::vector<Mat> b, std::vector<BlockUnits> u = {})
      : carrier_dim(dim), basis(std::move(b)), units(std::move(u)), solver(basis) {}

  int lin_dim() const { return static_cast<int>(basis.size()); }

  Vec coords(const Mat& x, double* residual = nullptr) const { return solver.coords(x, residual); }

  Mat from_coords(const Vec& c) const {
    Mat x = Mat::Zero(carrier_dim, carrier_dim);
    for (int k = 0; k < static_cast<int>(basis.size()); ++k) x += c(k) * basis[k];
    return x;
  }

  double membership_residual(const Mat& x) const {
    double r = 0.0;
    coords(x, &r);
    return r;
  }

  cx normalized_trace(const Mat& x) const { return x.trace() / static_cast<double>(carrier_dim); }

  // Span closure diagnostics (adjoints, products, identity).
  double star_closure_residual() const {
    double r = 0.0;
    for (const Mat& b : basis) r = std::max(r, membership_residual(b.adjoint()));
    return r;
  }
  double product_closure_residual() const {
    double r = 0.0;
    for (const Mat& a : basis)
      for (const Mat& b : basis) r = std::max(r, membership_residual(a * b));
    return r;
  }
  double identity_residual() const {
    return membership_residual(Mat::Identity(carrier_dim, carrier_dim));
  }
};

inline OperatorAlgebraBasis full_matrix_algebra_basis(int dim) {
  std::vector<Mat> b;
  std::vector<BlockUnits> u(1);
  u[0].size = dim;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      Mat e = Mat::Zero(dim, dim);
      e(i, j) = 1.0;
      u[0].unit_index.push_back(static_cast<int>(b.size()));
      b.push_back(std::move(e));
    }
  return OperatorAlgebraBasis(dim, std::move(b), std::move(u));
}

// {x : xs = sx for all s in S}, as the null space of the stacked commutator
// map. Row-major vec: vec(xs - sx) = (kron(I, s^T) - kron(s, I)) vec(x).
inline OperatorAlgebraBasis commutant(const std::vector<Mat>& s, int carrier_dim) {
  if (s.empty()) return full_matrix_algebra_basis(carrier_dim);
  const int n = carrier_dim;
  Mat stacked(static_cast<int>(s.size()) * n * n, n * n);
  const Mat id = Mat::Identity(n, n);
  double scale = 0.0;
  for (size_t k = 0; k < s.size(); ++k) {
    if (s[k].rows() != n || s[k].cols() != n)
      throw ValidationError("commutant: matrix of wrong size");
    scale = std::max(scale, s[k].norm());
    stacked.middleRows(static_cast<int>(k) * n * n, n * n) =
        kron(id, s[k].transpose()) - kron(s[k], id);
  }
  Mat ker = null_space(stacked, kRankRelTol, scale);
  std::vector<Mat> basis;
  basis.reserve(ker.cols());
  for (int c = 0; c < ker.cols(); ++c) basis.push_back(unvec_rm(ker.col(c), n, n));
  return OperatorAlgebraBasis(carrier_dim, std::move(basis));
}

// Unital *-algebra generated by a family, as an orthonormal span. Grows the
// span by products until stable or the cap is hit.
inline std::vector<Mat> generated_star_algebra(const std::vector<Mat>& gens, int carrier_dim,
                                               int span_cap = 4096) {
  std::vector<Mat> fam;
  fam.push_back(Mat::Identity(carrier_dim, carrier_dim));
  for (const Mat& g : gens) {
    fam.push_back(g);
    fam.push_back(g.adjoint());
  }
  std::vector<Mat> span = span_reduce(fam);
  for (;;) {
    std::vector<Mat> next = span;
    for (const Mat& a : span)
      for (const Mat& g : gens) {
        next.push_back(a * g);
        next.push_back(a * g.adjoint());
      }
    std::vector<Mat> reduced = span_reduce(next);
    if (static_cast<int>(reduced.size()) > span_cap)
      throw SizeError("generated_star_algebra: span exceeds cap " + std::to_string(span_cap));
    if (reduced.size() == span.size()) return reduced;
    span = std::move(reduced);
  }
}

// Smallest central projection of N dominating p: the range projection of
// span{ n p v : n in N, v in carrier }.
inline Mat central_support(const Mat& p, const OperatorAlgebraBasis& n_alg, double tol = 1e-8) {
  const int dim = n_alg.carrier_dim;
  if (p.rows() != dim || p.cols() != dim) throw ValidationError("central_support: size mismatch");
  if ((p * p - p).norm() > tol || (p.adjoint() - p).norm() > tol)
    throw ValidationError("central_support: p is not a projection");
  if (n_alg.membership_residual(p) > tol * std::max(1.0, p.norm()))
    throw ValidationError("central_support: p not in span(N)");
  if (p.norm() < tol) return Mat::Zero(dim, dim);
  Mat cols(dim, n_alg.lin_dim() * dim);
  for (int k = 0; k < n_alg.lin_dim(); ++k) cols.middleCols(k * dim, dim) = n_alg.basis[k] * p;
  Mat u = range_basis(cols);
  return u * u.adjoint();
}

// True iff two operator spans coincide within tol (mutual projection
// residuals against orthonormalized stacks).
inline bool span_equal(const std::vector<Mat>& s1, const std::vector<Mat>& s2, double tol = 1e-8) {
  if (s1.empty() && s2.empty()) return true;
  if (s1.empty() || s2.empty()) return false;
  std::vector<Mat> b1 = span_reduce(s1);
  std::vector<Mat> b2 = span_reduce(s2);
  if (b1.size() != b2.size()) return false;
  SpanSolver sol1(b1), sol2(b2);
  for (const Mat& x : b2) {
    double r = 0.0;
    sol1.coords(x, &r);
    if (r > tol * std::max(1.0, x.norm())) return false;
  }
  for (const Mat& x : b1) {
    double r = 0.0;
    sol2.coords(x, &r);
    if (r > tol * std::max(1.0, x.norm())) return false;
  }
  return true;
}

inline bool span_equal(const OperatorAlgebraBasis& s1, const OperatorAlgebraBasis& s2,
                       double tol = 1e-8) {
  if (s1.carrier_dim != s2.carrier_dim)
    throw ValidationError("span_equal: carrier dimension mismatch");
  return span_equal(s1.basis, s2.basis, tol);
}

}  // namespace mindil
