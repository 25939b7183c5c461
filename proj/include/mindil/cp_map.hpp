#pragma once

// Normal unital completely positive maps on a multimatrix algebra, given by
// Kraus data with the convention T(x) = sum_i k_i^* x k_i and sum k_i^* k_i = 1.
// Validation goes through the Choi matrices of the block components of the
// induced map M -> M, so non-CP linear maps (e.g. the transpose) can be fed
// to the same validator for negative testing.

#include "mindil/algebra.hpp"

namespace mindil {

struct ChoiReport {
  bool is_unital = false;
  bool is_cp = false;
  bool is_closed = false;          // maps span(M) into span(M)
  double unitality_residual = 0.0;
  double cp_min_eigenvalue = 0.0;  // most negative block-Choi eigenvalue (>= 0 when CP)
  double closure_residual = 0.0;

  bool passes() const { return is_unital && is_cp && is_closed; }
};

// A linear map on M recorded by its values on the matrix-unit basis. This is
// the common denominator of Kraus channels and hand-authored maps.
struct LinearBlockMap {
  AlgebraPtr algebra;
  std::vector<Mat> images;  // one per basis element of M

  Mat apply(const Mat& x) const {
    Vec c = algebra->coords(x);
    Mat out = Mat::Zero(algebra->ambient_dim(), algebra->ambient_dim());
    for (int k = 0; k < algebra->lin_dim(); ++k) out += c(k) * images[k];
    return out;
  }
};

inline LinearBlockMap transpose_map(const AlgebraPtr& m) {
  LinearBlockMap t{m, {}};
  for (const Mat& b : m->basis()) t.images.push_back(b.transpose());
  return t;
}

// Block-component Choi test: T on ⊕_k Mat(n_k) is CP iff every component
// map T_lk : Mat(n_k) -> Mat(n_l) has a PSD Choi matrix.
inline ChoiReport choi_validate(const LinearBlockMap& t, double tol = 1e-10) {
  const MultiMatrixAlgebra& m = *t.algebra;
  ChoiReport rep;
  Mat one = m.identity();
  rep.unitality_residual = (t.apply(one) - one).norm();
  rep.is_unital = rep.unitality_residual < tol * std::max(1.0, one.norm());

  rep.closure_residual = 0.0;
  for (const Mat& img : t.images)
    rep.closure_residual = std::max(rep.closure_residual, m.membership_residual(img));
  rep.is_closed = rep.closure_residual < tol;

  // Per-(k,l) Choi blocks C[(i,a),(j,b)] = (T_lk(e^k_ij))_{ab}.
  double min_eig = 0.0;
  const auto& blocks = m.blocks();
  std::vector<int> offsets(blocks.size(), 0);
  for (size_t k = 1; k < blocks.size(); ++k) offsets[k] = offsets[k - 1] + blocks[k - 1];
  for (size_t k = 0; k < blocks.size(); ++k) {
    const int nk = blocks[k];
    for (size_t l = 0; l < blocks.size(); ++l) {
      const int nl = blocks[l];
      Mat choi = Mat::Zero(nk * nl, nk * nl);
      for (int i = 0; i < nk; ++i)
        for (int j = 0; j < nk; ++j) {
          const int unit = m.block_units()[k].unit_index[i * nk + j];
          const Mat& img = m.project(t.images[unit]);
          for (int a = 0; a < nl; ++a)
            for (int b = 0; b < nl; ++b)
              choi(i * nl + a, j * nl + b) = img(offsets[l] + a, offsets[l] + b);
        }
      Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (choi + choi.adjoint()));
      if (es.eigenvalues().size()) min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    }
  }
  rep.cp_min_eigenvalue = min_eig;
  rep.is_cp = min_eig > -tol;
  return rep;
}

class UcpMap {
 public:
  UcpMap(AlgebraPtr algebra, std::vector<Mat> kraus, double tol = 1e-9)
      : algebra_(std::move(algebra)), kraus_(std::move(kraus)) {
    if (kraus_.empty()) throw ValidationError("ucp: empty Kraus family");
    const int d = algebra_->ambient_dim();
    Mat s = Mat::Zero(d, d);
    for (const Mat& k : kraus_) {
      if (k.rows() != d || k.cols() != d) throw ValidationError("ucp: Kraus size mismatch");
      s += k.adjoint() * k;
    }
    if ((s - Mat::Identity(d, d)).norm() > tol)
      throw ValidationError("ucp: not unital, ||sum k*k - 1|| = " +
                            std::to_string((s - Mat::Identity(d, d)).norm()));
    for (const Mat& b : algebra_->basis()) {
      const Mat img = apply_raw(b);
      if (algebra_->membership_residual(img) > tol * std::max(1.0, img.norm()))
        throw ValidationError("ucp: image leaves span(M) (closure violation)");
    }
  }

  const AlgebraPtr& algebra() const { return algebra_; }
  const std::vector<Mat>& kraus() const { return kraus_; }

  Mat apply_raw(const Mat& x) const {
    Mat out = Mat::Zero(x.rows(), x.cols());
    for (const Mat& k : kraus_) out += k.adjoint() * x * k;
    return out;
  }

  // T(x), re-validated to lie in M.
  Mat apply(const Mat& x, double tol = 1e-9) const {
    Mat out = apply_raw(x);
    if (algebra_->membership_residual(out) > tol * std::max(1.0, out.norm()))
      throw ValidationError("ucp apply: result leaves span(M)");
    return algebra_->project(out);
  }

  Mat apply_n(const Mat& x, int n) const {
    Mat out = algebra_->project(x);
    for (int i = 0; i < n; ++i) out = apply(out);
    return out;
  }

  LinearBlockMap as_linear_map() const {
    LinearBlockMap t{algebra_, {}};
    for (const Mat& b : algebra_->basis()) t.images.push_back(apply_raw(b));
    return t;
  }

 private:
  AlgebraPtr algebra_;
  std::vector<Mat> kraus_;
};

inline ChoiReport choi_validate(const UcpMap& t, double tol = 1e-10) {
  return choi_validate(t.as_linear_map(), tol);
}

inline Mat apply(const UcpMap& t, const Mat& x) { return t.apply(x); }

inline AlgebraElement apply(const UcpMap& t, const AlgebraElement& x) {
  return AlgebraElement(t.algebra(), t.apply(x.data));
}

// T^n by Kraus products; n = 0 is the identity channel.
inline UcpMap power(const UcpMap& t, int n, size_t kraus_cap = 100000) {
  if (n < 0) throw ValidationError("power: n must be >= 0");
  const int d = t.algebra()->ambient_dim();
  std::vector<Mat> fam{Mat::Identity(d, d)};
  for (int step = 0; step < n; ++step) {
    if (fam.size() * t.kraus().size() > kraus_cap)
      throw SizeError("power: Kraus family exceeds cap");
    std::vector<Mat> next;
    next.reserve(fam.size() * t.kraus().size());
    for (const Mat& a : fam)
      for (const Mat& k : t.kraus()) next.push_back(a * k);
    fam = std::move(next);
  }
  return UcpMap(t.algebra(), std::move(fam));
}

// Kraus family of the diagonal-algebra channel induced by a row-stochastic
// matrix: T(diag x)_i = sum_j P_ij x_j via k_ij = sqrt(P_ij) e_ji.
inline std::vector<Mat> stochastic_kraus(const Mat& p) {
  const int d = static_cast<int>(p.rows());
  if (p.cols() != d) throw ValidationError("stochastic: matrix must be square");
  std::vector<Mat> kraus;
  for (int i = 0; i < d; ++i) {
    double row = 0.0;
    for (int j = 0; j < d; ++j) {
      if (p(i, j).imag() != 0.0) throw ValidationError("stochastic: entries must be real");
      const double v = p(i, j).real();
      if (v < 0.0) throw ValidationError("stochastic: negative entry (not CP)");
      row += v;
      if (v > 0.0) {
        Mat k = Mat::Zero(d, d);
        k(j, i) = std::sqrt(v);
        kraus.push_back(std::move(k));
      }
    }
    if (std::abs(row - 1.0) > 1e-9) throw ValidationError("stochastic: row sums must be 1");
  }
  return kraus;
}

inline UcpMap stochastic_ucp(const AlgebraPtr& m, const Mat& p) {
  if (static_cast<int>(m->blocks().size()) != m->ambient_dim())
    throw ValidationError("stochastic: algebra must be commutative (all blocks size 1)");
  return UcpMap(m, stochastic_kraus(p));
}

// Random UCP map: r complex Gaussian matrices g_i normalized by S^{-1/2},
// S = sum g_i^* g_i. Deterministic in the seed. Restricted to single-block
// algebras; commutative algebras get a random row-stochastic matrix instead.
inline UcpMap random_ucp(const AlgebraPtr& m, int kraus_count, uint64_t seed) {
  if (kraus_count < 1) throw ValidationError("random_ucp: kraus_count must be >= 1");
  Rng rng(seed);
  const int d = m->ambient_dim();
  if (static_cast<int>(m->blocks().size()) == d) {
    // Commutative: random strictly positive row-stochastic matrix.
    Mat p(d, d);
    for (int i = 0; i < d; ++i) {
      double row = 0.0;
      for (int j = 0; j < d; ++j) {
        const double v = 0.05 + rng.uniform();
        p(i, j) = v;
        row += v;
      }
      for (int j = 0; j < d; ++j) p(i, j) /= row;
    }
    return stochastic_ucp(m, p);
  }
  if (m->blocks().size() != 1)
    throw ValidationError("random_ucp: only single-block or commutative algebras supported");
  for (int attempt = 0; attempt < 5; ++attempt) {
    std::vector<Mat> g;
    g.reserve(kraus_count);
    for (int i = 0; i < kraus_count; ++i) g.push_back(rng.gaussian_matrix(d, d));
    Mat s = Mat::Zero(d, d);
    for (const Mat& x : g) s += x.adjoint() * x;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s + s.adjoint()));
    if (es.eigenvalues().minCoeff() < 1e-12 * es.eigenvalues().maxCoeff()) continue;
    Mat s_inv_sqrt = es.eigenvectors() *
                     es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal().toDenseMatrix() *
                     es.eigenvectors().adjoint();
    std::vector<Mat> kraus;
    kraus.reserve(kraus_count);
    for (const Mat& x : g) kraus.push_back(x * s_inv_sqrt);
    return UcpMap(m, std::move(kraus));
  }
  throw NumericalError("random_ucp: normalization failed after 5 attempts");
}

}  // namespace mindil
