#pragma once

// Level-N truncation of the Bhat-Skeide construction. The modules E_n are
// the tensor powers of the GNS module of T with left-attached bracketing
// E_n = E_1 (x)_M E_{n-1}; the carriers K_n = E_n (x)_M H glue along the
// isometries that prepend the cyclic vector, and
//
//   j_n(a) = w_{N,n} rho_{K_n}(a) w_{N,n}^*,
//
// which realizes theta^n(j_0): the compression identity
// w_{n,m}^* rho_{K_n}(a) w_{n,m} = rho_{K_m}(T^{n-m}(a)) is exactly the GNS
// reproduction of T^{n-m} and closes the dilation identities at finite level.

#include "mindil/hilbert_module.hpp"

namespace mindil {

struct BsDiagnosticsReport {
  int algebra_span_dim = 0;        // dim of the *-algebra generated by all j_n(M)
  bool corner_equals_j0 = false;   // p N_alg p = j_0(M)
  double central_support_defect = -1.0;  // ||c(p) - 1||; observed only, not asserted
  bool skipped = false;            // dimension cap hit
};

class BsDilation {
 public:
  BsDilation(AlgebraPtr m, UcpMap t, WStarBimodule h, int level, int dim_cap = 4096)
      : algebra_(std::move(m)), t_(std::move(t)), h_(std::move(h)), level_(level) {
    if (level_ < 1) throw ValidationError("bs_build: level must be >= 1");
    if (!h_.left) throw ValidationError("bs_build: H needs a left M-action");
    l2_ = std::make_shared<StandardForm>(standard_form(algebra_));
    h_left_solver_ = SpanSolver(h_.left->act);

    GnsPair gns = gns_bimodule(algebra_, t_, l2_, dim_cap);
    modules_.push_back(trivial_module(algebra_, l2_));
    cyclic_.push_back((*l2_->space.left)(algebra_->identity()));
    modules_.push_back(gns.module);
    cyclic_.push_back(gns.cyclic);
    for (int n = 2; n <= level_; ++n) {
      tensors_.push_back(module_tensor(gns.module, modules_.back(), dim_cap));
      const ModuleTensor& mt = tensors_.back();
      cyclic_.push_back(tensor_element(mt, gns.module, gns.cyclic, cyclic_.back()));
      modules_.push_back(mt.module);
    }

    // K_0 = H; K_n = E_n (x)_M H.
    carriers_.push_back(h_);
    for (int n = 1; n <= level_; ++n) {
      embeddings_.push_back(vn_module_embedding(modules_[n], h_, dim_cap));
      carriers_.push_back(embeddings_.back().space);
    }

    // w-steps K_n -> K_{n+1}: prepend the cyclic vector on the module leg.
    w_step_.push_back(l_op(embeddings_[0], modules_[1], cyclic_[1]));
    for (int n = 1; n < level_; ++n) w_step_.push_back(build_w_step(n));
    w_from_.assign(level_ + 1, Mat());
    w_from_[level_] = Mat::Identity(carriers_[level_].dim, carriers_[level_].dim);
    for (int n = level_ - 1; n >= 0; --n) w_from_[n] = w_from_[n + 1] * w_step_[n];
    for (int n = 0; n <= level_; ++n) {
      const Mat& w = w_from_[n];
      if ((w.adjoint() * w - Mat::Identity(carriers_[n].dim, carriers_[n].dim)).norm() > 1e-8)
        throw NumericalError("bs_build: w_{N,n} failed the isometry check");
    }
    iota_ = w_from_[0];
    p_ = iota_ * iota_.adjoint();
  }

  const AlgebraPtr& algebra() const { return algebra_; }
  const UcpMap& channel() const { return t_; }
  int level() const { return level_; }
  const WStarBimodule& h() const { return h_; }
  const std::vector<HilbertBimodule>& modules() const { return modules_; }
  const Mat& cyclic(int n) const { return cyclic_.at(n); }
  const WStarBimodule& carrier(int n) const { return carriers_.at(n); }
  const Mat& iota() const { return iota_; }
  const Mat& p() const { return p_; }
  Mat w(int n, int m) const {
    // w_{n,m}: K_m -> K_n for m <= n <= N
    if (m > n || n > level_) throw ValidationError("bs: bad embedding indices");
    Mat out = Mat::Identity(carriers_[m].dim, carriers_[m].dim);
    for (int k = m; k < n; ++k) out = w_step_[k] * out;
    return out;
  }

  // j_n(a) on K_N.
  Mat j(int n, const Mat& a) const {
    if (n < 0 || n > level_) throw ValidationError("bs_j: level index out of range");
    const Mat rho = n == 0 ? (*h_.left)(a) : (*carriers_[n].left)(a);
    return w_from_[n] * rho * w_from_[n].adjoint();
  }

  // iota^* (prod_i j_{n_i}(a_i)) iota, re-expressed in M.
  Mat moment(const std::vector<std::pair<int, Mat>>& word, double tol = 1e-7) const {
    Mat prod = Mat::Identity(carriers_[level_].dim, carriers_[level_].dim);
    for (const auto& [n, a] : word) prod = prod * j(n, a);
    Mat op = iota_.adjoint() * prod * iota_;
    double res = 0.0;
    Vec c = h_left_solver_.coords(op, &res);
    if (res > tol * std::max(1.0, op.norm()))
      throw NumericalError("bs_moment: compression is not in pi(M), residual " +
                           std::to_string(res));
    return algebra_->from_coords(c);
  }

  BsDiagnosticsReport diagnostics(int span_cap = 2048) const {
    BsDiagnosticsReport rep;
    std::vector<Mat> gens;
    for (int n = 0; n <= level_; ++n)
      for (const Mat& b : algebra_->basis()) gens.push_back(j(n, b));
    std::vector<Mat> alg;
    try {
      alg = generated_star_algebra(gens, carriers_[level_].dim, span_cap);
    } catch (const SizeError&) {
      rep.skipped = true;
      return rep;
    }
    rep.algebra_span_dim = static_cast<int>(alg.size());
    std::vector<Mat> corner, j0m;
    for (const Mat& x : alg) corner.push_back(p_ * x * p_);
    for (const Mat& b : algebra_->basis()) j0m.push_back(j(0, b));
    rep.corner_equals_j0 = span_equal(corner, j0m);
    OperatorAlgebraBasis n_alg(carriers_[level_].dim, alg);
    Mat c = central_support(p_, n_alg);
    rep.central_support_defect =
        (c - Mat::Identity(carriers_[level_].dim, carriers_[level_].dim)).norm();
    return rep;
  }

 private:
  Mat build_w_step(int n) const {
    // K_n -> K_{n+1} on generators: (y_j, h_alpha) -> class(xi_1 (x) y_j (x) h_alpha),
    // with xi_1 (x) y_j formed inside E_{n+1} = E_1 (x)_M E_n.
    const HilbertBimodule& en = modules_[n];
    const HilbertBimodule& en1 = modules_[n + 1];
    const ModuleTensor& mt = tensors_[n - 1];
    const VnEmbedding& dst = embeddings_[n];     // K_{n+1} = E_{n+1} (x) H
    const VnEmbedding& src = embeddings_[n - 1]; // K_n = E_n (x) H
    const int hd = h_.dim;
    Mat cols(dst.space.dim, en.module_dim() * hd);
    for (int jdx = 0; jdx < en.module_dim(); ++jdx) {
      Mat prep = tensor_element(mt, modules_[1], cyclic_[1], en.module_basis[jdx]);
      Mat lop = l_op(dst, en1, prep);
      cols.middleCols(jdx * hd, hd) = lop;
    }
    Mat w = cols * src.q.coords_pinv;
    if ((w * src.q.coords - cols).norm() > 1e-7 * std::max(1.0, cols.norm()))
      throw NumericalError("bs_build: w step does not descend to the quotient");
    return w;
  }

  AlgebraPtr algebra_;
  UcpMap t_;
  WStarBimodule h_;
  int level_;
  std::shared_ptr<StandardForm> l2_;
  SpanSolver h_left_solver_;
  std::vector<HilbertBimodule> modules_;  // E_0..E_N
  std::vector<ModuleTensor> tensors_;     // E_{n+1} = E_1 (x) E_n, n >= 1
  std::vector<Mat> cyclic_;               // xi_0..xi_N
  std::vector<WStarBimodule> carriers_;   // K_0..K_N
  std::vector<VnEmbedding> embeddings_;   // K_1..K_N
  std::vector<Mat> w_step_;               // K_n -> K_{n+1}
  std::vector<Mat> w_from_;               // w_{N,n}
  Mat iota_, p_;
};

inline BsDilation bs_build(const AlgebraPtr& m, const UcpMap& t, const WStarBimodule& h, int level,
                           int dim_cap = 4096) {
  return BsDilation(m, t, h, level, dim_cap);
}

inline Mat bs_j(const BsDilation& d, int n, const Mat& a) { return d.j(n, a); }

inline Mat bs_moment(const BsDilation& d, const std::vector<std::pair<int, Mat>>& word) {
  return d.moment(word);
}

inline BsDiagnosticsReport bs_diagnostics(const BsDilation& d, int span_cap = 2048) {
  return d.diagnostics(span_cap);
}

}  // namespace mindil
