#pragma once

// Level-N truncation of the Muhly-Solel construction. The chain
// H_n = M (x)_T H_{n-1} carries the intertwiner spaces
// E(n) = Hom(_M H, _M H_n) with E(0) = M'; the spaces L_n = E(n) (x) H are
// glued by u_{n,m} = (U_{m,n-m} (x) 1)(id (x) P~_{n-m}^*), and the dilation
// endomorphism acts through the truncated unitary
// V~_1 : E(1) (x)_{M'} L_{N-1} -> L_N.
//
// Everything is a concrete matrix; P~ and the embeddings are numerical
// adjoints (the unit padding i_n is NOT left M-linear for a generic T, so
// none of these maps has a closed generator form).

#include "mindil/intertwiner.hpp"

namespace mindil {

class MsDilation {
 public:
  MsDilation(AlgebraPtr m, UcpMap t, WStarBimodule h, OperatorAlgebraBasis mprime, int level,
             int dim_cap = 4096)
      : algebra_(std::move(m)),
        t_(std::move(t)),
        h_(std::move(h)),
        mprime_(std::move(mprime)),
        level_(level) {
    if (level_ < 1) throw ValidationError("ms_build: level must be >= 1");
    if (!h_.left) throw ValidationError("ms_build: H needs a left M-action");
    h_left_solver_ = SpanSolver(h_.left->act);

    // H_1..H_N and the unit isometries.
    for (int n = 1; n <= level_; ++n) {
      const WStarBimodule& prev = space(n - 1);
      hn_.push_back(tensor_T(algebra_, t_, prev, dim_cap));
      istep_.push_back(unit_embedding(algebra_, hn_.back()));
    }
    i_n_.push_back(Mat::Identity(h_.dim, h_.dim));
    for (int n = 1; n <= level_; ++n) i_n_.push_back(istep_[n - 1] * i_n_[n - 1]);

    // E(0) = M'; E(n) by the Sylvester/twirl solver.
    en_.push_back(mprime_.basis);
    for (int n = 1; n <= level_; ++n) en_.push_back(intertwiners(h_, space(n), Side::Left));
    for (const auto& basis : en_) en_solver_.emplace_back(basis);

    // L_n quotients (L_0 = H).
    lq_.emplace_back();  // unused slot for n = 0
    for (int n = 1; n <= level_; ++n) {
      const auto& basis = en_[n];
      const int k = static_cast<int>(basis.size());
      const int hd = h_.dim;
      if (dim_cap > 0 && k * hd > dim_cap)
        throw SizeError("ms_build: L_" + std::to_string(n) + " generator count exceeds cap");
      Mat gram(k * hd, k * hd);
      for (int r = 0; r < k; ++r)
        for (int s = 0; s < k; ++s)
          gram.block(r * hd, s * hd, hd, hd) = basis[r].adjoint() * basis[s];
      lq_.push_back(quotient_completion(gram));
    }

    iota0_ = u(level_, 0);
    p_ = iota0_ * iota0_.adjoint();

    build_vtilde();
  }

  const AlgebraPtr& algebra() const { return algebra_; }
  const UcpMap& channel() const { return t_; }
  int level() const { return level_; }
  const WStarBimodule& h() const { return h_; }
  const OperatorAlgebraBasis& mprime() const { return mprime_; }

  // H_n and its dimension (n = 0 is H itself).
  const WStarBimodule& space(int n) const { return n == 0 ? h_ : hn_[n - 1].space; }
  const TensorTSpace& tensor_level(int n) const { return hn_.at(n - 1); }
  int hdim(int n) const { return space(n).dim; }
  int ldim(int n) const { return n == 0 ? h_.dim : lq_[n].rank; }
  const Mat& unit_isometry(int n) const { return i_n_.at(n); }
  const std::vector<Mat>& intertwiner_space(int n) const { return en_.at(n); }
  const QuotientMap& l_quotient(int n) const { return lq_.at(n); }
  const Mat& iota0() const { return iota0_; }
  const Mat& p() const { return p_; }
  const Mat& vtilde() const { return vtilde_; }
  const QuotientMap& vtilde_quotient() const { return vq_; }

  // 1^(x)m (x) X for X : H -> H_n, as a map H_m -> H_{n+m}.
  Mat lift(const Mat& x, int n, int m) const {
    Mat cur = x;
    const int lin = algebra_->lin_dim();
    for (int k = 1; k <= m; ++k) {
      Mat gen = kron(Mat::Identity(lin, lin), cur);
      cur = descend_between(gen, hn_[k - 1].q, hn_[n + k - 1].q);
    }
    return cur;
  }

  // U_{n,m}: E(n) (x)_{M'} E(m) -> E(n+m), on representatives.
  Mat identify(int n, int m, const Mat& xn, const Mat& xm) const {
    if (n + m > level_) throw ValidationError("ms_identify: n+m exceeds the truncation level");
    if (n == 0) return lift(xn, 0, m) * xm;  // x in M' acting under m slots
    if (m == 0) return xn * xm;              // right action of E(0) = M'
    return lift(xn, n, m) * xm;
  }

  // P_n(X) = i_n^* X (P_0 is the identity on E(0)).
  Mat p_map(int n, const Mat& x) const {
    if (n == 0) return x;
    return i_n_[n].adjoint() * x;
  }

  // P~_n : L_n -> H.
  Mat p_tilde(int n) const {
    if (n == 0) return Mat::Identity(h_.dim, h_.dim);
    const auto& basis = en_[n];
    const int hd = h_.dim;
    Mat cols(hd, static_cast<int>(basis.size()) * hd);
    for (size_t r = 0; r < basis.size(); ++r)
      cols.middleCols(static_cast<int>(r) * hd, hd) = i_n_[n].adjoint() * basis[r];
    return cols * lq_[n].coords_pinv;
  }

  // u_{n,m} : L_m -> L_n.
  Mat u(int n, int m) const {
    if (m > n || n > level_) throw ValidationError("ms_embedding: bad indices");
    if (m == n) return Mat::Identity(ldim(n), ldim(n));
    if (m == 0) return p_tilde(n).adjoint();
    const auto& basis = en_[m];
    const int hd = h_.dim;
    Mat pad = p_tilde(n - m).adjoint();  // H -> L_{n-m}
    Mat cols(ldim(n), static_cast<int>(basis.size()) * hd);
    for (size_t r = 0; r < basis.size(); ++r)
      cols.middleCols(static_cast<int>(r) * hd, hd) = insertion_map(basis[r], m, n - m) * pad;
    Mat out = cols * lq_[m].coords_pinv;
    if ((out * lq_[m].coords - cols).norm() > 1e-7 * std::max(1.0, cols.norm()))
      throw NumericalError("ms_embedding: u does not descend to the quotient");
    return out;
  }

  // V_0(x) for x in M', as an operator on L_N.
  Mat v0(const Mat& x) const { return v0_at(x, level_); }

  // V_n(X) on L_N, defined through the embedded copy of L_{N-n}.
  Mat v_op(int n, const Mat& x) const {
    if (n == 0) return v0(x);
    if (n > level_) throw ValidationError("ms: V_n beyond truncation level");
    return insertion_map(x, n, level_ - n) * u(level_, level_ - n).adjoint();
  }

  // alpha(x) = V~_1 (id_{E(1)} (x) u^* x u) V~_1^*.
  Mat alpha(const Mat& x) const {
    Mat xhat = u_top_.adjoint() * x * u_top_;
    Mat gen = kron(Mat::Identity(static_cast<int>(en_[1].size()),
                                 static_cast<int>(en_[1].size())),
                   xhat);
    Mat mid = descend_operator(gen, vq_);
    return vtilde_ * mid * vtilde_.adjoint();
  }

  Mat alpha_n(const Mat& x, int n) const {
    Mat out = x;
    for (int k = 0; k < n; ++k) out = alpha(out);
    return out;
  }

  // iota_0^* prod_i alpha^{n_i}(iota_0 a_i iota_0^*) iota_0, back in M.
  Mat moment(const std::vector<std::pair<int, Mat>>& word, double tol = 1e-7) const {
    Mat prod = Mat::Identity(ldim(level_), ldim(level_));
    for (const auto& [n, a] : word) {
      if (n > level_) throw ValidationError("ms_moment: word index exceeds level");
      Mat corner = iota0_ * (*h_.left)(a)*iota0_.adjoint();
      prod = prod * alpha_n(corner, n);
    }
    Mat op = iota0_.adjoint() * prod * iota0_;
    double res = 0.0;
    Vec c = h_left_solver_.coords(op, &res);
    if (res > tol * std::max(1.0, op.norm()))
      throw NumericalError("ms_moment: compression is not in pi(M), residual " +
                           std::to_string(res));
    return algebra_->from_coords(c);
  }

  // Span of iota_0^* N iota_0 for N = V_0(M')'. Uses the isotypic structure
  // of the V_0 representation when matrix units are available, and the solved
  // commutant otherwise (small carriers only).
  std::vector<Mat> corner_span(int direct_dim_limit = 36) const {
    std::vector<Mat> out;
    if (!mprime_.units.empty()) {
      for (const BlockUnits& bu : mprime_.units) {
        const int s = bu.size;
        Mat p11 = v0(mprime_.basis[bu.unit_index[0]]);  // V_0(f_11)
        Mat w = range_basis(p11);
        const int mult = static_cast<int>(w.cols());
        std::vector<Mat> vi;
        for (int i = 0; i < s; ++i) vi.push_back(v0(mprime_.basis[bu.unit_index[i * s + 0]]));
        // a_{i,s} = iota0^* V_0(f_{i1}) w_s
        std::vector<std::vector<Vec>> a(s, std::vector<Vec>(mult));
        for (int i = 0; i < s; ++i)
          for (int r = 0; r < mult; ++r) a[i][r] = iota0_.adjoint() * (vi[i] * w.col(r));
        for (int r = 0; r < mult; ++r)
          for (int c = 0; c < mult; ++c) {
            Mat x = Mat::Zero(h_.dim, h_.dim);
            for (int i = 0; i < s; ++i) x += a[i][r] * a[i][c].adjoint();
            out.push_back(x);
          }
      }
      return span_reduce(out);
    }
    if (ldim(level_) > direct_dim_limit)
      throw SizeError("corner_span: no units and the carrier is too large for a direct solve");
    std::vector<Mat> v0_imgs;
    for (const Mat& b : mprime_.basis) v0_imgs.push_back(v0(b));
    OperatorAlgebraBasis n_alg = commutant(v0_imgs, ldim(level_));
    for (const Mat& x : n_alg.basis) out.push_back(iota0_.adjoint() * x * iota0_);
    return span_reduce(out);
  }

  // Full commutant N = V_0(M')' (small carriers; used by tests).
  OperatorAlgebraBasis n_algebra() const {
    std::vector<Mat> v0_imgs;
    for (const Mat& b : mprime_.basis) v0_imgs.push_back(v0(b));
    return commutant(v0_imgs, ldim(level_));
  }

  // The generator-level insertion L_{k} -> L_{n+k} sending
  // class(Y (x) xi) to class(U_{n,k}(X (x) Y) (x) xi), for X in E(n).
  Mat insertion_map(const Mat& x, int n, int k) const {
    if (k == 0) {
      // L_0 = H: columns are classes of (X itself) (x) e_alpha
      const int hd = h_.dim;
      double res = 0.0;
      Vec c = en_solver_[n].coords(x, &res);
      if (res > 1e-7 * std::max(1.0, x.norm()))
        throw NumericalError("ms: operator not in E(n)");
      Mat gen = Mat::Zero(static_cast<int>(en_[n].size()) * hd, hd);
      for (size_t t = 0; t < en_[n].size(); ++t)
        gen.middleRows(static_cast<int>(t) * hd, hd) = c(static_cast<int>(t)) * Mat::Identity(hd, hd);
      return lq_[n].coords * gen;
    }
    const Mat xl = lift(x, n, k);
    const auto& src = en_[k];
    const auto& dst = en_[n + k];
    const int hd = h_.dim;
    Mat gen = Mat::Zero(static_cast<int>(dst.size()) * hd, static_cast<int>(src.size()) * hd);
    for (size_t s = 0; s < src.size(); ++s) {
      double res = 0.0;
      Vec c = en_solver_[n + k].coords(xl * src[s], &res);
      if (res > 1e-6 * std::max(1.0, (xl * src[s]).norm()))
        throw NumericalError("ms: insertion image leaves E(n+k)");
      for (size_t t = 0; t < dst.size(); ++t)
        gen.block(static_cast<int>(t) * hd, static_cast<int>(s) * hd, hd, hd) =
            c(static_cast<int>(t)) * Mat::Identity(hd, hd);
    }
    return descend_between(gen, lq_[k], lq_[n + k]);
  }

  // V_0-type action of z in M' on L_n.
  Mat v0_at(const Mat& z, int n) const {
    if (n == 0) return z;
    return insertion_map_v0(z, n);
  }

  static Mat descend_between(const Mat& gen, const QuotientMap& src, const QuotientMap& dst,
                             double tol = 1e-7) {
    Mat out = dst.coords * gen * src.coords_pinv;
    const Mat lhs = out * src.coords;
    const Mat rhs = dst.coords * gen;
    if ((lhs - rhs).norm() > tol * std::max(1.0, rhs.norm()))
      throw NumericalError("ms: generator map does not descend between quotients");
    return out;
  }

 private:
  Mat insertion_map_v0(const Mat& z, int n) const {
    const Mat zl = lift(z, 0, n);
    const auto& basis = en_[n];
    const int hd = h_.dim;
    Mat gen = Mat::Zero(static_cast<int>(basis.size()) * hd, static_cast<int>(basis.size()) * hd);
    for (size_t s = 0; s < basis.size(); ++s) {
      double res = 0.0;
      Vec c = en_solver_[n].coords(zl * basis[s], &res);
      if (res > 1e-6 * std::max(1.0, (zl * basis[s]).norm()))
        throw NumericalError("ms: V_0 image leaves E(n)");
      for (size_t t = 0; t < basis.size(); ++t)
        gen.block(static_cast<int>(t) * hd, static_cast<int>(s) * hd, hd, hd) =
            c(static_cast<int>(t)) * Mat::Identity(hd, hd);
    }
    return descend_operator(gen, lq_[n]);
  }

  void build_vtilde() {
    const int k1 = static_cast<int>(en_[1].size());
    const int dprev = ldim(level_ - 1);
    Mat gram(k1 * dprev, k1 * dprev);
    for (int a = 0; a < k1; ++a)
      for (int b = 0; b < k1; ++b)
        gram.block(a * dprev, b * dprev, dprev, dprev) =
            v0_at(en_[1][a].adjoint() * en_[1][b], level_ - 1);
    vq_ = quotient_completion(gram);
    Mat cols(ldim(level_), k1 * dprev);
    for (int a = 0; a < k1; ++a)
      cols.middleCols(a * dprev, dprev) = insertion_map(en_[1][a], 1, level_ - 1);
    vtilde_ = cols * vq_.coords_pinv;
    if ((vtilde_ * vq_.coords - cols).norm() > 1e-7 * std::max(1.0, cols.norm()))
      throw NumericalError("ms_build: V~_1 does not descend");
    const Mat wtw = vtilde_.adjoint() * vtilde_;
    if ((wtw - Mat::Identity(vq_.rank, vq_.rank)).norm() > 1e-7)
      throw NumericalError("ms_build: V~_1 is not isometric");
    u_top_ = u(level_, level_ - 1);
  }

  AlgebraPtr algebra_;
  UcpMap t_;
  WStarBimodule h_;
  OperatorAlgebraBasis mprime_;
  int level_;
  SpanSolver h_left_solver_;
  std::vector<TensorTSpace> hn_;
  std::vector<Mat> istep_;
  std::vector<Mat> i_n_;
  std::vector<std::vector<Mat>> en_;
  std::vector<SpanSolver> en_solver_;
  std::vector<QuotientMap> lq_;
  Mat iota0_, p_;
  QuotientMap vq_;
  Mat vtilde_;
  Mat u_top_;
};

inline MsDilation ms_build(const AlgebraPtr& m, const UcpMap& t, const StandardModule& module,
                           int level, int dim_cap = 4096) {
  return MsDilation(m, t, module.space, module.mprime, level, dim_cap);
}

inline const std::vector<Mat>& ms_intertwiner_space(const MsDilation& d, int n) {
  return d.intertwiner_space(n);
}

inline Mat ms_identify(const MsDilation& d, int n, int m, const Mat& xn, const Mat& xm) {
  return d.identify(n, m, xn, xm);
}

inline Mat ms_p(const MsDilation& d, int n, const Mat& x) { return d.p_map(n, x); }

inline Mat ms_embedding(const MsDilation& d, int n, int m) { return d.u(n, m); }

inline Mat ms_moment(const MsDilation& d, const std::vector<std::pair<int, Mat>>& word) {
  return d.moment(word);
}

// ---------------------------------------------------------------------------
// Standard-space variant: the same construction carried over to the H_n
// themselves by the unitaries U_n : L_n -> H_n (H = L^2(M) only).
// ---------------------------------------------------------------------------

class MsStandardVariant {
 public:
  explicit MsStandardVariant(const MsDilation& d) : d_(&d) {
    const int n_max = d.level();
    un_.push_back(Mat::Identity(d.hdim(0), d.hdim(0)));
    for (int n = 1; n <= n_max; ++n) {
      const auto& basis = d.intertwiner_space(n);
      const int hd = d.h().dim;
      Mat cols(d.hdim(n), static_cast<int>(basis.size()) * hd);
      for (size_t r = 0; r < basis.size(); ++r)
        cols.middleCols(static_cast<int>(r) * hd, hd) = basis[r];
      Mat u = cols * d.l_quotient(n).coords_pinv;
      const double iso =
          (u.adjoint() * u - Mat::Identity(d.ldim(n), d.ldim(n))).norm();
      const double sur =
          (u * u.adjoint() - Mat::Identity(d.hdim(n), d.hdim(n))).norm();
      if (iso > 1e-7 || sur > 1e-7)
        throw NumericalError("standard variant: U_n is not unitary (H != L^2(M)?)");
      un_.push_back(std::move(u));
    }
    kappa0_ = v(n_max, 0);
    build_vtilde_prime();
  }

  const Mat& u_n(int n) const { return un_.at(n); }

  // v_{n,m} = U_n u_{n,m} U_m^*.
  Mat v(int n, int m) const { return un_[n] * d_->u(n, m) * un_[m].adjoint(); }

  const Mat& kappa0() const { return kappa0_; }

  Mat beta(const Mat& x) const {
    const int n = d_->level();
    Mat xhat = v(n, n - 1).adjoint() * x * v(n, n - 1);
    const int k1 = static_cast<int>(d_->intertwiner_space(1).size());
    Mat gen = kron(Mat::Identity(k1, k1), xhat);
    Mat mid = descend_operator(gen, vq_);
    return vtp_ * mid * vtp_.adjoint();
  }

  Mat beta_n(const Mat& x, int n) const {
    Mat out = x;
    for (int k = 0; k < n; ++k) out = beta(out);
    return out;
  }

  Mat moment(const std::vector<std::pair<int, Mat>>& word, double tol = 1e-7) const {
    const WStarBimodule& h = d_->h();
    SpanSolver solver(h.left->act);
    Mat prod = Mat::Identity(d_->hdim(d_->level()), d_->hdim(d_->level()));
    for (const auto& [n, a] : word)
      prod = prod * beta_n(kappa0_ * (*h.left)(a)*kappa0_.adjoint(), n);
    Mat op = kappa0_.adjoint() * prod * kappa0_;
    double res = 0.0;
    Vec c = solver.coords(op, &res);
    if (res > tol * std::max(1.0, op.norm()))
      throw NumericalError("standard variant: compression not in pi(M)");
    return d_->algebra()->from_coords(c);
  }

 private:
  void build_vtilde_prime() {
    const int n = d_->level();
    const auto& e1 = d_->intertwiner_space(1);
    const int k1 = static_cast<int>(e1.size());
    const int dprev = d_->hdim(n - 1);
    Mat gram(k1 * dprev, k1 * dprev);
    for (int a = 0; a < k1; ++a)
      for (int b = 0; b < k1; ++b)
        gram.block(a * dprev, b * dprev, dprev, dprev) =
            d_->lift(e1[a].adjoint() * e1[b], 0, n - 1);
    vq_ = quotient_completion(gram);
    Mat cols(d_->hdim(n), k1 * dprev);
    for (int a = 0; a < k1; ++a) cols.middleCols(a * dprev, dprev) = d_->lift(e1[a], 1, n - 1);
    vtp_ = cols * vq_.coords_pinv;
    if ((vtp_ * vq_.coords - cols).norm() > 1e-7 * std::max(1.0, cols.norm()))
      throw NumericalError("standard variant: V~'_1 does not descend");
  }

  const MsDilation* d_;
  std::vector<Mat> un_;
  Mat kappa0_;
  QuotientMap vq_;
  Mat vtp_;
};

inline MsStandardVariant ms_standard_variant(const MsDilation& d) { return MsStandardVariant(d); }

}  // namespace mindil
