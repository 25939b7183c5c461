#pragma once

// W*-bimodules as concrete Hilbert spaces with commuting algebra actions,
// together with the two tensor products the constructions run on:
//
//   tensor_T        M (x)_T H with (x(x)xi, y(x)eta) = (xi, T(x*y) eta)
//   relative_tensor the tracial relative tensor product H (x)^B K
//
// Every space is a quotient of a formal generator set by the null space of
// a PSD Gram matrix; the QuotientMap fixes orthonormal coordinates once and
// all operators are descended through it.
//
// An action slot records the acting algebra by a basis of ambient matrices
// plus the action matrices on the carrier and a multiplicativity flag.
// A right action of B is anti-multiplicative in B's ambient product; a right
// action of the opposite algebra B° (commutants acting directly) is
// multiplicative. Dualizing transposes the matrices and flips the flag, so
// the same two slots house all of H, H*, L^2(M), L^2(M') and friends.

#include "mindil/cp_map.hpp"

namespace mindil {

enum class Mult { Homo, Anti };

inline Mult flip(Mult m) { return m == Mult::Homo ? Mult::Anti : Mult::Homo; }

struct AlgebraAction {
  std::vector<Mat> basis;  // algebra basis in its ambient space
  std::vector<Mat> act;    // matrices on the module carrier, one per basis element
  Mult mult = Mult::Homo;
  std::vector<BlockUnits> units;  // matrix-unit structure of `basis` when known

  SpanSolver basis_solver;

  AlgebraAction() = default;
  AlgebraAction(std::vector<Mat> b, std::vector<Mat> a, Mult m, std::vector<BlockUnits> u = {})
      : basis(std::move(b)), act(std::move(a)), mult(m), units(std::move(u)), basis_solver(basis) {
    if (basis.size() != act.size()) throw ValidationError("action: basis/act length mismatch");
  }

  int carrier_dim() const { return act.empty() ? 0 : static_cast<int>(act[0].rows()); }

  // Linear extension of the action to an arbitrary element of span(basis).
  Mat operator()(const Mat& x) const {
    double res = 0.0;
    Vec c = basis_solver.coords(x, &res);
    if (res > 1e-8 * std::max(1.0, x.norm()))
      throw ValidationError("action: element not in the acting algebra span");
    Mat out = Mat::Zero(carrier_dim(), carrier_dim());
    for (size_t k = 0; k < act.size(); ++k) out += c(static_cast<int>(k)) * act[k];
    return out;
  }

  // Max violation of the multiplicativity law and *-compatibility.
  double homomorphism_residual() const {
    double r = 0.0;
    for (size_t i = 0; i < basis.size(); ++i) {
      for (size_t j = 0; j < basis.size(); ++j) {
        const Mat lhs = (*this)(basis[i] * basis[j]);
        const Mat rhs = mult == Mult::Homo ? Mat(act[i] * act[j]) : Mat(act[j] * act[i]);
        r = std::max(r, (lhs - rhs).norm());
      }
      r = std::max(r, ((*this)(basis[i].adjoint()) - act[i].adjoint()).norm());
    }
    return r;
  }
};

// Action of a multimatrix algebra with its canonical units attached.
inline AlgebraAction make_action(const AlgebraPtr& alg, std::vector<Mat> act, Mult m) {
  return AlgebraAction(alg->basis(), std::move(act), m, alg->block_units());
}

struct WStarBimodule {
  int dim = 0;
  std::optional<AlgebraAction> left;
  std::optional<AlgebraAction> right;
  std::string label;

  double commutation_residual() const {
    if (!left || !right) return 0.0;
    double r = 0.0;
    for (const Mat& a : left->act)
      for (const Mat& b : right->act) r = std::max(r, (a * b - b * a).norm());
    return r;
  }
};

struct QuotientMap {
  Mat coords;  // rank x n_generators; Gram = coords^* coords
  int rank = 0;
  int n_generators = 0;

  Mat coords_pinv;  // cached right inverse

  QuotientMap() = default;
  QuotientMap(Mat q) : coords(std::move(q)) {
    rank = static_cast<int>(coords.rows());
    n_generators = static_cast<int>(coords.cols());
    coords_pinv = pinv(coords);
  }

  Vec apply(const Vec& gen_coeffs) const { return coords * gen_coeffs; }

  double gram_residual(const Mat& gram) const {
    return (coords.adjoint() * coords - gram).norm() / std::max(1.0, gram.norm());
  }
};

// Orthonormal quotient coordinates from a PSD semi-inner-product Gram.
inline QuotientMap quotient_completion(const Mat& gram, double rel = kRankRelTol) {
  if (gram.rows() != gram.cols()) throw ValidationError("quotient: Gram must be square");
  Mat g = 0.5 * (gram + gram.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  const RVec& ev = es.eigenvalues();
  const double top = ev.size() ? std::max(ev.maxCoeff(), 0.0) : 0.0;
  const double cut = rel * std::max(top, 1e-300);
  if (ev.size() && ev.minCoeff() < -10.0 * cut - 1e-12)
    throw NumericalError("quotient: Gram has a significantly negative eigenvalue " +
                         std::to_string(ev.minCoeff()));
  int r = 0;
  for (int i = 0; i < ev.size(); ++i)
    if (ev(i) > cut) ++r;
  Mat q(r, gram.rows());
  int row = 0;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) <= cut) continue;
    q.row(row++) = std::sqrt(ev(i)) * es.eigenvectors().col(i).adjoint();
  }
  return QuotientMap(std::move(q));
}

// Operator on generator coefficients -> induced operator on the quotient.
// Requires A to preserve the Gram null space; the residual is checked.
inline Mat descend_operator(const Mat& a, const QuotientMap& q, double tol = 1e-8) {
  Mat qa = q.coords * a;
  Mat out = qa * q.coords_pinv;
  const double scale = std::max(1.0, qa.norm());
  const double res = (out * q.coords - qa).norm() / scale;
  if (res > tol)
    throw NumericalError("descend: operator does not preserve the null space, residual " +
                         std::to_string(res));
  return out;
}

// ---------------------------------------------------------------------------
// Standard form L^2
// ---------------------------------------------------------------------------

struct StandardForm {
  WStarBimodule space;       // left/right multiplication actions
  QuotientMap q;             // coordinates of the algebra basis in the carrier
  std::vector<Mat> vectors;  // algebra element represented by each ONB vector
  SpanSolver basis_solver;   // expansion over the algebra basis

  // Algebra element whose class is the given carrier vector.
  Mat vector_to_element(const Vec& v) const {
    Mat out = Mat::Zero(vectors[0].rows(), vectors[0].cols());
    for (int k = 0; k < static_cast<int>(vectors.size()); ++k) out += v(k) * vectors[k];
    return out;
  }

  Vec element_to_vector(const Mat& x) const { return q.coords * basis_solver.coords(x); }
};

namespace detail {

inline StandardForm standard_form_impl(const std::vector<Mat>& basis,
                                       const std::vector<BlockUnits>& units, int ambient,
                                       const std::string& label) {
  const int n = static_cast<int>(basis.size());
  Mat gram(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) gram(i, j) = (basis[i].adjoint() * basis[j]).trace() / double(ambient);
  QuotientMap q = quotient_completion(gram);
  if (q.rank != n) throw NumericalError("standard form: basis not linearly independent");
  SpanSolver solver(basis);
  auto mult_action = [&](bool left_side) {
    std::vector<Mat> act;
    act.reserve(n);
    for (int k = 0; k < n; ++k) {
      Mat a(n, n);
      for (int j = 0; j < n; ++j) {
        const Mat prod = left_side ? Mat(basis[k] * basis[j]) : Mat(basis[j] * basis[k]);
        double res = 0.0;
        a.col(j) = solver.coords(prod, &res);
        if (res > 1e-9 * std::max(1.0, prod.norm()))
          throw NumericalError("standard form: span not closed under products");
      }
      act.push_back(descend_operator(a, q));
    }
    return act;
  };
  WStarBimodule space;
  space.dim = n;
  space.left = AlgebraAction(basis, mult_action(true), Mult::Homo, units);
  space.right = AlgebraAction(basis, mult_action(false), Mult::Anti, units);
  space.label = label;

  StandardForm out;
  out.space = std::move(space);
  out.q = std::move(q);
  out.basis_solver = SpanSolver(basis);
  Mat p = out.q.coords_pinv;  // n x n: ONB vector -> basis coefficients
  for (int v = 0; v < n; ++v) {
    Mat el = Mat::Zero(basis[0].rows(), basis[0].cols());
    for (int k = 0; k < n; ++k) el += p(k, v) * basis[k];
    out.vectors.push_back(std::move(el));
  }
  return out;
}

}  // namespace detail

// L^2(A) for a multimatrix algebra: carrier = A, (x,y) = tr(x^*y)/d, left and
// right multiplication actions.
inline StandardForm standard_form(const AlgebraPtr& a) {
  return detail::standard_form_impl(a->basis(), a->block_units(), a->ambient_dim(),
                                    "L2(" + std::to_string(a->ambient_dim()) + ")");
}

// L^2 of an operator algebra presented by a basis, with the normalized
// ambient trace as the reference state.
inline StandardForm standard_form(const OperatorAlgebraBasis& a) {
  return detail::standard_form_impl(a.basis, a.units, a.carrier_dim, "L2(op-basis)");
}

// ---------------------------------------------------------------------------
// M (x)_T H
// ---------------------------------------------------------------------------

struct TensorTSpace {
  WStarBimodule space;
  QuotientMap q;       // generators ordered (algebra basis index, H basis index)
  int alg_gen = 0;     // lin_dim(M)
  int mod_gen = 0;     // dim H

  // Class of b_k (x) v for a carrier vector v of H.
  Vec embed(int k, const Vec& v) const {
    Vec gen = Vec::Zero(q.n_generators);
    gen.segment(k * mod_gen, mod_gen) = v;
    return q.apply(gen);
  }

  // Class of m (x) v for m given by coefficients over the algebra basis.
  Vec embed_coeffs(const Vec& c, const Vec& v) const {
    Vec gen = Vec::Zero(q.n_generators);
    for (int k = 0; k < alg_gen; ++k) gen.segment(k * mod_gen, mod_gen) = c(k) * v;
    return q.apply(gen);
  }
};

// The unit embedding H -> M (x)_T H, h -> class(1 (x) h); isometric since T(1) = 1.
inline Mat unit_embedding(const AlgebraPtr& m, const TensorTSpace& t) {
  Vec one = m->coords(m->identity());
  Mat e = Mat::Zero(t.q.n_generators, t.mod_gen);
  for (int k = 0; k < t.alg_gen; ++k)
    e.middleRows(k * t.mod_gen, t.mod_gen) = one(k) * Mat::Identity(t.mod_gen, t.mod_gen);
  return t.q.coords * e;
}

inline TensorTSpace tensor_T(const AlgebraPtr& m, const UcpMap& t, const WStarBimodule& h,
                             int dim_cap = 0) {
  if (!h.left) throw ValidationError("tensor_T: H must carry a left action");
  const int lin = m->lin_dim();
  const int hd = h.dim;
  if (dim_cap > 0 && lin * hd > dim_cap)
    throw SizeError("tensor_T: generator count " + std::to_string(lin * hd) + " exceeds cap");
  Mat gram(lin * hd, lin * hd);
  const auto& basis = m->basis();
  for (int i = 0; i < lin; ++i)
    for (int j = 0; j < lin; ++j)
      gram.block(i * hd, j * hd, hd, hd) = (*h.left)(t.apply(basis[i].adjoint() * basis[j]));
  TensorTSpace out;
  out.q = quotient_completion(gram);
  out.alg_gen = lin;
  out.mod_gen = hd;

  // pi_T(y): b_i (x) v -> (y b_i) (x) v.
  std::vector<Mat> left;
  left.reserve(lin);
  for (int bidx = 0; bidx < lin; ++bidx) {
    Mat a = Mat::Zero(lin * hd, lin * hd);
    for (int j = 0; j < lin; ++j) {
      Vec c = m->coords(basis[bidx] * basis[j]);
      for (int k = 0; k < lin; ++k)
        if (std::abs(c(k)) > 0.0)
          a.block(k * hd, j * hd, hd, hd) = c(k) * Mat::Identity(hd, hd);
    }
    left.push_back(descend_operator(a, out.q));
  }
  out.space.dim = out.q.rank;
  out.space.left = make_action(m, std::move(left), Mult::Homo);

  // Right action inherited from H, acting on the second leg.
  if (h.right) {
    std::vector<Mat> right;
    right.reserve(h.right->act.size());
    for (const Mat& r : h.right->act)
      right.push_back(descend_operator(kron(Mat::Identity(lin, lin), r), out.q));
    out.space.right = AlgebraAction(h.right->basis, std::move(right), h.right->mult, h.right->units);
  }
  out.space.label = "M(x)_T[" + h.label + "]";
  return out;
}

// ---------------------------------------------------------------------------
// Tracial relative tensor product H (x)^B K
// ---------------------------------------------------------------------------

struct FusionSpace {
  WStarBimodule space;
  QuotientMap q;  // generators ordered (H basis index, K basis index)
  int left_gen = 0, right_gen = 0;

  Vec embed(const Vec& xi, const Vec& eta) const {
    Vec gen = Vec::Zero(q.n_generators);
    for (int i = 0; i < left_gen; ++i) gen.segment(i * right_gen, right_gen) = xi(i) * eta;
    return q.apply(gen);
  }
};

// B-valued inner product <xi, eta>_B of vectors in H against the normalized
// ambient trace of B: tr(c a) = (xi, act_right(a) eta) for all a in B.
struct TraceRiesz {
  const AlgebraAction* action;
  Eigen::PartialPivLU<Mat> lu;
  int n = 0;

  explicit TraceRiesz(const AlgebraAction& right) : action(&right) {
    n = static_cast<int>(right.basis.size());
    const double amb = static_cast<double>(right.basis[0].rows());
    Mat s(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) s(i, j) = (right.basis[j] * right.basis[i]).trace() / amb;
    lu.compute(s);
  }

  // Coefficients of <xi, eta>_B over the basis of B.
  Vec coefficients(const Vec& xi, const Vec& eta) const {
    Vec rhs(n);
    for (int i = 0; i < n; ++i) rhs(i) = xi.dot(action->act[i] * eta);
    return lu.solve(rhs);
  }

  Mat element(const Vec& xi, const Vec& eta) const {
    Vec c = coefficients(xi, eta);
    Mat out = Mat::Zero(action->basis[0].rows(), action->basis[0].cols());
    for (int k = 0; k < n; ++k) out += c(k) * action->basis[k];
    return out;
  }
};

inline FusionSpace relative_tensor(const WStarBimodule& h, const WStarBimodule& k,
                                   int dim_cap = 0) {
  if (!h.right) throw ValidationError("relative_tensor: H needs a right action slot");
  if (!k.left) throw ValidationError("relative_tensor: K needs a left action slot");
  if (h.right->mult == k.left->mult)
    throw ValidationError("relative_tensor: slots act on the same side of the algebra");
  if (h.right->basis.size() != k.left->basis.size())
    throw ValidationError("relative_tensor: acting algebras differ in dimension");
  const int dh = h.dim, dk = k.dim;
  if (dim_cap > 0 && dh * dk > dim_cap)
    throw SizeError("relative_tensor: generator count exceeds cap");

  TraceRiesz riesz(*h.right);
  const int nb = static_cast<int>(k.left->basis.size());
  // act_K of <e_i, e_j>_B for every ONB pair; Gram blocks follow directly.
  Mat gram(dh * dk, dh * dk);
  for (int i = 0; i < dh; ++i) {
    Vec ei = Vec::Zero(dh);
    ei(i) = 1.0;
    for (int j = 0; j < dh; ++j) {
      Vec ej = Vec::Zero(dh);
      ej(j) = 1.0;
      Vec c = riesz.coefficients(ei, ej);
      Mat block = Mat::Zero(dk, dk);
      for (int s = 0; s < nb; ++s) block += c(s) * k.left->act[s];
      gram.block(i * dk, j * dk, dk, dk) = block;
    }
  }
  FusionSpace out;
  out.q = quotient_completion(gram);
  out.left_gen = dh;
  out.right_gen = dk;
  out.space.dim = out.q.rank;
  if (h.left) {
    std::vector<Mat> act;
    for (const Mat& a : h.left->act)
      act.push_back(descend_operator(kron(a, Mat::Identity(dk, dk)), out.q));
    out.space.left = AlgebraAction(h.left->basis, std::move(act), h.left->mult, h.left->units);
  }
  if (k.right) {
    std::vector<Mat> act;
    for (const Mat& a : k.right->act)
      act.push_back(descend_operator(kron(Mat::Identity(dh, dh), a), out.q));
    out.space.right = AlgebraAction(k.right->basis, std::move(act), k.right->mult, k.right->units);
  }
  out.space.label = "[" + h.label + "](x)^B[" + k.label + "]";
  return out;
}

// ---------------------------------------------------------------------------
// Dual module
// ---------------------------------------------------------------------------

// Conjugate space with swapped, transposed actions: y xi^* x = (x^* xi y^*)^*.
// In coordinates the carrier map is entrywise conjugation, so an action
// matrix a on H turns into a^T on H*, and each slot flips its side and
// multiplicativity.
inline WStarBimodule dual_module(const WStarBimodule& h) {
  WStarBimodule out;
  out.dim = h.dim;
  if (h.right) {
    std::vector<Mat> act;
    for (const Mat& a : h.right->act) act.push_back(a.transpose());
    out.left = AlgebraAction(h.right->basis, std::move(act), flip(h.right->mult), h.right->units);
  }
  if (h.left) {
    std::vector<Mat> act;
    for (const Mat& a : h.left->act) act.push_back(a.transpose());
    out.right = AlgebraAction(h.left->basis, std::move(act), flip(h.left->mult), h.left->units);
  }
  out.label = "[" + h.label + "]*";
  return out;
}

// Coordinates of the conjugate of a vector (the carrier-level dual map).
inline Vec dual_vector(const Vec& v) { return v.conjugate(); }

// Rename the slots of an A-B-bimodule as a B°-A°-bimodule: the actions keep
// their matrices, only the side bookkeeping moves.
inline WStarBimodule swap_slots(const WStarBimodule& h) {
  WStarBimodule out;
  out.dim = h.dim;
  out.left = h.right;
  out.right = h.left;
  out.label = "op[" + h.label + "]";
  return out;
}

// The commutant of the left action, acting directly on the carrier: the
// right-(B°) slot used for balancing over (M')°.
inline AlgebraAction opposite_right_slot(const OperatorAlgebraBasis& commutant_alg) {
  return AlgebraAction(commutant_alg.basis, commutant_alg.basis, Mult::Homo, commutant_alg.units);
}

// Commutant of the diagonal left-multiplication action on L^2(M)^{⊕copies},
// with its matrix units known by construction: block k of M contributes a
// block of size copies * n_k spanned by F_{(u,i),(v,j)} = E_uv ⊗ r(e^k_ji).
inline OperatorAlgebraBasis standard_commutant(const AlgebraPtr& m, const StandardForm& l2,
                                               int copies = 1) {
  const int d = l2.space.dim;
  std::vector<Mat> basis;
  std::vector<BlockUnits> units;
  const auto& bu = m->block_units();
  for (size_t k = 0; k < bu.size(); ++k) {
    const int n = bu[k].size;
    BlockUnits out_bu;
    out_bu.size = copies * n;
    out_bu.unit_index.resize(out_bu.size * out_bu.size);
    for (int u = 0; u < copies; ++u)
      for (int i = 0; i < n; ++i)
        for (int v = 0; v < copies; ++v)
          for (int j = 0; j < n; ++j) {
            Mat e_uv = Mat::Zero(copies, copies);
            e_uv(u, v) = 1.0;
            const Mat& r_ji = l2.space.right->act[bu[k].unit_index[j * n + i]];
            const int alpha = u * n + i, beta = v * n + j;
            out_bu.unit_index[alpha * out_bu.size + beta] = static_cast<int>(basis.size());
            basis.push_back(copies == 1 ? r_ji : kron(e_uv, r_ji));
          }
    units.push_back(std::move(out_bu));
  }
  return OperatorAlgebraBasis(copies * d, std::move(basis), std::move(units));
}

// The module choices exposed by the instance schema: L^2(M) or L^2(M)⊕L^2(M),
// together with the structured commutant of the left action.
struct StandardModule {
  WStarBimodule space;          // left M-action and an honest right M-action
  OperatorAlgebraBasis mprime;  // commutant of the left action, with units
  int copies = 1;
};

inline StandardModule standard_module(const AlgebraPtr& m, const StandardForm& l2,
                                      int copies = 1) {
  StandardModule out;
  out.copies = copies;
  if (copies == 1) {
    out.space = l2.space;
  } else {
    const Mat id = Mat::Identity(copies, copies);
    std::vector<Mat> left, right;
    for (const Mat& a : l2.space.left->act) left.push_back(kron(id, a));
    for (const Mat& a : l2.space.right->act) right.push_back(kron(id, a));
    out.space.dim = copies * l2.space.dim;
    out.space.left = make_action(m, std::move(left), Mult::Homo);
    out.space.right = make_action(m, std::move(right), Mult::Anti);
    out.space.label = l2.space.label + "^" + std::to_string(copies);
  }
  out.mprime = standard_commutant(m, l2, copies);
  return out;
}

}  // namespace mindil
