#pragma once

// Intertwiner spaces Hom between module actions, computed two ways:
// a stacked Sylvester null space (always available) and, when the acting
// algebra carries matrix units, the conditional-expectation twirl
//   E(X) = sum_blocks (1/n) sum_ij act_K(e_ij) X act_H(e_ij)^*,
// which projects onto the intertwiner space and scales to larger carriers.
// Isomorphism witnesses bundle the residuals every verification reports.

#include "mindil/wstar.hpp"

namespace mindil {

enum class Side { Left, Right };

namespace detail {

inline void check_same_algebra(const AlgebraAction& a, const AlgebraAction& b) {
  if (a.basis.size() != b.basis.size())
    throw ValidationError("intertwiners: acting algebras have different dimension");
  for (size_t k = 0; k < a.basis.size(); ++k)
    if ((a.basis[k] - b.basis[k]).norm() > 1e-9 * std::max(1.0, a.basis[k].norm()))
      throw ValidationError("intertwiners: acting algebra bases differ");
  if (a.mult != b.mult)
    throw ValidationError("intertwiners: actions sit on different sides of the algebra");
}

inline std::vector<Mat> sylvester_basis(const AlgebraAction& src, const AlgebraAction& dst) {
  const int dh = src.carrier_dim();
  const int dk = dst.carrier_dim();
  const int ng = static_cast<int>(src.act.size());
  Mat stacked(ng * dh * dk, dh * dk);
  const Mat idh = Mat::Identity(dh, dh);
  const Mat idk = Mat::Identity(dk, dk);
  double scale = 0.0;
  for (int g = 0; g < ng; ++g) {
    scale = std::max({scale, src.act[g].norm(), dst.act[g].norm()});
    stacked.middleRows(g * dh * dk, dh * dk) =
        kron(idk, src.act[g].transpose()) - kron(dst.act[g], idh);
  }
  Mat ker = null_space(stacked, kRankRelTol, scale);
  std::vector<Mat> out;
  out.reserve(ker.cols());
  for (int c = 0; c < ker.cols(); ++c) out.push_back(unvec_rm(ker.col(c), dk, dh));
  return out;
}

inline Mat twirl_once(const AlgebraAction& src, const AlgebraAction& dst, const Mat& x) {
  Mat out = Mat::Zero(x.rows(), x.cols());
  for (const BlockUnits& bu : src.units) {
    const double w = 1.0 / bu.size;
    for (int idx : bu.unit_index) out += w * dst.act[idx] * x * src.act[idx].adjoint();
  }
  return out;
}

inline std::vector<Mat> twirl_basis(const AlgebraAction& src, const AlgebraAction& dst,
                                    uint64_t seed = 0x5eed) {
  const int dh = src.carrier_dim();
  const int dk = dst.carrier_dim();
  Rng rng(seed);
  std::vector<Mat> samples;
  int stable = 0;
  size_t last_rank = 0;
  const int batch = 8;
  while (static_cast<int>(samples.size()) < dh * dk + 2 * batch) {
    for (int b = 0; b < batch; ++b)
      samples.push_back(twirl_once(src, dst, rng.gaussian_matrix(dk, dh)));
    std::vector<Mat> red = span_reduce(samples);
    if (red.size() == last_rank) {
      if (++stable >= 2) return red;
    } else {
      stable = 0;
      last_rank = red.size();
    }
  }
  return span_reduce(samples);
}

}  // namespace detail

// Basis of {X : X act_H(g) = act_K(g) X for all g}. The twirl path is used
// when matrix units are known and the Sylvester system would be large.
inline std::vector<Mat> intertwiners(const WStarBimodule& h, const WStarBimodule& k, Side side,
                                     bool force_sylvester = false) {
  const AlgebraAction* ah = side == Side::Left ? (h.left ? &*h.left : nullptr)
                                               : (h.right ? &*h.right : nullptr);
  const AlgebraAction* ak = side == Side::Left ? (k.left ? &*k.left : nullptr)
                                               : (k.right ? &*k.right : nullptr);
  if (!ah || !ak) throw ValidationError("intertwiners: missing action slot");
  detail::check_same_algebra(*ah, *ak);
  const long unknowns = static_cast<long>(h.dim) * k.dim;
  const bool have_units = !ah->units.empty();
  std::vector<Mat> basis;
  if (!force_sylvester && have_units && unknowns > 1024)
    basis = detail::twirl_basis(*ah, *ak);
  else
    basis = detail::sylvester_basis(*ah, *ak);
  for (const Mat& x : basis)
    for (size_t g = 0; g < ah->act.size(); ++g) {
      const double r = (x * ah->act[g] - ak->act[g] * x).norm();
      if (r > 1e-7 * std::max(1.0, x.norm()))
        throw NumericalError("intertwiners: basis element fails to intertwine, residual " +
                             std::to_string(r));
    }
  return basis;
}

struct IsomorphismWitness {
  Mat matrix;
  int dim_from = 0, dim_to = 0;
  double gram_residual = 0.0;         // Gram preservation on the spanning set
  double isometry_residual = 0.0;     // ||W*W - 1|| (operator norm)
  double surjectivity_defect = 0.0;   // ||WW* - 1||
  double left_residual = 0.0;         // max over basis of ||W l_H(g) - l_K(g) W||
  double right_residual = 0.0;

  bool verifies(double tol = kTolWitness) const {
    return dim_from == dim_to && gram_residual < tol && isometry_residual < tol &&
           surjectivity_defect < tol && left_residual < tol && right_residual < tol;
  }
  double max_residual() const {
    return std::max({gram_residual, isometry_residual, surjectivity_defect, left_residual,
                     right_residual});
  }
};

// Verify the map sending spanning vectors SH (columns, coordinates in H) to
// SK (columns in K). Checks well-definedness via Gram preservation, builds
// the induced matrix by least squares, and reports isometry, surjectivity
// and intertwining residuals. A genuinely inconsistent assignment (no linear
// map exists) is an error; a consistent but non-unitary map just fails.
inline IsomorphismWitness verify_isomorphism(const Mat& sh, const Mat& sk,
                                             const WStarBimodule& h, const WStarBimodule& k) {
  if (sh.cols() != sk.cols()) throw ValidationError("verify_isomorphism: column count mismatch");
  IsomorphismWitness w;
  w.dim_from = h.dim;
  w.dim_to = k.dim;
  const double scale = std::max(1.0, op_norm(Mat(sh.adjoint() * sh)));
  w.gram_residual = op_norm(Mat(sh.adjoint() * sh - sk.adjoint() * sk)) / scale;
  w.matrix = sk * pinv(sh);
  const double well = (w.matrix * sh - sk).norm() / std::max(1.0, sk.norm());
  if (well > 1e-6)
    throw NumericalError("verify_isomorphism: assignment is not well defined, residual " +
                         std::to_string(well));
  w.isometry_residual = op_norm(Mat(w.matrix.adjoint() * w.matrix - Mat::Identity(h.dim, h.dim)));
  w.surjectivity_defect = op_norm(Mat(w.matrix * w.matrix.adjoint() - Mat::Identity(k.dim, k.dim)));
  if (h.left && k.left)
    for (size_t g = 0; g < h.left->act.size(); ++g)
      w.left_residual = std::max(
          w.left_residual, op_norm(Mat(w.matrix * h.left->act[g] - k.left->act[g] * w.matrix)));
  if (h.right && k.right)
    for (size_t g = 0; g < h.right->act.size(); ++g)
      w.right_residual = std::max(
          w.right_residual, op_norm(Mat(w.matrix * h.right->act[g] - k.right->act[g] * w.matrix)));
  return w;
}

// Search for a bimodule unitary H -> K: take a generic element of the
// simultaneous intertwiner space and return its polar part when that is
// unitary and intertwines. Returns nothing when dimensions differ or the
// generic intertwiner is singular.
inline std::optional<IsomorphismWitness> find_bimodule_isomorphism(const WStarBimodule& h,
                                                                   const WStarBimodule& k,
                                                                   double tol = kTolWitness,
                                                                   uint64_t seed = 0xb1f0) {
  if (h.dim != k.dim) return std::nullopt;
  if (!h.left || !k.left || !h.right || !k.right)
    throw ValidationError("find_bimodule_isomorphism: both slots required on both sides");
  detail::check_same_algebra(*h.left, *k.left);
  detail::check_same_algebra(*h.right, *k.right);

  Rng rng(seed);
  Mat x;
  const bool units_ok = !h.left->units.empty() && !h.right->units.empty();
  if (units_ok) {
    x = Mat::Zero(k.dim, h.dim);
    for (int attempt = 0; attempt < 8 && x.norm() < 1e-8; ++attempt) {
      Mat g = rng.gaussian_matrix(k.dim, h.dim);
      g = detail::twirl_once(*h.left, *k.left, g);
      g = detail::twirl_once(*h.right, *k.right, g);
      // one more pass to clean the numerical mixing of the two projections
      g = detail::twirl_once(*h.left, *k.left, g);
      g = detail::twirl_once(*h.right, *k.right, g);
      x = g;
    }
  } else {
    // joint Sylvester system for both slots
    const int dh = h.dim, dk = k.dim;
    const int ngl = static_cast<int>(h.left->act.size());
    const int ngr = static_cast<int>(h.right->act.size());
    Mat stacked((ngl + ngr) * dh * dk, dh * dk);
    const Mat idh = Mat::Identity(dh, dh), idk = Mat::Identity(dk, dk);
    double scale = 0.0;
    for (int g = 0; g < ngl; ++g) {
      scale = std::max({scale, h.left->act[g].norm(), k.left->act[g].norm()});
      stacked.middleRows(g * dh * dk, dh * dk) =
          kron(idk, h.left->act[g].transpose()) - kron(k.left->act[g], idh);
    }
    for (int g = 0; g < ngr; ++g) {
      scale = std::max({scale, h.right->act[g].norm(), k.right->act[g].norm()});
      stacked.middleRows((ngl + g) * dh * dk, dh * dk) =
          kron(idk, h.right->act[g].transpose()) - kron(k.right->act[g], idh);
    }
    Mat ker = null_space(stacked, kRankRelTol, scale);
    if (ker.cols() == 0) return std::nullopt;
    Vec c(ker.cols());
    for (int i = 0; i < ker.cols(); ++i) c(i) = rng.gaussian_cx();
    x = unvec_rm(ker * c, dk, dh);
  }
  if (numeric_rank(x) < h.dim) return std::nullopt;

  IsomorphismWitness w;
  w.dim_from = h.dim;
  w.dim_to = k.dim;
  w.matrix = polar_unitary(x);
  w.gram_residual = 0.0;
  w.isometry_residual =
      op_norm(Mat(w.matrix.adjoint() * w.matrix - Mat::Identity(h.dim, h.dim)));
  w.surjectivity_defect =
      op_norm(Mat(w.matrix * w.matrix.adjoint() - Mat::Identity(k.dim, k.dim)));
  for (size_t g = 0; g < h.left->act.size(); ++g)
    w.left_residual = std::max(
        w.left_residual, op_norm(Mat(w.matrix * h.left->act[g] - k.left->act[g] * w.matrix)));
  for (size_t g = 0; g < h.right->act.size(); ++g)
    w.right_residual = std::max(
        w.right_residual, op_norm(Mat(w.matrix * h.right->act[g] - k.right->act[g] * w.matrix)));
  if (!w.verifies(tol)) return std::nullopt;
  return w;
}

}  // namespace mindil
