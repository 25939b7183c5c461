#pragma once

// Hilbert C*-bimodules over M, stored through the correspondence with
// right W*-M-modules: a module X is kept as its carrier H(X) = X (x)_M L^2(M)
// together with the intertwiner realization X(H) = Hom(L^2(M)_M, H_M).
// Module elements are concrete matrices L^2(M) -> carrier; the M-valued
// inner product is (x,y) = x^* y read back through the left action on L^2(M).

#include "mindil/intertwiner.hpp"

namespace mindil {

struct HilbertBimodule {
  AlgebraPtr algebra;                      // the (right) base algebra M
  std::shared_ptr<const StandardForm> l2;  // L^2(M), domain of module elements
  WStarBimodule carrier;                   // H(X), carries the same M on the right
  std::vector<Mat> module_basis;           // linearly independent, carrier.dim x l2.dim

  SpanSolver module_solver;   // expansion over module_basis
  SpanSolver l2_left_solver;  // expansion over the left action of M on L^2(M)

  void finalize() {
    module_solver = SpanSolver(module_basis);
    l2_left_solver = SpanSolver(l2->space.left->act);
  }

  int module_dim() const { return static_cast<int>(module_basis.size()); }

  // (x, y)_M: the unique m in M with l_{L2}(m) = x^* y.
  Mat gram_element(const Mat& x, const Mat& y, double tol = 1e-7) const {
    double res = 0.0;
    Vec c = l2_left_solver.coords(x.adjoint() * y, &res);
    if (res > tol * std::max(1.0, y.norm() * x.norm()))
      throw NumericalError("module gram: x*y is not right-M-linear enough");
    return algebra->from_coords(c);
  }

  // Module right action x.m = x o l_{L2}(m).
  Mat right_mul(const Mat& x, const Mat& m) const { return x * (*l2->space.left)(m); }

  // Module left action a.x = l_carrier(a) o x.
  Mat left_mul(const Mat& a, const Mat& x) const { return (*carrier.left)(a)*x; }

  // Coefficient matrix of the left action over the module basis.
  Mat left_coeff(const Mat& a, double tol = 1e-7) const {
    const int k = module_dim();
    Mat coeff(k, k);
    for (int i = 0; i < k; ++i) {
      double res = 0.0;
      coeff.col(i) = module_solver.coords(left_mul(a, module_basis[i]), &res);
      if (res > tol) throw NumericalError("module: left action leaves the module span");
    }
    return coeff;
  }
};

// X(H) for a W*-bimodule H with a right M-action: the full space of right
// M-linear maps L^2(M) -> H.
inline HilbertBimodule from_wstar(const WStarBimodule& h, const AlgebraPtr& m,
                                  std::shared_ptr<const StandardForm> l2) {
  if (!h.right) throw ValidationError("from_wstar: H needs a right M-action");
  HilbertBimodule x;
  x.algebra = m;
  x.l2 = std::move(l2);
  x.carrier = h;
  x.module_basis = intertwiners(x.l2->space, h, Side::Right);
  x.finalize();
  return x;
}

inline const WStarBimodule& to_wstar(const HilbertBimodule& x) { return x.carrier; }

// The trivial module M over itself: carrier L^2(M), module = left multiplications.
inline HilbertBimodule trivial_module(const AlgebraPtr& m,
                                      std::shared_ptr<const StandardForm> l2) {
  HilbertBimodule x;
  x.algebra = m;
  x.l2 = l2;
  x.carrier = l2->space;
  x.module_basis = l2->space.left->act;
  x.finalize();
  return x;
}

struct GnsPair {
  HilbertBimodule module;  // E(M,T)
  Mat cyclic;              // class of 1 (x) 1, as a module element
  TensorTSpace tspace;     // the underlying M (x)_T L^2(M) quotient
};

// GNS bimodule of T: E(M,T) realized through its carrier M (x)_T L^2(M),
// with cyclic vector the class of 1 (x) 1. (xi, a xi) = T(a) holds by the
// Def 4.1 Gram; tests assert it numerically.
inline GnsPair gns_bimodule(const AlgebraPtr& m, const UcpMap& t,
                            std::shared_ptr<const StandardForm> l2, int dim_cap = 0) {
  GnsPair g;
  g.tspace = tensor_T(m, t, l2->space, dim_cap);
  g.module.algebra = m;
  g.module.l2 = l2;
  g.module.carrier = g.tspace.space;
  g.module.module_basis = intertwiners(l2->space, g.tspace.space, Side::Right);
  g.module.finalize();
  g.cyclic = unit_embedding(m, g.tspace);
  return g;
}

struct ModuleTensor {
  HilbertBimodule module;  // E (x)_M F
  QuotientMap q;           // generators (E module basis index, F carrier index)
  int e_count = 0;
  int f_dim = 0;
};

// Def 2.6 tensor product of bimodules over M. The carrier is the quotient of
// {x_i (x) f_alpha} by the Gram (f_a, l_F((x_i,x_j)) f_b); module elements
// x (x) y act as xi -> class(x (x) (y xi)).
inline ModuleTensor module_tensor(const HilbertBimodule& e, const HilbertBimodule& f,
                                  int dim_cap = 0) {
  if (e.algebra != f.algebra)
    throw ValidationError("module_tensor: modules must share the base algebra");
  const int k = e.module_dim();
  const int hd = f.carrier.dim;
  if (dim_cap > 0 && k * hd > dim_cap)
    throw SizeError("module_tensor: generator count exceeds cap");
  Mat gram(k * hd, k * hd);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      gram.block(i * hd, j * hd, hd, hd) =
          (*f.carrier.left)(e.gram_element(e.module_basis[i], e.module_basis[j]));
  ModuleTensor out;
  out.q = quotient_completion(gram);
  out.e_count = k;
  out.f_dim = hd;

  // Left action: (a x_i) (x) f, through the coefficients of a over E.
  std::vector<Mat> left;
  left.reserve(e.algebra->lin_dim());
  for (const Mat& b : e.algebra->basis()) {
    Mat coeff = e.left_coeff(b);
    Mat a = kron(coeff, Mat::Identity(hd, hd));
    left.push_back(descend_operator(a, out.q));
  }
  std::vector<Mat> right;
  right.reserve(f.carrier.right->act.size());
  for (const Mat& r : f.carrier.right->act)
    right.push_back(descend_operator(kron(Mat::Identity(k, k), r), out.q));

  out.module.algebra = e.algebra;
  out.module.l2 = e.l2;
  out.module.carrier.dim = out.q.rank;
  out.module.carrier.left = make_action(e.algebra, std::move(left), Mult::Homo);
  out.module.carrier.right =
      AlgebraAction(f.carrier.right->basis, std::move(right), f.carrier.right->mult,
                    f.carrier.right->units);
  out.module.carrier.label = "[" + e.carrier.label + "](x)_M[" + f.carrier.label + "]";

  // Module elements x_i (x) y_j, then reduced to a basis.
  std::vector<Mat> candidates;
  candidates.reserve(k * f.module_dim());
  const int l2d = static_cast<int>(e.l2->space.dim);
  for (int i = 0; i < k; ++i)
    for (const Mat& y : f.module_basis) {
      Mat emb = Mat::Zero(k * hd, l2d);
      emb.middleRows(i * hd, hd) = y;
      candidates.push_back(out.q.coords * emb);
    }
  out.module.module_basis = span_reduce(candidates);
  out.module.finalize();
  return out;
}

// Class of x (x) y in E (x)_M F for module elements x of E and y of F.
inline Mat tensor_element(const ModuleTensor& t, const HilbertBimodule& e, const Mat& x,
                          const Mat& y, double tol = 1e-7) {
  double res = 0.0;
  Vec c = e.module_solver.coords(x, &res);
  if (res > tol * std::max(1.0, x.norm()))
    throw NumericalError("tensor_element: x is not in the module span");
  const int hd = t.f_dim;
  Mat emb = Mat::Zero(t.e_count * hd, y.cols());
  for (int i = 0; i < t.e_count; ++i) emb.middleRows(i * hd, hd) = c(i) * y;
  return t.q.coords * emb;
}

struct VnEmbedding {
  WStarBimodule space;      // E (x)_M H
  QuotientMap q;            // generators (module basis index, H basis index)
  std::vector<Mat> l_ops;   // L_{x_i} : H -> E (x)_M H
  int e_count = 0;
  int h_dim = 0;
};

// Def 2.7: the concrete operators L_xi : H -> E (x)_M H with
// L_xi^* L_eta = pi_H((xi,eta)) and the left representation rho on the product.
inline VnEmbedding vn_module_embedding(const HilbertBimodule& e, const WStarBimodule& h,
                                       int dim_cap = 0) {
  if (!h.left) throw ValidationError("vn_module_embedding: H needs a left M-action");
  const int k = e.module_dim();
  const int hd = h.dim;
  if (dim_cap > 0 && k * hd > dim_cap)
    throw SizeError("vn_module_embedding: generator count exceeds cap");
  Mat gram(k * hd, k * hd);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      gram.block(i * hd, j * hd, hd, hd) =
          (*h.left)(e.gram_element(e.module_basis[i], e.module_basis[j]));
  VnEmbedding out;
  out.q = quotient_completion(gram);
  out.e_count = k;
  out.h_dim = hd;
  std::vector<Mat> rho;
  rho.reserve(e.algebra->lin_dim());
  for (const Mat& b : e.algebra->basis())
    rho.push_back(descend_operator(kron(e.left_coeff(b), Mat::Identity(hd, hd)), out.q));
  out.space.dim = out.q.rank;
  out.space.left = make_action(e.algebra, std::move(rho), Mult::Homo);
  if (h.right) {
    std::vector<Mat> right;
    for (const Mat& r : h.right->act)
      right.push_back(descend_operator(kron(Mat::Identity(k, k), r), out.q));
    out.space.right =
        AlgebraAction(h.right->basis, std::move(right), h.right->mult, h.right->units);
  }
  out.space.label = "[" + e.carrier.label + "](x)_M[" + h.label + "]";
  for (int i = 0; i < k; ++i) {
    Mat emb = Mat::Zero(k * hd, hd);
    emb.middleRows(i * hd, hd) = Mat::Identity(hd, hd);
    out.l_ops.push_back(out.q.coords * emb);
  }
  return out;
}

// L_xi for an arbitrary module element.
inline Mat l_op(const VnEmbedding& v, const HilbertBimodule& e, const Mat& xi, double tol = 1e-7) {
  double res = 0.0;
  Vec c = e.module_solver.coords(xi, &res);
  if (res > tol * std::max(1.0, xi.norm()))
    throw NumericalError("l_op: xi is not in the module span");
  Mat out = Mat::Zero(v.space.dim, v.h_dim);
  for (int i = 0; i < v.e_count; ++i) out += c(i) * v.l_ops[i];
  return out;
}

}  // namespace mindil
