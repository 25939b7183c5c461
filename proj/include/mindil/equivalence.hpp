#pragma once

// Numerical verification of the bimodule isomorphisms relating the two
// constructions: with the tracial reference state every phi^{1/2} insertion
// degenerates and each isomorphism becomes an explicit map on spanning
// vectors, checked by verify_isomorphism / find_bimodule_isomorphism.

#include "mindil/bhat_skeide.hpp"
#include "mindil/muhly_solel.hpp"

namespace mindil {

// H(M,T) = M (x)_T L^2(M) and its relative tensor powers H_n(M,T).
struct EquivalenceContext {
  AlgebraPtr m;
  UcpMap t;
  std::shared_ptr<StandardForm> l2;
  TensorTSpace hmt;
  std::vector<FusionSpace> powers;  // powers[n] = H_{n+1}(M,T) for n >= 1; powers[0] unused

  EquivalenceContext(AlgebraPtr alg, UcpMap tt, int max_power, int dim_cap = 4096)
      : m(std::move(alg)),
        t(std::move(tt)),
        l2(std::make_shared<StandardForm>(standard_form(m))) {
    hmt = tensor_T(m, t, l2->space, dim_cap);
    powers.resize(std::max(max_power + 1, 2));
    for (int n = 2; n <= max_power; ++n)
      powers[n] = relative_tensor(hmt.space, power_space(n - 1), dim_cap);
  }

  const WStarBimodule& power_space(int n) const {
    if (n <= 1) return hmt.space;
    return powers[n].space;
  }

  // Class of b_i (x) u_j inside H(M,T), for the ONB vector u_j of L^2(M).
  Vec hmt_class(int i, int j) const {
    Vec ej = Vec::Zero(l2->space.dim);
    ej(j) = 1.0;
    return hmt.embed(i, ej);
  }

  // Class of a chain vector inside H_n(M,T) given the leftmost factor class
  // and the H_{n-1}(M,T) tail.
  Vec power_embed(int n, const Vec& head, const Vec& tail) const {
    return powers[n].embed(head, tail);
  }
};

namespace detail {

// Deterministic enumeration of symbol tuples; switches to a random spanning
// subset when the full grid would be too large to verify against.
struct SymbolSet {
  std::vector<std::vector<int>> tuples;

  static SymbolSet grid(const std::vector<int>& radices, int budget, uint64_t seed) {
    SymbolSet out;
    long total = 1;
    for (int r : radices) {
      total *= r;
      if (total > budget * 16L) break;
    }
    if (total <= budget * 16L) {
      std::vector<int> cur(radices.size(), 0);
      for (long k = 0; k < total; ++k) {
        out.tuples.push_back(cur);
        for (int p = static_cast<int>(radices.size()) - 1; p >= 0; --p) {
          if (++cur[p] < radices[p]) break;
          cur[p] = 0;
        }
      }
      return out;
    }
    Rng rng(seed);
    for (int k = 0; k < budget; ++k) {
      std::vector<int> cur(radices.size());
      for (size_t p = 0; p < radices.size(); ++p)
        cur[p] = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(radices[p]));
      out.tuples.push_back(cur);
    }
    return out;
  }
};

}  // namespace detail

// Prop: H(M,T) (x)^M H(M,T) ~ M (x)_T (M (x)_T L^2(M)) via
// (x (x) y) (x) (z (x) w) -> x (x) ((yz) (x) w).
inline IsomorphismWitness verify_prop_6_2(const EquivalenceContext& ctx, int dim_cap = 4096) {
  FusionSpace lhs = relative_tensor(ctx.hmt.space, ctx.hmt.space, dim_cap);
  TensorTSpace inner = ctx.hmt;
  TensorTSpace rhs = tensor_T(ctx.m, ctx.t, inner.space, dim_cap);
  const int lin = ctx.m->lin_dim();
  const int l2d = ctx.l2->space.dim;
  const int nsym = lin * l2d * lin * l2d;
  Mat sh(lhs.space.dim, nsym), sk(rhs.space.dim, nsym);
  int col = 0;
  for (int i1 = 0; i1 < lin; ++i1)
    for (int j1 = 0; j1 < l2d; ++j1) {
      const Mat& y = ctx.l2->vectors[j1];
      for (int i2 = 0; i2 < lin; ++i2) {
        Vec prod = ctx.m->coords(y * ctx.m->basis()[i2]);
        for (int j2 = 0; j2 < l2d; ++j2) {
          Vec ej2 = Vec::Zero(l2d);
          ej2(j2) = 1.0;
          sh.col(col) = lhs.embed(ctx.hmt_class(i1, j1), ctx.hmt_class(i2, j2));
          sk.col(col) = rhs.embed(i1, inner.embed_coeffs(prod, ej2));
          ++col;
        }
      }
    }
  return verify_isomorphism(sh, sk, lhs.space, rhs.space);
}

// Prop: H(M,T) (x)^M H ~ M (x)_T H via (x (x) m) (x) xi -> x (x) (m xi).
inline IsomorphismWitness verify_prop_6_3(const EquivalenceContext& ctx, const WStarBimodule& h,
                                          int dim_cap = 4096) {
  FusionSpace lhs = relative_tensor(ctx.hmt.space, h, dim_cap);
  TensorTSpace rhs = tensor_T(ctx.m, ctx.t, h, dim_cap);
  const int lin = ctx.m->lin_dim();
  const int l2d = ctx.l2->space.dim;
  Mat sh(lhs.space.dim, lin * l2d * h.dim), sk(rhs.space.dim, lin * l2d * h.dim);
  int col = 0;
  for (int i = 0; i < lin; ++i)
    for (int j = 0; j < l2d; ++j) {
      Mat act = (*h.left)(ctx.l2->vectors[j]);
      for (int a = 0; a < h.dim; ++a) {
        Vec ea = Vec::Zero(h.dim);
        ea(a) = 1.0;
        sh.col(col) = lhs.embed(ctx.hmt_class(i, j), ea);
        sk.col(col) = rhs.embed(i, act * ea);
        ++col;
      }
    }
  return verify_isomorphism(sh, sk, lhs.space, rhs.space);
}

// H'_n(M,T) = H^* (x)^M H_n(M,T) (x)^M H as a (M')°-(M')°-bimodule. H must
// carry the commutant acting on the right.
inline WStarBimodule h_prime(const EquivalenceContext& ctx, const StandardModule& module, int n,
                             int dim_cap = 4096) {
  WStarBimodule h = module.space;
  h.right = opposite_right_slot(module.mprime);
  WStarBimodule hs = dual_module(h);  // left (M')°-action, right M-action
  FusionSpace a = relative_tensor(hs, ctx.power_space(n), dim_cap);
  FusionSpace b = relative_tensor(a.space, h, dim_cap);
  return b.space;
}

// Prop (unnumbered): H'_n ~ n-fold (M')°-relative tensor power of H'_1.
inline IsomorphismWitness verify_prop_6_4(const EquivalenceContext& ctx,
                                          const StandardModule& module, int n,
                                          int dim_cap = 4096) {
  if (n < 1) throw ValidationError("prop 6.4: n >= 1 required");
  WStarBimodule rhs = h_prime(ctx, module, n, dim_cap);
  WStarBimodule h1 = h_prime(ctx, module, 1, dim_cap);
  WStarBimodule lhs = h1;
  for (int k = 2; k <= n; ++k) lhs = relative_tensor(lhs, h1, dim_cap).space;
  if (n == 1) {
    IsomorphismWitness w;
    w.dim_from = w.dim_to = h1.dim;
    w.matrix = Mat::Identity(h1.dim, h1.dim);
    return w;
  }
  auto w = find_bimodule_isomorphism(lhs, rhs);
  if (!w) {
    IsomorphismWitness fail;
    fail.dim_from = lhs.dim;
    fail.dim_to = rhs.dim;
    fail.gram_residual = 1.0;
    fail.isometry_residual = 1.0;
    return fail;
  }
  return *w;
}

// Cor: H_n(M,T) (x)^M H ~ M (x)_T ( ... (M (x)_T H)), by the direct n-fold
// spanning-vector map.
inline IsomorphismWitness verify_cor_6_5(const EquivalenceContext& ctx, const WStarBimodule& h,
                                         int n, int dim_cap = 4096, uint64_t seed = 0xc65) {
  if (n < 1) throw ValidationError("cor 6.5: n >= 1 required");
  // ms-side chain on H
  std::vector<TensorTSpace> chain;  // chain[k] = H_{k+1}
  for (int k = 0; k < n; ++k)
    chain.push_back(tensor_T(ctx.m, ctx.t, k == 0 ? h : chain.back().space, dim_cap));
  FusionSpace outer = relative_tensor(ctx.power_space(n), h, dim_cap);

  const int lin = ctx.m->lin_dim();
  const int l2d = ctx.l2->space.dim;
  std::vector<int> radices;
  for (int k = 0; k < n; ++k) {
    radices.push_back(lin);
    radices.push_back(l2d);
  }
  radices.push_back(h.dim);
  const int budget = 4 * std::max(outer.space.dim, chain.back().space.dim) + 32;
  detail::SymbolSet syms = detail::SymbolSet::grid(radices, budget, seed);

  Mat sh(outer.space.dim, static_cast<int>(syms.tuples.size()));
  Mat sk(chain.back().space.dim, static_cast<int>(syms.tuples.size()));
  for (size_t s = 0; s < syms.tuples.size(); ++s) {
    const auto& tup = syms.tuples[s];
    // lhs: ((x_1 (x) y_1) (x) ... (x) (x_n (x) y_n)) (x) xi
    Vec head = ctx.hmt_class(tup[2 * (n - 1)], tup[2 * (n - 1) + 1]);
    for (int k = n - 2; k >= 0; --k)
      head = ctx.power_embed(n - k, ctx.hmt_class(tup[2 * k], tup[2 * k + 1]), head);
    Vec ea = Vec::Zero(h.dim);
    ea(tup[2 * n]) = 1.0;
    sh.col(static_cast<int>(s)) = outer.embed(head, ea);
    // rhs: x_1 (x) ((y_1 x_2) (x) ( ... ((y_{n-1} x_n) (x) (y_n xi)) ...))
    Vec w = (*h.left)(ctx.l2->vectors[tup[2 * (n - 1) + 1]]) * ea;
    for (int k = n - 2; k >= 0; --k) {
      Vec prod = ctx.m->coords(ctx.l2->vectors[tup[2 * k + 1]] * ctx.m->basis()[tup[2 * (k + 1)]]);
      w = chain[n - 2 - k].embed_coeffs(prod, w);
    }
    sk.col(static_cast<int>(s)) = chain[n - 1].embed(tup[0], w);
  }
  return verify_isomorphism(sh, sk, outer.space, chain.back().space);
}

// E(n) as a concrete W*-M'-M'-bimodule: coordinates orthonormalize the
// intertwiner basis in the normalized trace; M' acts by insertion under the
// slots on the left and by composition on the right.
inline WStarBimodule intertwiner_space_bimodule(const MsDilation& ms, int n) {
  const auto& basis = ms.intertwiner_space(n);
  const int k = static_cast<int>(basis.size());
  const double amb = static_cast<double>(basis[0].rows());
  Mat gram(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) gram(i, j) = (basis[i].adjoint() * basis[j]).trace() / amb;
  QuotientMap q = quotient_completion(gram);
  SpanSolver solver(basis);
  const OperatorAlgebraBasis& mp = ms.mprime();
  auto action = [&](bool left_side) {
    std::vector<Mat> act;
    for (const Mat& x : mp.basis) {
      Mat coeff(k, k);
      for (int j = 0; j < k; ++j) {
        Mat img = left_side ? Mat(ms.lift(x, 0, n) * basis[j]) : Mat(basis[j] * x);
        double res = 0.0;
        coeff.col(j) = solver.coords(img, &res);
        if (res > 1e-6 * std::max(1.0, img.norm()))
          throw NumericalError("E(n) bimodule: action leaves the intertwiner space");
      }
      act.push_back(descend_operator(coeff, q));
    }
    return act;
  };
  WStarBimodule out;
  out.dim = q.rank;
  out.left = AlgebraAction(mp.basis, action(true), Mult::Homo, mp.units);
  out.right = AlgebraAction(mp.basis, action(false), Mult::Anti, mp.units);
  out.label = "E(" + std::to_string(n) + ")";
  return out;
}

struct EquivalenceCheck {
  std::string name;
  std::vector<int> dims;
  double residual = 0.0;
  bool pass = false;
};

struct MomentEntry {
  std::vector<std::pair<int, int>> word;  // (power, basis index)
  Mat bs_value;
  Mat ms_value;
  double difference = 0.0;
};

struct EquivalenceReport {
  std::vector<EquivalenceCheck> checks;
  std::vector<MomentEntry> moments;
  double max_moment_difference = 0.0;

  bool pass(double tol = kTolWitness, double moment_tol = kTolMoment) const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return max_moment_difference < moment_tol;
  }
};

// The §4.4 equivalence: carrier(E_n) ~ H_n(M,T), the E(n) <-> H'_n
// correspondence, and the moment cross-check between the two constructions.
inline EquivalenceReport verify_sec_4_4(const EquivalenceContext& ctx,
                                        const StandardModule& module, const BsDilation& bs,
                                        const MsDilation& ms,
                                        const std::vector<std::vector<std::pair<int, int>>>& words,
                                        double tol = kTolWitness, int dim_cap = 4096) {
  EquivalenceReport rep;
  const int n_max = ms.level();

  // (a) carrier(E_n) ~ H_n(M,T), by induction through the module tensors.
  {
    GnsPair gns = gns_bimodule(ctx.m, ctx.t, ctx.l2, dim_cap);
    Mat witness = Mat::Identity(ctx.hmt.space.dim, ctx.hmt.space.dim);
    HilbertBimodule en = gns.module;
    EquivalenceCheck c1{"carrier_E1_vs_H1", {en.carrier.dim, ctx.hmt.space.dim}, 0.0, true};
    rep.checks.push_back(c1);
    for (int n = 2; n <= n_max; ++n) {
      ModuleTensor mt = module_tensor(gns.module, en, dim_cap);
      // generator map (x_i, f_alpha) -> embed(x_i . 1, W_{n-1} f_alpha)
      const int k = gns.module.module_dim();
      const int fd = en.carrier.dim;
      Vec v1 = ctx.l2->element_to_vector(ctx.m->identity());
      Mat cols(ctx.power_space(n).dim, k * fd);
      for (int i = 0; i < k; ++i) {
        Vec hat = gns.module.module_basis[i] * v1;
        for (int a = 0; a < fd; ++a) {
          Vec ea = Vec::Zero(fd);
          ea(a) = 1.0;
          cols.col(i * fd + a) = ctx.power_embed(n, hat, witness * ea);
        }
      }
      Mat sym_src = mt.q.coords;  // classes of the same generators on the module side
      IsomorphismWitness w =
          verify_isomorphism(sym_src, cols, mt.module.carrier, ctx.power_space(n));
      rep.checks.push_back({"carrier_E" + std::to_string(n) + "_vs_H" + std::to_string(n),
                            {mt.module.carrier.dim, ctx.power_space(n).dim},
                            w.max_residual(),
                            w.verifies(tol)});
      witness = w.matrix;
      en = mt.module;
    }
  }

  // (b) dim E(n) = dim H'_n plus a bimodule unitary over M'.
  for (int n = 1; n <= n_max; ++n) {
    WStarBimodule hp = h_prime(ctx, module, n, dim_cap);
    const auto& en_basis = ms.intertwiner_space(n);
    WStarBimodule en_bimod = intertwiner_space_bimodule(ms, n);
    const bool dims_ok = static_cast<int>(en_basis.size()) == hp.dim;
    double residual = 1.0;
    bool pass = false;
    if (dims_ok) {
      auto w = find_bimodule_isomorphism(en_bimod, swap_slots(hp), tol);
      if (w) {
        residual = w->max_residual();
        pass = w->verifies(tol);
      }
    }
    rep.checks.push_back({"E(" + std::to_string(n) + ")_vs_Hprime",
                          {static_cast<int>(en_basis.size()), hp.dim},
                          residual,
                          pass && dims_ok});
  }

  // (c) moment table.
  for (const auto& word : words) {
    MomentEntry entry;
    entry.word = word;
    std::vector<std::pair<int, Mat>> lifted;
    for (const auto& [p, idx] : word) lifted.push_back({p, ctx.m->basis()[idx]});
    entry.bs_value = bs.moment(lifted);
    entry.ms_value = ms.moment(lifted);
    entry.difference = (entry.bs_value - entry.ms_value).norm();
    rep.max_moment_difference = std::max(rep.max_moment_difference, entry.difference);
    rep.moments.push_back(std::move(entry));
  }
  return rep;
}

}  // namespace mindil
