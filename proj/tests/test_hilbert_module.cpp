#include <gtest/gtest.h>

#include "mindil/hilbert_module.hpp"

using namespace mindil;

namespace {

struct Fixture {
  AlgebraPtr m;
  std::shared_ptr<StandardForm> l2;
  UcpMap t;

  Fixture(std::vector<int> blocks, UcpMap tt)
      : m(tt.algebra()), l2(std::make_shared<StandardForm>(standard_form(tt.algebra()))), t(tt) {}
};

Fixture m2_random() {
  auto m = make_algebra({2});
  return Fixture({2}, random_ucp(m, 2, 42));
}

Fixture c2_stochastic() {
  auto m = make_algebra({1, 1});
  Mat p(2, 2);
  p << 0.7, 0.3, 0.2, 0.8;
  return Fixture({1, 1}, stochastic_ucp(m, p));
}

Mat random_member(const AlgebraPtr& m, Rng& rng) {
  return m->project(rng.gaussian_matrix(m->ambient_dim(), m->ambient_dim()));
}

}  // namespace

TEST(Gns, IdentityChannelGivesTrivialModule) {
  auto m = make_algebra({2});
  UcpMap id(m, {Mat::Identity(2, 2)});
  auto l2 = std::make_shared<StandardForm>(standard_form(m));
  GnsPair g = gns_bimodule(m, id, l2);
  EXPECT_EQ(g.module.carrier.dim, l2->space.dim);  // carrier ~ L2(M)
  EXPECT_EQ(g.module.module_dim(), m->lin_dim());  // module ~ M
  // cyclic is the identity's class: (xi, xi) = 1
  Mat gram = g.module.gram_element(g.cyclic, g.cyclic);
  EXPECT_NEAR((gram - m->identity()).norm(), 0.0, 1e-10);
}

TEST(Gns, ReproducesT) {
  for (Fixture f : {m2_random(), c2_stochastic()}) {
    GnsPair g = gns_bimodule(f.m, f.t, f.l2);
    Rng rng(14);
    for (int trial = 0; trial < 20; ++trial) {
      Mat a = random_member(f.m, rng);
      Mat got = g.module.gram_element(g.cyclic, g.module.left_mul(a, g.cyclic));
      EXPECT_NEAR((got - f.t.apply(a)).norm(), 0.0, 1e-10);
    }
    // span(M xi M) is the whole module
    std::vector<Mat> span;
    for (const Mat& a : f.m->basis())
      for (const Mat& b : f.m->basis())
        span.push_back(g.module.right_mul(g.module.left_mul(a, g.cyclic), b));
    EXPECT_TRUE(span_equal(span_reduce(span), g.module.module_basis));
  }
}

TEST(Gns, StochasticCarrierDim) {
  Fixture f = c2_stochastic();
  GnsPair g = gns_bimodule(f.m, f.t, f.l2);
  EXPECT_EQ(g.module.carrier.dim, 4);
}

TEST(HilbertModule, Def22AxiomsOnGram) {
  Fixture f = m2_random();
  GnsPair g = gns_bimodule(f.m, f.t, f.l2);
  const auto& e = g.module;
  Rng rng(15);
  Mat x = Mat::Zero(e.carrier.dim, e.l2->space.dim);
  Mat y = Mat::Zero(e.carrier.dim, e.l2->space.dim);
  for (int i = 0; i < e.module_dim(); ++i) {
    x += rng.gaussian_cx() * e.module_basis[i];
    y += rng.gaussian_cx() * e.module_basis[i];
  }
  Mat a = random_member(f.m, rng);
  // right linearity (x, y a) = (x, y) a
  EXPECT_NEAR((e.gram_element(x, e.right_mul(y, a)) - e.gram_element(x, y) * a).norm(), 0.0, 1e-9);
  // hermitian symmetry
  EXPECT_NEAR((e.gram_element(x, y).adjoint() - e.gram_element(y, x)).norm(), 0.0, 1e-9);
  // positivity and definiteness
  Mat gxx = e.gram_element(x, x);
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (gxx + gxx.adjoint()));
  EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10);
  EXPECT_GT(gxx.norm(), 1e-8);  // x != 0 => (x,x) != 0
  // Def 2.3 compatibility (x, a y) = (a* x, y)
  EXPECT_NEAR(
      (e.gram_element(x, e.left_mul(a, y)) - e.gram_element(e.left_mul(a.adjoint(), x), y)).norm(),
      0.0, 1e-9);
}

TEST(ModuleTensor, UnitModule) {
  Fixture f = m2_random();
  GnsPair g = gns_bimodule(f.m, f.t, f.l2);
  HilbertBimodule triv = trivial_module(f.m, f.l2);
  ModuleTensor et = module_tensor(g.module, triv);
  EXPECT_EQ(et.module.carrier.dim, g.module.carrier.dim);
  EXPECT_EQ(et.module.module_dim(), g.module.module_dim());
  auto w = find_bimodule_isomorphism(et.module.carrier, g.module.carrier);
  ASSERT_TRUE(w.has_value());
  EXPECT_TRUE(w->verifies(1e-9));
}

TEST(ModuleTensor, GnsPowersReproduceTn) {
  for (Fixture f : {m2_random(), c2_stochastic()}) {
    GnsPair g = gns_bimodule(f.m, f.t, f.l2);
    HilbertBimodule en = g.module;
    Mat cyc = g.cyclic;
    Rng rng(16);
    for (int n = 2; n <= 3; ++n) {
      ModuleTensor mt = module_tensor(g.module, en);
      Mat cyc_next = tensor_element(mt, g.module, g.cyclic, cyc);
      en = mt.module;
      cyc = cyc_next;
      for (int trial = 0; trial < 5; ++trial) {
        Mat a = random_member(f.m, rng);
        Mat got = en.gram_element(cyc, en.left_mul(a, cyc));
        EXPECT_NEAR((got - f.t.apply_n(a, n)).norm(), 0.0, 1e-9) << "n=" << n;
      }
    }
  }
}

TEST(ModuleTensor, AssociativityWitness) {
  Fixture f = c2_stochastic();
  GnsPair g = gns_bimodule(f.m, f.t, f.l2);
  ModuleTensor ab = module_tensor(g.module, g.module);
  ModuleTensor ab_c = module_tensor(ab.module, g.module);
  ModuleTensor bc = module_tensor(g.module, g.module);
  ModuleTensor a_bc = module_tensor(g.module, bc.module);
  EXPECT_EQ(ab_c.module.carrier.dim, a_bc.module.carrier.dim);
  auto w = find_bimodule_isomorphism(ab_c.module.carrier, a_bc.module.carrier);
  ASSERT_TRUE(w.has_value());
  EXPECT_TRUE(w->verifies(1e-9));
}

TEST(FromWstar, L2GivesM) {
  auto m = make_algebra({2});
  auto l2 = std::make_shared<StandardForm>(standard_form(m));
  HilbertBimodule x = from_wstar(l2->space, m, l2);
  EXPECT_EQ(x.module_dim(), m->lin_dim());
  // Hom(L2, L2)_M is exactly the left multiplication algebra
  EXPECT_TRUE(span_equal(x.module_basis, l2->space.left->act));
}

TEST(FromWstar, RoundTripOnRandomModule) {
  // H = carrier of the GNS module of a random channel
  Fixture f = m2_random();
  GnsPair g = gns_bimodule(f.m, f.t, f.l2);
  HilbertBimodule x = from_wstar(g.module.carrier, f.m, f.l2);
  // to_wstar(from_wstar(H)) is literally H; the content is that the module
  // realization spans the same intertwiners as the one built by gns_bimodule
  EXPECT_EQ(x.module_dim(), g.module.module_dim());
  EXPECT_TRUE(span_equal(x.module_basis, g.module.module_basis));
}

TEST(FromWstar, GnsOfIdentityIsL2) {
  auto m = make_algebra({2});
  UcpMap id(m, {Mat::Identity(2, 2)});
  auto l2 = std::make_shared<StandardForm>(standard_form(m));
  GnsPair g = gns_bimodule(m, id, l2);
  auto w = find_bimodule_isomorphism(to_wstar(g.module), l2->space);
  ASSERT_TRUE(w.has_value());
  EXPECT_TRUE(w->verifies(1e-9));
}

TEST(VnEmbedding, AdjointRelation) {
  Fixture f = m2_random();
  GnsPair g = gns_bimodule(f.m, f.t, f.l2);
  VnEmbedding v = vn_module_embedding(g.module, f.l2->space);
  Rng rng(17);
  for (int trial = 0; trial < 4; ++trial) {
    Vec cx_ = Vec::Zero(g.module.module_dim()), cy = Vec::Zero(g.module.module_dim());
    for (int i = 0; i < g.module.module_dim(); ++i) {
      cx_(i) = rng.gaussian_cx();
      cy(i) = rng.gaussian_cx();
    }
    Mat xi = Mat::Zero(g.module.carrier.dim, f.l2->space.dim);
    Mat eta = xi;
    for (int i = 0; i < g.module.module_dim(); ++i) {
      xi += cx_(i) * g.module.module_basis[i];
      eta += cy(i) * g.module.module_basis[i];
    }
    Mat lhs = l_op(v, g.module, xi).adjoint() * l_op(v, g.module, eta);
    Mat rhs = (*f.l2->space.left)(g.module.gram_element(xi, eta));
    EXPECT_NEAR((lhs - rhs).norm(), 0.0, 1e-9);
  }
}

TEST(VnEmbedding, TrivialModuleGivesUnitary) {
  auto m = make_algebra({2});
  auto l2 = std::make_shared<StandardForm>(standard_form(m));
  HilbertBimodule triv = trivial_module(m, l2);
  VnEmbedding v = vn_module_embedding(triv, l2->space);
  Mat l1 = l_op(v, triv, triv.module_basis[0] * 0 + (*l2->space.left)(m->identity()));
  EXPECT_EQ(v.space.dim, l2->space.dim);
  EXPECT_NEAR((l1.adjoint() * l1 - Mat::Identity(l2->space.dim, l2->space.dim)).norm(), 0.0, 1e-10);
  EXPECT_NEAR((l1 * l1.adjoint() - Mat::Identity(v.space.dim, v.space.dim)).norm(), 0.0, 1e-10);
}

TEST(VnEmbedding, GnsCompressionGivesT) {
  // E = E(M,T), xi = cyclic, H = L2(M): L_xi^* rho(a) L_xi = pi(T(a))
  for (Fixture f : {m2_random(), c2_stochastic()}) {
    GnsPair g = gns_bimodule(f.m, f.t, f.l2);
    VnEmbedding v = vn_module_embedding(g.module, f.l2->space);
    Mat lxi = l_op(v, g.module, g.cyclic);
    Rng rng(18);
    for (int trial = 0; trial < 5; ++trial) {
      Mat a = random_member(f.m, rng);
      Mat lhs = lxi.adjoint() * (*v.space.left)(a)*lxi;
      Mat rhs = (*f.l2->space.left)(f.t.apply(a));
      EXPECT_NEAR((lhs - rhs).norm(), 0.0, 1e-10);
    }
  }
}
