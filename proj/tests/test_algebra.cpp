#include <gtest/gtest.h>

#include "mindil/algebra.hpp"
#include "mindil/wstar.hpp"

using namespace mindil;

TEST(Algebra, MakeAlgebra) {
  auto m2 = make_algebra({2});
  EXPECT_EQ(m2->lin_dim(), 4);
  EXPECT_EQ(m2->ambient_dim(), 2);

  auto c2 = make_algebra({1, 1});
  EXPECT_EQ(c2->lin_dim(), 2);
  EXPECT_EQ(c2->ambient_dim(), 2);

  auto cm2 = make_algebra({1, 2});
  EXPECT_EQ(cm2->lin_dim(), 5);
  EXPECT_EQ(cm2->ambient_dim(), 3);

  EXPECT_THROW(make_algebra({}), ValidationError);
  EXPECT_THROW(make_algebra({2, 0}), ValidationError);
}

TEST(Algebra, BasisIsMatrixUnits) {
  auto m = make_algebra({1, 2});
  EXPECT_EQ(static_cast<int>(m->basis().size()), m->lin_dim());
  // coords/from_coords round trip on a random member
  Rng rng(3);
  Mat a = m->project(rng.gaussian_matrix(3, 3));
  EXPECT_NEAR((m->from_coords(m->coords(a)) - a).norm(), 0.0, 1e-14);
  EXPECT_LT(m->membership_residual(a), 1e-14);
  Mat off = Mat::Zero(3, 3);
  off(0, 2) = 1.0;  // crosses the block boundary
  EXPECT_GT(m->membership_residual(off), 0.5);
}

TEST(Algebra, NormalizedTrace) {
  auto m2 = make_algebra({2});
  AlgebraElement one(m2, m2->identity());
  EXPECT_NEAR(std::abs(normalized_trace(one) - cx(1, 0)), 0.0, 1e-15);
  AlgebraElement e11(m2, m2->basis()[0]);
  EXPECT_NEAR(std::abs(normalized_trace(e11) - cx(0.5, 0)), 0.0, 1e-15);

  auto cm2 = make_algebra({1, 2});
  AlgebraElement e1(cm2, cm2->basis()[0]);
  EXPECT_NEAR(std::abs(normalized_trace(e1) - cx(1.0 / 3, 0)), 0.0, 1e-15);
}

TEST(Algebra, AlgebraElementValidation) {
  auto m = make_algebra({1, 2});
  Mat bad = Mat::Zero(3, 3);
  bad(0, 1) = 1.0;
  EXPECT_THROW(AlgebraElement(m, bad), ValidationError);
  Mat wrong = Mat::Zero(2, 2);
  EXPECT_THROW(AlgebraElement(m, wrong), ValidationError);
}

TEST(StandardFormL2, DimensionsAndActions) {
  for (auto blocks : std::vector<std::vector<int>>{{2}, {1, 1}, {1, 2}}) {
    auto m = make_algebra(blocks);
    StandardForm l2 = standard_form(m);
    EXPECT_EQ(l2.space.dim, m->lin_dim());
    EXPECT_LT(l2.space.commutation_residual(), 1e-12);
    EXPECT_LT(l2.space.left->homomorphism_residual(), 1e-12);
    EXPECT_LT(l2.space.right->homomorphism_residual(), 1e-12);
    // both actions are faithful
    for (const Mat& a : l2.space.left->act) EXPECT_GT(a.norm(), 1e-8);
  }
  // commutative case: left and right multiplications coincide
  auto c2 = make_algebra({1, 1});
  StandardForm l2 = standard_form(c2);
  for (size_t k = 0; k < l2.space.left->act.size(); ++k)
    EXPECT_NEAR((l2.space.left->act[k] - l2.space.right->act[k]).norm(), 0.0, 1e-13);
}

TEST(Commutant, FactorOnItsColumnSpace) {
  auto m2 = make_algebra({2});
  OperatorAlgebraBasis c = commutant(m2->basis(), 2);
  EXPECT_EQ(c.lin_dim(), 1);  // scalars
  EXPECT_LT(c.identity_residual(), 1e-10);
}

TEST(Commutant, CommutationTheoremOnL2) {
  auto m2 = make_algebra({2});
  StandardForm l2 = standard_form(m2);
  OperatorAlgebraBasis c = commutant(l2.space.left->act, l2.space.dim);
  EXPECT_EQ(c.lin_dim(), 4);
  EXPECT_TRUE(span_equal(c.basis, l2.space.right->act));
  EXPECT_LT(c.star_closure_residual(), 1e-9);
  EXPECT_LT(c.product_closure_residual(), 1e-9);
}

TEST(Commutant, SingleDiagonalMatrix) {
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 2.0;
  OperatorAlgebraBasis c = commutant({d}, 2);
  EXPECT_EQ(c.lin_dim(), 2);
}

TEST(Commutant, EmptyFamilyIsFullAlgebra) {
  OperatorAlgebraBasis c = commutant({}, 3);
  EXPECT_EQ(c.lin_dim(), 9);
}

TEST(Commutant, BicommutantTheorem) {
  Rng rng(17);
  for (int trial = 0; trial < 4; ++trial) {
    const int dim = 3 + static_cast<int>(rng.next_u64() % 3);  // 3..5
    std::vector<Mat> gens{rng.gaussian_matrix(dim, dim)};
    if (trial % 2) gens.push_back(rng.gaussian_matrix(dim, dim));
    std::vector<Mat> alg = generated_star_algebra(gens, dim);
    std::vector<Mat> star_closed = gens;
    for (const Mat& g : gens) star_closed.push_back(g.adjoint());
    OperatorAlgebraBasis c1 = commutant(star_closed, dim);
    OperatorAlgebraBasis c2 = commutant(c1.basis, dim);
    EXPECT_TRUE(span_equal(c2.basis, alg)) << "dim=" << dim << " trial=" << trial;
  }
}

TEST(CentralSupport, FactorGivesIdentity) {
  OperatorAlgebraBasis n = full_matrix_algebra_basis(3);
  Mat p = Mat::Zero(3, 3);
  p(0, 0) = 1.0;
  Mat c = central_support(p, n);
  EXPECT_NEAR((c - Mat::Identity(3, 3)).norm(), 0.0, 1e-9);
}

TEST(CentralSupport, DiagonalAlgebraKeepsP) {
  // N = C^2 embedded diagonally: center is everything
  std::vector<Mat> basis;
  for (int i = 0; i < 2; ++i) {
    Mat e = Mat::Zero(2, 2);
    e(i, i) = 1.0;
    basis.push_back(e);
  }
  OperatorAlgebraBasis n(2, basis);
  Mat p = basis[0];
  Mat c = central_support(p, n);
  EXPECT_NEAR((c - p).norm(), 0.0, 1e-9);
}

TEST(CentralSupport, ZeroProjection) {
  OperatorAlgebraBasis n = full_matrix_algebra_basis(2);
  Mat p = Mat::Zero(2, 2);
  EXPECT_NEAR(central_support(p, n).norm(), 0.0, 1e-12);
}

TEST(CentralSupport, MinimalityOverCentralProjections) {
  // N = C ⊕ M2 acting on C^3; p a rank-one projection inside the M2 block.
  auto m = make_algebra({1, 2});
  OperatorAlgebraBasis n(3, m->basis());
  Mat p = Mat::Zero(3, 3);
  p(1, 1) = 1.0;
  Mat c = central_support(p, n);
  // c must be the identity of the M2 block
  Mat want = Mat::Zero(3, 3);
  want(1, 1) = 1.0;
  want(2, 2) = 1.0;
  EXPECT_NEAR((c - want).norm(), 0.0, 1e-9);
  // c is central, dominates p, and is below any dominating central projection
  for (const Mat& b : n.basis) EXPECT_LT((c * b - b * c).norm(), 1e-9);
  EXPECT_LT((c * p - p).norm(), 1e-9);
}

TEST(SpanEqual, BasicCases) {
  auto m2 = make_algebra({2});
  EXPECT_TRUE(span_equal(m2->basis(), m2->basis()));
  std::vector<Mat> diag{m2->basis()[0], m2->basis()[3]};
  EXPECT_FALSE(span_equal(m2->basis(), diag));
  // a different basis of the same span
  std::vector<Mat> other;
  Rng rng(5);
  Mat mix = rng.gaussian_matrix(4, 4);
  for (int i = 0; i < 4; ++i) {
    Mat x = Mat::Zero(2, 2);
    for (int j = 0; j < 4; ++j) x += mix(i, j) * m2->basis()[j];
    other.push_back(x);
  }
  EXPECT_TRUE(span_equal(m2->basis(), other));
}
