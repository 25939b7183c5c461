#include <gtest/gtest.h>

#include "mindil/cp_map.hpp"

using namespace mindil;

namespace {

Mat random_member(const AlgebraPtr& m, Rng& rng) {
  return m->project(rng.gaussian_matrix(m->ambient_dim(), m->ambient_dim()));
}

// Independent Choi assembly straight from the definition, used as the oracle
// for rank statements.
Mat block_choi_oracle(const AlgebraPtr& m, const std::function<Mat(const Mat&)>& t, int block_k,
                      int block_l) {
  const auto& blocks = m->blocks();
  std::vector<int> off(blocks.size(), 0);
  for (size_t k = 1; k < blocks.size(); ++k) off[k] = off[k - 1] + blocks[k - 1];
  const int nk = blocks[block_k], nl = blocks[block_l];
  Mat choi = Mat::Zero(nk * nl, nk * nl);
  for (int i = 0; i < nk; ++i)
    for (int j = 0; j < nk; ++j) {
      Mat e = Mat::Zero(m->ambient_dim(), m->ambient_dim());
      e(off[block_k] + i, off[block_k] + j) = 1.0;
      Mat img = t(e);
      for (int a = 0; a < nl; ++a)
        for (int b = 0; b < nl; ++b)
          choi(i * nl + a, j * nl + b) = img(off[block_l] + a, off[block_l] + b);
    }
  return choi;
}

}  // namespace

TEST(UcpMap, IdentityChannel) {
  auto m2 = make_algebra({2});
  UcpMap id(m2, {Mat::Identity(2, 2)});
  Rng rng(1);
  Mat x = random_member(m2, rng);
  EXPECT_NEAR((id.apply(x) - x).norm(), 0.0, 1e-14);
  ChoiReport rep = choi_validate(id);
  EXPECT_TRUE(rep.passes());
  Mat choi = block_choi_oracle(m2, [&](const Mat& v) { return id.apply(v); }, 0, 0);
  EXPECT_EQ(numeric_rank(choi), 1);
}

TEST(UcpMap, UnitaryConjugationIsUnital) {
  auto m2 = make_algebra({2});
  Mat u(2, 2);
  const double c = std::cos(0.3), s = std::sin(0.3);
  u << cx(c, 0), cx(s, 0), cx(-s, 0), cx(c, 0);
  UcpMap t(m2, {u});
  EXPECT_NEAR((t.apply(m2->identity()) - m2->identity()).norm(), 0.0, 1e-13);
}

TEST(UcpMap, StochasticActionOnDiagonal) {
  auto c2 = make_algebra({1, 1});
  Mat p(2, 2);
  p << 0.5, 0.5, 0.5, 0.5;
  UcpMap t = stochastic_ucp(c2, p);
  Mat x = Mat::Zero(2, 2);
  x(0, 0) = 1.0;  // (1, 0)
  Mat y = t.apply(x);
  EXPECT_NEAR(std::abs(y(0, 0) - cx(0.5, 0)), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(y(1, 1) - cx(0.5, 0)), 0.0, 1e-14);
}

TEST(UcpMap, RejectsNonUnitalKraus) {
  auto m2 = make_algebra({2});
  EXPECT_THROW(UcpMap(m2, {0.5 * Mat::Identity(2, 2)}), ValidationError);
}

TEST(UcpMap, RejectsClosureViolation) {
  // Generic Kraus on C ⊕ M2 does not preserve the block diagonal.
  auto m = make_algebra({1, 2});
  Rng rng(9);
  Mat g = rng.gaussian_matrix(3, 3);
  Mat s = g.adjoint() * g;
  Eigen::SelfAdjointEigenSolver<Mat> es(s);
  Mat k = g * es.operatorInverseSqrt();
  EXPECT_THROW(UcpMap(m, {k}), ValidationError);
}

TEST(ChoiValidate, DepolarizingChannel) {
  auto m2 = make_algebra({2});
  std::vector<Mat> kraus;
  for (const Mat& e : m2->basis()) kraus.push_back(e / std::sqrt(2.0));
  UcpMap t(m2, kraus);
  Rng rng(2);
  Mat x = random_member(m2, rng);
  EXPECT_NEAR((t.apply(x) - (x.trace() / 2.0) * m2->identity()).norm(), 0.0, 1e-13);
  ChoiReport rep = choi_validate(t);
  EXPECT_TRUE(rep.passes());
  Mat choi = block_choi_oracle(m2, [&](const Mat& v) { return t.apply(v); }, 0, 0);
  EXPECT_NEAR((choi - 0.5 * Mat::Identity(4, 4)).norm(), 0.0, 1e-13);
}

TEST(ChoiValidate, TransposeIsNotCp) {
  auto m2 = make_algebra({2});
  ChoiReport rep = choi_validate(transpose_map(m2));
  EXPECT_TRUE(rep.is_unital);
  EXPECT_FALSE(rep.is_cp);
  EXPECT_LT(rep.cp_min_eigenvalue, -0.5);
}

TEST(ChoiValidate, MultiBlockHandAuthored) {
  // Mix of two block-diagonal unitary conjugations on C ⊕ M2.
  auto m = make_algebra({1, 2});
  Mat u = Mat::Zero(3, 3), v = Mat::Zero(3, 3);
  u(0, 0) = std::polar(1.0, 0.4);
  const double c = std::cos(0.7), s = std::sin(0.7);
  u(1, 1) = c;
  u(1, 2) = s;
  u(2, 1) = -s;
  u(2, 2) = c;
  v(0, 0) = 1.0;
  v(1, 1) = std::polar(1.0, 1.1);
  v(2, 2) = std::polar(1.0, -0.3);
  const double w = 0.35;
  UcpMap t(m, {std::sqrt(1 - w) * u, std::sqrt(w) * v});
  EXPECT_TRUE(choi_validate(t).passes());
}

TEST(Power, ZeroAndOne) {
  auto m2 = make_algebra({2});
  UcpMap t = random_ucp(m2, 2, 7);
  Rng rng(3);
  Mat x = random_member(m2, rng);
  EXPECT_NEAR((power(t, 0).apply(x) - x).norm(), 0.0, 1e-13);
  EXPECT_NEAR((power(t, 1).apply(x) - t.apply(x)).norm(), 0.0, 1e-13);
}

TEST(Power, IdempotentStochastic) {
  auto c2 = make_algebra({1, 1});
  Mat p(2, 2);
  p << 0.5, 0.5, 0.5, 0.5;
  UcpMap t = stochastic_ucp(c2, p);
  UcpMap t2 = power(t, 2);
  for (const Mat& b : c2->basis())
    EXPECT_NEAR((t2.apply(b) - t.apply(b)).norm(), 0.0, 1e-13);
}

TEST(Power, SemigroupProperty) {
  auto m2 = make_algebra({2});
  UcpMap t = random_ucp(m2, 2, 11);
  Rng rng(4);
  for (int m = 0; m <= 4; ++m)
    for (int n = 0; n + m <= 4; ++n) {
      Mat x = random_member(m2, rng);
      Mat lhs = t.apply_n(x, m + n);
      Mat rhs = t.apply_n(t.apply_n(x, n), m);
      EXPECT_NEAR((lhs - rhs).norm(), 0.0, 1e-10);
    }
  // the Kraus-product representation agrees with iterated application
  Mat x = random_member(m2, rng);
  EXPECT_NEAR((power(t, 3).apply(x) - t.apply_n(x, 3)).norm(), 0.0, 1e-11);
}

TEST(UcpMap, PositivityAndKadisonSchwarz) {
  auto m2 = make_algebra({2});
  UcpMap t = random_ucp(m2, 2, 13);
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Mat x = random_member(m2, rng);
    Mat pos = t.apply(x.adjoint() * x);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (pos + pos.adjoint()));
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10);
    // T(x)* T(x) <= T(x* x)
    Mat gap = pos - t.apply(x).adjoint() * t.apply(x);
    Eigen::SelfAdjointEigenSolver<Mat> es2(0.5 * (gap + gap.adjoint()));
    EXPECT_GT(es2.eigenvalues().minCoeff(), -1e-10);
  }
}

TEST(RandomUcp, SingleKrausIsUnitary) {
  auto m2 = make_algebra({2});
  UcpMap t = random_ucp(m2, 1, 21);
  ASSERT_EQ(t.kraus().size(), 1u);
  const Mat& k = t.kraus()[0];
  EXPECT_NEAR((k.adjoint() * k - Mat::Identity(2, 2)).norm(), 0.0, 1e-12);
}

TEST(RandomUcp, Seed42PassesChoi) {
  auto m2 = make_algebra({2});
  UcpMap t = random_ucp(m2, 2, 42);
  EXPECT_TRUE(choi_validate(t).passes());
}

TEST(RandomUcp, CommutativeRowsSumToOne) {
  auto c3 = make_algebra({1, 1, 1});
  UcpMap t = random_ucp(c3, 1, 7);
  // rows summing to one is exactly unitality of the induced channel
  EXPECT_NEAR((t.apply(c3->identity()) - c3->identity()).norm(), 0.0, 1e-12);
  // determinism in the seed
  UcpMap t2 = random_ucp(c3, 1, 7);
  for (const Mat& b : c3->basis())
    EXPECT_NEAR((t.apply(b) - t2.apply(b)).norm(), 0.0, 0.0);
}

TEST(RandomUcp, MultiBlockRandomRejected) {
  auto m = make_algebra({2, 2});
  EXPECT_THROW(random_ucp(m, 2, 3), ValidationError);
}

TEST(Stochastic, NegativeEntryRejected) {
  Mat p(2, 2);
  p << 1.5, -0.5, -0.5, 1.5;
  EXPECT_THROW(stochastic_kraus(p), ValidationError);
}
