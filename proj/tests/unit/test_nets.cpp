#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gradcheck.hpp"
#include "npe/nets/optim.hpp"
#include "npe/nets/summary.hpp"

using namespace npe;
using namespace npe::nets;
using npe::testing::gradcheck;
using Mat = Matrix<double>;

namespace {

Mat random_matrix(Eigen::Index r, Eigen::Index c, RandomStream& rng, double sd = 1.0) {
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, sd);
  return m;
}

std::vector<Dataset> random_sets(std::vector<int> sizes, int d, RandomStream& rng) {
  std::vector<Dataset> out;
  for (int n : sizes) out.push_back(random_matrix(n, d, rng));
  return out;
}

}  // namespace

// --- positional embedding ---------------------------------------------------

TEST(PositionalEmbedding, ZeroInputAlternatesSinCos) {
  const Mat e = positional_embedding<double>(Eigen::VectorXd::Zero(1), 8);
  for (int j = 0; j < 8; ++j) EXPECT_DOUBLE_EQ(e(0, j), j % 2 == 0 ? 0.0 : 1.0);
}

TEST(PositionalEmbedding, PairsLieOnUnitCircle) {
  const Mat e = positional_embedding<double>(Eigen::VectorXd::LinSpaced(50, -3, 3), 32);
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    for (int j = 0; j < 16; ++j) EXPECT_NEAR(e(i, 2 * j) * e(i, 2 * j) + e(i, 2 * j + 1) * e(i, 2 * j + 1), 1.0, 1e-12);
  EXPECT_LE(e.cwiseAbs().maxCoeff(), 1.0);
}

TEST(PositionalEmbedding, NearbyNoiseLevelsEmbedNearby) {
  Eigen::VectorXd c(2);
  c << 0.25 * std::log(0.5), 0.25 * std::log(0.50001);
  const Mat e = positional_embedding<double>(c, 32);
  EXPECT_LT((e.row(0) - e.row(1)).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(PositionalEmbedding, OddWidthRejected) {
  EXPECT_THROW(positional_embedding<double>(Eigen::VectorXd::Zero(1), 7), ConfigError);
}

// --- dense layers -------------------------------------------------------------

TEST(Mlp, ZeroWeightsGiveZeroOutput) {
  RandomStream rng(1);
  Mlp<double> net("m", {3, 5, 2}, rng);
  for (auto& l : net.layers()) {
    l.weight.value.setZero();
    l.bias.value.setZero();
  }
  Tape<double> t(false);
  EXPECT_EQ(net(t.constant(random_matrix(4, 3, rng))).value(), Mat::Zero(4, 2));
}

TEST(Mlp, IdentityLayerPassesInputThrough) {
  RandomStream rng(2);
  Mlp<double> net("m", {3, 3}, rng);
  net.layers()[0].weight.value = Mat::Identity(3, 3);
  Tape<double> t(false);
  const Mat x = random_matrix(5, 3, rng);
  EXPECT_EQ(net(t.constant(x)).value(), x);
}

TEST(Mlp, MatchesHandRolledForwardPass) {
  RandomStream rng(3);
  Mlp<double> net("m", {4, 6, 3}, rng);
  for (auto& l : net.layers()) l.bias.value = random_matrix(1, l.out_dim(), rng);
  const Mat x = random_matrix(7, 4, rng);
  Tape<double> t(false);
  const Mat got = net(t.constant(x)).value();
  const auto& l0 = net.layers()[0];
  const auto& l1 = net.layers()[1];
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    std::vector<double> h(6);
    for (int i = 0; i < 6; ++i) {
      double a = l0.bias.value(0, i);
      for (int j = 0; j < 4; ++j) a += l0.weight.value(i, j) * x(r, j);
      h[i] = a / (1.0 + std::exp(-a));
    }
    for (int i = 0; i < 3; ++i) {
      double a = l1.bias.value(0, i);
      for (int j = 0; j < 6; ++j) a += l1.weight.value(i, j) * h[j];
      EXPECT_NEAR(got(r, i), a, 1e-6);
    }
  }
}

TEST(Mlp, WrongInputWidthThrows) {
  RandomStream rng(4);
  Mlp<double> net("m", {3, 2}, rng);
  Tape<double> t;
  EXPECT_THROW(net(t.constant(Mat::Zero(2, 4))), ShapeError);
}

TEST(Mlp, ZeroInitOutputLayer) {
  RandomStream rng(5);
  Mlp<float> net("m", {3, 8, 2}, rng, Activation::silu, Activation::identity, true);
  EXPECT_EQ(net.layers().back().weight.value.norm(), 0.0f);
  EXPECT_GT(net.layers().front().weight.value.norm(), 0.0f);
}

// --- reverse mode ---------------------------------------------------------------

TEST(Autodiff, SquaredNormOfLinearMapHasClosedFormGradient) {
  RandomStream rng(6);
  Parameter<double> w("w", random_matrix(3, 4, rng));
  Parameter<double> b("b", Mat::Zero(1, 3));
  const Mat x = random_matrix(1, 4, rng);
  Tape<double> t;
  t.backward(ad::sum(ad::square(ad::linear(t.constant(x), t.param(w), t.param(b)))));
  const Mat expected = 2.0 * (w.value * x.transpose()) * x;
  EXPECT_LT((w.grad - expected).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Autodiff, EveryOpMatchesCentralDifferences) {
  RandomStream rng(7);
  Parameter<double> a("a", random_matrix(4, 3, rng));
  Parameter<double> b("b", random_matrix(4, 3, rng));
  Parameter<double> row("row", random_matrix(1, 3, rng));
  Parameter<double> col("col", random_matrix(4, 1, rng));
  Parameter<double> s("s", random_matrix(1, 1, rng));
  Parameter<double> m("m", random_matrix(3, 2, rng));
  ParamList<double> params{&a, &b, &row, &col, &s, &m};
  auto loss = [&](Tape<double>& t) {
    auto A = t.param(a), B = t.param(b), R = t.param(row), C = t.param(col), Sc = t.param(s), M = t.param(m);
    auto e1 = ad::silu(A + R) * ad::tanh(B - C);
    auto e2 = ad::sigmoid(A * Sc) + ad::exp(ad::scale(B, 0.3)) - ad::atan(A * R);
    auto e3 = ad::matmul(e1, M);
    auto e4 = ad::concat_cols<double>({e3, ad::slice_cols(e2, 1, 2), ad::gather_cols(e1, {2, 0, 0})});
    auto e5 = ad::segment_sum(e4, {0, 1, 4}) * Sc;
    auto e6 = ad::gather_rows(e4, {3, -1, 0, 3});
    auto e7 = ad::row_sum(ad::square(e6)) * C;
    return ad::sum(ad::square(e5)) + ad::mean(e7) + ad::sum(-e2);
  };
  const auto r = gradcheck(params, loss);
  EXPECT_LT(r.worst_rel, 1e-3) << r.where;
}

TEST(Autodiff, DetachedParameterGetsZeroGradientAndIsReported) {
  RandomStream rng(8);
  Parameter<double> used("used", random_matrix(2, 2, rng));
  Parameter<double> unused("unused", random_matrix(2, 2, rng));
  Tape<double> t;
  auto u = t.param(used);
  auto v = t.param(unused);
  (void)v;
  t.backward(ad::sum(ad::square(u)));
  EXPECT_EQ(unused.grad, Mat::Zero(2, 2));
  const auto detached = t.detached();
  ASSERT_EQ(detached.size(), 1u);
  EXPECT_EQ(detached.front()->name, "unused");
}

TEST(Autodiff, InferenceTapeRecordsNoGradients) {
  Parameter<double> p("p", Mat::Ones(2, 2));
  Tape<double> t(false);
  auto y = ad::sum(t.param(p));
  EXPECT_FALSE(t.needs_grad(y));
}

TEST(Autodiff, BroadcastMismatchThrows) {
  Tape<double> t;
  EXPECT_THROW(t.constant(Mat::Zero(2, 3)) + t.constant(Mat::Zero(3, 2)), ShapeError);
}

// --- DeepSet --------------------------------------------------------------------

TEST(DeepSet, OutputInvariantToRowPermutation) {
  RandomStream rng(9);
  DeepSet<float> net(3, {32, 32, 16}, rng);
  Dataset x = random_matrix(60, 3, rng);
  Tape<float> t0(false);
  const Matrix<float> ref = net(t0, std::span<const Dataset>(&x, 1)).value();
  std::vector<int> perm(60);
  std::iota(perm.begin(), perm.end(), 0);
  for (int rep = 0; rep < 100; ++rep) {
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    Dataset y(60, 3);
    for (int i = 0; i < 60; ++i) y.row(i) = x.row(perm[i]);
    Tape<float> t(false);
    const Matrix<float> out = net(t, std::span<const Dataset>(&y, 1)).value();
    ASSERT_LT((out - ref).cwiseAbs().maxCoeff(), 1e-6f);
  }
}

TEST(DeepSet, SingleRowIsFinite) {
  RandomStream rng(10);
  DeepSet<double> net(2, {16, 16, 8}, rng);
  Dataset x = random_matrix(1, 2, rng);
  Tape<double> t(false);
  const Mat out = net(t, std::span<const Dataset>(&x, 1)).value();
  EXPECT_EQ(out.cols(), 8);
  EXPECT_TRUE(out.allFinite());
}

TEST(DeepSet, OutputWidthIndependentOfSetSize) {
  RandomStream rng(11);
  DeepSet<float> net(2, {16, 16, 8}, rng);
  auto sets = random_sets({1, 7, 50, 200}, 2, rng);
  Tape<float> t(false);
  const auto out = net(t, sets).value();
  EXPECT_EQ(out.rows(), 4);
  EXPECT_EQ(out.cols(), 8);
}

TEST(DeepSet, DuplicatingRowsActsOnlyThroughPoolAndCount) {
  // Duplication leaves the standardized rows, mean and std unchanged, so it is
  // equivalent to doubling the pool and count scales on the original set.
  RandomStream rng(12);
  DeepSet<double> net(2, {16, 16, 8}, rng);
  Dataset x = random_matrix(9, 2, rng);
  Dataset xx(18, 2);
  xx << x, x;
  Tape<double> t1(false);
  const Mat dup = net(t1, std::span<const Dataset>(&xx, 1)).value();
  ParamList<double> params;
  net.collect(params);
  for (auto* p : params)
    if (p->name == "summary.pool_scale" || p->name == "summary.n_scale") p->value *= 2.0;
  Tape<double> t2(false);
  const Mat scaled = net(t2, std::span<const Dataset>(&x, 1)).value();
  EXPECT_LT((dup - scaled).cwiseAbs().maxCoeff(), 1e-10);
  Tape<double> t3(false);
  for (auto* p : params)
    if (p->name == "summary.pool_scale" || p->name == "summary.n_scale") p->value /= 2.0;
  EXPECT_GT((net(t3, std::span<const Dataset>(&x, 1)).value() - dup).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(DeepSet, GradientsMatchCentralDifferences) {
  RandomStream rng(13);
  DeepSet<double> net(2, {6, 5, 3}, rng);
  auto sets = random_sets({4, 1, 6}, 2, rng);
  ParamList<double> params;
  net.collect(params);
  const auto r = gradcheck(params, [&](Tape<double>& t) { return ad::sum(ad::square(net(t, sets))); });
  EXPECT_LT(r.worst_rel, 1e-3) << r.where;
}

// --- BiLSTM -----------------------------------------------------------------------

namespace {

struct LstmOracle {
  Eigen::MatrixXd w;
  Eigen::RowVectorXd b;
  int hidden;

  std::pair<Eigen::RowVectorXd, Eigen::RowVectorXd> step(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& h,
                                                         const Eigen::RowVectorXd& c) const {
    Eigen::RowVectorXd in(x.size() + h.size());
    in << x, h;
    const Eigen::RowVectorXd z = in * w.transpose() + b;
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    Eigen::RowVectorXd hn(hidden), cn(hidden);
    for (int k = 0; k < hidden; ++k) {
      const double i = sig(z[k]), f = sig(z[hidden + k]), g = std::tanh(z[2 * hidden + k]),
                   o = sig(z[3 * hidden + k]);
      cn[k] = f * c[k] + i * g;
      hn[k] = o * std::tanh(cn[k]);
    }
    return {hn, cn};
  }
};

}  // namespace

TEST(BiLstm, MatchesHandUnrolledRecurrence) {
  RandomStream rng(14);
  BiLstm<double> net(2, {5, 4}, rng);
  Dataset x = random_matrix(3, 2, rng);
  Tape<double> t(false);
  const Mat out = net(t, std::span<const Dataset>(&x, 1)).value();

  const auto& lift = net.lift();
  Eigen::MatrixXd lifted = x * lift.weight.value.transpose();
  lifted.rowwise() += lift.bias.value.row(0);
  lifted = lifted.array() / (1.0 + (-lifted.array()).exp());

  auto unroll = [&](LstmCell<double>& cell, bool reverse) {
    LstmOracle o{cell.gates().weight.value, cell.gates().bias.value.row(0), 4};
    Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(4), c = Eigen::RowVectorXd::Zero(4);
    for (int s = 0; s < 3; ++s) std::tie(h, c) = o.step(lifted.row(reverse ? 2 - s : s), h, c);
    return h;
  };
  const Eigen::RowVectorXd fwd = unroll(net.forward_cell(), false);
  const Eigen::RowVectorXd bwd = unroll(net.backward_cell(), true);
  EXPECT_LT((out.leftCols(4) - fwd).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((out.rightCols(4) - bwd).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(BiLstm, SingleStepIsFinite) {
  RandomStream rng(15);
  BiLstm<float> net(1, {8, 8}, rng);
  Dataset x = random_matrix(1, 1, rng);
  Tape<float> t(false);
  const auto out = net(t, std::span<const Dataset>(&x, 1)).value();
  EXPECT_EQ(out.cols(), 16);
  EXPECT_TRUE(out.allFinite());
}

TEST(BiLstm, ConstantSequenceEqualsItsReverse) {
  RandomStream rng(16);
  BiLstm<double> net(2, {8, 8}, rng);
  Dataset x = Eigen::MatrixXd::Constant(10, 2, 0.7);
  Dataset r = x.colwise().reverse();
  Tape<double> t(false);
  EXPECT_EQ(net(t, std::span<const Dataset>(&x, 1)).value(), net(t, std::span<const Dataset>(&r, 1)).value());
}

TEST(BiLstm, ReversingGenericSequenceChangesOutput) {
  RandomStream rng(17);
  BiLstm<double> net(2, {8, 8}, rng);
  Dataset x = random_matrix(10, 2, rng);
  Dataset r = x.colwise().reverse();
  Tape<double> t(false);
  EXPECT_GT((net(t, std::span<const Dataset>(&x, 1)).value() - net(t, std::span<const Dataset>(&r, 1)).value())
                .cwiseAbs()
                .maxCoeff(),
            1e-6);
}

TEST(BiLstm, PaddingDoesNotLeakAcrossBatch) {
  RandomStream rng(18);
  BiLstm<double> net(2, {8, 8}, rng);
  auto sets = random_sets({5, 12, 1}, 2, rng);
  Tape<double> t(false);
  const Mat batched = net(t, sets).value();
  for (std::size_t i = 0; i < sets.size(); ++i) {
    Tape<double> ti(false);
    const Mat alone = net(ti, std::span<const Dataset>(&sets[i], 1)).value();
    EXPECT_LT((batched.row(static_cast<Eigen::Index>(i)) - alone).cwiseAbs().maxCoeff(), 1e-12) << i;
  }
}

TEST(BiLstm, GradientsMatchCentralDifferences) {
  RandomStream rng(19);
  BiLstm<double> net(2, {3, 3}, rng);
  auto sets = random_sets({4, 2}, 2, rng);
  ParamList<double> params;
  net.collect(params);
  const auto r = gradcheck(params, [&](Tape<double>& t) { return ad::sum(ad::square(net(t, sets))); });
  EXPECT_LT(r.worst_rel, 1e-3) << r.where;
}

TEST(Encoder, FlattensFixedShapeDataWithoutSummary) {
  RandomStream rng(20);
  Encoder<double> enc(SummaryKind::none, 3, 1, rng);
  std::vector<Dataset> sets{Eigen::RowVector3d(1, 2, 3), Eigen::RowVector3d(4, 5, 6)};
  Tape<double> t(false);
  const Mat out = enc(t, sets).value();
  EXPECT_EQ(out(1, 2), 6.0);
  std::vector<Dataset> bad{Eigen::MatrixXd::Zero(2, 3)};
  EXPECT_THROW(enc(t, bad), ShapeError);
}

// --- Adam ---------------------------------------------------------------------------

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Parameter<double> p("p", Mat::Constant(2, 2, 3.0));
  Adam<double> opt;
  for (int i = 0; i < 10; ++i) opt.step({&p});
  EXPECT_EQ(p.value, Mat::Constant(2, 2, 3.0));
}

TEST(Adam, ConstantGradientStepsApproachLearningRateTimesSign) {
  Parameter<double> p("p", Mat::Zero(1, 2));
  Adam<double> opt({1e-3, 0.9, 0.999, 1e-8});
  p.grad << 0.5, -2.0;
  Mat before;
  for (int i = 0; i < 1000; ++i) {
    before = p.value;
    opt.step({&p});
  }
  const Mat delta = p.value - before;
  EXPECT_NEAR(delta(0, 0), -1e-3, 1e-8);
  EXPECT_NEAR(delta(0, 1), 1e-3, 1e-8);
}

TEST(Adam, NonFiniteGradientAbortsWithoutUpdate) {
  Parameter<double> p("p", Mat::Ones(1, 2));
  Parameter<double> q("q", Mat::Ones(1, 2));
  p.grad.setConstant(1.0);
  q.grad(0, 1) = std::nan("");
  Adam<double> opt;
  EXPECT_THROW(opt.step({&p, &q}), NumericsError);
  EXPECT_EQ(p.value, Mat::Ones(1, 2));
  EXPECT_EQ(opt.steps(), 0);
}

TEST(Adam, RepeatedRunsAreBitIdentical) {
  auto run = [] {
    RandomStream rng(21);
    Parameter<float> p("p", Matrix<float>::Zero(3, 3));
    Adam<float> opt;
    for (int i = 0; i < 50; ++i) {
      for (Eigen::Index k = 0; k < 9; ++k) p.grad.data()[k] = static_cast<float>(rng.normal());
      opt.step({&p});
    }
    return p.value;
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, CosineScheduleEndpoints) {
  EXPECT_DOUBLE_EQ(cosine_learning_rate(1e-3, 0, 100), 1e-3);
  EXPECT_NEAR(cosine_learning_rate(1e-3, 50, 100), 5e-4, 1e-15);
  EXPECT_NEAR(cosine_learning_rate(1e-3, 100, 100), 0.0, 1e-18);
  EXPECT_DOUBLE_EQ(cosine_learning_rate(1e-3, 7, 0), 1e-3);
}
