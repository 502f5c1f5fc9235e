#include <gtest/gtest.h>

#include <array>
#include <random>
#include <sstream>

#include "agsfh/error.hpp"
#include "agsfh/retrieval.hpp"
#include "agsfh/training.hpp"
#include "oracles.hpp"

namespace agsfh {
namespace {

Eigen::MatrixXd gaussian(Index rows, Index cols, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(gen);
  return m;
}

Dataset small_data(std::uint64_t seed = 0, double noise = 0.1, int clusters = 4, Index count = 400) {
  SynthSpec spec;
  spec.clusters = clusters;
  spec.count = count;
  spec.dims = {8, 12};
  spec.noise = noise;
  spec.seed = seed;
  return synth_multimodal(spec);
}

Hyperparams small_hyper() {
  Hyperparams h;
  h.bits = 8;
  h.anchors = 24;
  h.clusters = 4;
  h.neighbors = 5;
  h.max_iter = 8;
  return h;
}

TEST(Hyperparams, Defaults) {
  const Hyperparams h;
  EXPECT_EQ(h.lambda, 300.0);
  EXPECT_EQ(h.gamma1, 0.01);
  EXPECT_EQ(h.gamma2, 10.0);
  EXPECT_EQ(h.gamma3, 0.01);
  EXPECT_EQ(h.clusters, 60);
  EXPECT_EQ(h.anchors, 900);
  EXPECT_EQ(h.neighbors, 45);
  EXPECT_EQ(h.max_iter, 50);
  EXPECT_EQ(h.ogm_iter, 200);
  EXPECT_EQ(h.ogm_tol, 1e-4);
  EXPECT_NO_THROW(h.validate());
}

TEST(Hyperparams, ValidationRejectsBadValues) {
  Hyperparams h;
  h.gamma2 = 0.0;
  EXPECT_THROW(h.validate(), InvalidArgument);
  h = Hyperparams{};
  h.bits = 0;
  EXPECT_THROW(h.validate(), InvalidArgument);
  h = Hyperparams{};
  h.lambda = -1.0;
  EXPECT_THROW(h.validate(), InvalidArgument);
  h = Hyperparams{};
  h.clusters = 901;
  EXPECT_THROW(h.validate(), InvalidArgument);
}

TEST(Objective, ZeroProjectionsGiveFullRegression) {
  std::mt19937_64 gen(1);
  const Index n = 30, p = 6, k = 5;
  const AnchorGraph s = AnchorGraph::from_dense(Eigen::MatrixXd::Constant(n, p, 1.0 / p));
  SpectralState spec;
  spec.degrees = update_lambda(s);
  spec.embedding = Eigen::MatrixXd::Identity(p, 2);
  const SignMatrix b = oracle::random_signs(k, n, gen);
  const SignMatrix bs = oracle::random_signs(k, p, gen);
  const std::vector<Eigen::MatrixXd> w{Eigen::MatrixXd::Zero(3, k), Eigen::MatrixXd::Zero(4, k)};
  const std::vector<Eigen::MatrixXd> x{gaussian(3, n, gen), gaussian(4, n, gen)};
  Hyperparams h;
  const ObjectiveTerms t = objective(s, s, spec, b, bs, w, x, h);
  EXPECT_DOUBLE_EQ(t.regression, h.lambda * 2 * k * n);
}

TEST(Objective, OnlyLaplacianWhenWeightsVanish) {
  std::mt19937_64 gen(2);
  const Index n = 25, p = 7;
  Eigen::MatrixXd dense = gaussian(n, p, gen).cwiseAbs();
  for (Index i = 0; i < n; ++i) dense.row(i) /= dense.row(i).sum();
  const AnchorGraph s = AnchorGraph::from_dense(dense);
  SpectralState spec;
  spec.degrees = update_lambda(s);
  spec.embedding = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(p, 3, gen)).householderQ() *
                   Eigen::MatrixXd::Identity(p, 3);
  Hyperparams h;
  h.gamma1 = h.gamma2 = h.gamma3 = h.lambda = 0.0;
  const std::vector<Eigen::MatrixXd> w{Eigen::MatrixXd::Zero(2, 4)}, x{gaussian(2, n, gen)};
  const ObjectiveTerms t =
      objective(s, s, spec, oracle::random_signs(4, n, gen), oracle::random_signs(4, p, gen), w, x, h);
  EXPECT_EQ(t.total(), t.laplacian);
  EXPECT_GE(t.laplacian, -1e-12);
}

TEST(Objective, MatchesDenseRecomputation) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 20, p = 6, k = 4;
    Eigen::MatrixXd sd = gaussian(n, p, gen).cwiseAbs(), ad = gaussian(n, p, gen).cwiseAbs();
    for (Index i = 0; i < n; ++i) {
      sd.row(i) /= sd.row(i).sum();
      ad.row(i) /= ad.row(i).sum();
    }
    SpectralState spec;
    spec.degrees = (gaussian(p, 1, gen).cwiseAbs().array() + 0.5).matrix();
    spec.embedding = gaussian(p, 2, gen);
    const SignMatrix b = oracle::random_signs(k, n, gen), bs = oracle::random_signs(k, p, gen);
    const std::vector<Eigen::MatrixXd> w{gaussian(3, k, gen), gaussian(5, k, gen)};
    const std::vector<Eigen::MatrixXd> x{gaussian(3, n, gen), gaussian(5, n, gen)};
    Hyperparams h;
    h.gamma1 = 0.3;
    h.gamma2 = 2.0;
    h.gamma3 = 0.7;
    h.lambda = 1.5;
    const ObjectiveTerms t =
        objective(AnchorGraph::from_dense(sd), AnchorGraph::from_dense(ad), spec, b, bs, w, x, h);
    const auto o = oracle::objective_dense(sd, ad, spec.degrees, h.degree_floor, spec.embedding, b.cast<double>(),
                                           bs.cast<double>(), w, x, h.gamma1, h.gamma2, h.gamma3, h.lambda);
    EXPECT_NEAR(t.laplacian, o.laplacian, 1e-9 * std::abs(o.laplacian));
    EXPECT_NEAR(t.approximation, o.approximation, 1e-9 * std::abs(o.approximation));
    EXPECT_NEAR(t.regularizer, o.regularizer, 1e-9 * std::abs(o.regularizer));
    EXPECT_NEAR(t.code_graph, o.code_graph, 1e-9 * std::abs(o.code_graph) + 1e-12);
    EXPECT_NEAR(t.regression, o.regression, 1e-9 * std::abs(o.regression));
    EXPECT_NEAR(t.total(), o.total(), 1e-9 * std::abs(o.total()));
  }
}

TEST(Objective, ShapeMismatchFails) {
  const AnchorGraph s = AnchorGraph::from_dense(Eigen::MatrixXd::Constant(4, 2, 0.5));
  SpectralState spec;
  spec.degrees = update_lambda(s);
  spec.embedding = Eigen::MatrixXd::Identity(2, 1);
  const SignMatrix b = SignMatrix::Ones(3, 4), bs = SignMatrix::Ones(3, 2);
  const std::vector<Eigen::MatrixXd> w{Eigen::MatrixXd::Zero(2, 3)}, x{Eigen::MatrixXd::Zero(2, 5)};
  EXPECT_THROW(objective(s, s, spec, b, bs, w, x, Hyperparams{}), InvalidArgument);
}

TEST(UpdateCodes, EntrywiseSign) {
  const AnchorGraph s = AnchorGraph::from_dense(Eigen::MatrixXd::Constant(2, 1, 1.0));
  Hyperparams h;
  h.gamma3 = 0.0;
  h.lambda = 1.0;
  // W^T X = [[0.5, -2], [-0.1, 3]] with X = I.
  Eigen::MatrixXd w(2, 2);
  w << 0.5, -0.1, -2.0, 3.0;
  const std::vector<Eigen::MatrixXd> ws{w}, xs{Eigen::MatrixXd::Identity(2, 2)};
  SignMatrix expected(2, 2);
  expected << 1, -1, -1, 1;
  EXPECT_EQ(update_codes(s, SignMatrix::Ones(2, 1), ws, xs, h), expected);
}

TEST(UpdateCodes, ZeroScoreIsPlusOne) {
  const AnchorGraph s = AnchorGraph::from_dense(Eigen::MatrixXd::Constant(3, 1, 1.0));
  Hyperparams h;
  h.gamma3 = 0.0;
  const std::vector<Eigen::MatrixXd> ws{Eigen::MatrixXd::Zero(2, 4)}, xs{Eigen::MatrixXd::Ones(2, 3)};
  EXPECT_EQ(update_codes(s, SignMatrix::Ones(4, 1), ws, xs, h), SignMatrix::Ones(4, 3));
}

TEST(UpdateCodes, BeatsRandomSignMatrices) {
  std::mt19937_64 gen(4);
  const Index n = 15, p = 5, k = 6;
  Eigen::MatrixXd sd = gaussian(n, p, gen).cwiseAbs();
  for (Index i = 0; i < n; ++i) sd.row(i) /= sd.row(i).sum();
  const AnchorGraph s = AnchorGraph::from_dense(sd);
  const SignMatrix bs = oracle::random_signs(k, p, gen);
  const std::vector<Eigen::MatrixXd> w{gaussian(3, k, gen), gaussian(4, k, gen)};
  const std::vector<Eigen::MatrixXd> x{gaussian(3, n, gen), gaussian(4, n, gen)};
  Hyperparams h;
  h.gamma3 = 5.0;
  h.lambda = 0.1;
  const Eigen::MatrixXd score = h.gamma3 * bs.cast<double>() * sd.transpose() +
                                2 * h.lambda * (w[0].transpose() * x[0] + w[1].transpose() * x[1]);
  const double best = (update_codes(s, bs, w, x, h).cast<double>().cwiseProduct(score)).sum();
  for (int t = 0; t < 1000; ++t)
    EXPECT_GE(best, oracle::random_signs(k, n, gen).cast<double>().cwiseProduct(score).sum());
}

TEST(UpdateAnchorCodes, PermutationAndPositivity) {
  std::mt19937_64 gen(5);
  const SignMatrix b = oracle::random_signs(5, 4, gen);
  EXPECT_EQ(update_anchor_codes(b, AnchorGraph::from_dense(Eigen::MatrixXd::Identity(4, 4))), b);
  Eigen::MatrixXd sd = gaussian(6, 3, gen).cwiseAbs();
  EXPECT_EQ(update_anchor_codes(SignMatrix::Ones(5, 6), AnchorGraph::from_dense(sd)), SignMatrix::Ones(5, 3));
}

TEST(UpdateAnchorCodes, BeatsRandomSignMatrices) {
  std::mt19937_64 gen(6);
  Eigen::MatrixXd sd = gaussian(20, 7, gen).cwiseAbs();
  const SignMatrix b = oracle::random_signs(8, 20, gen);
  const Eigen::MatrixXd bsd = b.cast<double>() * sd;
  const double best = update_anchor_codes(b, AnchorGraph::from_dense(sd)).cast<double>().cwiseProduct(bsd).sum();
  for (int t = 0; t < 1000; ++t)
    EXPECT_GE(best, oracle::random_signs(8, 7, gen).cast<double>().cwiseProduct(bsd).sum());
}

TEST(UpdateProjection, IdentityDesign) {
  std::mt19937_64 gen(7);
  const SignMatrix b = oracle::random_signs(3, 5, gen);
  const Eigen::MatrixXd w = update_projection(Eigen::MatrixXd::Identity(5, 5), b);
  EXPECT_LE((w - b.cast<double>().transpose()).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(UpdateProjection, PlantedModelIsRecovered) {
  std::mt19937_64 gen(8);
  const Eigen::MatrixXd x = gaussian(6, 200, gen);
  const Eigen::MatrixXd w0 = gaussian(6, 4, gen);
  const SignMatrix b = sign_of(w0.transpose() * x);
  const Eigen::MatrixXd w = update_projection(x, b);
  // Least squares on sign targets is not sign-consistent; most bits agree.
  const SignMatrix fitted = sign_of(w.transpose() * x);
  EXPECT_GE((fitted.array() == b.array()).count(), 0.9 * static_cast<double>(b.size()));
}

TEST(UpdateProjection, RankDeficientIsFiniteAndStationary) {
  std::mt19937_64 gen(9);
  Eigen::MatrixXd x = gaussian(5, 40, gen);
  x.row(3) = x.row(1);
  x.row(4).setZero();
  const SignMatrix b = oracle::random_signs(3, 40, gen);
  const Eigen::MatrixXd w = update_projection(x, b);
  EXPECT_TRUE(w.allFinite());
  const double eps = projection_ridge(x);
  const Eigen::MatrixXd bd = b.cast<double>();
  const Eigen::MatrixXd grad = 2.0 * (x * x.transpose() * w - x * bd.transpose()) + 2.0 * eps * w;
  EXPECT_LE(grad.norm(), 1e-8 * (x * bd.transpose()).norm());
}

TEST(BalancedCodes, RowsAreBalanced) {
  Rng rng(3);
  for (Index n : {1, 2, 7, 100}) {
    const SignMatrix m = balanced_codes(5, n, rng);
    for (Index r = 0; r < 5; ++r) EXPECT_LE(std::abs(m.row(r).cast<int>().sum()), 1);
  }
}

TEST(Trainer, ZeroIterationsReturnsInitialisation) {
  const Dataset d = small_data();
  Hyperparams h = small_hyper();
  h.max_iter = 0;
  const TrainResult r = train(d, h);
  EXPECT_TRUE(r.trace.entries.empty());
  EXPECT_EQ(r.model.codes.cols(), static_cast<Index>(d.split.training.size()));
  for (Index k = 0; k < h.bits; ++k) {
    EXPECT_LE(std::abs(r.model.codes.row(k).cast<int>().sum()), 1);
    EXPECT_LE(std::abs(r.model.anchor_codes.row(k).cast<int>().sum()), 1);
  }
  EXPECT_TRUE(is_sign_matrix(r.model.codes));
  EXPECT_TRUE(is_sign_matrix(r.model.anchor_codes));
}

TEST(Trainer, DefaultsAreRecordedInModel) {
  SynthSpec spec;
  spec.clusters = 4;
  spec.count = 1100;
  spec.dims = {6, 7};
  spec.query_fraction = 0.05;
  const Dataset d = synth_multimodal(spec);
  Hyperparams h;
  h.clusters = 4;
  h.max_iter = 0;
  const TrainResult r = train(d, h);
  EXPECT_EQ(r.model.hyper, h);
  EXPECT_EQ(r.model.hyper.anchors, 900);
  EXPECT_EQ(r.anchor_indices.size(), 900u);
}

TEST(Trainer, PerBlockDescent) {
  const Dataset d = small_data(3, 0.3);
  Trainer t(d, small_hyper());
  for (int it = 0; it < 4; ++it) {
    t.step_graph();
    t.step_degrees();
    double before = t.current_objective().total();
    const auto slack = [&](double v) { return 1e-9 * std::max(1.0, std::abs(v)); };
    t.step_embedding();
    double after = t.current_objective().total();
    EXPECT_LE(after, before + slack(before)) << "V-step, iteration " << it;
    before = after;
    t.step_codes();
    after = t.current_objective().total();
    EXPECT_LE(after, before + slack(before)) << "B-step, iteration " << it;
    before = after;
    t.step_anchor_codes();
    after = t.current_objective().total();
    EXPECT_LE(after, before + slack(before)) << "Bs-step, iteration " << it;
    before = after;
    t.step_projections();
    after = t.current_objective().total();
    EXPECT_LE(after, before + slack(before)) << "W-step, iteration " << it;
  }
}

TEST(Trainer, RowsOfLearnedGraphStayOnSimplex) {
  const Dataset d = small_data(4);
  Trainer t(d, small_hyper());
  t.iterate();
  const Eigen::VectorXd sums = t.graph().row_sums();
  EXPECT_LE((sums.array() - 1.0).abs().maxCoeff(), 1e-12);
  EXPECT_GE(t.graph().to_dense().minCoeff(), 0.0);
}

TEST(Trainer, DeterministicForFixedSeed) {
  const Dataset d = small_data(5);
  Hyperparams h = small_hyper();
  h.seed = 7;
  const TrainResult a = train(d, h), b = train(d, h);
  EXPECT_EQ(a.model, b.model);
  std::ostringstream sa, sb;
  write_model(sa, a.model);
  write_model(sb, b.model);
  EXPECT_EQ(sa.str(), sb.str());
  TrainOptions threaded;
  threaded.threads = 3;
  EXPECT_EQ(train(d, h, threaded).model, a.model);
}

TEST(Trainer, TraceIsFiniteAndBounded) {
  const Dataset d = small_data(6);
  Hyperparams h = small_hyper();
  h.tol = 0.0;
  h.max_iter = 5;
  std::ostringstream eig;
  TrainOptions options;
  options.eigenvalue_log = &eig;
  const TrainResult r = train(d, h, options);
  ASSERT_EQ(r.trace.entries.size(), 5u);
  EXPECT_EQ(r.trace.entries.front().normalized, 1.0);
  for (const auto& e : r.trace.entries) {
    EXPECT_TRUE(std::isfinite(e.objective));
    EXPECT_NEAR(e.objective, e.terms.total(), 1e-9 * std::abs(e.objective));
  }
  std::ostringstream csv;
  write_trace_csv(csv, r.trace);
  const std::string csv_text = csv.str(), eig_text = eig.str();
  EXPECT_EQ(std::count(csv_text.begin(), csv_text.end(), '\n'), 6);
  EXPECT_EQ(std::count(eig_text.begin(), eig_text.end(), '\n'), 5);
}

TEST(Trainer, ZeroNoiseTwoClustersIsSeparated) {
  const Dataset d = small_data(7, 0.0, 2);
  Hyperparams h = small_hyper();
  h.clusters = 2;
  const TrainResult r = train(d, h);
  // Training-set retrieval with the learned codes.
  std::vector<Index> train_ids = d.split.training;
  const Labels labels = d.labels->select(train_ids);
  const PackedCodes codes = PackedCodes::pack(r.model.codes);
  const RetrievalReport rep = evaluate(codes, labels, CodeIndex(codes, labels));
  EXPECT_EQ(rep.map, 1.0);
  // Zero-noise data repeats two points, so the learned graph has at most two
  // distinct rows.
  const Eigen::MatrixXd s = r.graph.to_dense();
  std::array<Index, 2> first{-1, -1};
  for (Index i = 0; i < s.rows(); ++i) {
    auto& f = first[static_cast<std::size_t>(train_ids[static_cast<std::size_t>(i)] % 2)];
    if (f < 0) f = i;
    EXPECT_LE((s.row(i) - s.row(f)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Trainer, RejectsInfeasibleConfigurations) {
  const Dataset d = small_data();
  Hyperparams h = small_hyper();
  h.anchors = 1000;
  EXPECT_THROW(train(d, h), InvalidArgument);
  h = small_hyper();
  h.neighbors = h.anchors;
  EXPECT_THROW(train(d, h), InvalidArgument);
}

TEST(ModelIo, RoundTripIsExact) {
  const Dataset d = small_data(8);
  const TrainResult r = train(d, small_hyper());
  std::stringstream buf;
  write_model(buf, r.model);
  const HashModel back = read_model(buf);
  EXPECT_EQ(back, r.model);
  std::stringstream again;
  write_model(again, back);
  EXPECT_EQ(again.str(), buf.str());

  std::stringstream slim;
  write_model(slim, r.model, false);
  const HashModel no_codes = read_model(slim);
  EXPECT_EQ(no_codes.codes.size(), 0);
  EXPECT_EQ(no_codes.projections, r.model.projections);
  EXPECT_EQ(buf.str().substr(0, 4), "AGSF");
}

TEST(ModelIo, CorruptInputFails) {
  const Dataset d = small_data(9);
  const TrainResult r = train(d, small_hyper());
  std::stringstream buf;
  write_model(buf, r.model);
  const std::string bytes = buf.str();
  std::istringstream truncated(bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(read_model(truncated), IoError);
  std::istringstream magic("XXXX" + bytes.substr(4));
  EXPECT_THROW(read_model(magic), IoError);
  EXPECT_THROW(load_model("/nonexistent/model.agsf"), IoError);
}

}  // namespace
}  // namespace agsfh
