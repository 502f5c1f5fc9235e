#include "agsfh/training.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <string>

#include "agsfh/anchor_graph.hpp"
#include "parallel.hpp"

namespace agsfh {
namespace {

std::string shape(Index r, Index c) { return std::to_string(r) + " x " + std::to_string(c); }

template <typename A, typename B>
bool same_matrix(const A& a, const B& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

void check_blocks(std::span<const Eigen::MatrixXd> projections, std::span<const Eigen::MatrixXd> features,
                  Index bits, Index count) {
  if (projections.size() != features.size())
    throw InvalidArgument(std::to_string(projections.size()) + " projections for " +
                          std::to_string(features.size()) + " modalities");
  for (std::size_t m = 0; m < features.size(); ++m) {
    if (features[m].cols() != count)
      throw InvalidArgument("modality " + std::to_string(m) + " has " + std::to_string(features[m].cols()) +
                            " instances, codes cover " + std::to_string(count));
    if (projections[m].rows() != features[m].rows() || projections[m].cols() != bits)
      throw InvalidArgument("projection " + std::to_string(m) + " is " +
                            shape(projections[m].rows(), projections[m].cols()) + ", expected " +
                            shape(features[m].rows(), bits));
  }
}

}  // namespace

void Hyperparams::validate() const {
  auto fail = [](const std::string& what) { throw InvalidArgument("invalid hyper-parameter: " + what); };
  if (bits < 1) fail("bits must be >= 1");
  if (anchors < 2) fail("anchors must be >= 2");
  if (clusters < 1 || clusters > anchors) fail("clusters must lie in [1, anchors]");
  if (neighbors < 1 || neighbors >= anchors) fail("neighbours must satisfy 1 <= k < anchors");
  if (!(gamma1 >= 0.0) || !(gamma3 >= 0.0) || !(lambda >= 0.0)) fail("weights must be non-negative");
  if (!(gamma2 > 0.0)) fail("gamma2 must be positive");
  if (max_iter < 0) fail("max_iter must be >= 0");
  if (ogm_iter < 1) fail("ogm_iter must be >= 1");
  if (!(ogm_tol > 0.0)) fail("ogm_tol must be positive");
  if (!(tol >= 0.0)) fail("tol must be non-negative");
  if (!(degree_floor > 0.0)) fail("degree_floor must be positive");
  if (!(edge_threshold >= 0.0)) fail("edge_threshold must be non-negative");
}

void HashModel::validate() const {
  hyper.validate();
  if (means.size() != projections.size())
    throw InvalidArgument("model has " + std::to_string(means.size()) + " mean vectors for " +
                          std::to_string(projections.size()) + " projections");
  for (std::size_t m = 0; m < projections.size(); ++m) {
    if (projections[m].cols() != hyper.bits || projections[m].rows() != means[m].size())
      throw InvalidArgument("projection " + std::to_string(m) + " has inconsistent shape");
    if (!projections[m].allFinite()) throw NumericError("projection " + std::to_string(m) + " is non-finite");
  }
  if (anchor_codes.rows() != hyper.bits || !is_sign_matrix(anchor_codes))
    throw InvalidArgument("anchor codes must be a K x P sign matrix");
  if (codes.size() > 0) {
    if (codes.rows() != hyper.bits || !is_sign_matrix(codes))
      throw InvalidArgument("codes must be a K x N sign matrix");
    if (static_cast<Index>(training_indices.size()) != codes.cols())
      throw InvalidArgument("training indices do not match stored codes");
  }
}

bool HashModel::operator==(const HashModel& o) const {
  if (!(hyper == o.hyper) || means.size() != o.means.size() || projections.size() != o.projections.size())
    return false;
  for (std::size_t m = 0; m < means.size(); ++m)
    if (!same_matrix(means[m], o.means[m]) || !same_matrix(projections[m], o.projections[m])) return false;
  return same_matrix(anchor_codes, o.anchor_codes) && same_matrix(codes, o.codes) &&
         training_indices == o.training_indices;
}

void write_trace_csv(std::ostream& out, const TrainTrace& trace) {
  out << "iteration,objective,per_instance,normalized,laplacian,approximation,regularizer,"
         "code_graph,regression,components,isolated_instances,isolated_anchors,"
         "mean_ogm_iterations,seconds\n";
  const auto old = out.precision(17);
  for (const auto& e : trace.entries) {
    out << e.iteration << ',' << e.objective << ',' << e.per_instance << ',' << e.normalized << ','
        << e.terms.laplacian << ',' << e.terms.approximation << ',' << e.terms.regularizer << ','
        << e.terms.code_graph << ',' << e.terms.regression << ',' << e.components.groups << ','
        << e.components.isolated_instances << ',' << e.components.isolated_anchors << ','
        << e.mean_ogm_iterations << ',' << e.seconds << '\n';
  }
  out.precision(old);
}

ObjectiveTerms objective(const AnchorGraph& graph, const AnchorGraph& fused,
                         const SpectralState& spectral, const SignMatrix& codes,
                         const SignMatrix& anchor_codes, std::span<const Eigen::MatrixXd> projections,
                         std::span<const Eigen::MatrixXd> features, const Hyperparams& hyper) {
  const Index n = graph.rows();
  const Index p = graph.anchors();
  if (fused.rows() != n || fused.anchors() != p)
    throw InvalidArgument("fused graph is " + shape(fused.rows(), fused.anchors()) + ", learned graph is " +
                          shape(n, p));
  if (spectral.embedding.rows() != p || spectral.degrees.size() != p)
    throw InvalidArgument("spectral state does not match " + std::to_string(p) + " anchors");
  if (codes.cols() != n || anchor_codes.cols() != p || anchor_codes.rows() != codes.rows())
    throw InvalidArgument("codes " + shape(codes.rows(), codes.cols()) + " and anchor codes " +
                          shape(anchor_codes.rows(), anchor_codes.cols()) + " do not match the graph " +
                          shape(n, p));
  check_blocks(projections, features, codes.rows(), n);

  ObjectiveTerms t;
  // Tr(V^T (I - E) V) = ||V||^2 - ||S D^{-1/2} V||^2 without forming E.
  const Eigen::MatrixXd scaled =
      inverse_sqrt_degrees(spectral.degrees, hyper.degree_floor).asDiagonal() * spectral.embedding;
  t.laplacian = spectral.embedding.squaredNorm() - (graph.matrix() * scaled).squaredNorm();
  t.approximation = -hyper.gamma1 * fused.matrix().cwiseProduct(graph.matrix()).sum();
  t.regularizer = hyper.gamma2 * graph.matrix().squaredNorm();
  const Eigen::MatrixXd b = codes.cast<double>();
  const Eigen::MatrixXd bs = b * graph.matrix();  // K x P
  t.code_graph = -hyper.gamma3 * bs.cwiseProduct(anchor_codes.cast<double>()).sum();
  double residual = 0.0;
  for (std::size_t m = 0; m < features.size(); ++m)
    residual += (b - projections[m].transpose() * features[m]).squaredNorm();
  t.regression = hyper.lambda * residual;
  return t;
}

SignMatrix update_codes(const AnchorGraph& graph, const SignMatrix& anchor_codes,
                        std::span<const Eigen::MatrixXd> projections,
                        std::span<const Eigen::MatrixXd> features, const Hyperparams& hyper) {
  if (anchor_codes.cols() != graph.anchors())
    throw InvalidArgument("anchor codes cover " + std::to_string(anchor_codes.cols()) + " anchors, graph has " +
                          std::to_string(graph.anchors()));
  check_blocks(projections, features, anchor_codes.rows(), graph.rows());
  // (B_s S^T)^T = S B_s^T keeps the sparse operand on the left.
  Eigen::MatrixXd score =
      hyper.gamma3 * (graph.matrix() * anchor_codes.cast<double>().transpose()).transpose();
  for (std::size_t m = 0; m < features.size(); ++m)
    score.noalias() += 2.0 * hyper.lambda * projections[m].transpose() * features[m];
  return sign_of(score);
}

SignMatrix update_anchor_codes(const SignMatrix& codes, const AnchorGraph& graph) {
  if (codes.cols() != graph.rows())
    throw InvalidArgument("codes cover " + std::to_string(codes.cols()) + " instances, graph has " +
                          std::to_string(graph.rows()));
  return sign_of(codes.cast<double>() * graph.matrix());
}

double projection_ridge(const Eigen::MatrixXd& features) {
  if (features.rows() == 0) return 1.0;
  const double eps = 1e-6 * features.squaredNorm() / static_cast<double>(features.rows());
  return eps > 0.0 ? eps : 1.0;
}

Eigen::MatrixXd update_projection(const Eigen::MatrixXd& features, const SignMatrix& codes) {
  if (features.cols() != codes.cols())
    throw InvalidArgument("features have " + std::to_string(features.cols()) + " instances, codes have " +
                          std::to_string(codes.cols()));
  Eigen::MatrixXd normal = features * features.transpose();
  normal.diagonal().array() += projection_ridge(features);
  const Eigen::MatrixXd rhs = features * codes.cast<double>().transpose();
  Eigen::LLT<Eigen::MatrixXd> chol(normal);
  if (chol.info() != Eigen::Success) throw NumericError("ridge regression normal equations are not SPD");
  Eigen::MatrixXd w = chol.solve(rhs);
  // One step of iterative refinement tightens the residual on ill-conditioned data.
  w += chol.solve(rhs - normal * w);
  return w;
}

SignMatrix balanced_codes(Index bits, Index count, Rng& rng) {
  SignMatrix out(bits, count);
  std::vector<std::int8_t> row(static_cast<std::size_t>(count));
  const Index plus = (count + 1) / 2;
  for (Index k = 0; k < bits; ++k) {
    for (Index i = 0; i < count; ++i) row[static_cast<std::size_t>(i)] = i < plus ? 1 : -1;
    rng.shuffle(std::span<std::int8_t>(row));
    for (Index i = 0; i < count; ++i) out(k, i) = row[static_cast<std::size_t>(i)];
  }
  return out;
}

Trainer::Trainer(const Dataset& dataset, const Hyperparams& hyper, const TrainOptions& options)
    : hyper_(hyper), options_(options) {
  dataset.validate();
  hyper_.validate();
  training_indices_ = dataset.split.training;
  const Index n = static_cast<Index>(training_indices_.size());
  if (n < hyper_.anchors)
    throw InvalidArgument("training split has " + std::to_string(n) + " instances, fewer than the " +
                          std::to_string(hyper_.anchors) + " anchors requested");

  for (const auto& modality : dataset.modalities) {
    Eigen::MatrixXd x = select_columns(modality, training_indices_).data;
    Eigen::VectorXd mean = hyper_.center ? Eigen::VectorXd(x.rowwise().mean())
                                         : Eigen::VectorXd::Zero(x.rows());
    x.colwise() -= mean;
    features_.push_back(std::move(x));
    means_.push_back(std::move(mean));
  }

  AnchorSet anchors = sample_anchors(dataset, hyper_.anchors, hyper_.seed);
  anchor_indices_ = anchors.indices;
  for (std::size_t m = 0; m < features_.size(); ++m) {
    Eigen::MatrixXd t = anchors.anchors[m];
    t.colwise() -= means_[m];
    modality_graphs_.push_back(build_anchor_graph(features_[m], t, hyper_.neighbors, options_.threads));
  }
  fused_ = fuse_graphs(modality_graphs_, hyper_.renormalize_fusion);

  spectral_ = initial_laplacian_embedding(fused_, hyper_.clusters);
  spectral_.degrees = Eigen::VectorXd::Ones(hyper_.anchors);
  graph_ = AnchorGraph(n, hyper_.anchors);

  Rng rng(hyper_.seed + 1);
  for (const auto& x : features_) {
    Eigen::MatrixXd w(x.rows(), hyper_.bits);
    const double scale = 1.0 / std::sqrt(static_cast<double>(std::max<Index>(x.rows(), 1)));
    for (Index c = 0; c < w.cols(); ++c)
      for (Index r = 0; r < w.rows(); ++r) w(r, c) = scale * rng.normal();
    projections_.push_back(std::move(w));
  }
  codes_ = balanced_codes(hyper_.bits, n, rng);
  anchor_codes_ = balanced_codes(hyper_.bits, hyper_.anchors, rng);
}

void Trainer::step_graph() {
  const Index n = graph_.rows();
  const Index p = graph_.anchors();
  const Eigen::VectorXd scale = inverse_sqrt_degrees(spectral_.degrees, hyper_.degree_floor);
  const QuadraticTerm quadratic =
      QuadraticTerm::low_rank(scale.asDiagonal() * spectral_.embedding, hyper_.gamma2);
  const Eigen::MatrixXd coupling = anchor_codes_.cast<double>().transpose() * codes_.cast<double>();  // P x N
  const OgmOptions ogm{hyper_.ogm_tol, hyper_.ogm_iter, hyper_.momentum};

  std::vector<std::vector<AnchorGraph::Entry>> rows(static_cast<std::size_t>(n));
  std::vector<int> iterations(static_cast<std::size_t>(n), 0);
  detail::parallel_for(n, options_.threads, [&](Index begin, Index end) {
    for (Index j = begin; j < end; ++j) {
      Eigen::VectorXd linear = hyper_.gamma1 * fused_.dense_row(j) + hyper_.gamma3 * coupling.col(j);
      std::optional<Eigen::VectorXd> start;
      if (graph_learned_) start = graph_.dense_row(j);
      const OgmResult r = ogm_solve(ColumnQP(quadratic, std::move(linear)), start, ogm);
      auto& row = rows[static_cast<std::size_t>(j)];
      for (Index a = 0; a < p; ++a)
        if (r.solution(a) != 0.0) row.push_back({a, r.solution(a)});
      iterations[static_cast<std::size_t>(j)] = r.iterations;
    }
  });
  graph_ = AnchorGraph::from_rows(p, rows);
  graph_learned_ = true;
  double total = 0.0;
  for (int it : iterations) total += it;
  last_ogm_iterations_ = n > 0 ? total / static_cast<double>(n) : 0.0;
}

void Trainer::step_degrees() { spectral_.degrees = update_lambda(graph_); }

void Trainer::step_embedding() {
  SpectralState next =
      update_embedding(normalized_gram(graph_, spectral_.degrees, hyper_.degree_floor), hyper_.clusters);
  spectral_.embedding = std::move(next.embedding);
  spectral_.eigenvalues = std::move(next.eigenvalues);
}

void Trainer::step_codes() {
  codes_ = update_codes(graph_, anchor_codes_, projections_, features_, hyper_);
}

void Trainer::step_anchor_codes() { anchor_codes_ = update_anchor_codes(codes_, graph_); }

void Trainer::step_projections() {
  for (std::size_t m = 0; m < features_.size(); ++m) projections_[m] = update_projection(features_[m], codes_);
}

ObjectiveTerms Trainer::current_objective() const {
  return objective(graph_, fused_, spectral_, codes_, anchor_codes_, projections_, features_, hyper_);
}

const TraceEntry& Trainer::iterate() {
  const auto started = std::chrono::steady_clock::now();
  step_graph();
  step_degrees();
  step_embedding();
  step_codes();
  step_anchor_codes();
  step_projections();

  TraceEntry entry;
  entry.iteration = static_cast<int>(trace_.entries.size()) + 1;
  entry.terms = current_objective();
  entry.objective = entry.terms.total();
  entry.per_instance = entry.objective / static_cast<double>(std::max<Index>(graph_.rows(), 1));
  entry.normalized = trace_.entries.empty() ? 1.0 : entry.objective / trace_.entries.front().objective;
  entry.components = count_components(graph_, hyper_.edge_threshold);
  entry.mean_ogm_iterations = last_ogm_iterations_;
  entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  if (options_.eigenvalue_log) {
    auto& log = *options_.eigenvalue_log;
    const auto old = log.precision(17);
    log << entry.iteration;
    for (Index c = 0; c < spectral_.eigenvalues.size(); ++c) log << ',' << spectral_.eigenvalues(c);
    log << '\n';
    log.precision(old);
  }
  if (!std::isfinite(entry.objective)) {
    throw TrainingAborted("objective became non-finite at iteration " + std::to_string(entry.iteration),
                          trace_);
  }
  trace_.entries.push_back(entry);
  return trace_.entries.back();
}

void Trainer::run() {
  for (int t = 0; t < hyper_.max_iter; ++t) {
    const double previous = trace_.entries.empty() ? 0.0 : trace_.entries.back().objective;
    const TraceEntry& entry = iterate();
    if (trace_.entries.size() >= 2 &&
        std::abs(entry.objective - previous) < hyper_.tol * std::abs(previous)) {
      trace_.converged = true;
      break;
    }
  }
}

TrainResult Trainer::finish() && {
  TrainResult out;
  out.model.hyper = hyper_;
  out.model.means = std::move(means_);
  out.model.projections = std::move(projections_);
  out.model.anchor_codes = std::move(anchor_codes_);
  out.model.codes = std::move(codes_);
  out.model.training_indices = std::move(training_indices_);
  out.components = count_components(graph_, hyper_.edge_threshold);
  out.trace = std::move(trace_);
  out.anchor_indices = std::move(anchor_indices_);
  out.fused = std::move(fused_);
  out.graph = std::move(graph_);
  out.spectral = std::move(spectral_);
  return out;
}

TrainResult train(const Dataset& dataset, const Hyperparams& hyper, const TrainOptions& options) {
  Trainer trainer(dataset, hyper, options);
  trainer.run();
  return std::move(trainer).finish();
}

}  // namespace agsfh
