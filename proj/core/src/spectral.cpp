#include "agsfh/spectral.hpp"

#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "agsfh/error.hpp"

#ifdef AGSFH_HAVE_LAPACKE
#include <lapacke.h>
#endif

namespace agsfh {

Eigen::VectorXd update_lambda(const AnchorGraph& graph) { return graph.column_sums(); }

Eigen::VectorXd inverse_sqrt_degrees(const Eigen::VectorXd& degrees, double floor) {
  return degrees.unaryExpr([floor](double d) { return 1.0 / std::sqrt(std::max(d, floor)); });
}

Eigen::MatrixXd normalized_gram(const AnchorGraph& graph, const Eigen::VectorXd& degrees,
                                double floor) {
  if (degrees.size() != graph.anchors())
    throw InvalidArgument("degree vector has " + std::to_string(degrees.size()) +
                          " entries for a graph with " + std::to_string(graph.anchors()) + " anchors");
  if (!(floor > 0.0)) throw InvalidArgument("degree floor must be positive");
  const auto& s = graph.matrix();
  const Eigen::VectorXd scale = inverse_sqrt_degrees(degrees, floor);
  const double density = static_cast<double>(s.nonZeros()) /
                         std::max(1.0, static_cast<double>(s.rows()) * static_cast<double>(s.cols()));
  if (density > 0.05) {
    // Learned graphs are nearly dense; a dense rank update is much faster.
    const Eigen::MatrixXd scaled = Eigen::MatrixXd(s) * scale.asDiagonal();
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(s.cols(), s.cols());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
    return gram.selfadjointView<Eigen::Lower>();
  }
  Eigen::MatrixXd gram = Eigen::MatrixXd(s.transpose() * s);
  gram = scale.asDiagonal() * gram * scale.asDiagonal();
  // Symmetrize away round-off from the sparse product.
  return 0.5 * (gram + gram.transpose());
}

namespace {

/// The `count` largest eigenpairs of a symmetric matrix, largest first.
void top_eigenpairs(const Eigen::MatrixXd& gram, Index count, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  const Index p = gram.rows();
#ifdef AGSFH_HAVE_LAPACKE
  Eigen::MatrixXd work = gram;
  Eigen::VectorXd w(p);
  Eigen::MatrixXd z(p, count);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(count));
  lapack_int found = 0;
  const auto n = static_cast<lapack_int>(p);
  const lapack_int info =
      LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, work.data(), n, 0.0, 0.0, n - static_cast<lapack_int>(count) + 1,
                     n, 0.0, &found, w.data(), z.data(), n, support.data());
  if (info != 0 || found != count)
    throw NumericError("symmetric eigensolver failed on the " + std::to_string(p) + " x " + std::to_string(p) +
                       " normalized gram matrix (info " + std::to_string(info) + ")");
  values = w.head(count).reverse();
  vectors = z.rowwise().reverse();
#else
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success)
    throw NumericError("symmetric eigensolver failed on the " + std::to_string(p) + " x " + std::to_string(p) +
                       " normalized gram matrix");
  values = solver.eigenvalues().tail(count).reverse();
  vectors = solver.eigenvectors().rightCols(count).rowwise().reverse();
#endif
}

}  // namespace

void canonicalize_signs(Eigen::MatrixXd& vectors) {
  for (Index c = 0; c < vectors.cols(); ++c) {
    Index best = 0;
    double best_abs = -1.0;
    for (Index r = 0; r < vectors.rows(); ++r) {
      const double a = std::abs(vectors(r, c));
      if (a > best_abs) {
        best_abs = a;
        best = r;
      }
    }
    if (vectors.rows() > 0 && vectors(best, c) < 0.0) vectors.col(c) *= -1.0;
  }
}

SpectralState update_embedding(const Eigen::MatrixXd& gram, Index clusters) {
  const Index p = gram.rows();
  if (gram.cols() != p) throw InvalidArgument("gram matrix must be square");
  if (clusters < 1 || clusters > p)
    throw InvalidArgument("cannot extract " + std::to_string(clusters) + " eigenvectors from a " +
                          std::to_string(p) + " x " + std::to_string(p) + " matrix");
  SpectralState out;
  Eigen::VectorXd top;
  top_eigenpairs(gram, clusters, top, out.embedding);
  out.eigenvalues = (1.0 - top.array()).matrix();
  canonicalize_signs(out.embedding);
  return out;
}

Eigen::VectorXd laplacian_spectrum(const Eigen::MatrixXd& gram) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("symmetric eigensolver failed");
  return (1.0 - solver.eigenvalues().reverse().array()).matrix();
}

Index count_zero_eigenvalues(const Eigen::MatrixXd& gram, double threshold) {
  const Eigen::VectorXd spectrum = laplacian_spectrum(gram);
  return static_cast<Index>((spectrum.array() < threshold).count());
}

double laplacian_trace(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& embedding) {
  return embedding.squaredNorm() - (embedding.transpose() * gram * embedding).trace();
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(Index n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), Index{0});
  }
  Index find(Index x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      auto& p = parent_[static_cast<std::size_t>(x)];
      p = parent_[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  }
  void unite(Index a, Index b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }

 private:
  std::vector<Index> parent_;
};

}  // namespace

ComponentCount count_components(const AnchorGraph& graph, double threshold) {
  if (!(threshold >= 0.0)) throw InvalidArgument("edge threshold must be non-negative");
  const Index n = graph.rows();
  const Index p = graph.anchors();
  DisjointSets sets(n + p);
  std::vector<char> touched(static_cast<std::size_t>(n + p), 0);
  const auto& s = graph.matrix();
  for (Index i = 0; i < n; ++i)
    for (AnchorGraph::Storage::InnerIterator it(s, i); it; ++it)
      if (it.value() > threshold) {
        sets.unite(i, n + it.col());
        touched[static_cast<std::size_t>(i)] = 1;
        touched[static_cast<std::size_t>(n + it.col())] = 1;
      }
  ComponentCount out;
  for (Index v = 0; v < n + p; ++v) {
    if (!touched[static_cast<std::size_t>(v)]) {
      (v < n ? out.isolated_instances : out.isolated_anchors) += 1;
    } else if (sets.find(v) == v) {
      ++out.groups;
    }
  }
  return out;
}

}  // namespace agsfh
