#include "agsfh/anchor_graph.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "agsfh/error.hpp"
#include "parallel.hpp"

namespace agsfh {

AnchorGraph build_anchor_graph(const Eigen::MatrixXd& features, const Eigen::MatrixXd& anchors,
                               Index k, int threads) {
  const Index n = features.cols();
  const Index p = anchors.cols();
  if (features.rows() != anchors.rows())
    throw InvalidArgument("anchor dimension " + std::to_string(anchors.rows()) +
                          " does not match feature dimension " + std::to_string(features.rows()));
  if (k < 1 || k >= p)
    throw InvalidArgument("neighbour count k=" + std::to_string(k) + " must satisfy 1 <= k < P=" +
                          std::to_string(p));

  std::vector<std::vector<AnchorGraph::Entry>> rows(static_cast<std::size_t>(n));
  detail::parallel_for(n, threads, [&](Index begin, Index end) {
    std::vector<double> dist(static_cast<std::size_t>(p));
    std::vector<Index> order(static_cast<std::size_t>(p));
    for (Index i = begin; i < end; ++i) {
      const auto x = features.col(i);
      for (Index j = 0; j < p; ++j) dist[static_cast<std::size_t>(j)] = (x - anchors.col(j)).squaredNorm();
      std::iota(order.begin(), order.end(), Index{0});
      std::partial_sort(order.begin(), order.begin() + k + 1, order.end(), [&](Index a, Index b) {
        const double da = dist[static_cast<std::size_t>(a)];
        const double db = dist[static_cast<std::size_t>(b)];
        return da < db || (da == db && a < b);
      });
      const double far = dist[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
      double near_sum = 0.0;
      for (Index j = 0; j < k; ++j) near_sum += dist[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])];
      const double denom = static_cast<double>(k) * far - near_sum;

      auto& row = rows[static_cast<std::size_t>(i)];
      row.reserve(static_cast<std::size_t>(k));
      for (Index j = 0; j < k; ++j) {
        const Index a = order[static_cast<std::size_t>(j)];
        const double w = denom > 0.0 ? (far - dist[static_cast<std::size_t>(a)]) / denom
                                     : 1.0 / static_cast<double>(k);
        row.push_back({a, w});
      }
      std::sort(row.begin(), row.end(), [](const auto& l, const auto& r) { return l.anchor < r.anchor; });
    }
  });
  return AnchorGraph::from_rows(p, rows);
}

AnchorGraph fuse_graphs(std::span<const AnchorGraph> graphs, bool renormalize) {
  if (graphs.empty()) throw InvalidArgument("cannot fuse an empty list of graphs");
  const Index n = graphs.front().rows();
  const Index p = graphs.front().anchors();
  AnchorGraph::Storage fused = graphs.front().matrix();
  for (std::size_t m = 1; m < graphs.size(); ++m) {
    if (graphs[m].rows() != n || graphs[m].anchors() != p)
      throw InvalidArgument("graph " + std::to_string(m) + " is " + std::to_string(graphs[m].rows()) +
                            " x " + std::to_string(graphs[m].anchors()) + ", expected " +
                            std::to_string(n) + " x " + std::to_string(p));
    fused = fused.cwiseProduct(graphs[m].matrix());
  }
  fused.prune(0.0);
  if (renormalize) {
    for (Index i = 0; i < fused.outerSize(); ++i) {
      double sum = 0.0;
      for (AnchorGraph::Storage::InnerIterator it(fused, i); it; ++it) sum += it.value();
      if (sum > 0.0)
        for (AnchorGraph::Storage::InnerIterator it(fused, i); it; ++it) it.valueRef() /= sum;
    }
  }
  return AnchorGraph(std::move(fused));
}

SpectralState initial_laplacian_embedding(const AnchorGraph& fused, Index clusters) {
  if (clusters < 1 || clusters > fused.anchors())
    throw InvalidArgument("cluster count " + std::to_string(clusters) + " must lie in [1, P=" +
                          std::to_string(fused.anchors()) + "]");
  const Eigen::VectorXd degrees = fused.column_sums();
  const Index usable = static_cast<Index>((degrees.array() > 0.0).count());
  if (usable < clusters)
    throw NumericError("only " + std::to_string(usable) + " anchors carry mass in the fused graph, "
                       "fewer than the " + std::to_string(clusters) +
                       " clusters requested; use more anchors or fewer clusters");
  SpectralState state = update_embedding(normalized_gram(fused, degrees), clusters);
  state.degrees = degrees;
  return state;
}

}  // namespace agsfh
