#pragma once

#include <span>

#include <Eigen/Dense>

#include "agsfh/graph.hpp"
#include "agsfh/spectral.hpp"

namespace agsfh {

/// k-NN anchor graph with adaptive weights.
///
/// For instance i with squared distances to the anchors sorted ascending,
/// b_1 <= ... <= b_{k+1} (ties broken by lower anchor index), the k nearest
/// anchors receive
///
///     w_j = (b_{k+1} - b_j) / (k b_{k+1} - sum_{j'<=k} b_{j'})
///
/// and every other anchor zero. When the denominator vanishes (the k+1
/// nearest distances coincide) the k nearest anchors share 1/k each. Rows
/// sum to one.
///
/// `features` is d x N, `anchors` is d x P; requires 1 <= k < P.
AnchorGraph build_anchor_graph(const Eigen::MatrixXd& features, const Eigen::MatrixXd& anchors,
                               Index k, int threads = 1);

/// Entrywise (Hadamard) product of same-shape graphs. With `renormalize`,
/// rows with positive mass are rescaled to sum to one.
AnchorGraph fuse_graphs(std::span<const AnchorGraph> graphs, bool renormalize = false);

/// Initial embedding from the fused graph: the `clusters` eigenvectors of
/// I - D^{-1/2} A^T A D^{-1/2}, D = diag(A^T 1), with the smallest eigenvalues.
/// Fails when fewer than `clusters` anchors carry any mass.
SpectralState initial_laplacian_embedding(const AnchorGraph& fused, Index clusters);

}  // namespace agsfh
