#pragma once

#include <Eigen/Dense>

#include "agsfh/graph.hpp"

namespace agsfh {

/// Anchor degrees, embedding, and the spectrum that produced it.
struct SpectralState {
  Eigen::VectorXd degrees;      // diagonal of diag(S^T 1), length P
  Eigen::MatrixXd embedding;    // P x C, orthonormal columns
  Eigen::VectorXd eigenvalues;  // C smallest eigenvalues of I - E, ascending
};

inline constexpr double kDegreeFloor = 1e-10;
inline constexpr double kZeroEigenvalue = 1e-6;
inline constexpr double kEdgeThreshold = 1e-8;

/// Column sums of the graph: total mass assigned to each anchor.
Eigen::VectorXd update_lambda(const AnchorGraph& graph);

/// Per-anchor scale 1 / sqrt(max(degree, floor)).
Eigen::VectorXd inverse_sqrt_degrees(const Eigen::VectorXd& degrees, double floor = kDegreeFloor);

/// E = D^{-1/2} S^T S D^{-1/2} with D = diag(degrees), floored at `floor`.
/// Anchors that receive no mass give zero rows and columns.
Eigen::MatrixXd normalized_gram(const AnchorGraph& graph, const Eigen::VectorXd& degrees,
                                double floor = kDegreeFloor);

/// Eigenvectors of the `clusters` largest eigenvalues of E (the smallest of
/// I - E). Columns follow a fixed sign convention: each column's entry of
/// largest magnitude is positive, the first such entry on ties.
/// The returned state's `degrees` is left empty.
SpectralState update_embedding(const Eigen::MatrixXd& gram, Index clusters);

/// All eigenvalues of I - E, ascending.
Eigen::VectorXd laplacian_spectrum(const Eigen::MatrixXd& gram);

/// Number of eigenvalues of I - E strictly below `threshold`.
Index count_zero_eigenvalues(const Eigen::MatrixXd& gram, double threshold = kZeroEigenvalue);

/// Tr(V^T (I - E) V).
double laplacian_trace(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& embedding);

void canonicalize_signs(Eigen::MatrixXd& vectors);

/// Connected components of the bipartite instance-anchor graph restricted to
/// edges heavier than the threshold.
struct ComponentCount {
  Index groups = 0;              // components holding at least one edge
  Index isolated_instances = 0;  // instances with no surviving edge
  Index isolated_anchors = 0;    // anchors with no surviving edge
};

ComponentCount count_components(const AnchorGraph& graph, double threshold = kEdgeThreshold);

}  // namespace agsfh
