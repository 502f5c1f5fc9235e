#pragma once

// Slow, independent reference implementations used by the unit and
// acceptance tests. None of these call into the library code they check.

#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "agsfh/codes.hpp"

namespace agsfh::oracle {

/// Euclidean projection onto the simplex by enumerating every support set
/// and keeping the KKT point closest to v. Exponential in v.size().
Eigen::VectorXd projection_by_enumeration(const Eigen::VectorXd& v);

struct QpSolution {
  Eigen::VectorXd s;
  double value = 0.0;
  long supports_tried = 0;
};

/// min s^T Q s - c^T s over the simplex for positive definite Q, by
/// searching support sets for the one whose equality-constrained minimiser
/// satisfies all KKT conditions. Supports are visited largest and smallest
/// first, alternating towards the middle.
QpSolution simplex_qp_by_active_sets(const Eigen::MatrixXd& q, const Eigen::VectorXd& c);

/// Central differences of f at x with step h.
Eigen::VectorXd finite_difference_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                           const Eigen::VectorXd& x, double h);

struct Components {
  long groups = 0;
  long isolated_instances = 0;
  long isolated_anchors = 0;
};

/// Components of the instance graph S S^T by breadth-first search over
/// instances; anchors are only used to find neighbours.
Components components_by_bfs(const Eigen::MatrixXd& s, double threshold);

SignMatrix random_signs(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& gen);

/// Hamming distance via (K - a.b) / 2.
int hamming_by_dot(const SignMatrix& a, Eigen::Index i, const SignMatrix& b, Eigen::Index j);

/// Anchor graph row weights computed directly from sorted distances.
Eigen::MatrixXd anchor_graph_dense(const Eigen::MatrixXd& x, const Eigen::MatrixXd& anchors, int k);

/// Objective terms recomputed with dense matrices and an explicit Laplacian.
struct DenseObjective {
  double laplacian, approximation, regularizer, code_graph, regression;
  double total() const { return laplacian + approximation + regularizer + code_graph + regression; }
};
DenseObjective objective_dense(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a, const Eigen::VectorXd& degrees,
                               double degree_floor, const Eigen::MatrixXd& v, const Eigen::MatrixXd& b,
                               const Eigen::MatrixXd& bs, const std::vector<Eigen::MatrixXd>& w,
                               const std::vector<Eigen::MatrixXd>& x, double gamma1, double gamma2, double gamma3,
                               double lambda);

/// Average precision straight from the definition over a 0/1 ranking.
double average_precision_by_definition(const std::vector<int>& relevant_at_rank, long total_relevant, long depth);

}  // namespace agsfh::oracle
