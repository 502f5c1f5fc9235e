#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace agsfh {

using Index = Eigen::Index;

/// Sparse nonnegative N x P instance-to-anchor affinity matrix.
///
/// Used for the per-modality graphs, their fusion, and the learned graph.
/// Row i holds the (anchor, weight) pairs of instance i; rows are stored
/// compressed so per-instance access is contiguous.
class AnchorGraph {
 public:
  using Storage = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  struct Entry {
    Index anchor;
    double weight;
  };

  AnchorGraph() = default;
  AnchorGraph(Index rows, Index anchors) : m_(rows, anchors) {}
  explicit AnchorGraph(Storage m);

  /// Builds from per-row entry lists; exact zeros are dropped.
  static AnchorGraph from_rows(Index anchors, const std::vector<std::vector<Entry>>& rows);
  /// Keeps entries strictly greater than `drop_at_or_below`.
  static AnchorGraph from_dense(const Eigen::MatrixXd& dense, double drop_at_or_below = 0.0);

  Index rows() const { return m_.rows(); }
  Index anchors() const { return m_.cols(); }
  Index nonzeros() const { return m_.nonZeros(); }
  Index row_nonzeros(Index i) const;

  const Storage& matrix() const { return m_; }
  Eigen::MatrixXd to_dense() const { return Eigen::MatrixXd(m_); }
  Eigen::VectorXd dense_row(Index i) const;
  std::vector<Entry> row(Index i) const;

  Eigen::VectorXd row_sums() const;
  Eigen::VectorXd column_sums() const;

  /// Text dump: one "i j w" line per stored entry, sorted by (i, j), weights
  /// printed with 17 significant digits.
  void write_text(std::ostream& out) const;
  static AnchorGraph read_text(std::istream& in, Index rows, Index anchors);

 private:
  Storage m_;
};

}  // namespace agsfh
