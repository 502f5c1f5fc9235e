#include "agsfh/graph.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <string>

#include "agsfh/error.hpp"

namespace agsfh {

AnchorGraph::AnchorGraph(Storage m) : m_(std::move(m)) { m_.makeCompressed(); }

AnchorGraph AnchorGraph::from_rows(Index anchors, const std::vector<std::vector<Entry>>& rows) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (const auto& e : rows[i]) {
      if (e.anchor < 0 || e.anchor >= anchors)
        throw InvalidArgument("anchor index " + std::to_string(e.anchor) + " out of range");
      if (e.weight != 0.0) triplets.emplace_back(static_cast<Index>(i), e.anchor, e.weight);
    }
  Storage m(static_cast<Index>(rows.size()), anchors);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return AnchorGraph(std::move(m));
}

AnchorGraph AnchorGraph::from_dense(const Eigen::MatrixXd& dense, double drop_at_or_below) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (Index i = 0; i < dense.rows(); ++i)
    for (Index j = 0; j < dense.cols(); ++j)
      if (dense(i, j) > drop_at_or_below || dense(i, j) < 0.0) triplets.emplace_back(i, j, dense(i, j));
  Storage m(dense.rows(), dense.cols());
  m.setFromTriplets(triplets.begin(), triplets.end());
  return AnchorGraph(std::move(m));
}

Index AnchorGraph::row_nonzeros(Index i) const {
  return m_.outerIndexPtr()[i + 1] - m_.outerIndexPtr()[i];
}

Eigen::VectorXd AnchorGraph::dense_row(Index i) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(anchors());
  for (Storage::InnerIterator it(m_, i); it; ++it) out(it.col()) = it.value();
  return out;
}

std::vector<AnchorGraph::Entry> AnchorGraph::row(Index i) const {
  std::vector<Entry> out;
  for (Storage::InnerIterator it(m_, i); it; ++it) out.push_back({it.col(), it.value()});
  return out;
}

Eigen::VectorXd AnchorGraph::row_sums() const {
  Eigen::VectorXd out(rows());
  for (Index i = 0; i < rows(); ++i) {
    double s = 0.0;
    for (Storage::InnerIterator it(m_, i); it; ++it) s += it.value();
    out(i) = s;
  }
  return out;
}

Eigen::VectorXd AnchorGraph::column_sums() const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(anchors());
  for (Index i = 0; i < rows(); ++i)
    for (Storage::InnerIterator it(m_, i); it; ++it) out(it.col()) += it.value();
  return out;
}

void AnchorGraph::write_text(std::ostream& out) const {
  const auto old = out.precision(17);
  for (Index i = 0; i < rows(); ++i)
    for (Storage::InnerIterator it(m_, i); it; ++it)
      out << i << ' ' << it.col() << ' ' << it.value() << '\n';
  out.precision(old);
}

AnchorGraph AnchorGraph::read_text(std::istream& in, Index rows, Index anchors) {
  std::vector<Eigen::Triplet<double>> triplets;
  Index i = 0;
  Index j = 0;
  double w = 0.0;
  while (in >> i >> j >> w) {
    if (i < 0 || i >= rows || j < 0 || j >= anchors)
      throw IoError("graph entry (" + std::to_string(i) + ", " + std::to_string(j) + ") out of range");
    triplets.emplace_back(i, j, w);
  }
  if (!in.eof()) throw IoError("malformed graph dump");
  Storage m(rows, anchors);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return AnchorGraph(std::move(m));
}

}  // namespace agsfh
