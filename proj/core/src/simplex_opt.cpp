#include "agsfh/simplex_opt.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "agsfh/error.hpp"

namespace agsfh {

Eigen::VectorXd project_simplex(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const Index n = v.size();
  if (n == 0) throw InvalidArgument("cannot project an empty vector onto the simplex");
  if (!v.allFinite()) throw NumericError("simplex projection of a non-finite vector");

  // Points already on the simplex (to rounding) are fixed points.
  const double slack = 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(n);
  if (v.minCoeff() >= 0.0 && std::abs(v.sum() - 1.0) <= slack) return v;

  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Index j = 0; j < n; ++j) {
    cumulative += u[static_cast<std::size_t>(j)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - candidate > 0.0) theta = candidate;
  }
  Eigen::VectorXd s = (v.array() - theta).cwiseMax(0.0).matrix();
  const double total = s.sum();
  if (total > 0.0) s /= total;
  return s;
}

double lipschitz(const Eigen::MatrixXd& q) {
  if (q.rows() != q.cols()) throw InvalidArgument("Lipschitz constant needs a square matrix");
  if (q.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(q, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericError("eigensolver failed computing Lipschitz constant");
  return 2.0 * solver.eigenvalues().maxCoeff();
}

QuadraticTerm QuadraticTerm::dense(Eigen::MatrixXd q) {
  if (q.rows() != q.cols()) throw InvalidArgument("quadratic term must be square");
  if (!q.allFinite()) throw NumericError("quadratic term has non-finite entries");
  QuadraticTerm out;
  out.dim_ = q.rows();
  out.lipschitz_ = agsfh::lipschitz(q);
  out.chol_.compute(q);
  out.dense_ = std::move(q);
  return out;
}

QuadraticTerm QuadraticTerm::low_rank(Eigen::MatrixXd factor, double ridge) {
  if (!(ridge > 0.0)) throw InvalidArgument("ridge must be positive for an invertible quadratic term");
  if (!factor.allFinite())
    throw NumericError("non-finite embedding factor; anchor degrees are likely degenerate");
  QuadraticTerm out;
  out.dim_ = factor.rows();
  out.structured_ = true;
  out.ridge_ = ridge;
  const Eigen::MatrixXd small = factor.transpose() * factor;  // C x C, same nonzero spectrum as U U^T
  double top = 0.0;
  if (small.size() > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(small, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericError("eigensolver failed on the embedding Gram");
    top = std::max(0.0, solver.eigenvalues().maxCoeff());
  }
  out.lipschitz_ = 2.0 * (top + ridge);
  Eigen::MatrixXd capacitance = small;
  capacitance.diagonal().array() += ridge;
  out.chol_.compute(capacitance);
  out.factor_ = std::move(factor);
  return out;
}

Eigen::VectorXd QuadraticTerm::apply(const Eigen::Ref<const Eigen::VectorXd>& s) const {
  if (structured_) return factor_ * (factor_.transpose() * s) + ridge_ * s;
  return dense_ * s;
}

Eigen::VectorXd QuadraticTerm::solve(const Eigen::Ref<const Eigen::VectorXd>& rhs) const {
  if (chol_.info() != Eigen::Success)
    throw InvalidArgument("quadratic term is not positive definite; the unconstrained start is undefined");
  if (structured_) {
    // (r I + U U^T)^{-1} b = (b - U (r I + U^T U)^{-1} U^T b) / r
    const Eigen::VectorXd inner = chol_.solve(factor_.transpose() * rhs);
    return (rhs - factor_ * inner) / ridge_;
  }
  return chol_.solve(rhs);
}

Eigen::MatrixXd QuadraticTerm::matrix() const {
  if (!structured_) return dense_;
  Eigen::MatrixXd q = factor_ * factor_.transpose();
  q.diagonal().array() += ridge_;
  return q;
}

ColumnQP::ColumnQP(const QuadraticTerm& quadratic, Eigen::VectorXd linear)
    : quadratic_(&quadratic), linear_(std::move(linear)) {
  if (linear_.size() != quadratic.dim())
    throw InvalidArgument("linear term has " + std::to_string(linear_.size()) +
                          " entries, quadratic term is " + std::to_string(quadratic.dim()) + "-dimensional");
}

double ColumnQP::objective(const Eigen::Ref<const Eigen::VectorXd>& s) const {
  return s.dot(quadratic_->apply(s)) - linear_.dot(s);
}

Eigen::VectorXd ColumnQP::gradient(const Eigen::Ref<const Eigen::VectorXd>& s) const {
  return 2.0 * quadratic_->apply(s) - linear_;
}

double next_momentum(double c, Momentum rule) {
  const double radicand = rule == Momentum::kPrinted ? 4.0 * c + 1.0 : 4.0 * c * c + 1.0;
  return 0.5 * (1.0 + std::sqrt(radicand));
}

Eigen::VectorXd warm_start(const ColumnQP& qp) { return qp.quadratic().solve(qp.linear()); }

OgmResult ogm_solve(const ColumnQP& qp, const std::optional<Eigen::VectorXd>& start,
                    const OgmOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidArgument("OGM tolerance must be positive");
  if (options.max_iter < 1) throw InvalidArgument("OGM needs at least one iteration");
  const double step = 1.0 / qp.lipschitz();
  if (!std::isfinite(step) || step <= 0.0) throw NumericError("invalid Lipschitz constant");

  Eigen::VectorXd previous = start ? *start : warm_start(qp);
  if (previous.size() != qp.dim()) throw InvalidArgument("warm start has the wrong dimension");
  Eigen::VectorXd search = previous;
  double c = 1.0;
  double previous_norm = previous.norm();

  OgmResult out;
  for (int t = 1; t <= options.max_iter; ++t) {
    const Eigen::VectorXd grad = qp.gradient(search);
    if (!grad.allFinite())
      throw NumericError("non-finite gradient in the simplex QP (degenerate anchor degrees?)");
    Eigen::VectorXd current = project_simplex(search - step * grad);
    const double c_next = next_momentum(c, options.momentum);
    search = current + ((c - 1.0) / c_next) * (current - previous);
    c = c_next;

    const double norm = current.norm();
    const double change = std::abs(norm - previous_norm);
    const bool done = previous_norm > 0.0 ? change < options.tol * previous_norm : change < options.tol;
    out.iterations = t;
    previous = std::move(current);
    previous_norm = norm;
    if (done) {
      out.converged = true;
      break;
    }
  }
  out.solution = std::move(previous);
  return out;
}

}  // namespace agsfh
