#pragma once

#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace agsfh {

using Index = Eigen::Index;

/// Euclidean projection onto the probability simplex {s >= 0, 1^T s = 1}.
///
/// Sort-based: with u sorted descending, rho is the largest index with
/// u_rho + (1 - sum_{i<=rho} u_i) / rho > 0, the shift is
/// eta = (1 - sum_{i<=rho} u_i) / rho, and the result is max(v + eta, 0).
/// The result is rescaled by its sum to keep 1^T s = 1 to rounding.
Eigen::VectorXd project_simplex(const Eigen::Ref<const Eigen::VectorXd>& v);

/// 2 * largest eigenvalue of a symmetric positive semidefinite matrix.
double lipschitz(const Eigen::MatrixXd& q);

/// The quadratic part Q of f(s) = s^T Q s - c^T s, shared by every column
/// solve of one outer iteration.
///
/// Either a dense SPD matrix, or the structured form Q = U U^T + r I used by
/// training (U = D^{-1/2} V is P x C with C << P), where products cost O(PC)
/// and solves go through the Woodbury identity.
class QuadraticTerm {
 public:
  static QuadraticTerm dense(Eigen::MatrixXd q);
  static QuadraticTerm low_rank(Eigen::MatrixXd factor, double ridge);

  Index dim() const { return dim_; }
  double lipschitz() const { return lipschitz_; }

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& s) const;
  /// Q^{-1} rhs.
  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& rhs) const;
  Eigen::MatrixXd matrix() const;

 private:
  QuadraticTerm() = default;

  Index dim_ = 0;
  double lipschitz_ = 0.0;
  bool structured_ = false;
  Eigen::MatrixXd dense_;   // dense Q
  Eigen::MatrixXd factor_;  // U
  double ridge_ = 0.0;      // r
  Eigen::LLT<Eigen::MatrixXd> chol_;  // of Q, or of r I + U^T U
};

/// One column subproblem: min f(s) = s^T Q s - c^T s over the simplex.
class ColumnQP {
 public:
  ColumnQP(const QuadraticTerm& quadratic, Eigen::VectorXd linear);

  const QuadraticTerm& quadratic() const { return *quadratic_; }
  const Eigen::VectorXd& linear() const { return linear_; }
  Index dim() const { return linear_.size(); }
  double lipschitz() const { return quadratic_->lipschitz(); }

  double objective(const Eigen::Ref<const Eigen::VectorXd>& s) const;
  /// 2 Q s - c.
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& s) const;

 private:
  const QuadraticTerm* quadratic_;
  Eigen::VectorXd linear_;
};

enum class Momentum {
  kPrinted,  ///< c' = (1 + sqrt(4c + 1)) / 2
  kClassic,  ///< c' = (1 + sqrt(4c^2 + 1)) / 2
};

double next_momentum(double c, Momentum rule);

struct OgmOptions {
  double tol = 1e-4;  ///< stop when | ||s_t|| - ||s_{t-1}|| | < tol * ||s_{t-1}||
  int max_iter = 200;
  Momentum momentum = Momentum::kPrinted;
};

struct OgmResult {
  Eigen::VectorXd solution;
  int iterations = 0;
  bool converged = false;
};

/// Unconstrained minimiser Q^{-1} c (not projected).
Eigen::VectorXd warm_start(const ColumnQP& qp);

/// Accelerated projected gradient on the simplex:
///
///     s_t     = proj(z_{t-1} - grad f(z_{t-1}) / Lp)
///     c_{t+1} = momentum(c_t),  c_1 = 1
///     z_t     = s_t + (c_t - 1) / c_{t+1} (s_t - s_{t-1})
///
/// starting from s_0 = z_0 = `start` (or warm_start(qp) when absent).
/// Returns the first iterate meeting the stop rule, else the last one.
OgmResult ogm_solve(const ColumnQP& qp, const std::optional<Eigen::VectorXd>& start,
                    const OgmOptions& options = {});

}  // namespace agsfh
