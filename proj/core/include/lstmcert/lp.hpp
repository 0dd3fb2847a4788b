#pragma once

#include <Eigen/Dense>
#include <vector>

namespace lstmcert {

enum class ConstraintSense { Le, Ge, Eq };

struct LpConstraint {
  Eigen::VectorXd row;
  double rhs = 0.0;
  ConstraintSense sense = ConstraintSense::Le;
};

// Dense minimization problem: min objective.v subject to the constraint rows
// and per-variable bounds (+-infinity allowed).
struct LpProblem {
  Eigen::VectorXd objective;
  std::vector<LpConstraint> constraints;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static LpProblem with_vars(int n);

  int num_vars() const { return static_cast<int>(objective.size()); }
  void add_le(const Eigen::VectorXd& row, double rhs);
  void add_ge(const Eigen::VectorXd& row, double rhs);
  void add_eq(const Eigen::VectorXd& row, double rhs);
  // Appends a variable, zero-padding existing rows. Returns its index.
  int add_variable(double lo, double hi, double cost);
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd values;
  double objective_value = 0.0;
};

// Linear expression over the problem's variables.
struct LinTerm {
  Eigen::VectorXd coeffs;
  double constant = 0.0;
};

// Two-phase dense tableau simplex with Bland's anti-cycling rule.
// Infeasible/unbounded are reported via status.
LpSolution solve(const LpProblem& problem);

// Adds one epigraph variable t_i per term, with t_i >= terms[i] and
// t_i >= -terms[i], and weights[i] * t_i added to the objective. At an optimum
// with weights[i] > 0, t_i equals |terms[i]|. Weights must be nonnegative.
void encode_abs_terms(LpProblem& problem, const std::vector<LinTerm>& terms,
                      const Eigen::VectorXd& weights);

// Largest constraint/bound violation of v, after scaling each row by its
// max-abs coefficient. Used to audit solutions reported optimal.
double max_violation(const LpProblem& problem, const Eigen::VectorXd& v);

}  // namespace lstmcert
