#include "lstmcert/lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lstmcert {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kFeasTol = 1e-8;

double inf() { return std::numeric_limits<double>::infinity(); }

struct Tableau {
  Eigen::MatrixXd a;       // m x n, kept in B^{-1}A form
  Eigen::VectorXd b;       // m, nonnegative throughout
  Eigen::VectorXd cost;    // n, reduced costs
  std::vector<int> basis;  // column basic in each row
  int art_start = 0;       // first artificial column; columns >= art_start never re-enter
};

void pivot(Tableau& t, int row, int col) {
  const int m = static_cast<int>(t.b.size());
  const double piv = t.a(row, col);
  t.a.row(row) /= piv;
  t.b(row) /= piv;
  for (int i = 0; i < m; ++i) {
    if (i == row) continue;
    const double factor = t.a(i, col);
    if (factor != 0.0) {
      t.a.row(i) -= factor * t.a.row(row);
      t.b(i) -= factor * t.b(row);
      if (t.b(i) < 0.0 && t.b(i) > -1e-12) t.b(i) = 0.0;
    }
  }
  const double cfac = t.cost(col);
  if (cfac != 0.0) t.cost -= cfac * t.a.row(row).transpose();
  t.basis[row] = col;
}

// Runs simplex iterations until optimal (true) or unbounded (false).
// Entering: lowest-index column with negative reduced cost (Bland).
// Leaving: among minimum-ratio rows, the one whose basic variable has the
// lowest index (Bland), with a small tie window for float ratios.
bool run_simplex(Tableau& t) {
  const int m = static_cast<int>(t.b.size());
  const int n = static_cast<int>(t.cost.size());
  const long max_iters = 200000;
  for (long iter = 0; iter < max_iters; ++iter) {
    int enter = -1;
    for (int j = 0; j < t.art_start; ++j) {
      if (t.cost(j) < -kCostTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return true;

    double best = inf();
    for (int i = 0; i < m; ++i) {
      const double aij = t.a(i, enter);
      if (aij > kPivotTol) {
        const double ratio = t.b(i) / aij;
        if (ratio < best) best = ratio;
      }
    }
    if (!std::isfinite(best)) return false;

    int leave = -1;
    const double window = best + 1e-12 * (1.0 + std::abs(best));
    for (int i = 0; i < m; ++i) {
      const double aij = t.a(i, enter);
      if (aij > kPivotTol && t.b(i) / aij <= window) {
        if (leave < 0 || t.basis[i] < t.basis[leave]) leave = i;
      }
    }
    pivot(t, leave, enter);
  }
  throw std::runtime_error("lp: simplex iteration limit exceeded");
}

// Variable substitution to the nonnegative orthant.
struct VarMap {
  int kind;     // 0: off + x[col], 1: off - x[col], 2: x[col] - x[col2]
  int col;
  int col2;
  double off;
};

}  // namespace

LpProblem LpProblem::with_vars(int n) {
  LpProblem p;
  p.objective = Eigen::VectorXd::Zero(n);
  p.lower = Eigen::VectorXd::Constant(n, -inf());
  p.upper = Eigen::VectorXd::Constant(n, inf());
  return p;
}

void LpProblem::add_le(const Eigen::VectorXd& row, double rhs) {
  constraints.push_back({row, rhs, ConstraintSense::Le});
}
void LpProblem::add_ge(const Eigen::VectorXd& row, double rhs) {
  constraints.push_back({row, rhs, ConstraintSense::Ge});
}
void LpProblem::add_eq(const Eigen::VectorXd& row, double rhs) {
  constraints.push_back({row, rhs, ConstraintSense::Eq});
}

int LpProblem::add_variable(double lo, double hi, double cost) {
  const int idx = num_vars();
  objective.conservativeResize(idx + 1);
  objective(idx) = cost;
  lower.conservativeResize(idx + 1);
  lower(idx) = lo;
  upper.conservativeResize(idx + 1);
  upper(idx) = hi;
  for (auto& c : constraints) {
    c.row.conservativeResize(idx + 1);
    c.row(idx) = 0.0;
  }
  return idx;
}

void encode_abs_terms(LpProblem& problem, const std::vector<LinTerm>& terms,
                      const Eigen::VectorXd& weights) {
  if (static_cast<int>(terms.size()) != weights.size())
    throw std::invalid_argument("encode_abs_terms: weights size mismatch");
  for (int i = 0; i < weights.size(); ++i) {
    if (weights(i) < 0.0)
      throw std::invalid_argument("encode_abs_terms: negative weight");
  }
  const int base_vars = problem.num_vars();
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].coeffs.size() != base_vars)
      throw std::invalid_argument("encode_abs_terms: term arity mismatch");
  }
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const int t = problem.add_variable(0.0, inf(), weights(static_cast<int>(i)));
    Eigen::VectorXd row = Eigen::VectorXd::Zero(problem.num_vars());
    row.head(base_vars) = terms[i].coeffs;
    row(t) = -1.0;
    problem.add_le(row, -terms[i].constant);  // expr - t <= 0
    row.head(base_vars) = -terms[i].coeffs;
    problem.add_le(row, terms[i].constant);  // -expr - t <= 0
  }
}

double max_violation(const LpProblem& problem, const Eigen::VectorXd& v) {
  double worst = 0.0;
  for (const auto& c : problem.constraints) {
    const double scale = std::max(c.row.cwiseAbs().maxCoeff(), 1e-300);
    const double lhs = c.row.dot(v);
    double viol = 0.0;
    switch (c.sense) {
      case ConstraintSense::Le: viol = lhs - c.rhs; break;
      case ConstraintSense::Ge: viol = c.rhs - lhs; break;
      case ConstraintSense::Eq: viol = std::abs(lhs - c.rhs); break;
    }
    worst = std::max(worst, viol / scale);
  }
  for (int j = 0; j < problem.num_vars(); ++j) {
    if (std::isfinite(problem.lower(j))) worst = std::max(worst, problem.lower(j) - v(j));
    if (std::isfinite(problem.upper(j))) worst = std::max(worst, v(j) - problem.upper(j));
  }
  return worst;
}

LpSolution solve(const LpProblem& problem) {
  const int nv = problem.num_vars();
  if (problem.lower.size() != nv || problem.upper.size() != nv)
    throw std::invalid_argument("lp: bounds size mismatch");
  for (const auto& c : problem.constraints) {
    if (c.row.size() != nv) throw std::invalid_argument("lp: row size mismatch");
    if (!std::isfinite(c.rhs)) throw std::invalid_argument("lp: nonfinite rhs");
  }

  // Substitute every variable into the nonnegative orthant.
  std::vector<VarMap> vmap(nv);
  int ncols = 0;
  std::vector<std::pair<int, double>> shifted_uppers;  // (column, upper bound)
  for (int j = 0; j < nv; ++j) {
    const double lo = problem.lower(j), hi = problem.upper(j);
    if (std::isfinite(lo)) {
      vmap[j] = {0, ncols, -1, lo};
      if (std::isfinite(hi)) shifted_uppers.push_back({ncols, hi - lo});
      ++ncols;
    } else if (std::isfinite(hi)) {
      vmap[j] = {1, ncols, -1, hi};
      ++ncols;
    } else {
      vmap[j] = {2, ncols, ncols + 1, 0.0};
      ncols += 2;
    }
  }

  // Substituted rows, scaled by their max-abs coefficient in the original
  // variable space (so the feasibility tolerance is scale-free).
  struct Row {
    Eigen::VectorXd a;
    double b;
    ConstraintSense s;
  };
  std::vector<Row> rows;
  rows.reserve(problem.constraints.size() + shifted_uppers.size());
  for (const auto& c : problem.constraints) {
    const double scale = c.row.cwiseAbs().maxCoeff();
    const double inv = scale > 0.0 ? 1.0 / scale : 1.0;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(ncols);
    double b = c.rhs * inv;
    for (int j = 0; j < nv; ++j) {
      const double w = c.row(j) * inv;
      if (w == 0.0) continue;
      const VarMap& m = vmap[j];
      switch (m.kind) {
        case 0:
          a(m.col) += w;
          b -= w * m.off;
          break;
        case 1:
          a(m.col) -= w;
          b -= w * m.off;
          break;
        case 2:
          a(m.col) += w;
          a(m.col2) -= w;
          break;
      }
    }
    rows.push_back({std::move(a), b, c.sense});
  }
  for (const auto& [col, ub] : shifted_uppers) {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(ncols);
    a(col) = 1.0;
    rows.push_back({std::move(a), ub, ConstraintSense::Le});
  }

  const int m = static_cast<int>(rows.size());
  // Normalize rhs signs, then assign slack/artificial columns.
  int num_slack = 0, num_art = 0;
  for (auto& r : rows) {
    if (r.b < 0.0) {
      r.a = -r.a;
      r.b = -r.b;
      if (r.s == ConstraintSense::Le)
        r.s = ConstraintSense::Ge;
      else if (r.s == ConstraintSense::Ge)
        r.s = ConstraintSense::Le;
    }
    if (r.s == ConstraintSense::Le)
      ++num_slack;
    else if (r.s == ConstraintSense::Ge)
      ++num_slack, ++num_art;
    else
      ++num_art;
  }

  const int slack_start = ncols;
  const int art_start = ncols + num_slack;
  const int total = art_start + num_art;

  Tableau t;
  t.a = Eigen::MatrixXd::Zero(m, total);
  t.b = Eigen::VectorXd::Zero(m);
  t.cost = Eigen::VectorXd::Zero(total);
  t.basis.assign(m, -1);
  t.art_start = art_start;

  int s = slack_start, ar = art_start;
  for (int i = 0; i < m; ++i) {
    t.a.row(i).head(ncols) = rows[i].a;
    t.b(i) = rows[i].b;
    switch (rows[i].s) {
      case ConstraintSense::Le:
        t.a(i, s) = 1.0;
        t.basis[i] = s++;
        break;
      case ConstraintSense::Ge:
        t.a(i, s) = -1.0;
        ++s;
        t.a(i, ar) = 1.0;
        t.basis[i] = ar++;
        break;
      case ConstraintSense::Eq:
        t.a(i, ar) = 1.0;
        t.basis[i] = ar++;
        break;
    }
  }

  // Phase 1: minimize the artificial sum. Reduced costs are priced out
  // against the initial basis (slacks cost 0, artificials cost 1).
  if (num_art > 0) {
    for (int i = 0; i < m; ++i) {
      if (t.basis[i] >= art_start) t.cost -= t.a.row(i).transpose();
    }
    for (int j = art_start; j < total; ++j) t.cost(j) = 0.0;
    run_simplex(t);  // phase 1 is always bounded below by 0

    double art_sum = 0.0;
    for (int i = 0; i < m; ++i) {
      if (t.basis[i] >= art_start) art_sum += t.b(i);
    }
    if (art_sum > kFeasTol) return {LpStatus::Infeasible, Eigen::VectorXd::Zero(nv), 0.0};

    // Drive remaining zero-level artificials out of the basis. Rows with no
    // eligible pivot are redundant and stay inert.
    for (int i = 0; i < m; ++i) {
      if (t.basis[i] < art_start) continue;
      int col = -1;
      for (int j = 0; j < art_start; ++j) {
        if (std::abs(t.a(i, j)) > kPivotTol) {
          col = j;
          break;
        }
      }
      if (col >= 0) pivot(t, i, col);
    }
  }

  // Phase 2: substituted objective, priced out against the current basis.
  Eigen::VectorXd c2 = Eigen::VectorXd::Zero(total);
  for (int j = 0; j < nv; ++j) {
    const double w = problem.objective(j);
    if (w == 0.0) continue;
    const VarMap& vm = vmap[j];
    switch (vm.kind) {
      case 0: c2(vm.col) += w; break;
      case 1: c2(vm.col) -= w; break;
      case 2:
        c2(vm.col) += w;
        c2(vm.col2) -= w;
        break;
    }
  }
  t.cost = c2;
  for (int i = 0; i < m; ++i) {
    const double cb = c2(t.basis[i]);
    if (cb != 0.0) t.cost -= cb * t.a.row(i).transpose();
  }
  if (!run_simplex(t)) return {LpStatus::Unbounded, Eigen::VectorXd::Zero(nv), 0.0};

  Eigen::VectorXd x = Eigen::VectorXd::Zero(total);
  for (int i = 0; i < m; ++i) x(t.basis[i]) = t.b(i);

  Eigen::VectorXd v(nv);
  for (int j = 0; j < nv; ++j) {
    const VarMap& vm = vmap[j];
    switch (vm.kind) {
      case 0: v(j) = vm.off + x(vm.col); break;
      case 1: v(j) = vm.off - x(vm.col); break;
      default: v(j) = x(vm.col) - x(vm.col2); break;
    }
  }
  return {LpStatus::Optimal, v, problem.objective.dot(v)};
}

}  // namespace lstmcert
