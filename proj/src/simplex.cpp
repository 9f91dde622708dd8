#include "bellsim/simplex.hpp"

#include "bellsim/errors.hpp"

#include <cmath>
#include <limits>

namespace bellsim {

namespace {

constexpr double kPivotEps = 1e-11;

class Tableau {
public:
  Tableau(const LinearProgram& lp)
      : m_(lp.rows), n_(lp.cols), width_(lp.cols + lp.rows + 1),
        t_(m_ * width_, 0.0), sign_(m_, 1.0), basis_(m_) {
    for (std::size_t i = 0; i < m_; ++i) {
      sign_[i] = lp.b[i] < 0.0 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < n_; ++j) at(i, j) = sign_[i] * lp.at(i, j);
      at(i, n_ + i) = 1.0;
      rhs(i) = sign_[i] * lp.b[i];
      basis_[i] = n_ + i;
    }
  }

  double& at(std::size_t i, std::size_t j) { return t_[i * width_ + j]; }
  double at(std::size_t i, std::size_t j) const { return t_[i * width_ + j]; }
  double& rhs(std::size_t i) { return t_[i * width_ + width_ - 1]; }
  double rhs(std::size_t i) const { return t_[i * width_ + width_ - 1]; }
  bool artificial(std::size_t j) const { return j >= n_; }

  // Reduced costs d_j = cost_j - sum_i cost_{basis_i} T_ij over every column.
  std::vector<double> reduced_costs(const std::vector<double>& cost) const {
    std::vector<double> d(cost);
    for (std::size_t i = 0; i < m_; ++i) {
      double cb = cost[basis_[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j + 1 < width_; ++j) d[j] -= cb * at(i, j);
    }
    return d;
  }

  void pivot(std::size_t row, std::size_t col) {
    double inv = 1.0 / at(row, col);
    for (std::size_t j = 0; j < width_; ++j) at(row, j) *= inv;
    at(row, col) = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == row) continue;
      double f = at(i, col);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < width_; ++j) at(i, j) -= f * at(row, j);
      at(i, col) = 0.0;
    }
    basis_[row] = col;
    ++pivots_;
  }

  enum class Outcome { Optimal, Unbounded };

  // Bland's rule: lowest-index improving non-artificial column enters; ties in
  // the ratio test go to the lowest basic variable index.
  Outcome run(const std::vector<double>& cost, std::size_t budget) {
    for (;;) {
      if (pivots_ > budget) throw VerificationError("simplex stalled: pivot budget exhausted");
      auto d = reduced_costs(cost);
      std::size_t enter = n_;
      for (std::size_t j = 0; j < n_; ++j)
        if (d[j] < -kPivotEps) {
          enter = j;
          break;
        }
      if (enter == n_) return Outcome::Optimal;
      std::size_t leave = m_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        double e = at(i, enter);
        if (e <= kPivotEps) continue;
        double ratio = std::max(0.0, rhs(i)) / e;
        if (ratio < best - 1e-15 ||
            (std::abs(ratio - best) <= 1e-15 && leave < m_ && basis_[i] < basis_[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave == m_) return Outcome::Unbounded;
      pivot(leave, enter);
    }
  }

  // Pivots zero-level artificials out wherever a structural column allows it.
  void expel_artificials() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (!artificial(basis_[i])) continue;
      for (std::size_t j = 0; j < n_; ++j)
        if (std::abs(at(i, j)) > 1e-9) {
          pivot(i, j);
          break;
        }
    }
  }

  std::vector<double> primal() const {
    std::vector<double> x(n_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      if (!artificial(basis_[i])) x[basis_[i]] = rhs(i);
    return x;
  }

  double artificial_sum() const {
    double s = 0.0;
    for (std::size_t i = 0; i < m_; ++i)
      if (artificial(basis_[i])) s += rhs(i);
    return s;
  }

  // y_i = cost_art_i - d_art_i, mapped back through the row sign flips.
  std::vector<double> dual(const std::vector<double>& d, double artificial_cost) const {
    std::vector<double> y(m_);
    for (std::size_t i = 0; i < m_; ++i) y[i] = sign_[i] * (artificial_cost - d[n_ + i]);
    return y;
  }

  std::size_t pivots() const { return pivots_; }
  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }

private:
  std::size_t m_, n_, width_;
  std::vector<double> t_;
  std::vector<double> sign_;
  std::vector<std::size_t> basis_;
  std::size_t pivots_ = 0;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, double tolerance) {
  if (lp.a.size() != lp.rows * lp.cols || lp.b.size() != lp.rows ||
      (!lp.c.empty() && lp.c.size() != lp.cols))
    throw InvalidArgument("linear program has inconsistent sizes");

  Tableau tab(lp);
  const std::size_t total = lp.cols + lp.rows;
  const std::size_t budget = 200 * (total + 10);
  LpSolution sol;

  std::vector<double> phase_one_cost(total, 0.0);
  for (std::size_t j = lp.cols; j < total; ++j) phase_one_cost[j] = 1.0;
  tab.run(phase_one_cost, budget);
  sol.infeasibility = tab.artificial_sum();
  if (sol.infeasibility > tolerance) {
    sol.status = LpStatus::Infeasible;
    sol.farkas = tab.dual(tab.reduced_costs(phase_one_cost), 1.0);
    sol.pivots = tab.pivots();
    return sol;
  }

  tab.expel_artificials();
  std::vector<double> cost(total, 0.0);
  for (std::size_t j = 0; j < lp.c.size(); ++j) cost[j] = lp.c[j];
  auto outcome = tab.run(cost, budget + tab.pivots());
  sol.pivots = tab.pivots();
  sol.x = tab.primal();
  if (outcome == Tableau::Outcome::Unbounded) {
    sol.status = LpStatus::Unbounded;
    return sol;
  }
  sol.status = LpStatus::Optimal;
  for (std::size_t j = 0; j < lp.c.size(); ++j) sol.objective += lp.c[j] * sol.x[j];
  sol.dual = tab.dual(tab.reduced_costs(cost), 0.0);
  return sol;
}

}  // namespace bellsim
