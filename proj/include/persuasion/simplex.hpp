#pragma once

// Dense two-phase simplex over exact rationals with Bland's anti-cycling rule,
// plus enumeration of every vertex of the optimal face.

#include <cstddef>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "persuasion/rational.hpp"

namespace persuasion {

enum class Sense { LessEq, GreaterEq, Equal };

struct Constraint {
  Vec coeffs;
  Sense sense = Sense::LessEq;
  Rational rhs = 0;
};

// maximize objective . x  subject to rows, x >= 0
struct LinearProgram {
  std::size_t num_vars = 0;
  Vec objective;
  std::vector<Constraint> rows;

  explicit LinearProgram(std::size_t n = 0) : num_vars(n), objective(n, Rational(0)) {}

  void add(Vec coeffs, Sense sense, Rational rhs) {
    if (coeffs.size() != num_vars) throw std::invalid_argument("constraint width mismatch");
    rows.push_back(Constraint{std::move(coeffs), sense, std::move(rhs)});
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Rational value = 0;
  Vec x;
  std::size_t pivots = 0;
};

struct VertexEnumeration {
  std::vector<Vec> vertices;  // distinct, sorted lexicographically
  bool complete = true;       // false when the basis budget ran out
  Rational value = 0;
  LpStatus status = LpStatus::Infeasible;
};

namespace detail {

class Tableau {
 public:
  // rows_[r] has width cols_ + 1; the last entry is the right-hand side.
  std::vector<Vec> rows_;
  Vec cost_;  // reduced-cost row for the current objective (maximization), last entry = -value
  std::vector<std::size_t> basis_;
  std::size_t cols_ = 0;
  std::size_t structural_ = 0;  // original variables come first
  std::vector<bool> artificial_;
  std::size_t pivots_ = 0;

  static Tableau from(const LinearProgram& lp) {
    Tableau t;
    t.structural_ = lp.num_vars;
    std::size_t m = lp.rows.size();
    std::size_t slack = 0, art = 0;
    for (const auto& c : lp.rows) {
      bool flip = c.rhs < 0;
      Sense s = c.sense;
      if (flip && s == Sense::LessEq) s = Sense::GreaterEq;
      else if (flip && s == Sense::GreaterEq) s = Sense::LessEq;
      if (s != Sense::Equal) ++slack;
      if (s != Sense::LessEq) ++art;
    }
    t.cols_ = lp.num_vars + slack + art;
    t.artificial_.assign(t.cols_, false);
    t.rows_.assign(m, Vec(t.cols_ + 1, Rational(0)));
    t.basis_.assign(m, 0);
    std::size_t next_slack = lp.num_vars, next_art = lp.num_vars + slack;
    for (std::size_t r = 0; r < m; ++r) {
      const auto& c = lp.rows[r];
      bool flip = c.rhs < 0;
      Sense s = c.sense;
      if (flip && s == Sense::LessEq) s = Sense::GreaterEq;
      else if (flip && s == Sense::GreaterEq) s = Sense::LessEq;
      for (std::size_t j = 0; j < lp.num_vars; ++j) t.rows_[r][j] = flip ? Rational(-c.coeffs[j]) : c.coeffs[j];
      t.rows_[r][t.cols_] = flip ? Rational(-c.rhs) : c.rhs;
      if (s == Sense::LessEq) {
        t.rows_[r][next_slack] = 1;
        t.basis_[r] = next_slack++;
      } else {
        if (s == Sense::GreaterEq) t.rows_[r][next_slack++] = -1;
        t.rows_[r][next_art] = 1;
        t.artificial_[next_art] = true;
        t.basis_[r] = next_art++;
      }
    }
    return t;
  }

  void set_objective(const Vec& c) {
    cost_.assign(cols_ + 1, Rational(0));
    for (std::size_t j = 0; j < c.size(); ++j) cost_[j] = c[j];
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const Rational& cb = c.size() > basis_[r] ? c[basis_[r]] : Rational(0);
      if (cb == 0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) cost_[j] -= cb * rows_[r][j];
    }
  }

  void pivot(std::size_t r, std::size_t j) {
    ++pivots_;
    Rational p = rows_[r][j];
    for (auto& x : rows_[r]) x /= p;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (i == r || rows_[i][j] == 0) continue;
      Rational f = rows_[i][j];
      for (std::size_t k = 0; k <= cols_; ++k)
        if (rows_[r][k] != 0) rows_[i][k] -= f * rows_[r][k];
    }
    if (!cost_.empty() && cost_[j] != 0) {
      Rational f = cost_[j];
      for (std::size_t k = 0; k <= cols_; ++k)
        if (rows_[r][k] != 0) cost_[k] -= f * rows_[r][k];
    }
    basis_[r] = j;
  }

  // Runs Bland's rule to optimality. Columns flagged in `blocked` never enter.
  LpStatus optimize(const std::vector<bool>& blocked) {
    for (;;) {
      std::size_t enter = cols_;
      for (std::size_t j = 0; j < cols_; ++j)
        if (!blocked[j] && cost_[j] > 0) { enter = j; break; }
      if (enter == cols_) return LpStatus::Optimal;
      std::size_t leave = rows_.size();
      Rational best;
      for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (rows_[r][enter] <= 0) continue;
        Rational ratio = rows_[r][cols_] / rows_[r][enter];
        if (leave == rows_.size() || ratio < best || (ratio == best && basis_[r] < basis_[leave])) {
          leave = r;
          best = ratio;
        }
      }
      if (leave == rows_.size()) return LpStatus::Unbounded;
      pivot(leave, enter);
    }
  }

  // Phase one. Returns false when infeasible. Afterwards artificial columns are
  // out of the basis and redundant rows are dropped.
  bool phase_one() {
    Vec c(cols_, Rational(0));
    bool any = false;
    for (std::size_t j = 0; j < cols_; ++j)
      if (artificial_[j]) { c[j] = -1; any = true; }
    if (!any) return true;
    set_objective(c);
    std::vector<bool> blocked(cols_, false);
    optimize(blocked);
    if (cost_[cols_] != 0) return false;  // -value stored; nonzero means sum of artificials > 0
    for (std::size_t r = 0; r < rows_.size();) {
      if (!artificial_[basis_[r]]) { ++r; continue; }
      std::size_t j = 0;
      while (j < cols_ && (artificial_[j] || rows_[r][j] == 0)) ++j;
      if (j < cols_) {
        pivot(r, j);
        ++r;
      } else {
        rows_.erase(rows_.begin() + static_cast<std::ptrdiff_t>(r));
        basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
      }
    }
    return true;
  }

  std::vector<bool> artificial_block() const { return artificial_; }

  Vec structural_solution() const {
    Vec x(structural_, Rational(0));
    for (std::size_t r = 0; r < rows_.size(); ++r)
      if (basis_[r] < structural_) x[basis_[r]] = rows_[r][cols_];
    return x;
  }
};

}  // namespace detail

inline LpResult solve_lp(const LinearProgram& lp) {
  LpResult out;
  auto t = detail::Tableau::from(lp);
  if (!t.phase_one()) {
    out.status = LpStatus::Infeasible;
    out.pivots = t.pivots_;
    return out;
  }
  t.set_objective(lp.objective);
  out.status = t.optimize(t.artificial_block());
  out.pivots = t.pivots_;
  if (out.status != LpStatus::Optimal) return out;
  out.x = t.structural_solution();
  out.value = dot(lp.objective, out.x);
  return out;
}

// Every vertex of {x feasible : objective . x = optimum}, found by walking the
// graph of feasible bases of the optimal face (all entering columns, all tied
// leaving rows). `budget` caps the number of bases visited.
inline VertexEnumeration optimal_vertices(const LinearProgram& lp, std::size_t budget = 20000) {
  VertexEnumeration out;
  LpResult best = solve_lp(lp);
  out.status = best.status;
  if (best.status != LpStatus::Optimal) {
    out.complete = best.status == LpStatus::Infeasible;
    return out;
  }
  out.value = best.value;
  LinearProgram face = lp;
  face.add(lp.objective, Sense::Equal, best.value);
  auto start = detail::Tableau::from(face);
  if (!start.phase_one()) throw std::logic_error("optimal face unexpectedly infeasible");
  std::vector<bool> blocked = start.artificial_block();

  std::set<std::vector<std::size_t>> seen;
  std::set<Vec> vertices;
  std::deque<detail::Tableau> queue;
  auto key = [](const detail::Tableau& t) {
    auto b = t.basis_;
    std::sort(b.begin(), b.end());
    return b;
  };
  seen.insert(key(start));
  queue.push_back(std::move(start));
  while (!queue.empty()) {
    detail::Tableau cur = std::move(queue.front());
    queue.pop_front();
    vertices.insert(cur.structural_solution());
    std::set<std::size_t> basic(cur.basis_.begin(), cur.basis_.end());
    for (std::size_t j = 0; j < cur.cols_; ++j) {
      if (blocked[j] || basic.count(j)) continue;
      std::vector<std::size_t> leaving;
      Rational bestr;
      for (std::size_t r = 0; r < cur.rows_.size(); ++r) {
        if (cur.rows_[r][j] <= 0) continue;
        Rational ratio = cur.rows_[r][cur.cols_] / cur.rows_[r][j];
        if (leaving.empty() || ratio < bestr) {
          leaving.assign(1, r);
          bestr = ratio;
        } else if (ratio == bestr) {
          leaving.push_back(r);
        }
      }
      for (std::size_t r : leaving) {
        detail::Tableau next = cur;
        next.cost_.clear();
        next.pivot(r, j);
        auto k = key(next);
        if (seen.count(k)) continue;
        if (seen.size() >= budget) {
          out.complete = false;
          continue;
        }
        seen.insert(std::move(k));
        queue.push_back(std::move(next));
      }
    }
  }
  out.vertices.assign(vertices.begin(), vertices.end());
  return out;
}

}  // namespace persuasion
