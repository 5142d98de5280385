#pragma once

// Independent oracles and random instance generators shared by the test binaries.

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "persuasion/pipeline.hpp"
#include "persuasion/scenarios.hpp"

namespace testing_support {

using namespace persuasion;

inline Rational random_fraction(std::mt19937_64& rng, long lo, long hi, long den) {
  std::uniform_int_distribution<long> d(lo * den, hi * den);
  return frac(d(rng), den);
}

// Two-state environment where the receiver's values are random lines; the sender ranks actions at random.
inline PayoffEnvironment random_binary_env(std::mt19937_64& rng, std::size_t actions) {
  PayoffEnvironment env;
  env.states = {"s0", "s1"};
  for (std::size_t a = 0; a < actions; ++a) env.actions.push_back("a" + std::to_string(a));
  env.receiver_u.assign(2, Vec(actions));
  for (std::size_t a = 0; a < actions; ++a) {
    env.receiver_u[0][a] = random_fraction(rng, -5, 5, 7);
    env.receiver_u[1][a] = random_fraction(rng, -5, 5, 7);
    env.sender_u.push_back(random_fraction(rng, -4, 4, 5));
  }
  env.prior = Belief::binary(random_fraction(rng, 0, 1, 97));
  if (env.prior.probs()[1] == 0 || env.prior.probs()[1] == 1) env.prior = Belief::binary(frac(1, 2));
  return env;
}

// Sender-preferred indirect utility at P(second state) = x, by direct enumeration.
inline Rational ubar_direct(const PayoffEnvironment& env, const Rational& x) {
  Rational best_r, best_s;
  bool first = true;
  for (std::size_t a = 0; a < env.num_actions(); ++a) {
    Rational r = (1 - x) * env.receiver_u[0][a] + x * env.receiver_u[1][a];
    if (first || r > best_r || (r == best_r && env.sender_u[a] > best_s)) {
      best_r = r;
      best_s = env.sender_u[a];
      first = false;
    }
  }
  return best_s;
}

// Best value over all splits of the prior into at most two grid points: max over lo <= x0 <= hi.
inline Rational grid_concavification(const PayoffEnvironment& env, long grid) {
  Rational x0 = env.prior.probs()[1];
  std::vector<Rational> xs, vals;
  for (long i = 0; i <= grid; ++i) {
    xs.push_back(frac(i, grid));
    vals.push_back(ubar_direct(env, xs.back()));
  }
  Rational best = ubar_direct(env, x0);
  for (long i = 0; i <= grid; ++i) {
    if (xs[i] > x0) break;
    for (long j = grid; j >= 0 && xs[j] >= x0; --j) {
      if (xs[i] == xs[j]) continue;
      Rational w = (x0 - xs[i]) / (xs[j] - xs[i]);
      Rational v = (1 - w) * vals[i] + w * vals[j];
      if (v > best) best = v;
    }
  }
  return best;
}

// Upper concave envelope of grid points evaluated at x: the best two-point split with atoms on the grid.
inline Rational hull_value(const std::vector<Rational>& xs, const std::vector<Rational>& ys, const Rational& x) {
  std::vector<std::size_t> hull;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    while (hull.size() >= 2) {
      std::size_t a = hull[hull.size() - 2], b = hull.back();
      // Drop b when it lies on or below the chord from a to i.
      if ((ys[b] - ys[a]) * (xs[i] - xs[a]) <= (ys[i] - ys[a]) * (xs[b] - xs[a])) hull.pop_back();
      else break;
    }
    hull.push_back(i);
  }
  for (std::size_t k = 0; k + 1 < hull.size(); ++k) {
    std::size_t a = hull[k], b = hull[k + 1];
    if (xs[a] <= x && x <= xs[b]) return ys[a] + (ys[b] - ys[a]) * (x - xs[a]) / (xs[b] - xs[a]);
  }
  return ys[hull.back()];
}


// Best split with both atoms on the grid, or no split at all.
inline Rational grid_oracle(const PayoffEnvironment& env, long grid) {
  std::vector<Rational> xs, ys;
  for (long i = 0; i <= grid; ++i) {
    xs.push_back(frac(i, grid));
    ys.push_back(ubar_direct(env, xs.back()));
  }
  return std::max(hull_value(xs, ys, env.prior[1]), ubar_direct(env, env.prior[1]));
}

inline Rational max_abs_sender(const PayoffEnvironment& env) {
  Rational m = 0;
  for (const auto& u : env.sender_u) m = std::max(m, Rational(abs(u)));
  return m;
}

// Random valid input for the threshold recursion: sorted payoffs with u1 > u* > uk and u* at least the
// full-revelation value.
struct RecursionInstance {
  Vec probs, u;
  Rational u_star;
};

inline RecursionInstance random_recursion_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kd(2, 6);
  std::size_t k = static_cast<std::size_t>(kd(rng));
  RecursionInstance r;
  Vec w;
  std::uniform_int_distribution<long> wd(1, 20);
  for (std::size_t i = 0; i < k; ++i) w.push_back(Rational(wd(rng)));
  Rational tot = sum(w);
  for (auto& x : w) r.probs.push_back(x / tot);
  std::uniform_int_distribution<long> ud(0, 40);
  for (std::size_t i = 0; i < k; ++i) r.u.push_back(frac(ud(rng), 4));
  std::sort(r.u.begin(), r.u.end(), std::greater<>());
  if (r.u.front() == r.u.back()) r.u.front() += 1;
  // Interim beliefs of an optimal experiment are never improved by revealing everything, so u* >= sum(pi u).
  Rational reveal_all = dot(r.probs, r.u);
  std::uniform_int_distribution<long> sd(0, 99);
  Rational t = frac(sd(rng), 100);
  r.u_star = reveal_all + t * (r.u.front() - reveal_all);
  if (r.u_star <= r.u.back()) r.u_star = (r.u.back() + r.u.front()) / 2;
  return r;
}

// Sender payoff of an interior silent reply, solved from the defining identity by hand.
inline Rational indifference_level(const Vec& probs, const Vec& u, const Rational& u_star, std::size_t tau, const Rational& beta) {
  Rational shown_mass = 0, shown_value = 0;
  for (std::size_t j = 0; j < tau; ++j) {
    shown_mass += probs[j];
    shown_value += probs[j] * u[j];
  }
  shown_mass += beta * probs[tau];
  shown_value += beta * probs[tau] * u[tau];
  return (u_star - shown_value) / (1 - shown_mass);
}

struct RandomSubgame {
  PayoffEnvironment env;
  Belief interim;
  TypeDistribution types;
  std::uint64_t n = 2;
};

// Subgames as the construction meets them: a perturbed atom of an optimal experiment whose reply payoff sits
// strictly between the best and worst state payoffs, with a pivotal type holding at least 1 - eps.
inline std::vector<RandomSubgame> random_subgames(std::mt19937_64& rng) {
  std::vector<RandomSubgame> out;
  std::uniform_int_distribution<int> sd(2, 3), ad(2, 4);
  PayoffEnvironment env;
  std::size_t S = static_cast<std::size_t>(sd(rng)), A = static_cast<std::size_t>(ad(rng));
  // Receiver switches from action a-1 to a at random thresholds; a middle state, when present, sits at a
  // random score between the two extreme states.  Sender payoffs increase with the action.
  std::set<Rational> cuts;
  while (cuts.size() + 1 < A) cuts.insert(random_fraction(rng, 0, 1, 24));
  cuts.erase(Rational(0));
  cuts.erase(Rational(1));
  if (cuts.size() + 1 < A) return out;
  Vec low(A, Rational(0)), high(A, Rational(0)), sender(A);
  std::size_t a = 1;
  for (const auto& c : cuts) {
    Rational step = random_fraction(rng, 1, 3, 4);
    low[a] = low[a - 1] - c * step;
    high[a] = high[a - 1] + (1 - c) * step;
    ++a;
  }
  for (auto& x : sender) x = random_fraction(rng, 0, 6, 2);
  std::sort(sender.begin(), sender.end());
  for (std::size_t i = 1; i < A; ++i)
    if (sender[i] == sender[i - 1]) return out;
  Vec score{0, 1};
  if (S == 3) score.insert(score.begin() + 1, random_fraction(rng, 0, 1, 12));
  for (std::size_t s = 0; s < S; ++s) env.states.push_back("s" + std::to_string(s));
  env.receiver_u.assign(S, Vec(A));
  for (std::size_t i = 0; i < A; ++i) {
    env.actions.push_back("a" + std::to_string(i));
    env.sender_u.push_back(sender[i]);
    for (std::size_t s = 0; s < S; ++s) env.receiver_u[s][i] = (1 - score[s]) * low[i] + score[s] * high[i];
  }
  std::uniform_int_distribution<long> wd(1, 9);
  Vec w(S);
  for (auto& x : w) x = Rational(wd(rng));
  env.prior = Belief::from_weights(w);
  if (!check_assumption1(env).holds) return out;
  auto sol = commitment_solve(env);
  std::uniform_int_distribution<long> ed(8, 40);
  Rational eps = frac(1, ed(rng));
  auto pr = perturb_experiment(env, sol, eps);
  for (const auto& src : pr.sources) {
    auto sorted = sort_interim(env, src.strict);
    Rational u_star = indirect_utility_max(env, src.strict);
    if (!(sorted.payoffs.front() > u_star && u_star > sorted.payoffs.back())) continue;
    RandomSubgame g;
    g.env = env;
    g.interim = src.strict;
    std::uniform_int_distribution<int> nd(1, 3);
    g.n = static_cast<std::uint64_t>(nd(rng));
    Vec m(g.n);
    for (auto& x : m) x = Rational(wd(rng));
    Rational tot = sum(m);
    for (std::uint64_t t = 0; t < g.n; ++t) g.types.finite[t] = eps / 2 * m[t] / tot;
    g.types.finite[g.n] = 1 - eps / 2;
    out.push_back(std::move(g));
  }
  return out;
}

inline std::string scenario_path(const std::string& name) { return std::string(SCENARIO_DIR) + "/" + name + ".json"; }

}  // namespace testing_support
