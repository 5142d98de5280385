#pragma once

// Commitment value by linear programming, optimal-experiment uniqueness,
// credibility of beliefs, and the strict-incentive perturbation of the optimum.

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "persuasion/core_model.hpp"

namespace persuasion {

enum class Uniqueness { Unique, NonUnique, Unknown };

inline std::string to_string(Uniqueness u) {
  switch (u) {
    case Uniqueness::Unique: return "unique";
    case Uniqueness::NonUnique: return "non-unique";
    default: return "unknown";
  }
}

struct CommitmentSolution {
  Rational value = 0;
  PosteriorDistribution experiment;  // canonical order
  std::vector<Index> actions;        // sender-preferred reply at each atom
  Uniqueness uniqueness = Uniqueness::Unknown;
};

namespace detail {

// Variables x[a][s] laid out as a * |S| + s.
inline LinearProgram persuasion_lp(const PayoffEnvironment& env, const Vec& prior) {
  std::size_t S = env.num_states(), A = env.num_actions();
  LinearProgram lp(S * A);
  for (Index a = 0; a < A; ++a)
    for (Index s = 0; s < S; ++s) lp.objective[a * S + s] = env.sender_u[a];
  for (Index s = 0; s < S; ++s) {
    Vec row(S * A, Rational(0));
    for (Index a = 0; a < A; ++a) row[a * S + s] = 1;
    lp.add(row, Sense::Equal, prior[s]);
  }
  for (Index a = 0; a < A; ++a)
    for (Index b = 0; b < A; ++b) {
      if (a == b) continue;
      Vec row(S * A, Rational(0));
      for (Index s = 0; s < S; ++s) row[a * S + s] = env.receiver_u[s][a] - env.receiver_u[s][b];
      lp.add(row, Sense::GreaterEq, 0);
    }
  return lp;
}

inline PosteriorDistribution lifted_to_posteriors(const PayoffEnvironment& env, const Vec& x) {
  std::size_t S = env.num_states();
  PosteriorDistribution d;
  for (Index a = 0; a < env.num_actions(); ++a) {
    Vec w(x.begin() + static_cast<std::ptrdiff_t>(a * S), x.begin() + static_cast<std::ptrdiff_t>((a + 1) * S));
    Rational m = sum(w);
    if (m > 0) d.atoms.push_back({Belief::from_weights(w), m});
  }
  return d.canonical();
}

// Fewest atoms of `dist` that still average to `mean` with the same value;
// among equal sizes the lexicographically first index set wins.
inline PosteriorDistribution caratheodory_reduce(const PayoffEnvironment& env, const PosteriorDistribution& dist,
                                                 const Vec& mean, const Rational& value) {
  std::size_t n = dist.atoms.size(), S = env.num_states();
  for (std::size_t k = 1; k <= std::min(n, S); ++k) {
    std::vector<bool> pick(n, false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), true);
    do {
      std::vector<Index> idx;
      for (Index i = 0; i < n; ++i)
        if (pick[i]) idx.push_back(i);
      LinearProgram lp(k);
      for (Index s = 0; s < S; ++s) {
        Vec row(k);
        for (std::size_t j = 0; j < k; ++j) row[j] = dist.atoms[idx[j]].belief[s];
        lp.add(row, Sense::Equal, mean[s]);
      }
      Vec vrow(k);
      for (std::size_t j = 0; j < k; ++j) vrow[j] = indirect_utility_max(env, dist.atoms[idx[j]].belief);
      lp.add(vrow, Sense::Equal, value);
      auto res = solve_lp(lp);
      if (res.status == LpStatus::Optimal) {
        PosteriorDistribution out;
        for (std::size_t j = 0; j < k; ++j)
          if (res.x[j] > 0) out.atoms.push_back({dist.atoms[idx[j]].belief, res.x[j]});
        return out.canonical();
      }
    } while (std::prev_permutation(pick.begin(), pick.end()));
  }
  return dist;
}

}  // namespace detail

// Value of the concave closure of the sender's indirect utility at `belief`.
inline Rational concave_closure(const PayoffEnvironment& env, const Belief& belief) {
  auto res = solve_lp(detail::persuasion_lp(env, belief.probs()));
  if (res.status != LpStatus::Optimal) throw InternalInvariantFailure("persuasion LP not solvable at " + belief.str());
  return res.value;
}

inline CommitmentSolution commitment_solve(const PayoffEnvironment& env) {
  env.validate();
  require_assumption1(env);
  auto res = solve_lp(detail::persuasion_lp(env, env.prior.probs()));
  if (res.status != LpStatus::Optimal) throw InternalInvariantFailure("persuasion LP not solvable");
  CommitmentSolution sol;
  sol.value = res.value;
  auto merged = detail::lifted_to_posteriors(env, res.x);
  sol.experiment = detail::caratheodory_reduce(env, merged, env.prior.probs(), res.value);
  Rational check = 0;
  for (const auto& atom : sol.experiment.atoms) {
    Index a = sender_preferred_reply(env, atom.belief);
    sol.actions.push_back(a);
    check += atom.weight * env.sender_u[a];
  }
  if (check != sol.value) throw InternalInvariantFailure("recovered experiment value " + check.get_str() + " differs from LP value " + sol.value.get_str());
  if (sol.experiment.mean() != env.prior.probs()) throw InternalInvariantFailure("recovered experiment is not Bayes plausible");
  return sol;
}

inline Uniqueness check_unique_optimal(const PayoffEnvironment& env, const CommitmentSolution& sol,
                                       std::size_t budget = 20000) {
  auto en = optimal_vertices(detail::persuasion_lp(env, env.prior.probs()), budget);
  for (const auto& v : en.vertices) {
    auto d = detail::caratheodory_reduce(env, detail::lifted_to_posteriors(env, v), env.prior.probs(), en.value);
    if (!(d == sol.experiment)) return Uniqueness::NonUnique;
  }
  return en.complete ? Uniqueness::Unique : Uniqueness::Unknown;
}

// ---------------------------------------------------------------------------
// Credibility

struct CredibilityVerdict {
  bool credible = true;
  std::optional<Index> witness;
  Rational ubar = 0;
};

inline CredibilityVerdict classify_credibility(const PayoffEnvironment& env, const Belief& belief) {
  CredibilityVerdict v;
  v.ubar = indirect_utility_max(env, belief);
  for (Index s : belief.support()) {
    Rational u = state_payoff(env, s);
    if (u > v.ubar && (!v.witness || u > state_payoff(env, *v.witness))) v.witness = s;
  }
  v.credible = !v.witness.has_value();
  return v;
}

struct FrontierPoint {
  Rational x;  // probability of the second state
  CredibilityVerdict verdict;
  bool boundary = false;  // credibility flips here
};

// Receiver indifference points strictly inside (0,1) for a two-state environment.
inline std::vector<Rational> indifference_points(const PayoffEnvironment& env) {
  std::set<Rational> pts;
  for (Index a = 0; a < env.num_actions(); ++a)
    for (Index b = a + 1; b < env.num_actions(); ++b) {
      Rational d0 = env.receiver_u[0][a] - env.receiver_u[0][b];
      Rational d1 = env.receiver_u[1][a] - env.receiver_u[1][b];
      if (d0 == d1) continue;
      Rational x = d0 / (d0 - d1);
      if (x > 0 && x < 1) pts.insert(x);
    }
  return {pts.begin(), pts.end()};
}

inline std::vector<FrontierPoint> credibility_frontier(const PayoffEnvironment& env, std::size_t grid_n) {
  if (env.num_states() != 2) throw UnsupportedDimension("credibility frontier needs exactly two states");
  if (grid_n == 0) throw PreconditionViolation("grid size must be positive");
  auto verdict = [&](const Rational& x) { return classify_credibility(env, Belief::binary(x)); };
  std::vector<Rational> breaks{Rational(0)};
  for (auto& x : indifference_points(env)) breaks.push_back(x);
  breaks.push_back(Rational(1));
  std::set<Rational> flips;
  for (std::size_t i = 0; i < breaks.size(); ++i) {
    bool here = verdict(breaks[i]).credible;
    bool flip = false;
    if (i > 0) flip |= verdict((breaks[i - 1] + breaks[i]) / 2).credible != here;
    if (i + 1 < breaks.size()) flip |= verdict((breaks[i] + breaks[i + 1]) / 2).credible != here;
    if (flip) flips.insert(breaks[i]);
  }
  std::set<Rational> xs(flips);
  for (std::size_t j = 0; j <= grid_n; ++j) xs.insert(frac(static_cast<long>(j), static_cast<long>(grid_n)));
  std::vector<FrontierPoint> out;
  for (const auto& x : xs) out.push_back({x, verdict(x), flips.count(x) > 0});
  return out;
}

// ---------------------------------------------------------------------------
// Strict-incentive perturbation of the optimal experiment

struct PerturbedSource {
  Belief source;    // atom of the optimal experiment
  Belief strict;    // nearby belief where `action` is the unique best reply
  Belief residual;  // belief that restores the source on average
  Index action = 0;
  Rational weight;  // weight of the source atom
};

struct PerturbationResult {
  PosteriorDistribution experiment;
  std::vector<PerturbedSource> sources;
  Rational ell, delta, eta;

  // Index of the source whose strict belief equals `b`, if any.
  std::optional<std::size_t> strict_source(const Belief& b) const {
    for (std::size_t j = 0; j < sources.size(); ++j)
      if (sources[j].strict == b) return j;
    return std::nullopt;
  }
};

inline bool strictly_optimal(const PayoffEnvironment& env, const Belief& b, Index action) {
  auto br = best_responses(env, b);
  return br.size() == 1 && br.front() == action;
}

inline PerturbationResult perturb_experiment(const PayoffEnvironment& env, const CommitmentSolution& sol,
                                             const Rational& eps) {
  if (!(eps > 0 && eps < 1)) throw PreconditionViolation("perturbation size must lie in (0,1)");
  PerturbationResult out;
  out.ell = 1;
  for (const auto& atom : sol.experiment.atoms)
    for (Index s : atom.belief.support()) out.ell = std::min(out.ell, atom.belief[s]);
  out.delta = eps * out.ell / 2;
  out.eta = std::min(eps, Rational(1, 2));
  std::map<Belief, Rational> mix;
  for (std::size_t j = 0; j < sol.experiment.atoms.size(); ++j) {
    const auto& atom = sol.experiment.atoms[j];
    Index a = sol.actions[j];
    PerturbedSource src{atom.belief, atom.belief, atom.belief, a, atom.weight};
    if (!strictly_optimal(env, atom.belief, a)) {
      auto best = max_margin_belief(env, a, atom.belief.support());
      if (!best || best->margin <= 0)
        throw InfeasiblePerturbation("no belief near " + atom.belief.str() + " makes " + env.actions[a] + " strictly optimal");
      Rational gap = linf_distance(best->belief.probs(), atom.belief.probs());
      Rational step = std::min(Rational(1), Rational(out.delta / gap));
      Vec moved(atom.belief.size());
      for (Index s = 0; s < moved.size(); ++s) moved[s] = atom.belief[s] + step * (best->belief[s] - atom.belief[s]);
      src.strict = Belief(moved);
      Vec rest(atom.belief.size());
      for (Index s = 0; s < rest.size(); ++s) rest[s] = (atom.belief[s] - (1 - out.eta) * moved[s]) / out.eta;
      src.residual = Belief(rest);
      if (!strictly_optimal(env, src.strict, a)) throw InternalInvariantFailure("perturbed belief lost strictness");
      mix[src.strict] += atom.weight * (1 - out.eta);
      mix[src.residual] += atom.weight * out.eta;
    } else {
      mix[src.strict] += atom.weight;
    }
    out.sources.push_back(std::move(src));
  }
  for (auto& [b, w] : mix) out.experiment.atoms.push_back({b, w});
  if (out.experiment.mean() != env.prior.probs()) throw InternalInvariantFailure("perturbed experiment is not Bayes plausible");
  return out;
}

}  // namespace persuasion
